#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "epikin/errors.hpp"
#include "epikin/format.hpp"
#include "epikin/markers.hpp"

namespace epikin {

enum class EpistemicLabel { CERT, INCERT, UNDETERMINED };

inline const char* to_string(EpistemicLabel l) {
    switch (l) {
        case EpistemicLabel::CERT: return "CERT";
        case EpistemicLabel::INCERT: return "INCERT";
        case EpistemicLabel::UNDETERMINED: return "UNDETERMINED";
    }
    return "?";
}

inline EpistemicLabel parse_epistemic_label(std::string_view s) {
    if (s == "CERT") return EpistemicLabel::CERT;
    if (s == "INCERT") return EpistemicLabel::INCERT;
    if (s == "UNDETERMINED") return EpistemicLabel::UNDETERMINED;
    throw ParseError("unknown epistemic label: " + std::string(s));
}

enum class SegmentSource { MANUAL, PREDICTED };

struct Evidence {
    MarkerEvent event;
    std::string rule;
};

struct EpistemicSegment {
    double start_s = 0;
    double end_s = 0;
    EpistemicLabel label = EpistemicLabel::UNDETERMINED;
    SegmentSource source = SegmentSource::PREDICTED;
    std::vector<Evidence> evidence;
    int cert_score = 0;
    int incert_score = 0;
};

// Rule names attached to evidence entries.
inline constexpr const char* kRuleNodNeutralRepeat = "NOD_NEUTRAL_REPEAT";
inline constexpr const char* kRuleSpeedHigh = "SPEED_HIGH";
inline constexpr const char* kRuleHoldNonNeutral = "HOLD_NON_NEUTRAL";
inline constexpr const char* kRuleSpeedLow = "SPEED_LOW";

/// Certainty/uncertainty scoring of one segment from its markers. Repeated
/// neutral-crossing nod bursts and a HIGH speed band each add one certainty
/// point; non-neutral holds and a LOW band each add one uncertainty point.
/// An event belongs to the segment when its midpoint lies inside.
inline EpistemicSegment score_segment(double start_s, double end_s,
                                      const std::vector<MarkerEvent>& events,
                                      const DetectorConfig& cfg) {
    (void)cfg;
    EpistemicSegment seg;
    seg.start_s = start_s;
    seg.end_s = end_s;
    seg.source = SegmentSource::PREDICTED;

    bool has_nod_rule = false, has_high = false, has_hold_rule = false, has_low = false;
    for (const auto& e : events) {
        const double mid = (e.start_s + e.end_s) / 2.0;
        if (!(mid >= start_s && mid < end_s)) continue;
        switch (e.kind) {
            case MarkerKind::NOD_BURST:
                if (e.cycles >= 2 && e.crosses_neutral) {
                    has_nod_rule = true;
                    seg.evidence.push_back({e, kRuleNodNeutralRepeat});
                }
                break;
            case MarkerKind::HOLD:
                if (e.non_neutral) {
                    has_hold_rule = true;
                    seg.evidence.push_back({e, kRuleHoldNonNeutral});
                }
                break;
            case MarkerKind::SPEED_BAND:
                if (e.band == SpeedBandClass::HIGH) {
                    has_high = true;
                    seg.evidence.push_back({e, kRuleSpeedHigh});
                } else if (e.band == SpeedBandClass::LOW) {
                    has_low = true;
                    seg.evidence.push_back({e, kRuleSpeedLow});
                }
                break;
        }
    }
    seg.cert_score = (has_nod_rule ? 1 : 0) + (has_high ? 1 : 0);
    seg.incert_score = (has_hold_rule ? 1 : 0) + (has_low ? 1 : 0);
    if (seg.cert_score > seg.incert_score)
        seg.label = EpistemicLabel::CERT;
    else if (seg.incert_score > seg.cert_score)
        seg.label = EpistemicLabel::INCERT;
    else
        seg.label = EpistemicLabel::UNDETERMINED;
    return seg;
}

/// One manually labeled segment plus the markers detected inside it, for
/// corpus-level counting.
struct LabeledSegment {
    std::string language; // free-form tag, e.g. "FR" or "LSF"
    EpistemicLabel label = EpistemicLabel::UNDETERMINED;
    std::vector<MarkerEvent> events;
};

/// Marker-family counts per (language, label) cell, reported as fractions of
/// segments ("15/20").
struct CorpusSummary {
    struct Cell {
        int segments = 0;
        int with_nod = 0;
        int with_neutral_nod = 0;
        int with_strong_nod = 0; // max peak-to-peak >= 0.625 p
        int with_hold = 0;
        int with_non_neutral_hold = 0;
        int with_high_band = 0;
        int with_low_band = 0;
    };

    // Keyed by (language, label name); std::map keeps output order stable.
    std::map<std::pair<std::string, std::string>, Cell> cells;

    static std::string fraction(int num, int den) {
        return std::to_string(num) + "/" + std::to_string(den);
    }

    std::string to_text() const {
        static const char* cols[] = {"nod",  "nod_neutral", "nod_strong", "hold",
                                     "hold_non_neutral", "speed_high",  "speed_low"};
        std::vector<std::vector<std::string>> rows;
        rows.push_back({"language", "label", cols[0], cols[1], cols[2], cols[3], cols[4], cols[5],
                        cols[6]});
        for (const auto& [key, c] : cells) {
            rows.push_back({key.first, key.second, fraction(c.with_nod, c.segments),
                            fraction(c.with_neutral_nod, c.segments),
                            fraction(c.with_strong_nod, c.segments),
                            fraction(c.with_hold, c.segments),
                            fraction(c.with_non_neutral_hold, c.segments),
                            fraction(c.with_high_band, c.segments),
                            fraction(c.with_low_band, c.segments)});
        }
        std::vector<size_t> width(rows[0].size(), 0);
        for (const auto& r : rows)
            for (size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
        std::string out;
        for (const auto& r : rows) {
            for (size_t i = 0; i < r.size(); ++i) {
                out += r[i];
                if (i + 1 < r.size()) out += std::string(width[i] - r[i].size() + 2, ' ');
            }
            out += '\n';
        }
        return out;
    }

    std::string to_csv() const {
        std::string out =
            "language,label,nod,nod_neutral,nod_strong,hold,hold_non_neutral,speed_high,speed_low\n";
        for (const auto& [key, c] : cells) {
            out += key.first + "," + key.second + "," + fraction(c.with_nod, c.segments) + "," +
                   fraction(c.with_neutral_nod, c.segments) + "," +
                   fraction(c.with_strong_nod, c.segments) + "," + fraction(c.with_hold, c.segments) +
                   "," + fraction(c.with_non_neutral_hold, c.segments) + "," +
                   fraction(c.with_high_band, c.segments) + "," +
                   fraction(c.with_low_band, c.segments) + "\n";
        }
        return out;
    }
};

inline constexpr double kStrongNodPeakToPeak = 0.625;

/// Corpus-level counting in the reporting style of the study: per language
/// and manual label, how many segments exhibit each marker family.
inline CorpusSummary summarize_corpus(const std::vector<LabeledSegment>& segments) {
    CorpusSummary out;
    for (const auto& seg : segments) {
        auto& cell = out.cells[{seg.language, to_string(seg.label)}];
        ++cell.segments;
        bool nod = false, nod_neutral = false, nod_strong = false;
        bool hold = false, hold_nn = false, high = false, low = false;
        for (const auto& e : seg.events) {
            switch (e.kind) {
                case MarkerKind::NOD_BURST:
                    nod = true;
                    if (e.crosses_neutral) nod_neutral = true;
                    if (e.max_peak_to_peak_p >= kStrongNodPeakToPeak) nod_strong = true;
                    break;
                case MarkerKind::HOLD:
                    hold = true;
                    if (e.non_neutral) hold_nn = true;
                    break;
                case MarkerKind::SPEED_BAND:
                    if (e.band == SpeedBandClass::HIGH) high = true;
                    if (e.band == SpeedBandClass::LOW) low = true;
                    break;
            }
        }
        cell.with_nod += nod;
        cell.with_neutral_nod += nod_neutral;
        cell.with_strong_nod += nod_strong;
        cell.with_hold += hold;
        cell.with_non_neutral_hold += hold_nn;
        cell.with_high_band += high;
        cell.with_low_band += low;
    }
    return out;
}

} // namespace epikin
