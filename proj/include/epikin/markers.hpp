#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "epikin/calibration.hpp"
#include "epikin/errors.hpp"
#include "epikin/format.hpp"
#include "epikin/kinematics.hpp"

namespace epikin {

/// Detection thresholds. Defaults encode the reported numbers: holds last
/// more than two seconds at near-zero speed; speed bands split at 40 and
/// 20 degrees/second.
struct DetectorConfig {
    double hold_min_s = 2.0;
    double hold_v_max = 5.0;           // deg/s counted as "not moving"
    double nod_min_peak_to_peak = 0.0625; // normalized p units
    double speed_high = 40.0;          // deg/s
    double speed_low = 20.0;           // deg/s
    double speed_percentile = 0.90;
    double micro_osc_max_p2p = 0.125;  // normalized p units

    void validate() const {
        if (!(speed_low > 0 && speed_low < speed_high))
            throw ArgumentError("need 0 < speed_low < speed_high");
        if (!(hold_min_s > 0)) throw ArgumentError("hold_min_s must be positive");
        if (!(hold_v_max > 0)) throw ArgumentError("hold_v_max must be positive");
        if (!(nod_min_peak_to_peak > 0)) throw ArgumentError("nod_min_peak_to_peak must be positive");
        if (!(micro_osc_max_p2p > 0)) throw ArgumentError("micro_osc_max_p2p must be positive");
        if (!(speed_percentile > 0 && speed_percentile <= 1))
            throw ArgumentError("speed_percentile must be in (0, 1]");
    }
};

enum class MarkerKind { HOLD, NOD_BURST, SPEED_BAND };

enum class SpeedBandClass { HIGH, MID, LOW };

inline const char* to_string(MarkerKind k) {
    switch (k) {
        case MarkerKind::HOLD: return "HOLD";
        case MarkerKind::NOD_BURST: return "NOD";
        case MarkerKind::SPEED_BAND: return "SPEED";
    }
    return "?";
}

inline const char* to_string(SpeedBandClass b) {
    switch (b) {
        case SpeedBandClass::HIGH: return "HIGH";
        case SpeedBandClass::MID: return "MID";
        case SpeedBandClass::LOW: return "LOW";
    }
    return "?";
}

/// One detected epistemic movement marker. Which attribute block applies
/// depends on kind; the others keep their defaults.
struct MarkerEvent {
    MarkerKind kind = MarkerKind::HOLD;
    double start_s = 0;
    double end_s = 0;

    // NOD_BURST
    int cycles = 0;
    bool crosses_neutral = false;
    double max_peak_to_peak_p = 0;
    double peak_speed_deg_s = 0;

    // HOLD
    double duration_s = 0;
    Notch median_notch = Notch::NEUTRAL;
    bool non_neutral = false;
    bool micro_oscillation = false;

    // SPEED_BAND
    SpeedBandClass band = SpeedBandClass::MID;
    double stat_deg_s = 0;
};

namespace detail {

// Half-cycles longer than this cannot chain into a burst, and still stretches
// of at least this duration split the series into movement segments.
constexpr double kBurstGapS = 0.5;
constexpr int kNodVelocitySmoothWindow = 5;

inline void check_aligned(const NormalizedSeries& norm, const VelocitySeries& vel) {
    if (norm.samples.size() != vel.samples.size())
        throw MismatchError("normalized and velocity series differ in length");
    for (size_t i = 0; i < norm.samples.size(); ++i)
        if (std::abs(norm.samples[i].t_s - vel.samples[i].t_s) > 1e-9)
            throw MismatchError("normalized and velocity series timestamps differ");
}

inline std::vector<double> smooth_values(const std::vector<double>& v, int window) {
    const long n = static_cast<long>(v.size());
    std::vector<double> out(v.size());
    const int h = window / 2;
    for (long i = 0; i < n; ++i) {
        const long lo = std::max(0L, i - h);
        const long hi = std::min(n - 1, i + h);
        double sum = 0;
        for (long j = lo; j <= hi; ++j) sum += v[j];
        out[i] = sum / static_cast<double>(hi - lo + 1);
    }
    return out;
}

inline double peak_to_peak(const NormalizedSeries& norm, size_t lo, size_t hi) {
    double mn = norm.samples[lo].p, mx = norm.samples[lo].p;
    for (size_t i = lo; i <= hi; ++i) {
        mn = std::min(mn, norm.samples[i].p);
        mx = std::max(mx, norm.samples[i].p);
    }
    return mx - mn;
}

} // namespace detail

/// Sustained postures: maximal stretches of |v| below hold_v_max, bridged
/// across small position wobbles (peak-to-peak p under micro_osc_max_p2p),
/// kept when they last at least hold_min_s.
inline std::vector<MarkerEvent> detect_holds(const NormalizedSeries& norm,
                                             const VelocitySeries& vel,
                                             const DetectorConfig& cfg) {
    cfg.validate();
    detail::check_aligned(norm, vel);
    std::vector<MarkerEvent> out;
    const size_t n = norm.samples.size();
    if (n == 0) return out;
    const double dt = 1.0 / norm.fps;

    struct Run {
        size_t lo, hi; // inclusive sample range
        bool micro = false;
    };
    std::vector<Run> runs;
    for (size_t i = 0; i < n; ++i) {
        if (std::abs(vel.samples[i].v_deg_s) < cfg.hold_v_max) {
            if (!runs.empty() && runs.back().hi + 1 == i)
                runs.back().hi = i;
            else
                runs.push_back({i, i, false});
        }
    }

    // Bridge gaps whose position wobble stays small. The wobble is measured
    // over the gap plus one sample of context on each side so two stills at
    // different levels never merge.
    std::vector<Run> merged;
    for (const auto& r : runs) {
        if (!merged.empty()) {
            Run& prev = merged.back();
            if (detail::peak_to_peak(norm, prev.hi, r.lo) < cfg.micro_osc_max_p2p) {
                prev.hi = r.hi;
                prev.micro = true;
                continue;
            }
        }
        merged.push_back(r);
    }

    for (const auto& r : merged) {
        const double duration = static_cast<double>(r.hi - r.lo + 1) * dt;
        if (duration < cfg.hold_min_s) continue;
        MarkerEvent e;
        e.kind = MarkerKind::HOLD;
        e.start_s = norm.samples[r.lo].t_s;
        e.end_s = norm.samples[r.hi].t_s + dt;
        e.duration_s = duration;
        std::vector<double> ps;
        ps.reserve(r.hi - r.lo + 1);
        for (size_t i = r.lo; i <= r.hi; ++i) ps.push_back(norm.samples[i].p);
        std::sort(ps.begin(), ps.end());
        const double median =
            ps.size() % 2 ? ps[ps.size() / 2] : (ps[ps.size() / 2 - 1] + ps[ps.size() / 2]) / 2.0;
        e.median_notch = notch_of(median);
        e.non_neutral = e.median_notch != Notch::NEUTRAL;
        e.micro_oscillation = r.micro;
        out.push_back(e);
    }
    return out;
}

/// Repeated flexion/extension cycles. Position extrema sit at sign changes
/// of the smoothed velocity; consecutive opposite swings of sufficient
/// peak-to-peak amplitude pair into cycles, and cycles chain into one burst
/// as long as no swing takes half a second or more.
inline std::vector<MarkerEvent> detect_nods(const NormalizedSeries& norm,
                                            const VelocitySeries& vel,
                                            const DetectorConfig& cfg) {
    cfg.validate();
    detail::check_aligned(norm, vel);
    std::vector<MarkerEvent> out;
    const long n = static_cast<long>(norm.samples.size());
    if (n < 3) return out;
    const double dt = 1.0 / norm.fps;

    std::vector<double> v(vel.samples.size());
    for (size_t i = 0; i < vel.samples.size(); ++i) v[i] = vel.samples[i].v_deg_s;
    const std::vector<double> vs = detail::smooth_values(v, detail::kNodVelocitySmoothWindow);

    // Still stretches of at least kBurstGapS partition the series into
    // movement segments; their edges anchor the swing chains.
    const long min_still = std::max(1L, static_cast<long>(std::ceil(detail::kBurstGapS / dt)));
    struct Segment {
        long lo, hi;
    };
    std::vector<Segment> segments;
    {
        std::vector<std::pair<long, long>> stills;
        long i = 0;
        while (i < n) {
            if (std::abs(vs[i]) < cfg.hold_v_max) {
                long j = i;
                while (j + 1 < n && std::abs(vs[j + 1]) < cfg.hold_v_max) ++j;
                if (j - i + 1 >= min_still) stills.push_back({i, j});
                i = j + 1;
            } else {
                ++i;
            }
        }
        long lo = 0;
        for (const auto& st : stills) {
            if (st.first > lo) segments.push_back({lo, st.first});
            lo = st.second;
        }
        if (lo < n - 1) segments.push_back({lo, n - 1});
    }

    for (const auto& seg : segments) {
        // Chain of turning points: segment anchors plus velocity sign changes.
        std::vector<long> chain;
        chain.push_back(seg.lo);
        int last_sign = 0;
        long prev_point = seg.lo;
        for (long i = seg.lo; i <= seg.hi; ++i) {
            const double x = vs[i];
            const int sign = x > 0 ? 1 : (x < 0 ? -1 : 0);
            if (sign == 0) continue;
            if (last_sign != 0 && sign != last_sign) {
                // Extremum between prev_point and i: the actual peak sample.
                long e = prev_point + 1;
                for (long j = prev_point + 1; j <= i; ++j) {
                    const bool is_max = last_sign > 0;
                    if (is_max ? norm.samples[j].p > norm.samples[e].p
                               : norm.samples[j].p < norm.samples[e].p)
                        e = j;
                }
                if (e > chain.back() && e < seg.hi) {
                    chain.push_back(e);
                    prev_point = e;
                }
            }
            last_sign = sign;
        }
        if (seg.hi > chain.back()) chain.push_back(seg.hi);
        if (chain.size() < 3) continue; // no interior turning point, no nod

        // Drop turning-point pairs whose swing stays under the amplitude
        // threshold (noise wiggles); anchors stay put.
        auto p_of = [&](long idx) { return norm.samples[idx].p; };
        bool changed = true;
        while (changed && chain.size() >= 3) {
            changed = false;
            size_t smallest = 0;
            double smallest_amp = cfg.nod_min_peak_to_peak;
            for (size_t k = 0; k + 1 < chain.size(); ++k) {
                const double amp = std::abs(p_of(chain[k + 1]) - p_of(chain[k]));
                if (amp < smallest_amp) {
                    smallest_amp = amp;
                    smallest = k + 1; // index of the later point of the pair
                    changed = true;
                }
            }
            if (!changed) break;
            const size_t k = smallest;
            if (k >= 2 && k < chain.size() - 1) {
                // Interior pair: remove both, merging three swings into one.
                chain.erase(chain.begin() + static_cast<long>(k) - 1,
                            chain.begin() + static_cast<long>(k) + 1);
            } else if (k == chain.size() - 1) {
                chain.erase(chain.begin() + static_cast<long>(k) - 1); // keep the far anchor
            } else {
                chain.erase(chain.begin() + static_cast<long>(k));
            }
        }
        if (chain.size() < 2) continue;

        struct Swing {
            long from, to;
            double amp, dur;
        };
        std::vector<Swing> swings;
        for (size_t k = 0; k + 1 < chain.size(); ++k) {
            Swing s;
            s.from = chain[k];
            s.to = chain[k + 1];
            s.amp = std::abs(p_of(s.to) - p_of(s.from));
            s.dur = norm.samples[s.to].t_s - norm.samples[s.from].t_s;
            swings.push_back(s);
        }

        // Velocity smoothing shifts detected turning points by up to two
        // samples; the duration bound gets that much slack so borderline
        // half-cycles do not split a burst.
        const double jitter_slack = 2.0 * dt;
        auto in_burst = [&](const Swing& s) {
            return s.amp >= cfg.nod_min_peak_to_peak && s.dur < detail::kBurstGapS + jitter_slack;
        };
        size_t k = 0;
        while (k < swings.size()) {
            if (!in_burst(swings[k])) {
                ++k;
                continue;
            }
            size_t j = k;
            while (j + 1 < swings.size() && in_burst(swings[j + 1])) ++j;
            const int cycles = static_cast<int>((j - k + 1) / 2);
            if (cycles >= 1) {
                const long lo = swings[k].from, hi = swings[j].to;
                MarkerEvent e;
                e.kind = MarkerKind::NOD_BURST;
                e.start_s = norm.samples[lo].t_s;
                e.end_s = norm.samples[hi].t_s;
                e.cycles = cycles;
                for (size_t q = k; q <= j; ++q)
                    e.max_peak_to_peak_p = std::max(e.max_peak_to_peak_p, swings[q].amp);
                for (long i = lo; i <= hi; ++i) {
                    e.peak_speed_deg_s = std::max(e.peak_speed_deg_s, std::abs(v[i]));
                    if (std::abs(norm.samples[i].p) < 0.125) e.crosses_neutral = true;
                }
                out.push_back(e);
            }
            k = j + 1;
        }
    }
    return out;
}

/// Segment-level speed classification: the chosen percentile of |v| over
/// moving samples (outside holds, above the stillness threshold), banded at
/// the high/low cutoffs with strict inequalities.
inline MarkerEvent speed_profile(const VelocitySeries& vel, const std::vector<MarkerEvent>& holds,
                                 const DetectorConfig& cfg) {
    cfg.validate();
    if (vel.samples.empty()) throw ArgumentError("speed_profile: empty velocity series");
    const double dt = 1.0 / vel.fps;

    std::vector<double> moving;
    for (const auto& s : vel.samples) {
        if (std::abs(s.v_deg_s) < cfg.hold_v_max) continue;
        bool in_hold = false;
        for (const auto& h : holds)
            if (h.kind == MarkerKind::HOLD && s.t_s >= h.start_s && s.t_s < h.end_s) {
                in_hold = true;
                break;
            }
        if (!in_hold) moving.push_back(std::abs(s.v_deg_s));
    }

    MarkerEvent e;
    e.kind = MarkerKind::SPEED_BAND;
    e.start_s = vel.samples.front().t_s;
    e.end_s = vel.samples.back().t_s + dt;
    if (moving.empty()) {
        e.stat_deg_s = 0;
    } else {
        std::sort(moving.begin(), moving.end());
        // Nearest-rank percentile.
        const size_t rank = static_cast<size_t>(
            std::ceil(cfg.speed_percentile * static_cast<double>(moving.size())));
        e.stat_deg_s = moving[std::min(moving.size() - 1, std::max<size_t>(1, rank) - 1)];
    }
    if (e.stat_deg_s > cfg.speed_high)
        e.band = SpeedBandClass::HIGH;
    else if (e.stat_deg_s < cfg.speed_low)
        e.band = SpeedBandClass::LOW;
    else
        e.band = SpeedBandClass::MID;
    return e;
}

/// All three detectors, time-ordered (ties: Hold, then NodBurst, then SpeedBand).
inline std::vector<MarkerEvent> detect_all(const NormalizedSeries& norm, const VelocitySeries& vel,
                                           const DetectorConfig& cfg) {
    std::vector<MarkerEvent> events = detect_holds(norm, vel, cfg);
    std::vector<MarkerEvent> nods = detect_nods(norm, vel, cfg);
    events.insert(events.end(), nods.begin(), nods.end());
    events.push_back(speed_profile(vel, events, cfg));
    std::stable_sort(events.begin(), events.end(), [](const MarkerEvent& a, const MarkerEvent& b) {
        if (a.start_s != b.start_s) return a.start_s < b.start_s;
        return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    });
    return events;
}

/// Events table: `kind,start_s,end_s,attr1,attr2,attr3` where the attribute
/// columns are, per kind —
///   NOD:   cycles, crosses_neutral (0/1), peak_speed_deg_s
///   HOLD:  duration_s, median_notch, micro_oscillation (0/1)
///   SPEED: band, stat_deg_s, (empty)
inline std::string events_csv(const std::vector<MarkerEvent>& events) {
    std::string out = "kind,start_s,end_s,attr1,attr2,attr3\n";
    for (const auto& e : events) {
        out += to_string(e.kind);
        out += ',';
        out += detail::fixed(e.start_s, 6);
        out += ',';
        out += detail::fixed(e.end_s, 6);
        out += ',';
        switch (e.kind) {
            case MarkerKind::NOD_BURST:
                out += std::to_string(e.cycles);
                out += ',';
                out += e.crosses_neutral ? '1' : '0';
                out += ',';
                out += detail::fixed(e.peak_speed_deg_s, 6);
                break;
            case MarkerKind::HOLD:
                out += detail::fixed(e.duration_s, 6);
                out += ',';
                out += to_string(e.median_notch);
                out += ',';
                out += e.micro_oscillation ? '1' : '0';
                break;
            case MarkerKind::SPEED_BAND:
                out += to_string(e.band);
                out += ',';
                out += detail::fixed(e.stat_deg_s, 6);
                out += ',';
                break;
        }
        out += '\n';
    }
    return out;
}

/// Compact one-line rendering used for generated annotation tiers, e.g.
/// `NOD x4 neutral+ 52.3deg/s`, `HOLD 2.5s FLX_MOYEN micro-`, `SPEED HIGH 59.3deg/s`.
inline std::string event_short_form(const MarkerEvent& e) {
    switch (e.kind) {
        case MarkerKind::NOD_BURST:
            return std::string("NOD x") + std::to_string(e.cycles) +
                   (e.crosses_neutral ? " neutral+ " : " neutral- ") +
                   detail::fixed(e.peak_speed_deg_s, 1) + "deg/s";
        case MarkerKind::HOLD:
            return std::string("HOLD ") + detail::fixed(e.duration_s, 1) + "s " +
                   to_string(e.median_notch) + (e.micro_oscillation ? " micro+" : " micro-");
        case MarkerKind::SPEED_BAND:
            return std::string("SPEED ") + to_string(e.band) + " " +
                   detail::fixed(e.stat_deg_s, 1) + "deg/s";
    }
    return "?";
}

} // namespace epikin
