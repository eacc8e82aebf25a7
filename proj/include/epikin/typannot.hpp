#pragma once

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "epikin/calibration.hpp"
#include "epikin/errors.hpp"
#include "epikin/format.hpp"
#include "epikin/kinematics.hpp"

namespace epikin {

/// Ad hoc prosodic annotation riding on a transcription record: speed and
/// amplitude contrasts plus a repetition count.
struct ProsodicQualifier {
    enum class Contrast { NONE, PLUS, MINUS };

    Contrast speed_contrast = Contrast::NONE;
    Contrast amplitude_contrast = Contrast::NONE;
    std::optional<int> repetitions; // >= 1 when present

    friend bool operator==(const ProsodicQualifier&, const ProsodicQualifier&) = default;
};

/// One articulatory transcription record: which segment, which DoF, which
/// notch it sits at, with qualifiers, over a time interval.
struct TypannotRecord {
    SegmentId segment = SegmentId::COU;
    DofId dof{};
    Notch notch = Notch::NEUTRAL;
    ProsodicQualifier qualifiers;
    double start_s = 0;
    double end_s = 0;

    friend bool operator==(const TypannotRecord&, const TypannotRecord&) = default;
};

namespace detail {

// Sides are only meaningful for lateral DoFs of COU and BUSTE per the segment
// vocabulary; an EPAULES side flag is accepted but uninterpreted. FLXEXT is
// never sided.
inline void check_side_legality(SegmentId segment, const DofId& dof) {
    if (dof.side == Side::NONE) return;
    if (dof.name == DofName::FLXEXT)
        throw ValidityError("FLXEXT takes no side qualifier");
    if (segment == SegmentId::TETE)
        throw ValidityError("TETE lateral DoFs take no side qualifier");
}

// Notch surface names follow the DoF's own sense pair: FLX/EXT, ABD/ADD,
// RIN/REX. The positive side of the normalized scale is the first-named sense.
inline const char* notch_pos_prefix(DofName d) {
    switch (d) {
        case DofName::FLXEXT: return "FLX";
        case DofName::ABDADD: return "ABD";
        case DofName::RINREX: return "RIN";
    }
    return "?";
}

inline const char* notch_neg_prefix(DofName d) {
    switch (d) {
        case DofName::FLXEXT: return "EXT";
        case DofName::ABDADD: return "ADD";
        case DofName::RINREX: return "REX";
    }
    return "?";
}

inline std::string notch_name(Notch n, DofName d) {
    static const char* grades[] = {"BUTEE", "GRAND", "MOYEN", "PETIT"};
    const int i = static_cast<int>(n);
    if (i == 4) return "NEUTRAL";
    if (i < 4) return std::string(notch_neg_prefix(d)) + "_" + grades[i];
    return std::string(notch_pos_prefix(d)) + "_" + grades[8 - i];
}

} // namespace detail

/// Canonical text form: `SEG:DOF[:SIDE]=NOTCH[;v+|;v-][;a+|;a-][;xN]@start-end`
/// with two-decimal seconds. One spelling per record.
inline std::string encode(const TypannotRecord& r) {
    detail::check_side_legality(r.segment, r.dof);
    if (!(r.start_s < r.end_s)) throw ValidityError("record interval must satisfy start < end");
    if (r.qualifiers.repetitions && *r.qualifiers.repetitions < 1)
        throw ValidityError("repetition count must be >= 1");

    std::string out = to_string(r.segment);
    out += ':';
    out += to_string(r.dof.name);
    if (r.dof.side != Side::NONE) {
        out += ':';
        out += to_string(r.dof.side);
    }
    out += '=';
    out += detail::notch_name(r.notch, r.dof.name);
    using C = ProsodicQualifier::Contrast;
    if (r.qualifiers.speed_contrast != C::NONE)
        out += r.qualifiers.speed_contrast == C::PLUS ? ";v+" : ";v-";
    if (r.qualifiers.amplitude_contrast != C::NONE)
        out += r.qualifiers.amplitude_contrast == C::PLUS ? ";a+" : ";a-";
    if (r.qualifiers.repetitions) out += ";x" + std::to_string(*r.qualifiers.repetitions);
    out += '@';
    out += detail::fixed(r.start_s, 2);
    out += '-';
    out += detail::fixed(r.end_s, 2);
    return out;
}

namespace detail {

class RecordReader {
public:
    explicit RecordReader(std::string_view text) : text_(text) {}

    TypannotRecord parse() {
        TypannotRecord r;
        r.segment = parse_segment_tok();
        expect(':');
        r.dof.name = parse_dof_tok();
        if (peek() == ':') {
            ++pos_;
            r.dof.side = parse_side_tok();
        }
        expect('=');
        r.notch = parse_notch_tok(r.dof.name);
        while (peek() == ';') {
            ++pos_;
            parse_qualifier(r.qualifiers);
        }
        expect('@');
        r.start_s = parse_time();
        expect('-');
        r.end_s = parse_time();
        if (pos_ != text_.size()) fail("trailing characters");
        if (!(r.start_s < r.end_s)) fail("interval must satisfy start < end");
        try {
            check_side_legality(r.segment, r.dof);
        } catch (const ValidityError& e) {
            throw ParseError(std::string(e.what()) + " (column 1)");
        }
        return r;
    }

private:
    std::string_view text_;
    size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("typannot record: " + what + " (column " + std::to_string(pos_ + 1) + ")");
    }

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    std::string_view take_word() {
        const size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        return text_.substr(start, pos_ - start);
    }

    SegmentId parse_segment_tok() {
        const auto w = take_word();
        if (w == "COU") return SegmentId::COU;
        if (w == "TETE") return SegmentId::TETE;
        if (w == "EPAULES") return SegmentId::EPAULES;
        if (w == "BUSTE") return SegmentId::BUSTE;
        fail("unknown segment \"" + std::string(w) + "\"");
    }

    DofName parse_dof_tok() {
        const auto w = take_word();
        if (w == "FLXEXT") return DofName::FLXEXT;
        if (w == "ABDADD") return DofName::ABDADD;
        if (w == "RINREX") return DofName::RINREX;
        fail("unknown DoF \"" + std::string(w) + "\"");
    }

    Side parse_side_tok() {
        const auto w = take_word();
        if (w == "LEFT") return Side::LEFT;
        if (w == "RIGHT") return Side::RIGHT;
        fail("unknown side \"" + std::string(w) + "\"");
    }

    Notch parse_notch_tok(DofName dof) {
        const auto w = take_word();
        for (int i = 0; i <= 8; ++i)
            if (w == notch_name(static_cast<Notch>(i), dof)) return static_cast<Notch>(i);
        fail("unknown notch \"" + std::string(w) + "\" for DoF");
    }

    void parse_qualifier(ProsodicQualifier& q) {
        using C = ProsodicQualifier::Contrast;
        const char kind = peek();
        if (kind == 'v' || kind == 'a') {
            ++pos_;
            const char sign = peek();
            if (sign != '+' && sign != '-') fail("expected '+' or '-' after qualifier letter");
            ++pos_;
            C& slot = kind == 'v' ? q.speed_contrast : q.amplitude_contrast;
            if (slot != C::NONE) fail("duplicate qualifier");
            slot = sign == '+' ? C::PLUS : C::MINUS;
        } else if (kind == 'x') {
            ++pos_;
            if (q.repetitions) fail("duplicate repetition qualifier");
            const size_t start = pos_;
            while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
            if (pos_ == start) fail("expected digits after 'x'");
            const long n = std::strtol(std::string(text_.substr(start, pos_ - start)).c_str(),
                                       nullptr, 10);
            if (n < 1) fail("repetition count must be >= 1");
            q.repetitions = static_cast<int>(n);
        } else {
            fail("unknown qualifier");
        }
    }

    double parse_time() {
        const size_t start = pos_;
        while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
        if (pos_ == start) fail("expected seconds");
        if (peek() != '.') fail("expected '.' in time");
        ++pos_;
        const size_t frac_start = pos_;
        while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
        if (pos_ - frac_start != 2) fail("time takes exactly two decimals");
        return std::strtod(std::string(text_.substr(start, pos_ - start)).c_str(), nullptr);
    }
};

} // namespace detail

/// Inverse of encode over the canonical grammar; errors carry the 1-based
/// column of the offending character.
inline TypannotRecord decode(std::string_view text) {
    return detail::RecordReader(text).parse();
}

/// Run-length conversion of a normalized series into transcription records.
/// Maximal constant-notch runs lasting at least min_run_s become records;
/// shorter runs are absorbed by the neighbour with the nearer notch (ties go
/// to the earlier neighbour). Output intervals tile the series span exactly.
inline std::vector<TypannotRecord> series_to_records(const NormalizedSeries& norm,
                                                     double min_run_s) {
    if (min_run_s < 0) throw ArgumentError("min_run_s must be >= 0");
    std::vector<TypannotRecord> out;
    if (norm.samples.empty()) return out;

    const double dt = 1.0 / norm.fps;
    struct Run {
        Notch notch;
        double start_s;
        double end_s;
    };
    std::vector<Run> runs;
    for (const auto& s : norm.samples) {
        if (!runs.empty() && runs.back().notch == s.notch) {
            runs.back().end_s = s.t_s + dt;
        } else {
            runs.push_back({s.notch, s.t_s, s.t_s + dt});
        }
    }

    // Absorb sub-threshold runs, shortest first, into the neighbour whose
    // notch is nearer; merge equal-notch neighbours as they appear.
    auto coalesce = [&runs]() {
        for (size_t i = 0; i + 1 < runs.size();) {
            if (runs[i].notch == runs[i + 1].notch) {
                runs[i].end_s = runs[i + 1].end_s;
                runs.erase(runs.begin() + static_cast<long>(i) + 1);
            } else {
                ++i;
            }
        }
    };
    coalesce();
    while (runs.size() > 1) {
        size_t shortest = runs.size();
        double shortest_len = min_run_s;
        for (size_t i = 0; i < runs.size(); ++i) {
            const double len = runs[i].end_s - runs[i].start_s;
            if (len < shortest_len - 1e-12) {
                shortest = i;
                shortest_len = len;
            }
        }
        if (shortest == runs.size()) break;

        const size_t i = shortest;
        size_t target;
        if (i == 0)
            target = 1;
        else if (i == runs.size() - 1)
            target = i - 1;
        else {
            const int d_prev = std::abs(static_cast<int>(runs[i - 1].notch) -
                                        static_cast<int>(runs[i].notch));
            const int d_next = std::abs(static_cast<int>(runs[i + 1].notch) -
                                        static_cast<int>(runs[i].notch));
            target = d_prev <= d_next ? i - 1 : i + 1; // tie: earlier neighbour
        }
        if (target < i) {
            runs[target].end_s = runs[i].end_s;
        } else {
            runs[target].start_s = runs[i].start_s;
        }
        runs.erase(runs.begin() + static_cast<long>(i));
        coalesce();
    }

    out.reserve(runs.size());
    for (const auto& r : runs) {
        TypannotRecord rec;
        rec.segment = norm.segment;
        rec.dof = norm.dof;
        rec.notch = r.notch;
        rec.start_s = r.start_s;
        rec.end_s = r.end_s;
        out.push_back(rec);
    }
    return out;
}

} // namespace epikin
