#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "epikin/calibration.hpp"
#include "epikin/errors.hpp"
#include "epikin/kinematics.hpp"
#include "epikin/markers.hpp"

namespace epikin::synth {

/// Piecewise trajectory description in normalized units. Pieces tile the
/// total duration exactly.
struct TrajectoryPiece {
    enum class Kind { HOLD, NOD, RAMP };

    Kind kind = Kind::HOLD;
    double duration_s = 0; // for NOD this is cycles * cycle_s

    // HOLD
    double p = 0;
    double wobble_p2p = 0;

    // NOD: p(t) = center + half_amp * sin(2*pi*t / cycle_s)
    double center_p = 0;
    double half_amp_p = 0;
    int cycles = 0;
    double cycle_s = 0;

    // RAMP
    double p_from = 0;
    double p_to = 0;

    static TrajectoryPiece hold(double p, double duration_s, double wobble_p2p = 0) {
        TrajectoryPiece x;
        x.kind = Kind::HOLD;
        x.p = p;
        x.duration_s = duration_s;
        x.wobble_p2p = wobble_p2p;
        return x;
    }

    static TrajectoryPiece nod(double center_p, double half_amp_p, int cycles, double cycle_s) {
        TrajectoryPiece x;
        x.kind = Kind::NOD;
        x.center_p = center_p;
        x.half_amp_p = half_amp_p;
        x.cycles = cycles;
        x.cycle_s = cycle_s;
        x.duration_s = cycles * cycle_s;
        return x;
    }

    static TrajectoryPiece ramp(double p_from, double p_to, double duration_s) {
        TrajectoryPiece x;
        x.kind = Kind::RAMP;
        x.p_from = p_from;
        x.p_to = p_to;
        x.duration_s = duration_s;
        return x;
    }
};

constexpr double kWobblePeriodS = 0.5;

struct TrajectorySpec {
    std::string name;
    double fps = 25.0;
    double duration_s = 0;
    std::vector<TrajectoryPiece> pieces;
    double noise_sigma_p = 0;
    std::uint32_t seed = 0;

    void validate() const {
        if (fps <= 0) throw ArgumentError("trajectory fps must be positive");
        double total = 0;
        for (const auto& piece : pieces) {
            if (piece.duration_s <= 0) throw ArgumentError("piece durations must be positive");
            if (piece.kind == TrajectoryPiece::Kind::NOD &&
                (piece.cycles < 1 || piece.half_amp_p <= 0 || piece.cycle_s <= 0))
                throw ArgumentError("nod piece needs cycles >= 1, positive amplitude and period");
            total += piece.duration_s;
        }
        if (std::abs(total - duration_s) > 1e-9)
            throw ArgumentError("pieces do not tile the trajectory duration");
    }
};

struct GroundTruth {
    std::vector<MarkerEvent> events;
};

struct SynthResult {
    AngleSeries raw;
    NormalizedSeries norm;
    VelocitySeries vel;
    GroundTruth truth;
};

namespace detail {

// 32-bit Mersenne Twister plus Box-Muller keeps noise identical for a given
// seed on every platform; std::normal_distribution is implementation-defined.
class Gaussian {
public:
    explicit Gaussian(std::uint32_t seed) : state_(seed) {}

    double next(double sigma) {
        if (have_spare_) {
            have_spare_ = false;
            return spare_ * sigma;
        }
        const double u1 = (static_cast<double>(state_()) + 0.5) / 4294967296.0;
        const double u2 = (static_cast<double>(state_()) + 0.5) / 4294967296.0;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a) * sigma;
    }

private:
    std::mt19937 state_;
    double spare_ = 0;
    bool have_spare_ = false;
};

inline double piece_value(const TrajectoryPiece& piece, double u) {
    switch (piece.kind) {
        case TrajectoryPiece::Kind::HOLD:
            return piece.p + piece.wobble_p2p / 2.0 *
                                 std::sin(2.0 * std::numbers::pi * u / kWobblePeriodS);
        case TrajectoryPiece::Kind::NOD:
            return piece.center_p +
                   piece.half_amp_p * std::sin(2.0 * std::numbers::pi * u / piece.cycle_s);
        case TrajectoryPiece::Kind::RAMP:
            return piece.p_from + (piece.p_to - piece.p_from) * u / piece.duration_s;
    }
    return 0;
}

inline double piece_slope(const TrajectoryPiece& piece, double u) {
    switch (piece.kind) {
        case TrajectoryPiece::Kind::HOLD:
            return piece.wobble_p2p / 2.0 * (2.0 * std::numbers::pi / kWobblePeriodS) *
                   std::cos(2.0 * std::numbers::pi * u / kWobblePeriodS);
        case TrajectoryPiece::Kind::NOD:
            return piece.half_amp_p * (2.0 * std::numbers::pi / piece.cycle_s) *
                   std::cos(2.0 * std::numbers::pi * u / piece.cycle_s);
        case TrajectoryPiece::Kind::RAMP:
            return (piece.p_to - piece.p_from) / piece.duration_s;
    }
    return 0;
}

struct PieceSpan {
    const TrajectoryPiece* piece;
    double start_s;
    double end_s;
};

inline std::vector<PieceSpan> spans_of(const TrajectorySpec& spec) {
    std::vector<PieceSpan> spans;
    double t = 0;
    for (const auto& piece : spec.pieces) {
        spans.push_back({&piece, t, t + piece.duration_s});
        t += piece.duration_s;
    }
    return spans;
}

inline double p_at(const std::vector<PieceSpan>& spans, double t) {
    for (const auto& s : spans)
        if (t >= s.start_s - 1e-12 && t < s.end_s - 1e-12) return piece_value(*s.piece, t - s.start_s);
    return piece_value(*spans.back().piece, t - spans.back().start_s);
}

inline double slope_at(const std::vector<PieceSpan>& spans, double t) {
    for (const auto& s : spans)
        if (t >= s.start_s - 1e-12 && t < s.end_s - 1e-12) return piece_slope(*s.piece, t - s.start_s);
    return piece_slope(*spans.back().piece, t - spans.back().start_s);
}

// Degrees of raw angle per unit of normalized p at position p (side-dependent).
inline double scale_at(double p, const CalibrationProfile& profile) {
    return p >= 0 ? std::abs(profile.flx_limit_deg - profile.rest_deg)
                  : std::abs(profile.rest_deg - profile.ext_limit_deg);
}

// Largest |d theta / dt| a sine nod reaches, accounting for the two sides of
// rest having different raw spans.
inline double nod_peak_speed(const TrajectoryPiece& piece, const CalibrationProfile& profile) {
    const double omega = 2.0 * std::numbers::pi / piece.cycle_s;
    const double scale_flx = std::abs(profile.flx_limit_deg - profile.rest_deg);
    const double scale_ext = std::abs(profile.rest_deg - profile.ext_limit_deg);
    const double c = piece.center_p, amp = piece.half_amp_p;
    double best = 0;
    if (c + amp > 0) { // flexion side reachable
        const double cos_best = c >= 0 ? 1.0 : std::sqrt(std::max(0.0, 1.0 - (c / amp) * (c / amp)));
        best = std::max(best, amp * omega * cos_best * scale_flx);
    }
    if (c - amp < 0) { // extension side reachable
        const double cos_best = c <= 0 ? 1.0 : std::sqrt(std::max(0.0, 1.0 - (c / amp) * (c / amp)));
        best = std::max(best, amp * omega * cos_best * scale_ext);
    }
    return best;
}

// A piece is "still" when its analytic raw-angle speed never has to exceed
// the stillness threshold: plain holds always, ramps only when slow.
inline bool is_still(const TrajectoryPiece& piece, const CalibrationProfile& profile,
                     const DetectorConfig& cfg) {
    switch (piece.kind) {
        case TrajectoryPiece::Kind::HOLD:
            return true;
        case TrajectoryPiece::Kind::NOD:
            return false;
        case TrajectoryPiece::Kind::RAMP: {
            const double slope = std::abs(piece.p_to - piece.p_from) / piece.duration_s;
            const double scale = std::max(scale_at(piece.p_from, profile),
                                          scale_at(piece.p_to, profile));
            return slope * scale < cfg.hold_v_max;
        }
    }
    return false;
}

} // namespace detail

/// Ground truth derived analytically from the trajectory spec: what an ideal
/// detector with the given config must report on the noise-free signal.
inline GroundTruth derive_truth(const TrajectorySpec& spec, const CalibrationProfile& profile,
                                const DetectorConfig& cfg) {
    GroundTruth truth;
    const auto spans = detail::spans_of(spec);

    // Holds: maximal chains of still pieces, long enough in total.
    size_t i = 0;
    while (i < spans.size()) {
        if (!detail::is_still(*spans[i].piece, profile, cfg)) {
            ++i;
            continue;
        }
        size_t j = i;
        bool micro = false;
        while (j < spans.size() && detail::is_still(*spans[j].piece, profile, cfg)) {
            const auto& piece = *spans[j].piece;
            if (piece.kind == TrajectoryPiece::Kind::HOLD && piece.wobble_p2p > 0) {
                const double wobble_peak = piece.wobble_p2p / 2.0 *
                                           (2.0 * std::numbers::pi / kWobblePeriodS) *
                                           detail::scale_at(piece.p, profile);
                if (wobble_peak >= cfg.hold_v_max) micro = true;
            }
            ++j;
        }
        const double start = spans[i].start_s, end = spans[j - 1].end_s;
        if (end - start >= cfg.hold_min_s) {
            MarkerEvent e;
            e.kind = MarkerKind::HOLD;
            e.start_s = start;
            e.end_s = end;
            e.duration_s = end - start;
            // Median position over the interval, sampled densely off the
            // analytic signal.
            std::vector<double> ps;
            const double step = 1.0 / (4.0 * spec.fps);
            for (double t = start; t < end - 1e-12; t += step)
                ps.push_back(detail::p_at(spans, t));
            std::sort(ps.begin(), ps.end());
            const double median = ps.size() % 2 ? ps[ps.size() / 2]
                                                : (ps[ps.size() / 2 - 1] + ps[ps.size() / 2]) / 2.0;
            e.median_notch = notch_of(std::clamp(median, -1.0, 1.0));
            e.non_neutral = e.median_notch != Notch::NEUTRAL;
            e.micro_oscillation = micro;
            truth.events.push_back(e);
        }
        i = j;
    }

    // Nod bursts: one per nod piece.
    for (const auto& span : spans) {
        if (span.piece->kind != TrajectoryPiece::Kind::NOD) continue;
        const auto& piece = *span.piece;
        MarkerEvent e;
        e.kind = MarkerKind::NOD_BURST;
        e.start_s = span.start_s;
        e.end_s = span.end_s;
        e.cycles = piece.cycles;
        e.max_peak_to_peak_p = 2.0 * piece.half_amp_p;
        const double lo = piece.center_p - piece.half_amp_p;
        const double hi = piece.center_p + piece.half_amp_p;
        const double min_abs = (lo <= 0 && hi >= 0) ? 0.0 : std::min(std::abs(lo), std::abs(hi));
        e.crosses_neutral = min_abs < 0.125;
        e.peak_speed_deg_s = detail::nod_peak_speed(piece, profile);
        truth.events.push_back(e);
    }

    // Segment speed band from the analytic velocity, via the same masked
    // percentile the detector reports, computed on a denser grid.
    {
        std::vector<double> moving;
        const double step = 1.0 / (4.0 * spec.fps);
        for (double t = 0; t < spec.duration_s - 1e-12; t += step) {
            const double p = detail::p_at(spans, t);
            const double v = std::abs(detail::slope_at(spans, t)) * detail::scale_at(p, profile);
            if (v < cfg.hold_v_max) continue;
            bool in_hold = false;
            for (const auto& h : truth.events)
                if (h.kind == MarkerKind::HOLD && t >= h.start_s && t < h.end_s) {
                    in_hold = true;
                    break;
                }
            if (!in_hold) moving.push_back(v);
        }
        MarkerEvent e;
        e.kind = MarkerKind::SPEED_BAND;
        e.start_s = 0;
        e.end_s = spec.duration_s;
        if (!moving.empty()) {
            std::sort(moving.begin(), moving.end());
            const size_t rank = static_cast<size_t>(
                std::ceil(cfg.speed_percentile * static_cast<double>(moving.size())));
            e.stat_deg_s = moving[std::min(moving.size() - 1, std::max<size_t>(1, rank) - 1)];
        }
        e.band = e.stat_deg_s > cfg.speed_high
                     ? SpeedBandClass::HIGH
                     : (e.stat_deg_s < cfg.speed_low ? SpeedBandClass::LOW : SpeedBandClass::MID);
        truth.events.push_back(e);
    }

    std::stable_sort(truth.events.begin(), truth.events.end(),
                     [](const MarkerEvent& a, const MarkerEvent& b) {
                         if (a.start_s != b.start_s) return a.start_s < b.start_s;
                         return static_cast<int>(a.kind) < static_cast<int>(b.kind);
                     });
    return truth;
}

/// Sample the trajectory into raw/normalized/velocity series through the given
/// calibration, with seeded Gaussian noise on p, plus the planted truth.
inline SynthResult generate(const TrajectorySpec& spec, const CalibrationProfile& profile,
                            const DetectorConfig& cfg = DetectorConfig{}) {
    spec.validate();
    profile.validate();

    const auto spans = detail::spans_of(spec);
    const long n = static_cast<long>(std::llround(spec.duration_s * spec.fps));
    if (n < 2) throw ArgumentError("trajectory too short to sample");

    detail::Gaussian noise(spec.seed);

    SynthResult out;
    out.raw.subject_id = profile.subject_id;
    out.raw.segment = profile.segment;
    out.raw.dof = profile.dof;
    out.raw.fps = spec.fps;
    out.raw.samples.reserve(n);
    for (long k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) / spec.fps;
        double p = detail::p_at(spans, t);
        if (spec.noise_sigma_p > 0) p += noise.next(spec.noise_sigma_p);
        p = std::clamp(p, -1.0, 1.0);
        AngleSample s;
        s.t_s = t;
        s.theta_deg = denormalize(p, profile);
        s.quality = Quality::GOOD;
        out.raw.samples.push_back(s);
    }
    out.vel = velocity(out.raw);
    out.norm = normalize_series(out.raw, profile);
    out.truth = derive_truth(spec, profile, cfg);
    return out;
}

/// Precision/recall of detected events against planted truth, matched
/// one-to-one per kind, greedily by descending interval IoU.
struct PrStats {
    int matched = 0;
    int detected = 0;
    int truth = 0;

    double precision() const { return detected == 0 ? 1.0 : static_cast<double>(matched) / detected; }
    double recall() const { return truth == 0 ? 1.0 : static_cast<double>(matched) / truth; }
    double f1() const {
        const double p = precision(), r = recall();
        return p + r == 0 ? 0.0 : 2 * p * r / (p + r);
    }
};

inline double interval_iou(double a1, double a2, double b1, double b2) {
    const double inter = std::max(0.0, std::min(a2, b2) - std::max(a1, b1));
    const double uni = (a2 - a1) + (b2 - b1) - inter;
    return uni <= 0 ? 0.0 : inter / uni;
}

inline std::map<MarkerKind, PrStats> evaluate(const std::vector<MarkerEvent>& detected,
                                              const GroundTruth& truth, double iou_min = 0.5) {
    std::map<MarkerKind, PrStats> out;
    for (MarkerKind kind : {MarkerKind::HOLD, MarkerKind::NOD_BURST, MarkerKind::SPEED_BAND}) {
        PrStats& st = out[kind];
        std::vector<const MarkerEvent*> det, tru;
        for (const auto& e : detected)
            if (e.kind == kind) det.push_back(&e);
        for (const auto& e : truth.events)
            if (e.kind == kind) tru.push_back(&e);
        st.detected = static_cast<int>(det.size());
        st.truth = static_cast<int>(tru.size());

        struct Pair {
            double iou;
            size_t d, t;
        };
        std::vector<Pair> pairs;
        for (size_t d = 0; d < det.size(); ++d)
            for (size_t t = 0; t < tru.size(); ++t) {
                const double iou =
                    interval_iou(det[d]->start_s, det[d]->end_s, tru[t]->start_s, tru[t]->end_s);
                if (iou >= iou_min) pairs.push_back({iou, d, t});
            }
        std::stable_sort(pairs.begin(), pairs.end(),
                         [](const Pair& a, const Pair& b) { return a.iou > b.iou; });
        std::vector<bool> d_used(det.size(), false), t_used(tru.size(), false);
        for (const auto& p : pairs) {
            if (d_used[p.d] || t_used[p.t]) continue;
            d_used[p.d] = true;
            t_used[p.t] = true;
            ++st.matched;
        }
    }
    return out;
}

inline TrajectorySpec spec_from_json(std::string_view bytes) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("trajectory spec is not valid JSON: ") + e.what());
    }
    TrajectorySpec spec;
    try {
        spec.name = j.value("name", std::string("spec"));
        spec.fps = j.at("fps").get<double>();
        spec.duration_s = j.at("duration_s").get<double>();
        spec.noise_sigma_p = j.value("noise_sigma_p", 0.0);
        spec.seed = j.value("seed", 0u);
        for (const auto& pj : j.at("pieces")) {
            const std::string kind = pj.at("kind").get<std::string>();
            if (kind == "hold") {
                spec.pieces.push_back(TrajectoryPiece::hold(pj.at("p").get<double>(),
                                                            pj.at("duration_s").get<double>(),
                                                            pj.value("wobble_p2p", 0.0)));
            } else if (kind == "nod") {
                spec.pieces.push_back(TrajectoryPiece::nod(
                    pj.at("center_p").get<double>(), pj.at("half_amp_p").get<double>(),
                    pj.at("cycles").get<int>(), pj.at("cycle_s").get<double>()));
            } else if (kind == "ramp") {
                spec.pieces.push_back(TrajectoryPiece::ramp(pj.at("p_from").get<double>(),
                                                            pj.at("p_to").get<double>(),
                                                            pj.at("duration_s").get<double>()));
            } else {
                throw ParseError("unknown piece kind: " + kind);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("trajectory spec field error: ") + e.what());
    }
    spec.validate();
    return spec;
}

/// The standard calibration used by the bundled fixtures (the first
/// speaker's anchors: rest 104, flexion limit 140, extension limit 88).
inline CalibrationProfile reference_profile() {
    CalibrationProfile p;
    p.subject_id = "SYNTH";
    p.segment = SegmentId::COU;
    p.dof = DofId{DofName::FLXEXT, Side::NONE};
    p.rest_deg = 104;
    p.flx_limit_deg = 140;
    p.ext_limit_deg = 88;
    return p;
}

/// Bundled noise-free fixtures covering holds, nods, ramps and
/// micro-oscillations. Every piece boundary sits on the 25 fps sample grid.
inline std::vector<TrajectorySpec> fixture_suite() {
    using P = TrajectoryPiece;
    std::vector<TrajectorySpec> suite;
    auto add = [&suite](std::string name, std::vector<P> pieces) {
        TrajectorySpec s;
        s.name = std::move(name);
        s.fps = 25;
        s.pieces = std::move(pieces);
        s.duration_s = 0;
        for (const auto& piece : s.pieces) s.duration_s += piece.duration_s;
        s.validate();
        suite.push_back(std::move(s));
    };

    // Holds meant to be detected get at least 2.2 s so the one-sample seam
    // trim of the sampled velocity cannot push them under the 2 s threshold;
    // stills meant to be skipped stay at or below 1.7 s.
    add("hold_neutral", {P::hold(0.0, 3.0)});
    add("hold_flx_moyen", {P::hold(0.0, 2.4), P::ramp(0.0, 0.5, 0.4), P::hold(0.5, 2.6),
                           P::ramp(0.5, 0.0, 0.4), P::hold(0.0, 2.4)});
    add("hold_too_short", {P::hold(0.0, 2.2), P::ramp(0.0, 0.4, 0.4), P::hold(0.4, 1.6),
                           P::ramp(0.4, 0.0, 0.4), P::hold(0.0, 2.4)});
    add("hold_ext_grand", {P::ramp(0.0, -0.7, 0.6), P::hold(-0.7, 2.4), P::ramp(-0.7, 0.0, 0.6),
                           P::hold(0.0, 2.4)});
    add("hold_flx_butee", {P::hold(0.0, 2.2), P::ramp(0.0, 0.9, 0.4), P::hold(0.9, 2.4),
                           P::ramp(0.9, 0.0, 0.4), P::hold(0.0, 2.2)});
    add("hold_micro_osc", {P::hold(0.4, 3.0, 0.05), P::ramp(0.4, 0.0, 0.48), P::hold(0.0, 2.4)});
    add("hold_micro_osc_neutral", {P::hold(0.0, 3.2, 0.06), P::ramp(0.0, 0.4, 0.4),
                                   P::hold(0.4, 2.4)});
    add("slow_drift_hold", {P::ramp(0.0, 0.08, 3.0)});
    add("two_holds_levels", {P::hold(-0.3, 2.4), P::ramp(-0.3, 0.45, 0.4), P::hold(0.45, 2.8)});
    add("nods_crossing", {P::hold(0.0, 2.2), P::nod(0.05, 0.25, 4, 0.6), P::hold(0.0, 2.6)});
    add("nods_no_crossing", {P::hold(0.3, 2.2), P::nod(0.3, 0.15, 3, 0.48), P::hold(0.3, 2.56)});
    add("nods_ext_side", {P::hold(-0.5, 2.2), P::nod(-0.5, 0.2, 5, 0.8), P::hold(-0.5, 2.2)});
    add("nods_single_cycle", {P::hold(0.0, 2.2), P::nod(0.1, 0.2, 1, 0.8), P::hold(0.0, 2.2)});
    add("nods_two_bursts", {P::hold(0.0, 2.2), P::nod(0.0, 0.2, 2, 0.48), P::hold(0.0, 1.04),
                            P::nod(0.0, 0.2, 3, 0.48), P::hold(0.0, 2.2)});
    add("nods_standalone", {P::nod(0.05, 0.25, 4, 0.6)});
    add("nods_slowish", {P::hold(0.2, 2.2), P::nod(0.2, 0.18, 3, 0.88), P::hold(0.2, 2.2)});
    add("nods_after_ramp", {P::hold(0.0, 2.2), P::ramp(0.0, -0.8, 1.0), P::nod(-0.8, 0.09, 4, 0.64),
                            P::ramp(-0.8, 0.85, 1.0), P::hold(0.85, 2.44)});
    add("ramp_fast_only", {P::hold(0.0, 2.2), P::ramp(0.0, 0.8, 0.6), P::hold(0.8, 2.4),
                           P::ramp(0.8, -0.2, 0.8), P::hold(-0.2, 2.6)});
    add("ramp_medium_speed", {P::hold(0.0, 2.4), P::ramp(0.0, 0.5, 0.72), P::hold(0.5, 2.4)});
    add("all_flat_petit", {P::hold(0.2, 4.0)});
    add("nods_large_amp", {P::hold(0.0, 2.2), P::nod(0.0, 0.4, 2, 0.88), P::hold(0.0, 2.2)});
    add("nods_back_to_back_ramps", {P::ramp(0.3, 0.0, 0.6), P::nod(0.0, 0.22, 3, 0.56),
                                    P::ramp(0.0, 0.3, 0.6), P::hold(0.3, 2.12)});
    return suite;
}

} // namespace epikin::synth
