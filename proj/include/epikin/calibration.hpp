#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "epikin/errors.hpp"
#include "epikin/kinematics.hpp"

namespace epikin {

/// Per-subject anchors tying the raw angle scale to the articulatory range:
/// the rest posture and the two articular limits. The raw convention (does
/// flexion increase or decrease degrees?) is implied by the sign of
/// flx_limit_deg - rest_deg; both orientations are valid.
struct CalibrationProfile {
    std::string subject_id;
    SegmentId segment = SegmentId::COU;
    DofId dof{};
    double rest_deg = 0;
    double flx_limit_deg = 0;
    double ext_limit_deg = 0;

    void validate() const {
        if (flx_limit_deg == ext_limit_deg)
            throw CalibrationError("calibration limits coincide");
        const double lo = std::min(flx_limit_deg, ext_limit_deg);
        const double hi = std::max(flx_limit_deg, ext_limit_deg);
        if (!(rest_deg > lo && rest_deg < hi))
            throw CalibrationError("rest angle must lie strictly between the articular limits");
    }

    bool inverted_orientation() const { return flx_limit_deg < rest_deg; }
};

/// Discretized amplitude grade on one DoF axis, ordered from the extension
/// limit through rest to the flexion limit. Exactly 9 values.
enum class Notch {
    EXT_BUTEE,
    EXT_GRAND,
    EXT_MOYEN,
    EXT_PETIT,
    NEUTRAL,
    FLX_PETIT,
    FLX_MOYEN,
    FLX_GRAND,
    FLX_BUTEE,
};

inline const char* to_string(Notch n) {
    switch (n) {
        case Notch::EXT_BUTEE: return "EXT_BUTEE";
        case Notch::EXT_GRAND: return "EXT_GRAND";
        case Notch::EXT_MOYEN: return "EXT_MOYEN";
        case Notch::EXT_PETIT: return "EXT_PETIT";
        case Notch::NEUTRAL: return "NEUTRAL";
        case Notch::FLX_PETIT: return "FLX_PETIT";
        case Notch::FLX_MOYEN: return "FLX_MOYEN";
        case Notch::FLX_GRAND: return "FLX_GRAND";
        case Notch::FLX_BUTEE: return "FLX_BUTEE";
    }
    return "?";
}

struct NormalizedSample {
    double t_s = 0;
    double p = 0; // signed normalized position: +1 flexion limit, 0 rest, -1 extension limit
    Notch notch = Notch::NEUTRAL;
    Quality quality = Quality::GOOD;
};

struct NormalizedSeries {
    std::string subject_id;
    SegmentId segment = SegmentId::COU;
    DofId dof{};
    double fps = 25.0;
    std::vector<NormalizedSample> samples;
};

/// Map a raw angle onto the signed normalized scale. Piecewise linear with a
/// kink at rest; clamped to [-1, +1]. Strictly monotone between the limits
/// for either raw orientation.
inline double normalize(double theta_deg, const CalibrationProfile& profile) {
    const double d = theta_deg - profile.rest_deg;
    const double flx_span = profile.flx_limit_deg - profile.rest_deg;
    const double ext_span = profile.ext_limit_deg - profile.rest_deg;
    // theta is on the flexion side when its offset from rest points toward
    // the flexion limit.
    const bool flexion_side = (d == 0) || ((d > 0) == (flx_span > 0));
    const double p = flexion_side ? d / flx_span : -d / ext_span;
    return std::clamp(p, -1.0, 1.0);
}

/// Inverse of normalize on [-1, +1] (no clamping ambiguity inside the range).
inline double denormalize(double p, const CalibrationProfile& profile) {
    if (p >= 0) return profile.rest_deg + p * (profile.flx_limit_deg - profile.rest_deg);
    return profile.rest_deg - p * (profile.ext_limit_deg - profile.rest_deg);
}

/// Notch band boundaries at |p| = 0.125 / 0.375 / 0.625 / 0.875: a symmetric
/// neutral band plus four equal grades per side. A value exactly on a
/// boundary takes the notch nearer the limit.
inline Notch notch_of(double p) {
    if (std::abs(p) > 1.0) throw ArgumentError("notch_of: p outside [-1, +1]");
    const double a = std::abs(p);
    int grade; // 0 neutral, 1 petit, 2 moyen, 3 grand, 4 butee
    if (a < 0.125)
        grade = 0;
    else if (a < 0.375)
        grade = 1;
    else if (a < 0.625)
        grade = 2;
    else if (a < 0.875)
        grade = 3;
    else
        grade = 4;
    if (grade == 0) return Notch::NEUTRAL;
    const int idx = 4 + (p > 0 ? grade : -grade);
    return static_cast<Notch>(idx);
}

enum class LandmarkLabel { REST, FLX_LIMIT, EXT_LIMIT };

inline const char* to_string(LandmarkLabel l) {
    switch (l) {
        case LandmarkLabel::REST: return "REST";
        case LandmarkLabel::FLX_LIMIT: return "FLX_LIMIT";
        case LandmarkLabel::EXT_LIMIT: return "EXT_LIMIT";
    }
    return "?";
}

struct Landmark {
    LandmarkLabel label = LandmarkLabel::REST;
    double t_s = 0;
};

namespace detail {

inline double median_around(const AngleSeries& series, double t_s, double half_window_s) {
    if (series.samples.empty() || t_s < series.samples.front().t_s - 1e-9 ||
        t_s > series.samples.back().t_s + 1e-9)
        throw ArgumentError("calibration landmark at " + fixed(t_s, 3) +
                            " s falls outside the series");
    std::vector<double> vals;
    for (const auto& s : series.samples)
        if (s.t_s >= t_s - half_window_s - 1e-9 && s.t_s <= t_s + half_window_s + 1e-9)
            vals.push_back(s.theta_deg);
    if (vals.empty()) throw ArgumentError("no samples around calibration landmark");
    std::sort(vals.begin(), vals.end());
    const size_t n = vals.size();
    return n % 2 ? vals[n / 2] : (vals[n / 2 - 1] + vals[n / 2]) / 2.0;
}

} // namespace detail

/// Build a profile from annotated instants of rest and the two limits. Each
/// anchor angle is the median of the raw series over +-0.2 s around its
/// landmark, which shrugs off single-frame jitter.
inline CalibrationProfile build_profile(const AngleSeries& series,
                                        const std::vector<Landmark>& landmarks) {
    bool have_rest = false, have_flx = false, have_ext = false;
    CalibrationProfile p;
    p.subject_id = series.subject_id;
    p.segment = series.segment;
    p.dof = series.dof;
    for (const auto& lm : landmarks) {
        const double theta = detail::median_around(series, lm.t_s, 0.2);
        switch (lm.label) {
            case LandmarkLabel::REST:
                if (!have_rest) p.rest_deg = theta;
                have_rest = true;
                break;
            case LandmarkLabel::FLX_LIMIT:
                if (!have_flx) p.flx_limit_deg = theta;
                have_flx = true;
                break;
            case LandmarkLabel::EXT_LIMIT:
                if (!have_ext) p.ext_limit_deg = theta;
                have_ext = true;
                break;
        }
    }
    if (!have_rest) throw CalibrationError("missing calibration landmark: REST");
    if (!have_flx) throw CalibrationError("missing calibration landmark: FLX_LIMIT");
    if (!have_ext) throw CalibrationError("missing calibration landmark: EXT_LIMIT");
    p.validate();
    return p;
}

/// Element-wise normalize + notch over a whole series; metadata and quality
/// flags carry over.
inline NormalizedSeries normalize_series(const AngleSeries& series,
                                         const CalibrationProfile& profile) {
    if (series.segment != profile.segment || !(series.dof == profile.dof))
        throw MismatchError("profile is for " + std::string(to_string(profile.segment)) + ":" +
                            to_string(profile.dof.name) + ", series is " + to_string(series.segment) +
                            ":" + to_string(series.dof.name));
    profile.validate();
    NormalizedSeries out;
    out.subject_id = series.subject_id;
    out.segment = series.segment;
    out.dof = series.dof;
    out.fps = series.fps;
    out.samples.reserve(series.samples.size());
    for (const auto& s : series.samples) {
        NormalizedSample n;
        n.t_s = s.t_s;
        n.p = normalize(s.theta_deg, profile);
        n.notch = notch_of(n.p);
        n.quality = s.quality;
        out.samples.push_back(n);
    }
    return out;
}

inline std::string profile_to_json(const CalibrationProfile& p) {
    nlohmann::json j;
    j["subject_id"] = p.subject_id;
    j["segment"] = to_string(p.segment);
    std::string dof = to_string(p.dof.name);
    if (p.dof.side != Side::NONE) dof += std::string(":") + to_string(p.dof.side);
    j["dof"] = dof;
    j["rest_deg"] = p.rest_deg;
    j["flx_limit_deg"] = p.flx_limit_deg;
    j["ext_limit_deg"] = p.ext_limit_deg;
    return j.dump(2) + "\n";
}

inline CalibrationProfile profile_from_json(std::string_view bytes) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("profile file is not valid JSON: ") + e.what());
    }
    CalibrationProfile p;
    try {
        p.subject_id = j.at("subject_id").get<std::string>();
        p.segment = parse_segment(j.at("segment").get<std::string>());
        std::string dof = j.at("dof").get<std::string>();
        if (auto colon = dof.find(':'); colon != std::string::npos) {
            p.dof.name = parse_dof_name(dof.substr(0, colon));
            const std::string side = dof.substr(colon + 1);
            if (side == "LEFT")
                p.dof.side = Side::LEFT;
            else if (side == "RIGHT")
                p.dof.side = Side::RIGHT;
            else
                throw ParseError("unknown DoF side: " + side);
        } else {
            p.dof.name = parse_dof_name(dof);
        }
        p.rest_deg = j.at("rest_deg").get<double>();
        p.flx_limit_deg = j.at("flx_limit_deg").get<double>();
        p.ext_limit_deg = j.at("ext_limit_deg").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("profile file field error: ") + e.what());
    }
    p.validate();
    return p;
}

} // namespace epikin
