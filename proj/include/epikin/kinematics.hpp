#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "epikin/errors.hpp"
#include "epikin/format.hpp"
#include "epikin/pose.hpp"

namespace epikin {

enum class SegmentId { COU, TETE, EPAULES, BUSTE };

enum class Side { NONE, LEFT, RIGHT };

enum class DofName { FLXEXT, ABDADD, RINREX };

/// One degree of freedom of a body segment: a rotation direction with two
/// opposite senses. The side qualifier only applies to lateral DoFs of the
/// neck and torso.
struct DofId {
    DofName name = DofName::FLXEXT;
    Side side = Side::NONE;

    friend bool operator==(const DofId&, const DofId&) = default;
};

inline const char* to_string(SegmentId s) {
    switch (s) {
        case SegmentId::COU: return "COU";
        case SegmentId::TETE: return "TETE";
        case SegmentId::EPAULES: return "EPAULES";
        case SegmentId::BUSTE: return "BUSTE";
    }
    return "?";
}

inline const char* to_string(DofName d) {
    switch (d) {
        case DofName::FLXEXT: return "FLXEXT";
        case DofName::ABDADD: return "ABDADD";
        case DofName::RINREX: return "RINREX";
    }
    return "?";
}

inline const char* to_string(Side s) {
    switch (s) {
        case Side::NONE: return "NONE";
        case Side::LEFT: return "LEFT";
        case Side::RIGHT: return "RIGHT";
    }
    return "?";
}

inline SegmentId parse_segment(std::string_view s) {
    if (s == "COU") return SegmentId::COU;
    if (s == "TETE") return SegmentId::TETE;
    if (s == "EPAULES") return SegmentId::EPAULES;
    if (s == "BUSTE") return SegmentId::BUSTE;
    throw ParseError("unknown segment: " + std::string(s));
}

inline DofName parse_dof_name(std::string_view s) {
    if (s == "FLXEXT") return DofName::FLXEXT;
    if (s == "ABDADD") return DofName::ABDADD;
    if (s == "RINREX") return DofName::RINREX;
    throw ParseError("unknown DoF: " + std::string(s));
}

enum class Quality { GOOD, LOW_CONFIDENCE, INTERPOLATED };

inline const char* to_string(Quality q) {
    switch (q) {
        case Quality::GOOD: return "GOOD";
        case Quality::LOW_CONFIDENCE: return "LOW_CONFIDENCE";
        case Quality::INTERPOLATED: return "INTERPOLATED";
    }
    return "?";
}

struct AngleSample {
    double t_s = 0;
    double theta_deg = 0;
    Quality quality = Quality::GOOD;
};

struct AngleSeries {
    std::string subject_id;
    SegmentId segment = SegmentId::COU;
    DofId dof{};
    double fps = 25.0;
    std::vector<AngleSample> samples;
};

struct VelocitySample {
    double t_s = 0;
    double v_deg_s = 0;
};

struct VelocitySeries {
    std::string subject_id;
    SegmentId segment = SegmentId::COU;
    DofId dof{};
    double fps = 25.0;
    std::vector<VelocitySample> samples;
};

/// How the raw neck angle is read off a 2D skeleton.
/// SAGITTAL_PROXY suits frontal video: 100 * (vertical nose-to-neck drop) /
/// (inter-shoulder distance), dimensionless but reported in "degrees" of the
/// raw per-subject scale. INTERIOR_ANGLE suits profile video: the angle at
/// the neck between the head point and the mid-hip, in true degrees.
enum class AngleEstimator { SAGITTAL_PROXY, INTERIOR_ANGLE };

inline AngleEstimator parse_estimator(std::string_view s) {
    if (s == "proxy" || s == "sagittal_proxy") return AngleEstimator::SAGITTAL_PROXY;
    if (s == "interior" || s == "interior_angle") return AngleEstimator::INTERIOR_ANGLE;
    throw ArgumentError("unknown estimator: " + std::string(s));
}

namespace detail {

constexpr double kMinKeypointConfidence = 0.3;

inline const Keypoint& require_point(const KeypointFrame& frame, int index, const char* role) {
    if (index < 0 || index >= static_cast<int>(frame.points.size()))
        throw EstimationError(std::string("required keypoint absent from schema: ") + role);
    const Keypoint& p = frame.points[static_cast<size_t>(index)];
    if (!(std::isfinite(p.x) && std::isfinite(p.y)) || p.confidence <= 0.0)
        throw EstimationError(std::string("required keypoint missing: ") + role);
    return p;
}

} // namespace detail

/// Raw neck flexion/extension angle for one frame.
inline AngleSample neck_flxext_angle(const KeypointFrame& frame, const KeypointSchema& schema,
                                     AngleEstimator estimator) {
    AngleSample out;
    out.t_s = frame.timestamp_s;

    const Keypoint& nose = detail::require_point(frame, schema.nose, "nose");
    const Keypoint& lsh = detail::require_point(frame, schema.left_shoulder, "left_shoulder");
    const Keypoint& rsh = detail::require_point(frame, schema.right_shoulder, "right_shoulder");

    double min_conf = std::min({nose.confidence, lsh.confidence, rsh.confidence});

    double neck_x, neck_y;
    if (schema.neck >= 0) {
        const Keypoint& neck = detail::require_point(frame, schema.neck, "neck");
        neck_x = neck.x;
        neck_y = neck.y;
        min_conf = std::min(min_conf, neck.confidence);
    } else {
        neck_x = (lsh.x + rsh.x) / 2.0;
        neck_y = (lsh.y + rsh.y) / 2.0;
    }

    if (estimator == AngleEstimator::SAGITTAL_PROXY) {
        const double s = std::hypot(lsh.x - rsh.x, lsh.y - rsh.y);
        if (s == 0) throw EstimationError("degenerate geometry: zero inter-shoulder distance");
        // Image y grows downward, so a head above the neck gives d_y > 0.
        const double d_y = neck_y - nose.y;
        out.theta_deg = 100.0 * d_y / s;
    } else {
        double hip_x, hip_y;
        if (schema.mid_hip >= 0) {
            const Keypoint& hip = detail::require_point(frame, schema.mid_hip, "mid_hip");
            hip_x = hip.x;
            hip_y = hip.y;
            min_conf = std::min(min_conf, hip.confidence);
        } else {
            const Keypoint& lhip = detail::require_point(frame, schema.left_hip, "left_hip");
            const Keypoint& rhip = detail::require_point(frame, schema.right_hip, "right_hip");
            hip_x = (lhip.x + rhip.x) / 2.0;
            hip_y = (lhip.y + rhip.y) / 2.0;
            min_conf = std::min({min_conf, lhip.confidence, rhip.confidence});
        }
        const double ax = nose.x - neck_x, ay = nose.y - neck_y;
        const double bx = hip_x - neck_x, by = hip_y - neck_y;
        const double na = std::hypot(ax, ay), nb = std::hypot(bx, by);
        if (na == 0 || nb == 0)
            throw EstimationError("degenerate geometry: coincident keypoints at the neck");
        double c = (ax * bx + ay * by) / (na * nb);
        c = std::clamp(c, -1.0, 1.0);
        out.theta_deg = std::acos(c) * 180.0 / std::numbers::pi;
    }

    if (min_conf < detail::kMinKeypointConfidence)
        out.quality = Quality::LOW_CONFIDENCE;
    else if (frame.interpolated)
        out.quality = Quality::INTERPOLATED;
    else
        out.quality = Quality::GOOD;
    return out;
}

/// Angle per frame over a whole track. Per-frame estimation failures never
/// abort the series: the failed sample holds the previous value and is
/// flagged LOW_CONFIDENCE (leading failures take the first estimable value).
inline AngleSeries angle_series(const PoseTrack& track, AngleEstimator estimator) {
    if (track.frames.empty()) throw ArgumentError("angle_series: empty track");
    const KeypointSchema& schema = track.schema == KeypointSchema::Name::COCO17
                                       ? KeypointSchema::coco17()
                                       : KeypointSchema::halpe26();
    AngleSeries out;
    out.subject_id = std::to_string(track.person_id);
    out.segment = SegmentId::COU;
    out.dof = DofId{DofName::FLXEXT, Side::NONE};
    out.fps = track.fps;
    out.samples.reserve(track.frames.size());

    size_t leading_failures = 0;
    bool have_value = false;
    size_t good_count = 0;
    for (const auto& frame : track.frames) {
        AngleSample s;
        try {
            s = neck_flxext_angle(frame, schema, estimator);
            if (!have_value) {
                // Backfill any leading failed samples with the first estimate.
                for (size_t k = 0; k < leading_failures; ++k)
                    out.samples[k].theta_deg = s.theta_deg;
                have_value = true;
            }
        } catch (const EstimationError&) {
            s.t_s = frame.timestamp_s;
            s.quality = Quality::LOW_CONFIDENCE;
            s.theta_deg = have_value ? out.samples.back().theta_deg : 0.0;
            if (!have_value) ++leading_failures;
        }
        if (s.quality == Quality::GOOD) ++good_count;
        out.samples.push_back(s);
    }
    if (good_count == 0) throw ArgumentError("angle_series: no usable frames in track");
    return out;
}

/// Centered moving average; the window is clipped at the series edges.
inline AngleSeries smooth(const AngleSeries& series, int window_frames) {
    if (window_frames < 1 || window_frames % 2 == 0)
        throw ArgumentError("smoothing window must be a positive odd frame count");
    AngleSeries out = series;
    if (window_frames == 1) return out;
    const int h = window_frames / 2;
    const long n = static_cast<long>(series.samples.size());
    for (long i = 0; i < n; ++i) {
        const long lo = std::max(0L, i - h);
        const long hi = std::min(n - 1, i + h);
        double sum = 0;
        for (long j = lo; j <= hi; ++j) sum += series.samples[j].theta_deg;
        out.samples[i].theta_deg = sum / static_cast<double>(hi - lo + 1);
    }
    return out;
}

/// Time derivative in degrees/second: central differences inside, one-sided
/// at both ends. Exact on affine signals everywhere and on quadratics at
/// interior samples.
inline VelocitySeries velocity(const AngleSeries& series) {
    const long n = static_cast<long>(series.samples.size());
    if (n < 2) throw ArgumentError("velocity needs at least 2 samples");
    VelocitySeries out;
    out.subject_id = series.subject_id;
    out.segment = series.segment;
    out.dof = series.dof;
    out.fps = series.fps;
    out.samples.resize(series.samples.size());
    const double fps = series.fps;
    for (long i = 0; i < n; ++i) {
        out.samples[i].t_s = series.samples[i].t_s;
        if (i == 0)
            out.samples[i].v_deg_s = (series.samples[1].theta_deg - series.samples[0].theta_deg) * fps;
        else if (i == n - 1)
            out.samples[i].v_deg_s =
                (series.samples[n - 1].theta_deg - series.samples[n - 2].theta_deg) * fps;
        else
            out.samples[i].v_deg_s =
                (series.samples[i + 1].theta_deg - series.samples[i - 1].theta_deg) * fps / 2.0;
    }
    return out;
}

/// CSV of an angle series with its aligned velocity: `t_s,theta_deg,v_deg_s,quality`.
inline std::string series_csv(const AngleSeries& angles, const VelocitySeries& vel) {
    if (angles.samples.size() != vel.samples.size())
        throw MismatchError("series_csv: angle and velocity series differ in length");
    std::string out = "t_s,theta_deg,v_deg_s,quality\n";
    for (size_t i = 0; i < angles.samples.size(); ++i) {
        out += detail::fixed(angles.samples[i].t_s, 6);
        out += ',';
        out += detail::fixed(angles.samples[i].theta_deg, 6);
        out += ',';
        out += detail::fixed(vel.samples[i].v_deg_s, 6);
        out += ',';
        out += to_string(angles.samples[i].quality);
        out += '\n';
    }
    return out;
}

} // namespace epikin
