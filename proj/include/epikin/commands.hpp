#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "epikin/calibration.hpp"
#include "epikin/eaf.hpp"
#include "epikin/epistemic.hpp"
#include "epikin/errors.hpp"
#include "epikin/kinematics.hpp"
#include "epikin/markers.hpp"
#include "epikin/pose.hpp"
#include "epikin/svg_plot.hpp"
#include "epikin/synth.hpp"
#include "epikin/typannot.hpp"

namespace epikin {

/// Everything a command invocation needs; the CLI fills this from flags.
struct RunConfig {
    std::string pose_path;
    std::string eaf_path;
    std::string eaf_b_path; // second annotator file for `agree`
    std::string profile_path;
    std::string spec_path; // trajectory spec for `synth-test`
    std::string out_dir = ".";

    std::string schema = "coco17";
    double fps = 25.0;
    std::string estimator = "proxy";

    bool has_region = false;
    DetectionRegion region;

    int smooth_window = 5;
    long max_gap_frames = 5;
    double min_run_s = 0.2;
    double noise_sigma_p = -1; // synth-test override; < 0 keeps the trajectory spec value

    std::string tier_episteme = "EPISTEME";
    std::string tier_calib = "CALIB";
    std::string subject; // expected profile subject; empty skips the check

    DetectorConfig detector;
};

namespace detail {

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const CalibrationError& e) {
        throw CalibrationError(std::string(name) + ": " + e.what());
    } catch (const InternalError& e) {
        throw InternalError(std::string(name) + ": " + e.what());
    } catch (const Error& e) {
        throw Error(std::string(name) + ": " + e.what());
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Write-then-rename so readers never observe a half-written file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

struct LoadedSeries {
    AngleSeries angles; // smoothed
    VelocitySeries vel;
};

inline LoadedSeries load_series(const RunConfig& cfg) {
    return stage("pose", [&]() -> LoadedSeries {
        const KeypointSchema& schema = KeypointSchema::by_name(cfg.schema);
        const std::vector<PoseTrack> tracks =
            parse_pose_file(read_file(cfg.pose_path), schema, cfg.fps);
        if (tracks.empty()) throw Error("pose file contains no detections");
        const PoseTrack* chosen = nullptr;
        if (cfg.has_region) {
            chosen = &select_subject(tracks, cfg.region);
        } else {
            // Without a region pick the most prominent person: largest mean box.
            double best_area = -1;
            for (const auto& t : tracks) {
                if (t.frames.empty()) continue;
                double area = 0;
                for (const auto& f : t.frames) area += f.bbox.area();
                area /= static_cast<double>(t.frames.size());
                if (area > best_area) {
                    best_area = area;
                    chosen = &t;
                }
            }
            if (!chosen) throw Error("pose file contains no usable track");
        }
        const PoseTrack filled = fill_gaps(*chosen, cfg.max_gap_frames);
        AngleSeries raw = angle_series(filled, parse_estimator(cfg.estimator));
        LoadedSeries out;
        out.angles = smooth(raw, cfg.smooth_window);
        out.vel = velocity(out.angles);
        return out;
    });
}

inline std::vector<Landmark> landmarks_from_tier(const EafTier& tier) {
    std::vector<Landmark> out;
    for (const auto& a : tier.annotations) {
        const double mid_s = (static_cast<double>(a.start_ms) + static_cast<double>(a.end_ms)) /
                             2000.0;
        if (a.value == "REST")
            out.push_back({LandmarkLabel::REST, mid_s});
        else if (a.value == "FLX_LIMIT")
            out.push_back({LandmarkLabel::FLX_LIMIT, mid_s});
        else if (a.value == "EXT_LIMIT")
            out.push_back({LandmarkLabel::EXT_LIMIT, mid_s});
    }
    return out;
}

} // namespace detail

/// Build a calibration profile from the pose file and the landmark tier,
/// write it as JSON, and return the raw-degree/notch correspondence table.
inline std::string cmd_calibrate(const RunConfig& cfg) {
    detail::LoadedSeries series = detail::load_series(cfg);

    const std::vector<Landmark> landmarks = detail::stage("eaf", [&] {
        const EafDocument doc = read_eaf(detail::read_file(cfg.eaf_path));
        const EafTier* tier = doc.find_tier(cfg.tier_calib);
        if (!tier) throw NotFoundError("no tier named " + cfg.tier_calib + " in " + cfg.eaf_path);
        return detail::landmarks_from_tier(*tier);
    });

    CalibrationProfile profile = detail::stage("calibrate", [&] {
        CalibrationProfile p = build_profile(series.angles, landmarks);
        if (!cfg.subject.empty()) p.subject_id = cfg.subject;
        return p;
    });

    detail::write_file_atomic(std::filesystem::path(cfg.out_dir) / "profile.json",
                              profile_to_json(profile));

    std::ostringstream out;
    out << "calibration profile for subject " << profile.subject_id << " ("
        << to_string(profile.segment) << ":" << to_string(profile.dof.name) << ")\n";
    out << "  rest " << detail::fixed(profile.rest_deg, 1) << " deg, flexion limit "
        << detail::fixed(profile.flx_limit_deg, 1) << " deg, extension limit "
        << detail::fixed(profile.ext_limit_deg, 1) << " deg\n";
    if (profile.inverted_orientation())
        out << "  warning: inverted raw orientation (flexion decreases raw degrees)\n";
    out << "  notch ranges (raw degrees):\n";
    const double band[] = {-1.0, -0.875, -0.625, -0.375, -0.125, 0.125, 0.375, 0.625, 0.875, 1.0};
    for (int i = 0; i < 9; ++i) {
        const double lo = denormalize(band[i], profile);
        const double hi = denormalize(band[i + 1], profile);
        out << "    " << to_string(static_cast<Notch>(i)) << ": " << detail::fixed(lo, 1) << " .. "
            << detail::fixed(hi, 1) << "\n";
    }
    out << "  anchors:\n";
    out << "    " << detail::fixed(profile.flx_limit_deg, 1) << " deg -> "
        << to_string(notch_of(normalize(profile.flx_limit_deg, profile))) << "\n";
    out << "    " << detail::fixed(profile.rest_deg, 1) << " deg -> "
        << to_string(notch_of(normalize(profile.rest_deg, profile))) << "\n";
    out << "    " << detail::fixed(profile.ext_limit_deg, 1) << " deg -> "
        << to_string(notch_of(normalize(profile.ext_limit_deg, profile))) << "\n";
    return out.str();
}

/// Full pipeline: keypoints -> angle -> normalized/notched series -> markers
/// -> per-segment epistemic labels. Writes series.csv, events.csv,
/// records.txt, annotations.eaf and summary.txt into the output directory.
inline std::string cmd_analyze(const RunConfig& cfg) {
    detail::LoadedSeries series = detail::load_series(cfg);

    const CalibrationProfile profile = detail::stage("profile", [&] {
        CalibrationProfile p = profile_from_json(detail::read_file(cfg.profile_path));
        if (!cfg.subject.empty() && p.subject_id != cfg.subject)
            throw MismatchError("profile subject is " + p.subject_id + ", expected " + cfg.subject);
        return p;
    });
    series.angles.subject_id = profile.subject_id;
    series.vel.subject_id = profile.subject_id;

    const NormalizedSeries norm = detail::stage(
        "normalize", [&] { return normalize_series(series.angles, profile); });
    const std::vector<MarkerEvent> events =
        detail::stage("detect", [&] { return detect_all(norm, series.vel, cfg.detector); });
    const std::vector<TypannotRecord> records =
        detail::stage("notch", [&] { return series_to_records(norm, cfg.min_run_s); });

    // Manual segments, or the whole file when no usable tier exists.
    struct ManualSegment {
        double start_s, end_s;
        std::string label;
    };
    std::vector<ManualSegment> manual;
    if (!cfg.eaf_path.empty()) {
        detail::stage("eaf", [&] {
            const EafDocument doc = read_eaf(detail::read_file(cfg.eaf_path));
            if (const EafTier* tier = doc.find_tier(cfg.tier_episteme))
                for (const auto& a : tier->annotations)
                    manual.push_back({static_cast<double>(a.start_ms) / 1000.0,
                                      static_cast<double>(a.end_ms) / 1000.0, a.value});
            return 0;
        });
    }
    if (manual.empty()) {
        const double t0 = norm.samples.front().t_s;
        const double t1 = norm.samples.back().t_s + 1.0 / norm.fps;
        manual.push_back({t0, t1, ""});
    }

    std::vector<EpistemicSegment> predictions;
    for (const auto& m : manual)
        predictions.push_back(score_segment(m.start_s, m.end_s, events, cfg.detector));

    // Generated annotation tiers. Marker kinds go to separate tiers so each
    // tier stays non-overlapping.
    EafDocument out_doc;
    out_doc.media_url = cfg.pose_path;
    auto ms = [](double s) { return static_cast<long>(std::llround(s * 1000.0)); };
    EafTier holds_tier{"MARKERS_HOLD", {}}, nods_tier{"MARKERS_NOD", {}},
        speed_tier{"MARKERS_SPEED", {}};
    for (const auto& e : events) {
        EafAnnotation a{ms(e.start_s), ms(e.end_s), event_short_form(e)};
        if (a.start_ms >= a.end_ms) continue;
        if (e.kind == MarkerKind::HOLD) holds_tier.annotations.push_back(a);
        if (e.kind == MarkerKind::NOD_BURST) nods_tier.annotations.push_back(a);
        if (e.kind == MarkerKind::SPEED_BAND) speed_tier.annotations.push_back(a);
    }
    EafTier notches_tier{"NOTCHES", {}};
    for (const auto& r : records) {
        EafAnnotation a{ms(r.start_s), ms(r.end_s), detail::notch_name(r.notch, r.dof.name)};
        if (a.start_ms < a.end_ms) notches_tier.annotations.push_back(a);
    }
    EafTier pred_tier{"PREDICTION", {}};
    for (const auto& p : predictions) {
        EafAnnotation a{ms(p.start_s), ms(p.end_s), to_string(p.label)};
        if (a.start_ms < a.end_ms) pred_tier.annotations.push_back(a);
    }
    out_doc.tiers = {holds_tier, nods_tier, speed_tier, notches_tier, pred_tier};

    std::string records_txt;
    for (const auto& r : records) records_txt += encode(r) + "\n";

    std::ostringstream summary;
    summary << "subject " << profile.subject_id << ", " << norm.samples.size() << " samples at "
            << detail::fixed(norm.fps, 2) << " fps\n";
    summary << events.size() << " marker events, " << predictions.size() << " segments\n";
    for (size_t i = 0; i < predictions.size(); ++i) {
        const auto& p = predictions[i];
        summary << "segment " << detail::fixed(p.start_s, 2) << "-" << detail::fixed(p.end_s, 2)
                << " s";
        if (!manual[i].label.empty()) summary << " (manual " << manual[i].label << ")";
        summary << ": " << to_string(p.label) << " cert=" << p.cert_score
                << " incert=" << p.incert_score << "\n";
        for (const auto& ev : p.evidence)
            summary << "  " << ev.rule << ": " << event_short_form(ev.event) << " @ "
                    << detail::fixed(ev.event.start_s, 2) << "-" << detail::fixed(ev.event.end_s, 2)
                    << " s\n";
    }

    const std::filesystem::path out(cfg.out_dir);
    detail::write_file_atomic(out / "series.csv", series_csv(series.angles, series.vel));
    detail::write_file_atomic(out / "events.csv", events_csv(events));
    detail::write_file_atomic(out / "records.txt", records_txt);
    detail::write_file_atomic(out / "annotations.eaf", write_eaf(out_doc));
    detail::write_file_atomic(out / "summary.txt", summary.str());
    return summary.str();
}

/// Render the position/velocity chart with marker boxes to plot.svg.
inline std::string cmd_plot(const RunConfig& cfg) {
    detail::LoadedSeries series = detail::load_series(cfg);
    const CalibrationProfile profile =
        detail::stage("profile", [&] { return profile_from_json(detail::read_file(cfg.profile_path)); });
    series.angles.subject_id = profile.subject_id;
    const NormalizedSeries norm = detail::stage(
        "normalize", [&] { return normalize_series(series.angles, profile); });
    const std::vector<MarkerEvent> events =
        detail::stage("detect", [&] { return detect_all(norm, series.vel, cfg.detector); });
    const std::string svg = render_plot_svg(norm, series.vel, events, cfg.detector);
    detail::write_file_atomic(std::filesystem::path(cfg.out_dir) / "plot.svg", svg);
    return "wrote plot.svg (" + std::to_string(events.size()) + " marker boxes)\n";
}

/// Inter-annotator agreement between the same-named tier of two files.
inline std::string cmd_agree(const RunConfig& cfg) {
    return detail::stage("agree", [&]() -> std::string {
        const EafDocument a = read_eaf(detail::read_file(cfg.eaf_path));
        const EafDocument b = read_eaf(detail::read_file(cfg.eaf_b_path));
        const EafTier* ta = a.find_tier(cfg.tier_episteme);
        const EafTier* tb = b.find_tier(cfg.tier_episteme);
        if (!ta) throw NotFoundError("no tier named " + cfg.tier_episteme + " in " + cfg.eaf_path);
        if (!tb) throw NotFoundError("no tier named " + cfg.tier_episteme + " in " + cfg.eaf_b_path);
        const AgreementReport report = agreement(*ta, *tb, cfg.fps);
        return report.to_text();
    });
}

/// Run detector evaluation against planted ground truth: the bundled fixture
/// suite, or one spec file when given. Prints a per-kind precision/recall
/// table.
inline std::string cmd_synth_test(const RunConfig& cfg) {
    return detail::stage("synth", [&]() -> std::string {
        std::vector<synth::TrajectorySpec> specs;
        if (!cfg.spec_path.empty())
            specs.push_back(synth::spec_from_json(detail::read_file(cfg.spec_path)));
        else
            specs = synth::fixture_suite();

        const CalibrationProfile profile = synth::reference_profile();
        std::map<MarkerKind, synth::PrStats> totals;
        std::ostringstream out;
        out << "spec                          kind   prec   recall\n";
        for (auto spec : specs) {
            if (cfg.noise_sigma_p >= 0) spec.noise_sigma_p = cfg.noise_sigma_p;
            const synth::SynthResult r = synth::generate(spec, profile, cfg.detector);
            NormalizedSeries norm = r.norm;
            VelocitySeries vel = r.vel;
            if (spec.noise_sigma_p > 0) {
                // Noisy data goes through the regular smoothing front end.
                const AngleSeries sm = smooth(r.raw, cfg.smooth_window);
                vel = velocity(sm);
                norm = normalize_series(sm, profile);
            }
            const std::vector<MarkerEvent> events = detect_all(norm, vel, cfg.detector);
            const auto stats = synth::evaluate(events, r.truth);
            for (const auto& [kind, st] : stats) {
                totals[kind].matched += st.matched;
                totals[kind].detected += st.detected;
                totals[kind].truth += st.truth;
                if (st.truth == 0 && st.detected == 0) continue;
                out << spec.name;
                for (size_t i = spec.name.size(); i < 30; ++i) out << ' ';
                out << to_string(kind);
                for (size_t i = std::string(to_string(kind)).size(); i < 7; ++i) out << ' ';
                out << detail::fixed(st.precision(), 3) << "  " << detail::fixed(st.recall(), 3)
                    << "\n";
            }
        }
        out << "totals:\n";
        for (const auto& [kind, st] : totals) {
            out << "  " << to_string(kind);
            for (size_t i = std::string(to_string(kind)).size(); i < 7; ++i) out << ' ';
            out << "precision " << detail::fixed(st.precision(), 3) << "  recall "
                << detail::fixed(st.recall(), 3) << "  f1 " << detail::fixed(st.f1(), 3) << "\n";
        }
        return out.str();
    });
}

} // namespace epikin
