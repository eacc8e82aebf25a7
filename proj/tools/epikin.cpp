#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "epikin/commands.hpp"

namespace {

// Exit codes: 0 success, 2 input/parse error, 3 calibration error, 4 internal.
int run(int argc, char** argv) {
    CLI::App app{"epikin - neck flexion/extension kinematics and epistemic gesture markers"};
    app.require_subcommand(1);

    epikin::RunConfig cfg;
    std::string region_spec;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--schema", cfg.schema, "keypoint schema: coco17|halpe26")
            ->check(CLI::IsMember({"coco17", "halpe26"}));
        cmd->add_option("--fps", cfg.fps, "video frame rate (default 25)");
        cmd->add_option("--estimator", cfg.estimator, "angle estimator: proxy|interior")
            ->check(CLI::IsMember({"proxy", "interior"}));
        cmd->add_option("--region", region_spec, "subject detection region x,y,w,h (pixels)");
        cmd->add_option("--smooth", cfg.smooth_window, "odd smoothing window in frames (default 5)");
        cmd->add_option("--max-gap", cfg.max_gap_frames,
                        "longest dropped-frame gap to interpolate (default 5)");
        cmd->add_option("--out", cfg.out_dir, "output directory (default .)");
        cmd->add_option("--subject", cfg.subject, "expected subject id");
        cmd->add_option("--tier-episteme", cfg.tier_episteme,
                        "manual epistemic tier name (default EPISTEME)");
        cmd->add_option("--tier-calib", cfg.tier_calib,
                        "calibration landmark tier name (default CALIB)");
        cmd->add_option("--hold-min-s", cfg.detector.hold_min_s, "minimum hold duration (s)");
        cmd->add_option("--hold-vmax", cfg.detector.hold_v_max, "hold stillness bound (deg/s)");
        cmd->add_option("--speed-high", cfg.detector.speed_high, "high speed band cutoff (deg/s)");
        cmd->add_option("--speed-low", cfg.detector.speed_low, "low speed band cutoff (deg/s)");
        cmd->add_option("--min-run-s", cfg.min_run_s,
                        "shortest notch run kept in the transcription (s)");
    };

    CLI::App* calibrate = app.add_subcommand(
        "calibrate", "build a calibration profile from pose data and a CALIB landmark tier");
    calibrate->add_option("--pose", cfg.pose_path, "pose estimation results JSON")->required();
    calibrate->add_option("--eaf", cfg.eaf_path, "annotation file with the landmark tier")
        ->required();
    add_common(calibrate);

    CLI::App* analyze = app.add_subcommand(
        "analyze", "detect markers and label segments; writes CSV, EAF and summary files");
    analyze->add_option("--pose", cfg.pose_path, "pose estimation results JSON")->required();
    analyze->add_option("--profile", cfg.profile_path, "calibration profile JSON")->required();
    analyze->add_option("--eaf", cfg.eaf_path, "annotation file with manual epistemic segments");
    add_common(analyze);

    CLI::App* plot = app.add_subcommand("plot", "render the position/velocity SVG chart");
    plot->add_option("--pose", cfg.pose_path, "pose estimation results JSON")->required();
    plot->add_option("--profile", cfg.profile_path, "calibration profile JSON")->required();
    add_common(plot);

    CLI::App* agree = app.add_subcommand("agree", "inter-annotator agreement between two files");
    agree->add_option("--eaf-a", cfg.eaf_path, "first annotator's file")->required();
    agree->add_option("--eaf-b", cfg.eaf_b_path, "second annotator's file")->required();
    add_common(agree);

    CLI::App* synth = app.add_subcommand(
        "synth-test", "evaluate the detectors against planted synthetic trajectories");
    synth->add_option("--spec", cfg.spec_path, "trajectory spec JSON (default: bundled suite)");
    synth->add_option("--noise", cfg.noise_sigma_p, "override noise sigma (normalized p units)");
    add_common(synth);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (!region_spec.empty()) {
            double x, y, w, h;
            if (std::sscanf(region_spec.c_str(), "%lf,%lf,%lf,%lf", &x, &y, &w, &h) != 4)
                throw epikin::ArgumentError("--region expects x,y,w,h");
            cfg.region = epikin::DetectionRegion(x, y, w, h);
            cfg.has_region = true;
        }
        std::string report;
        if (calibrate->parsed()) report = epikin::cmd_calibrate(cfg);
        if (analyze->parsed()) report = epikin::cmd_analyze(cfg);
        if (plot->parsed()) report = epikin::cmd_plot(cfg);
        if (agree->parsed()) report = epikin::cmd_agree(cfg);
        if (synth->parsed()) report = epikin::cmd_synth_test(cfg);
        std::fputs(report.c_str(), stdout);
        return 0;
    } catch (const epikin::CalibrationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const epikin::InternalError& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 4;
    } catch (const epikin::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 4;
    }
}

} // namespace

int main(int argc, char** argv) {
    return run(argc, argv);
}
