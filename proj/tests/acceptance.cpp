// Acceptance suite: numeric end-to-end checks with pinned tolerances.
// Prints one PASS/FAIL line per criterion and exits nonzero on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "epikin/commands.hpp"
#include "synthetic_pose.hpp"

using namespace epikin;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void report(int criterion, const std::string& what, bool ok, double seconds = -1,
            double limit_s = -1) {
    if (limit_s > 0 && seconds > limit_s) ok = false;
    std::string line = ok ? "PASS" : "FAIL";
    line += " criterion " + std::to_string(criterion) + ": " + what;
    if (seconds >= 0) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), " (%.3f s", seconds);
        line += buf;
        if (limit_s > 0) {
            std::snprintf(buf, sizeof(buf), ", limit %.0f s", limit_s);
            line += buf;
        }
        line += ")";
    }
    std::puts(line.c_str());
    if (!ok) ++g_failures;
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

CalibrationProfile profile_of(const char* id, double rest, double flx, double ext) {
    CalibrationProfile p;
    p.subject_id = id;
    p.rest_deg = rest;
    p.flx_limit_deg = flx;
    p.ext_limit_deg = ext;
    return p;
}

synth::TrajectorySpec spec_of(std::vector<synth::TrajectoryPiece> pieces, double fps = 25) {
    synth::TrajectorySpec s;
    s.fps = fps;
    s.pieces = std::move(pieces);
    for (const auto& piece : s.pieces) s.duration_s += piece.duration_s;
    return s;
}

void criterion_1_speaker_correspondence() {
    Timer timer;
    bool ok = true;
    const CalibrationProfile fr = profile_of("FR", 104, 140, 88);
    const CalibrationProfile lsf = profile_of("LSF", 97, 137, 53);

    ok &= close(normalize(114, fr), 10.0 / 36.0, 1e-9);
    ok &= close(normalize(94, fr), -10.0 / 16.0, 1e-9);
    ok &= close(normalize(99.5, lsf), 2.5 / 40.0, 1e-9);
    ok &= close(normalize(60, lsf), -37.0 / 44.0, 1e-9);
    ok &= notch_of(normalize(114, fr)) == Notch::FLX_PETIT;
    ok &= notch_of(normalize(94, fr)) == Notch::EXT_GRAND;
    ok &= notch_of(normalize(99.5, lsf)) == Notch::NEUTRAL;
    ok &= notch_of(normalize(60, lsf)) == Notch::EXT_GRAND;
    report(1, "per-speaker normalization and notch correspondence", ok, timer.seconds(), 1.0);
}

void criterion_2_hold_threshold() {
    Timer timer;
    bool ok = true;
    using P = synth::TrajectoryPiece;
    const double frame = 1.0 / 25.0 + 1e-9;

    const auto held = synth::generate(
        spec_of({P::ramp(0, 0.5, 0.52), P::hold(0.5, 2.5), P::ramp(0.5, 0, 0.52)}),
        synth::reference_profile());
    const auto holds = detect_holds(held.norm, held.vel, DetectorConfig{});
    ok &= holds.size() == 1;
    if (holds.size() == 1) {
        ok &= close(holds[0].start_s, 0.52, frame);
        ok &= close(holds[0].end_s, 0.52 + 2.5, frame);
    }

    const auto brief = synth::generate(
        spec_of({P::ramp(0, 0.5, 0.52), P::hold(0.5, 1.9), P::ramp(0.5, 0, 0.52)}),
        synth::reference_profile());
    ok &= detect_holds(brief.norm, brief.vel, DetectorConfig{}).empty();
    report(2, "2.5 s hold detected within one frame; 1.9 s hold rejected", ok, timer.seconds(),
           1.0);
}

void criterion_3_nod_semantics() {
    bool ok = true;
    using P = synth::TrajectoryPiece;

    const auto four = synth::generate(
        spec_of({P::hold(0, 2.2), P::nod(0.05, 0.25, 4, 0.6), P::hold(0, 2.6)}),
        synth::reference_profile());
    const auto nods4 = detect_nods(four.norm, four.vel, DetectorConfig{});
    ok &= nods4.size() == 1 && nods4[0].cycles == 4;

    // Spans p in [-0.2, +0.3]: must cross the neutral band.
    const auto crossing = synth::generate(
        spec_of({P::hold(0.05, 2.2), P::nod(0.05, 0.25, 2, 0.6), P::hold(0.05, 2.2)}),
        synth::reference_profile());
    const auto nods_c = detect_nods(crossing.norm, crossing.vel, DetectorConfig{});
    ok &= nods_c.size() == 1 && nods_c[0].crosses_neutral;

    // Confined to [+0.15, +0.45]: must not.
    const auto confined = synth::generate(
        spec_of({P::hold(0.3, 2.2), P::nod(0.3, 0.15, 3, 0.48), P::hold(0.3, 2.2)}),
        synth::reference_profile());
    const auto nods_f = detect_nods(confined.norm, confined.vel, DetectorConfig{});
    ok &= nods_f.size() == 1 && !nods_f[0].crosses_neutral;
    report(3, "four-cycle burst counts 4; neutral crossing flagged correctly", ok);
}

void criterion_4_speed_bands() {
    bool ok = true;
    using P = synth::TrajectoryPiece;
    const double omega = 2.0 * std::numbers::pi / 0.6;

    const auto fast = synth::generate(spec_of({P::nod(0.05, 60.0 / (omega * 36.0), 6, 0.6)}),
                                      synth::reference_profile());
    const auto fast_holds = detect_holds(fast.norm, fast.vel, DetectorConfig{});
    ok &= speed_profile(fast.vel, fast_holds, DetectorConfig{}).band == SpeedBandClass::HIGH;

    const auto slow = synth::generate(spec_of({P::nod(0.05, 10.0 / (omega * 36.0), 6, 0.6)}),
                                      synth::reference_profile());
    const auto slow_holds = detect_holds(slow.norm, slow.vel, DetectorConfig{});
    ok &= speed_profile(slow.vel, slow_holds, DetectorConfig{}).band == SpeedBandClass::LOW;

    VelocitySeries exact40;
    exact40.fps = 25;
    for (long i = 0; i < 50; ++i) exact40.samples.push_back({i / 25.0, 40.0});
    const MarkerEvent mid = speed_profile(exact40, {}, DetectorConfig{});
    ok &= mid.stat_deg_s == 40.0 && mid.band == SpeedBandClass::MID;
    report(4, "60 deg/s -> HIGH, 10 deg/s -> LOW, exactly 40 -> MID", ok);
}

void criterion_5_oracle_equivalence() {
    Timer timer;
    bool ok = true;
    const CalibrationProfile profile = synth::reference_profile();
    const auto suite = synth::fixture_suite();
    ok &= suite.size() >= 20;

    for (const auto& s : suite) {
        const auto r = synth::generate(s, profile);
        const auto events = detect_all(r.norm, r.vel, DetectorConfig{});
        for (const auto& [kind, st] : synth::evaluate(events, r.truth, 0.5)) {
            if (st.precision() != 1.0 || st.recall() != 1.0) {
                std::printf("  clean %s %s: precision %.3f recall %.3f\n", s.name.c_str(),
                            to_string(kind), st.precision(), st.recall());
                ok = false;
            }
        }
    }

    std::map<MarkerKind, synth::PrStats> totals;
    std::uint32_t seed = 1;
    for (auto s : suite) {
        s.noise_sigma_p = 0.02;
        s.seed = seed++;
        const auto r = synth::generate(s, profile);
        const AngleSeries smoothed = smooth(r.raw, 5);
        const VelocitySeries vel = velocity(smoothed);
        const NormalizedSeries norm = normalize_series(smoothed, profile);
        for (const auto& [kind, st] :
             synth::evaluate(detect_all(norm, vel, DetectorConfig{}), r.truth, 0.5)) {
            totals[kind].matched += st.matched;
            totals[kind].detected += st.detected;
            totals[kind].truth += st.truth;
        }
    }
    for (const auto& [kind, st] : totals) {
        if (st.f1() < 0.9) {
            std::printf("  noisy %s: f1 %.3f\n", to_string(kind), st.f1());
            ok = false;
        }
    }
    report(5, "clean suite at precision=recall=1.0; noisy F1 >= 0.9 per kind", ok, timer.seconds(),
           10.0);
}

void criterion_6_velocity_correctness() {
    bool ok = true;

    // Exact match against an independently coded finite-difference oracle.
    AngleSeries wavy;
    wavy.fps = 25;
    for (int i = 0; i < 500; ++i)
        wavy.samples.push_back(
            {i / 25.0, 104 + 17 * std::sin(i * 0.173) + 2.5 * std::cos(i * 0.041), Quality::GOOD});
    const VelocitySeries v = velocity(wavy);
    const size_t n = wavy.samples.size();
    for (size_t i = 0; i < n; ++i) {
        double expected;
        if (i == 0)
            expected = (wavy.samples[1].theta_deg - wavy.samples[0].theta_deg) * 25.0;
        else if (i == n - 1)
            expected = (wavy.samples[n - 1].theta_deg - wavy.samples[n - 2].theta_deg) * 25.0;
        else
            expected =
                (wavy.samples[i + 1].theta_deg - wavy.samples[i - 1].theta_deg) * 25.0 / 2.0;
        if (v.samples[i].v_deg_s != expected) ok = false;
    }

    // Analytic derivatives: affine everywhere, quadratic at interior samples.
    AngleSeries affine;
    affine.fps = 25;
    for (int i = 0; i < 100; ++i)
        affine.samples.push_back({i / 25.0, 104 + 20 * (i / 25.0), Quality::GOOD});
    for (const auto& s : velocity(affine).samples)
        if (!close(s.v_deg_s, 20.0, 1e-9)) ok = false;

    AngleSeries quad;
    quad.fps = 25;
    for (int i = 0; i < 100; ++i) {
        const double t = i / 25.0;
        quad.samples.push_back({t, t * t, Quality::GOOD});
    }
    const VelocitySeries qv = velocity(quad);
    for (size_t i = 1; i + 1 < qv.samples.size(); ++i)
        if (!close(qv.samples[i].v_deg_s, 2 * qv.samples[i].t_s, 1e-9)) ok = false;

    report(6, "velocity equals the finite-difference oracle and analytic derivatives", ok);
}

void criterion_7_round_trips() {
    bool ok = true;

    // Codec identity across the legal record space (>= 10^4 combinations).
    long count = 0;
    using C = ProsodicQualifier::Contrast;
    for (SegmentId seg : {SegmentId::COU, SegmentId::TETE, SegmentId::EPAULES, SegmentId::BUSTE})
        for (DofName dof : {DofName::FLXEXT, DofName::ABDADD, DofName::RINREX})
            for (Side side : {Side::NONE, Side::LEFT, Side::RIGHT}) {
                if (side != Side::NONE && (dof == DofName::FLXEXT || seg == SegmentId::TETE))
                    continue;
                for (int notch = 0; notch <= 8; ++notch)
                    for (C v : {C::NONE, C::PLUS, C::MINUS})
                        for (C a : {C::NONE, C::PLUS, C::MINUS})
                            for (int rep : {0, 1, 2, 3, 5, 9, 16}) {
                                TypannotRecord r;
                                r.segment = seg;
                                r.dof = DofId{dof, side};
                                r.notch = static_cast<Notch>(notch);
                                r.qualifiers.speed_contrast = v;
                                r.qualifiers.amplitude_contrast = a;
                                if (rep > 0) r.qualifiers.repetitions = rep;
                                r.start_s = 3.12;
                                r.end_s = 9.96;
                                if (!(decode(encode(r)) == r)) ok = false;
                                ++count;
                            }
            }
    ok &= count >= 10000;

    // EAF write -> read at millisecond resolution.
    EafDocument doc;
    doc.media_url = "video.mp4";
    doc.tiers.push_back({"EPISTEME", {{0, 1501, "CERT"}, {2003, 4757, "INCERT"}}});
    doc.tiers.push_back({"CALIB", {{100, 301, "REST"}, {1200, 1401, "FLX_LIMIT"},
                                   {2200, 2401, "EXT_LIMIT"}}});
    const EafDocument back = read_eaf(write_eaf(doc));
    ok &= back.tiers.size() == 2;
    const EafTier* episteme = back.find_tier("EPISTEME");
    const EafTier* calib = back.find_tier("CALIB");
    ok &= episteme && calib;
    if (episteme) ok &= episteme->annotations == doc.tiers[0].annotations;
    if (calib) ok &= calib->annotations == doc.tiers[1].annotations;

    std::ostringstream what;
    what << "codec sweep (" << count << " records) and EAF round trip";
    report(7, what.str(), ok);
}

void criterion_8_classifier_rules() {
    bool ok = true;

    MarkerEvent nod;
    nod.kind = MarkerKind::NOD_BURST;
    nod.start_s = 1;
    nod.end_s = 3;
    nod.cycles = 4;
    nod.crosses_neutral = true;
    MarkerEvent hold;
    hold.kind = MarkerKind::HOLD;
    hold.start_s = 4;
    hold.end_s = 6.5;
    hold.duration_s = 2.5;
    hold.non_neutral = true;
    hold.median_notch = Notch::FLX_MOYEN;
    auto band = [](SpeedBandClass b) {
        MarkerEvent e;
        e.kind = MarkerKind::SPEED_BAND;
        e.start_s = 0;
        e.end_s = 10;
        e.band = b;
        return e;
    };

    const EpistemicSegment cert =
        score_segment(0, 10, {nod, band(SpeedBandClass::HIGH)}, DetectorConfig{});
    ok &= cert.label == EpistemicLabel::CERT && cert.cert_score == 2 && cert.incert_score == 0;

    const EpistemicSegment incert =
        score_segment(0, 10, {hold, band(SpeedBandClass::LOW)}, DetectorConfig{});
    ok &= incert.label == EpistemicLabel::INCERT && incert.incert_score == 2;

    const EpistemicSegment empty = score_segment(0, 10, {}, DetectorConfig{});
    ok &= empty.label == EpistemicLabel::UNDETERMINED && empty.cert_score == 0 &&
          empty.incert_score == 0;

    const EpistemicSegment tie =
        score_segment(0, 10, {nod, hold, band(SpeedBandClass::MID)}, DetectorConfig{});
    ok &= tie.label == EpistemicLabel::UNDETERMINED && tie.cert_score == 1 && tie.incert_score == 1;

    // Corpus summary engineered to the reported uncertainty counts.
    std::vector<LabeledSegment> corpus;
    for (int i = 0; i < 20; ++i) {
        LabeledSegment seg;
        seg.language = "ALL";
        seg.label = EpistemicLabel::INCERT;
        if (i < 15) {
            MarkerEvent h = hold;
            h.non_neutral = i < 10;
            h.median_notch = i < 10 ? Notch::FLX_MOYEN : Notch::NEUTRAL;
            seg.events.push_back(h);
        }
        corpus.push_back(seg);
    }
    const CorpusSummary summary = summarize_corpus(corpus);
    const auto& cell = summary.cells.at({"ALL", "INCERT"});
    ok &= CorpusSummary::fraction(cell.with_hold, cell.segments) == "15/20";
    ok &= CorpusSummary::fraction(cell.with_non_neutral_hold, cell.segments) == "10/20";
    const std::string text = summary.to_text();
    ok &= text.find("15/20") != std::string::npos && text.find("10/20") != std::string::npos;

    report(8, "score_segment rule examples and the 15/20, 10/20 summary cells", ok);
}

void criterion_9_determinism() {
    bool ok = true;
    const fs::path dir = fs::temp_directory_path() / "epikin_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);

    const CalibrationProfile profile = synth::reference_profile();
    std::vector<double> thetas;
    for (long i = 0; i < 60; ++i) thetas.push_back(104);
    for (long i = 0; i < 60; ++i) {
        const double t = i / 25.0;
        thetas.push_back(denormalize(0.05 + 0.25 * std::sin(2 * std::numbers::pi * t / 0.6),
                                     profile));
    }
    for (long i = 0; i < 60; ++i) thetas.push_back(denormalize(0.5, profile));

    {
        std::ofstream pose(dir / "pose.json", std::ios::binary);
        pose << testutil::pose_json_from_thetas(thetas);
    }
    {
        std::ofstream prof(dir / "profile.json", std::ios::binary);
        prof << profile_to_json(profile);
    }

    RunConfig cfg;
    cfg.pose_path = (dir / "pose.json").string();
    cfg.profile_path = (dir / "profile.json").string();

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    cfg.out_dir = (dir / "a").string();
    cmd_analyze(cfg);
    cmd_plot(cfg);
    cfg.out_dir = (dir / "b").string();
    cmd_analyze(cfg);
    cmd_plot(cfg);

    for (const char* name : {"series.csv", "events.csv", "records.txt", "annotations.eaf",
                             "summary.txt", "plot.svg"}) {
        if (slurp(dir / "a" / name) != slurp(dir / "b" / name)) {
            std::printf("  %s differs between runs\n", name);
            ok = false;
        }
    }
    report(9, "cmd_analyze and cmd_plot are byte-identical across runs", ok);
}

} // namespace

int main() {
    try {
        criterion_1_speaker_correspondence();
        criterion_2_hold_threshold();
        criterion_3_nod_semantics();
        criterion_4_speed_bands();
        criterion_5_oracle_equivalence();
        criterion_6_velocity_correctness();
        criterion_7_round_trips();
        criterion_8_classifier_rules();
        criterion_9_determinism();
    } catch (const std::exception& e) {
        std::printf("FAIL unhandled exception: %s\n", e.what());
        return 1;
    }
    if (g_failures == 0) std::puts("all acceptance criteria passed");
    return g_failures == 0 ? 0 : 1;
}
