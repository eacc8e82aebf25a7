#include <catch2/catch_amalgamated.hpp>

#include <optional>
#include <vector>

#include "epikin/typannot.hpp"

using namespace epikin;

namespace {

TypannotRecord minimal_record() {
    TypannotRecord r;
    r.segment = SegmentId::COU;
    r.dof = DofId{DofName::FLXEXT, Side::NONE};
    r.notch = Notch::NEUTRAL;
    r.start_s = 0;
    r.end_s = 1;
    return r;
}

NormalizedSeries series_from_notch_levels(const std::vector<std::pair<double, double>>& level_dur,
                                          double fps = 25) {
    NormalizedSeries n;
    n.fps = fps;
    double t = 0;
    for (const auto& [p, dur] : level_dur) {
        const long count = static_cast<long>(dur * fps + 0.5);
        for (long i = 0; i < count; ++i) {
            n.samples.push_back({t, p, notch_of(p), Quality::GOOD});
            t += 1.0 / fps;
        }
    }
    return n;
}

} // namespace

TEST_CASE("encode: minimal record") {
    CHECK(encode(minimal_record()) == "COU:FLXEXT=NEUTRAL@0.00-1.00");
}

TEST_CASE("encode: the four-small-nods episode record") {
    TypannotRecord r = minimal_record();
    r.notch = Notch::FLX_PETIT;
    r.qualifiers.speed_contrast = ProsodicQualifier::Contrast::PLUS;
    r.qualifiers.repetitions = 4;
    r.start_s = 105.0;
    r.end_s = 107.5;
    CHECK(encode(r) == "COU:FLXEXT=FLX_PETIT;v+;x4@105.00-107.50");
}

TEST_CASE("encode rejects an illegal side") {
    TypannotRecord r = minimal_record();
    r.dof.side = Side::LEFT; // FLXEXT takes no side
    CHECK_THROWS_AS(encode(r), ValidityError);
    r.dof = DofId{DofName::ABDADD, Side::LEFT};
    r.segment = SegmentId::TETE; // TETE lateral DoFs are unsided
    r.notch = Notch::FLX_GRAND;
    CHECK_THROWS_AS(encode(r), ValidityError);
}

TEST_CASE("decode: examples and grammar errors") {
    CHECK(decode("COU:FLXEXT=NEUTRAL@0.00-1.00") == minimal_record());

    const TypannotRecord r = decode("COU:FLXEXT=FLX_PETIT;v+;x4@105.00-107.50");
    CHECK(r.notch == Notch::FLX_PETIT);
    CHECK(r.qualifiers.speed_contrast == ProsodicQualifier::Contrast::PLUS);
    CHECK(r.qualifiers.amplitude_contrast == ProsodicQualifier::Contrast::NONE);
    REQUIRE(r.qualifiers.repetitions.has_value());
    CHECK(*r.qualifiers.repetitions == 4);
    CHECK(r.start_s == Catch::Approx(105.0));
    CHECK(r.end_s == Catch::Approx(107.5));

    CHECK_THROWS_AS(decode("COU:FLXEXT=FLX_PETIT@2.00-1.00"), ParseError); // interval order
    CHECK_THROWS_AS(decode("COU:FLXEXT=ABD_PETIT@0.00-1.00"), ParseError); // notch/dof mismatch
    CHECK_THROWS_AS(decode("XYZ:FLXEXT=NEUTRAL@0.00-1.00"), ParseError);
    CHECK_THROWS_AS(decode("COU:FLXEXT=NEUTRAL@0.0-1.0"), ParseError); // two decimals required
    CHECK_THROWS_AS(decode("COU:FLXEXT=NEUTRAL@0.00-1.00x"), ParseError);
    CHECK_THROWS_AS(decode("COU:FLXEXT=NEUTRAL;x0@0.00-1.00"), ParseError);
    CHECK_THROWS_AS(decode("COU:FLXEXT:LEFT=NEUTRAL@0.00-1.00"), ParseError); // sided FLXEXT

    // Errors carry a column position.
    try {
        decode("COU:FLXEXT=WRONG@0.00-1.00");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("column") != std::string::npos);
    }
}

TEST_CASE("decode(encode) is the identity over the legal record space") {
    const std::vector<SegmentId> segments = {SegmentId::COU, SegmentId::TETE, SegmentId::EPAULES,
                                             SegmentId::BUSTE};
    const std::vector<DofName> dofs = {DofName::FLXEXT, DofName::ABDADD, DofName::RINREX};
    const std::vector<Side> sides = {Side::NONE, Side::LEFT, Side::RIGHT};
    using C = ProsodicQualifier::Contrast;
    const std::vector<C> contrasts = {C::NONE, C::PLUS, C::MINUS};
    const std::vector<std::optional<int>> reps = {std::nullopt, 1, 2, 3, 4, 7, 12};
    const std::vector<std::pair<double, double>> intervals = {{0.0, 1.0}, {105.0, 107.5},
                                                              {3.12, 9.96}};

    long count = 0;
    for (SegmentId seg : segments)
        for (DofName dof : dofs)
            for (Side side : sides) {
                const bool sided_ok =
                    side == Side::NONE ||
                    (dof != DofName::FLXEXT && seg != SegmentId::TETE);
                if (!sided_ok) continue;
                for (int notch = 0; notch <= 8; ++notch)
                    for (C v : contrasts)
                        for (C a : contrasts)
                            for (const auto& rep : reps)
                                for (const auto& iv : intervals) {
                                    TypannotRecord r;
                                    r.segment = seg;
                                    r.dof = DofId{dof, side};
                                    r.notch = static_cast<Notch>(notch);
                                    r.qualifiers.speed_contrast = v;
                                    r.qualifiers.amplitude_contrast = a;
                                    r.qualifiers.repetitions = rep;
                                    r.start_s = iv.first;
                                    r.end_s = iv.second;
                                    const TypannotRecord back = decode(encode(r));
                                    if (!(back == r)) {
                                        CAPTURE(encode(r));
                                        REQUIRE(back == r);
                                    }
                                    ++count;
                                }
            }
    CHECK(count >= 10000);
}

TEST_CASE("series_to_records: one record for an all-neutral series") {
    const auto records = series_to_records(series_from_notch_levels({{0.0, 3.0}}), 0.2);
    REQUIRE(records.size() == 1);
    CHECK(records[0].notch == Notch::NEUTRAL);
    CHECK(records[0].start_s == Catch::Approx(0.0));
    CHECK(records[0].end_s == Catch::Approx(3.0));
}

TEST_CASE("series_to_records: two runs give two records with exact boundaries") {
    const auto records =
        series_to_records(series_from_notch_levels({{0.0, 2.0}, {0.5, 2.52}}), 0.2);
    REQUIRE(records.size() == 2);
    CHECK(records[0].notch == Notch::NEUTRAL);
    CHECK(records[0].start_s == Catch::Approx(0.0));
    CHECK(records[0].end_s == Catch::Approx(2.0));
    CHECK(records[1].notch == Notch::FLX_MOYEN);
    CHECK(records[1].start_s == Catch::Approx(2.0));
    CHECK(records[1].end_s == Catch::Approx(4.52));
}

TEST_CASE("series_to_records absorbs a one-frame spike") {
    NormalizedSeries n = series_from_notch_levels({{0.0, 3.0}});
    n.samples[40].p = 0.5;
    n.samples[40].notch = notch_of(0.5);
    const auto records = series_to_records(n, 0.2);
    REQUIRE(records.size() == 1);
    CHECK(records[0].notch == Notch::NEUTRAL);
    CHECK(records[0].end_s == Catch::Approx(3.0));
}

TEST_CASE("series_to_records: short runs merge toward the nearer notch") {
    // PETIT(1.0) MOYEN(0.08 short) BUTEE(1.0): MOYEN is nearer PETIT (1 step)
    // than BUTEE (2 steps), so it joins the earlier run.
    const auto records = series_to_records(
        series_from_notch_levels({{0.2, 1.0}, {0.5, 0.08}, {0.95, 1.0}}), 0.2);
    REQUIRE(records.size() == 2);
    CHECK(records[0].notch == Notch::FLX_PETIT);
    CHECK(records[0].end_s == Catch::Approx(1.08));
    CHECK(records[1].notch == Notch::FLX_BUTEE);
}

TEST_CASE("series_to_records output tiles the series span") {
    const NormalizedSeries n = series_from_notch_levels(
        {{0.0, 0.48}, {0.3, 0.12}, {-0.5, 1.2}, {0.9, 0.04}, {0.2, 0.76}});
    const auto records = series_to_records(n, 0.2);
    REQUIRE(!records.empty());
    CHECK(records.front().start_s == Catch::Approx(n.samples.front().t_s));
    CHECK(records.back().end_s == Catch::Approx(n.samples.back().t_s + 1.0 / n.fps));
    for (size_t i = 0; i + 1 < records.size(); ++i) {
        CHECK(records[i].end_s == Catch::Approx(records[i + 1].start_s));
        CHECK(records[i].start_s < records[i].end_s);
    }
}

TEST_CASE("series_to_records: re-notching each long record's midpoint agrees") {
    const NormalizedSeries n =
        series_from_notch_levels({{0.0, 1.0}, {0.5, 1.2}, {-0.3, 0.8}, {0.9, 1.0}});
    const auto records = series_to_records(n, 0.2);
    for (const auto& r : records) {
        if (r.end_s - r.start_s < 0.2) continue;
        const double mid = (r.start_s + r.end_s) / 2.0;
        for (const auto& s : n.samples)
            if (std::abs(s.t_s - mid) < 0.02) CHECK(s.notch == r.notch);
    }
}

TEST_CASE("series_to_records handles the empty series and bad arguments") {
    CHECK(series_to_records(NormalizedSeries{}, 0.2).empty());
    CHECK_THROWS_AS(series_to_records(NormalizedSeries{}, -0.1), ArgumentError);
}
