#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "epikin/eaf.hpp"

using namespace epikin;

namespace {

const char* kMinimalEaf = R"(<?xml version="1.0" encoding="UTF-8"?>
<ANNOTATION_DOCUMENT AUTHOR="test" DATE="2024-01-01T00:00:00+00:00" FORMAT="3.0" VERSION="3.0">
    <HEADER MEDIA_FILE="" TIME_UNITS="milliseconds">
        <MEDIA_DESCRIPTOR MEDIA_URL="video.mp4" MIME_TYPE="video/mp4"/>
    </HEADER>
    <TIME_ORDER>
        <TIME_SLOT TIME_SLOT_ID="ts1" TIME_VALUE="0"/>
        <TIME_SLOT TIME_SLOT_ID="ts2" TIME_VALUE="1000"/>
    </TIME_ORDER>
    <TIER LINGUISTIC_TYPE_REF="default-lt" TIER_ID="EPISTEME">
        <ANNOTATION>
            <ALIGNABLE_ANNOTATION ANNOTATION_ID="a1" TIME_SLOT_REF1="ts1" TIME_SLOT_REF2="ts2">
                <ANNOTATION_VALUE>CERT</ANNOTATION_VALUE>
            </ALIGNABLE_ANNOTATION>
        </ANNOTATION>
    </TIER>
    <LINGUISTIC_TYPE LINGUISTIC_TYPE_ID="default-lt" TIME_ALIGNABLE="true"/>
</ANNOTATION_DOCUMENT>
)";

EafTier tier(std::string id, std::vector<EafAnnotation> anns) {
    EafTier t;
    t.tier_id = std::move(id);
    t.annotations = std::move(anns);
    return t;
}

} // namespace

TEST_CASE("read_eaf resolves the minimal document") {
    const EafDocument doc = read_eaf(kMinimalEaf);
    CHECK(doc.media_url == "video.mp4");
    REQUIRE(doc.tiers.size() == 1);
    CHECK(doc.tiers[0].tier_id == "EPISTEME");
    REQUIRE(doc.tiers[0].annotations.size() == 1);
    CHECK(doc.tiers[0].annotations[0].start_ms == 0);
    CHECK(doc.tiers[0].annotations[0].end_ms == 1000);
    CHECK(doc.tiers[0].annotations[0].value == "CERT");
}

TEST_CASE("two tiers sharing time slots resolve to the same absolute times") {
    std::string text = kMinimalEaf;
    const std::string extra = R"(    <TIER LINGUISTIC_TYPE_REF="default-lt" TIER_ID="OTHER">
        <ANNOTATION>
            <ALIGNABLE_ANNOTATION ANNOTATION_ID="a2" TIME_SLOT_REF1="ts1" TIME_SLOT_REF2="ts2">
                <ANNOTATION_VALUE>X</ANNOTATION_VALUE>
            </ALIGNABLE_ANNOTATION>
        </ANNOTATION>
    </TIER>
)";
    text.insert(text.find("    <LINGUISTIC_TYPE"), extra);
    const EafDocument doc = read_eaf(text);
    REQUIRE(doc.tiers.size() == 2);
    CHECK(doc.tiers[0].annotations[0].start_ms == doc.tiers[1].annotations[0].start_ms);
    CHECK(doc.tiers[0].annotations[0].end_ms == doc.tiers[1].annotations[0].end_ms);
}

TEST_CASE("a dangling time slot reference names the slot") {
    std::string text = kMinimalEaf;
    const auto pos = text.find("TIME_SLOT_REF2=\"ts2\"");
    text.replace(pos, 20, "TIME_SLOT_REF2=\"ts9\"");
    try {
        read_eaf(text);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("ts9") != std::string::npos);
    }
}

TEST_CASE("malformed XML is a parse error") {
    CHECK_THROWS_AS(read_eaf("<ANNOTATION_DOCUMENT><TIER>"), ParseError);
    CHECK_THROWS_AS(read_eaf("not xml at all"), ParseError);
    CHECK_THROWS_AS(read_eaf("<WRONG_ROOT/>"), ParseError);
}

TEST_CASE("reader ignores unknown elements") {
    std::string text = kMinimalEaf;
    text.insert(text.find("    <TIER"),
                "    <PROPERTY NAME=\"x\">junk</PROPERTY>\n    <UNKNOWN a=\"1\"/>\n");
    const EafDocument doc = read_eaf(text);
    REQUIRE(doc.tiers.size() == 1);
    CHECK(doc.tiers[0].annotations.size() == 1);
}

TEST_CASE("write then read preserves tiers exactly at millisecond resolution") {
    EafDocument doc;
    doc.media_url = "corpus/video_a4b4.mp4";
    doc.tiers.push_back(tier("EPISTEME", {{0, 1500, "CERT"}, {2000, 4750, "INCERT"},
                                          {5000, 7303, "CERT"}}));
    doc.tiers.push_back(tier("CALIB", {{100, 300, "REST"}, {1200, 1400, "FLX_LIMIT"},
                                       {2200, 2400, "EXT_LIMIT"}}));
    doc.tiers.push_back(tier("NOTES", {{0, 42, "value with <specials> & \"quotes\""}}));

    const std::string bytes = write_eaf(doc);
    const EafDocument back = read_eaf(bytes);
    REQUIRE(back.tiers.size() == 3);
    // Writer sorts tiers by id: CALIB, EPISTEME, NOTES.
    CHECK(back.tiers[0].tier_id == "CALIB");
    CHECK(back.tiers[1].tier_id == "EPISTEME");
    CHECK(back.tiers[2].tier_id == "NOTES");
    CHECK(back.tiers[1].annotations == doc.tiers[0].annotations);
    CHECK(back.tiers[0].annotations == doc.tiers[1].annotations);
    CHECK(back.tiers[2].annotations == doc.tiers[2].annotations);
    CHECK(back.media_url == doc.media_url);
}

TEST_CASE("write_eaf round trip of the minimal read example") {
    const EafDocument doc = read_eaf(kMinimalEaf);
    const EafDocument back = read_eaf(write_eaf(doc));
    CHECK(back.tiers == doc.tiers);
}

TEST_CASE("writer is byte-deterministic") {
    EafDocument doc;
    doc.media_url = "m.mp4";
    doc.tiers.push_back(tier("B", {{10, 20, "x"}}));
    doc.tiers.push_back(tier("A", {{0, 5, "y"}}));
    CHECK(write_eaf(doc) == write_eaf(doc));
}

TEST_CASE("writer rejects overlapping annotations in one tier") {
    EafDocument doc;
    doc.tiers.push_back(tier("T", {{0, 1000, "a"}, {500, 1500, "b"}}));
    CHECK_THROWS_AS(write_eaf(doc), ValidityError);
    EafDocument empty_interval;
    empty_interval.tiers.push_back(tier("T", {{1000, 1000, "a"}}));
    CHECK_THROWS_AS(write_eaf(empty_interval), ValidityError);
}

TEST_CASE("agreement: identical tiers score kappa 1 and overlap 1") {
    const EafTier a = tier("E", {{0, 2000, "CERT"}, {3000, 5000, "INCERT"}});
    const AgreementReport r = agreement(a, a, 25);
    CHECK(r.frame_kappa == Catch::Approx(1.0));
    CHECK(r.overlap_ratio == Catch::Approx(1.0));
}

TEST_CASE("agreement: balanced opposite labels push kappa to -1") {
    const EafTier a = tier("E", {{0, 5000, "CERT"}, {5000, 10000, "INCERT"}});
    const EafTier b = tier("E", {{0, 5000, "INCERT"}, {5000, 10000, "CERT"}});
    const AgreementReport r = agreement(a, b, 25);
    // Hand computation: p_o = 0, marginals 1/2 each, p_e = 1/2, kappa = -1.
    CHECK(r.frame_kappa == Catch::Approx(-1.0));
    CHECK(r.frame_kappa <= 0.0);
}

TEST_CASE("agreement: disjoint intervals overlap zero") {
    const EafTier a = tier("E", {{0, 1000, "CERT"}});
    const EafTier b = tier("E", {{2000, 3000, "CERT"}});
    CHECK(agreement(a, b, 25).overlap_ratio == Catch::Approx(0.0));
}

TEST_CASE("agreement is symmetric") {
    const EafTier a = tier("E", {{0, 1700, "CERT"}, {2400, 3100, "INCERT"}});
    const EafTier b = tier("E", {{300, 1500, "CERT"}, {2600, 3600, "CERT"}});
    const AgreementReport ab = agreement(a, b, 25);
    const AgreementReport ba = agreement(b, a, 25);
    CHECK(ab.frame_kappa == Catch::Approx(ba.frame_kappa));
    CHECK(ab.overlap_ratio == Catch::Approx(ba.overlap_ratio));
}

TEST_CASE("agreement raster is stable under doubled frame rate") {
    const EafTier a = tier("E", {{0, 1800, "CERT"}, {2500, 4100, "INCERT"}, {5000, 6000, "CERT"}});
    const EafTier b = tier("E", {{100, 1700, "CERT"}, {2600, 4000, "CERT"}, {5100, 6100, "CERT"}});
    const double k1 = agreement(a, b, 25).frame_kappa;
    const double k2 = agreement(a, b, 50).frame_kappa;
    CHECK(std::abs(k1 - k2) < 0.02);
}

TEST_CASE("agreement on empty tiers is an error") {
    CHECK_THROWS_AS(agreement(tier("E", {}), tier("E", {}), 25), ArgumentError);
}

TEST_CASE("confusion counts label pairs including the background") {
    const EafTier a = tier("E", {{0, 1000, "CERT"}});
    const EafTier b = tier("E", {{0, 2000, "CERT"}});
    const AgreementReport r = agreement(a, b, 10);
    CHECK(r.confusion.at({"CERT", "CERT"}) == 10);
    CHECK(r.confusion.at({"NONE", "CERT"}) == 10);
}
