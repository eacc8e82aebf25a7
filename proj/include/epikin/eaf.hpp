#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "epikin/errors.hpp"
#include "epikin/format.hpp"
#include "epikin/xml.hpp"

namespace epikin {

struct EafAnnotation {
    long start_ms = 0;
    long end_ms = 0;
    std::string value;

    friend bool operator==(const EafAnnotation&, const EafAnnotation&) = default;
};

struct EafTier {
    std::string tier_id;
    std::vector<EafAnnotation> annotations;

    friend bool operator==(const EafTier&, const EafTier&) = default;
};

struct EafDocument {
    std::string media_url;
    std::vector<EafTier> tiers;

    const EafTier* find_tier(std::string_view tier_id) const {
        for (const auto& t : tiers)
            if (t.tier_id == tier_id) return &t;
        return nullptr;
    }

    friend bool operator==(const EafDocument&, const EafDocument&) = default;
};

/// Read the supported EAF subset: alignable annotations resolved to absolute
/// milliseconds through the TIME_ORDER table. Unknown elements are ignored.
inline EafDocument read_eaf(std::string_view bytes) {
    const xml::Node root = xml::parse(bytes);
    if (root.name != "ANNOTATION_DOCUMENT")
        throw ParseError("EAF root element must be ANNOTATION_DOCUMENT, got " + root.name);

    EafDocument doc;
    if (const xml::Node* header = root.child("HEADER"))
        if (const xml::Node* media = header->child("MEDIA_DESCRIPTOR"))
            if (const std::string* url = media->attribute("MEDIA_URL")) doc.media_url = *url;

    std::map<std::string, long> slots;
    if (const xml::Node* order = root.child("TIME_ORDER")) {
        for (const xml::Node* slot : order->children_named("TIME_SLOT")) {
            const std::string* id = slot->attribute("TIME_SLOT_ID");
            if (!id) throw ParseError("TIME_SLOT without TIME_SLOT_ID");
            const std::string* value = slot->attribute("TIME_VALUE");
            if (value) slots[*id] = std::stol(*value);
        }
    }
    auto resolve = [&slots](const std::string& ref) {
        auto it = slots.find(ref);
        if (it == slots.end())
            throw ParseError("annotation references undefined time slot " + ref);
        return it->second;
    };

    for (const xml::Node* tier : root.children_named("TIER")) {
        EafTier t;
        if (const std::string* id = tier->attribute("TIER_ID")) t.tier_id = *id;
        auto read_alignable = [&](const xml::Node* ann) {
            const std::string* r1 = ann->attribute("TIME_SLOT_REF1");
            const std::string* r2 = ann->attribute("TIME_SLOT_REF2");
            if (!r1 || !r2) throw ParseError("ALIGNABLE_ANNOTATION without time slot refs");
            EafAnnotation a;
            a.start_ms = resolve(*r1);
            a.end_ms = resolve(*r2);
            if (const xml::Node* v = ann->child("ANNOTATION_VALUE")) a.value = v->text;
            t.annotations.push_back(std::move(a));
        };
        for (const auto& child : tier->children) {
            if (child.name == "ALIGNABLE_ANNOTATION") {
                read_alignable(&child);
            } else if (child.name == "ANNOTATION") {
                for (const xml::Node* inner : child.children_named("ALIGNABLE_ANNOTATION"))
                    read_alignable(inner);
            }
        }
        doc.tiers.push_back(std::move(t));
    }
    return doc;
}

/// Serialize to the EAF subset, byte-deterministically: tiers sorted by id,
/// time slots sorted by value, annotations sorted by start time. The DATE
/// attribute is fixed so identical documents give identical bytes.
inline std::string write_eaf(const EafDocument& doc) {
    for (const auto& t : doc.tiers) {
        std::vector<EafAnnotation> sorted = t.annotations;
        std::sort(sorted.begin(), sorted.end(),
                  [](const EafAnnotation& a, const EafAnnotation& b) { return a.start_ms < b.start_ms; });
        long last_end = -1;
        for (const auto& a : sorted) {
            if (!(a.start_ms < a.end_ms))
                throw ValidityError("tier " + t.tier_id + ": annotation interval must be non-empty");
            if (a.start_ms < last_end)
                throw ValidityError("tier " + t.tier_id + ": overlapping annotations");
            last_end = a.end_ms;
        }
    }

    std::vector<const EafTier*> tiers;
    for (const auto& t : doc.tiers) tiers.push_back(&t);
    std::sort(tiers.begin(), tiers.end(),
              [](const EafTier* a, const EafTier* b) { return a->tier_id < b->tier_id; });

    std::vector<long> times;
    for (const auto& t : doc.tiers)
        for (const auto& a : t.annotations) {
            times.push_back(a.start_ms);
            times.push_back(a.end_ms);
        }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    std::map<long, size_t> slot_of;
    for (size_t i = 0; i < times.size(); ++i) slot_of[times[i]] = i + 1;
    auto ts = [&slot_of](long ms) { return "ts" + std::to_string(slot_of.at(ms)); };

    std::string mime = "application/octet-stream";
    auto ends_with = [&](const char* suffix) {
        const std::string_view u = doc.media_url;
        const std::string_view s = suffix;
        return u.size() >= s.size() && u.substr(u.size() - s.size()) == s;
    };
    if (ends_with(".mp4")) mime = "video/mp4";
    else if (ends_with(".mpg") || ends_with(".mpeg")) mime = "video/mpeg";
    else if (ends_with(".mov")) mime = "video/quicktime";
    else if (ends_with(".wav")) mime = "audio/x-wav";

    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<ANNOTATION_DOCUMENT AUTHOR=\"epikin\" DATE=\"2024-01-01T00:00:00+00:00\" "
           "FORMAT=\"3.0\" VERSION=\"3.0\">\n";
    out += "    <HEADER MEDIA_FILE=\"\" TIME_UNITS=\"milliseconds\">\n";
    out += "        <MEDIA_DESCRIPTOR MEDIA_URL=\"" + xml::escape(doc.media_url) +
           "\" MIME_TYPE=\"" + mime + "\"/>\n";
    out += "    </HEADER>\n";
    out += "    <TIME_ORDER>\n";
    for (size_t i = 0; i < times.size(); ++i)
        out += "        <TIME_SLOT TIME_SLOT_ID=\"ts" + std::to_string(i + 1) + "\" TIME_VALUE=\"" +
               std::to_string(times[i]) + "\"/>\n";
    out += "    </TIME_ORDER>\n";
    long annotation_id = 0;
    for (const EafTier* t : tiers) {
        out += "    <TIER LINGUISTIC_TYPE_REF=\"default-lt\" TIER_ID=\"" +
               xml::escape(t->tier_id) + "\">\n";
        std::vector<EafAnnotation> sorted = t->annotations;
        std::sort(sorted.begin(), sorted.end(),
                  [](const EafAnnotation& a, const EafAnnotation& b) { return a.start_ms < b.start_ms; });
        for (const auto& a : sorted) {
            ++annotation_id;
            out += "        <ANNOTATION>\n";
            out += "            <ALIGNABLE_ANNOTATION ANNOTATION_ID=\"a" +
                   std::to_string(annotation_id) + "\" TIME_SLOT_REF1=\"" + ts(a.start_ms) +
                   "\" TIME_SLOT_REF2=\"" + ts(a.end_ms) + "\">\n";
            out += "                <ANNOTATION_VALUE>" + xml::escape(a.value) +
                   "</ANNOTATION_VALUE>\n";
            out += "            </ALIGNABLE_ANNOTATION>\n";
            out += "        </ANNOTATION>\n";
        }
        out += "    </TIER>\n";
    }
    out += "    <LINGUISTIC_TYPE LINGUISTIC_TYPE_ID=\"default-lt\" TIME_ALIGNABLE=\"true\"/>\n";
    out += "</ANNOTATION_DOCUMENT>\n";
    return out;
}

inline std::string write_eaf(const std::vector<EafTier>& tiers, const std::string& media_url) {
    EafDocument doc;
    doc.media_url = media_url;
    doc.tiers = tiers;
    return write_eaf(doc);
}

/// Inter-annotator agreement between two tiers over the same timeline.
struct AgreementReport {
    double frame_kappa = 0;
    double overlap_ratio = 0;
    // (label_a, label_b) -> frame count; "NONE" marks unannotated time.
    std::map<std::pair<std::string, std::string>, long> confusion;

    std::string to_text() const {
        std::string out;
        out += "frame_kappa " + detail::fixed(frame_kappa, 4) + "\n";
        out += "overlap_ratio " + detail::fixed(overlap_ratio, 4) + "\n";
        for (const auto& [k, n] : confusion)
            out += k.first + " / " + k.second + " " + std::to_string(n) + "\n";
        return out;
    }
};

/// Frame-level Cohen's kappa plus a label-agnostic time overlap ratio. Both
/// tiers are rasterized at frame_rate with background label NONE; a frame
/// takes the label of the annotation covering its midpoint.
inline AgreementReport agreement(const EafTier& a, const EafTier& b, double frame_rate) {
    if (frame_rate <= 0) throw ArgumentError("frame_rate must be positive");
    long span_ms = 0;
    for (const auto& ann : a.annotations) span_ms = std::max(span_ms, ann.end_ms);
    for (const auto& ann : b.annotations) span_ms = std::max(span_ms, ann.end_ms);
    if (span_ms == 0) throw ArgumentError("agreement undefined on two empty tiers");

    const long frames = static_cast<long>(std::ceil(span_ms / 1000.0 * frame_rate));
    auto label_at = [](const EafTier& t, double t_ms) -> std::string {
        for (const auto& ann : t.annotations)
            if (t_ms >= static_cast<double>(ann.start_ms) && t_ms < static_cast<double>(ann.end_ms))
                return ann.value;
        return "NONE";
    };

    AgreementReport report;
    std::map<std::string, long> marg_a, marg_b;
    long agree = 0;
    for (long f = 0; f < frames; ++f) {
        const double mid_ms = (static_cast<double>(f) + 0.5) / frame_rate * 1000.0;
        const std::string la = label_at(a, mid_ms);
        const std::string lb = label_at(b, mid_ms);
        ++report.confusion[{la, lb}];
        ++marg_a[la];
        ++marg_b[lb];
        if (la == lb) ++agree;
    }
    const double n = static_cast<double>(frames);
    const double p_o = static_cast<double>(agree) / n;
    double p_e = 0;
    for (const auto& [label, ca] : marg_a) {
        auto it = marg_b.find(label);
        if (it != marg_b.end())
            p_e += (static_cast<double>(ca) / n) * (static_cast<double>(it->second) / n);
    }
    report.frame_kappa = p_e >= 1.0 ? (p_o >= 1.0 ? 1.0 : 0.0) : (p_o - p_e) / (1.0 - p_e);

    // Label-agnostic interval overlap.
    auto merged = [](const EafTier& t) {
        std::vector<std::pair<long, long>> iv;
        for (const auto& ann : t.annotations) iv.push_back({ann.start_ms, ann.end_ms});
        std::sort(iv.begin(), iv.end());
        std::vector<std::pair<long, long>> out;
        for (const auto& i : iv) {
            if (!out.empty() && i.first <= out.back().second)
                out.back().second = std::max(out.back().second, i.second);
            else
                out.push_back(i);
        }
        return out;
    };
    const auto ia = merged(a), ib = merged(b);
    long inter = 0, total_a = 0, total_b = 0;
    for (const auto& i : ia) total_a += i.second - i.first;
    for (const auto& i : ib) total_b += i.second - i.first;
    for (const auto& x : ia)
        for (const auto& y : ib)
            inter += std::max(0L, std::min(x.second, y.second) - std::max(x.first, y.first));
    const long uni = total_a + total_b - inter;
    report.overlap_ratio = uni <= 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
    return report;
}

} // namespace epikin
