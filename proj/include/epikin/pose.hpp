#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "epikin/errors.hpp"

namespace epikin {

/// Skeleton layout of the upstream pose estimator. Only the keypoint roles
/// needed for neck kinematics are named; the rest ride along by index.
struct KeypointSchema {
    enum class Name { COCO17, HALPE26 };

    Name name = Name::COCO17;
    int keypoint_count = 17;
    int nose = 0;
    int left_ear = 3;
    int right_ear = 4;
    int left_shoulder = 5;
    int right_shoulder = 6;
    int left_hip = 11;
    int right_hip = 12;
    // HALPE26 extras; -1 where the layout has no such point.
    int head = -1;
    int neck = -1;
    int mid_hip = -1;

    static const KeypointSchema& coco17() {
        static const KeypointSchema s{};
        return s;
    }

    static const KeypointSchema& halpe26() {
        static const KeypointSchema s = [] {
            KeypointSchema h;
            h.name = Name::HALPE26;
            h.keypoint_count = 26;
            h.head = 17;
            h.neck = 18;
            h.mid_hip = 19;
            return h;
        }();
        return s;
    }

    static const KeypointSchema& by_name(std::string_view n) {
        if (n == "coco17" || n == "COCO17") return coco17();
        if (n == "halpe26" || n == "HALPE26") return halpe26();
        throw ArgumentError("unknown keypoint schema: " + std::string(n));
    }
};

inline const char* to_string(KeypointSchema::Name n) {
    return n == KeypointSchema::Name::COCO17 ? "coco17" : "halpe26";
}

struct Keypoint {
    double x = 0;
    double y = 0;
    double confidence = 0;
};

struct BBox {
    double x = 0, y = 0, w = 0, h = 0;
    double cx() const { return x + w / 2.0; }
    double cy() const { return y + h / 2.0; }
    double area() const { return w * h; }
};

struct KeypointFrame {
    long frame_index = 0;
    double timestamp_s = 0;
    int person_id = 0;
    std::vector<Keypoint> points;
    BBox bbox;
    double score = 0;
    bool interpolated = false; // true for frames created by fill_gaps
};

struct PoseTrack {
    int person_id = 0;
    double fps = 25.0;
    KeypointSchema::Name schema = KeypointSchema::Name::COCO17;
    std::vector<KeypointFrame> frames;
};

/// Rectangle (pixels) delimiting where the subject of interest sits.
struct DetectionRegion {
    double x = 0, y = 0, w = 0, h = 0;

    DetectionRegion() = default;
    DetectionRegion(double x_, double y_, double w_, double h_) : x(x_), y(y_), w(w_), h(h_) {
        if (w <= 0 || h <= 0) throw ArgumentError("detection region must have positive size");
    }

    bool contains(double px, double py) const {
        return px >= x && px <= x + w && py >= y && py <= y + h;
    }
};

namespace detail {

inline long frame_index_of(const nlohmann::json& image_id, size_t record_no) {
    if (image_id.is_number_integer()) return image_id.get<long>();
    if (image_id.is_string()) {
        const std::string s = image_id.get<std::string>();
        // Take the last run of digits in the string ("frame_0012.png" -> 12).
        long end = -1;
        for (long i = static_cast<long>(s.size()) - 1; i >= 0; --i) {
            if (std::isdigit(static_cast<unsigned char>(s[i]))) {
                end = i;
                break;
            }
        }
        if (end < 0)
            throw ParseError("record " + std::to_string(record_no) + ": image_id \"" + s +
                             "\" carries no frame number");
        long begin = end;
        while (begin > 0 && std::isdigit(static_cast<unsigned char>(s[begin - 1]))) --begin;
        return std::stol(s.substr(begin, end - begin + 1));
    }
    throw ParseError("record " + std::to_string(record_no) + ": image_id must be integer or string");
}

inline double bbox_iou(const BBox& a, const BBox& b) {
    const double x1 = std::max(a.x, b.x);
    const double y1 = std::max(a.y, b.y);
    const double x2 = std::min(a.x + a.w, b.x + b.w);
    const double y2 = std::min(a.y + a.h, b.y + b.h);
    const double inter = std::max(0.0, x2 - x1) * std::max(0.0, y2 - y1);
    const double uni = a.area() + b.area() - inter;
    return uni <= 0 ? 0.0 : inter / uni;
}

} // namespace detail

/// Parse an AlphaPose-style results file: a JSON array of per-detection
/// records with keys image_id, keypoints (flat x,y,score triples), score,
/// box and optionally idx. Returns one time-ordered track per person.
inline std::vector<PoseTrack> parse_pose_file(std::string_view bytes, const KeypointSchema& schema,
                                              double fps) {
    if (fps <= 0) throw ArgumentError("fps must be positive");

    nlohmann::json root;
    try {
        root = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("pose file is not valid JSON at byte " + std::to_string(e.byte) + ": " +
                         e.what());
    }
    if (!root.is_array()) throw ParseError("pose file must be a top-level JSON array");

    struct RawRecord {
        long frame_index;
        int idx; // -1 when the upstream file has no idx field
        KeypointFrame frame;
    };
    std::vector<RawRecord> records;
    records.reserve(root.size());

    bool any_idx = false;
    for (size_t i = 0; i < root.size(); ++i) {
        const auto& rec = root[i];
        if (!rec.is_object())
            throw ParseError("record " + std::to_string(i) + " is not a JSON object");
        if (!rec.contains("keypoints") || !rec["keypoints"].is_array())
            throw ParseError("record " + std::to_string(i) + " lacks a keypoints array");

        const auto& kp = rec["keypoints"];
        if (static_cast<int>(kp.size()) != 3 * schema.keypoint_count)
            throw SchemaError("record " + std::to_string(i) + ": " +
                              std::to_string(kp.size() / 3) + " keypoints where schema " +
                              to_string(schema.name) + " expects " +
                              std::to_string(schema.keypoint_count));

        RawRecord r;
        r.frame_index = detail::frame_index_of(rec.contains("image_id") ? rec["image_id"]
                                                                        : nlohmann::json(static_cast<long>(i)),
                                               i);
        r.idx = -1;
        if (rec.contains("idx") && rec["idx"].is_number()) {
            r.idx = rec["idx"].get<int>();
            any_idx = true;
        }
        r.frame.frame_index = r.frame_index;
        r.frame.timestamp_s = static_cast<double>(r.frame_index) / fps;
        r.frame.score = rec.value("score", 0.0);
        r.frame.points.reserve(schema.keypoint_count);
        for (int k = 0; k < schema.keypoint_count; ++k) {
            Keypoint p;
            p.x = kp[3 * k].get<double>();
            p.y = kp[3 * k + 1].get<double>();
            p.confidence = kp[3 * k + 2].get<double>();
            r.frame.points.push_back(p);
        }
        if (rec.contains("box") && rec["box"].is_array() && rec["box"].size() >= 4) {
            r.frame.bbox = BBox{rec["box"][0].get<double>(), rec["box"][1].get<double>(),
                                rec["box"][2].get<double>(), rec["box"][3].get<double>()};
        } else {
            // Synthesise a box from the keypoint extent so tracking still works.
            double xmin = 1e300, ymin = 1e300, xmax = -1e300, ymax = -1e300;
            for (const auto& p : r.frame.points) {
                xmin = std::min(xmin, p.x);
                ymin = std::min(ymin, p.y);
                xmax = std::max(xmax, p.x);
                ymax = std::max(ymax, p.y);
            }
            r.frame.bbox = BBox{xmin, ymin, std::max(0.0, xmax - xmin), std::max(0.0, ymax - ymin)};
        }
        records.push_back(std::move(r));
    }

    std::stable_sort(records.begin(), records.end(),
                     [](const RawRecord& a, const RawRecord& b) { return a.frame_index < b.frame_index; });

    std::map<int, PoseTrack> tracks;
    if (any_idx) {
        // Upstream identities available: trust them. Records without idx get
        // fresh ids above the upstream range.
        int next_synthetic = 0;
        for (const auto& r : records)
            if (r.idx >= 0) next_synthetic = std::max(next_synthetic, r.idx + 1);
        std::map<std::pair<int, long>, bool> seen; // (person, frame) duplicates split off
        for (const auto& r : records) {
            int pid = r.idx >= 0 ? r.idx : next_synthetic++;
            if (seen.count({pid, r.frame_index})) pid = next_synthetic++;
            seen[{pid, r.frame_index}] = true;
            PoseTrack& t = tracks[pid];
            t.person_id = pid;
            t.fps = fps;
            t.schema = schema.name;
            KeypointFrame f = r.frame;
            f.person_id = pid;
            t.frames.push_back(std::move(f));
        }
    } else {
        // No identities: greedy IoU matching against the previous frame.
        struct Active {
            int pid;
            long last_frame;
            BBox last_box;
        };
        std::vector<Active> active;
        int next_pid = 0;
        size_t i = 0;
        while (i < records.size()) {
            size_t j = i;
            while (j < records.size() && records[j].frame_index == records[i].frame_index) ++j;
            // Candidate pairs (record, active track) sorted by IoU descending.
            struct Pair {
                double iou;
                size_t rec;
                size_t act;
            };
            std::vector<Pair> pairs;
            for (size_t r = i; r < j; ++r)
                for (size_t a = 0; a < active.size(); ++a) {
                    const double iou = detail::bbox_iou(records[r].frame.bbox, active[a].last_box);
                    if (iou >= 0.3) pairs.push_back({iou, r, a});
                }
            std::stable_sort(pairs.begin(), pairs.end(),
                             [](const Pair& a, const Pair& b) { return a.iou > b.iou; });
            std::vector<bool> rec_used(j - i, false), act_used(active.size(), false);
            std::vector<int> assigned(j - i, -1);
            for (const auto& p : pairs) {
                if (rec_used[p.rec - i] || act_used[p.act]) continue;
                rec_used[p.rec - i] = true;
                act_used[p.act] = true;
                assigned[p.rec - i] = active[p.act].pid;
            }
            for (size_t r = i; r < j; ++r) {
                int pid = assigned[r - i];
                if (pid < 0) pid = next_pid++;
                PoseTrack& t = tracks[pid];
                t.person_id = pid;
                t.fps = fps;
                t.schema = schema.name;
                KeypointFrame f = records[r].frame;
                f.person_id = pid;
                t.frames.push_back(std::move(f));
            }
            // Refresh the active set from this frame's assignments.
            active.clear();
            for (auto& [pid, t] : tracks) {
                if (!t.frames.empty() && t.frames.back().frame_index == records[i].frame_index)
                    active.push_back({pid, records[i].frame_index, t.frames.back().bbox});
            }
            i = j;
        }
    }

    std::vector<PoseTrack> out;
    out.reserve(tracks.size());
    for (auto& [pid, t] : tracks) out.push_back(std::move(t));
    return out;
}

/// Re-emit tracks in the upstream file format (idx = person id, image_id =
/// frame index). parse(serialize(tracks)) reproduces the tracks.
inline std::string serialize_pose_file(const std::vector<PoseTrack>& tracks) {
    nlohmann::json arr = nlohmann::json::array();
    struct Ref {
        const KeypointFrame* f;
        int pid;
    };
    std::vector<Ref> all;
    for (const auto& t : tracks)
        for (const auto& f : t.frames)
            if (!f.interpolated) all.push_back({&f, t.person_id});
    std::stable_sort(all.begin(), all.end(), [](const Ref& a, const Ref& b) {
        if (a.f->frame_index != b.f->frame_index) return a.f->frame_index < b.f->frame_index;
        return a.pid < b.pid;
    });
    for (const auto& r : all) {
        nlohmann::json rec;
        rec["image_id"] = r.f->frame_index;
        rec["idx"] = r.pid;
        rec["score"] = r.f->score;
        rec["box"] = {r.f->bbox.x, r.f->bbox.y, r.f->bbox.w, r.f->bbox.h};
        nlohmann::json kp = nlohmann::json::array();
        for (const auto& p : r.f->points) {
            kp.push_back(p.x);
            kp.push_back(p.y);
            kp.push_back(p.confidence);
        }
        rec["keypoints"] = std::move(kp);
        arr.push_back(std::move(rec));
    }
    return arr.dump();
}

/// Pick the track whose bbox center falls inside the region for the largest
/// fraction of its frames; ties go to the larger mean bbox area, then to the
/// lower person id.
inline const PoseTrack& select_subject(const std::vector<PoseTrack>& tracks,
                                       const DetectionRegion& region) {
    if (tracks.empty()) throw ArgumentError("select_subject: no tracks");
    const PoseTrack* best = nullptr;
    double best_frac = -1, best_area = -1;
    for (const auto& t : tracks) {
        if (t.frames.empty()) continue;
        long inside = 0;
        double area_sum = 0;
        for (const auto& f : t.frames) {
            if (region.contains(f.bbox.cx(), f.bbox.cy())) ++inside;
            area_sum += f.bbox.area();
        }
        const double frac = static_cast<double>(inside) / static_cast<double>(t.frames.size());
        const double area = area_sum / static_cast<double>(t.frames.size());
        const bool better = frac > best_frac || (frac == best_frac && area > best_area) ||
                            (frac == best_frac && area == best_area && best &&
                             t.person_id < best->person_id);
        if (better) {
            best = &t;
            best_frac = frac;
            best_area = area;
        }
    }
    if (!best || best_frac <= 0)
        throw NotFoundError("no track intersects the detection region");
    return *best;
}

/// Fill dropped frames by per-keypoint linear interpolation when the hole
/// spans at most max_gap_frames missing indices. Longer holes stay absent.
/// Existing frames are never altered.
inline PoseTrack fill_gaps(const PoseTrack& track, long max_gap_frames) {
    if (max_gap_frames < 0) throw ArgumentError("max_gap_frames must be >= 0");
    PoseTrack out;
    out.person_id = track.person_id;
    out.fps = track.fps;
    out.schema = track.schema;
    for (size_t i = 0; i < track.frames.size(); ++i) {
        const KeypointFrame& cur = track.frames[i];
        if (i > 0) {
            const KeypointFrame& prev = track.frames[i - 1];
            const long missing = cur.frame_index - prev.frame_index - 1;
            if (missing >= 1 && missing <= max_gap_frames) {
                for (long m = 1; m <= missing; ++m) {
                    const double a = static_cast<double>(m) /
                                     static_cast<double>(cur.frame_index - prev.frame_index);
                    KeypointFrame f;
                    f.frame_index = prev.frame_index + m;
                    f.timestamp_s = static_cast<double>(f.frame_index) / track.fps;
                    f.person_id = track.person_id;
                    f.interpolated = true;
                    f.score = std::min(prev.score, cur.score);
                    f.points.reserve(prev.points.size());
                    for (size_t k = 0; k < prev.points.size(); ++k) {
                        Keypoint p;
                        p.x = prev.points[k].x + a * (cur.points[k].x - prev.points[k].x);
                        p.y = prev.points[k].y + a * (cur.points[k].y - prev.points[k].y);
                        p.confidence = std::min(prev.points[k].confidence, cur.points[k].confidence);
                        f.points.push_back(p);
                    }
                    f.bbox.x = prev.bbox.x + a * (cur.bbox.x - prev.bbox.x);
                    f.bbox.y = prev.bbox.y + a * (cur.bbox.y - prev.bbox.y);
                    f.bbox.w = prev.bbox.w + a * (cur.bbox.w - prev.bbox.w);
                    f.bbox.h = prev.bbox.h + a * (cur.bbox.h - prev.bbox.h);
                    out.frames.push_back(std::move(f));
                }
            }
        }
        out.frames.push_back(cur);
    }
    return out;
}

} // namespace epikin
