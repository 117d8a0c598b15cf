#include "mcpt/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <string_view>
#include <tuple>

#include "mcpt/error.hpp"

namespace mcpt {

namespace {

using DetKey = std::tuple<int, int, int>; // camera_id, frame, det_id

[[noreturn]] void fail_at(const std::string& path, int line, const std::string& msg) {
    throw_parse(path + ":" + std::to_string(line) + ": " + msg);
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw_io("cannot open " + path + " for reading");
    return f;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw_io("cannot open " + path + " for writing");
    return f;
}

void finish_write(std::ofstream& f, const std::string& path) {
    f.flush();
    if (!f.good()) throw_io("write to " + path + " failed");
}

// Reads the next line, stripping a trailing '\r'. Returns false at EOF.
bool next_line(std::ifstream& f, std::string& line) {
    if (!std::getline(f, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    size_t start = 0;
    while (true) {
        size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

int parse_int(std::string_view tok, const std::string& path, int line, const char* what) {
    int v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
        fail_at(path, line, std::string("bad ") + what + " '" + std::string(tok) + "'");
    return v;
}

double parse_real(std::string_view tok, const std::string& path, int line, const char* what) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
        fail_at(path, line, std::string("bad ") + what + " '" + std::string(tok) + "'");
    return v;
}

void expect_fields(const std::vector<std::string_view>& f, size_t n, const std::string& path,
                   int line) {
    if (f.size() != n)
        fail_at(path, line,
                "expected " + std::to_string(n) + " fields, got " + std::to_string(f.size()));
}

std::string key_str(const DetKey& k) {
    return "(camera " + std::to_string(std::get<0>(k)) + ", frame " +
           std::to_string(std::get<1>(k)) + ", det " + std::to_string(std::get<2>(k)) + ")";
}

// Verifies a CSV header against exact expected column names.
void check_header(const std::vector<std::string_view>& got,
                  const std::vector<std::string>& want, const std::string& path) {
    if (got.size() != want.size())
        fail_at(path, 1,
                "header has " + std::to_string(got.size()) + " columns, expected " +
                    std::to_string(want.size()));
    for (size_t i = 0; i < want.size(); ++i)
        if (got[i] != want[i])
            fail_at(path, 1,
                    "header column " + std::to_string(i) + " is '" + std::string(got[i]) +
                        "', expected '" + want[i] + "'");
}

} // namespace

std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::vector<Detection> load_detections(const std::string& detections_path,
                                       const std::string& embeddings_path,
                                       const std::string& keypoints_path,
                                       int expected_dim) {
    std::map<DetKey, Detection> dets;

    {
        auto f = open_in(detections_path);
        std::string line;
        int lineno = 0;
        bool saw_header = false;
        while (next_line(f, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            auto fields = split_csv(line);
            if (!saw_header) {
                check_header(fields,
                             {"camera_id", "frame", "det_id", "x", "y", "w", "h", "score"},
                             detections_path);
                saw_header = true;
                continue;
            }
            expect_fields(fields, 8, detections_path, lineno);
            Detection d;
            d.camera_id = parse_int(fields[0], detections_path, lineno, "camera_id");
            d.frame = parse_int(fields[1], detections_path, lineno, "frame");
            d.det_id = parse_int(fields[2], detections_path, lineno, "det_id");
            d.box.x = parse_real(fields[3], detections_path, lineno, "x");
            d.box.y = parse_real(fields[4], detections_path, lineno, "y");
            d.box.w = parse_real(fields[5], detections_path, lineno, "w");
            d.box.h = parse_real(fields[6], detections_path, lineno, "h");
            d.score = parse_real(fields[7], detections_path, lineno, "score");
            DetKey key{d.camera_id, d.frame, d.det_id};
            if (!dets.emplace(key, std::move(d)).second)
                fail_at(detections_path, lineno, "duplicate detection " + key_str(key));
        }
    }

    int dim = expected_dim;
    {
        auto f = open_in(embeddings_path);
        std::string line;
        int lineno = 0;
        bool saw_header = false;
        std::set<DetKey> seen;
        while (next_line(f, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            auto fields = split_csv(line);
            if (!saw_header) {
                if (fields.size() < 4)
                    fail_at(embeddings_path, 1, "embedding header needs >= 4 columns");
                std::vector<std::string> want = {"camera_id", "frame", "det_id"};
                int file_dim = static_cast<int>(fields.size()) - 3;
                for (int i = 0; i < file_dim; ++i) want.push_back("e" + std::to_string(i));
                check_header(fields, want, embeddings_path);
                if (expected_dim > 0 && file_dim != expected_dim)
                    fail_at(embeddings_path, 1,
                            "embedding dimension " + std::to_string(file_dim) + " != configured " +
                                std::to_string(expected_dim));
                dim = file_dim;
                saw_header = true;
                continue;
            }
            expect_fields(fields, static_cast<size_t>(3 + dim), embeddings_path, lineno);
            DetKey key{parse_int(fields[0], embeddings_path, lineno, "camera_id"),
                       parse_int(fields[1], embeddings_path, lineno, "frame"),
                       parse_int(fields[2], embeddings_path, lineno, "det_id")};
            auto it = dets.find(key);
            if (it == dets.end())
                fail_at(embeddings_path, lineno, "embedding for unknown " + key_str(key));
            if (!seen.insert(key).second)
                fail_at(embeddings_path, lineno, "duplicate embedding for " + key_str(key));
            auto& emb = it->second.embedding;
            emb.resize(dim);
            for (int i = 0; i < dim; ++i)
                emb[i] = parse_real(fields[3 + i], embeddings_path, lineno, "embedding value");
        }
        if (seen.size() != dets.size())
            for (const auto& [key, d] : dets)
                if (!seen.count(key))
                    throw_input(embeddings_path + ": no embedding for " + key_str(key));
    }

    if (!keypoints_path.empty()) {
        auto f = open_in(keypoints_path);
        std::string line;
        int lineno = 0;
        bool saw_header = false;
        std::set<DetKey> seen;
        while (next_line(f, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            auto fields = split_csv(line);
            if (!saw_header) {
                std::vector<std::string> want = {"camera_id", "frame", "det_id"};
                for (int i = 0; i < kNumKeypoints; ++i) {
                    want.push_back("kp" + std::to_string(i) + "_x");
                    want.push_back("kp" + std::to_string(i) + "_y");
                    want.push_back("kp" + std::to_string(i) + "_c");
                }
                check_header(fields, want, keypoints_path);
                saw_header = true;
                continue;
            }
            expect_fields(fields, static_cast<size_t>(3 + 3 * kNumKeypoints), keypoints_path,
                          lineno);
            DetKey key{parse_int(fields[0], keypoints_path, lineno, "camera_id"),
                       parse_int(fields[1], keypoints_path, lineno, "frame"),
                       parse_int(fields[2], keypoints_path, lineno, "det_id")};
            auto it = dets.find(key);
            if (it == dets.end())
                fail_at(keypoints_path, lineno, "keypoints for unknown " + key_str(key));
            if (!seen.insert(key).second)
                fail_at(keypoints_path, lineno, "duplicate keypoints for " + key_str(key));
            std::vector<Keypoint> kps(kNumKeypoints);
            for (int i = 0; i < kNumKeypoints; ++i) {
                kps[i].x = parse_real(fields[3 + 3 * i], keypoints_path, lineno, "keypoint x");
                kps[i].y = parse_real(fields[4 + 3 * i], keypoints_path, lineno, "keypoint y");
                kps[i].c = parse_real(fields[5 + 3 * i], keypoints_path, lineno, "keypoint conf");
            }
            it->second.keypoints = std::move(kps);
        }
    }

    std::vector<Detection> out;
    out.reserve(dets.size());
    for (auto& [key, d] : dets) {
        validate_detection(d, dim);
        out.push_back(std::move(d));
    }
    return out;
}

void write_detections(std::span<const Detection> dets,
                      const std::string& detections_path,
                      const std::string& embeddings_path,
                      const std::string& keypoints_path) {
    std::vector<size_t> order(dets.size());
    for (size_t i = 0; i < dets.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return DetKey{dets[a].camera_id, dets[a].frame, dets[a].det_id} <
               DetKey{dets[b].camera_id, dets[b].frame, dets[b].det_id};
    });

    size_t dim = dets.empty() ? 0 : dets.front().embedding.size();
    for (const auto& d : dets)
        if (d.embedding.size() != dim)
            throw_state("detections have mixed embedding dimensions");

    {
        auto f = open_out(detections_path);
        f << "camera_id,frame,det_id,x,y,w,h,score\n";
        for (size_t i : order) {
            const auto& d = dets[i];
            f << d.camera_id << ',' << d.frame << ',' << d.det_id << ',' << fmt_real(d.box.x)
              << ',' << fmt_real(d.box.y) << ',' << fmt_real(d.box.w) << ',' << fmt_real(d.box.h)
              << ',' << fmt_real(d.score) << '\n';
        }
        finish_write(f, detections_path);
    }
    {
        auto f = open_out(embeddings_path);
        f << "camera_id,frame,det_id";
        for (size_t i = 0; i < dim; ++i) f << ",e" << i;
        f << '\n';
        for (size_t i : order) {
            const auto& d = dets[i];
            f << d.camera_id << ',' << d.frame << ',' << d.det_id;
            for (double v : d.embedding) f << ',' << fmt_real(v);
            f << '\n';
        }
        finish_write(f, embeddings_path);
    }
    if (!keypoints_path.empty()) {
        auto f = open_out(keypoints_path);
        f << "camera_id,frame,det_id";
        for (int i = 0; i < kNumKeypoints; ++i)
            f << ",kp" << i << "_x,kp" << i << "_y,kp" << i << "_c";
        f << '\n';
        for (size_t i : order) {
            const auto& d = dets[i];
            if (!d.keypoints) continue;
            f << d.camera_id << ',' << d.frame << ',' << d.det_id;
            for (const auto& kp : *d.keypoints)
                f << ',' << fmt_real(kp.x) << ',' << fmt_real(kp.y) << ',' << fmt_real(kp.c);
            f << '\n';
        }
        finish_write(f, keypoints_path);
    }
}

void write_tracks(std::span<const Tracklet> tracklets, const std::string& path) {
    std::vector<TrackRow> rows;
    for (const auto& t : tracklets) {
        if (!t.has_global_ids()) throw_state("tracklet " + std::to_string(t.local_id) +
                                             " has no global ids; cannot write tracks");
        if (!t.has_world_points()) throw_state("tracklet " + std::to_string(t.local_id) +
                                               " has no world points; cannot write tracks");
        validate_tracklet(t);
        for (size_t i = 0; i < t.entries.size(); ++i) {
            if (t.global_ids[i] == kUnassigned) continue;
            TrackRow r;
            r.camera_id = t.camera_id;
            r.global_id = t.global_ids[i];
            r.frame = t.entries[i].frame;
            r.box = t.entries[i].box;
            r.world = t.world_points[i];
            rows.push_back(r);
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const TrackRow& a, const TrackRow& b) {
        return std::tie(a.camera_id, a.frame, a.global_id) <
               std::tie(b.camera_id, b.frame, b.global_id);
    });
    write_track_rows(rows, path);
}

void write_track_rows(std::span<const TrackRow> rows, const std::string& path) {
    auto f = open_out(path);
    for (const auto& r : rows) {
        f << r.camera_id << ' ' << r.global_id << ' ' << r.frame << ' ' << fmt_real(r.box.x)
          << ' ' << fmt_real(r.box.y) << ' ' << fmt_real(r.box.w) << ' ' << fmt_real(r.box.h)
          << ' ' << fmt_real(r.world.x) << ' ' << fmt_real(r.world.y) << '\n';
    }
    finish_write(f, path);
}

std::vector<TrackRow> load_tracks(const std::string& path) {
    auto f = open_in(path);
    std::vector<TrackRow> rows;
    std::string line;
    int lineno = 0;
    while (next_line(f, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto fields = split_ws(line);
        expect_fields(fields, 9, path, lineno);
        TrackRow r;
        r.camera_id = parse_int(fields[0], path, lineno, "camera_id");
        r.global_id = parse_int(fields[1], path, lineno, "global_id");
        r.frame = parse_int(fields[2], path, lineno, "frame");
        r.box.x = parse_real(fields[3], path, lineno, "x");
        r.box.y = parse_real(fields[4], path, lineno, "y");
        r.box.w = parse_real(fields[5], path, lineno, "w");
        r.box.h = parse_real(fields[6], path, lineno, "h");
        r.world.x = parse_real(fields[7], path, lineno, "xworld");
        r.world.y = parse_real(fields[8], path, lineno, "yworld");
        if (!(r.box.w > 0.0) || !(r.box.h > 0.0))
            fail_at(path, lineno, "box extent must be positive");
        if (r.frame < 0) fail_at(path, lineno, "negative frame");
        rows.push_back(r);
    }
    return rows;
}

std::map<int, std::vector<Correspondence>> load_correspondences(const std::string& path) {
    auto f = open_in(path);
    std::map<int, std::vector<Correspondence>> out;
    std::string line;
    int lineno = 0;
    while (next_line(f, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto fields = split_ws(line);
        expect_fields(fields, 5, path, lineno);
        int cam = parse_int(fields[0], path, lineno, "camera_id");
        Correspondence c;
        c.image_point.x = parse_real(fields[1], path, lineno, "u");
        c.image_point.y = parse_real(fields[2], path, lineno, "v");
        c.map_point.x = parse_real(fields[3], path, lineno, "X");
        c.map_point.y = parse_real(fields[4], path, lineno, "Y");
        out[cam].push_back(c);
    }
    return out;
}

void write_correspondences(const std::map<int, std::vector<Correspondence>>& by_camera,
                           const std::string& path) {
    auto f = open_out(path);
    for (const auto& [cam, pairs] : by_camera)
        for (const auto& c : pairs)
            f << cam << ' ' << fmt_real(c.image_point.x) << ' ' << fmt_real(c.image_point.y)
              << ' ' << fmt_real(c.map_point.x) << ' ' << fmt_real(c.map_point.y) << '\n';
    finish_write(f, path);
}

std::map<int, Homography> load_homographies(const std::string& path) {
    auto f = open_in(path);
    std::map<int, Homography> out;
    std::string line;
    int lineno = 0;
    while (next_line(f, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto fields = split_ws(line);
        expect_fields(fields, 10, path, lineno);
        int cam = parse_int(fields[0], path, lineno, "camera_id");
        if (out.count(cam)) fail_at(path, lineno, "duplicate camera " + std::to_string(cam));
        std::array<double, 9> h;
        for (int i = 0; i < 9; ++i)
            h[i] = parse_real(fields[1 + i], path, lineno, "matrix entry");
        try {
            out[cam] = make_homography(h, cam);
        } catch (const error& e) {
            fail_at(path, lineno, e.what());
        }
    }
    return out;
}

void write_homographies(const std::map<int, Homography>& by_camera, const std::string& path) {
    auto f = open_out(path);
    for (const auto& [cam, h] : by_camera) {
        f << cam;
        for (double v : h.h) f << ' ' << fmt_real(v);
        f << '\n';
    }
    finish_write(f, path);
}

void write_anchor_bank(const AnchorBank& bank, const std::string& path) {
    validate_anchor_bank(bank);
    size_t dim = bank.anchors.empty() ? 0 : bank.anchors.front().features.front().size();
    auto f = open_out(path);
    f << "global_id,slot";
    for (size_t i = 0; i < dim; ++i) f << ",e" << i;
    f << '\n';
    std::vector<const Anchor*> order;
    for (const auto& a : bank.anchors) order.push_back(&a);
    std::sort(order.begin(), order.end(),
              [](const Anchor* a, const Anchor* b) { return a->global_id < b->global_id; });
    for (const Anchor* a : order)
        for (size_t slot = 0; slot < a->features.size(); ++slot) {
            f << a->global_id << ',' << slot;
            for (double v : a->features[slot]) f << ',' << fmt_real(v);
            f << '\n';
        }
    finish_write(f, path);
}

AnchorBank load_anchor_bank(const std::string& path) {
    auto f = open_in(path);
    std::string line;
    int lineno = 0;
    bool saw_header = false;
    int dim = 0;
    std::map<int, std::map<int, std::vector<double>>> rows;
    while (next_line(f, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto fields = split_csv(line);
        if (!saw_header) {
            if (fields.size() < 3) fail_at(path, 1, "anchor header needs >= 3 columns");
            std::vector<std::string> want = {"global_id", "slot"};
            dim = static_cast<int>(fields.size()) - 2;
            for (int i = 0; i < dim; ++i) want.push_back("e" + std::to_string(i));
            check_header(fields, want, path);
            saw_header = true;
            continue;
        }
        expect_fields(fields, static_cast<size_t>(2 + dim), path, lineno);
        int gid = parse_int(fields[0], path, lineno, "global_id");
        int slot = parse_int(fields[1], path, lineno, "slot");
        if (slot < 0) fail_at(path, lineno, "negative slot");
        std::vector<double> feat(dim);
        for (int i = 0; i < dim; ++i)
            feat[i] = parse_real(fields[2 + i], path, lineno, "feature value");
        if (!rows[gid].emplace(slot, std::move(feat)).second)
            fail_at(path, lineno, "duplicate slot " + std::to_string(slot) + " for id " +
                                      std::to_string(gid));
    }
    AnchorBank bank;
    for (auto& [gid, slots] : rows) {
        Anchor a;
        a.global_id = gid;
        int expect = 0;
        for (auto& [slot, feat] : slots) {
            if (slot != expect)
                throw_parse(path + ": id " + std::to_string(gid) + " slots not contiguous from 0");
            ++expect;
            a.features.push_back(std::move(feat));
        }
        bank.anchors.push_back(std::move(a));
    }
    validate_anchor_bank(bank);
    return bank;
}

void write_tracklets_csv(std::span<const Tracklet> tracklets, const std::string& path) {
    bool with_gid = !tracklets.empty() && tracklets.front().has_global_ids();
    bool with_world = !tracklets.empty() && tracklets.front().has_world_points();
    for (const auto& t : tracklets) {
        validate_tracklet(t);
        if (t.has_global_ids() != with_gid || t.has_world_points() != with_world)
            throw_state("tracklets disagree on optional columns");
    }
    std::vector<const Tracklet*> order;
    for (const auto& t : tracklets) order.push_back(&t);
    std::sort(order.begin(), order.end(), [](const Tracklet* a, const Tracklet* b) {
        return std::tie(a->camera_id, a->local_id) < std::tie(b->camera_id, b->local_id);
    });

    auto f = open_out(path);
    f << "camera_id,local_id,frame,det_id,x,y,w,h,score";
    if (with_gid) f << ",global_id";
    if (with_world) f << ",xworld,yworld";
    f << '\n';
    for (const Tracklet* t : order)
        for (size_t i = 0; i < t->entries.size(); ++i) {
            const auto& d = t->entries[i];
            f << t->camera_id << ',' << t->local_id << ',' << d.frame << ',' << d.det_id << ','
              << fmt_real(d.box.x) << ',' << fmt_real(d.box.y) << ',' << fmt_real(d.box.w) << ','
              << fmt_real(d.box.h) << ',' << fmt_real(d.score);
            if (with_gid) f << ',' << t->global_ids[i];
            if (with_world)
                f << ',' << fmt_real(t->world_points[i].x) << ','
                  << fmt_real(t->world_points[i].y);
            f << '\n';
        }
    finish_write(f, path);
}

std::vector<Tracklet> load_tracklets_csv(const std::string& path) {
    auto f = open_in(path);
    std::string line;
    int lineno = 0;
    bool saw_header = false;
    bool with_gid = false, with_world = false;
    std::map<std::pair<int, int>, Tracklet> by_key;
    while (next_line(f, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto fields = split_csv(line);
        if (!saw_header) {
            std::vector<std::string> base = {"camera_id", "local_id", "frame", "det_id",
                                             "x",         "y",        "w",     "h",
                                             "score"};
            if (fields.size() == 10) {
                with_gid = true;
                base.push_back("global_id");
            } else if (fields.size() == 11) {
                with_world = true;
                base.push_back("xworld");
                base.push_back("yworld");
            } else if (fields.size() == 12) {
                with_gid = with_world = true;
                base.push_back("global_id");
                base.push_back("xworld");
                base.push_back("yworld");
            }
            check_header(fields, base, path);
            saw_header = true;
            continue;
        }
        size_t want = 9 + (with_gid ? 1 : 0) + (with_world ? 2 : 0);
        expect_fields(fields, want, path, lineno);
        int cam = parse_int(fields[0], path, lineno, "camera_id");
        int local = parse_int(fields[1], path, lineno, "local_id");
        Detection d;
        d.camera_id = cam;
        d.frame = parse_int(fields[2], path, lineno, "frame");
        d.det_id = parse_int(fields[3], path, lineno, "det_id");
        d.box.x = parse_real(fields[4], path, lineno, "x");
        d.box.y = parse_real(fields[5], path, lineno, "y");
        d.box.w = parse_real(fields[6], path, lineno, "w");
        d.box.h = parse_real(fields[7], path, lineno, "h");
        d.score = parse_real(fields[8], path, lineno, "score");
        size_t next = 9;
        auto& t = by_key[{cam, local}];
        t.camera_id = cam;
        t.local_id = local;
        if (with_gid)
            t.global_ids.push_back(parse_int(fields[next++], path, lineno, "global_id"));
        if (with_world) {
            Vec2 w;
            w.x = parse_real(fields[next], path, lineno, "xworld");
            w.y = parse_real(fields[next + 1], path, lineno, "yworld");
            t.world_points.push_back(w);
        }
        t.entries.push_back(std::move(d));
    }
    std::vector<Tracklet> out;
    out.reserve(by_key.size());
    for (auto& [key, t] : by_key) {
        for (const auto& e : t.entries) validate_detection(e, 0);
        validate_tracklet(t);
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> parse_kv_file(const std::string& path) {
    auto f = open_in(path);
    std::vector<std::pair<std::string, std::string>> out;
    std::set<std::string> seen;
    std::string line;
    int lineno = 0;
    while (next_line(f, line)) {
        ++lineno;
        std::string_view s = line;
        size_t hash = s.find('#');
        if (hash != std::string_view::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        size_t eq = s.find('=');
        if (eq == std::string_view::npos) fail_at(path, lineno, "expected 'key = value'");
        std::string key(trim(s.substr(0, eq)));
        std::string value(trim(s.substr(eq + 1)));
        if (key.empty()) fail_at(path, lineno, "empty key");
        if (value.empty()) fail_at(path, lineno, "empty value for key '" + key + "'");
        if (!seen.insert(key).second) fail_at(path, lineno, "duplicate key '" + key + "'");
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

namespace {

int config_int(const std::string& key, const std::string& value) {
    int v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || p != value.data() + value.size())
        throw_config("config key '" + key + "': bad integer '" + value + "'");
    return v;
}

double config_real(const std::string& key, const std::string& value) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || p != value.data() + value.size())
        throw_config("config key '" + key + "': bad number '" + value + "'");
    return v;
}

bool config_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw_config("config key '" + key + "': bad boolean '" + value + "'");
}

std::vector<double> config_real_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    for (std::string_view field : split_csv(value))
        out.push_back(config_real(key, std::string(field)));
    return out;
}

void apply_one(RunConfig& cfg, const std::string& key, const std::string& value) {
    static const std::string cam_prefix = "low_score_thresh.camera_";
    if (key.rfind(cam_prefix, 0) == 0) {
        std::string suffix = key.substr(cam_prefix.size());
        int cam = config_int(key, suffix);
        cfg.low_score_thresh_per_camera[cam] = config_real(key, value);
        return;
    }
    if (key == "high_score_thresh") cfg.high_score_thresh = config_real(key, value);
    else if (key == "low_score_thresh") cfg.low_score_thresh = config_real(key, value);
    else if (key == "tau_pose") cfg.tau_pose = config_real(key, value);
    else if (key == "vote_window") cfg.vote_window = config_int(key, value);
    else if (key == "cluster_dist_thresh") cfg.cluster_dist_thresh = config_real(key, value);
    else if (key == "anchor_sample_period_frames")
        cfg.anchor_sample_period_frames = config_int(key, value);
    else if (key == "anchor_sample_span_frames")
        cfg.anchor_sample_span_frames = config_int(key, value);
    else if (key == "anchor_features_k") cfg.anchor_features_k = config_int(key, value);
    else if (key == "min_cluster_size") cfg.min_cluster_size = config_int(key, value);
    else if (key == "assign_max_cost") cfg.assign_max_cost = config_real(key, value);
    else if (key == "stcra_iterations") cfg.stcra_iterations = config_int(key, value);
    else if (key == "stcra_conf_thresholds")
        cfg.stcra_conf_thresholds = config_real_list(key, value);
    else if (key == "stcra_outlier_thresholds")
        cfg.stcra_outlier_thresholds = config_real_list(key, value);
    else if (key == "smoothing_window") cfg.smoothing_window = config_int(key, value);
    else if (key == "stcra_weighted_consensus")
        cfg.stcra_weighted_consensus = config_bool(key, value);
    else if (key == "max_age") cfg.max_age = config_int(key, value);
    else if (key == "sct_min_hits") cfg.sct_min_hits = config_int(key, value);
    else if (key == "sct_match_thresh") cfg.sct_match_thresh = config_real(key, value);
    else if (key == "sct_stage2_match_thresh")
        cfg.sct_stage2_match_thresh = config_real(key, value);
    else if (key == "sct_appearance_thresh") cfg.sct_appearance_thresh = config_real(key, value);
    else if (key == "sct_feature_momentum") cfg.sct_feature_momentum = config_real(key, value);
    else if (key == "interp_max_gap") cfg.interp_max_gap = config_int(key, value);
    else if (key == "calib_method") cfg.calib_method = value;
    else if (key == "calib_reproj_thresh") cfg.calib_reproj_thresh = config_real(key, value);
    else if (key == "calib_max_iters") cfg.calib_max_iters = config_int(key, value);
    else if (key == "embedding_dim") cfg.embedding_dim = config_int(key, value);
    else if (key == "rng_seed") {
        uint64_t v = 0;
        auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc() || p != value.data() + value.size())
            throw_config("config key 'rng_seed': bad integer '" + value + "'");
        cfg.rng_seed = v;
    } else {
        throw_config("unknown config key '" + key + "'");
    }
}

} // namespace

RunConfig load_run_config(const std::string& path) {
    RunConfig cfg;
    for (const auto& [key, value] : parse_kv_file(path)) apply_one(cfg, key, value);
    validate_config(cfg);
    return cfg;
}

void apply_config_override(RunConfig& cfg, const std::string& key, const std::string& value) {
    apply_one(cfg, key, value);
    validate_config(cfg);
}

} // namespace mcpt
