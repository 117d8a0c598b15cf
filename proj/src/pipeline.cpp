#include "mcpt/pipeline.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <tuple>

#include "mcpt/anchors.hpp"
#include "mcpt/error.hpp"
#include "mcpt/geometry.hpp"
#include "mcpt/io.hpp"
#include "mcpt/sct.hpp"
#include "mcpt/stcra.hpp"

namespace fs = std::filesystem;

namespace mcpt {
namespace {

constexpr Stage kStageOrder[] = {Stage::calibrate, Stage::sct,         Stage::anchors,
                                 Stage::stcra,     Stage::interpolate, Stage::write};

// every artifact a stage can produce, in manifest (name-sorted) order
const char* const kArtifacts[] = {
    "anchors.csv",       "homographies.txt",      "stcra_changes.csv",
    "tracklets.csv",     "tracklets_global.csv",  "tracklets_interp.csv",
    "tracklets_stcra.csv", "tracks.txt",
};

std::string scene_file(const std::string& scene_dir, const char* name) {
    return (fs::path(scene_dir) / name).string();
}

std::string out_file(const std::string& out_dir, const char* name) {
    return (fs::path(out_dir) / name).string();
}

std::vector<Detection> load_scene_detections(const std::string& scene_dir,
                                             const RunConfig& cfg) {
    std::string kps = scene_file(scene_dir, "keypoints.csv");
    if (!fs::exists(kps)) kps.clear();
    return load_detections(scene_file(scene_dir, "detections.csv"),
                           scene_file(scene_dir, "embeddings.csv"), kps, cfg.embedding_dim);
}

void run_calibrate(const std::string& scene_dir, const std::string& out_dir,
                   const RunConfig& cfg) {
    auto pairs = load_correspondences(scene_file(scene_dir, "correspondences.txt"));
    EstimatorParams params;
    params.ransac_reproj_thresh = cfg.calib_reproj_thresh;
    params.max_iters = cfg.calib_max_iters;
    params.rng_seed = cfg.rng_seed;
    EstimatorMethod method = estimator_from_name(cfg.calib_method);
    std::map<int, Homography> hs;
    for (const auto& [camera, corr] : pairs)
        hs[camera] = estimate_homography(corr, method, params, camera).h;
    write_homographies(hs, out_file(out_dir, "homographies.txt"));
}

void run_sct(const std::string& scene_dir, const std::string& out_dir, const RunConfig& cfg) {
    auto dets = load_scene_detections(scene_dir, cfg);
    std::vector<Tracklet> all;
    // detections arrive sorted by (camera, frame, det_id); track each camera's
    // contiguous block
    size_t lo = 0;
    while (lo < dets.size()) {
        size_t hi = lo;
        while (hi < dets.size() && dets[hi].camera_id == dets[lo].camera_id) ++hi;
        auto ts = track_camera({dets.data() + lo, hi - lo}, cfg);
        for (auto& t : ts) all.push_back(std::move(t));
        lo = hi;
    }
    write_tracklets_csv(all, out_file(out_dir, "tracklets.csv"));
}

void run_anchors(const std::string& scene_dir, const std::string& out_dir,
                 const RunConfig& cfg) {
    auto ts = load_tracklets_csv(out_file(out_dir, "tracklets.csv"));
    auto dets = load_scene_detections(scene_dir, cfg);
    join_scene_features(ts, dets);
    auto feats =
        sample_features(ts, cfg.anchor_sample_period_frames, cfg.anchor_sample_span_frames);
    auto bank = build_anchors(feats, cfg.cluster_dist_thresh, cfg.anchor_features_k,
                              cfg.min_cluster_size, cfg.rng_seed);
    assign_global_ids(ts, bank, cfg.assign_max_cost);
    vote_tracklets(ts, cfg.vote_window);
    write_anchor_bank(bank, out_file(out_dir, "anchors.csv"));
    write_tracklets_csv(ts, out_file(out_dir, "tracklets_global.csv"));
}

void run_stcra(const std::string& scene_dir, const std::string& out_dir,
               const RunConfig& cfg) {
    auto ts = load_tracklets_csv(out_file(out_dir, "tracklets_global.csv"));
    auto hs = load_homographies(out_file(out_dir, "homographies.txt"));
    auto dets = load_scene_detections(scene_dir, cfg);
    join_scene_features(ts, dets); // keypoints refine the ground point
    auto world = lift_to_world(ts, hs, cfg.tau_pose);
    std::vector<StcraChange> log;
    auto result = iterative_stcra(std::move(world), cfg, &log);
    store_ids(result, ts);
    write_tracklets_csv(ts, out_file(out_dir, "tracklets_stcra.csv"));
    write_stcra_changes(log, out_file(out_dir, "stcra_changes.csv"));
}

void run_interpolate(const std::string& out_dir, const RunConfig& cfg) {
    auto ts = load_tracklets_csv(out_file(out_dir, "tracklets_stcra.csv"));
    for (auto& t : ts) t = interpolate_gaps(t, cfg.interp_max_gap);
    write_tracklets_csv(ts, out_file(out_dir, "tracklets_interp.csv"));
}

void run_write(const std::string& out_dir) {
    auto ts = load_tracklets_csv(out_file(out_dir, "tracklets_interp.csv"));
    write_tracks(ts, out_file(out_dir, "tracks.txt"));
}

// deterministic id -> color; collisions only past 12 concurrent ids
const char* const kPalette[] = {
    "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#46f0f0",
    "#f032e6", "#808000", "#008080", "#9a6324", "#800000", "#000075",
};

const char* id_color(int gid) {
    int idx = ((gid % 12) + 12) % 12;
    return kPalette[idx];
}

} // namespace

std::string stage_name(Stage s) {
    switch (s) {
    case Stage::calibrate: return "calibrate";
    case Stage::sct: return "sct";
    case Stage::anchors: return "anchors";
    case Stage::stcra: return "stcra";
    case Stage::interpolate: return "interpolate";
    case Stage::write: return "write";
    }
    throw_internal("unknown stage");
}

std::vector<Stage> parse_stages(const std::string& list) {
    std::set<Stage> picked;
    size_t pos = 0;
    while (pos <= list.size()) {
        size_t comma = list.find(',', pos);
        if (comma == std::string::npos) comma = list.size();
        std::string tok = list.substr(pos, comma - pos);
        size_t b = tok.find_first_not_of(" \t");
        size_t e = tok.find_last_not_of(" \t");
        tok = b == std::string::npos ? std::string() : tok.substr(b, e - b + 1);
        if (tok.empty()) {
            if (list.empty()) break;
            throw_config("empty stage name in '" + list + "'");
        }
        if (tok == "all") {
            for (Stage s : kStageOrder) picked.insert(s);
        } else {
            bool found = false;
            for (Stage s : kStageOrder)
                if (tok == stage_name(s)) {
                    picked.insert(s);
                    found = true;
                    break;
                }
            if (!found) throw_config("unknown stage '" + tok + "'");
        }
        pos = comma + 1;
    }
    if (picked.empty()) throw_config("no stages requested");
    std::vector<Stage> out;
    for (Stage s : kStageOrder)
        if (picked.count(s)) out.push_back(s);
    return out;
}

std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io("cannot open '" + path + "'");
    uint64_t h = 14695981039346656037ull; // FNV-1a 64 offset basis
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull; // FNV prime
        }
        if (!in) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

PipelineResult run_pipeline(const std::string& scene_dir, const std::string& out_dir,
                            const RunConfig& cfg, std::span<const Stage> stages) {
    validate_config(cfg);
    if (stages.empty()) throw_config("no stages requested");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw_io("cannot create output directory '" + out_dir + "'");

    std::set<Stage> requested(stages.begin(), stages.end());
    for (Stage s : kStageOrder) {
        if (!requested.count(s)) continue;
        switch (s) {
        case Stage::calibrate: run_calibrate(scene_dir, out_dir, cfg); break;
        case Stage::sct: run_sct(scene_dir, out_dir, cfg); break;
        case Stage::anchors: run_anchors(scene_dir, out_dir, cfg); break;
        case Stage::stcra: run_stcra(scene_dir, out_dir, cfg); break;
        case Stage::interpolate: run_interpolate(out_dir, cfg); break;
        case Stage::write: run_write(out_dir); break;
        }
    }

    PipelineResult result;
    for (const char* name : kArtifacts) {
        std::string path = out_file(out_dir, name);
        if (fs::exists(path)) result.artifacts.push_back({name, hash_file(path)});
    }
    std::string manifest_path = out_file(out_dir, "manifest.txt");
    std::ofstream m(manifest_path, std::ios::binary);
    if (!m) throw_io("cannot open '" + manifest_path + "' for writing");
    for (const auto& a : result.artifacts) m << a.name << ' ' << a.hash << '\n';
    m.flush();
    if (!m) throw_io("failed writing '" + manifest_path + "'");
    return result;
}

void join_scene_features(std::vector<Tracklet>& tracklets, std::span<const Detection> dets) {
    std::map<std::tuple<int, int, int>, const Detection*> by_key;
    for (const auto& d : dets) by_key[{d.camera_id, d.frame, d.det_id}] = &d;
    for (auto& t : tracklets)
        for (auto& e : t.entries) {
            auto it = by_key.find({t.camera_id, e.frame, e.det_id});
            if (it == by_key.end())
                throw_input("no scene detection for camera " + std::to_string(t.camera_id) +
                            " frame " + std::to_string(e.frame) + " det " +
                            std::to_string(e.det_id));
            e.embedding = it->second->embedding;
            e.keypoints = it->second->keypoints;
        }
}

std::vector<TrackRow> tracklets_to_rows(std::span<const Tracklet> tracklets) {
    std::vector<TrackRow> rows;
    for (const auto& t : tracklets) {
        if (!t.has_global_ids() || !t.has_world_points())
            throw_state("tracklet camera " + std::to_string(t.camera_id) + " local " +
                        std::to_string(t.local_id) + " lacks global ids or world points");
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
    std::sort(rows.begin(), rows.end(), [](const TrackRow& a, const TrackRow& b) {
        return std::tie(a.camera_id, a.frame, a.global_id) <
               std::tie(b.camera_id, b.frame, b.global_id);
    });
    return rows;
}

std::vector<TrackRow> load_rows_for_render(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io("cannot open '" + path + "'");
    std::string first;
    std::getline(in, first);
    in.close();
    if (first.rfind("camera_id,local_id,", 0) == 0) {
        auto ts = load_tracklets_csv(path);
        return tracklets_to_rows(ts);
    }
    return load_tracks(path);
}

std::string render_topdown_svg(std::span<const TrackRow> rows, double map_w, double map_h) {
    if (!(map_w > 0.0) || !(map_h > 0.0)) throw_config("map size must be positive");

    // consensus path per id: mean world point per frame
    std::map<int, std::map<int, std::pair<Vec2, int>>> paths;
    for (const auto& r : rows) {
        auto& [sum, count] = paths[r.global_id][r.frame];
        sum.x += r.world.x;
        sum.y += r.world.y;
        count += 1;
    }

    const double margin = 50.0, plot_w = 720.0;
    const double plot_h = plot_w * map_h / map_w;
    const double legend_w = 140.0;
    const double width = 2 * margin + plot_w + legend_w;
    const double height = 2 * margin + plot_h;
    auto sx = [&](double x) { return margin + x / map_w * plot_w; };
    auto sy = [&](double y) { return margin + y / map_h * plot_h; };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " + fmt_real(width) +
           " " + fmt_real(height) + "\" font-family=\"sans-serif\" font-size=\"13\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"" + fmt_real(width) + "\" height=\"" +
           fmt_real(height) + "\" fill=\"white\"/>\n";
    svg += "<rect x=\"" + fmt_real(margin) + "\" y=\"" + fmt_real(margin) + "\" width=\"" +
           fmt_real(plot_w) + "\" height=\"" + fmt_real(plot_h) +
           "\" fill=\"none\" stroke=\"#333\"/>\n";
    // axis extents
    svg += "<text x=\"" + fmt_real(margin) + "\" y=\"" + fmt_real(height - margin + 18) +
           "\">0</text>\n";
    svg += "<text x=\"" + fmt_real(margin + plot_w) + "\" y=\"" +
           fmt_real(height - margin + 18) + "\" text-anchor=\"end\">" + fmt_real(map_w) +
           "</text>\n";
    svg += "<text x=\"" + fmt_real(margin - 8) + "\" y=\"" + fmt_real(margin + 4) +
           "\" text-anchor=\"end\">0</text>\n";
    svg += "<text x=\"" + fmt_real(margin - 8) + "\" y=\"" + fmt_real(margin + plot_h) +
           "\" text-anchor=\"end\">" + fmt_real(map_h) + "</text>\n";
    svg += "<text x=\"" + fmt_real(margin + plot_w / 2) + "\" y=\"" +
           fmt_real(height - margin + 36) +
           "\" text-anchor=\"middle\">x (map units)</text>\n";
    svg += "<text x=\"" + fmt_real(margin) + "\" y=\"" + fmt_real(margin - 12) +
           "\">y (map units)</text>\n";

    for (const auto& [gid, frames] : paths) {
        std::string pts;
        for (const auto& [frame, acc] : frames) {
            Vec2 mean{acc.first.x / acc.second, acc.first.y / acc.second};
            if (!pts.empty()) pts += ' ';
            pts += fmt_real(sx(mean.x)) + "," + fmt_real(sy(mean.y));
        }
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(id_color(gid)) +
               "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
    }

    double lx = 2 * margin + plot_w - 10;
    double ly = margin + 8;
    svg += "<text x=\"" + fmt_real(lx) + "\" y=\"" + fmt_real(ly) +
           "\" font-weight=\"bold\">ids</text>\n";
    int slot = 1;
    for (const auto& [gid, frames] : paths) {
        double y = ly + 20.0 * slot;
        svg += "<line x1=\"" + fmt_real(lx) + "\" y1=\"" + fmt_real(y - 4) + "\" x2=\"" +
               fmt_real(lx + 24) + "\" y2=\"" + fmt_real(y - 4) + "\" stroke=\"" +
               std::string(id_color(gid)) + "\" stroke-width=\"3\"/>\n";
        svg += "<text x=\"" + fmt_real(lx + 30) + "\" y=\"" + fmt_real(y) + "\">id " +
               std::to_string(gid) + "</text>\n";
        ++slot;
    }
    svg += "</svg>\n";
    return svg;
}

void render_topdown(std::span<const TrackRow> rows, double map_w, double map_h,
                    const std::string& out_path) {
    std::string svg = render_topdown_svg(rows, map_w, map_h);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw_io("cannot open '" + out_path + "' for writing");
    out << svg;
    out.flush();
    if (!out) throw_io("failed writing '" + out_path + "'");
}

} // namespace mcpt
