#include "mcpt/stcra.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <tuple>

#include "mcpt/error.hpp"
#include "mcpt/io.hpp"

namespace mcpt {
namespace {

double pt_dist(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Eq-style consistency with medoid-based outlier removal; peers are world
// points of one id in one frame seen from other cameras.
double inconsistency_core(Vec2 x, std::span<const Vec2> peers, double outlier_thresh,
                          bool weighted) {
    const size_t m = peers.size();
    if (m == 0) return kNoPeers;
    std::vector<double> sums(m, 0.0);
    for (size_t i = 0; i < m; ++i)
        for (size_t j = i + 1; j < m; ++j) {
            double d = pt_dist(peers[i], peers[j]);
            sums[i] += d;
            sums[j] += d;
        }
    double min_sum = *std::min_element(sums.begin(), sums.end());
    double tol = 1e-9 * std::max(1.0, min_sum);
    std::vector<size_t> medoids;
    for (size_t i = 0; i < m; ++i)
        if (sums[i] <= min_sum + tol) medoids.push_back(i);

    double sx = 0.0, sy = 0.0, wsum = 0.0;
    for (size_t k = 0; k < m; ++k) {
        double dmed = std::numeric_limits<double>::infinity();
        for (size_t mi : medoids) dmed = std::min(dmed, pt_dist(peers[k], peers[mi]));
        if (dmed > outlier_thresh) continue;
        double w = weighted ? 1.0 / (1.0 + dmed * dmed) : 1.0;
        sx += w * peers[k].x;
        sy += w * peers[k].y;
        wsum += w;
    }
    if (!(wsum > 0.0)) return kNoPeers; // cannot happen: medoids survive themselves
    double dx = sx / wsum - x.x, dy = sy / wsum - x.y;
    return dx * dx + dy * dy;
}

} // namespace

std::vector<WorldDetection> lift_to_world(std::span<const Tracklet> tracklets,
                                          const std::map<int, Homography>& homographies,
                                          double tau_pose) {
    std::vector<WorldDetection> out;
    for (const auto& t : tracklets) {
        validate_tracklet(t);
        auto it = homographies.find(t.camera_id);
        if (it == homographies.end())
            throw_config("no homography for camera " + std::to_string(t.camera_id));
        for (size_t i = 0; i < t.entries.size(); ++i) {
            const Detection& det = t.entries[i];
            WorldDetection w;
            w.camera_id = t.camera_id;
            w.frame = det.frame;
            w.global_id = t.has_global_ids() ? t.global_ids[i] : kUnassigned;
            w.box = det.box;
            w.world = project(it->second, ground_point(det, tau_pose));
            w.local_id = t.local_id;
            w.det_id = det.det_id;
            out.push_back(w);
        }
    }
    return out;
}

void store_ids(std::span<const WorldDetection> dets, std::vector<Tracklet>& tracklets) {
    size_t pos = 0;
    for (auto& t : tracklets) {
        t.global_ids.assign(t.entries.size(), kUnassigned);
        t.world_points.assign(t.entries.size(), Vec2{});
        for (size_t i = 0; i < t.entries.size(); ++i) {
            if (pos >= dets.size())
                throw_input("store_ids: fewer world detections than tracklet entries");
            const WorldDetection& w = dets[pos++];
            if (w.camera_id != t.camera_id || w.local_id != t.local_id ||
                w.frame != t.entries[i].frame || w.det_id != t.entries[i].det_id)
                throw_input("store_ids: world detections do not align with the tracklets");
            t.global_ids[i] = w.global_id;
            t.world_points[i] = w.world;
        }
    }
    if (pos != dets.size())
        throw_input("store_ids: more world detections than tracklet entries");
}

double spatial_inconsistency(const WorldDetection& x, std::span<const WorldDetection> peers,
                             double outlier_thresh, bool weighted) {
    if (!(outlier_thresh > 0.0)) throw_input("spatial_inconsistency: outlier_thresh must be > 0");
    std::vector<Vec2> pts;
    pts.reserve(peers.size());
    for (const auto& p : peers) {
        if (p.camera_id == x.camera_id)
            throw_input("spatial_inconsistency: peer from the queried detection's camera");
        if (p.frame != x.frame) throw_input("spatial_inconsistency: peer from another frame");
        if (p.global_id != peers.front().global_id)
            throw_input("spatial_inconsistency: peers carry mixed ids");
        pts.push_back(p.world);
    }
    return inconsistency_core(x.world, pts, outlier_thresh, weighted);
}

double reassign_confidence(const WorldDetection& x, int current_id, int candidate_id,
                           const std::map<int, std::vector<WorldDetection>>& frame_state,
                           double outlier_thresh, bool weighted) {
    if (current_id == candidate_id) throw_input("reassign_confidence: ids must differ");
    auto gather = [&](int id) {
        std::vector<Vec2> pts;
        auto it = frame_state.find(id);
        if (it != frame_state.end())
            for (const auto& p : it->second) {
                if (p.frame != x.frame)
                    throw_input("reassign_confidence: frame state holds another frame");
                if (p.camera_id != x.camera_id) pts.push_back(p.world);
            }
        return pts;
    };
    double di = inconsistency_core(x.world, gather(current_id), outlier_thresh, weighted);
    double dj = inconsistency_core(x.world, gather(candidate_id), outlier_thresh, weighted);
    if (di == kNoPeers || dj == kNoPeers)
        throw_input("reassign_confidence: an id has no surviving peers in this frame");
    if (di == 0.0) {
        if (dj == 0.0) throw_input("reassign_confidence: both distances are zero");
        return -std::numeric_limits<double>::infinity();
    }
    return 1.0 - dj / di;
}

int stcra_pass(std::vector<WorldDetection>& dets, double conf_thresh, double outlier_thresh,
               bool weighted, int log_iteration, std::vector<StcraChange>* log) {
    if (!(conf_thresh > 0.0) || !(outlier_thresh > 0.0))
        throw_input("stcra_pass: thresholds must be positive");

    // frame -> id -> world points from each camera (frozen snapshot)
    std::map<int, std::map<int, std::vector<size_t>>> index;
    for (size_t i = 0; i < dets.size(); ++i)
        if (dets[i].global_id != kUnassigned)
            index[dets[i].frame][dets[i].global_id].push_back(i);

    struct Proposal {
        size_t det = 0;
        int new_id = 0;
        double confidence = 0.0;
    };
    std::vector<Proposal> proposals;

    for (size_t di = 0; di < dets.size(); ++di) {
        const WorldDetection& x = dets[di];
        if (x.global_id == kUnassigned) continue;
        const auto& by_id = index.at(x.frame);

        auto peer_points = [&](int id) {
            std::vector<Vec2> pts;
            auto it = by_id.find(id);
            if (it != by_id.end())
                for (size_t pi : it->second)
                    if (dets[pi].camera_id != x.camera_id) pts.push_back(dets[pi].world);
            return pts;
        };

        double d_cur = inconsistency_core(x.world, peer_points(x.global_id), outlier_thresh,
                                          weighted);
        if (d_cur == kNoPeers || d_cur <= outlier_thresh) continue;

        int best_id = kUnassigned;
        double best_conf = -std::numeric_limits<double>::infinity();
        for (const auto& cand_entry : by_id) {
            int cand = cand_entry.first;
            if (cand == x.global_id) continue;
            double d_cand =
                inconsistency_core(x.world, peer_points(cand), outlier_thresh, weighted);
            if (d_cand == kNoPeers) continue;
            if (d_cur == 0.0 && d_cand == 0.0) continue; // undefined ratio
            double conf = d_cur == 0.0 ? -std::numeric_limits<double>::infinity()
                                       : 1.0 - d_cand / d_cur;
            if (conf > best_conf) { // ties keep the smaller id (ascending scan)
                best_conf = conf;
                best_id = cand;
            }
        }
        if (best_id != kUnassigned && best_conf >= conf_thresh)
            proposals.push_back({di, best_id, best_conf});
    }

    // all accepted moves apply atomically, so a pair of detections in one
    // (camera, frame) may exchange ids; per-cell id uniqueness is enforced on
    // the final state
    // 1. one winner per target (camera, frame, new_id): highest confidence,
    //    then smallest previous id
    std::sort(proposals.begin(), proposals.end(), [&](const Proposal& a, const Proposal& b) {
        const WorldDetection& da = dets[a.det];
        const WorldDetection& db = dets[b.det];
        auto ka = std::tie(da.camera_id, da.frame, a.new_id);
        auto kb = std::tie(db.camera_id, db.frame, b.new_id);
        if (ka != kb) return ka < kb;
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        return std::tie(da.global_id, a.det) < std::tie(db.global_id, b.det);
    });
    std::map<size_t, Proposal> accepted; // det index -> its move
    {
        std::set<std::tuple<int, int, int>> taken;
        for (const auto& p : proposals) {
            const WorldDetection& x = dets[p.det];
            if (taken.insert({x.camera_id, x.frame, p.new_id}).second) accepted[p.det] = p;
        }
    }

    // 2. drop moves whose target id is held, in the same cell, by a detection
    //    that is staying put; each drop turns its detection into a stayer, so
    //    iterate to a fixpoint
    std::map<std::pair<int, int>, std::vector<size_t>> cells;
    for (size_t i = 0; i < dets.size(); ++i)
        if (dets[i].global_id != kUnassigned)
            cells[{dets[i].camera_id, dets[i].frame}].push_back(i);
    for (bool dropped = true; dropped;) {
        dropped = false;
        for (auto it = accepted.begin(); it != accepted.end();) {
            const WorldDetection& x = dets[it->first];
            bool blocked = false;
            for (size_t yi : cells.at({x.camera_id, x.frame}))
                if (yi != it->first && dets[yi].global_id == it->second.new_id &&
                    !accepted.count(yi)) {
                    blocked = true;
                    break;
                }
            if (blocked) {
                it = accepted.erase(it);
                dropped = true;
            } else {
                ++it;
            }
        }
    }

    std::vector<Proposal> ordered;
    ordered.reserve(accepted.size());
    for (const auto& [di, p] : accepted) ordered.push_back(p);
    std::sort(ordered.begin(), ordered.end(), [&](const Proposal& a, const Proposal& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        const WorldDetection& da = dets[a.det];
        const WorldDetection& db = dets[b.det];
        return std::tie(da.global_id, da.camera_id, da.frame, a.det) <
               std::tie(db.global_id, db.camera_id, db.frame, b.det);
    });
    for (const auto& p : ordered) {
        WorldDetection& x = dets[p.det];
        if (log)
            log->push_back(
                {log_iteration, x.camera_id, x.frame, x.global_id, p.new_id, p.confidence});
        x.global_id = p.new_id;
    }
    return static_cast<int>(ordered.size());
}

std::vector<double> triangular_weights(int window) {
    if (window < 1 || window % 2 == 0)
        throw_config("triangular_weights: window must be odd and >= 1");
    int half = window / 2;
    std::vector<double> w(static_cast<size_t>(window));
    double sum = static_cast<double>(half + 1) * (half + 1);
    for (int k = 0; k < window; ++k)
        w[static_cast<size_t>(k)] = (half + 1 - std::abs(k - half)) / sum;
    return w;
}

std::vector<Vec2> temporal_smooth(std::span<const Vec2> points, int window,
                                  std::span<const double> weights) {
    if (window < 1 || window % 2 == 0)
        throw_config("temporal_smooth: window must be odd and >= 1");
    if (static_cast<int>(weights.size()) != window)
        throw_config("temporal_smooth: weights length must equal window");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw_config("temporal_smooth: weights must be nonnegative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw_config("temporal_smooth: weights must sum to 1");

    const int n = static_cast<int>(points.size());
    const int half = window / 2;
    std::vector<Vec2> out(points.size());
    for (int i = 0; i < n; ++i) {
        double sx = 0.0, sy = 0.0, used = 0.0;
        for (int k = -half; k <= half; ++k) {
            int j = i + k;
            if (j < 0 || j >= n) continue;
            double w = weights[static_cast<size_t>(k + half)];
            sx += w * points[static_cast<size_t>(j)].x;
            sy += w * points[static_cast<size_t>(j)].y;
            used += w;
        }
        // a clipped window can end up with zero total weight (all mass on
        // out-of-range taps); keep the original point then
        out[static_cast<size_t>(i)] =
            used > 0.0 ? Vec2{sx / used, sy / used} : points[static_cast<size_t>(i)];
    }
    return out;
}

std::vector<WorldDetection> iterative_stcra(std::vector<WorldDetection> dets,
                                            const RunConfig& cfg,
                                            std::vector<StcraChange>* log) {
    validate_config(cfg);
    std::vector<Vec2> original(dets.size());
    for (size_t i = 0; i < dets.size(); ++i) original[i] = dets[i].world;

    for (int r = 0; r < cfg.stcra_iterations; ++r) {
        int changes = stcra_pass(dets, cfg.stcra_conf_thresholds[static_cast<size_t>(r)],
                                 cfg.stcra_outlier_thresholds[static_cast<size_t>(r)],
                                 cfg.stcra_weighted_consensus, r + 1, log);
        if (changes == 0) break;
        if (r + 1 < cfg.stcra_iterations) {
            // smooth each (camera, id) track in the working copy; the
            // original coordinates are restored at the end
            std::map<std::pair<int, int>, std::vector<size_t>> tracks;
            for (size_t i = 0; i < dets.size(); ++i)
                if (dets[i].global_id != kUnassigned)
                    tracks[{dets[i].camera_id, dets[i].global_id}].push_back(i);
            auto weights = triangular_weights(cfg.smoothing_window);
            for (auto& [key, idx] : tracks) {
                std::sort(idx.begin(), idx.end(),
                          [&](size_t a, size_t b) { return dets[a].frame < dets[b].frame; });
                std::vector<Vec2> pts(idx.size());
                for (size_t k = 0; k < idx.size(); ++k) pts[k] = dets[idx[k]].world;
                auto smooth = temporal_smooth(pts, cfg.smoothing_window, weights);
                for (size_t k = 0; k < idx.size(); ++k) dets[idx[k]].world = smooth[k];
            }
        }
    }

    for (size_t i = 0; i < dets.size(); ++i) dets[i].world = original[i];
    return dets;
}

void write_stcra_changes(std::span<const StcraChange> changes, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_io("cannot open '" + path + "' for writing");
    out << "iteration,camera_id,frame,old_id,new_id,confidence\n";
    for (const auto& c : changes)
        out << c.iteration << ',' << c.camera_id << ',' << c.frame << ',' << c.old_id << ','
            << c.new_id << ',' << fmt_real(c.confidence) << '\n';
    out.flush();
    if (!out) throw_io("failed writing '" + path + "'");
}

std::vector<StcraChange> load_stcra_changes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw_parse(path + ": empty file");
    std::vector<StcraChange> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        StcraChange c;
        int fields = std::sscanf(line.c_str(), "%d,%d,%d,%d,%d,%lf", &c.iteration,
                                 &c.camera_id, &c.frame, &c.old_id, &c.new_id, &c.confidence);
        if (fields != 6)
            throw_parse(path + ":" + std::to_string(lineno) + ": expected 6 fields");
        out.push_back(c);
    }
    return out;
}

} // namespace mcpt
