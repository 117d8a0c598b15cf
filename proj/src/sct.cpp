#include "mcpt/sct.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "mcpt/assignment.hpp"
#include "mcpt/error.hpp"
#include "mcpt/metrics.hpp"

namespace mcpt {
namespace {

// Measurement is (cx, cy, a, h): box center, aspect ratio w/h, height.
// Noise scales with box height, the usual pedestrian-tracking convention.
constexpr double kStdPos = 1.0 / 20.0;
constexpr double kStdVel = 1.0 / 160.0;

using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat8 = Eigen::Matrix<double, 8, 8>;
using Vec4 = Eigen::Matrix<double, 4, 1>;

Vec4 box_to_meas(const Box& b) {
    return {b.x + b.w / 2.0, b.y + b.h / 2.0, b.w / b.h, b.h};
}

Box meas_to_box(const Vec4& z) {
    double h = z(3), w = z(2) * h;
    return {z(0) - w / 2.0, z(1) - h / 2.0, w, h};
}

struct KalmanState {
    Vec8 mean = Vec8::Zero();
    Mat8 cov = Mat8::Identity();

    void initiate(const Vec4& z) {
        mean.head<4>() = z;
        mean.tail<4>().setZero();
        double h = z(3);
        Vec8 std;
        std << 2 * kStdPos * h, 2 * kStdPos * h, 1e-2, 2 * kStdPos * h, 10 * kStdVel * h,
            10 * kStdVel * h, 1e-5, 10 * kStdVel * h;
        cov = std.array().square().matrix().asDiagonal();
    }

    void predict() {
        Mat8 f = Mat8::Identity();
        for (int i = 0; i < 4; ++i) f(i, i + 4) = 1.0;
        double h = std::max(mean(3), 1.0);
        Vec8 std;
        std << kStdPos * h, kStdPos * h, 1e-2, kStdPos * h, kStdVel * h, kStdVel * h, 1e-5,
            kStdVel * h;
        mean = f * mean;
        cov = f * cov * f.transpose();
        cov += Vec8(std.array().square()).asDiagonal().toDenseMatrix();
    }

    void update(const Vec4& z) {
        Eigen::Matrix<double, 4, 8> hm = Eigen::Matrix<double, 4, 8>::Zero();
        hm.block<4, 4>(0, 0).setIdentity();
        double h = std::max(mean(3), 1.0);
        Vec4 std;
        std << kStdPos * h, kStdPos * h, 1e-1, kStdPos * h;
        Eigen::Matrix4d r = std.array().square().matrix().asDiagonal();
        Eigen::Matrix4d s = hm * cov * hm.transpose() + r;
        Eigen::Matrix<double, 8, 4> k = cov * hm.transpose() * s.inverse();
        mean += k * (z - hm * mean);
        cov = (Mat8::Identity() - k * hm) * cov;
        cov = 0.5 * (cov + cov.transpose()); // keep symmetric
        mean(2) = std::max(mean(2), 1e-3);
        mean(3) = std::max(mean(3), 1.0);
    }

    Box predicted_box() const {
        Vec4 z = mean.head<4>();
        z(2) = std::max(z(2), 1e-3);
        z(3) = std::max(z(3), 1.0);
        return meas_to_box(z);
    }
};

struct Track {
    KalmanState kf;
    std::vector<double> feat; // exponentially smoothed unit appearance
    Tracklet data;
    int hits = 1;
    int time_since_update = 0;
    bool confirmed = false;
};

double unit_cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty() || a.size() != b.size()) return -1.0;
    double d = 0.0;
    for (size_t i = 0; i < a.size(); ++i) d += a[i] * b[i];
    return std::clamp(d, -1.0, 1.0);
}

void renormalize(std::vector<double>& v) {
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    if (n2 > 1e-24) {
        double inv = 1.0 / std::sqrt(n2);
        for (double& x : v) x *= inv;
    }
}

void absorb(Track& t, const Detection& det, const RunConfig& cfg) {
    t.kf.update(box_to_meas(det.box));
    if (!det.embedding.empty()) {
        if (t.feat.size() != det.embedding.size()) {
            t.feat = det.embedding;
        } else {
            for (size_t i = 0; i < t.feat.size(); ++i)
                t.feat[i] = cfg.sct_feature_momentum * t.feat[i] +
                            (1.0 - cfg.sct_feature_momentum) * det.embedding[i];
        }
        renormalize(t.feat);
    }
    t.hits += 1;
    t.time_since_update = 0;
    if (t.hits >= cfg.sct_min_hits) t.confirmed = true;
    t.data.entries.push_back(det);
}

void spawn(std::vector<Track>& tracks, const Detection& det, int camera_id, int& next_local,
           const RunConfig& cfg) {
    Track t;
    t.kf.initiate(box_to_meas(det.box));
    t.feat = det.embedding;
    renormalize(t.feat);
    t.data.camera_id = camera_id;
    t.data.local_id = next_local++;
    t.data.entries.push_back(det);
    if (cfg.sct_min_hits <= 1) t.confirmed = true;
    tracks.push_back(std::move(t));
}

} // namespace

std::vector<Tracklet> track_camera(std::span<const Detection> dets, const RunConfig& cfg) {
    if (dets.empty()) return {};
    const int camera_id = dets.front().camera_id;
    for (const auto& d : dets) {
        if (d.camera_id != camera_id) throw_input("track_camera: mixed camera ids");
        validate_detection(d, 0);
    }
    const double low_thresh = cfg.low_thresh_for_camera(camera_id);

    std::map<int, std::vector<const Detection*>> by_frame;
    for (const auto& d : dets) by_frame[d.frame].push_back(&d);
    for (auto& [frame, list] : by_frame)
        std::sort(list.begin(), list.end(),
                  [](const Detection* a, const Detection* b) { return a->det_id < b->det_id; });

    std::vector<Track> tracks; // spawn order == ascending local_id
    std::vector<Tracklet> done;
    int next_local = 1;

    auto retire = [&](Track& t) {
        if (t.confirmed) done.push_back(std::move(t.data));
    };

    const int first = by_frame.begin()->first;
    const int last = by_frame.rbegin()->first;
    for (int frame = first; frame <= last; ++frame) {
        for (auto& t : tracks) t.kf.predict();

        std::vector<const Detection*> high, low;
        if (auto it = by_frame.find(frame); it != by_frame.end()) {
            for (const Detection* d : it->second) {
                if (d->score >= cfg.high_score_thresh) high.push_back(d);
                else if (d->score >= low_thresh) low.push_back(d);
            }
        }

        std::vector<bool> track_matched(tracks.size(), false);
        std::vector<bool> det_matched(high.size(), false);

        // stage 1: every live track against high-score detections,
        // motion fused with gated appearance
        if (!tracks.empty() && !high.empty()) {
            std::vector<std::vector<double>> cost(
                tracks.size(), std::vector<double>(high.size(), 1.0));
            for (size_t r = 0; r < tracks.size(); ++r) {
                Box pred = tracks[r].kf.predicted_box();
                for (size_t c = 0; c < high.size(); ++c) {
                    double iou_cost = 1.0 - box_iou(pred, high[c]->box);
                    double app_cost = 1.0 - unit_cosine(tracks[r].feat, high[c]->embedding);
                    double fused = std::min(
                        iou_cost, app_cost < cfg.sct_appearance_thresh ? app_cost : 1.0);
                    cost[r][c] = fused;
                }
            }
            Assignment res = solve_assignment(cost, cfg.sct_match_thresh);
            for (auto [r, c] : res.pairs) {
                absorb(tracks[static_cast<size_t>(r)], *high[static_cast<size_t>(c)], cfg);
                track_matched[static_cast<size_t>(r)] = true;
                det_matched[static_cast<size_t>(c)] = true;
            }
        }

        // stage 2: leftover tracks against low-score detections, motion only
        std::vector<size_t> leftover;
        for (size_t r = 0; r < tracks.size(); ++r)
            if (!track_matched[r]) leftover.push_back(r);
        if (!leftover.empty() && !low.empty()) {
            std::vector<std::vector<double>> cost(
                leftover.size(), std::vector<double>(low.size(), 1.0));
            for (size_t i = 0; i < leftover.size(); ++i) {
                Box pred = tracks[leftover[i]].kf.predicted_box();
                for (size_t c = 0; c < low.size(); ++c)
                    cost[i][c] = 1.0 - box_iou(pred, low[c]->box);
            }
            Assignment res = solve_assignment(cost, cfg.sct_stage2_match_thresh);
            for (auto [i, c] : res.pairs) {
                size_t r = leftover[static_cast<size_t>(i)];
                absorb(tracks[r], *low[static_cast<size_t>(c)], cfg);
                track_matched[r] = true;
            }
        }

        // age out the unmatched; a track that never confirmed dies on its
        // first miss
        std::vector<Track> survivors;
        survivors.reserve(tracks.size());
        for (size_t r = 0; r < tracks.size(); ++r) {
            Track& t = tracks[r];
            if (!track_matched[r]) {
                t.time_since_update += 1;
                if (!t.confirmed || t.time_since_update > cfg.max_age) {
                    retire(t);
                    continue;
                }
            }
            survivors.push_back(std::move(t));
        }
        tracks = std::move(survivors);

        for (size_t c = 0; c < high.size(); ++c)
            if (!det_matched[c]) spawn(tracks, *high[c], camera_id, next_local, cfg);
    }

    for (auto& t : tracks) retire(t);
    std::sort(done.begin(), done.end(),
              [](const Tracklet& a, const Tracklet& b) { return a.local_id < b.local_id; });
    for (const auto& t : done) validate_tracklet(t);
    return done;
}

Tracklet interpolate_gaps(const Tracklet& t, int max_gap) {
    validate_tracklet(t);
    if (max_gap < 0) throw_input("interpolate_gaps: max_gap must be >= 0");
    if (t.entries.size() < 2 || max_gap == 0) return t;

    Tracklet out;
    out.camera_id = t.camera_id;
    out.local_id = t.local_id;
    const bool with_gids = t.has_global_ids();
    const bool with_world = t.has_world_points();

    auto push = [&](const Detection& d, int gid, Vec2 w) {
        out.entries.push_back(d);
        if (with_gids) out.global_ids.push_back(gid);
        if (with_world) out.world_points.push_back(w);
    };

    for (size_t i = 0; i < t.entries.size(); ++i) {
        if (i > 0) {
            const Detection& a = t.entries[i - 1];
            const Detection& b = t.entries[i];
            int gap = b.frame - a.frame - 1;
            if (gap >= 1 && gap <= max_gap) {
                // bounding values when they agree; the earlier side when they
                // disagree -- either way the earlier value
                int fill_gid = with_gids ? t.global_ids[i - 1] : 0;
                for (int f = a.frame + 1; f < b.frame; ++f) {
                    double u = static_cast<double>(f - a.frame) /
                               static_cast<double>(b.frame - a.frame);
                    Detection d;
                    d.camera_id = t.camera_id;
                    d.frame = f;
                    d.det_id = -(t.local_id + 1);
                    d.box.x = a.box.x + u * (b.box.x - a.box.x);
                    d.box.y = a.box.y + u * (b.box.y - a.box.y);
                    d.box.w = a.box.w + u * (b.box.w - a.box.w);
                    d.box.h = a.box.h + u * (b.box.h - a.box.h);
                    d.score = a.score + u * (b.score - a.score);
                    Vec2 w{};
                    if (with_world) {
                        const Vec2& wa = t.world_points[i - 1];
                        const Vec2& wb = t.world_points[i];
                        w = {wa.x + u * (wb.x - wa.x), wa.y + u * (wb.y - wa.y)};
                    }
                    push(d, fill_gid, w);
                }
            }
        }
        push(t.entries[i], with_gids ? t.global_ids[i] : 0,
             with_world ? t.world_points[i] : Vec2{});
    }
    validate_tracklet(out);
    return out;
}

} // namespace mcpt
