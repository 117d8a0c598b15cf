#include "mcpt/types.hpp"

#include <cmath>
#include <set>
#include <string>

#include "mcpt/error.hpp"

namespace mcpt {

namespace {

bool finite(double v) { return std::isfinite(v); }

std::string det_key(const Detection& d) {
    return "detection (camera " + std::to_string(d.camera_id) + ", frame " +
           std::to_string(d.frame) + ", det " + std::to_string(d.det_id) + ")";
}

} // namespace

void validate_detection(const Detection& det, int expected_dim) {
    if (det.frame < 0) throw_input(det_key(det) + ": negative frame");
    if (!(det.box.w > 0.0) || !(det.box.h > 0.0))
        throw_input(det_key(det) + ": box extent must be positive");
    if (!finite(det.box.x) || !finite(det.box.y) || !finite(det.box.w) || !finite(det.box.h))
        throw_input(det_key(det) + ": non-finite box");
    if (!(det.score >= 0.0 && det.score <= 1.0))
        throw_input(det_key(det) + ": score outside [0,1]");
    if (expected_dim > 0 && static_cast<int>(det.embedding.size()) != expected_dim)
        throw_input(det_key(det) + ": embedding dimension " +
                    std::to_string(det.embedding.size()) + " != " + std::to_string(expected_dim));
    if (det.keypoints) {
        if (static_cast<int>(det.keypoints->size()) != kNumKeypoints)
            throw_input(det_key(det) + ": expected " + std::to_string(kNumKeypoints) +
                        " keypoints, got " + std::to_string(det.keypoints->size()));
        for (const auto& kp : *det.keypoints)
            if (!(kp.c >= 0.0 && kp.c <= 1.0))
                throw_input(det_key(det) + ": keypoint confidence outside [0,1]");
    }
}

void validate_tracklet(const Tracklet& t) {
    for (size_t i = 0; i < t.entries.size(); ++i) {
        if (t.entries[i].camera_id != t.camera_id)
            throw_input("tracklet " + std::to_string(t.local_id) + ": mixed camera ids");
        if (i > 0 && t.entries[i].frame <= t.entries[i - 1].frame)
            throw_input("tracklet " + std::to_string(t.local_id) +
                        ": frames not strictly increasing");
    }
    if (t.has_global_ids() && t.global_ids.size() != t.entries.size())
        throw_input("tracklet " + std::to_string(t.local_id) + ": global_ids length mismatch");
    if (t.has_world_points() && t.world_points.size() != t.entries.size())
        throw_input("tracklet " + std::to_string(t.local_id) + ": world_points length mismatch");
}

void validate_anchor_bank(const AnchorBank& bank) {
    std::set<int> ids;
    size_t dim = 0;
    for (const auto& a : bank.anchors) {
        if (!ids.insert(a.global_id).second)
            throw_input("anchor bank: duplicate global id " + std::to_string(a.global_id));
        if (a.features.empty())
            throw_input("anchor " + std::to_string(a.global_id) + ": no features");
        for (const auto& f : a.features) {
            if (dim == 0) dim = f.size();
            if (f.size() != dim)
                throw_input("anchor " + std::to_string(a.global_id) +
                            ": inconsistent feature dimension");
        }
    }
}

void validate_config(const RunConfig& cfg) {
    if (!(cfg.low_score_thresh >= 0.0 && cfg.low_score_thresh < cfg.high_score_thresh &&
          cfg.high_score_thresh <= 1.0))
        throw_config("require 0 <= low_score_thresh < high_score_thresh <= 1");
    for (const auto& [cam, v] : cfg.low_score_thresh_per_camera)
        if (!(v >= 0.0 && v < cfg.high_score_thresh))
            throw_config("low_score_thresh.camera_" + std::to_string(cam) +
                         " must be in [0, high_score_thresh)");
    if (!(cfg.tau_pose >= 0.0 && cfg.tau_pose <= 1.0)) throw_config("tau_pose outside [0,1]");
    if (cfg.vote_window < 1 || cfg.vote_window % 2 == 0)
        throw_config("vote_window must be odd and >= 1");
    if (!(cfg.cluster_dist_thresh > 0.0 && cfg.cluster_dist_thresh < 2.0))
        throw_config("cluster_dist_thresh outside (0, 2)");
    if (cfg.anchor_sample_period_frames < 1) throw_config("anchor_sample_period_frames must be >= 1");
    if (cfg.anchor_sample_span_frames < cfg.anchor_sample_period_frames)
        throw_config("anchor_sample_span_frames must be >= anchor_sample_period_frames");
    if (cfg.anchor_features_k < 1) throw_config("anchor_features_k must be >= 1");
    if (cfg.min_cluster_size < 1) throw_config("min_cluster_size must be >= 1");
    if (cfg.stcra_iterations < 1) throw_config("stcra_iterations must be >= 1");
    if (static_cast<int>(cfg.stcra_conf_thresholds.size()) != cfg.stcra_iterations)
        throw_config("stcra_conf_thresholds must have one entry per iteration");
    if (static_cast<int>(cfg.stcra_outlier_thresholds.size()) != cfg.stcra_iterations)
        throw_config("stcra_outlier_thresholds must have one entry per iteration");
    for (size_t i = 1; i < cfg.stcra_conf_thresholds.size(); ++i)
        if (!(cfg.stcra_conf_thresholds[i] > cfg.stcra_conf_thresholds[i - 1]))
            throw_config("stcra_conf_thresholds must be strictly ascending");
    for (size_t i = 1; i < cfg.stcra_outlier_thresholds.size(); ++i)
        if (!(cfg.stcra_outlier_thresholds[i] < cfg.stcra_outlier_thresholds[i - 1]))
            throw_config("stcra_outlier_thresholds must be strictly descending");
    for (double v : cfg.stcra_outlier_thresholds)
        if (!(v > 0.0)) throw_config("stcra_outlier_thresholds must be positive");
    if (cfg.smoothing_window < 1 || cfg.smoothing_window % 2 == 0)
        throw_config("smoothing_window must be odd and >= 1");
    if (cfg.max_age < 1) throw_config("max_age must be >= 1");
    if (cfg.sct_min_hits < 1) throw_config("sct_min_hits must be >= 1");
    if (cfg.interp_max_gap < 0) throw_config("interp_max_gap must be >= 0");
    if (cfg.embedding_dim < 1) throw_config("embedding_dim must be >= 1");
    if (cfg.calib_method != "ls" && cfg.calib_method != "ransac" && cfg.calib_method != "lmeds" &&
        cfg.calib_method != "prosac")
        throw_config("calib_method must be one of ls|ransac|lmeds|prosac");
    if (cfg.calib_max_iters < 1) throw_config("calib_max_iters must be >= 1");
    if (!(cfg.calib_reproj_thresh > 0.0)) throw_config("calib_reproj_thresh must be positive");
}

} // namespace mcpt
