#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mcpt {

/// Global-ID slot value for detections no anchor accepted.
inline constexpr int kUnassigned = -1;

/// Number of COCO keypoints; ankles are the last two.
inline constexpr int kNumKeypoints = 17;
inline constexpr int kLeftAnkle = 15;
inline constexpr int kRightAnkle = 16;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

/// Pixel box, top-left origin.
struct Box {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;
};

struct Keypoint {
    double x = 0.0;
    double y = 0.0;
    double c = 0.0; // confidence in [0,1]
};

/// One per-frame per-camera observation on a 30 fps timeline.
struct Detection {
    int camera_id = 0;
    int frame = 0;
    int det_id = 0; // unique within (camera_id, frame)
    Box box;
    double score = 0.0;
    std::vector<double> embedding;
    std::optional<std::vector<Keypoint>> keypoints; // 17 entries, COCO order
};

/// Throws if the detection violates its invariants (box extent, score and
/// keypoint-confidence ranges, embedding dimension).
void validate_detection(const Detection& det, int expected_dim);

/// Per-camera sequence of detections sharing one local track ID. Frames are
/// strictly increasing. global_ids / world_points, when non-empty, run
/// parallel to entries.
struct Tracklet {
    int camera_id = 0;
    int local_id = 0;
    std::vector<Detection> entries;
    std::vector<int> global_ids;
    std::vector<Vec2> world_points;

    bool has_global_ids() const { return !global_ids.empty(); }
    bool has_world_points() const { return !world_points.empty(); }
};

void validate_tracklet(const Tracklet& t);

struct Anchor {
    int global_id = 0;
    std::vector<std::vector<double>> features; // k vectors of dimension D
};

struct AnchorBank {
    std::vector<Anchor> anchors;
};

/// Throws unless global_ids are unique, every anchor has >= 1 feature and all
/// features share one dimension.
void validate_anchor_bank(const AnchorBank& bank);

/// One row of the tracks file: "camera_id global_id frame x y w h xworld yworld".
struct TrackRow {
    int camera_id = 0;
    int global_id = 0;
    int frame = 0;
    Box box;
    Vec2 world;
};

/// Run configuration, parsed from a flat "key = value" file. Unknown keys are
/// rejected.
struct RunConfig {
    // detection score gating
    double high_score_thresh = 0.6;
    double low_score_thresh = 0.1;
    std::map<int, double> low_score_thresh_per_camera; // key "low_score_thresh.camera_<id>"

    // ground point
    double tau_pose = 0.5;

    // anchor-guided clustering
    int vote_window = 15; // odd
    double cluster_dist_thresh = 0.3;
    int anchor_sample_period_frames = 30;
    int anchor_sample_span_frames = 1800;
    int anchor_features_k = 5;
    int min_cluster_size = 3;
    double assign_max_cost = 0.5;

    // spatio-temporal consistency re-assignment
    int stcra_iterations = 3;
    std::vector<double> stcra_conf_thresholds = {0.5, 0.65, 0.8};   // strictly ascending
    std::vector<double> stcra_outlier_thresholds = {3.0, 2.0, 1.5}; // strictly descending
    int smoothing_window = 9; // odd
    bool stcra_weighted_consensus = false;

    // single-camera tracking
    int max_age = 30;
    int sct_min_hits = 2;
    double sct_match_thresh = 0.9;
    double sct_stage2_match_thresh = 0.5;
    double sct_appearance_thresh = 0.25;
    double sct_feature_momentum = 0.9;

    // post-processing
    int interp_max_gap = 30;

    // calibration defaults used by the pipeline's calibrate stage
    std::string calib_method = "ransac"; // ls | ransac | lmeds | prosac
    double calib_reproj_thresh = 3.0;
    int calib_max_iters = 1000;

    int embedding_dim = 512;
    uint64_t rng_seed = 1;

    double low_thresh_for_camera(int camera_id) const {
        auto it = low_score_thresh_per_camera.find(camera_id);
        return it == low_score_thresh_per_camera.end() ? low_score_thresh : it->second;
    }
};

/// Throws on invariant violations (threshold ordering, odd windows, schedule
/// lengths and monotonicity).
void validate_config(const RunConfig& cfg);

} // namespace mcpt
