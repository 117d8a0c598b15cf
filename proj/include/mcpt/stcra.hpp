#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "mcpt/geometry.hpp"
#include "mcpt/types.hpp"

namespace mcpt {

/// One detection lifted onto the shared top-down map.
struct WorldDetection {
    int camera_id = 0;
    int frame = 0;
    int global_id = kUnassigned;
    Box box;
    Vec2 world;
    // provenance, so ids can be written back to the source tracklets
    int local_id = 0;
    int det_id = 0;
};

/// spatial_inconsistency result when no peer view survives outlier removal.
/// Real results are squared distances, hence >= 0.
inline constexpr double kNoPeers = -1.0;

/// Projects every tracklet entry's ground point through its camera's
/// homography. Entries of tracklets without global ids carry kUnassigned.
/// Output order follows the tracklets. Missing homography is a config error.
std::vector<WorldDetection> lift_to_world(std::span<const Tracklet> tracklets,
                                          const std::map<int, Homography>& homographies,
                                          double tau_pose);

/// Writes the (possibly reassigned) global ids and world points back onto the
/// tracklets lift_to_world was called with, in the same order.
void store_ids(std::span<const WorldDetection> dets, std::vector<Tracklet>& tracklets);

/// Squared distance from x's world point to the mean of the surviving peers.
/// Peers must share one global id and x's frame and come from other cameras.
/// Outlier removal: a peer survives if it lies within outlier_thresh map
/// units of a minimum-sum medoid of the peer set (all medoids count on ties).
/// weighted switches the survivor mean to weights 1/(1 + d(peer, medoid)^2).
/// Returns kNoPeers when peers is empty.
double spatial_inconsistency(const WorldDetection& x, std::span<const WorldDetection> peers,
                             double outlier_thresh, bool weighted = false);

/// Confidence that x should move from current_id to candidate_id:
/// 1 - D(x, candidate) / D(x, current). Positive iff x sits closer to the
/// candidate's consensus. frame_state maps global id -> that id's detections
/// in x's frame (all cameras; x's own camera is filtered out internally).
/// Errors: ids equal, either side without surviving peers, or both distances
/// zero (undefined ratio).
double reassign_confidence(const WorldDetection& x, int current_id, int candidate_id,
                           const std::map<int, std::vector<WorldDetection>>& frame_state,
                           double outlier_thresh, bool weighted = false);

/// One row of the reassignment audit log.
struct StcraChange {
    int iteration = 0;
    int camera_id = 0;
    int frame = 0;
    int old_id = 0;
    int new_id = 0;
    double confidence = 0.0;
};

/// One re-assignment sweep over a frozen snapshot. A detection is a move
/// candidate when its inconsistency under its current id exceeds
/// outlier_thresh; it moves to the highest-confidence candidate id when that
/// confidence reaches conf_thresh. Each (camera, frame) keeps at most one
/// detection per id; conflicts resolve by higher confidence, then smaller
/// previous id. Returns the number of changed detections.
int stcra_pass(std::vector<WorldDetection>& dets, double conf_thresh, double outlier_thresh,
               bool weighted = false, int log_iteration = 0,
               std::vector<StcraChange>* log = nullptr);

/// Centered weighted moving average; windows are clipped at the ends and the
/// used weights renormalized. window must be odd and match weights' length;
/// weights nonnegative with sum 1.
std::vector<Vec2> temporal_smooth(std::span<const Vec2> points, int window,
                                  std::span<const double> weights);

/// Symmetric triangular kernel of the given odd length, normalized to sum 1.
std::vector<double> triangular_weights(int window);

/// Runs stcra_pass with the config's per-iteration threshold schedules,
/// smoothing the consensus state between passes; stops early on a pass with
/// zero changes. Output keeps the original (unsmoothed) world points.
std::vector<WorldDetection> iterative_stcra(std::vector<WorldDetection> dets,
                                            const RunConfig& cfg,
                                            std::vector<StcraChange>* log = nullptr);

/// Audit CSV: "iteration,camera_id,frame,old_id,new_id,confidence".
void write_stcra_changes(std::span<const StcraChange> changes, const std::string& path);
std::vector<StcraChange> load_stcra_changes(const std::string& path);

} // namespace mcpt
