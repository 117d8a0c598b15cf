#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcpt/geometry.hpp"
#include "mcpt/types.hpp"

namespace mcpt {

/// Shortest decimal form that round-trips to 9 significant digits.
std::string fmt_real(double v);

/// Loads detections from the three per-scene CSV files and joins them on
/// (camera_id, frame, det_id). keypoints_path may be empty (no keypoints).
/// Result is sorted by (camera_id, frame, det_id) and fully validated.
std::vector<Detection> load_detections(const std::string& detections_path,
                                       const std::string& embeddings_path,
                                       const std::string& keypoints_path,
                                       int expected_dim);

void write_detections(std::span<const Detection> dets,
                      const std::string& detections_path,
                      const std::string& embeddings_path,
                      const std::string& keypoints_path);

/// Tracks file: space-separated "camera_id global_id frame x y w h xworld yworld",
/// sorted by (camera_id, frame, global_id). Entries whose global id is
/// kUnassigned are skipped. Throws a state error when a tracklet lacks
/// global_ids or world_points.
void write_tracks(std::span<const Tracklet> tracklets, const std::string& path);

void write_track_rows(std::span<const TrackRow> rows, const std::string& path);
std::vector<TrackRow> load_tracks(const std::string& path);

/// Correspondences file: lines "camera_id u v X Y".
std::map<int, std::vector<Correspondence>> load_correspondences(const std::string& path);
void write_correspondences(const std::map<int, std::vector<Correspondence>>& by_camera,
                           const std::string& path);

/// Homography file: lines "camera_id h00 h01 h02 h10 h11 h12 h20 h21 h22".
std::map<int, Homography> load_homographies(const std::string& path);
void write_homographies(const std::map<int, Homography>& by_camera, const std::string& path);

/// Anchor bank CSV: "global_id,slot,e0,...,e{D-1}".
void write_anchor_bank(const AnchorBank& bank, const std::string& path);
AnchorBank load_anchor_bank(const std::string& path);

/// Intermediate tracklet CSV used between pipeline stages. Columns:
/// camera_id,local_id,frame,det_id,x,y,w,h,score[,global_id[,xworld,yworld]].
/// Embeddings/keypoints are not persisted here; stages re-join them from the
/// scene files by det_id.
void write_tracklets_csv(std::span<const Tracklet> tracklets, const std::string& path);
std::vector<Tracklet> load_tracklets_csv(const std::string& path);

/// Flat "key = value" grammar shared by run configs and scenario files.
/// '#' starts a comment; blank lines ignored; duplicate keys rejected.
std::vector<std::pair<std::string, std::string>> parse_kv_file(const std::string& path);

/// Parses and validates a RunConfig. Unknown keys are an error.
RunConfig load_run_config(const std::string& path);

/// Applies one "key = value" override to an existing config (same key set as
/// the config file) and re-validates.
void apply_config_override(RunConfig& cfg, const std::string& key, const std::string& value);

} // namespace mcpt
