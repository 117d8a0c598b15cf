#pragma once

#include <span>
#include <string>
#include <vector>

#include "mcpt/types.hpp"

namespace mcpt {

/// Pipeline stages in their fixed execution order.
enum class Stage {
    calibrate,
    sct,
    anchors,
    stcra,
    interpolate,
    write,
};

std::string stage_name(Stage s);

/// Parses a comma-separated stage list ("calibrate,sct,..."); "all" selects
/// every stage. Duplicates collapse; execution order is always the fixed
/// stage order regardless of how the list is written. Unknown names are a
/// config error.
std::vector<Stage> parse_stages(const std::string& list);

/// FNV-1a 64-bit hash of a file's bytes, as 16 lowercase hex digits.
std::string hash_file(const std::string& path);

struct ArtifactEntry {
    std::string name; // file name inside the output directory
    std::string hash;
};

struct PipelineResult {
    std::vector<ArtifactEntry> artifacts; // sorted by name
};

/// Runs the requested stages in fixed order. Stages communicate only through
/// files: each reads its documented inputs from the scene or output directory
/// and writes its outputs into the output directory, so any suffix of the
/// pipeline can be rerun against existing intermediates.
///
///   calibrate    scene/correspondences.txt          -> homographies.txt
///   sct          scene detections/embeddings[/kps]  -> tracklets.csv
///   anchors      tracklets.csv + scene features     -> anchors.csv,
///                                                      tracklets_global.csv
///   stcra        tracklets_global.csv + homographies.txt + scene features
///                                                    -> tracklets_stcra.csv,
///                                                       stcra_changes.csv
///   interpolate  tracklets_stcra.csv                -> tracklets_interp.csv
///   write        tracklets_interp.csv               -> tracks.txt
///
/// The config is validated before any stage runs. After the stages finish,
/// manifest.txt is rewritten listing every known artifact present in out_dir
/// with its content hash, sorted by name. Missing stage input is an io error
/// naming the file.
PipelineResult run_pipeline(const std::string& scene_dir, const std::string& out_dir,
                            const RunConfig& cfg, std::span<const Stage> stages);

/// Attaches embeddings and keypoints from the scene's detections onto
/// tracklet entries loaded from an intermediate CSV (joined on
/// (camera_id, frame, det_id)). A tracklet entry with no matching detection
/// is an input error.
void join_scene_features(std::vector<Tracklet>& tracklets, std::span<const Detection> dets);

/// Flattens tracklets into track rows, skipping entries without an assigned
/// global id. Tracklets lacking global ids or world points are a state error.
std::vector<TrackRow> tracklets_to_rows(std::span<const Tracklet> tracklets);

/// Loads rows for rendering from either a tracks file or an intermediate
/// tracklets CSV (recognized by its header). Tracklets lacking world points
/// are a state error.
std::vector<TrackRow> load_rows_for_render(const std::string& path);

/// Deterministic top-down SVG of the tracks on the map plane: one polyline
/// per global id (per-frame mean of that id's world points across cameras),
/// stroke color keyed by id, with a frame, axis labels and a legend. Empty
/// input renders the frame and labels only.
std::string render_topdown_svg(std::span<const TrackRow> rows, double map_w, double map_h);
void render_topdown(std::span<const TrackRow> rows, double map_w, double map_h,
                    const std::string& out_path);

} // namespace mcpt
