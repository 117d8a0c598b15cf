#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mcpt/geometry.hpp"
#include "mcpt/types.hpp"

namespace mcpt {

/// Identity id_b is hidden behind id_a on one camera for a frame range: its
/// detections are dropped there while ground truth keeps running.
struct OcclusionEvent {
    int camera_id = 0;
    int frame_lo = 0, frame_hi = -1;
    int id_a = 0, id_b = 0;
};

/// The identity leaves the scene entirely for the range: no detections and no
/// ground-truth rows on any camera.
struct ExitEvent {
    int identity = 0;
    int frame_lo = 0, frame_hi = -1;
};

/// Local track ids of two identities are exchanged on one camera over the
/// range in the preliminary tracklets; ground truth is untouched.
struct SwapEvent {
    int camera_id = 0;
    int frame_lo = 0, frame_hi = -1;
    int id_a = 0, id_b = 0;
};

/// Synthetic scene description. Identities are 1..num_identities, cameras
/// 0..num_cameras-1. Empty waypoints / box heights are drawn from the seed.
struct Scenario {
    double map_w = 40.0, map_h = 20.0;
    int frames = 600;
    int num_cameras = 3;
    int num_identities = 4;
    int embedding_dim = 16;
    uint64_t rng_seed = 1;

    double noise_sigma = 0.0;        // embedding Gaussian noise before renormalizing
    double miss_rate = 0.0;          // per-detection drop probability
    double false_positive_rate = 0.0; // per (camera, frame) spurious box probability
    double box_jitter_px = 0.0;      // pixel noise on detection boxes
    double drift_amp = 0.0;          // slow per-(identity, camera) appearance drift
    double drift_period = 300.0;     // frames per drift oscillation
    double camera_coverage = 1.0;    // fraction of the map each camera frames
    double low_score_fraction = 0.0; // detections demoted to a low score

    double similar_pair_dist = 0.15; // cosine distance for similar-appearance pairs
    std::vector<std::pair<int, int>> similar_pairs;

    std::vector<std::vector<Vec2>> waypoints; // per identity; empty = random
    std::vector<double> camera_box_heights;   // per camera; empty = random

    // map->image per camera; empty = synthesized from the seed
    std::vector<Homography> camera_map_to_image;

    std::vector<OcclusionEvent> occlusions;
    std::vector<ExitEvent> exits;
    std::vector<SwapEvent> swaps;
};

void validate_scenario(const Scenario& s);

/// Parses a Scenario from the flat key = value grammar.
Scenario scenario_from_file(const std::string& path);
Scenario scenario_from_kv(const std::vector<std::pair<std::string, std::string>>& pairs);

/// Everything one synthetic scene produces. prelim_tracklets are the oracle
/// single-camera tracklets over the corrupted detections (split where a gap
/// exceeds 30 frames); tracklet_identity maps (camera_id, local_id) to the
/// true identity.
struct SceneData {
    std::vector<Detection> detections;
    std::vector<Tracklet> prelim_tracklets;
    std::map<std::pair<int, int>, int> tracklet_identity;
    std::vector<TrackRow> gt_tracks;
    std::map<int, std::vector<Correspondence>> correspondences; // 8 exact pairs per camera
    std::map<int, Homography> homographies;                     // image -> map, ground truth
};

/// Deterministic pure function of the scenario, seed included.
SceneData generate(const Scenario& s);

/// Exchanges the tracklet membership of two identities' detections on one
/// camera over [frame_lo, frame_hi]. Applying the same swap twice restores the
/// original. Throws when either identity has no detections in the range.
void inject_swap(SceneData& scene, int camera_id, int frame_lo, int frame_hi, int id_a,
                 int id_b);

/// Writes the scene files into dir: detections.csv, embeddings.csv,
/// keypoints.csv, gt_tracks.txt, correspondences.txt, gt_homographies.txt,
/// tracklets_gt.csv.
void write_scene(const SceneData& scene, const std::string& dir);

} // namespace mcpt
