#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mcpt/types.hpp"

namespace mcpt {

/// Embeddings of every detection at frames {0, period, 2*period, ...} below
/// span, ordered by (camera_id, frame, det_id).
std::vector<std::vector<double>> sample_features(std::span<const Tracklet> tracklets,
                                                 int period, int span);

/// Agglomerative average-linkage clustering under cosine distance, cut where
/// the linkage distance exceeds dist_thresh. Returns clusters as lists of
/// feature indices, ordered by descending size then first-seen index.
std::vector<std::vector<int>> cluster_average_linkage(
    const std::vector<std::vector<double>>& features, double dist_thresh);

/// Clusters the sampled features and turns every cluster of at least
/// min_cluster_size into an anchor with up to k spread-out representative
/// features. Global ids are 1..n by descending cluster size. The seed is
/// accepted for interface stability; selection is fully deterministic.
AnchorBank build_anchors(const std::vector<std::vector<double>>& features, double dist_thresh,
                         int k, int min_cluster_size = 3, uint64_t rng_seed = 1);

/// One minus the mean cosine similarity between d and the anchor's features.
double anchor_cost(const std::vector<double>& d, const Anchor& a);

/// Per (camera, frame) minimum-cost matching of detections to anchors; fills
/// each tracklet's global_ids with matched anchor ids or kUnassigned.
void assign_global_ids(std::vector<Tracklet>& tracklets, const AnchorBank& bank,
                       double max_cost);

/// Centered sliding-window mode filter over a global-id sequence. The window
/// keeps its size near the edges by sliding inward. kUnassigned values never
/// vote; ties go to the smallest id; an all-unassigned window stays
/// unassigned.
std::vector<int> majority_vote(std::span<const int> ids, int window);

/// Applies majority_vote to every tracklet's global_ids in place.
void vote_tracklets(std::vector<Tracklet>& tracklets, int window);

} // namespace mcpt
