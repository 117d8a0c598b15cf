#pragma once

#include <span>
#include <vector>

#include "mcpt/types.hpp"

namespace mcpt {

/// Tracking-by-detection over one camera's detections: constant-velocity
/// Kalman on (cx, cy, aspect, h) plus appearance, with two-stage score gating.
/// Detections may arrive in any order; frames are processed ascending.
/// Deterministic: association ties break toward the lowest (local_id, det_id).
std::vector<Tracklet> track_camera(std::span<const Detection> dets, const RunConfig& cfg);

/// Fills frame gaps of length <= max_gap with linearly interpolated boxes
/// (and world points when present). Synthetic entries carry det_id
/// -(local_id + 1) and no embedding; global ids copy the gap's bounding
/// values when they agree, else the earlier side.
Tracklet interpolate_gaps(const Tracklet& t, int max_gap);

} // namespace mcpt
