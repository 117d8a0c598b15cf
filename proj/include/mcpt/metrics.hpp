#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mcpt/types.hpp"

namespace mcpt {

/// Detection match rule: image-space IoU above a threshold, or map-plane
/// Euclidean distance within a radius.
struct MatchRule {
    enum class Kind { IoU, WorldDistance };
    Kind kind = Kind::IoU;
    double iou_thresh = 0.5;
    double world_radius = 1.0;
};

/// Parses "iou" or "world"; thresholds keep their defaults.
MatchRule match_rule_from_name(const std::string& name);

struct EvalReport {
    double idf1 = 1.0, idp = 1.0, idr = 1.0;
    double precision = 1.0, recall = 1.0;
    long long idtp = 0, idfp = 0, idfn = 0;
    long long tp = 0, fp = 0, fn = 0;
    std::vector<std::pair<std::string, EvalReport>> scenes; // per-scene breakdown
};

double box_iou(const Box& a, const Box& b);

/// Identity metrics between predicted and ground-truth tracks of one scene.
/// Identities are matched once over the whole sequence by maximum overlap
/// (minimum-cost assignment on negated overlap counts); detection
/// precision/recall use per-frame matching under the same rule.
EvalReport evaluate(std::span<const TrackRow> pred, std::span<const TrackRow> gt,
                    const MatchRule& rule);

/// Sums per-scene counts into an overall report carrying the breakdown.
EvalReport aggregate(std::vector<std::pair<std::string, EvalReport>> scenes);

std::string report_table(const EvalReport& r);
std::string report_csv(const EvalReport& r);

} // namespace mcpt
