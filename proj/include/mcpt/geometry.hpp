#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "mcpt/types.hpp"

namespace mcpt {

/// Plane-to-plane map from a camera's image plane to the shared top-down map.
/// Row-major 3x3, normalized so h[8] == 1 whenever that entry is nonzero.
struct Homography {
    std::array<double, 9> h = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    int camera_id = -1;
};

/// Validates invertibility (|det| > 1e-12), normalizes h22 to 1 when nonzero.
Homography make_homography(const std::array<double, 9>& coeffs, int camera_id);

double homography_det(const Homography& h);

/// Homogeneous application: q = h * (x, y, 1)^T, returns (q0/q2, q1/q2).
/// Throws when |q2| < 1e-12 (point at infinity).
Vec2 project(const Homography& h, Vec2 p);

/// Throws on a singular matrix.
Homography invert(const Homography& h);

/// Image-plane point where the person touches the ground: ankle midpoint when
/// both ankle confidences reach tau_pose, else bottom-center of the box.
Vec2 ground_point(const Detection& det, double tau_pose);

/// Manually clicked image<->map point pair.
struct Correspondence {
    Vec2 image_point;
    Vec2 map_point;
};

enum class EstimatorMethod {
    LS,     // normalized DLT over all pairs
    RANSAC, // minimal samples, inlier count
    LMEDS,  // minimal samples, least median of squares
    PROSAC, // quality-ordered progressive sampling
};

EstimatorMethod estimator_from_name(const std::string& name);
std::string estimator_name(EstimatorMethod m);

struct EstimatorParams {
    double ransac_reproj_thresh = 3.0;
    int max_iters = 1000;
    uint64_t rng_seed = 1;
    std::vector<double> prosac_quality; // per-pair scores; empty -> PROSAC degrades to RANSAC
};

struct EstimateResult {
    Homography h;
    std::vector<bool> inliers; // parallel to the input pairs
};

/// Fits image->map homography from >= 4 correspondences. Deterministic given
/// params.rng_seed. Robust methods refit by least squares on their inliers.
EstimateResult estimate_homography(std::span<const Correspondence> pairs,
                                   EstimatorMethod method,
                                   const EstimatorParams& params,
                                   int camera_id = -1);

/// Symmetric reprojection error sqrt(|H p - q|^2 + |H^-1 q - p|^2) per pair.
std::vector<double> symmetric_errors(const Homography& h, std::span<const Correspondence> pairs);

} // namespace mcpt
