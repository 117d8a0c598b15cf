#include "mcpt/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "mcpt/error.hpp"
#include "mcpt/rng.hpp"

namespace mcpt {

namespace {

Eigen::Matrix3d to_eigen(const Homography& h) {
    Eigen::Matrix3d m;
    m << h.h[0], h.h[1], h.h[2], h.h[3], h.h[4], h.h[5], h.h[6], h.h[7], h.h[8];
    return m;
}

Homography from_eigen(const Eigen::Matrix3d& m, int camera_id) {
    std::array<double, 9> c = {m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1),
                               m(1, 2), m(2, 0), m(2, 1), m(2, 2)};
    return make_homography(c, camera_id);
}

// Similarity transform taking the points to centroid 0 and mean distance sqrt(2).
Eigen::Matrix3d hartley_normalization(const std::vector<Vec2>& pts) {
    double cx = 0.0, cy = 0.0;
    for (const auto& p : pts) {
        cx += p.x;
        cy += p.y;
    }
    cx /= static_cast<double>(pts.size());
    cy /= static_cast<double>(pts.size());
    double mean_dist = 0.0;
    for (const auto& p : pts) mean_dist += std::hypot(p.x - cx, p.y - cy);
    mean_dist /= static_cast<double>(pts.size());
    double s = mean_dist > 1e-12 ? std::sqrt(2.0) / mean_dist : 1.0;
    Eigen::Matrix3d t;
    t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
    return t;
}

// Normalized DLT. Requires >= 4 pairs; throws a degeneracy error when the
// design matrix has no usable null vector.
Homography dlt(std::span<const Correspondence> pairs, int camera_id) {
    const size_t n = pairs.size();
    std::vector<Vec2> src(n), dst(n);
    for (size_t i = 0; i < n; ++i) {
        src[i] = pairs[i].image_point;
        dst[i] = pairs[i].map_point;
    }
    Eigen::Matrix3d t_src = hartley_normalization(src);
    Eigen::Matrix3d t_dst = hartley_normalization(dst);

    Eigen::MatrixXd a(2 * n, 9);
    for (size_t i = 0; i < n; ++i) {
        Eigen::Vector3d p = t_src * Eigen::Vector3d(src[i].x, src[i].y, 1.0);
        Eigen::Vector3d q = t_dst * Eigen::Vector3d(dst[i].x, dst[i].y, 1.0);
        double x = p.x() / p.z(), y = p.y() / p.z();
        double u = q.x() / q.z(), v = q.y() / q.z();
        a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
        a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    Eigen::VectorXd hvec = svd.matrixV().col(8);
    Eigen::Matrix3d hn;
    hn << hvec(0), hvec(1), hvec(2), hvec(3), hvec(4), hvec(5), hvec(6), hvec(7), hvec(8);
    Eigen::Matrix3d h = t_dst.inverse() * hn * t_src;
    if (std::abs(h.determinant()) < 1e-12 * std::pow(h.norm(), 3))
        throw_degenerate("homography fit is singular");
    return from_eigen(h, camera_id);
}

double cross2(Vec2 o, Vec2 a, Vec2 b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// True when any 3 of the 4 points are collinear (relative tolerance).
bool degenerate_quad(const Vec2 (&p)[4]) {
    double scale = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            scale = std::max(scale, std::hypot(p[i].x - p[j].x, p[i].y - p[j].y));
    if (scale < 1e-12) return true;
    const double tol = 1e-9 * scale * scale;
    static const int tri[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
    for (const auto& t : tri)
        if (std::abs(cross2(p[t[0]], p[t[1]], p[t[2]])) <= tol) return true;
    return false;
}

bool degenerate_sample(std::span<const Correspondence> pairs, const int idx[4]) {
    Vec2 img[4], map[4];
    for (int i = 0; i < 4; ++i) {
        img[i] = pairs[idx[i]].image_point;
        map[i] = pairs[idx[i]].map_point;
    }
    return degenerate_quad(img) || degenerate_quad(map);
}

struct ScoredModel {
    bool valid = false;
    Homography h;
    double score = 0.0; // higher is better
    std::vector<bool> inliers;
};

// RANSAC score: (inlier count, -inlier error sum) lexicographic, flattened.
double ransac_score(std::span<const double> errs, double thresh, std::vector<bool>& inliers) {
    int count = 0;
    double err_sum = 0.0;
    for (size_t i = 0; i < errs.size(); ++i) {
        bool in = errs[i] <= thresh;
        inliers[i] = in;
        if (in) {
            ++count;
            err_sum += errs[i];
        }
    }
    return static_cast<double>(count) - err_sum / (err_sum + 1.0) * 0.5;
}

double median_of(std::vector<double> v) {
    size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
    return 0.5 * (hi + v[mid - 1]);
}

double scene_scale(std::span<const Correspondence> pairs) {
    double lo_x = 1e300, lo_y = 1e300, hi_x = -1e300, hi_y = -1e300;
    for (const auto& c : pairs) {
        lo_x = std::min(lo_x, c.map_point.x);
        lo_y = std::min(lo_y, c.map_point.y);
        hi_x = std::max(hi_x, c.map_point.x);
        hi_y = std::max(hi_y, c.map_point.y);
    }
    return std::max(1e-9, std::hypot(hi_x - lo_x, hi_y - lo_y));
}

// PROSAC growth function (Chum & Matas): number of samples after which the
// hypothesis pool grows by one point.
std::vector<long> prosac_growth(int n_pairs, int t_total) {
    const int m = 4;
    std::vector<long> grow(static_cast<size_t>(n_pairs) + 1, 0);
    double t_n = static_cast<double>(t_total);
    for (int i = 0; i < m; ++i) t_n *= static_cast<double>(m - i) / (n_pairs - i);
    double t_prev = t_n;
    long t_prime = 1;
    grow[m] = 1;
    for (int n = m + 1; n <= n_pairs; ++n) {
        double t_next = t_prev * static_cast<double>(n) / (n - m);
        t_prime += static_cast<long>(std::ceil(t_next - t_prev));
        grow[n] = std::max<long>(t_prime, grow[n - 1]);
        t_prev = t_next;
    }
    return grow;
}

} // namespace

Homography make_homography(const std::array<double, 9>& coeffs, int camera_id) {
    Homography h;
    h.h = coeffs;
    h.camera_id = camera_id;
    double norm = 0.0;
    for (double v : h.h) norm += v * v;
    norm = std::sqrt(norm);
    if (!(norm > 0.0) || !std::isfinite(norm)) throw_input("homography has non-finite entries");
    if (std::abs(homography_det(h)) < 1e-12 * norm * norm * norm)
        throw_input("homography is singular");
    if (h.h[8] != 0.0) {
        double s = 1.0 / h.h[8];
        for (double& v : h.h) v *= s;
        h.h[8] = 1.0;
    }
    return h;
}

double homography_det(const Homography& m) {
    const auto& h = m.h;
    return h[0] * (h[4] * h[8] - h[5] * h[7]) - h[1] * (h[3] * h[8] - h[5] * h[6]) +
           h[2] * (h[3] * h[7] - h[4] * h[6]);
}

Vec2 project(const Homography& h, Vec2 p) {
    double q0 = h.h[0] * p.x + h.h[1] * p.y + h.h[2];
    double q1 = h.h[3] * p.x + h.h[4] * p.y + h.h[5];
    double q2 = h.h[6] * p.x + h.h[7] * p.y + h.h[8];
    if (std::abs(q2) < 1e-12) throw_input("projection maps point to infinity");
    return {q0 / q2, q1 / q2};
}

Homography invert(const Homography& h) {
    Eigen::Matrix3d m = to_eigen(h);
    double det = m.determinant();
    if (std::abs(det) < 1e-12 * std::pow(m.norm(), 3)) throw_input("homography is singular");
    Eigen::Matrix3d inv = m.inverse();
    return from_eigen(inv, h.camera_id);
}

Vec2 ground_point(const Detection& det, double tau_pose) {
    if (det.keypoints) {
        const auto& la = (*det.keypoints)[kLeftAnkle];
        const auto& ra = (*det.keypoints)[kRightAnkle];
        if (la.c >= tau_pose && ra.c >= tau_pose)
            return {0.5 * (la.x + ra.x), 0.5 * (la.y + ra.y)};
    }
    return {det.box.x + det.box.w / 2.0, det.box.y + det.box.h};
}

EstimatorMethod estimator_from_name(const std::string& name) {
    if (name == "ls") return EstimatorMethod::LS;
    if (name == "ransac") return EstimatorMethod::RANSAC;
    if (name == "lmeds") return EstimatorMethod::LMEDS;
    if (name == "prosac") return EstimatorMethod::PROSAC;
    throw_config("unknown estimator method '" + name + "'");
}

std::string estimator_name(EstimatorMethod m) {
    switch (m) {
        case EstimatorMethod::LS: return "ls";
        case EstimatorMethod::RANSAC: return "ransac";
        case EstimatorMethod::LMEDS: return "lmeds";
        case EstimatorMethod::PROSAC: return "prosac";
    }
    return "?";
}

std::vector<double> symmetric_errors(const Homography& h, std::span<const Correspondence> pairs) {
    Homography hinv = invert(h);
    std::vector<double> errs(pairs.size());
    for (size_t i = 0; i < pairs.size(); ++i) {
        double fwd, bwd;
        try {
            Vec2 q = project(h, pairs[i].image_point);
            fwd = std::hypot(q.x - pairs[i].map_point.x, q.y - pairs[i].map_point.y);
            Vec2 p = project(hinv, pairs[i].map_point);
            bwd = std::hypot(p.x - pairs[i].image_point.x, p.y - pairs[i].image_point.y);
        } catch (const error&) {
            fwd = bwd = 1e300; // point at infinity under this model
        }
        errs[i] = std::sqrt(fwd * fwd + bwd * bwd);
    }
    return errs;
}

EstimateResult estimate_homography(std::span<const Correspondence> pairs,
                                   EstimatorMethod method,
                                   const EstimatorParams& params,
                                   int camera_id) {
    const int n = static_cast<int>(pairs.size());
    if (n < 4) throw_input("homography estimation needs >= 4 pairs, got " + std::to_string(n));
    for (const auto& c : pairs)
        if (!std::isfinite(c.image_point.x) || !std::isfinite(c.image_point.y) ||
            !std::isfinite(c.map_point.x) || !std::isfinite(c.map_point.y))
            throw_input("correspondence has non-finite coordinates");

    if (method == EstimatorMethod::LS) {
        EstimateResult res{dlt(pairs, camera_id), std::vector<bool>(pairs.size(), true)};
        return res;
    }
    if (method == EstimatorMethod::PROSAC && params.prosac_quality.empty())
        method = EstimatorMethod::RANSAC;
    if (method == EstimatorMethod::PROSAC &&
        static_cast<int>(params.prosac_quality.size()) != n)
        throw_config("prosac_quality must have one score per pair");

    // quality-descending order for PROSAC; identity otherwise
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    if (method == EstimatorMethod::PROSAC) {
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return params.prosac_quality[a] > params.prosac_quality[b];
        });
    }
    std::vector<long> growth;
    if (method == EstimatorMethod::PROSAC) growth = prosac_growth(n, params.max_iters);

    Rng rng(params.rng_seed);
    const bool lmeds = method == EstimatorMethod::LMEDS;
    ScoredModel best;
    best.score = lmeds ? 1e300 : -1.0; // lmeds minimizes, others maximize
    long degenerate_draws = 0;
    long valid_draws = 0;
    long needed = params.max_iters;
    int pool = 4; // PROSAC pool size

    for (long it = 0; it < params.max_iters && (lmeds || it < needed); ++it) {
        if (method == EstimatorMethod::PROSAC) {
            while (pool < n && it + 1 >= growth[pool + 1]) ++pool;
        }
        int idx[4];
        bool ok = false;
        for (int attempt = 0; attempt < 64 && !ok; ++attempt) {
            if (method == EstimatorMethod::PROSAC && pool < n) {
                // pool-th ranked point plus 3 random from the better-ranked ones
                idx[0] = order[pool - 1 < 3 ? 3 : pool - 1];
                int avail = std::max(3, pool - 1);
                int picked[3];
                for (int k = 0; k < 3; ++k) {
                    bool dup = true;
                    while (dup) {
                        picked[k] = static_cast<int>(rng.next_below(avail));
                        dup = false;
                        for (int j = 0; j < k; ++j) dup |= picked[j] == picked[k];
                    }
                    idx[k + 1] = order[picked[k]];
                }
            } else {
                for (int k = 0; k < 4; ++k) {
                    bool dup = true;
                    while (dup) {
                        idx[k] = static_cast<int>(rng.next_below(n));
                        dup = false;
                        for (int j = 0; j < k; ++j) dup |= idx[j] == idx[k];
                    }
                }
            }
            if (!degenerate_sample(pairs, idx)) {
                ok = true;
            } else {
                ++degenerate_draws;
            }
        }
        if (!ok) continue;
        ++valid_draws;

        Correspondence sample[4] = {pairs[idx[0]], pairs[idx[1]], pairs[idx[2]], pairs[idx[3]]};
        Homography h;
        std::vector<double> errs;
        try {
            h = dlt(std::span<const Correspondence>(sample, 4), camera_id);
            errs = symmetric_errors(h, pairs);
        } catch (const error&) {
            // ill-conditioned model, skip it
            continue;
        }

        if (lmeds) {
            std::vector<double> sq(errs.size());
            for (size_t i = 0; i < errs.size(); ++i) sq[i] = errs[i] * errs[i];
            double med = median_of(sq);
            if (med < best.score) {
                best.valid = true;
                best.score = med;
                best.h = h;
            }
        } else {
            std::vector<bool> inliers(errs.size());
            double score = ransac_score(errs, params.ransac_reproj_thresh, inliers);
            if (score > best.score) {
                best.valid = true;
                best.score = score;
                best.h = h;
                best.inliers = std::move(inliers);
                // adaptive termination at 99% confidence
                int count = 0;
                for (size_t i = 0; i < pairs.size(); ++i) count += best.inliers[i] ? 1 : 0;
                double w = static_cast<double>(count) / n;
                double denom = std::log(std::max(1e-12, 1.0 - w * w * w * w));
                needed = denom < -1e-12
                             ? std::min<long>(params.max_iters,
                                              static_cast<long>(std::ceil(std::log(0.01) / denom)))
                             : params.max_iters;
            }
        }
    }

    if (!best.valid) {
        if (valid_draws == 0)
            throw_degenerate("all minimal samples degenerate (collinear correspondences)");
        throw_degenerate("no homography model could be fit");
    }

    if (lmeds) {
        // robust std from median; inliers within 2.5 sigma (floored for the
        // noiseless case where the median is ~0)
        std::vector<double> errs = symmetric_errors(best.h, pairs);
        double sigma = 1.4826 * (1.0 + 5.0 / (n - 4)) * std::sqrt(best.score);
        double cutoff = std::max(2.5 * sigma, 1e-8 * scene_scale(pairs));
        best.inliers.assign(pairs.size(), false);
        for (size_t i = 0; i < pairs.size(); ++i) best.inliers[i] = errs[i] <= cutoff;
    }

    // final least-squares refit on the consensus set
    std::vector<Correspondence> consensus;
    for (size_t i = 0; i < pairs.size(); ++i)
        if (best.inliers[i]) consensus.push_back(pairs[i]);
    if (consensus.size() >= 4) {
        try {
            best.h = dlt(consensus, camera_id);
        } catch (const error&) {
            // keep the minimal-sample model when the refit degenerates
        }
    }
    return {best.h, best.inliers};
}

} // namespace mcpt
