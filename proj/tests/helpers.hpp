#pragma once

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "mcpt/geometry.hpp"
#include "mcpt/rng.hpp"

namespace testutil {

// Scratch directory removed on scope exit.
struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("mcpt_test_" + std::to_string(counter.fetch_add(1)) + "_" +
                std::to_string(reinterpret_cast<uintptr_t>(this) & 0xffff));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path);
    f << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

// Exhaustive minimum-cost matching of the smaller side of a rectangular
// matrix. Returns the optimal total cost.
inline double brute_force_min_cost(const std::vector<std::vector<double>>& cost) {
    int rows = static_cast<int>(cost.size());
    int cols = rows == 0 ? 0 : static_cast<int>(cost[0].size());
    if (rows == 0 || cols == 0) return 0.0;
    bool transposed = rows > cols;
    std::vector<std::vector<double>> a;
    if (transposed) {
        a.assign(cols, std::vector<double>(rows));
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) a[c][r] = cost[r][c];
    } else {
        a = cost;
    }
    int n = static_cast<int>(a.size()), m = static_cast<int>(a[0].size());
    double best = 1e300;
    std::vector<bool> used(m, false);
    auto rec = [&](auto&& self, int row, double acc) -> void {
        if (row == n) {
            if (acc < best) best = acc;
            return;
        }
        for (int c = 0; c < m; ++c) {
            if (used[c]) continue;
            used[c] = true;
            self(self, row + 1, acc + a[row][c]);
            used[c] = false;
        }
    };
    rec(rec, 0, 0.0);
    return best;
}

// All cost-optimal matchings as (row, col) lists sorted by row.
inline std::vector<std::vector<std::pair<int, int>>> brute_force_all_optimal(
    const std::vector<std::vector<double>>& cost, double tol = 1e-9) {
    int rows = static_cast<int>(cost.size());
    int cols = rows == 0 ? 0 : static_cast<int>(cost[0].size());
    std::vector<std::vector<std::pair<int, int>>> out;
    if (rows == 0 || cols == 0) {
        out.push_back({});
        return out;
    }
    double best = brute_force_min_cost(cost);
    int k = std::min(rows, cols);
    std::vector<int> rows_pick;
    std::vector<bool> col_used(cols, false);
    std::vector<std::pair<int, int>> cur;
    // choose which rows participate (all, when rows <= cols), in ascending order
    auto rec = [&](auto&& self, int row, int picked, double acc) -> void {
        if (picked == k) {
            if (acc <= best + tol) out.push_back(cur);
            return;
        }
        if (row == rows) return;
        if (rows - row > k - picked) self(self, row + 1, picked, acc); // skip this row
        for (int c = 0; c < cols; ++c) {
            if (col_used[c]) continue;
            col_used[c] = true;
            cur.emplace_back(row, c);
            self(self, row + 1, picked + 1, acc + cost[row][c]);
            cur.pop_back();
            col_used[c] = false;
        }
    };
    rec(rec, 0, 0, 0.0);
    return out;
}

// Relative difference between two homographies, invariant to scale: both are
// normalized to unit Frobenius norm with a consistent sign first.
inline double homography_rel_error(const mcpt::Homography& a, const mcpt::Homography& b) {
    auto normalized = [](const mcpt::Homography& h) {
        double norm = 0.0;
        for (double v : h.h) norm += v * v;
        norm = std::sqrt(norm);
        int lead = 0;
        for (int i = 0; i < 9; ++i)
            if (std::abs(h.h[i]) > std::abs(h.h[lead])) lead = i;
        double s = (h.h[lead] < 0 ? -1.0 : 1.0) / norm;
        std::array<double, 9> out;
        for (int i = 0; i < 9; ++i) out[i] = h.h[i] * s;
        return out;
    };
    auto na = normalized(a), nb = normalized(b);
    double d = 0.0;
    for (int i = 0; i < 9; ++i) d += (na[i] - nb[i]) * (na[i] - nb[i]);
    return std::sqrt(d);
}

// Ground-truth image->map homography: rotation, anisotropic scale, translation
// and a mild perspective term, well conditioned over a 1920x1080 frame.
inline mcpt::Homography random_gt_homography(mcpt::Rng& rng) {
    double th = rng.next_range(-3.0, 3.0);
    double sx = rng.next_range(0.005, 0.02);
    double sy = rng.next_range(0.005, 0.02);
    double tx = rng.next_range(-5.0, 5.0);
    double ty = rng.next_range(-5.0, 5.0);
    double p0 = rng.next_range(-1e-5, 1e-5);
    double p1 = rng.next_range(-1e-5, 1e-5);
    std::array<double, 9> h = {sx * std::cos(th), -sy * std::sin(th), tx,
                               sx * std::sin(th), sy * std::cos(th),  ty,
                               p0,                p1,                 1.0};
    return mcpt::make_homography(h, 0);
}

inline std::vector<mcpt::Correspondence> exact_pairs(const mcpt::Homography& gt, mcpt::Rng& rng,
                                                     int n) {
    std::vector<mcpt::Correspondence> out;
    for (int i = 0; i < n; ++i) {
        mcpt::Vec2 img{rng.next_range(0.0, 1920.0), rng.next_range(0.0, 1080.0)};
        out.push_back({img, mcpt::project(gt, img)});
    }
    return out;
}

} // namespace testutil
