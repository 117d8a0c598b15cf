#include <cmath>
#include <cstring>

#include "doctest.h"
#include "helpers.hpp"
#include "mcpt/error.hpp"
#include "mcpt/geometry.hpp"
#include "mcpt/rng.hpp"

using namespace mcpt;
using testutil::exact_pairs;
using testutil::homography_rel_error;
using testutil::random_gt_homography;

TEST_CASE("project applies the homography with perspective division") {
    Homography id;
    Vec2 p = project(id, {3.0, 4.0});
    CHECK(p.x == 3.0);
    CHECK(p.y == 4.0);

    Homography scale = make_homography({2, 0, 0, 0, 2, 0, 0, 0, 1}, 0);
    p = project(scale, {3.0, 4.0});
    CHECK(p.x == 6.0);
    CHECK(p.y == 8.0);

    // translation plus a non-unit h22: division by q2 = 0.5
    Homography h = make_homography({1, 0, 5, 0, 1, -2, 0, 0, 0.5}, 0);
    p = project(h, {3.0, 4.0});
    CHECK(p.x == doctest::Approx(16.0).epsilon(1e-12));
    CHECK(p.y == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("project is invariant under rescaling of the matrix") {
    Homography h;
    h.h = {1.5, 0.2, 5.0, -0.1, 2.0, -2.0, 1e-4, -2e-4, 1.0};
    for (double factor : {0.1, 10.0}) {
        Homography scaled;
        for (int i = 0; i < 9; ++i) scaled.h[i] = h.h[i] * factor;
        Vec2 a = project(h, {400.0, 300.0});
        Vec2 b = project(scaled, {400.0, 300.0});
        CHECK(a.x == doctest::Approx(b.x).epsilon(1e-12));
        CHECK(a.y == doctest::Approx(b.y).epsilon(1e-12));
    }
}

TEST_CASE("project rejects points mapped to infinity") {
    Homography h;
    h.h = {0, 0, 1, 0, 1, 0, 1, 0, 0}; // q2 = x
    try {
        project(h, {0.0, 5.0});
        FAIL("expected error");
    } catch (const error& e) {
        CHECK(e.code() == errc::input);
    }
}

TEST_CASE("make_homography validates and normalizes") {
    CHECK_THROWS_AS(make_homography({1, 0, 0, 0, 0, 0, 0, 0, 1}, 0), error);
    Homography h = make_homography({2, 0, 0, 0, 2, 0, 0, 0, 2}, 3);
    CHECK(h.h[0] == 1.0);
    CHECK(h.h[8] == 1.0);
    CHECK(h.camera_id == 3);
}

TEST_CASE("invert composes to identity") {
    Rng rng(11);
    Homography h = random_gt_homography(rng);
    Homography hi = invert(h);
    for (int i = 0; i < 5; ++i) {
        Vec2 p{rng.next_range(0.0, 1920.0), rng.next_range(0.0, 1080.0)};
        Vec2 back = project(hi, project(h, p));
        CHECK(back.x == doctest::Approx(p.x).epsilon(1e-9));
        CHECK(back.y == doctest::Approx(p.y).epsilon(1e-9));
    }
}

TEST_CASE("ground point uses ankles when both are confident") {
    Detection d;
    d.box = {50, 60, 20, 40};
    SUBCASE("no keypoints: bottom-center") {
        Vec2 g = ground_point(d, 0.5);
        CHECK(g.x == 60.0);
        CHECK(g.y == 100.0);
    }
    SUBCASE("confident ankles: midpoint") {
        std::vector<Keypoint> kps(kNumKeypoints);
        kps[kLeftAnkle] = {52.0, 98.0, 0.9};
        kps[kRightAnkle] = {68.0, 96.0, 0.6};
        d.keypoints = kps;
        Vec2 g = ground_point(d, 0.5);
        CHECK(g.x == 60.0);
        CHECK(g.y == 97.0);
    }
    SUBCASE("one weak ankle: fall back to bottom-center") {
        std::vector<Keypoint> kps(kNumKeypoints);
        kps[kLeftAnkle] = {52.0, 98.0, 0.9};
        kps[kRightAnkle] = {68.0, 96.0, 0.4};
        d.keypoints = kps;
        Vec2 g = ground_point(d, 0.5);
        CHECK(g.x == 60.0);
        CHECK(g.y == 100.0);
    }
}

TEST_CASE("least squares recovers the identity from 4 exact pairs") {
    std::vector<Correspondence> pairs = {
        {{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}, {{0, 1}, {0, 1}}, {{1, 1}, {1, 1}}};
    auto res = estimate_homography(pairs, EstimatorMethod::LS, {});
    Homography id;
    CHECK(homography_rel_error(res.h, id) <= 1e-9);
    CHECK(res.inliers == std::vector<bool>(4, true));
}

TEST_CASE("least squares recovers ground truth from noiseless pixel-scale pairs") {
    for (uint64_t seed : {1, 2, 3, 4, 5}) {
        Rng rng(seed);
        Homography gt = random_gt_homography(rng);
        auto pairs = exact_pairs(gt, rng, 8);
        auto res = estimate_homography(pairs, EstimatorMethod::LS, {});
        CHECK(homography_rel_error(res.h, gt) <= 1e-6);
        auto errs = symmetric_errors(res.h, pairs);
        for (double e : errs) CHECK(e <= 1e-6);
    }
}

TEST_CASE("ransac recovers ground truth under gross outliers and flags them") {
    for (uint64_t seed : {10, 20, 30}) {
        Rng rng(seed);
        Homography gt = random_gt_homography(rng);
        auto pairs = exact_pairs(gt, rng, 12);
        std::vector<bool> is_outlier(pairs.size(), false);
        for (int i = 0; i < 5; ++i) {
            Correspondence c;
            c.image_point = {rng.next_range(0.0, 1920.0), rng.next_range(0.0, 1080.0)};
            c.map_point = project(gt, c.image_point);
            c.map_point.x += rng.next_range(8.0, 20.0);
            c.map_point.y += rng.next_range(8.0, 20.0);
            pairs.push_back(c);
            is_outlier.push_back(true);
        }
        EstimatorParams params;
        params.rng_seed = seed * 7 + 1;
        auto res = estimate_homography(pairs, EstimatorMethod::RANSAC, params);
        CHECK(homography_rel_error(res.h, gt) <= 1e-4);
        for (size_t i = 0; i < pairs.size(); ++i) CHECK(res.inliers[i] == !is_outlier[i]);
    }
}

TEST_CASE("lmeds recovers ground truth with a minority of outliers") {
    Rng rng(77);
    Homography gt = random_gt_homography(rng);
    auto pairs = exact_pairs(gt, rng, 12);
    std::vector<bool> is_outlier(pairs.size(), false);
    for (int i = 0; i < 5; ++i) {
        Correspondence c;
        c.image_point = {rng.next_range(0.0, 1920.0), rng.next_range(0.0, 1080.0)};
        c.map_point = project(gt, c.image_point);
        c.map_point.x -= rng.next_range(8.0, 20.0);
        c.map_point.y += rng.next_range(8.0, 20.0);
        pairs.push_back(c);
        is_outlier.push_back(true);
    }
    EstimatorParams params;
    params.rng_seed = 5;
    auto res = estimate_homography(pairs, EstimatorMethod::LMEDS, params);
    CHECK(homography_rel_error(res.h, gt) <= 1e-6);
    for (size_t i = 0; i < pairs.size(); ++i) CHECK(res.inliers[i] == !is_outlier[i]);
}

TEST_CASE("prosac uses quality ordering and degrades to ransac without scores") {
    Rng rng(123);
    Homography gt = random_gt_homography(rng);
    auto pairs = exact_pairs(gt, rng, 10);
    std::vector<double> quality(pairs.size(), 1.0);
    for (int i = 0; i < 4; ++i) {
        Correspondence c;
        c.image_point = {rng.next_range(0.0, 1920.0), rng.next_range(0.0, 1080.0)};
        c.map_point = project(gt, c.image_point);
        c.map_point.x += 15.0;
        pairs.push_back(c);
        quality.push_back(0.1);
    }
    EstimatorParams params;
    params.rng_seed = 9;
    params.prosac_quality = quality;
    auto res = estimate_homography(pairs, EstimatorMethod::PROSAC, params);
    CHECK(homography_rel_error(res.h, gt) <= 1e-6);

    EstimatorParams bare;
    bare.rng_seed = 9;
    auto p1 = estimate_homography(pairs, EstimatorMethod::PROSAC, bare);
    auto p2 = estimate_homography(pairs, EstimatorMethod::RANSAC, bare);
    CHECK(std::memcmp(p1.h.h.data(), p2.h.h.data(), sizeof(double) * 9) == 0);
    CHECK(p1.inliers == p2.inliers);
}

TEST_CASE("estimation is deterministic for a fixed seed") {
    Rng rng(50);
    Homography gt = random_gt_homography(rng);
    auto pairs = exact_pairs(gt, rng, 9);
    pairs[2].map_point.x += 12.0; // one outlier
    EstimatorParams params;
    params.rng_seed = 42;
    auto a = estimate_homography(pairs, EstimatorMethod::RANSAC, params);
    auto b = estimate_homography(pairs, EstimatorMethod::RANSAC, params);
    CHECK(std::memcmp(a.h.h.data(), b.h.h.data(), sizeof(double) * 9) == 0);
    CHECK(a.inliers == b.inliers);
}

TEST_CASE("estimation rejects tiny or degenerate inputs") {
    std::vector<Correspondence> three = {{{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}, {{0, 1}, {0, 1}}};
    CHECK_THROWS_AS(estimate_homography(three, EstimatorMethod::LS, {}), error);

    // all points on one line: every minimal sample is degenerate
    std::vector<Correspondence> collinear;
    for (int i = 0; i < 6; ++i)
        collinear.push_back({{static_cast<double>(i), static_cast<double>(i)},
                             {static_cast<double>(2 * i), static_cast<double>(2 * i)}});
    try {
        estimate_homography(collinear, EstimatorMethod::RANSAC, {});
        FAIL("expected degeneracy error");
    } catch (const error& e) {
        CHECK(e.code() == errc::degenerate);
    }
}

TEST_CASE("estimator names round-trip") {
    for (auto m : {EstimatorMethod::LS, EstimatorMethod::RANSAC, EstimatorMethod::LMEDS,
                   EstimatorMethod::PROSAC})
        CHECK(estimator_from_name(estimator_name(m)) == m);
    CHECK_THROWS_AS(estimator_from_name("hough"), error);
}
