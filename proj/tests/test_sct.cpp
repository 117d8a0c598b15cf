#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "mcpt/error.hpp"
#include "mcpt/sct.hpp"
#include "mcpt/synthgen.hpp"
#include "mcpt/types.hpp"

using namespace mcpt;

namespace {

Detection make_det(int frame, int det_id, double cx, double cy, double h, double score,
                   std::vector<double> emb, int camera_id = 0) {
    Detection d;
    d.camera_id = camera_id;
    d.frame = frame;
    d.det_id = det_id;
    d.box = {cx - 0.2 * h, cy - 0.5 * h, 0.4 * h, h};
    d.score = score;
    d.embedding = std::move(emb);
    return d;
}

std::vector<double> unit_e(int axis, int dim = 4) {
    std::vector<double> v(static_cast<size_t>(dim), 0.0);
    v[static_cast<size_t>(axis)] = 1.0;
    return v;
}

RunConfig small_cfg() {
    RunConfig cfg;
    cfg.embedding_dim = 4;
    return cfg;
}

} // namespace

TEST_CASE("one moving detection per frame yields one full tracklet") {
    std::vector<Detection> dets;
    for (int f = 0; f < 10; ++f)
        dets.push_back(make_det(f, 0, 100.0 + 5.0 * f, 200.0, 120.0, 0.9, unit_e(0)));
    auto tracklets = track_camera(dets, small_cfg());
    REQUIRE(tracklets.size() == 1);
    CHECK(tracklets[0].local_id == 1);
    CHECK(tracklets[0].entries.size() == 10);
    for (int f = 0; f < 10; ++f) CHECK(tracklets[0].entries[static_cast<size_t>(f)].frame == f);
}

TEST_CASE("a detection below the low threshold is discarded") {
    std::vector<Detection> dets = {make_det(0, 0, 100, 200, 120, 0.05, unit_e(0))};
    CHECK(track_camera(dets, small_cfg()).empty());
}

TEST_CASE("a single unconfirmed detection emits nothing") {
    std::vector<Detection> dets = {make_det(0, 0, 100, 200, 120, 0.9, unit_e(0))};
    CHECK(track_camera(dets, small_cfg()).empty());
}

TEST_CASE("low-score detections extend but never start tracks") {
    std::vector<Detection> dets;
    for (int f = 0; f < 5; ++f)
        dets.push_back(make_det(f, 0, 100.0 + 5.0 * f, 200.0, 120.0, 0.9, unit_e(0)));
    for (int f = 5; f < 9; ++f)
        dets.push_back(make_det(f, 0, 100.0 + 5.0 * f, 200.0, 120.0, 0.3, unit_e(0)));
    auto tracklets = track_camera(dets, small_cfg());
    REQUIRE(tracklets.size() == 1);
    CHECK(tracklets[0].entries.size() == 9);

    std::vector<Detection> only_low;
    for (int f = 0; f < 6; ++f)
        only_low.push_back(make_det(f, 0, 100.0, 200.0, 120.0, 0.3, unit_e(0)));
    CHECK(track_camera(only_low, small_cfg()).empty());
}

TEST_CASE("per-camera low threshold override filters stage-2 detections") {
    RunConfig cfg = small_cfg();
    cfg.low_score_thresh_per_camera[2] = 0.45;
    std::vector<Detection> dets;
    for (int f = 0; f < 4; ++f)
        dets.push_back(make_det(f, 0, 100.0, 200.0, 120.0, 0.9, unit_e(0), 2));
    for (int f = 4; f < 8; ++f)
        dets.push_back(make_det(f, 0, 100.0, 200.0, 120.0, 0.3, unit_e(0), 2));
    auto tracklets = track_camera(dets, cfg);
    REQUIRE(tracklets.size() == 1);
    CHECK(tracklets[0].entries.size() == 4); // 0.3 < 0.45 on camera 2

    for (auto& d : dets) d.camera_id = 0;
    tracklets = track_camera(dets, cfg);
    REQUIRE(tracklets.size() == 1);
    CHECK(tracklets[0].entries.size() == 8); // default low threshold admits them
}

TEST_CASE("a long silence splits into two tracklets") {
    std::vector<Detection> dets;
    for (int f = 0; f < 5; ++f)
        dets.push_back(make_det(f, 0, 100.0, 200.0, 120.0, 0.9, unit_e(0)));
    for (int f = 50; f < 55; ++f)
        dets.push_back(make_det(f, 0, 100.0, 200.0, 120.0, 0.9, unit_e(0)));
    auto tracklets = track_camera(dets, small_cfg());
    REQUIRE(tracklets.size() == 2);
    CHECK(tracklets[0].entries.back().frame == 4);
    CHECK(tracklets[1].entries.front().frame == 50);
    CHECK(tracklets[0].local_id < tracklets[1].local_id);
}

TEST_CASE("mixed camera ids are rejected") {
    std::vector<Detection> dets = {make_det(0, 0, 100, 200, 120, 0.9, unit_e(0), 0),
                                   make_det(1, 0, 100, 200, 120, 0.9, unit_e(0), 1)};
    CHECK_THROWS_AS(track_camera(dets, small_cfg()), error&);
}

TEST_CASE("crossing identities stay separated by appearance") {
    Scenario s;
    s.map_w = 40.0;
    s.map_h = 20.0;
    s.frames = 300;
    s.num_cameras = 1;
    s.num_identities = 2;
    s.embedding_dim = 16;
    s.noise_sigma = 0.05;
    s.rng_seed = 31;
    s.waypoints = {{{5.0, 5.0}, {35.0, 15.0}}, {{5.0, 15.0}, {35.0, 5.0}}};
    s.similar_pairs = {{1, 2}};
    s.similar_pair_dist = 1.0; // well separated across, tight within
    SceneData scene = generate(s);

    std::map<std::tuple<int, int, int>, int> gt;
    for (const auto& t : scene.prelim_tracklets) {
        int id = scene.tracklet_identity.at({t.camera_id, t.local_id});
        for (const auto& e : t.entries) gt[{t.camera_id, e.frame, e.det_id}] = id;
    }

    RunConfig cfg;
    cfg.embedding_dim = 16;
    auto tracklets = track_camera(scene.detections, cfg);
    REQUIRE(tracklets.size() == 2);
    for (const auto& t : tracklets) {
        std::set<int> ids;
        for (const auto& e : t.entries) ids.insert(gt.at({t.camera_id, e.frame, e.det_id}));
        CHECK(ids.size() == 1);
    }
    size_t covered = tracklets[0].entries.size() + tracklets[1].entries.size();
    CHECK(covered == scene.detections.size());
}

TEST_CASE("no detection lands in two tracklets under heavy corruption") {
    Scenario s;
    s.frames = 300;
    s.num_cameras = 1;
    s.num_identities = 4;
    s.embedding_dim = 16;
    s.noise_sigma = 0.05;
    s.miss_rate = 0.1;
    s.false_positive_rate = 0.05;
    s.box_jitter_px = 2.0;
    s.low_score_fraction = 0.2;
    s.rng_seed = 32;
    SceneData scene = generate(s);
    auto tracklets = track_camera(scene.detections, small_cfg());
    REQUIRE(!tracklets.empty());
    std::set<std::pair<int, int>> seen;
    for (const auto& t : tracklets)
        for (const auto& e : t.entries) {
            CHECK(seen.insert({e.frame, e.det_id}).second);
        }
}

TEST_CASE("tracking is deterministic") {
    Scenario s;
    s.frames = 200;
    s.num_cameras = 1;
    s.num_identities = 3;
    s.embedding_dim = 8;
    s.noise_sigma = 0.1;
    s.miss_rate = 0.1;
    s.rng_seed = 33;
    SceneData scene = generate(s);
    RunConfig cfg;
    cfg.embedding_dim = 8;
    auto a = track_camera(scene.detections, cfg);
    auto b = track_camera(scene.detections, cfg);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].local_id == b[i].local_id);
        REQUIRE(a[i].entries.size() == b[i].entries.size());
        for (size_t j = 0; j < a[i].entries.size(); ++j) {
            CHECK(a[i].entries[j].frame == b[i].entries[j].frame);
            CHECK(a[i].entries[j].det_id == b[i].entries[j].det_id);
            CHECK(a[i].entries[j].box.x == b[i].entries[j].box.x);
        }
    }
}

TEST_CASE("interpolation leaves gap-free tracklets alone") {
    Tracklet t;
    t.camera_id = 0;
    t.local_id = 3;
    for (int f = 0; f < 5; ++f)
        t.entries.push_back(make_det(f, 0, 100.0 + f, 200.0, 120.0, 0.9, {}));
    Tracklet out = interpolate_gaps(t, 30);
    REQUIRE(out.entries.size() == 5);
    for (size_t i = 0; i < 5; ++i) CHECK(out.entries[i].box.x == t.entries[i].box.x);
}

TEST_CASE("interpolation fills a two-frame gap at the midpoint") {
    Tracklet t;
    t.camera_id = 0;
    t.local_id = 3;
    Detection a;
    a.frame = 10;
    a.det_id = 4;
    a.box = {0, 0, 10, 10};
    a.score = 0.8;
    Detection b = a;
    b.frame = 12;
    b.det_id = 9;
    b.box = {2, 2, 10, 10};
    b.score = 0.6;
    t.entries = {a, b};
    t.global_ids = {7, 7};
    t.world_points = {{1.0, 2.0}, {3.0, 6.0}};

    Tracklet out = interpolate_gaps(t, 30);
    REQUIRE(out.entries.size() == 3);
    const Detection& mid = out.entries[1];
    CHECK(mid.frame == 11);
    CHECK(mid.det_id == -4);
    CHECK(mid.box.x == doctest::Approx(1.0));
    CHECK(mid.box.y == doctest::Approx(1.0));
    CHECK(mid.box.w == doctest::Approx(10.0));
    CHECK(mid.box.h == doctest::Approx(10.0));
    CHECK(mid.score == doctest::Approx(0.7));
    CHECK(out.global_ids == std::vector<int>{7, 7, 7});
    CHECK(out.world_points[1].x == doctest::Approx(2.0));
    CHECK(out.world_points[1].y == doctest::Approx(4.0));
}

TEST_CASE("interpolation respects the gap cap") {
    Tracklet t;
    t.camera_id = 0;
    t.local_id = 1;
    t.entries = {make_det(0, 0, 100, 200, 120, 0.9, {}),
                 make_det(41, 0, 120, 200, 120, 0.9, {})};
    Tracklet out = interpolate_gaps(t, 30); // gap of 40 > 30
    CHECK(out.entries.size() == 2);
    out = interpolate_gaps(t, 40);
    CHECK(out.entries.size() == 42);
}

TEST_CASE("interpolation keeps the earlier global id across a disagreement") {
    Tracklet t;
    t.camera_id = 0;
    t.local_id = 2;
    t.entries = {make_det(0, 0, 100, 200, 120, 0.9, {}),
                 make_det(3, 0, 110, 200, 120, 0.9, {})};
    t.global_ids = {4, 9};
    Tracklet out = interpolate_gaps(t, 30);
    CHECK(out.global_ids == std::vector<int>{4, 4, 4, 9});
}
