#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "mcpt/error.hpp"
#include "mcpt/io.hpp"

using namespace mcpt;
using testutil::TempDir;
using testutil::write_file;

namespace {

Detection make_det(int cam, int frame, int det_id, double x, double y, double w, double h,
                   double score, std::vector<double> emb) {
    Detection d;
    d.camera_id = cam;
    d.frame = frame;
    d.det_id = det_id;
    d.box = {x, y, w, h};
    d.score = score;
    d.embedding = std::move(emb);
    return d;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("fmt_real round-trips to 9 significant digits") {
    for (double v : {0.0, 1.0, -1.0, 0.5, 0.1, 1.0 / 3.0, 123456789.123, 1e20, -2.5e-8,
                     3.14159265358979, 1e-300}) {
        double back = std::strtod(fmt_real(v).c_str(), nullptr);
        if (v == 0.0) {
            CHECK(back == 0.0);
        } else {
            CHECK(std::abs(back - v) <= 5e-9 * std::abs(v));
        }
    }
    CHECK(fmt_real(0.5) == "0.5");
    CHECK(fmt_real(-3.0) == "-3");
}

TEST_CASE("detections round-trip through the three scene files") {
    TempDir td;
    std::vector<Detection> dets;
    dets.push_back(make_det(1, 0, 0, 10.5, 20.25, 30.0, 60.0, 0.75, {1.0, 0.0, 0.0, 0.0}));
    dets.push_back(make_det(0, 2, 1, 5.0, 6.0, 7.0, 8.0, 0.9, {0.5, 0.5, 0.5, 0.5}));
    std::vector<Keypoint> kps(kNumKeypoints);
    for (int i = 0; i < kNumKeypoints; ++i) kps[i] = {i * 1.0, i * 2.0, 0.5};
    dets[1].keypoints = kps;

    write_detections(dets, td.file("det.csv"), td.file("emb.csv"), td.file("kp.csv"));
    auto loaded = load_detections(td.file("det.csv"), td.file("emb.csv"), td.file("kp.csv"), 4);

    REQUIRE(loaded.size() == 2);
    // sorted by (camera_id, frame, det_id): camera 0 first
    CHECK(loaded[0].camera_id == 0);
    CHECK(loaded[0].frame == 2);
    CHECK(loaded[0].det_id == 1);
    CHECK(loaded[0].box.x == 5.0);
    CHECK(loaded[0].score == 0.9);
    REQUIRE(loaded[0].keypoints.has_value());
    CHECK((*loaded[0].keypoints)[3].y == 6.0);
    CHECK(loaded[1].camera_id == 1);
    CHECK(loaded[1].embedding == std::vector<double>{1.0, 0.0, 0.0, 0.0});
    CHECK(!loaded[1].keypoints.has_value());
}

TEST_CASE("empty detections file loads as an empty list") {
    TempDir td;
    write_file(td.file("det.csv"), "");
    write_file(td.file("emb.csv"), "");
    CHECK(load_detections(td.file("det.csv"), td.file("emb.csv"), "", 4).empty());
}

TEST_CASE("single well-formed row echoes its fields") {
    TempDir td;
    write_file(td.file("det.csv"),
               "camera_id,frame,det_id,x,y,w,h,score\n3,7,0,1,2,3,4,0.5\n");
    write_file(td.file("emb.csv"), "camera_id,frame,det_id,e0,e1,e2,e3\n3,7,0,1,0,0,0\n");
    auto dets = load_detections(td.file("det.csv"), td.file("emb.csv"), "", 4);
    REQUIRE(dets.size() == 1);
    CHECK(dets[0].camera_id == 3);
    CHECK(dets[0].frame == 7);
    CHECK(dets[0].box.h == 4.0);
    CHECK(dets[0].embedding.size() == 4);
}

TEST_CASE("embedding row with too few values names the line") {
    TempDir td;
    write_file(td.file("det.csv"),
               "camera_id,frame,det_id,x,y,w,h,score\n0,0,0,1,2,3,4,0.5\n");
    write_file(td.file("emb.csv"), "camera_id,frame,det_id,e0,e1,e2,e3\n0,0,0,1,0,0\n");
    try {
        load_detections(td.file("det.csv"), td.file("emb.csv"), "", 4);
        FAIL("expected parse error");
    } catch (const error& e) {
        CHECK(e.code() == errc::parse);
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
}

TEST_CASE("embedding header dimension mismatch is a dimension error") {
    TempDir td;
    write_file(td.file("det.csv"),
               "camera_id,frame,det_id,x,y,w,h,score\n0,0,0,1,2,3,4,0.5\n");
    write_file(td.file("emb.csv"), "camera_id,frame,det_id,e0,e1,e2\n0,0,0,1,0,0\n");
    try {
        load_detections(td.file("det.csv"), td.file("emb.csv"), "", 4);
        FAIL("expected dimension error");
    } catch (const error& e) {
        CHECK(std::string(e.what()).find("dimension") != std::string::npos);
    }
}

TEST_CASE("malformed numeric field reports its line") {
    TempDir td;
    write_file(td.file("det.csv"),
               "camera_id,frame,det_id,x,y,w,h,score\n0,0,0,1,2,3,4,0.5\n0,abc,1,1,2,3,4,0.5\n");
    write_file(td.file("emb.csv"), "camera_id,frame,det_id,e0\n0,0,0,1\n");
    try {
        load_detections(td.file("det.csv"), td.file("emb.csv"), "", 1);
        FAIL("expected parse error");
    } catch (const error& e) {
        CHECK(e.code() == errc::parse);
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
}

TEST_CASE("duplicate detections and missing embeddings are rejected") {
    TempDir td;
    write_file(td.file("det.csv"),
               "camera_id,frame,det_id,x,y,w,h,score\n0,0,0,1,2,3,4,0.5\n0,0,0,9,9,9,9,0.5\n");
    write_file(td.file("emb.csv"), "camera_id,frame,det_id,e0\n0,0,0,1\n");
    CHECK_THROWS_AS(load_detections(td.file("det.csv"), td.file("emb.csv"), "", 1), error);

    write_file(td.file("det2.csv"),
               "camera_id,frame,det_id,x,y,w,h,score\n0,0,0,1,2,3,4,0.5\n0,0,1,1,2,3,4,0.5\n");
    write_file(td.file("emb2.csv"), "camera_id,frame,det_id,e0\n0,0,0,1\n");
    CHECK_THROWS_AS(load_detections(td.file("det2.csv"), td.file("emb2.csv"), "", 1), error);
}

TEST_CASE("write_tracks emits sorted rows and skips unassigned entries") {
    TempDir td;
    Tracklet t1;
    t1.camera_id = 1;
    t1.local_id = 0;
    t1.entries.push_back(make_det(1, 5, 0, 1, 2, 3, 4, 0.9, {}));
    t1.entries.push_back(make_det(1, 6, 0, 1, 2, 3, 4, 0.9, {}));
    t1.global_ids = {2, kUnassigned};
    t1.world_points = {{10.0, 11.0}, {10.5, 11.5}};
    Tracklet t2;
    t2.camera_id = 0;
    t2.local_id = 1;
    t2.entries.push_back(make_det(0, 9, 0, 5, 6, 7, 8, 0.8, {}));
    t2.global_ids = {4};
    t2.world_points = {{1.0, 2.0}};

    std::vector<Tracklet> ts = {t1, t2};
    write_tracks(ts, td.file("tracks.txt"));
    auto rows = load_tracks(td.file("tracks.txt"));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].camera_id == 0);
    CHECK(rows[0].global_id == 4);
    CHECK(rows[0].frame == 9);
    CHECK(rows[0].world.x == 1.0);
    CHECK(rows[1].camera_id == 1);
    CHECK(rows[1].global_id == 2);

    SUBCASE("empty input writes an empty file") {
        std::vector<Tracklet> none;
        write_tracks(none, td.file("empty.txt"));
        CHECK(slurp(td.file("empty.txt")).empty());
    }
    SUBCASE("missing annotations are a state error") {
        Tracklet bare;
        bare.camera_id = 0;
        bare.local_id = 2;
        bare.entries.push_back(make_det(0, 1, 0, 1, 2, 3, 4, 0.9, {}));
        std::vector<Tracklet> bad = {bare};
        try {
            write_tracks(bad, td.file("bad.txt"));
            FAIL("expected state error");
        } catch (const error& e) {
            CHECK(e.code() == errc::state);
        }
    }
}

TEST_CASE("correspondences and homographies round-trip") {
    TempDir td;
    std::map<int, std::vector<Correspondence>> corr;
    corr[0] = {{{1.0, 2.0}, {3.0, 4.0}}, {{5.0, 6.0}, {7.0, 8.0}}};
    corr[2] = {{{0.5, 0.25}, {-1.0, -2.0}}};
    write_correspondences(corr, td.file("corr.txt"));
    auto corr2 = load_correspondences(td.file("corr.txt"));
    REQUIRE(corr2.size() == 2);
    CHECK(corr2[0][1].map_point.y == 8.0);
    CHECK(corr2[2][0].image_point.x == 0.5);

    std::map<int, Homography> hs;
    hs[1] = make_homography({2, 0, 10, 0, 2, -4, 0, 0, 1}, 1);
    write_homographies(hs, td.file("h.txt"));
    auto hs2 = load_homographies(td.file("h.txt"));
    REQUIRE(hs2.count(1) == 1);
    CHECK(hs2[1].h == hs[1].h);
    CHECK(hs2[1].camera_id == 1);

    SUBCASE("h22 is normalized to 1 on load") {
        write_file(td.file("h2.txt"), "0 2 0 0 0 2 0 0 0 2\n");
        auto loaded = load_homographies(td.file("h2.txt"));
        CHECK(loaded[0].h[0] == 1.0);
        CHECK(loaded[0].h[8] == 1.0);
    }
    SUBCASE("singular matrix names the line") {
        write_file(td.file("h3.txt"), "0 1 0 0 0 1 0 0 0 1\n1 0 0 0 0 0 0 0 0 1\n");
        try {
            load_homographies(td.file("h3.txt"));
            FAIL("expected parse error");
        } catch (const error& e) {
            CHECK(std::string(e.what()).find(":2:") != std::string::npos);
        }
    }
}

TEST_CASE("anchor bank round-trips and rejects slot gaps") {
    TempDir td;
    AnchorBank bank;
    bank.anchors.push_back({7, {{1.0, 0.0}, {0.5, 0.5}}});
    bank.anchors.push_back({3, {{0.0, 1.0}}});
    write_anchor_bank(bank, td.file("anchors.csv"));
    auto loaded = load_anchor_bank(td.file("anchors.csv"));
    REQUIRE(loaded.anchors.size() == 2);
    CHECK(loaded.anchors[0].global_id == 3); // writer sorts by id
    CHECK(loaded.anchors[1].features[1] == std::vector<double>{0.5, 0.5});

    write_file(td.file("gap.csv"), "global_id,slot,e0,e1\n1,0,1,0\n1,2,0,1\n");
    CHECK_THROWS_AS(load_anchor_bank(td.file("gap.csv")), error);
}

TEST_CASE("tracklet stage files round-trip in all three column layouts") {
    TempDir td;
    Tracklet t;
    t.camera_id = 2;
    t.local_id = 5;
    t.entries.push_back(make_det(2, 10, 3, 1.5, 2.5, 3.5, 4.5, 0.7, {}));
    t.entries.push_back(make_det(2, 12, 0, 2.0, 3.0, 4.0, 5.0, 0.8, {}));

    SUBCASE("bare") {
        std::vector<Tracklet> ts = {t};
        write_tracklets_csv(ts, td.file("t.csv"));
        auto back = load_tracklets_csv(td.file("t.csv"));
        REQUIRE(back.size() == 1);
        CHECK(back[0].local_id == 5);
        CHECK(back[0].entries[1].frame == 12);
        CHECK(back[0].entries[0].det_id == 3);
        CHECK(!back[0].has_global_ids());
        CHECK(!back[0].has_world_points());
    }
    SUBCASE("with global ids") {
        t.global_ids = {4, kUnassigned};
        std::vector<Tracklet> ts = {t};
        write_tracklets_csv(ts, td.file("t.csv"));
        auto back = load_tracklets_csv(td.file("t.csv"));
        REQUIRE(back.size() == 1);
        CHECK(back[0].global_ids == std::vector<int>{4, kUnassigned});
        CHECK(!back[0].has_world_points());
    }
    SUBCASE("with global ids and world points") {
        t.global_ids = {4, 4};
        t.world_points = {{0.25, 0.75}, {0.5, 1.0}};
        std::vector<Tracklet> ts = {t};
        write_tracklets_csv(ts, td.file("t.csv"));
        auto back = load_tracklets_csv(td.file("t.csv"));
        REQUIRE(back.size() == 1);
        CHECK(back[0].world_points[1].y == 1.0);
    }
    SUBCASE("mixed annotation presence is a state error") {
        Tracklet other = t;
        other.local_id = 6;
        other.global_ids = {1, 2};
        std::vector<Tracklet> ts = {t, other};
        CHECK_THROWS_AS(write_tracklets_csv(ts, td.file("t.csv")), error);
    }
}

TEST_CASE("key-value grammar: comments, duplicates, malformed lines") {
    TempDir td;
    write_file(td.file("ok.cfg"), "# comment\n\n a = 1 \nb = two # trailing\n");
    auto kv = parse_kv_file(td.file("ok.cfg"));
    REQUIRE(kv.size() == 2);
    CHECK(kv[0] == std::pair<std::string, std::string>{"a", "1"});
    CHECK(kv[1] == std::pair<std::string, std::string>{"b", "two"});

    write_file(td.file("dup.cfg"), "a = 1\na = 2\n");
    CHECK_THROWS_AS(parse_kv_file(td.file("dup.cfg")), error);
    write_file(td.file("noeq.cfg"), "just words\n");
    CHECK_THROWS_AS(parse_kv_file(td.file("noeq.cfg")), error);
    write_file(td.file("novalue.cfg"), "a =\n");
    CHECK_THROWS_AS(parse_kv_file(td.file("novalue.cfg")), error);
}

TEST_CASE("run config parsing") {
    TempDir td;
    SUBCASE("empty file yields defaults") {
        write_file(td.file("c.cfg"), "");
        RunConfig cfg = load_run_config(td.file("c.cfg"));
        CHECK(cfg.high_score_thresh == 0.6);
        CHECK(cfg.low_score_thresh == 0.1);
        CHECK(cfg.vote_window == 15);
        CHECK(cfg.stcra_iterations == 3);
        CHECK(cfg.stcra_conf_thresholds == std::vector<double>{0.5, 0.65, 0.8});
    }
    SUBCASE("keys apply and validate together") {
        write_file(td.file("c.cfg"),
                   "stcra_iterations = 2\n"
                   "stcra_conf_thresholds = 0.4, 0.7\n"
                   "stcra_outlier_thresholds = 2.5, 1.0\n"
                   "low_score_thresh.camera_3 = 0.25\n"
                   "embedding_dim = 16\n"
                   "rng_seed = 99\n"
                   "calib_method = lmeds\n");
        RunConfig cfg = load_run_config(td.file("c.cfg"));
        CHECK(cfg.stcra_iterations == 2);
        CHECK(cfg.stcra_outlier_thresholds == std::vector<double>{2.5, 1.0});
        CHECK(cfg.low_thresh_for_camera(3) == 0.25);
        CHECK(cfg.low_thresh_for_camera(0) == 0.1);
        CHECK(cfg.embedding_dim == 16);
        CHECK(cfg.rng_seed == 99);
        CHECK(cfg.calib_method == "lmeds");
    }
    SUBCASE("unknown key is a config error") {
        write_file(td.file("c.cfg"), "hi_score = 0.5\n");
        try {
            load_run_config(td.file("c.cfg"));
            FAIL("expected config error");
        } catch (const error& e) {
            CHECK(e.code() == errc::config);
            CHECK(std::string(e.what()).find("hi_score") != std::string::npos);
        }
    }
    SUBCASE("invariant violations are rejected") {
        write_file(td.file("c.cfg"), "vote_window = 4\n");
        CHECK_THROWS_AS(load_run_config(td.file("c.cfg")), error);
        write_file(td.file("c2.cfg"), "stcra_conf_thresholds = 0.8, 0.6, 0.5\n");
        CHECK_THROWS_AS(load_run_config(td.file("c2.cfg")), error);
        write_file(td.file("c3.cfg"), "low_score_thresh = 0.7\n");
        CHECK_THROWS_AS(load_run_config(td.file("c3.cfg")), error);
    }
    SUBCASE("single override re-validates") {
        RunConfig cfg;
        apply_config_override(cfg, "rng_seed", "12345");
        CHECK(cfg.rng_seed == 12345);
        CHECK_THROWS_AS(apply_config_override(cfg, "smoothing_window", "2"), error);
        CHECK_THROWS_AS(apply_config_override(cfg, "nope", "1"), error);
    }
}
