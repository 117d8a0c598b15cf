// Exercises the shared-library C interface end to end. Links against the
// mcpt shared target only, like an external consumer would.
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "mcpt.h"

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() / ("mcpt_capi_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path);
    f << content;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("version and error strings are always available") {
    CHECK(std::string(mcpt_version()) == "1.0.0");
    CHECK(mcpt_last_error() != nullptr);
}

TEST_CASE("config handles: create, set, load") {
    mcpt_config* cfg = nullptr;
    REQUIRE(mcpt_config_create(&cfg) == MCPT_OK);
    REQUIRE(cfg != nullptr);
    CHECK(mcpt_config_create(nullptr) == MCPT_ERR_INPUT);
    CHECK(mcpt_config_set(cfg, "vote_window", "9") == MCPT_OK);
    CHECK(mcpt_config_set(cfg, "no_such_key", "1") == MCPT_ERR_CONFIG);
    CHECK(std::strlen(mcpt_last_error()) > 0);
    CHECK(mcpt_config_set(cfg, nullptr, "1") == MCPT_ERR_INPUT);
    CHECK(mcpt_config_set(nullptr, "vote_window", "9") == MCPT_ERR_INPUT);
    mcpt_config_destroy(cfg);
    mcpt_config_destroy(nullptr); // must be a harmless no-op

    TempDir dir;
    write_file(dir.file("good.cfg"), "vote_window = 9\nrng_seed = 7\n");
    mcpt_config* loaded = nullptr;
    CHECK(mcpt_config_load(dir.file("good.cfg").c_str(), &loaded) == MCPT_OK);
    REQUIRE(loaded != nullptr);
    mcpt_config_destroy(loaded);

    mcpt_config* bad = nullptr;
    CHECK(mcpt_config_load(dir.file("missing.cfg").c_str(), &bad) == MCPT_ERR_IO);
    CHECK(bad == nullptr);
    write_file(dir.file("bad.cfg"), "vote_window 9\n");
    CHECK(mcpt_config_load(dir.file("bad.cfg").c_str(), &bad) == MCPT_ERR_PARSE);
    CHECK(bad == nullptr);
    CHECK(mcpt_config_load(dir.file("good.cfg").c_str(), nullptr) == MCPT_ERR_INPUT);
}

TEST_CASE("generate, pipeline, evaluate and render round trip") {
    TempDir dir;
    write_file(dir.file("scenario.cfg"),
               "frames = 120\nnum_cameras = 3\nnum_identities = 4\n"
               "embedding_dim = 16\nrng_seed = 42\n");

    CHECK(mcpt_generate_scene(dir.file("scenario.cfg").c_str(), nullptr,
                              dir.file("scene").c_str()) == MCPT_OK);
    CHECK(fs::exists(dir.file("scene") + "/detections.csv"));
    CHECK(fs::exists(dir.file("scene") + "/gt_tracks.txt"));

    mcpt_config* cfg = nullptr;
    REQUIRE(mcpt_config_create(&cfg) == MCPT_OK);
    REQUIRE(mcpt_config_set(cfg, "embedding_dim", "16") == MCPT_OK);

    CHECK(mcpt_run_pipeline(cfg, dir.file("scene").c_str(), dir.file("run").c_str(),
                            "all") == MCPT_OK);
    CHECK(fs::exists(dir.file("run") + "/tracks.txt"));
    CHECK(fs::exists(dir.file("run") + "/manifest.txt"));

    mcpt_eval_report report;
    CHECK(mcpt_evaluate((dir.file("run") + "/tracks.txt").c_str(),
                        (dir.file("scene") + "/gt_tracks.txt").c_str(), "iou",
                        dir.file("table.txt").c_str(), dir.file("report.csv").c_str(),
                        &report) == MCPT_OK);
    CHECK(report.idf1 == 1.0);
    CHECK(report.idp == 1.0);
    CHECK(report.idr == 1.0);
    CHECK(report.idtp > 0);
    CHECK(report.idfp == 0);
    CHECK(report.idfn == 0);
    CHECK(read_file(dir.file("table.txt")).find("idf1") != std::string::npos);
    CHECK(read_file(dir.file("report.csv")).find("idf1") != std::string::npos);

    // report output is optional
    CHECK(mcpt_evaluate((dir.file("run") + "/tracks.txt").c_str(),
                        (dir.file("scene") + "/gt_tracks.txt").c_str(), "world",
                        nullptr, nullptr, nullptr) == MCPT_OK);

    CHECK(mcpt_render_topdown((dir.file("run") + "/tracks.txt").c_str(), 40, 20,
                              dir.file("map.svg").c_str()) == MCPT_OK);
    auto svg = read_file(dir.file("map.svg"));
    CHECK(svg.find("<svg ") != std::string::npos);
    CHECK(svg.find("<polyline") != std::string::npos);

    // a tracklets CSV that never went through world lifting cannot be rendered
    CHECK(mcpt_render_topdown((dir.file("run") + "/tracklets.csv").c_str(), 40, 20,
                              dir.file("bad.svg").c_str()) == MCPT_ERR_STATE);

    SUBCASE("calibrate alone matches the pipeline stage") {
        CHECK(mcpt_calibrate(cfg, (dir.file("scene") + "/correspondences.txt").c_str(),
                             dir.file("h.txt").c_str()) == MCPT_OK);
        CHECK(read_file(dir.file("h.txt")) ==
              read_file(dir.file("run") + "/homographies.txt"));
    }

    mcpt_config_destroy(cfg);
}

TEST_CASE("failures map onto status codes") {
    TempDir dir;
    mcpt_config* cfg = nullptr;
    REQUIRE(mcpt_config_create(&cfg) == MCPT_OK);

    CHECK(mcpt_generate_scene(dir.file("nope.cfg").c_str(), nullptr,
                              dir.file("out").c_str()) == MCPT_ERR_IO);
    CHECK(std::strlen(mcpt_last_error()) > 0);

    write_file(dir.file("scenario.cfg"), "frames = 30\nembedding_dim = 8\nrng_seed = 5\n");
    CHECK(mcpt_generate_scene(dir.file("scenario.cfg").c_str(), "not_a_number",
                              dir.file("out").c_str()) == MCPT_ERR_CONFIG);
    CHECK(mcpt_generate_scene(dir.file("scenario.cfg").c_str(), "11",
                              dir.file("scene").c_str()) == MCPT_OK);

    CHECK(mcpt_run_pipeline(cfg, dir.file("scene").c_str(), dir.file("run").c_str(),
                            "bogus_stage") == MCPT_ERR_CONFIG);
    CHECK(mcpt_run_pipeline(nullptr, dir.file("scene").c_str(), dir.file("run").c_str(),
                            "all") == MCPT_ERR_INPUT);
    CHECK(mcpt_run_pipeline(cfg, dir.file("no_scene").c_str(), dir.file("run").c_str(),
                            "sct") == MCPT_ERR_IO);

    mcpt_eval_report report;
    CHECK(mcpt_evaluate(dir.file("nope.txt").c_str(), dir.file("nope.txt").c_str(), "iou",
                        nullptr, nullptr, &report) == MCPT_ERR_IO);
    CHECK(mcpt_evaluate(nullptr, dir.file("nope.txt").c_str(), "iou", nullptr, nullptr,
                        &report) == MCPT_ERR_INPUT);

    CHECK(mcpt_render_topdown(dir.file("nope.txt").c_str(), 40, 20,
                              dir.file("x.svg").c_str()) == MCPT_ERR_IO);

    mcpt_config_destroy(cfg);
}
