// Command-line front end. Talks to the tracking library exclusively through
// its C interface (mcpt.h); all heavy lifting happens behind that boundary.
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

#include "CLI11.hpp"
#include "mcpt.h"

namespace {

// MCPT_LOG: quiet|info|debug (or 0|1|2); default info
int log_level() {
    const char* v = std::getenv("MCPT_LOG");
    if (!v) return 1;
    if (!std::strcmp(v, "quiet") || !std::strcmp(v, "0")) return 0;
    if (!std::strcmp(v, "debug") || !std::strcmp(v, "2")) return 2;
    return 1;
}

void info(const std::string& msg) {
    if (log_level() >= 1) std::fprintf(stderr, "%s\n", msg.c_str());
}

void debug(const std::string& msg) {
    if (log_level() >= 2) std::fprintf(stderr, "[debug] %s\n", msg.c_str());
}

// 0 = success, 1 = input/config problem, 2 = internal invariant violation
int exit_code(mcpt_status s) {
    if (s == MCPT_OK) return 0;
    return s == MCPT_ERR_INTERNAL ? 2 : 1;
}

int report_failure(mcpt_status s) {
    std::fprintf(stderr, "error: %s\n", mcpt_last_error());
    return exit_code(s);
}

struct ConfigHandle {
    mcpt_config* cfg = nullptr;
    ~ConfigHandle() { mcpt_config_destroy(cfg); }
};

// loads --config (or defaults) and applies --seed
int make_config(const std::string& config_path, const std::string& seed, ConfigHandle& out) {
    mcpt_status s = config_path.empty() ? mcpt_config_create(&out.cfg)
                                        : mcpt_config_load(config_path.c_str(), &out.cfg);
    if (s != MCPT_OK) return report_failure(s);
    if (!seed.empty()) {
        debug("rng_seed override: " + seed);
        s = mcpt_config_set(out.cfg, "rng_seed", seed.c_str());
        if (s != MCPT_OK) return report_failure(s);
    }
    return 0;
}

int run_stages(const std::string& config_path, const std::string& seed,
               const std::string& scene, const std::string& out, const std::string& stages) {
    ConfigHandle h;
    if (int rc = make_config(config_path, seed, h)) return rc;
    debug("scene=" + scene + " out=" + out + " stages=" + stages);
    mcpt_status s = mcpt_run_pipeline(h.cfg, scene.c_str(), out.c_str(), stages.c_str());
    if (s != MCPT_OK) return report_failure(s);
    info("wrote " + out + "/manifest.txt");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-camera multi-person tracking pipeline"};
    app.require_subcommand(1);

    std::string config_path, scene, out, seed;
    app.add_option("--config", config_path, "run config file (key = value)");
    app.add_option("--scene", scene, "scene directory (scenario file for generate)");
    app.add_option("--out", out, "output directory or file");
    app.add_option("--seed", seed, "rng seed override");

    auto* generate = app.add_subcommand("generate", "synthesize a scene from a scenario file");
    generate->fallthrough();
    auto* calibrate = app.add_subcommand("calibrate", "estimate per-camera homographies");
    calibrate->fallthrough();
    auto* track = app.add_subcommand("track", "single-camera tracking (sct stage)");
    track->fallthrough();
    auto* assign = app.add_subcommand("assign", "anchor-guided global id assignment");
    assign->fallthrough();
    auto* stcra = app.add_subcommand("stcra", "spatio-temporal consistency re-assignment");
    stcra->fallthrough();
    auto* pipeline = app.add_subcommand("pipeline", "run pipeline stages in order");
    pipeline->fallthrough();
    std::string stages = "all";
    pipeline->add_option("--stages", stages,
                         "comma-separated subset of calibrate,sct,anchors,stcra,"
                         "interpolate,write (default all)");

    auto* eval = app.add_subcommand("eval", "identity metrics against ground truth");
    eval->fallthrough();
    std::string pred_path, gt_path, rule = "iou", table_path, csv_path;
    double idf1_floor = 0.0;
    eval->add_option("--pred", pred_path, "predicted tracks file")->required();
    eval->add_option("--gt", gt_path, "ground-truth tracks file")->required();
    eval->add_option("--rule", rule, "match rule: iou or world (default iou)");
    eval->add_option("--table", table_path, "write the human-readable table here");
    eval->add_option("--csv", csv_path, "write the CSV report here");
    eval->add_option("--idf1-floor", idf1_floor,
                     "exit nonzero when idf1 falls below this value");

    auto* render = app.add_subcommand("render", "top-down SVG of a tracks file");
    render->fallthrough();
    std::string tracks_path;
    double map_w = 0.0, map_h = 0.0;
    render->add_option("--tracks", tracks_path, "tracks file or tracklets CSV")->required();
    render->add_option("--map-w", map_w, "map width in map units")->required();
    render->add_option("--map-h", map_h, "map height in map units")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    if (generate->parsed()) {
        if (scene.empty() || out.empty()) {
            std::fprintf(stderr, "error: generate needs --scene <scenario file> and --out\n");
            return 1;
        }
        mcpt_status s =
            mcpt_generate_scene(scene.c_str(), seed.empty() ? nullptr : seed.c_str(),
                                out.c_str());
        if (s != MCPT_OK) return report_failure(s);
        info("wrote scene to " + out);
        return 0;
    }

    if (calibrate->parsed() || track->parsed() || assign->parsed() || stcra->parsed() ||
        pipeline->parsed()) {
        if (scene.empty() || out.empty()) {
            std::fprintf(stderr, "error: this command needs --scene and --out\n");
            return 1;
        }
        std::string which = pipeline->parsed()  ? stages
                            : calibrate->parsed() ? "calibrate"
                            : track->parsed()     ? "sct"
                            : assign->parsed()    ? "anchors"
                                                  : "stcra";
        return run_stages(config_path, seed, scene, out, which);
    }

    if (eval->parsed()) {
        mcpt_eval_report r;
        mcpt_status s = mcpt_evaluate(pred_path.c_str(), gt_path.c_str(), rule.c_str(),
                                      table_path.empty() ? nullptr : table_path.c_str(),
                                      csv_path.empty() ? nullptr : csv_path.c_str(), &r);
        if (s != MCPT_OK) return report_failure(s);
        std::printf("idf1 %.9g\nidp %.9g\nidr %.9g\nprecision %.9g\nrecall %.9g\n", r.idf1,
                    r.idp, r.idr, r.precision, r.recall);
        std::printf("idtp %lld idfp %lld idfn %lld tp %lld fp %lld fn %lld\n", r.idtp, r.idfp,
                    r.idfn, r.tp, r.fp, r.fn);
        if (r.idf1 < idf1_floor) {
            std::fprintf(stderr, "error: idf1 %.9g below floor %.9g\n", r.idf1, idf1_floor);
            return 1;
        }
        return 0;
    }

    if (render->parsed()) {
        if (out.empty()) {
            std::fprintf(stderr, "error: render needs --out <svg path>\n");
            return 1;
        }
        mcpt_status s =
            mcpt_render_topdown(tracks_path.c_str(), map_w, map_h, out.c_str());
        if (s != MCPT_OK) return report_failure(s);
        info("wrote " + out);
        return 0;
    }

    std::fprintf(stderr, "error: no subcommand\n");
    return 1;
}
