#include "mcpt.h"

#include <charconv>
#include <cstring>
#include <fstream>
#include <string>

#include "mcpt/error.hpp"
#include "mcpt/io.hpp"
#include "mcpt/metrics.hpp"
#include "mcpt/pipeline.hpp"
#include "mcpt/synthgen.hpp"
#include "mcpt/types.hpp"

struct mcpt_config {
    mcpt::RunConfig cfg;
};

namespace {

thread_local std::string g_last_error;

mcpt_status status_of(mcpt::errc code) {
    switch (code) {
    case mcpt::errc::io: return MCPT_ERR_IO;
    case mcpt::errc::parse: return MCPT_ERR_PARSE;
    case mcpt::errc::config: return MCPT_ERR_CONFIG;
    case mcpt::errc::input: return MCPT_ERR_INPUT;
    case mcpt::errc::state: return MCPT_ERR_STATE;
    case mcpt::errc::degenerate: return MCPT_ERR_DEGENERATE;
    case mcpt::errc::internal: return MCPT_ERR_INTERNAL;
    }
    return MCPT_ERR_INTERNAL;
}

// runs fn, translating exceptions into status codes + the thread-local message
template <typename Fn>
mcpt_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return MCPT_OK;
    } catch (const mcpt::error& e) {
        g_last_error = e.what();
        return status_of(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return MCPT_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return MCPT_ERR_INTERNAL;
    }
}

mcpt_status fail_input(const char* msg) {
    g_last_error = msg;
    return MCPT_ERR_INPUT;
}

void require(const void* p, const char* what) {
    if (!p) mcpt::throw_input(std::string("null ") + what);
}

} // namespace

extern "C" {

const char* mcpt_version(void) { return "1.0.0"; }

const char* mcpt_last_error(void) { return g_last_error.c_str(); }

mcpt_status mcpt_config_create(mcpt_config** out) {
    if (!out) return fail_input("null out");
    return guarded([&] { *out = new mcpt_config{}; });
}

mcpt_status mcpt_config_load(const char* path, mcpt_config** out) {
    if (!out) return fail_input("null out");
    *out = nullptr;
    return guarded([&] {
        require(path, "path");
        auto cfg = new mcpt_config{};
        try {
            cfg->cfg = mcpt::load_run_config(path);
        } catch (...) {
            delete cfg;
            throw;
        }
        *out = cfg;
    });
}

mcpt_status mcpt_config_set(mcpt_config* cfg, const char* key, const char* value) {
    return guarded([&] {
        require(cfg, "config");
        require(key, "key");
        require(value, "value");
        mcpt::apply_config_override(cfg->cfg, key, value);
    });
}

void mcpt_config_destroy(mcpt_config* cfg) { delete cfg; }

mcpt_status mcpt_generate_scene(const char* scenario_path, const char* seed_override,
                                const char* out_dir) {
    return guarded([&] {
        require(scenario_path, "scenario path");
        require(out_dir, "output directory");
        auto scenario = mcpt::scenario_from_file(scenario_path);
        if (seed_override) {
            uint64_t seed = 0;
            const char* end = seed_override + std::strlen(seed_override);
            auto [ptr, ec] = std::from_chars(seed_override, end, seed);
            if (ec != std::errc() || ptr != end)
                mcpt::throw_config(std::string("invalid seed '") + seed_override + "'");
            scenario.rng_seed = seed;
        }
        auto scene = mcpt::generate(scenario);
        mcpt::write_scene(scene, out_dir);
    });
}

mcpt_status mcpt_calibrate(const mcpt_config* cfg, const char* correspondences_path,
                           const char* out_path) {
    return guarded([&] {
        require(cfg, "config");
        require(correspondences_path, "correspondences path");
        require(out_path, "output path");
        auto pairs = mcpt::load_correspondences(correspondences_path);
        mcpt::EstimatorParams params;
        params.ransac_reproj_thresh = cfg->cfg.calib_reproj_thresh;
        params.max_iters = cfg->cfg.calib_max_iters;
        params.rng_seed = cfg->cfg.rng_seed;
        auto method = mcpt::estimator_from_name(cfg->cfg.calib_method);
        std::map<int, mcpt::Homography> hs;
        for (const auto& [camera, corr] : pairs)
            hs[camera] = mcpt::estimate_homography(corr, method, params, camera).h;
        mcpt::write_homographies(hs, out_path);
    });
}

mcpt_status mcpt_run_pipeline(const mcpt_config* cfg, const char* scene_dir,
                              const char* out_dir, const char* stages) {
    return guarded([&] {
        require(cfg, "config");
        require(scene_dir, "scene directory");
        require(out_dir, "output directory");
        require(stages, "stages");
        auto parsed = mcpt::parse_stages(stages);
        mcpt::run_pipeline(scene_dir, out_dir, cfg->cfg, parsed);
    });
}

mcpt_status mcpt_evaluate(const char* pred_tracks_path, const char* gt_tracks_path,
                          const char* match_rule, const char* table_path,
                          const char* csv_path, mcpt_eval_report* report) {
    return guarded([&] {
        require(pred_tracks_path, "predicted tracks path");
        require(gt_tracks_path, "ground-truth tracks path");
        require(match_rule, "match rule");
        auto rule = mcpt::match_rule_from_name(match_rule);
        auto pred = mcpt::load_tracks(pred_tracks_path);
        auto gt = mcpt::load_tracks(gt_tracks_path);
        auto r = mcpt::evaluate(pred, gt, rule);
        auto dump = [](const std::string& path, const std::string& text) {
            std::ofstream out(path, std::ios::binary);
            if (!out) mcpt::throw_io("cannot open '" + path + "' for writing");
            out << text;
            out.flush();
            if (!out) mcpt::throw_io("failed writing '" + path + "'");
        };
        if (table_path) dump(table_path, mcpt::report_table(r));
        if (csv_path) dump(csv_path, mcpt::report_csv(r));
        if (report) {
            report->idf1 = r.idf1;
            report->idp = r.idp;
            report->idr = r.idr;
            report->precision = r.precision;
            report->recall = r.recall;
            report->idtp = r.idtp;
            report->idfp = r.idfp;
            report->idfn = r.idfn;
            report->tp = r.tp;
            report->fp = r.fp;
            report->fn = r.fn;
        }
    });
}

mcpt_status mcpt_render_topdown(const char* tracks_path, double map_w, double map_h,
                                const char* out_svg_path) {
    return guarded([&] {
        require(tracks_path, "tracks path");
        require(out_svg_path, "output path");
        auto rows = mcpt::load_rows_for_render(tracks_path);
        mcpt::render_topdown(rows, map_w, map_h, out_svg_path);
    });
}

} // extern "C"
