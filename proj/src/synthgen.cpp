#include "mcpt/synthgen.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mcpt/error.hpp"
#include "mcpt/io.hpp"
#include "mcpt/rng.hpp"

namespace mcpt {
namespace {

constexpr double kFrameW = 1920.0;
constexpr double kFrameH = 1080.0;
constexpr double kFrameMargin = 60.0;
// A gap longer than this splits a preliminary tracklet, mirroring what a
// tracker with the default max_age would produce.
constexpr int kTrackletSplitGap = 30;

std::string trimmed(const std::string& s) {
    size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    for (;;) {
        size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(trimmed(s.substr(start)));
            return out;
        }
        out.push_back(trimmed(s.substr(start, pos - start)));
        start = pos + 1;
    }
}

long long parse_int_value(const std::string& key, const std::string& text) {
    const std::string t = trimmed(text);
    long long v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size())
        throw_config("scenario key '" + key + "': bad integer '" + t + "'");
    return v;
}

double parse_real_value(const std::string& key, const std::string& text) {
    const std::string t = trimmed(text);
    double v = 0.0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size())
        throw_config("scenario key '" + key + "': bad number '" + t + "'");
    return v;
}

// "lo-hi" with non-negative bounds
std::pair<int, int> parse_range(const std::string& key, const std::string& text) {
    auto parts = split_on(text, '-');
    if (parts.size() != 2)
        throw_config("scenario key '" + key + "': bad frame range '" + text + "'");
    return {static_cast<int>(parse_int_value(key, parts[0])),
            static_cast<int>(parse_int_value(key, parts[1]))};
}

std::pair<int, int> parse_id_pair(const std::string& key, const std::string& text) {
    auto parts = split_on(text, ',');
    if (parts.size() != 2)
        throw_config("scenario key '" + key + "': bad id pair '" + text + "'");
    return {static_cast<int>(parse_int_value(key, parts[0])),
            static_cast<int>(parse_int_value(key, parts[1]))};
}

std::vector<double> gaussian_vec(Rng& rng, int dim) {
    std::vector<double> v(static_cast<size_t>(dim));
    for (auto& x : v) x = rng.next_gaussian();
    return v;
}

double norm_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

void normalize_in_place(std::vector<double>& v) {
    double n = norm_of(v);
    if (!(n > 1e-12)) throw_internal("embedding norm collapsed");
    for (double& x : v) x /= n;
}

std::vector<double> random_unit_vec(Rng& rng, int dim) {
    for (;;) {
        auto v = gaussian_vec(rng, dim);
        if (norm_of(v) > 1e-6) {
            normalize_in_place(v);
            return v;
        }
    }
}

Vec2 catmull_rom(Vec2 p0, Vec2 p1, Vec2 p2, Vec2 p3, double u) {
    double u2 = u * u, u3 = u2 * u;
    auto comp = [&](double a, double b, double c, double d) {
        return 0.5 * (2.0 * b + (c - a) * u + (2.0 * a - 5.0 * b + 4.0 * c - d) * u2 +
                      (3.0 * b - a - 3.0 * c + d) * u3);
    };
    return {comp(p0.x, p1.x, p2.x, p3.x), comp(p0.y, p1.y, p2.y, p3.y)};
}

std::vector<Vec2> spline_positions(const std::vector<Vec2>& wp, int frames, double map_w,
                                   double map_h) {
    std::vector<Vec2> out(static_cast<size_t>(frames));
    if (wp.size() == 1) {
        std::fill(out.begin(), out.end(), wp[0]);
        return out;
    }
    int m = static_cast<int>(wp.size());
    auto at = [&](int i) { return wp[static_cast<size_t>(std::clamp(i, 0, m - 1))]; };
    for (int f = 0; f < frames; ++f) {
        double t = frames == 1 ? 0.0
                               : static_cast<double>(m - 1) * f / static_cast<double>(frames - 1);
        int seg = std::min(static_cast<int>(t), m - 2);
        double u = t - seg;
        Vec2 p = catmull_rom(at(seg - 1), at(seg), at(seg + 1), at(seg + 2), u);
        p.x = std::clamp(p.x, 0.0, map_w);
        p.y = std::clamp(p.y, 0.0, map_h);
        out[static_cast<size_t>(f)] = p;
    }
    return out;
}

struct CameraModel {
    Homography map2img;
    double box_height = 140.0;
    // region of the map this camera frames; correspondences are sampled here
    double sub_x0 = 0.0, sub_y0 = 0.0, sub_w = 0.0, sub_h = 0.0;
    double den_center = 1.0; // homogeneous w at the region center, sign reference
};

double raw_denominator(const Homography& h, Vec2 p) {
    return h.h[6] * p.x + h.h[7] * p.y + h.h[8];
}

// Condition number measured with both planes normalized to [-1,1]^2 so pixel
// units do not dominate; this is what decides whether calibration from the
// camera's view is well-posed.
double normalized_condition(const Eigen::Matrix3d& h, const CameraModel& cam) {
    Eigen::Matrix3d n_img = Eigen::Matrix3d::Identity();
    n_img(0, 0) = 2.0 / kFrameW;
    n_img(1, 1) = 2.0 / kFrameH;
    n_img(0, 2) = -1.0;
    n_img(1, 2) = -1.0;
    Eigen::Matrix3d n_map = Eigen::Matrix3d::Identity();
    n_map(0, 0) = 2.0 / cam.sub_w;
    n_map(1, 1) = 2.0 / cam.sub_h;
    n_map(0, 2) = -(2.0 * cam.sub_x0 / cam.sub_w + 1.0);
    n_map(1, 2) = -(2.0 * cam.sub_y0 / cam.sub_h + 1.0);
    Eigen::Matrix3d m = n_img * h * n_map.inverse();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(m.transpose() * m);
    double lo = eig.eigenvalues()(0), hi = eig.eigenvalues()(2);
    if (!(lo > 1e-28)) return std::numeric_limits<double>::infinity();
    return std::sqrt(hi / lo);
}

CameraModel fit_camera(Rng& rng, const Scenario& s, int camera_id) {
    for (int attempt = 0; attempt < 128; ++attempt) {
        CameraModel cam;
        cam.sub_w = s.camera_coverage * s.map_w;
        cam.sub_h = s.camera_coverage * s.map_h;
        cam.sub_x0 = rng.next_range(0.0, s.map_w - cam.sub_w + 1e-12);
        cam.sub_y0 = rng.next_range(0.0, s.map_h - cam.sub_h + 1e-12);
        double cx = cam.sub_x0 + cam.sub_w / 2.0, cy = cam.sub_y0 + cam.sub_h / 2.0;

        double theta = rng.next_range(0.0, 6.283185307179586);
        double half_diag = 0.5 * std::hypot(cam.sub_w, cam.sub_h);
        double qmag = rng.next_range(0.0, 0.25 / half_diag);
        double qdir = rng.next_range(0.0, 6.283185307179586);
        double q0 = qmag * std::cos(qdir), q1 = qmag * std::sin(qdir);

        Eigen::Matrix3d t1 = Eigen::Matrix3d::Identity();
        t1(0, 2) = -cx;
        t1(1, 2) = -cy;
        Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
        rot(0, 0) = std::cos(theta);
        rot(0, 1) = -std::sin(theta);
        rot(1, 0) = std::sin(theta);
        rot(1, 1) = std::cos(theta);
        Eigen::Matrix3d persp = Eigen::Matrix3d::Identity();
        persp(2, 0) = q0;
        persp(2, 1) = q1;
        Eigen::Matrix3d b = persp * rot * t1;

        // bounding box of the framed region's corners in the pre-scale plane
        double bx0 = 1e300, bx1 = -1e300, by0 = 1e300, by1 = -1e300;
        bool bad = false;
        for (int corner = 0; corner < 4; ++corner) {
            double px = cam.sub_x0 + (corner & 1 ? cam.sub_w : 0.0);
            double py = cam.sub_y0 + (corner & 2 ? cam.sub_h : 0.0);
            Eigen::Vector3d q = b * Eigen::Vector3d(px, py, 1.0);
            if (!(std::abs(q(2)) > 1e-9)) {
                bad = true;
                break;
            }
            bx0 = std::min(bx0, q(0) / q(2));
            bx1 = std::max(bx1, q(0) / q(2));
            by0 = std::min(by0, q(1) / q(2));
            by1 = std::max(by1, q(1) / q(2));
        }
        if (bad || !(bx1 - bx0 > 1e-9) || !(by1 - by0 > 1e-9)) continue;

        double sx = (kFrameW - 2.0 * kFrameMargin) / (bx1 - bx0);
        double sy = (kFrameH - 2.0 * kFrameMargin) / (by1 - by0);
        Eigen::Matrix3d a = Eigen::Matrix3d::Identity();
        a(0, 0) = sx;
        a(1, 1) = sy;
        a(0, 2) = kFrameMargin - sx * bx0;
        a(1, 2) = kFrameMargin - sy * by0;
        Eigen::Matrix3d h = a * b;

        if (normalized_condition(h, cam) >= 1e4) continue;
        std::array<double, 9> coeffs;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) coeffs[static_cast<size_t>(r * 3 + c)] = h(r, c);
        try {
            cam.map2img = make_homography(coeffs, camera_id);
        } catch (const error&) {
            continue;
        }
        cam.den_center = raw_denominator(cam.map2img, {cx, cy});
        if (std::abs(cam.den_center) < 1e-9) continue;
        return cam;
    }
    throw_internal("camera synthesis failed to find a well-conditioned view");
}

bool point_visible(const CameraModel& cam, Vec2 map_pt, Vec2* image_pt) {
    double den = raw_denominator(cam.map2img, map_pt);
    // same side of the horizon as the framed region, comfortably away from it
    if (den * (cam.den_center < 0 ? -1.0 : 1.0) < 0.1 * std::abs(cam.den_center)) return false;
    Vec2 uv = project(cam.map2img, map_pt);
    if (uv.x < 0.0 || uv.x > kFrameW || uv.y < 0.0 || uv.y > kFrameH) return false;
    *image_pt = uv;
    return true;
}

Box box_at(Vec2 bottom_center, double height) {
    Box b;
    b.h = height;
    b.w = 0.4 * height;
    b.x = bottom_center.x - b.w / 2.0;
    b.y = bottom_center.y - b.h;
    return b;
}

std::vector<Keypoint> keypoints_for(const Box& b) {
    std::vector<Keypoint> kps(kNumKeypoints);
    for (int i = 0; i < kNumKeypoints; ++i)
        kps[static_cast<size_t>(i)] = {b.x + b.w / 2.0, b.y + b.h / 2.0, 0.2};
    kps[kLeftAnkle] = {b.x, b.y + b.h, 0.9};
    kps[kRightAnkle] = {b.x + b.w, b.y + b.h, 0.9};
    return kps;
}

struct DriftComponent {
    std::vector<double> dir;
    double phase = 0.0;
    double omega = 0.0;
};

} // namespace

void validate_scenario(const Scenario& s) {
    if (!(s.map_w > 0.0) || !(s.map_h > 0.0) || !std::isfinite(s.map_w) ||
        !std::isfinite(s.map_h))
        throw_input("scenario: map size must be positive");
    if (s.frames < 1) throw_input("scenario: frames must be >= 1");
    if (s.num_cameras < 1) throw_input("scenario: num_cameras must be >= 1");
    if (s.num_identities < 1) throw_input("scenario: num_identities must be >= 1");
    if (s.embedding_dim < 2) throw_input("scenario: embedding_dim must be >= 2");
    auto rate_ok = [](double r) { return r >= 0.0 && r <= 1.0; };
    if (!rate_ok(s.miss_rate) || !rate_ok(s.false_positive_rate) ||
        !rate_ok(s.low_score_fraction))
        throw_input("scenario: rates must lie in [0,1]");
    if (!(s.noise_sigma >= 0.0) || !(s.box_jitter_px >= 0.0) || !(s.drift_amp >= 0.0))
        throw_input("scenario: noise magnitudes must be >= 0");
    if (!(s.drift_period > 0.0)) throw_input("scenario: drift_period must be positive");
    if (!(s.camera_coverage > 0.0) || s.camera_coverage > 1.0)
        throw_input("scenario: camera_coverage must lie in (0,1]");
    if (!(s.similar_pair_dist > 0.0) || !(s.similar_pair_dist < 2.0))
        throw_input("scenario: similar_pair_dist must lie in (0,2)");

    std::vector<bool> paired(static_cast<size_t>(s.num_identities) + 1, false);
    for (auto [a, b] : s.similar_pairs) {
        if (a < 1 || a > s.num_identities || b < 1 || b > s.num_identities || a == b)
            throw_input("scenario: similar pair ids out of range");
        if (paired[static_cast<size_t>(a)] || paired[static_cast<size_t>(b)])
            throw_input("scenario: an identity may appear in at most one similar pair");
        paired[static_cast<size_t>(a)] = paired[static_cast<size_t>(b)] = true;
    }

    if (!s.waypoints.empty() && s.waypoints.size() != static_cast<size_t>(s.num_identities))
        throw_input("scenario: waypoints must cover all identities or none");
    for (const auto& wp : s.waypoints)
        for (const auto& p : wp)
            if (p.x < 0.0 || p.x > s.map_w || p.y < 0.0 || p.y > s.map_h)
                throw_input("scenario: waypoint outside map bounds");

    if (!s.camera_box_heights.empty() &&
        s.camera_box_heights.size() != static_cast<size_t>(s.num_cameras))
        throw_input("scenario: camera_box_heights must cover all cameras or none");
    for (double bh : s.camera_box_heights)
        if (bh != 0.0 && !(bh >= 20.0 && bh <= 2000.0))
            throw_input("scenario: camera box height out of range");

    if (!s.camera_map_to_image.empty() &&
        s.camera_map_to_image.size() != static_cast<size_t>(s.num_cameras))
        throw_input("scenario: explicit camera homographies must cover all cameras or none");

    auto check_range = [&](int lo, int hi, const char* what) {
        if (lo > hi) return; // vacuous event
        if (lo < 0 || hi >= s.frames) throw_input(std::string("scenario: ") + what +
                                                  " frame range outside [0, frames)");
    };
    for (const auto& ev : s.occlusions) {
        if (ev.camera_id < 0 || ev.camera_id >= s.num_cameras)
            throw_input("scenario: occlusion camera out of range");
        if (ev.id_a < 1 || ev.id_a > s.num_identities || ev.id_b < 1 ||
            ev.id_b > s.num_identities || ev.id_a == ev.id_b)
            throw_input("scenario: occlusion ids out of range");
        check_range(ev.frame_lo, ev.frame_hi, "occlusion");
    }
    for (const auto& ev : s.exits) {
        if (ev.identity < 1 || ev.identity > s.num_identities)
            throw_input("scenario: exit identity out of range");
        check_range(ev.frame_lo, ev.frame_hi, "exit");
    }
    for (const auto& ev : s.swaps) {
        if (ev.camera_id < 0 || ev.camera_id >= s.num_cameras)
            throw_input("scenario: swap camera out of range");
        if (ev.id_a < 1 || ev.id_a > s.num_identities || ev.id_b < 1 ||
            ev.id_b > s.num_identities || ev.id_a == ev.id_b)
            throw_input("scenario: swap ids out of range");
        check_range(ev.frame_lo, ev.frame_hi, "swap");
    }
}

Scenario scenario_from_kv(const std::vector<std::pair<std::string, std::string>>& pairs) {
    Scenario s;
    std::map<int, std::vector<Vec2>> waypoints_by_id;
    std::map<int, double> box_height_by_cam;
    std::map<int, Homography> hom_by_cam;

    for (const auto& [key, value] : pairs) {
        if (key == "map_width") s.map_w = parse_real_value(key, value);
        else if (key == "map_height") s.map_h = parse_real_value(key, value);
        else if (key == "frames") s.frames = static_cast<int>(parse_int_value(key, value));
        else if (key == "num_cameras")
            s.num_cameras = static_cast<int>(parse_int_value(key, value));
        else if (key == "num_identities")
            s.num_identities = static_cast<int>(parse_int_value(key, value));
        else if (key == "embedding_dim")
            s.embedding_dim = static_cast<int>(parse_int_value(key, value));
        else if (key == "rng_seed")
            s.rng_seed = static_cast<uint64_t>(parse_int_value(key, value));
        else if (key == "noise_sigma") s.noise_sigma = parse_real_value(key, value);
        else if (key == "miss_rate") s.miss_rate = parse_real_value(key, value);
        else if (key == "false_positive_rate")
            s.false_positive_rate = parse_real_value(key, value);
        else if (key == "box_jitter_px") s.box_jitter_px = parse_real_value(key, value);
        else if (key == "drift_amp") s.drift_amp = parse_real_value(key, value);
        else if (key == "drift_period") s.drift_period = parse_real_value(key, value);
        else if (key == "camera_coverage") s.camera_coverage = parse_real_value(key, value);
        else if (key == "low_score_fraction")
            s.low_score_fraction = parse_real_value(key, value);
        else if (key == "similar_pair_dist")
            s.similar_pair_dist = parse_real_value(key, value);
        else if (key == "similar_pairs") {
            for (const auto& tok : split_on(value, ';')) {
                if (tok.empty()) continue;
                auto parts = split_on(tok, ':');
                if (parts.size() != 2)
                    throw_config("scenario key 'similar_pairs': expected 'a:b' got '" + tok +
                                 "'");
                s.similar_pairs.emplace_back(
                    static_cast<int>(parse_int_value(key, parts[0])),
                    static_cast<int>(parse_int_value(key, parts[1])));
            }
        } else if (key == "occlusion") {
            for (const auto& tok : split_on(value, ';')) {
                if (tok.empty()) continue;
                auto parts = split_on(tok, ':');
                if (parts.size() != 3)
                    throw_config("scenario key 'occlusion': expected 'cam:lo-hi:a,b' got '" +
                                 tok + "'");
                OcclusionEvent ev;
                ev.camera_id = static_cast<int>(parse_int_value(key, parts[0]));
                std::tie(ev.frame_lo, ev.frame_hi) = parse_range(key, parts[1]);
                std::tie(ev.id_a, ev.id_b) = parse_id_pair(key, parts[2]);
                s.occlusions.push_back(ev);
            }
        } else if (key == "exit") {
            for (const auto& tok : split_on(value, ';')) {
                if (tok.empty()) continue;
                auto parts = split_on(tok, ':');
                if (parts.size() != 2)
                    throw_config("scenario key 'exit': expected 'id:lo-hi' got '" + tok + "'");
                ExitEvent ev;
                ev.identity = static_cast<int>(parse_int_value(key, parts[0]));
                std::tie(ev.frame_lo, ev.frame_hi) = parse_range(key, parts[1]);
                s.exits.push_back(ev);
            }
        } else if (key == "swap") {
            for (const auto& tok : split_on(value, ';')) {
                if (tok.empty()) continue;
                auto parts = split_on(tok, ':');
                if (parts.size() != 3)
                    throw_config("scenario key 'swap': expected 'cam:lo-hi:a,b' got '" + tok +
                                 "'");
                SwapEvent ev;
                ev.camera_id = static_cast<int>(parse_int_value(key, parts[0]));
                std::tie(ev.frame_lo, ev.frame_hi) = parse_range(key, parts[1]);
                std::tie(ev.id_a, ev.id_b) = parse_id_pair(key, parts[2]);
                s.swaps.push_back(ev);
            }
        } else if (key.starts_with("identity.") && key.ends_with(".waypoints")) {
            std::string mid = key.substr(9, key.size() - 9 - 10);
            int id = static_cast<int>(parse_int_value(key, mid));
            std::vector<Vec2> wp;
            for (const auto& tok : split_on(value, ';')) {
                if (tok.empty()) continue;
                auto parts = split_on(tok, ',');
                if (parts.size() != 2)
                    throw_config("scenario key '" + key + "': expected 'x,y' got '" + tok +
                                 "'");
                wp.push_back(
                    {parse_real_value(key, parts[0]), parse_real_value(key, parts[1])});
            }
            if (wp.empty()) throw_config("scenario key '" + key + "': no waypoints");
            if (!waypoints_by_id.emplace(id, std::move(wp)).second)
                throw_config("scenario key '" + key + "': duplicate");
        } else if (key.starts_with("camera.") && key.ends_with(".box_height")) {
            std::string mid = key.substr(7, key.size() - 7 - 11);
            int cam = static_cast<int>(parse_int_value(key, mid));
            if (!box_height_by_cam.emplace(cam, parse_real_value(key, value)).second)
                throw_config("scenario key '" + key + "': duplicate");
        } else if (key.starts_with("camera.") && key.ends_with(".homography")) {
            std::string mid = key.substr(7, key.size() - 7 - 11);
            int cam = static_cast<int>(parse_int_value(key, mid));
            auto parts = split_on(value, ',');
            if (parts.size() != 9)
                throw_config("scenario key '" + key + "': expected 9 comma-separated values");
            std::array<double, 9> coeffs;
            for (size_t i = 0; i < 9; ++i) coeffs[i] = parse_real_value(key, parts[i]);
            Homography h;
            try {
                h = make_homography(coeffs, cam);
            } catch (const error& e) {
                throw_config("scenario key '" + key + "': " + e.what());
            }
            if (!hom_by_cam.emplace(cam, h).second)
                throw_config("scenario key '" + key + "': duplicate");
        } else {
            throw_config("unknown scenario key '" + key + "'");
        }
    }

    if (!waypoints_by_id.empty()) {
        s.waypoints.assign(static_cast<size_t>(std::max(s.num_identities, 0)), {});
        for (auto& [id, wp] : waypoints_by_id) {
            if (id < 1 || id > s.num_identities)
                throw_config("scenario: identity." + std::to_string(id) +
                             ".waypoints out of range");
            s.waypoints[static_cast<size_t>(id - 1)] = std::move(wp);
        }
    }
    if (!box_height_by_cam.empty()) {
        s.camera_box_heights.assign(static_cast<size_t>(std::max(s.num_cameras, 0)), 0.0);
        for (auto& [cam, bh] : box_height_by_cam) {
            if (cam < 0 || cam >= s.num_cameras)
                throw_config("scenario: camera." + std::to_string(cam) +
                             ".box_height out of range");
            s.camera_box_heights[static_cast<size_t>(cam)] = bh;
        }
    }
    if (!hom_by_cam.empty()) {
        if (static_cast<int>(hom_by_cam.size()) != s.num_cameras)
            throw_config("scenario: explicit camera homographies must cover every camera");
        s.camera_map_to_image.clear();
        for (auto& [cam, h] : hom_by_cam) {
            if (cam < 0 || cam >= s.num_cameras)
                throw_config("scenario: camera." + std::to_string(cam) +
                             ".homography out of range");
            s.camera_map_to_image.push_back(h);
        }
    }

    validate_scenario(s);
    return s;
}

Scenario scenario_from_file(const std::string& path) {
    return scenario_from_kv(parse_kv_file(path));
}

SceneData generate(const Scenario& s) {
    validate_scenario(s);
    Rng base(s.rng_seed);
    const int n_ids = s.num_identities;
    const int n_cams = s.num_cameras;
    const size_t dim = static_cast<size_t>(s.embedding_dim);

    // per-identity trajectories
    std::vector<std::vector<Vec2>> positions(static_cast<size_t>(n_ids));
    for (int i = 0; i < n_ids; ++i) {
        std::vector<Vec2> wp;
        if (!s.waypoints.empty() && !s.waypoints[static_cast<size_t>(i)].empty()) {
            wp = s.waypoints[static_cast<size_t>(i)];
        } else {
            for (int k = 0; k < 4; ++k)
                wp.push_back({base.next_range(0.1 * s.map_w, 0.9 * s.map_w),
                              base.next_range(0.1 * s.map_h, 0.9 * s.map_h)});
        }
        positions[static_cast<size_t>(i)] = spline_positions(wp, s.frames, s.map_w, s.map_h);
    }

    // per-identity true embeddings, then pin similar pairs to an exact cosine
    std::vector<std::vector<double>> true_emb(static_cast<size_t>(n_ids));
    for (int i = 0; i < n_ids; ++i) true_emb[static_cast<size_t>(i)] = random_unit_vec(base, s.embedding_dim);
    for (auto [a, b] : s.similar_pairs) {
        const auto& ea = true_emb[static_cast<size_t>(a - 1)];
        std::vector<double> u;
        for (;;) {
            u = gaussian_vec(base, s.embedding_dim);
            double d = 0.0;
            for (size_t k = 0; k < dim; ++k) d += u[k] * ea[k];
            for (size_t k = 0; k < dim; ++k) u[k] -= d * ea[k];
            if (norm_of(u) > 1e-6) break;
        }
        normalize_in_place(u);
        double ct = 1.0 - s.similar_pair_dist;
        double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
        auto& eb = true_emb[static_cast<size_t>(b - 1)];
        for (size_t k = 0; k < dim; ++k) eb[k] = ct * ea[k] + st * u[k];
    }

    // cameras
    std::vector<CameraModel> cams(static_cast<size_t>(n_cams));
    for (int c = 0; c < n_cams; ++c) {
        auto& cam = cams[static_cast<size_t>(c)];
        double bh = s.camera_box_heights.empty() ? 0.0
                                                 : s.camera_box_heights[static_cast<size_t>(c)];
        if (bh == 0.0) bh = base.next_range(110.0, 170.0);
        if (!s.camera_map_to_image.empty()) {
            cam.map2img = s.camera_map_to_image[static_cast<size_t>(c)];
            cam.map2img.camera_id = c;
            cam.sub_x0 = 0.0;
            cam.sub_y0 = 0.0;
            cam.sub_w = s.map_w;
            cam.sub_h = s.map_h;
            cam.den_center =
                raw_denominator(cam.map2img, {s.map_w / 2.0, s.map_h / 2.0});
            if (std::abs(cam.den_center) < 1e-9)
                throw_input("scenario: camera homography puts the map center at infinity");
        } else {
            cam = fit_camera(base, s, c);
        }
        cam.box_height = bh;
    }

    // slow appearance drift, one set of components per (identity, camera)
    std::vector<std::vector<std::array<DriftComponent, 3>>> drift;
    if (s.drift_amp > 0.0) {
        drift.resize(static_cast<size_t>(n_ids));
        for (int i = 0; i < n_ids; ++i) {
            drift[static_cast<size_t>(i)].resize(static_cast<size_t>(n_cams));
            for (int c = 0; c < n_cams; ++c)
                for (int m = 0; m < 3; ++m) {
                    auto& comp = drift[static_cast<size_t>(i)][static_cast<size_t>(c)]
                                      [static_cast<size_t>(m)];
                    comp.dir = random_unit_vec(base, s.embedding_dim);
                    comp.phase = base.next_range(0.0, 6.283185307179586);
                    comp.omega = 6.283185307179586 / (s.drift_period * (m + 1.0));
                }
        }
    }

    auto occluded = [&](int cam_id, int identity, int frame) {
        for (const auto& ev : s.occlusions)
            if (ev.camera_id == cam_id && ev.id_b == identity && frame >= ev.frame_lo &&
                frame <= ev.frame_hi)
                return true;
        return false;
    };
    auto exited = [&](int identity, int frame) {
        for (const auto& ev : s.exits)
            if (ev.identity == identity && frame >= ev.frame_lo && frame <= ev.frame_hi)
                return true;
        return false;
    };

    SceneData scene;
    std::vector<int> next_local(static_cast<size_t>(n_cams), 1);
    // open chunk per (camera, identity): index into prelim_tracklets
    std::map<std::pair<int, int>, size_t> open_chunk;

    for (int c = 0; c < n_cams; ++c) {
        const auto& cam = cams[static_cast<size_t>(c)];
        Rng rng = base.fork(static_cast<uint64_t>(c));
        for (int f = 0; f < s.frames; ++f) {
            int next_det_id = 0;
            for (int i = 1; i <= n_ids; ++i) {
                if (exited(i, f)) continue;
                Vec2 pos = positions[static_cast<size_t>(i - 1)][static_cast<size_t>(f)];
                Vec2 uv;
                if (!point_visible(cam, pos, &uv)) continue;

                TrackRow gt;
                gt.camera_id = c;
                gt.global_id = i;
                gt.frame = f;
                gt.box = box_at(uv, cam.box_height);
                gt.world = pos;
                scene.gt_tracks.push_back(gt);

                if (occluded(c, i, f)) continue;
                if (s.miss_rate > 0.0 && rng.next_double() < s.miss_rate) continue;

                Vec2 bc = uv;
                double h = cam.box_height;
                if (s.box_jitter_px > 0.0) {
                    bc.x += s.box_jitter_px * rng.next_gaussian();
                    bc.y += s.box_jitter_px * rng.next_gaussian();
                    h = std::max(0.5 * h, h + s.box_jitter_px * rng.next_gaussian());
                }

                Detection det;
                det.camera_id = c;
                det.frame = f;
                det.det_id = next_det_id++;
                det.box = box_at(bc, h);

                det.embedding = true_emb[static_cast<size_t>(i - 1)];
                if (s.drift_amp > 0.0) {
                    const auto& comps =
                        drift[static_cast<size_t>(i - 1)][static_cast<size_t>(c)];
                    for (const auto& comp : comps) {
                        double amp = s.drift_amp / 3.0 *
                                     std::sin(comp.omega * f + comp.phase);
                        for (size_t k = 0; k < dim; ++k)
                            det.embedding[k] += amp * comp.dir[k];
                    }
                }
                if (s.noise_sigma > 0.0)
                    for (size_t k = 0; k < dim; ++k)
                        det.embedding[k] += s.noise_sigma * rng.next_gaussian();
                normalize_in_place(det.embedding);

                double su = rng.next_double();
                bool low = s.low_score_fraction > 0.0 &&
                           rng.next_double() < s.low_score_fraction;
                det.score = low ? 0.2 + 0.3 * su : 0.75 + 0.2 * su;
                det.keypoints = keypoints_for(det.box);
                scene.detections.push_back(det);

                auto key = std::make_pair(c, i);
                auto it = open_chunk.find(key);
                bool fresh = it == open_chunk.end();
                if (!fresh) {
                    const auto& t = scene.prelim_tracklets[it->second];
                    fresh = f - t.entries.back().frame > kTrackletSplitGap;
                }
                if (fresh) {
                    Tracklet t;
                    t.camera_id = c;
                    t.local_id = next_local[static_cast<size_t>(c)]++;
                    scene.prelim_tracklets.push_back(std::move(t));
                    open_chunk[key] = scene.prelim_tracklets.size() - 1;
                    scene.tracklet_identity[{c, scene.prelim_tracklets.back().local_id}] = i;
                }
                scene.prelim_tracklets[open_chunk[key]].entries.push_back(
                    scene.detections.back());
            }

            if (s.false_positive_rate > 0.0 && rng.next_double() < s.false_positive_rate) {
                double cx = rng.next_range(0.1 * kFrameW, 0.9 * kFrameW);
                double bottom = rng.next_range(0.35 * kFrameH, kFrameH);
                double h = cam.box_height * rng.next_range(0.7, 1.3);
                Detection det;
                det.camera_id = c;
                det.frame = f;
                det.det_id = next_det_id++;
                det.box = box_at({cx, bottom}, h);
                det.embedding = random_unit_vec(rng, s.embedding_dim);
                det.score = rng.next_range(0.2, 0.55);
                det.keypoints = keypoints_for(det.box);
                scene.detections.push_back(det);
            }
        }
    }

    // 8 exact calibration pairs per camera, scattered over the framed region
    static constexpr double kCorrFrac[8][2] = {{0.05, 0.05}, {0.95, 0.07}, {0.93, 0.95},
                                               {0.07, 0.93}, {0.50, 0.11}, {0.89, 0.53},
                                               {0.47, 0.91}, {0.13, 0.49}};
    for (int c = 0; c < n_cams; ++c) {
        const auto& cam = cams[static_cast<size_t>(c)];
        auto& list = scene.correspondences[c];
        for (const auto& frac : kCorrFrac) {
            Vec2 map_pt{cam.sub_x0 + frac[0] * cam.sub_w, cam.sub_y0 + frac[1] * cam.sub_h};
            list.push_back({project(cam.map2img, map_pt), map_pt});
        }
        Homography img2map = invert(cam.map2img);
        img2map.camera_id = c;
        scene.homographies[c] = img2map;
    }

    for (const auto& ev : s.swaps)
        inject_swap(scene, ev.camera_id, ev.frame_lo, ev.frame_hi, ev.id_a, ev.id_b);

    for (const auto& t : scene.prelim_tracklets) validate_tracklet(t);
    return scene;
}

namespace {

struct ChunkPos {
    size_t tracklet = 0;
    size_t entry = 0;
    bool found = false;
};

std::vector<size_t> chunks_of(const SceneData& scene, int camera_id, int identity) {
    std::vector<size_t> out;
    for (size_t i = 0; i < scene.prelim_tracklets.size(); ++i) {
        const auto& t = scene.prelim_tracklets[i];
        if (t.camera_id != camera_id) continue;
        auto it = scene.tracklet_identity.find({camera_id, t.local_id});
        if (it != scene.tracklet_identity.end() && it->second == identity) out.push_back(i);
    }
    return out;
}

ChunkPos find_entry(const SceneData& scene, const std::vector<size_t>& chunks, int frame) {
    for (size_t ci : chunks) {
        const auto& e = scene.prelim_tracklets[ci].entries;
        auto it = std::lower_bound(e.begin(), e.end(), frame,
                                   [](const Detection& d, int f) { return d.frame < f; });
        if (it != e.end() && it->frame == frame)
            return {ci, static_cast<size_t>(it - e.begin()), true};
    }
    return {};
}

// chunk covering the frame, else the nearest one
size_t dest_chunk(const SceneData& scene, const std::vector<size_t>& chunks, int frame) {
    size_t best = chunks.front();
    long long best_d = std::numeric_limits<long long>::max();
    for (size_t ci : chunks) {
        const auto& e = scene.prelim_tracklets[ci].entries;
        if (e.empty()) continue;
        int first = e.front().frame, last = e.back().frame;
        if (frame >= first && frame <= last) return ci;
        long long d = std::min(std::llabs(static_cast<long long>(frame) - first),
                               std::llabs(static_cast<long long>(frame) - last));
        if (d < best_d) {
            best_d = d;
            best = ci;
        }
    }
    return best;
}

void move_entry(SceneData& scene, ChunkPos from, size_t to_tracklet) {
    auto& src = scene.prelim_tracklets[from.tracklet].entries;
    Detection det = src[from.entry];
    src.erase(src.begin() + static_cast<long>(from.entry));
    auto& dst = scene.prelim_tracklets[to_tracklet].entries;
    auto it = std::lower_bound(dst.begin(), dst.end(), det.frame,
                               [](const Detection& d, int f) { return d.frame < f; });
    dst.insert(it, std::move(det));
}

} // namespace

void inject_swap(SceneData& scene, int camera_id, int frame_lo, int frame_hi, int id_a,
                 int id_b) {
    if (frame_lo > frame_hi) return;
    if (id_a == id_b) throw_input("inject_swap: ids must differ");

    auto chunks_a = chunks_of(scene, camera_id, id_a);
    auto chunks_b = chunks_of(scene, camera_id, id_b);
    if (chunks_a.empty())
        throw_input("inject_swap: identity " + std::to_string(id_a) +
                    " has no tracklets on camera " + std::to_string(camera_id));
    if (chunks_b.empty())
        throw_input("inject_swap: identity " + std::to_string(id_b) +
                    " has no tracklets on camera " + std::to_string(camera_id));
    for (size_t ci : chunks_a)
        if (scene.prelim_tracklets[ci].has_global_ids() ||
            scene.prelim_tracklets[ci].has_world_points())
            throw_state("inject_swap applies to preliminary tracklets only");
    for (size_t ci : chunks_b)
        if (scene.prelim_tracklets[ci].has_global_ids() ||
            scene.prelim_tracklets[ci].has_world_points())
            throw_state("inject_swap applies to preliminary tracklets only");

    auto present_in_range = [&](const std::vector<size_t>& chunks) {
        for (size_t ci : chunks)
            for (const auto& e : scene.prelim_tracklets[ci].entries)
                if (e.frame >= frame_lo && e.frame <= frame_hi) return true;
        return false;
    };
    if (!present_in_range(chunks_a))
        throw_input("inject_swap: identity " + std::to_string(id_a) +
                    " absent in the frame range");
    if (!present_in_range(chunks_b))
        throw_input("inject_swap: identity " + std::to_string(id_b) +
                    " absent in the frame range");

    for (int f = frame_lo; f <= frame_hi; ++f) {
        chunks_a = chunks_of(scene, camera_id, id_a);
        chunks_b = chunks_of(scene, camera_id, id_b);
        ChunkPos pa = find_entry(scene, chunks_a, f);
        ChunkPos pb = find_entry(scene, chunks_b, f);
        if (pa.found && pb.found) {
            std::swap(scene.prelim_tracklets[pa.tracklet].entries[pa.entry],
                      scene.prelim_tracklets[pb.tracklet].entries[pb.entry]);
        } else if (pa.found) {
            move_entry(scene, pa, dest_chunk(scene, chunks_b, f));
        } else if (pb.found) {
            move_entry(scene, pb, dest_chunk(scene, chunks_a, f));
        }
    }

    // one-sided moves can drain a chunk completely
    for (size_t i = scene.prelim_tracklets.size(); i-- > 0;) {
        const auto& t = scene.prelim_tracklets[i];
        if (!t.entries.empty()) continue;
        scene.tracklet_identity.erase({t.camera_id, t.local_id});
        scene.prelim_tracklets.erase(scene.prelim_tracklets.begin() + static_cast<long>(i));
    }
}

void write_scene(const SceneData& scene, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw_io("cannot create directory '" + dir + "': " + ec.message());
    write_detections(scene.detections, dir + "/detections.csv", dir + "/embeddings.csv",
                     dir + "/keypoints.csv");
    write_track_rows(scene.gt_tracks, dir + "/gt_tracks.txt");
    write_correspondences(scene.correspondences, dir + "/correspondences.txt");
    write_homographies(scene.homographies, dir + "/gt_homographies.txt");
    write_tracklets_csv(scene.prelim_tracklets, dir + "/tracklets_gt.csv");
}

} // namespace mcpt
