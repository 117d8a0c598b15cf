#include "mcpt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "mcpt/assignment.hpp"
#include "mcpt/error.hpp"
#include "mcpt/io.hpp"

namespace mcpt {

namespace {

double ratio(long long num, long long den) {
    return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 1.0;
}

void derive_ratios(EvalReport& r) {
    long long idf1_den = 2 * r.idtp + r.idfp + r.idfn;
    r.idf1 = ratio(2 * r.idtp, idf1_den);
    r.idp = ratio(r.idtp, r.idtp + r.idfp);
    r.idr = ratio(r.idtp, r.idtp + r.idfn);
    r.precision = ratio(r.tp, r.tp + r.fp);
    r.recall = ratio(r.tp, r.tp + r.fn);
}

bool rule_match(const MatchRule& rule, const TrackRow& a, const TrackRow& b, double& cost) {
    if (rule.kind == MatchRule::Kind::IoU) {
        double iou = box_iou(a.box, b.box);
        cost = 1.0 - iou;
        return iou >= rule.iou_thresh;
    }
    double d = std::hypot(a.world.x - b.world.x, a.world.y - b.world.y);
    cost = d;
    return d <= rule.world_radius;
}

// Maximum number of rule-satisfying pairs between two tiny box lists.
int max_pairs(const MatchRule& rule, const std::vector<const TrackRow*>& as,
              const std::vector<const TrackRow*>& bs) {
    if (as.size() == 1 && bs.size() == 1) {
        double c;
        return rule_match(rule, *as[0], *bs[0], c) ? 1 : 0;
    }
    std::vector<int> match_b(bs.size(), -1);
    auto augment = [&](auto&& self, size_t a, std::vector<bool>& seen) -> bool {
        for (size_t b = 0; b < bs.size(); ++b) {
            double c;
            if (seen[b] || !rule_match(rule, *as[a], *bs[b], c)) continue;
            seen[b] = true;
            if (match_b[b] < 0 || self(self, static_cast<size_t>(match_b[b]), seen)) {
                match_b[b] = static_cast<int>(a);
                return true;
            }
        }
        return false;
    };
    int count = 0;
    for (size_t a = 0; a < as.size(); ++a) {
        std::vector<bool> seen(bs.size(), false);
        if (augment(augment, a, seen)) ++count;
    }
    return count;
}

} // namespace

MatchRule match_rule_from_name(const std::string& name) {
    MatchRule rule;
    if (name == "iou") {
        rule.kind = MatchRule::Kind::IoU;
    } else if (name == "world") {
        rule.kind = MatchRule::Kind::WorldDistance;
    } else {
        throw_config("unknown match rule '" + name + "' (expected iou or world)");
    }
    return rule;
}

double box_iou(const Box& a, const Box& b) {
    double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    double inter = ix * iy;
    double uni = a.w * a.h + b.w * b.h - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

EvalReport evaluate(std::span<const TrackRow> pred, std::span<const TrackRow> gt,
                    const MatchRule& rule) {
    using Cell = std::pair<int, int>; // camera, frame
    std::map<Cell, std::map<int, std::vector<const TrackRow*>>> gt_cells, pred_cells;
    std::map<int, int> gt_ids, pred_ids;
    for (const auto& r : gt) {
        gt_cells[{r.camera_id, r.frame}][r.global_id].push_back(&r);
        gt_ids.emplace(r.global_id, static_cast<int>(gt_ids.size()));
    }
    for (const auto& r : pred) {
        pred_cells[{r.camera_id, r.frame}][r.global_id].push_back(&r);
        pred_ids.emplace(r.global_id, static_cast<int>(pred_ids.size()));
    }

    // whole-sequence overlap counts between every (gt id, pred id) pair
    std::vector<std::vector<double>> overlap(gt_ids.size(),
                                             std::vector<double>(pred_ids.size(), 0.0));
    EvalReport rep;
    for (const auto& [cell, gmap] : gt_cells) {
        auto pit = pred_cells.find(cell);
        if (pit == pred_cells.end()) continue;
        for (const auto& [g, gboxes] : gmap)
            for (const auto& [p, pboxes] : pit->second)
                overlap[gt_ids[g]][pred_ids[p]] +=
                    static_cast<double>(max_pairs(rule, gboxes, pboxes));
    }

    // global identity matching maximizing total overlap
    long long idtp = 0;
    if (!gt_ids.empty() && !pred_ids.empty()) {
        std::vector<std::vector<double>> cost(overlap.size(),
                                              std::vector<double>(pred_ids.size()));
        for (size_t g = 0; g < overlap.size(); ++g)
            for (size_t p = 0; p < overlap[g].size(); ++p) cost[g][p] = -overlap[g][p];
        Assignment m = solve_assignment(cost);
        for (const auto& [g, p] : m.pairs) idtp += static_cast<long long>(overlap[g][p]);
    }
    rep.idtp = idtp;
    rep.idfp = static_cast<long long>(pred.size()) - idtp;
    rep.idfn = static_cast<long long>(gt.size()) - idtp;

    // per-frame detection matching for precision/recall
    long long tp = 0;
    for (const auto& [cell, gmap] : gt_cells) {
        auto pit = pred_cells.find(cell);
        if (pit == pred_cells.end()) continue;
        std::vector<const TrackRow*> gboxes, pboxes;
        for (const auto& [g, v] : gmap) gboxes.insert(gboxes.end(), v.begin(), v.end());
        for (const auto& [p, v] : pit->second) pboxes.insert(pboxes.end(), v.begin(), v.end());
        const double big = 1e6 * std::max(1.0, rule.world_radius);
        std::vector<std::vector<double>> cost(gboxes.size(),
                                              std::vector<double>(pboxes.size(), big));
        for (size_t g = 0; g < gboxes.size(); ++g)
            for (size_t p = 0; p < pboxes.size(); ++p) {
                double c;
                if (rule_match(rule, *gboxes[g], *pboxes[p], c)) cost[g][p] = c;
            }
        Assignment m = solve_assignment(cost, big * 0.5);
        tp += static_cast<long long>(m.pairs.size());
    }
    rep.tp = tp;
    rep.fp = static_cast<long long>(pred.size()) - tp;
    rep.fn = static_cast<long long>(gt.size()) - tp;

    derive_ratios(rep);
    return rep;
}

EvalReport aggregate(std::vector<std::pair<std::string, EvalReport>> scenes) {
    EvalReport total;
    for (const auto& [name, r] : scenes) {
        total.idtp += r.idtp;
        total.idfp += r.idfp;
        total.idfn += r.idfn;
        total.tp += r.tp;
        total.fp += r.fp;
        total.fn += r.fn;
    }
    derive_ratios(total);
    total.scenes = std::move(scenes);
    return total;
}

namespace {

std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

void csv_row(std::string& out, const std::string& name, const EvalReport& r) {
    out += name + "," + fmt_real(r.idf1) + "," + fmt_real(r.idp) + "," + fmt_real(r.idr) + "," +
           fmt_real(r.precision) + "," + fmt_real(r.recall) + "," + std::to_string(r.idtp) +
           "," + std::to_string(r.idfp) + "," + std::to_string(r.idfn) + "," +
           std::to_string(r.tp) + "," + std::to_string(r.fp) + "," + std::to_string(r.fn) +
           "\n";
}

} // namespace

std::string report_table(const EvalReport& r) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s %7s %7s %7s %10s %7s %8s %8s %8s\n", "scene",
                  "idf1", "idp", "idr", "precision", "recall", "idtp", "idfp", "idfn");
    out += line;
    auto row = [&](const std::string& name, const EvalReport& e) {
        std::snprintf(line, sizeof(line), "%-12s %7s %7s %7s %10s %7s %8lld %8lld %8lld\n",
                      name.c_str(), fmt4(e.idf1).c_str(), fmt4(e.idp).c_str(),
                      fmt4(e.idr).c_str(), fmt4(e.precision).c_str(), fmt4(e.recall).c_str(),
                      e.idtp, e.idfp, e.idfn);
        out += line;
    };
    for (const auto& [name, e] : r.scenes) row(name, e);
    row("overall", r);
    return out;
}

std::string report_csv(const EvalReport& r) {
    std::string out = "scene,idf1,idp,idr,precision,recall,idtp,idfp,idfn,tp,fp,fn\n";
    for (const auto& [name, e] : r.scenes) csv_row(out, name, e);
    csv_row(out, "overall", r);
    return out;
}

} // namespace mcpt
