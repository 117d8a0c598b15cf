#include "mcpt/anchors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "mcpt/assignment.hpp"
#include "mcpt/error.hpp"

namespace mcpt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> unit(const std::vector<double>& v, const char* what) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (!(norm > 0.0) || !std::isfinite(norm))
        throw_input(std::string(what) + " has zero or non-finite norm");
    std::vector<double> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = v[i] / norm;
    return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

// Greedy max-min spread: seed with the farthest pair, then repeatedly add the
// member maximizing its distance to the chosen set. Ties go to the smallest
// index. Returns feature indices in ascending order.
std::vector<int> pick_representatives(const std::vector<int>& members,
                                      const std::vector<std::vector<double>>& units, int k) {
    int m = static_cast<int>(members.size());
    if (m <= k) return members;
    auto d = [&](int a, int b) { return 1.0 - dot(units[members[a]], units[members[b]]); };
    int pa = 0, pb = 1;
    double best = -1.0;
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            if (d(i, j) > best) {
                best = d(i, j);
                pa = i;
                pb = j;
            }
    std::vector<bool> chosen(m, false);
    chosen[pa] = chosen[pb] = true;
    std::vector<double> min_dist(m);
    for (int i = 0; i < m; ++i) min_dist[i] = std::min(d(i, pa), d(i, pb));
    for (int picked = 2; picked < k; ++picked) {
        int next = -1;
        double far = -1.0;
        for (int i = 0; i < m; ++i)
            if (!chosen[i] && min_dist[i] > far) {
                far = min_dist[i];
                next = i;
            }
        chosen[next] = true;
        for (int i = 0; i < m; ++i) min_dist[i] = std::min(min_dist[i], d(i, next));
    }
    std::vector<int> out;
    for (int i = 0; i < m; ++i)
        if (chosen[i]) out.push_back(members[i]);
    return out;
}

} // namespace

std::vector<std::vector<double>> sample_features(std::span<const Tracklet> tracklets,
                                                 int period, int span) {
    if (period < 1) throw_input("sampling period must be >= 1");
    if (span < period) throw_input("sampling span must be >= period");
    std::vector<const Detection*> picked;
    for (const auto& t : tracklets)
        for (const auto& e : t.entries)
            if (e.frame < span && e.frame % period == 0) picked.push_back(&e);
    std::sort(picked.begin(), picked.end(), [](const Detection* a, const Detection* b) {
        return std::tie(a->camera_id, a->frame, a->det_id) <
               std::tie(b->camera_id, b->frame, b->det_id);
    });
    std::vector<std::vector<double>> out;
    out.reserve(picked.size());
    for (const Detection* d : picked) out.push_back(d->embedding);
    return out;
}

std::vector<std::vector<int>> cluster_average_linkage(
    const std::vector<std::vector<double>>& features, double dist_thresh) {
    const int n = static_cast<int>(features.size());
    if (n == 0) throw_input("clustering needs at least one feature");
    if (!(dist_thresh > 0.0 && dist_thresh < 2.0))
        throw_input("cluster distance threshold must be in (0, 2)");

    std::vector<std::vector<double>> units(n);
    for (int i = 0; i < n; ++i) {
        if (i > 0 && features[i].size() != features[0].size())
            throw_input("features have mixed dimensions");
        units[i] = unit(features[i], "feature");
    }

    // pairwise cosine distances over cluster slots; merged clusters reuse the
    // lower slot, the higher one dies
    std::vector<double> dist(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double d = 1.0 - dot(units[i], units[j]);
            dist[static_cast<size_t>(i) * n + j] = d;
            dist[static_cast<size_t>(j) * n + i] = d;
        }

    std::vector<int> size(n, 1), cluster_id(n);
    std::iota(cluster_id.begin(), cluster_id.end(), 0);
    std::vector<bool> alive(n, true);
    struct Merge {
        double height;
        int a, b, id;
    };
    std::vector<Merge> merges;
    merges.reserve(n - 1);
    int next_id = n;
    int remaining = n;
    std::vector<int> chain;
    chain.reserve(n);

    // nearest-neighbor chain; average linkage is reducible so reciprocal
    // nearest neighbors can be merged as soon as they appear
    while (remaining > 1) {
        if (chain.empty()) {
            for (int i = 0; i < n; ++i)
                if (alive[i]) {
                    chain.push_back(i);
                    break;
                }
        }
        while (true) {
            int a = chain.back();
            int prev = chain.size() >= 2 ? chain[chain.size() - 2] : -1;
            int nearest = -1;
            double best = kInf;
            for (int j = 0; j < n; ++j) {
                if (!alive[j] || j == a) continue;
                double d = dist[static_cast<size_t>(a) * n + j];
                if (d < best) {
                    best = d;
                    nearest = j;
                }
            }
            if (prev >= 0 && dist[static_cast<size_t>(a) * n + prev] <= best) {
                // reciprocal pair: merge a with prev
                int keep = std::min(a, prev), kill = std::max(a, prev);
                double h = dist[static_cast<size_t>(a) * n + prev];
                merges.push_back({h, cluster_id[keep], cluster_id[kill], next_id});
                int sa = size[keep], sb = size[kill];
                for (int j = 0; j < n; ++j) {
                    if (!alive[j] || j == keep || j == kill) continue;
                    double merged = (sa * dist[static_cast<size_t>(keep) * n + j] +
                                     sb * dist[static_cast<size_t>(kill) * n + j]) /
                                    (sa + sb);
                    dist[static_cast<size_t>(keep) * n + j] = merged;
                    dist[static_cast<size_t>(j) * n + keep] = merged;
                }
                alive[kill] = false;
                size[keep] = sa + sb;
                cluster_id[keep] = next_id++;
                chain.pop_back();
                chain.pop_back();
                --remaining;
                break;
            }
            chain.push_back(nearest);
        }
    }

    // cut: average linkage has no inversions, so joining every merge at or
    // below the threshold yields the flat clustering
    UnionFind uf(2 * n - 1);
    for (const auto& m : merges)
        if (m.height <= dist_thresh) {
            uf.unite(m.a, m.id);
            uf.unite(m.b, m.id);
        }
    std::map<int, std::vector<int>> groups;
    for (int i = 0; i < n; ++i) groups[uf.find(i)].push_back(i);

    std::vector<std::vector<int>> clusters;
    clusters.reserve(groups.size());
    for (auto& [root, members] : groups) clusters.push_back(std::move(members));
    std::sort(clusters.begin(), clusters.end(),
              [](const std::vector<int>& a, const std::vector<int>& b) {
                  if (a.size() != b.size()) return a.size() > b.size();
                  return a.front() < b.front();
              });
    return clusters;
}

AnchorBank build_anchors(const std::vector<std::vector<double>>& features, double dist_thresh,
                         int k, int min_cluster_size, uint64_t rng_seed) {
    (void)rng_seed;
    if (features.empty()) throw_input("cannot build anchors from zero features");
    if (k < 1) throw_input("anchor feature count k must be >= 1");
    if (min_cluster_size < 1) throw_input("min_cluster_size must be >= 1");

    std::vector<std::vector<double>> units(features.size());
    for (size_t i = 0; i < features.size(); ++i) units[i] = unit(features[i], "feature");

    auto clusters = cluster_average_linkage(features, dist_thresh);
    AnchorBank bank;
    int next_gid = 1;
    for (const auto& members : clusters) {
        if (static_cast<int>(members.size()) < min_cluster_size) continue;
        Anchor a;
        a.global_id = next_gid++;
        for (int idx : pick_representatives(members, units, k))
            a.features.push_back(features[idx]);
        bank.anchors.push_back(std::move(a));
    }
    return bank;
}

double anchor_cost(const std::vector<double>& d, const Anchor& a) {
    if (a.features.empty()) throw_input("anchor has no features");
    auto du = unit(d, "detection embedding");
    double sum = 0.0;
    for (const auto& f : a.features) {
        if (f.size() != d.size()) throw_input("embedding dimension mismatch against anchor");
        sum += dot(du, unit(f, "anchor feature"));
    }
    return 1.0 - sum / static_cast<double>(a.features.size());
}

void assign_global_ids(std::vector<Tracklet>& tracklets, const AnchorBank& bank,
                       double max_cost) {
    if (bank.anchors.empty()) throw_input("anchor bank is empty");
    validate_anchor_bank(bank);
    for (auto& t : tracklets) t.global_ids.assign(t.entries.size(), kUnassigned);

    std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> cells;
    for (size_t ti = 0; ti < tracklets.size(); ++ti)
        for (size_t ei = 0; ei < tracklets[ti].entries.size(); ++ei) {
            const auto& e = tracklets[ti].entries[ei];
            cells[{e.camera_id, e.frame}].emplace_back(static_cast<int>(ti),
                                                       static_cast<int>(ei));
        }

    for (auto& [cell, slots] : cells) {
        std::sort(slots.begin(), slots.end(), [&](const auto& a, const auto& b) {
            return tracklets[a.first].entries[a.second].det_id <
                   tracklets[b.first].entries[b.second].det_id;
        });
        std::vector<std::vector<double>> cost(slots.size(),
                                              std::vector<double>(bank.anchors.size()));
        for (size_t r = 0; r < slots.size(); ++r) {
            const auto& emb = tracklets[slots[r].first].entries[slots[r].second].embedding;
            for (size_t c = 0; c < bank.anchors.size(); ++c)
                cost[r][c] = anchor_cost(emb, bank.anchors[c]);
        }
        Assignment sol = solve_assignment(cost, max_cost);
        for (const auto& [r, c] : sol.pairs)
            tracklets[slots[r].first].global_ids[slots[r].second] = bank.anchors[c].global_id;
    }
}

std::vector<int> majority_vote(std::span<const int> ids, int window) {
    if (window < 1 || window % 2 == 0) throw_config("vote window must be odd and >= 1");
    const int n = static_cast<int>(ids.size());
    std::vector<int> out(n, kUnassigned);
    const int w = std::min(window, n);
    for (int i = 0; i < n; ++i) {
        int start = std::clamp(i - window / 2, 0, n - w);
        std::map<int, int> counts;
        for (int j = start; j < start + w; ++j)
            if (ids[j] != kUnassigned) ++counts[ids[j]];
        int best = kUnassigned, best_count = 0;
        for (const auto& [id, count] : counts)
            if (count > best_count) {
                best = id;
                best_count = count;
            }
        out[i] = best;
    }
    return out;
}

void vote_tracklets(std::vector<Tracklet>& tracklets, int window) {
    for (auto& t : tracklets) {
        if (!t.has_global_ids()) throw_state("tracklet has no global ids to vote over");
        t.global_ids = majority_vote(t.global_ids, window);
    }
}

} // namespace mcpt
