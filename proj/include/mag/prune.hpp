#pragma once

// Edge selection rules: MRNG-style Euclidean pruning and dominator (NDG) selection.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "errors.hpp"
#include "metrics.hpp"
#include "parallel.hpp"

namespace mag {

enum class EdgeKind : std::uint8_t { Euclid, IpDominator };

/// Scans candidates nearest-first and keeps p iff d(node, p) < d(p, r) for every
/// already kept r. Stops after `max_keep` edges.
/// `candidates` hold squared distances to `node`, ascending, without `node` itself.
inline std::vector<node_id> mrng_prune(node_id node, std::span<const Scored> candidates, const Dataset& data,
                                       std::size_t max_keep) {
    std::vector<node_id> kept;
    if (max_keep == 0) return kept;
    kept.reserve(std::min(max_keep, candidates.size()));
    for (const auto& p : candidates) {
        if (p.id == node) continue;
        if (std::find(kept.begin(), kept.end(), p.id) != kept.end()) continue;
        const auto xp = data[p.id];
        bool keep = true;
        for (node_id r : kept) {
            if (!(p.score < euclidean_sq(xp, data[r]))) {
                keep = false;
                break;
            }
        }
        if (keep) {
            kept.push_back(p.id);
            if (kept.size() == max_keep) break;
        }
    }
    return kept;
}

/// Dominator selection over a list sorted by descending <node, y>. The head of the
/// list is always taken. A later y_j is taken iff
///   (1) <y_j, y_j> >= <y_j, y_k> for every previously taken y_k, and
///   (2) <y_k, y_k> >= <y_j, y_k> for every previously taken y_k except the head.
/// Stops after `max_keep` edges.
inline std::vector<node_id> ndg_select(node_id node, std::span<const Scored> candidates, const Dataset& data,
                                       std::size_t max_keep) {
    std::vector<node_id> kept;
    std::vector<float> kept_sq;  // <y_k, y_k> of kept entries
    if (max_keep == 0) return kept;
    for (const auto& c : candidates) {
        if (c.id == node) continue;
        if (std::find(kept.begin(), kept.end(), c.id) != kept.end()) continue;
        const auto yj = data[c.id];
        const float self = inner_product(yj, yj);
        bool accept = true;
        for (std::size_t k = 0; k < kept.size() && accept; ++k) {
            const float cross = inner_product(yj, data[kept[k]]);
            if (!(self >= cross)) accept = false;
            if (k > 0 && !(kept_sq[k] >= cross)) accept = false;
        }
        if (accept) {
            kept.push_back(c.id);
            kept_sq.push_back(self);
            if (kept.size() == max_keep) break;
        }
    }
    return kept;
}

/// All other points of the dataset scored against `node` under `metric`, best first.
inline std::vector<Scored> ranked_others(const Dataset& data, node_id node, MetricKind metric) {
    std::vector<Scored> all;
    all.reserve(data.size() - 1);
    for (std::size_t j = 0; j < data.size(); ++j) {
        if (j == node) continue;
        all.push_back({static_cast<node_id>(j), score(metric, data[node], data[j])});
    }
    std::sort(all.begin(), all.end(), ScoreOrder{metric});
    return all;
}

/// Per-node dominator selections of the exact NDG (unbounded), before symmetrization.
inline std::vector<std::vector<node_id>> exact_ndg_selections(const Dataset& data, unsigned workers = 0) {
    detail::require(data.size() >= 2, "NDG needs n >= 2");
    detail::require(data.size() <= 20000, "exact NDG is limited to n <= 20000");
    std::vector<std::vector<node_id>> sel(data.size());
    parallel_for(data.size(), workers, [&](std::size_t i) {
        const auto id = static_cast<node_id>(i);
        sel[i] = ndg_select(id, ranked_others(data, id, MetricKind::InnerProduct), data,
                            std::numeric_limits<std::size_t>::max());
    });
    return sel;
}

/// Exact NDG: every selection becomes a bi-directional edge. Adjacency lists are sorted by id.
inline std::vector<std::vector<node_id>> build_exact_ndg(const Dataset& data, unsigned workers = 0) {
    const auto sel = exact_ndg_selections(data, workers);
    std::vector<std::vector<node_id>> adj(data.size());
    for (std::size_t i = 0; i < sel.size(); ++i) {
        for (node_id j : sel[i]) {
            adj[i].push_back(j);
            adj[j].push_back(static_cast<node_id>(i));
        }
    }
    for (auto& a : adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    return adj;
}

/// Number of strongly connected components (iterative Tarjan).
inline std::size_t count_scc(const std::vector<std::vector<node_id>>& adj) {
    const std::size_t n = adj.size();
    constexpr std::uint32_t kUnset = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> index(n, kUnset), low(n, 0);
    std::vector<std::uint8_t> on_stack(n, 0);
    std::vector<node_id> stack;
    std::vector<std::pair<node_id, std::size_t>> call;  // (node, next edge position)
    std::uint32_t counter = 0;
    std::size_t components = 0;
    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != kUnset) continue;
        call.push_back({static_cast<node_id>(root), 0});
        index[root] = low[root] = counter++;
        stack.push_back(static_cast<node_id>(root));
        on_stack[root] = 1;
        while (!call.empty()) {
            auto& [v, pos] = call.back();
            if (pos < adj[v].size()) {
                const node_id w = adj[v][pos++];
                if (index[w] == kUnset) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            const node_id done = v;
            call.pop_back();
            if (!call.empty()) {
                const node_id parent = call.back().first;
                low[parent] = std::min(low[parent], low[done]);
            }
            if (low[done] == index[done]) {
                ++components;
                node_id w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                } while (w != done);
            }
        }
    }
    return components;
}

}  // namespace mag
