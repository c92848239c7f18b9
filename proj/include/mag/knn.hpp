#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "errors.hpp"
#include "metrics.hpp"
#include "parallel.hpp"

namespace mag {

/// K nearest Euclidean neighbours per node, each list sorted by (squared distance, id).
struct KnnGraph {
    std::size_t k = 0;
    std::vector<Scored> neighbors;  // n * k

    std::size_t size() const noexcept { return k == 0 ? 0 : neighbors.size() / k; }
    std::span<const Scored> row(std::size_t i) const noexcept { return {neighbors.data() + i * k, k}; }
    std::span<Scored> row(std::size_t i) noexcept { return {neighbors.data() + i * k, k}; }

    friend bool operator==(const KnnGraph&, const KnnGraph&) = default;
};

enum class KnnMode : std::uint8_t { Exact, NNDescent };

/// Exact K-NN graph by exhaustive scan. O(n^2 d).
inline KnnGraph build_exact_knn(const Dataset& data, std::size_t K, unsigned workers = 0) {
    const std::size_t n = data.size();
    detail::require(K >= 1, "K must be >= 1");
    detail::require(K < n, "K = " + std::to_string(K) + " must be below n = " + std::to_string(n));
    KnnGraph g;
    g.k = K;
    g.neighbors.resize(n * K);
    const ScoreOrder order{MetricKind::Euclidean};
    parallel_for(n, workers, [&](std::size_t i) {
        // max-heap on (distance, id): the worst kept neighbour sits on top
        std::vector<Scored> heap;
        heap.reserve(K + 1);
        const float* xi = data[i].data();
        const std::size_t d = data.dim();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const Scored cand{static_cast<node_id>(j), detail::l2_unchecked(xi, data[j].data(), d)};
            if (heap.size() < K) {
                heap.push_back(cand);
                std::push_heap(heap.begin(), heap.end(), order);
            } else if (order(cand, heap.front())) {
                std::pop_heap(heap.begin(), heap.end(), order);
                heap.back() = cand;
                std::push_heap(heap.begin(), heap.end(), order);
            }
        }
        std::sort_heap(heap.begin(), heap.end(), order);
        std::copy(heap.begin(), heap.end(), g.row(i).begin());
    });
    return g;
}

/// Approximate K-NN graph by neighbour-of-neighbour refinement (NN-descent).
/// Each round reads only the previous round's graph, so the result is
/// independent of the worker count. iters == 0 returns the seeded random graph.
inline KnnGraph build_nndescent_knn(const Dataset& data, std::size_t K, std::uint64_t seed, std::size_t iters,
                                    unsigned workers = 0) {
    const std::size_t n = data.size();
    detail::require(K >= 1, "K must be >= 1");
    detail::require(K < n, "K = " + std::to_string(K) + " must be below n = " + std::to_string(n));
    const std::size_t d = data.dim();
    const ScoreOrder order{MetricKind::Euclidean};

    KnnGraph g;
    g.k = K;
    g.neighbors.resize(n * K);
    std::vector<std::uint8_t> is_new(n * K, 1);

    parallel_for(n, workers, [&](std::size_t i) {
        std::mt19937_64 rng(mix_seed(seed, i));
        std::uniform_int_distribution<std::size_t> pick(0, n - 2);
        std::vector<node_id> chosen;
        chosen.reserve(K);
        while (chosen.size() < K) {
            std::size_t j = pick(rng);
            if (j >= i) ++j;  // skip self
            const auto id = static_cast<node_id>(j);
            if (std::find(chosen.begin(), chosen.end(), id) == chosen.end()) chosen.push_back(id);
        }
        auto row = g.row(i);
        for (std::size_t s = 0; s < K; ++s) {
            row[s] = {chosen[s], detail::l2_unchecked(data[i].data(), data[chosen[s]].data(), d)};
        }
        std::sort(row.begin(), row.end(), order);
    });

    for (std::size_t it = 0; it < iters; ++it) {
        // reverse lists, capped at K per node via a seeded shuffle
        std::vector<std::vector<std::pair<node_id, bool>>> rev(n);
        for (std::size_t u = 0; u < n; ++u) {
            for (std::size_t s = 0; s < K; ++s) rev[g.row(u)[s].id].push_back({static_cast<node_id>(u), is_new[u * K + s] != 0});
        }
        for (std::size_t v = 0; v < n; ++v) {
            if (rev[v].size() > K) {
                std::mt19937_64 rng(mix_seed(seed ^ (0xA5A5ull + it), v));
                std::shuffle(rev[v].begin(), rev[v].end(), rng);
                rev[v].resize(K);
            }
        }

        KnnGraph next = g;
        std::vector<std::uint8_t> next_new(n * K, 0);
        std::vector<std::uint8_t> changed(n, 0);
        parallel_for(n, workers, [&](std::size_t u) {
            // general neighbourhood of a node: forward list plus capped reverse list
            auto neighbourhood = [&](std::size_t v, std::vector<std::pair<node_id, bool>>& out) {
                out.clear();
                for (std::size_t s = 0; s < K; ++s) out.push_back({g.row(v)[s].id, is_new[v * K + s] != 0});
                out.insert(out.end(), rev[v].begin(), rev[v].end());
            };
            std::vector<std::pair<node_id, bool>> nu, nv;
            neighbourhood(u, nu);
            std::vector<node_id> cand;
            for (const auto& [v, v_new] : nu) {
                neighbourhood(v, nv);
                for (const auto& [w, w_new] : nv) {
                    if (w != u && (v_new || w_new)) cand.push_back(w);
                }
            }
            std::sort(cand.begin(), cand.end());
            cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

            const auto cur = g.row(u);
            std::vector<Scored> merged(cur.begin(), cur.end());
            std::vector<std::uint8_t> fresh(K, 0);
            for (node_id w : cand) {
                if (std::any_of(cur.begin(), cur.end(), [w](const Scored& s) { return s.id == w; })) continue;
                merged.push_back({w, detail::l2_unchecked(data[u].data(), data[w].data(), d)});
            }
            std::sort(merged.begin(), merged.end(), order);
            auto out = next.row(u);
            for (std::size_t s = 0; s < K; ++s) {
                out[s] = merged[s];
                const bool existed =
                    std::any_of(cur.begin(), cur.end(), [&](const Scored& c) { return c.id == merged[s].id; });
                next_new[u * K + s] = existed ? 0 : 1;
                if (!existed) changed[u] = 1;
            }
        });
        g = std::move(next);
        is_new = std::move(next_new);
        if (std::none_of(changed.begin(), changed.end(), [](std::uint8_t c) { return c != 0; })) break;
    }
    return g;
}

/// Mean fraction of exact neighbours recovered per node.
inline double knn_recall(const KnnGraph& approx, const KnnGraph& exact) {
    detail::require(approx.k == exact.k && approx.size() == exact.size(), "graphs differ in shape");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < exact.size(); ++i) {
        for (const auto& e : exact.row(i)) {
            const auto row = approx.row(i);
            if (std::any_of(row.begin(), row.end(), [&](const Scored& a) { return a.id == e.id; })) ++hits;
        }
    }
    return double(hits) / double(exact.size() * exact.k);
}

}  // namespace mag
