#pragma once

// Greedy beam search over a SearchGraph under a switchable metric, and ANMS:
// m expansions under Euclidean distance, then the same pool continues under
// inner product.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "errors.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "search_graph.hpp"

namespace mag {

enum class EntryPolicy : std::uint8_t { RandomSeeded, FixedMedoid };

struct SearchParams {
    std::size_t ls = 100;  // candidate pool capacity
    std::size_t k = 10;
    std::size_t m = 0;     // expansions under Euclidean before switching to IP (ANMS only)
    std::uint64_t seed = 42;
    EntryPolicy entry = EntryPolicy::RandomSeeded;
};

struct SearchStats {
    std::uint64_t dist_comps = 0;
    std::uint64_t hops = 0;
    friend bool operator==(const SearchStats&, const SearchStats&) = default;
};

struct SearchResult {
    std::vector<node_id> ids;       // best first
    std::vector<float> scores;      // final-metric score of each id
    SearchStats stats;
    std::vector<node_id> expanded;  // expansion order

    friend bool operator==(const SearchResult&, const SearchResult&) = default;
};

/// Bounded pool of candidates kept sorted best-first under the active metric.
/// Each entry carries its inner product and, when computed, its squared distance.
class CandidatePool {
public:
    struct Entry {
        node_id id;
        float ip;
        float l2;
        bool visited;
    };

    CandidatePool(std::size_t capacity, MetricKind metric) : capacity_(capacity), metric_(metric) {
        detail::require(capacity >= 1, "pool capacity must be >= 1");
        entries_.reserve(capacity + 1);
    }

    std::size_t size() const noexcept { return entries_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    MetricKind metric() const noexcept { return metric_; }
    const std::vector<Entry>& entries() const noexcept { return entries_; }

    float active_score(const Entry& e) const noexcept { return metric_ == MetricKind::InnerProduct ? e.ip : e.l2; }

    bool ranks_before(const Entry& a, const Entry& b) const noexcept {
        return better(metric_, active_score(a), a.id, active_score(b), b.id);
    }

    /// Inserts unless the pool is full and `e` ranks after the last entry. Returns
    /// the insertion position, or nullopt when dropped. Callers guarantee `e.id`
    /// is not already pooled.
    std::optional<std::size_t> insert(const Entry& e) {
        if (entries_.size() == capacity_ && !ranks_before(e, entries_.back())) return std::nullopt;
        auto it = std::lower_bound(entries_.begin(), entries_.end(), e,
                                   [this](const Entry& a, const Entry& b) { return ranks_before(a, b); });
        const auto pos = static_cast<std::size_t>(it - entries_.begin());
        entries_.insert(it, e);
        if (entries_.size() > capacity_) entries_.pop_back();
        if (pos < cursor_) cursor_ = pos;
        return pos;
    }

    /// Position of the best unvisited entry, or nullopt when all are visited.
    std::optional<std::size_t> first_unvisited() {
        while (cursor_ < entries_.size() && entries_[cursor_].visited) ++cursor_;
        if (cursor_ == entries_.size()) return std::nullopt;
        return cursor_;
    }

    Entry& at(std::size_t i) noexcept { return entries_[i]; }

    /// Re-sorts the current members under another metric; visited flags are kept.
    void switch_metric(MetricKind metric) {
        metric_ = metric;
        std::sort(entries_.begin(), entries_.end(),
                  [this](const Entry& a, const Entry& b) { return ranks_before(a, b); });
        cursor_ = 0;
    }

    bool is_sorted() const {
        for (std::size_t i = 1; i < entries_.size(); ++i) {
            if (!ranks_before(entries_[i - 1], entries_[i])) return false;
        }
        return true;
    }

private:
    std::size_t capacity_;
    MetricKind metric_;
    std::vector<Entry> entries_;
    std::size_t cursor_ = 0;
};

/// Reusable per-thread scratch: epoch-stamped "already scored" table.
class Searcher {
public:
    Searcher(const SearchGraph& graph, const Dataset& data) : graph_(&graph), data_(&data) {
        detail::require(graph.size() >= 1, "search graph is empty");
        detail::require(graph.size() == data.size(), "graph and dataset sizes differ");
        stamp_.assign(data.size(), 0);
    }

    /// Greedy search under one metric.
    SearchResult greedy(std::span<const float> q, const SearchParams& p, MetricKind metric) {
        return run(q, p, metric, 0, nullptr);
    }

    /// ANMS: p.m expansions under Euclidean, then inner product to termination.
    SearchResult anms(std::span<const float> q, const SearchParams& p) {
        if (p.m == 0) return run(q, p, MetricKind::InnerProduct, 0, nullptr);
        return run(q, p, MetricKind::InnerProduct, p.m, nullptr);
    }

    /// Greedy search from caller-supplied seed ids, topped up with random ids to p.ls.
    SearchResult greedy_from(std::span<const float> q, const SearchParams& p, MetricKind metric,
                             std::span<const node_id> seeds) {
        return run(q, p, metric, 0, &seeds);
    }

    /// Instrumented hook: called after every expansion with the pool.
    std::function<void(const CandidatePool&)> on_expand;

private:
    bool mark(node_id id) {
        if (stamp_[id] == epoch_) return false;
        stamp_[id] = epoch_;
        return true;
    }

    void next_epoch() {
        if (++epoch_ == 0) {
            std::fill(stamp_.begin(), stamp_.end(), 0);
            epoch_ = 1;
        }
    }

    // `switch_after` > 0 means: start under Euclidean and switch to IP after that
    // many expansions. With 0 the whole search runs under `metric`.
    SearchResult run(std::span<const float> q, const SearchParams& p, MetricKind metric, std::size_t switch_after,
                     const std::span<const node_id>* seeds) {
        const Dataset& data = *data_;
        const SearchGraph& graph = *graph_;
        const std::size_t n = data.size();
        detail::require(q.size() == data.dim(), "query dimension does not match dataset");
        detail::require(p.k >= 1 && p.k <= n, "k must be in [1, n]");
        detail::require(p.k <= p.ls, "k must not exceed the pool size");

        const bool two_phase = switch_after > 0;
        MetricKind active = two_phase ? MetricKind::Euclidean : metric;

        next_epoch();
        SearchResult res;
        CandidatePool pool(p.ls, active);
        const std::size_t dim = data.dim();
        const float* qp = q.data();
        constexpr float kNaN = std::numeric_limits<float>::quiet_NaN();

        // In the Euclidean phase of ANMS both scores are computed (one distance
        // computation) so the pool can be re-ranked by inner product at the switch.
        auto score_into_pool = [&](node_id id, bool both) {
            const float* x = data[id].data();
            CandidatePool::Entry e{id, kNaN, kNaN, false};
            if (both || pool.metric() == MetricKind::InnerProduct) e.ip = detail::ip_unchecked(qp, x, dim);
            if (both || pool.metric() == MetricKind::Euclidean) e.l2 = detail::l2_unchecked(qp, x, dim);
            ++res.stats.dist_comps;
            pool.insert(e);
        };

        // initial pool
        const std::size_t target = std::min(p.ls, n);
        std::size_t phase_left = switch_after;
        auto in_l2_phase = [&] { return two_phase && phase_left > 0; };
        if (seeds != nullptr) {
            for (node_id s : *seeds) {
                if (s < n && pool.size() < target && mark(s)) score_into_pool(s, in_l2_phase());
            }
        }
        if (seeds != nullptr || p.entry == EntryPolicy::RandomSeeded) {
            std::mt19937_64 rng(p.seed);
            std::size_t scored = seeds ? static_cast<std::size_t>(res.stats.dist_comps) : 0;
            if (target * 2 > n) {
                std::vector<node_id> ids(n);
                for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<node_id>(i);
                for (std::size_t i = 0; i < n && scored < target; ++i) {
                    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
                    std::swap(ids[i], ids[pick(rng)]);
                    if (mark(ids[i])) {
                        score_into_pool(ids[i], in_l2_phase());
                        ++scored;
                    }
                }
            } else {
                std::uniform_int_distribution<std::size_t> pick(0, n - 1);
                while (scored < target) {
                    const auto id = static_cast<node_id>(pick(rng));
                    if (mark(id)) {
                        score_into_pool(id, in_l2_phase());
                        ++scored;
                    }
                }
            }
        } else {
            const node_id e = graph.entry();
            if (mark(e)) score_into_pool(e, in_l2_phase());
            for (node_id v : graph.neighbors(e)) {
                if (mark(v)) score_into_pool(v, in_l2_phase());
            }
        }

        if (two_phase && phase_left == 0) pool.switch_metric(MetricKind::InnerProduct);
        for (;;) {
            auto pos = pool.first_unvisited();
            if (!pos) {
                if (in_l2_phase()) {
                    // Euclidean phase exhausted early: switch and resume (nothing left unvisited).
                    phase_left = 0;
                    pool.switch_metric(MetricKind::InnerProduct);
                    continue;
                }
                break;
            }
            auto& cur = pool.at(*pos);
            cur.visited = true;
            const node_id pid = cur.id;
            ++res.stats.hops;
            res.expanded.push_back(pid);
            const bool both = in_l2_phase();
            for (node_id v : graph.neighbors(pid)) {
                if (mark(v)) score_into_pool(v, both);
            }
            if (on_expand) on_expand(pool);
            if (two_phase && phase_left > 0 && --phase_left == 0) pool.switch_metric(MetricKind::InnerProduct);
        }

        const auto& entries = pool.entries();
        const std::size_t k = std::min(p.k, entries.size());
        res.ids.reserve(k);
        res.scores.reserve(k);
        for (std::size_t i = 0; i < k; ++i) {
            res.ids.push_back(entries[i].id);
            res.scores.push_back(pool.active_score(entries[i]));
        }
        return res;
    }

    const SearchGraph* graph_;
    const Dataset* data_;
    std::vector<std::uint32_t> stamp_;
    std::uint32_t epoch_ = 0;
};

inline SearchResult greedy_search(const SearchGraph& graph, const Dataset& data, std::span<const float> q,
                                  const SearchParams& params, MetricKind metric) {
    Searcher s(graph, data);
    return s.greedy(q, params, metric);
}

inline SearchResult anms_search(const SearchGraph& graph, const Dataset& data, std::span<const float> q,
                                const SearchParams& params) {
    Searcher s(graph, data);
    return s.anms(q, params);
}

/// Fraction of a query panel where the Euclidean NN of mu*q equals the MIPS answer of q,
/// plus (when a graph is given) the fraction whose greedy expansion traces coincide.
struct DualityReport {
    std::size_t queries = 0;
    std::size_t tie_free = 0;
    double answer_agreement = 0.0;  // over tie-free queries
    double trace_agreement = 0.0;   // over tie-free queries; 0 when no graph was given
};

inline DualityReport verify_scaling_duality(const Dataset& data, const Dataset& queries, double mu,
                                            const SearchGraph* graph = nullptr, SearchParams params = {}) {
    detail::require(mu > 0.0, "mu must be positive");
    detail::require(queries.dim() == data.dim(), "query dimension does not match dataset");
    DualityReport rep;
    rep.queries = queries.size();
    std::size_t agree = 0, same_trace = 0;
    std::optional<Searcher> searcher;
    if (graph) searcher.emplace(*graph, data);
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const auto q = queries[i];
        std::vector<float> scaled(q.begin(), q.end());
        for (auto& v : scaled) v = static_cast<float>(double(v) * mu);
        if (data.size() >= 2) {
            const auto top2 = brute_force_topk(data, q, 2, MetricKind::InnerProduct);
            if (inner_product_f64(q, data[top2[0]]) == inner_product_f64(q, data[top2[1]])) continue;
        }
        ++rep.tie_free;
        const auto mips = brute_force_topk(data, q, 1, MetricKind::InnerProduct);
        const auto nn = brute_force_topk(data, scaled, 1, MetricKind::Euclidean);
        if (mips[0] == nn[0]) ++agree;
        if (searcher) {
            SearchParams per_query = params;
            per_query.seed = mix_seed(params.seed, i);
            const auto a = searcher->greedy(q, per_query, MetricKind::InnerProduct);
            const auto b = searcher->greedy(scaled, per_query, MetricKind::Euclidean);
            if (a.expanded == b.expanded) ++same_trace;
        }
    }
    rep.answer_agreement = rep.tie_free == 0 ? 1.0 : double(agree) / double(rep.tie_free);
    rep.trace_agreement = graph && rep.tie_free > 0 ? double(same_trace) / double(rep.tie_free) : 0.0;
    return rep;
}

}  // namespace mag
