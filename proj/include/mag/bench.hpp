#pragma once

// Measurement harness: recall@k, synthetic datasets, recall/QPS sweeps,
// matched-recall cost, scaling studies and the invariant verification suite.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "index.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "prune.hpp"
#include "search.hpp"
#include "stats.hpp"

namespace mag {

struct BenchRecord {
    std::size_t ls = 0;
    double alpha = 0.0;
    std::size_t m = 0;
    std::size_t R = 0;
    double recall = 0.0;
    double qps = 0.0;
    double dist_comps = 0.0;
    double hops = 0.0;
};

inline constexpr const char* kBenchCsvHeader = "ls,alpha,m,R,recall,qps,dist_comps,hops";

enum class SyntheticKind : std::uint8_t { GaussianIID, ClusteredBlobs, HeavyNormTail };

inline SyntheticKind parse_synthetic_kind(std::string_view s) {
    if (s == "gaussian") return SyntheticKind::GaussianIID;
    if (s == "blobs") return SyntheticKind::ClusteredBlobs;
    if (s == "heavytail") return SyntheticKind::HeavyNormTail;
    throw usage_error("unknown dataset kind '" + std::string(s) + "' (expected gaussian, blobs or heavytail)");
}

struct SyntheticSpec {
    SyntheticKind kind = SyntheticKind::GaussianIID;
    std::size_t n = 1000;
    std::size_t dim = 16;
    std::uint64_t seed = 42;
    std::size_t clusters = 16;    // ClusteredBlobs
    double spread = 1.0;          // ClusteredBlobs: per-coordinate std-dev around a centre
    double center_scale = 4.0;    // ClusteredBlobs: per-coordinate std-dev of centres
    double sigma_log = 0.5;       // HeavyNormTail: std-dev of log radius
};

inline Dataset generate_synthetic(const SyntheticSpec& spec) {
    detail::require(spec.n >= 1 && spec.dim >= 1, "synthetic dataset needs n >= 1 and dim >= 1");
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<float> out(spec.n * spec.dim);
    switch (spec.kind) {
        case SyntheticKind::GaussianIID:
            for (auto& v : out) v = static_cast<float>(gauss(rng));
            break;
        case SyntheticKind::ClusteredBlobs: {
            detail::require(spec.clusters >= 1, "need at least one cluster");
            std::vector<double> centers(spec.clusters * spec.dim);
            for (auto& c : centers) c = spec.center_scale * gauss(rng);
            for (std::size_t i = 0; i < spec.n; ++i) {
                const std::size_t c = i % spec.clusters;
                for (std::size_t j = 0; j < spec.dim; ++j) {
                    out[i * spec.dim + j] = static_cast<float>(centers[c * spec.dim + j] + spec.spread * gauss(rng));
                }
            }
            break;
        }
        case SyntheticKind::HeavyNormTail: {
            // random direction times a log-normal radius scaled to the Gaussian typical norm
            std::vector<double> dir(spec.dim);
            for (std::size_t i = 0; i < spec.n; ++i) {
                double nrm = 0.0;
                for (auto& v : dir) {
                    v = gauss(rng);
                    nrm += v * v;
                }
                nrm = std::sqrt(nrm);
                const double radius = std::sqrt(double(spec.dim)) * std::exp(spec.sigma_log * gauss(rng));
                for (std::size_t j = 0; j < spec.dim; ++j) {
                    out[i * spec.dim + j] = static_cast<float>(radius * dir[j] / nrm);
                }
            }
            break;
        }
    }
    return Dataset(spec.n, spec.dim, std::move(out));
}

/// |result ∩ first k ground-truth ids| / k for one query.
inline double recall_at_k(std::span<const node_id> result, std::span<const node_id> truth, std::size_t k) {
    detail::require(k >= 1, "k must be >= 1");
    detail::require(truth.size() >= k, "ground-truth row shorter than k");
    std::vector<node_id> want(truth.begin(), truth.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(want.begin(), want.end());
    std::size_t hits = 0;
    const std::size_t take = std::min(result.size(), k);
    std::vector<node_id> got(result.begin(), result.begin() + static_cast<std::ptrdiff_t>(take));
    std::sort(got.begin(), got.end());
    got.erase(std::unique(got.begin(), got.end()), got.end());
    for (node_id v : got) hits += std::binary_search(want.begin(), want.end(), v) ? 1 : 0;
    return double(hits) / double(k);
}

inline double mean_recall(const std::vector<SearchResult>& results, const GroundTruth& gt, std::size_t k) {
    detail::require(results.size() == gt.queries(), "result count does not match ground truth");
    if (results.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < results.size(); ++i) sum += recall_at_k(results[i].ids, gt.row(i), k);
    return sum / double(results.size());
}

enum class SearchMode : std::uint8_t { Anms, GreedyIp, GreedyL2 };

/// Runs every query; query i uses seed mix_seed(params.seed, i). Output order follows the queries.
inline std::vector<SearchResult> run_queries(const SearchGraph& graph, const Dataset& data, const Dataset& queries,
                                             const SearchParams& params, SearchMode mode, unsigned workers = 0) {
    detail::require(queries.dim() == data.dim(), "query dimension does not match dataset");
    std::vector<SearchResult> out(queries.size());
    const unsigned w = workers == 0 ? default_workers() : workers;
    const std::size_t nq = queries.size();
    const std::size_t blocks = std::max<std::size_t>(1, std::min<std::size_t>(w, nq));
    parallel_for(blocks, w, [&](std::size_t b) {
        Searcher s(graph, data);
        const std::size_t lo = b * nq / blocks, hi = (b + 1) * nq / blocks;
        for (std::size_t i = lo; i < hi; ++i) {
            SearchParams p = params;
            p.seed = mix_seed(params.seed, i);
            switch (mode) {
                case SearchMode::Anms: out[i] = s.anms(queries[i], p); break;
                case SearchMode::GreedyIp: out[i] = s.greedy(queries[i], p, MetricKind::InnerProduct); break;
                case SearchMode::GreedyL2: out[i] = s.greedy(queries[i], p, MetricKind::Euclidean); break;
            }
        }
    });
    return out;
}

struct PanelSummary {
    double recall = 0.0;
    double dist_comps = 0.0;
    double hops = 0.0;
};

inline PanelSummary summarize(const std::vector<SearchResult>& results, const GroundTruth& gt, std::size_t k) {
    PanelSummary s;
    s.recall = mean_recall(results, gt, k);
    for (const auto& r : results) {
        s.dist_comps += double(r.stats.dist_comps);
        s.hops += double(r.stats.hops);
    }
    if (!results.empty()) {
        s.dist_comps /= double(results.size());
        s.hops /= double(results.size());
    }
    return s;
}

/// One record per pool size. QPS is the mean over `reps` timed passes of the query loop only.
inline std::vector<BenchRecord> run_benchmark(const SearchGraph& graph, const Dataset& data, const Dataset& queries,
                                              const GroundTruth& gt, const std::vector<std::size_t>& ls_list,
                                              const SearchParams& base, unsigned workers = 0, std::size_t reps = 3) {
    detail::require(gt.queries() == queries.size(), "ground truth does not cover the query set");
    detail::require(gt.k >= base.k, "ground truth shallower than k");
    detail::require(reps >= 1, "need at least one repetition");
    std::vector<BenchRecord> out;
    for (std::size_t ls : ls_list) {
        SearchParams p = base;
        p.ls = ls;
        std::vector<SearchResult> results;
        double qps_sum = 0.0;
        for (std::size_t r = 0; r < reps; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            results = run_queries(graph, data, queries, p, SearchMode::Anms, workers);
            const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
            qps_sum += dt.count() > 0 ? double(queries.size()) / dt.count() : 0.0;
        }
        const auto s = summarize(results, gt, p.k);
        out.push_back({ls, graph.alpha(), p.m, graph.max_degree(), s.recall, qps_sum / double(reps), s.dist_comps,
                       s.hops});
    }
    return out;
}

/// Cheapest pool size (by bisection over [k, max_ls]) whose panel-mean recall reaches `target`.
struct MatchedPoint {
    std::size_t ls = 0;
    double recall = 0.0;
    double dist_comps = 0.0;
    double hops = 0.0;
    bool reached = false;
};

inline MatchedPoint cost_at_recall(const SearchGraph& graph, const Dataset& data, const Dataset& queries,
                                   const GroundTruth& gt, const SearchParams& base, SearchMode mode, double target,
                                   std::size_t max_ls, unsigned workers = 0) {
    auto eval = [&](std::size_t ls) {
        SearchParams p = base;
        p.ls = ls;
        const auto s = summarize(run_queries(graph, data, queries, p, mode, workers), gt, p.k);
        return MatchedPoint{ls, s.recall, s.dist_comps, s.hops, s.recall >= target};
    };
    MatchedPoint hi = eval(max_ls);
    if (!hi.reached) return hi;
    MatchedPoint lo_pt = eval(base.k);
    if (lo_pt.reached) return lo_pt;
    std::size_t lo = base.k;
    while (hi.ls - lo > 1) {
        const std::size_t mid = lo + (hi.ls - lo) / 2;
        const auto pt = eval(mid);
        if (pt.reached) {
            hi = pt;
        } else {
            lo = mid;
        }
    }
    return hi;
}

struct ScaleRow {
    std::size_t n = 0;
    MatchedPoint point;
};

struct ScalingConfig {
    SyntheticSpec family;  // n is overridden per row
    std::vector<std::size_t> sizes{1000, 4000, 16000, 64000};
    BuildParams build;
    std::size_t R = 32;
    double alpha = 0.5;
    SearchParams search;
    SearchMode mode = SearchMode::Anms;
    std::size_t queries = 200;
    double target = 0.95;
    std::size_t max_ls = 1000;
    unsigned workers = 0;
};

inline std::vector<ScaleRow> run_scaling_study(const ScalingConfig& cfg) {
    std::vector<ScaleRow> rows;
    SyntheticSpec qspec = cfg.family;
    qspec.n = cfg.queries;
    qspec.seed = mix_seed(cfg.family.seed, 0xC0FFEE);
    const Dataset queries = generate_synthetic(qspec);
    for (std::size_t n : cfg.sizes) {
        SyntheticSpec spec = cfg.family;
        spec.n = n;
        const Dataset data = generate_synthetic(spec);
        BuildParams bp = cfg.build;
        bp.workers = cfg.workers;
        const auto index = build_index(data, bp);
        const auto graph = materialize(index, cfg.R, cfg.alpha);
        const auto gt = compute_ground_truth(data, queries, cfg.search.k, MetricKind::InnerProduct, cfg.workers);
        rows.push_back({n, cost_at_recall(graph, data, queries, gt, cfg.search, cfg.mode, cfg.target,
                                          std::min(cfg.max_ls, n), cfg.workers)});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Verification suite

struct CheckResult {
    std::string name;
    bool pass = true;
    bool skipped = false;
    std::string detail;
    bool informational = false;  // reported, never fails the suite
};

inline bool suite_passed(const std::vector<CheckResult>& checks) {
    return std::all_of(checks.begin(), checks.end(),
                       [](const CheckResult& c) { return c.pass || c.skipped || c.informational; });
}

struct VerifyLimits {
    std::size_t ndg_max_n = 2000;     // exact NDG checks
    std::size_t census_max_n = 20000;
    std::size_t search_max_n = 5000;  // index build + saturated search
    std::size_t queries = 100;
    std::uint64_t seed = 42;
    unsigned workers = 0;
};

namespace detail {

// Self-dominator census through a blocked Gram matrix, as an independent route
// to the pairwise scan in self_dominator_set.
inline std::vector<node_id> self_dominators_by_gram(const Dataset& data) {
    const std::size_t n = data.size(), d = data.dim();
    constexpr std::size_t kBlock = 64;
    std::vector<double> diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = inner_product_f64(data[i], data[i]);
    std::vector<std::uint8_t> alive(n, 1);
    std::vector<double> gram(kBlock * kBlock);
    for (std::size_t bi = 0; bi < n; bi += kBlock) {
        const std::size_t ei = std::min(n, bi + kBlock);
        for (std::size_t bj = 0; bj < n; bj += kBlock) {
            const std::size_t ej = std::min(n, bj + kBlock);
            std::fill(gram.begin(), gram.end(), 0.0);
            for (std::size_t t = 0; t < d; ++t) {
                for (std::size_t i = bi; i < ei; ++i) {
                    const double xi = data[i][t];
                    for (std::size_t j = bj; j < ej; ++j) gram[(i - bi) * kBlock + (j - bj)] += xi * double(data[j][t]);
                }
            }
            for (std::size_t i = bi; i < ei; ++i) {
                for (std::size_t j = bj; j < ej; ++j) {
                    if (i != j && !(diag[i] > gram[(i - bi) * kBlock + (j - bj)])) alive[i] = 0;
                }
            }
        }
    }
    std::vector<node_id> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (alive[i]) out.push_back(static_cast<node_id>(i));
    }
    return out;
}

inline bool weakly_self_dominating(const Dataset& data, node_id y) {
    const double self = inner_product_f64(data[y], data[y]);
    for (std::size_t j = 0; j < data.size(); ++j) {
        if (j != y && self < inner_product_f64(data[y], data[j])) return false;
    }
    return true;
}

}  // namespace detail

/// Runs the structural and statistical checks that fit within `limits`. When
/// `index` is null and the dataset is small enough, a default index is built.
inline std::vector<CheckResult> verify_suite(const Dataset& data, const MagIndex* index, const VerifyLimits& limits) {
    std::vector<CheckResult> out;
    const std::size_t n = data.size();
    std::mt19937_64 rng(limits.seed);
    auto skip = [&](std::string name, std::string why) { out.push_back({std::move(name), true, true, std::move(why)}); };

    {
        CheckResult c{"metric-identity", true, false, ""};
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        double worst = 0.0;
        for (int t = 0; t < 500; ++t) {
            const auto x = data[pick(rng)], y = data[pick(rng)];
            const double l2 = euclidean_sq(x, y);
            const double nx = inner_product(x, x), ny = inner_product(y, y), ip = inner_product(x, y);
            const double scale = std::max(1.0, nx + ny);
            worst = std::max(worst, std::abs(l2 - (nx + ny - 2.0 * ip)) / scale);
            if (euclidean_sq(x, y) != euclidean_sq(y, x) || inner_product(x, y) != inner_product(y, x)) c.pass = false;
        }
        if (worst > 1e-4) c.pass = false;
        c.detail = "max relative gap " + std::to_string(worst);
        out.push_back(c);
    }

    if (n <= limits.census_max_n) {
        const auto a = self_dominator_set(data, limits.workers);
        const auto b = detail::self_dominators_by_gram(data);
        out.push_back({"self-dominator census (two routes)", a == b, false,
                       std::to_string(a.size()) + " self-dominators of " + std::to_string(n)});
    } else {
        skip("self-dominator census (two routes)", "n above census limit");
    }

    if (n >= 2 && n <= limits.ndg_max_n) {
        const auto sel = exact_ndg_selections(data, limits.workers);
        std::vector<std::vector<node_id>> adj(n);
        std::size_t violations = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t p = 0; p < sel[i].size(); ++p) {
                adj[i].push_back(sel[i][p]);
                adj[sel[i][p]].push_back(static_cast<node_id>(i));
                if (p >= 1 && !detail::weakly_self_dominating(data, sel[i][p])) ++violations;
            }
        }
        const auto scc = count_scc(adj);
        out.push_back({"exact NDG strongly connected", scc == 1, false, std::to_string(scc) + " component(s)"});
        // Selection never compares a candidate with rejected points, so later
        // entries need not be self-dominators; reported as a diagnostic only.
        out.push_back({"exact NDG: positions >= 2 are self-dominators", violations == 0, false,
                       std::to_string(violations) + " violation(s)", true});
    } else {
        skip("exact NDG strongly connected", "n outside NDG limit");
        skip("exact NDG: positions >= 2 are self-dominators", "n outside NDG limit");
    }

    {
        CheckResult c{"per-pair dominator probability (Monte-Carlo)", true, false, ""};
        double worst = 0.0;
        for (double r : {0.5, 1.0, 2.0, 3.0}) {
            const double est = dominator_probability_mc(r, 32, 20000, mix_seed(limits.seed, std::uint64_t(r * 10)));
            worst = std::max(worst, std::abs(est - dominator_probability(r)));
        }
        c.pass = worst <= 0.03 && dominator_probability(4.0) >= 0.9999;
        c.detail = "max |MC - Phi(r)| = " + std::to_string(worst);
        out.push_back(c);
    }

    {
        SyntheticSpec qs{SyntheticKind::GaussianIID, limits.queries, data.dim(), mix_seed(limits.seed, 7)};
        const Dataset queries = generate_synthetic(qs);
        double max_norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) max_norm = std::max(max_norm, double(norm(data[i])));
        // the multiplier depends on ||q||; use the smallest query norm for a common mu
        double min_q = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < queries.size(); ++i) min_q = std::min(min_q, double(norm(queries[i])));
        const double mu = 1e6 * std::max(max_norm, 1e-12) / std::max(min_q, 1e-12);
        const auto rep = verify_scaling_duality(data, queries, mu);
        out.push_back({"scaling duality (NN of mu*q = MIPS of q)", rep.answer_agreement == 1.0, false,
                       std::to_string(rep.answer_agreement) + " over " + std::to_string(rep.tie_free) +
                           " tie-free queries"});
    }

    MagIndex built;
    if (index == nullptr && n >= 3 && n <= limits.search_max_n) {
        BuildParams bp;
        bp.K = std::min<std::size_t>(32, n - 1);
        bp.K1 = std::min<std::size_t>(16, bp.K);
        bp.K2 = 16;
        bp.ls = std::max<std::size_t>(64, bp.K2);
        bp.seed = limits.seed;
        bp.workers = limits.workers;
        built = build_index(data, bp);
        index = &built;
    }
    if (index != nullptr) {
        const auto problems = validate_index(*index, index->n == n ? &data : nullptr);
        std::string detail = problems.empty() ? "ok" : problems.front();
        if (problems.size() > 1) detail += " (+" + std::to_string(problems.size() - 1) + " more)";
        out.push_back({"index structure", problems.empty(), false, detail});

        if (problems.empty() && index->n == n && n <= limits.search_max_n) {
            const std::size_t R = std::max<std::size_t>(1, index->K1 + index->K2);
            const auto graph = materialize(*index, R, 0.5);
            bool bounded = true;
            for (std::size_t i = 0; i < n; ++i) bounded = bounded && graph.neighbors(i).size() <= R;
            out.push_back({"materialized out-degree <= R", bounded, false, "R = " + std::to_string(R)});

            SyntheticSpec qs{SyntheticKind::GaussianIID, std::min<std::size_t>(limits.queries, 50), data.dim(),
                             mix_seed(limits.seed, 11)};
            const Dataset queries = generate_synthetic(qs);
            const std::size_t k = std::min<std::size_t>(10, n);
            const auto gt = compute_ground_truth(data, queries, k, MetricKind::InnerProduct, limits.workers);
            SearchParams p;
            p.ls = n;
            p.k = k;
            p.seed = limits.seed;
            const auto rec =
                mean_recall(run_queries(graph, data, queries, p, SearchMode::GreedyIp, limits.workers), gt, k);
            out.push_back({"saturated search (ls = n) is exact", rec == 1.0, false, "recall " + std::to_string(rec)});
        } else {
            skip("saturated search (ls = n) is exact", "index invalid or n above search limit");
        }
    } else {
        skip("index structure", "no index and n outside build limit");
    }
    return out;
}

}  // namespace mag
