// mag: command-line front end for building, searching and benchmarking MAG indexes.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <mag/mag.hpp>

using namespace mag;
using nlohmann::json;

namespace {

// First line of every CSV: the effective configuration as a JSON comment.
void echo_config(const json& cfg) { std::cout << '#' << cfg.dump() << '\n'; }

KnnMode parse_knn(const std::string& s) {
    if (s == "exact") return KnnMode::Exact;
    if (s == "nndescent") return KnnMode::NNDescent;
    throw usage_error("unknown --knn '" + s + "' (expected exact or nndescent)");
}

EntryPolicy parse_entry(const std::string& s) {
    if (s == "random") return EntryPolicy::RandomSeeded;
    if (s == "medoid") return EntryPolicy::FixedMedoid;
    throw usage_error("unknown --entry '" + s + "' (expected random or medoid)");
}

std::string fixed(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// ---------------------------------------------------------------------------

struct GenOpts {
    std::string kind = "gaussian";
    std::size_t n = 10000;
    std::size_t dim = 16;
    std::uint64_t seed = 42;
    std::size_t clusters = 16;
    double spread = 1.0;
    double center_scale = 4.0;
    double sigma_log = 0.5;
    std::string out;
};

void run_gen(const GenOpts& o) {
    SyntheticSpec s{parse_synthetic_kind(o.kind), o.n, o.dim, o.seed, o.clusters, o.spread, o.center_scale, o.sigma_log};
    write_fvecs(generate_synthetic(s), o.out);
    std::cerr << "wrote " << o.n << " x " << o.dim << " " << o.kind << " vectors to " << o.out << '\n';
}

struct StatsOpts {
    std::string data;
    std::size_t clusters = 16;
    std::uint64_t seed = 42;
    std::size_t census_limit = kExactCensusLimit;
    unsigned workers = 0;
    std::string format = "csv";
};

void run_stats(const StatsOpts& o) {
    const auto data = read_fvecs(o.data);
    const auto rep = compute_stats(data, o.clusters, o.seed, o.workers, o.census_limit);
    const std::string hint = tuning_hint(rep);
    if (o.format == "json") {
        json row{{"n", data.size()},
                 {"dim", data.dim()},
                 {"cv", rep.cv},
                 {"dbi_euclidean", rep.dbi_euclidean},
                 {"dbi_cosine", rep.dbi_cosine},
                 {"self_dominator_fraction", rep.self_dominator_fraction},
                 {"census", rep.census_exact ? "exact" : "sampled"},
                 {"clusters", rep.n_clusters},
                 {"hint", hint}};
        std::cout << row.dump() << '\n';
        return;
    }
    if (o.format != "csv") throw usage_error("unknown --format '" + o.format + "' (expected csv or json)");
    echo_config({{"command", "stats"}, {"data", o.data}, {"clusters", o.clusters}, {"seed", o.seed},
                 {"census_limit", o.census_limit}});
    std::cout << "n,dim,cv,dbi_euclidean,dbi_cosine,self_dominator_fraction,census\n"
              << data.size() << ',' << data.dim() << ',' << fixed(rep.cv) << ',' << fixed(rep.dbi_euclidean) << ','
              << fixed(rep.dbi_cosine) << ',' << fixed(rep.self_dominator_fraction) << ','
              << (rep.census_exact ? "exact" : "sampled") << '\n'
              << "# hint: " << hint << '\n';
}

struct GtOpts {
    std::string data, queries, out;
    std::size_t k = 100;
    std::string metric = "ip";
    unsigned workers = 0;
};

void run_gt(const GtOpts& o) {
    const auto data = read_fvecs(o.data);
    const auto queries = read_fvecs(o.queries);
    const auto gt = compute_ground_truth(data, queries, o.k, parse_metric(o.metric), o.workers);
    write_ivecs(gt, o.out);
    std::cerr << "wrote top-" << o.k << " " << o.metric << " ground truth for " << queries.size() << " queries to "
              << o.out << '\n';
}

struct BuildOpts {
    std::string data, out;
    BuildParams p;
    std::string knn = "exact";
};

void run_build(BuildOpts o) {
    const auto data = read_fvecs(o.data);
    o.p.knn = parse_knn(o.knn);
    const auto t0 = std::chrono::steady_clock::now();
    const auto idx = build_index(data, o.p);
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    save_index(idx, o.out);
    std::size_t euc = 0, ip = 0, dom = 0;
    for (std::size_t i = 0; i < idx.n; ++i) {
        euc += idx.euclid[i].size();
        ip += idx.ip[i].size();
        dom += idx.self_dominator[i];
    }
    json summary = idx.metadata;
    summary["n"] = idx.n;
    summary["dim"] = idx.dim;
    summary["avg_euclid_degree"] = double(euc) / double(idx.n);
    summary["avg_ip_degree"] = double(ip) / double(idx.n);
    summary["self_dominators"] = dom;
    summary["build_seconds"] = dt.count();
    summary["index"] = o.out;
    std::cout << summary.dump() << '\n';
}

struct SearchOpts {
    std::string index, data, queries, gt, out;
    std::size_t R = 32;
    double alpha = 0.5;
    std::size_t ls = 100;
    std::size_t k = 100;
    std::size_t m = 0;
    std::uint64_t seed = 42;
    std::string metric = "ip";
    std::string entry = "random";
    unsigned workers = 0;
};

void run_search(const SearchOpts& o) {
    const MetricKind metric = parse_metric(o.metric);
    SearchParams p;
    p.ls = o.ls;
    p.k = o.k;
    p.m = o.m;
    p.seed = o.seed;
    p.entry = parse_entry(o.entry);
    const auto idx = load_index(o.index);
    const auto data = read_fvecs(o.data);
    const auto queries = read_fvecs(o.queries);
    detail::require(idx.n == data.size() && idx.dim == data.dim(), "index does not match --data");
    const auto graph = materialize(idx, o.R, o.alpha);
    const SearchMode mode = metric == MetricKind::Euclidean ? SearchMode::GreedyL2 : SearchMode::Anms;
    const auto results = run_queries(graph, data, queries, p, mode, o.workers);

    std::optional<GroundTruth> gt;
    if (!o.gt.empty()) {
        gt = read_ivecs(o.gt, metric);
        detail::require(gt->queries() == queries.size(), "ground truth does not cover the query set");
        detail::require(gt->k >= o.k, "ground truth shallower than --k");
    }
    if (!o.out.empty()) {
        GroundTruth res{o.k, {}, metric};
        for (const auto& r : results) {
            detail::require(r.ids.size() == o.k, "search returned fewer than k results");
            res.ids.insert(res.ids.end(), r.ids.begin(), r.ids.end());
        }
        write_ivecs(res, o.out);
    }
    echo_config({{"command", "search"}, {"index", o.index}, {"queries", o.queries}, {"R", o.R}, {"alpha", o.alpha},
                 {"ls", o.ls}, {"k", o.k}, {"m", o.m}, {"seed", o.seed}, {"metric", o.metric}, {"entry", o.entry}});
    std::cout << "query,recall,dist_comps,hops,ids\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        std::cout << i << ',' << (gt ? fixed(recall_at_k(r.ids, gt->row(i), o.k), 4) : "") << ','
                  << r.stats.dist_comps << ',' << r.stats.hops << ',';
        for (std::size_t j = 0; j < r.ids.size(); ++j) std::cout << (j ? " " : "") << r.ids[j];
        std::cout << '\n';
    }
}

struct BenchOpts {
    std::string index, data, queries, gt;
    std::vector<std::size_t> ls{100, 200, 400};
    std::vector<double> alpha{0.5};
    std::vector<std::size_t> m{0};
    std::vector<std::size_t> R{32};
    std::size_t k = 100;
    std::size_t reps = 3;
    std::uint64_t seed = 42;
    std::string entry = "random";
    unsigned workers = 0;
};

void run_bench(const BenchOpts& o) {
    const EntryPolicy entry = parse_entry(o.entry);
    const auto idx = load_index(o.index);
    const auto data = read_fvecs(o.data);
    const auto queries = read_fvecs(o.queries);
    detail::require(idx.n == data.size() && idx.dim == data.dim(), "index does not match --data");
    const auto gt = read_ivecs(o.gt, MetricKind::InnerProduct);
    echo_config({{"command", "bench"}, {"index", o.index}, {"queries", o.queries}, {"gt", o.gt}, {"ls", o.ls},
                 {"alpha", o.alpha}, {"m", o.m}, {"R", o.R}, {"k", o.k}, {"reps", o.reps}, {"seed", o.seed},
                 {"entry", o.entry}, {"workers", o.workers}});
    std::cout << kBenchCsvHeader << '\n';
    SearchParams base;
    base.k = o.k;
    base.seed = o.seed;
    base.entry = entry;
    for (std::size_t R : o.R) {
        for (double alpha : o.alpha) {
            const auto graph = materialize(idx, R, alpha);
            for (std::size_t m : o.m) {
                base.m = m;
                for (const auto& r : run_benchmark(graph, data, queries, gt, o.ls, base, o.workers, o.reps)) {
                    std::cout << r.ls << ',' << r.alpha << ',' << r.m << ',' << r.R << ',' << fixed(r.recall, 4) << ','
                              << fixed(r.qps, 1) << ',' << fixed(r.dist_comps, 1) << ',' << fixed(r.hops, 1) << '\n';
                }
            }
        }
    }
}

struct ScaleOpts {
    std::string kind = "gaussian";
    std::size_t dim = 16;
    std::vector<std::size_t> sizes{1000, 4000, 16000, 64000};
    std::size_t queries = 200;
    BuildParams build;
    std::string knn = "exact";
    std::size_t R = 32;
    double alpha = 0.5;
    std::size_t m = 0;
    std::size_t k = 100;
    double target = 0.95;
    std::size_t max_ls = 3000;
    std::string entry = "medoid";
    std::uint64_t seed = 42;
    unsigned workers = 0;
};

void run_scale(ScaleOpts o) {
    ScalingConfig cfg;
    cfg.family = {parse_synthetic_kind(o.kind), 0, o.dim, o.seed};
    cfg.sizes = o.sizes;
    o.build.knn = parse_knn(o.knn);
    o.build.seed = o.seed;
    cfg.build = o.build;
    cfg.R = o.R;
    cfg.alpha = o.alpha;
    cfg.search.k = o.k;
    cfg.search.m = o.m;
    cfg.search.seed = o.seed;
    cfg.search.entry = parse_entry(o.entry);
    cfg.queries = o.queries;
    cfg.target = o.target;
    cfg.max_ls = o.max_ls;
    cfg.workers = o.workers;
    echo_config({{"command", "scale"}, {"kind", o.kind}, {"dim", o.dim}, {"sizes", o.sizes}, {"queries", o.queries},
                 {"K", o.build.K}, {"K1", o.build.K1}, {"K2", o.build.K2}, {"build_ls", o.build.ls}, {"knn", o.knn},
                 {"R", o.R}, {"alpha", o.alpha}, {"m", o.m}, {"k", o.k}, {"target", o.target},
                 {"max_ls", o.max_ls}, {"entry", o.entry}, {"seed", o.seed}});
    std::cout << "n,ls,recall,dist_comps,hops,reached\n";
    const auto rows = run_scaling_study(cfg);
    for (const auto& r : rows) {
        std::cout << r.n << ',' << r.point.ls << ',' << fixed(r.point.recall, 4) << ',' << fixed(r.point.dist_comps, 1)
                  << ',' << fixed(r.point.hops, 1) << ',' << (r.point.reached ? "yes" : "no") << '\n';
    }
    if (rows.size() >= 2 && rows.front().point.dist_comps > 0) {
        std::cout << "# comps ratio last/first: " << fixed(rows.back().point.dist_comps / rows.front().point.dist_comps, 3)
                  << '\n';
    }
}

struct VerifyOpts {
    std::string data, index;
    std::string kind = "gaussian";
    std::size_t n = 1000;
    std::size_t dim = 8;
    VerifyLimits limits;
};

int run_verify(const VerifyOpts& o) {
    const Dataset data = o.data.empty()
                             ? generate_synthetic({parse_synthetic_kind(o.kind), o.n, o.dim, o.limits.seed})
                             : read_fvecs(o.data);
    std::optional<MagIndex> idx;
    if (!o.index.empty()) idx = load_index(o.index);
    const auto checks = verify_suite(data, idx ? &*idx : nullptr, o.limits);
    for (const auto& c : checks) {
        const char* tag = c.skipped ? "SKIP" : c.pass ? "PASS" : c.informational ? "INFO" : "FAIL";
        std::cout << tag << "  " << c.name << ": " << c.detail << '\n';
    }
    const bool ok = suite_passed(checks);
    std::cout << (ok ? "all checks passed" : "verification failed") << '\n';
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MAG: metric-amphibious graph index for maximum inner product search"};
    app.require_subcommand(1);

    GenOpts gen;
    auto* g = app.add_subcommand("gen", "Generate a synthetic dataset (.fvecs)");
    g->add_option("--kind", gen.kind, "gaussian | blobs | heavytail")->capture_default_str();
    g->add_option("--n", gen.n, "Number of vectors")->capture_default_str();
    g->add_option("--dim", gen.dim, "Dimension")->capture_default_str();
    g->add_option("--seed", gen.seed)->capture_default_str();
    g->add_option("--clusters", gen.clusters, "blobs: cluster count")->capture_default_str();
    g->add_option("--spread", gen.spread, "blobs: per-coordinate std-dev around a centre")->capture_default_str();
    g->add_option("--center-scale", gen.center_scale, "blobs: std-dev of centre coordinates")->capture_default_str();
    g->add_option("--sigma-log", gen.sigma_log, "heavytail: std-dev of the log radius")->capture_default_str();
    g->add_option("--out", gen.out, "Output .fvecs")->required();

    StatsOpts stats;
    auto* st = app.add_subcommand("stats", "Dataset indicators (CV, DBI, self-dominator fraction) and a tuning hint");
    st->add_option("--data", stats.data, "Input .fvecs")->required();
    st->add_option("--clusters", stats.clusters, "k-means clusters for DBI")->capture_default_str();
    st->add_option("--seed", stats.seed)->capture_default_str();
    st->add_option("--census-limit", stats.census_limit, "Exact self-dominator census up to this n")
        ->capture_default_str();
    st->add_option("--workers", stats.workers, "0 = hardware concurrency");
    st->add_option("--format", stats.format, "csv | json")->capture_default_str();

    GtOpts gt;
    auto* gtc = app.add_subcommand("gt", "Brute-force ground truth (.ivecs)");
    gtc->add_option("--data", gt.data)->required();
    gtc->add_option("--queries", gt.queries)->required();
    gtc->add_option("--out", gt.out)->required();
    gtc->add_option("--k", gt.k)->capture_default_str();
    gtc->add_option("--metric", gt.metric, "ip | l2")->capture_default_str();
    gtc->add_option("--workers", gt.workers);

    BuildOpts build;
    auto* b = app.add_subcommand("build", "Build a MAG index");
    b->add_option("--data", build.data)->required();
    b->add_option("--out", build.out, "Output index file")->required();
    b->add_option("--K", build.p.K, "K-NN candidates per node")->capture_default_str();
    b->add_option("--K1", build.p.K1, "Euclidean edge cap")->capture_default_str();
    b->add_option("--K2", build.p.K2, "Dominator edge cap")->capture_default_str();
    b->add_option("--ls", build.p.ls, "Stage-2 search pool size")->capture_default_str();
    b->add_option("--seed", build.p.seed)->capture_default_str();
    b->add_option("--knn", build.knn, "exact | nndescent")->capture_default_str();
    b->add_option("--nndescent-iters", build.p.nndescent_iters)->capture_default_str();
    b->add_option("--workers", build.p.workers);

    SearchOpts search;
    auto* s = app.add_subcommand("search", "Query an index; one CSV row per query");
    s->add_option("--index", search.index)->required();
    s->add_option("--data", search.data, "Dataset the index was built on")->required();
    s->add_option("--queries", search.queries, "Query .fvecs")->required();
    s->add_option("--gt", search.gt, "Optional ground truth .ivecs for recall");
    s->add_option("--out", search.out, "Optional result ids .ivecs");
    s->add_option("--R", search.R, "Max out-degree")->capture_default_str();
    s->add_option("--alpha", search.alpha, "Dominator-edge ratio")->capture_default_str();
    s->add_option("--ls", search.ls, "Pool size")->capture_default_str();
    s->add_option("--k", search.k)->capture_default_str();
    s->add_option("--m", search.m, "Euclidean expansions before switching to IP")->capture_default_str();
    s->add_option("--seed", search.seed)->capture_default_str();
    s->add_option("--metric", search.metric, "ip (ANMS) | l2 (greedy Euclidean)")->capture_default_str();
    s->add_option("--entry", search.entry, "random | medoid")->capture_default_str();
    s->add_option("--workers", search.workers);

    BenchOpts bench;
    auto* bn = app.add_subcommand("bench", "Recall / QPS / distance computations sweep (CSV)");
    bn->add_option("--index", bench.index)->required();
    bn->add_option("--data", bench.data)->required();
    bn->add_option("--queries", bench.queries)->required();
    bn->add_option("--gt", bench.gt, "Inner-product ground truth .ivecs")->required();
    bn->add_option("--ls", bench.ls, "Comma-separated pool sizes")->delimiter(',')->capture_default_str();
    bn->add_option("--alpha", bench.alpha, "Comma-separated alpha values")->delimiter(',')->capture_default_str();
    bn->add_option("--m", bench.m, "Comma-separated switch positions")->delimiter(',')->capture_default_str();
    bn->add_option("--R", bench.R, "Comma-separated degree caps")->delimiter(',')->capture_default_str();
    bn->add_option("--k", bench.k)->capture_default_str();
    bn->add_option("--reps", bench.reps, "Timed repetitions per row")->capture_default_str();
    bn->add_option("--seed", bench.seed)->capture_default_str();
    bn->add_option("--entry", bench.entry, "random | medoid")->capture_default_str();
    bn->add_option("--workers", bench.workers, "Query-loop threads");

    ScaleOpts scale;
    auto* sc = app.add_subcommand("scale", "Distance computations at matched recall across dataset sizes");
    sc->add_option("--kind", scale.kind)->capture_default_str();
    sc->add_option("--dim", scale.dim)->capture_default_str();
    sc->add_option("--sizes", scale.sizes)->delimiter(',')->capture_default_str();
    sc->add_option("--queries", scale.queries)->capture_default_str();
    sc->add_option("--K", scale.build.K)->capture_default_str();
    sc->add_option("--K1", scale.build.K1)->capture_default_str();
    sc->add_option("--K2", scale.build.K2)->capture_default_str();
    sc->add_option("--build-ls", scale.build.ls, "Stage-2 pool size")->capture_default_str();
    sc->add_option("--knn", scale.knn)->capture_default_str();
    sc->add_option("--R", scale.R)->capture_default_str();
    sc->add_option("--alpha", scale.alpha)->capture_default_str();
    sc->add_option("--m", scale.m)->capture_default_str();
    sc->add_option("--k", scale.k)->capture_default_str();
    sc->add_option("--target", scale.target, "Recall target")->capture_default_str();
    sc->add_option("--max-ls", scale.max_ls)->capture_default_str();
    sc->add_option("--entry", scale.entry)->capture_default_str();
    sc->add_option("--seed", scale.seed)->capture_default_str();
    sc->add_option("--workers", scale.workers);

    VerifyOpts verify;
    auto* v = app.add_subcommand("verify", "Run the invariant checks; nonzero exit on failure");
    v->add_option("--data", verify.data, "Input .fvecs (otherwise a synthetic dataset is generated)");
    v->add_option("--index", verify.index, "Index to validate against the dataset");
    v->add_option("--kind", verify.kind)->capture_default_str();
    v->add_option("--n", verify.n)->capture_default_str();
    v->add_option("--dim", verify.dim)->capture_default_str();
    v->add_option("--seed", verify.limits.seed)->capture_default_str();
    v->add_option("--queries", verify.limits.queries)->capture_default_str();
    v->add_option("--ndg-max-n", verify.limits.ndg_max_n)->capture_default_str();
    v->add_option("--census-max-n", verify.limits.census_max_n)->capture_default_str();
    v->add_option("--search-max-n", verify.limits.search_max_n)->capture_default_str();
    v->add_option("--workers", verify.limits.workers);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*g) run_gen(gen);
        if (*st) run_stats(stats);
        if (*gtc) run_gt(gt);
        if (*b) run_build(build);
        if (*s) run_search(search);
        if (*bn) run_bench(bench);
        if (*sc) run_scale(scale);
        if (*v) return run_verify(verify);
    } catch (const usage_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
