// Build an index over synthetic data, query it with ANMS and report recall@10.

#include <iostream>

#include <mag/mag.hpp>

int main() {
    using namespace mag;

    const Dataset base = generate_synthetic({SyntheticKind::HeavyNormTail, 5000, 32, 1});
    const Dataset queries = generate_synthetic({SyntheticKind::HeavyNormTail, 100, 32, 2});

    BuildParams bp;
    bp.K = 64;
    bp.K1 = 32;
    bp.K2 = 32;
    const MagIndex index = build_index(base, bp);

    // 32 edges per node, half of them dominator edges.
    const SearchGraph graph = materialize(index, 32, 0.5);

    SearchParams sp;
    sp.ls = 200;
    sp.k = 10;
    const auto gt = compute_ground_truth(base, queries, sp.k, MetricKind::InnerProduct);

    // m = 0 is pure inner-product search; m > 0 walks Euclidean edges first.
    for (std::size_t m : {0, 4}) {
        sp.m = m;
        const auto results = run_queries(graph, base, queries, sp, SearchMode::Anms);
        const auto summary = summarize(results, gt, sp.k);
        std::cout << "m=" << m << "  recall@10 " << summary.recall << ", distance computations per query "
                  << summary.dist_comps << ", hops " << summary.hops << '\n';
    }
}
