#include <gtest/gtest.h>

#include <mag/bench.hpp>
#include <mag/stats.hpp>

#include "test_util.hpp"

using namespace mag;

TEST(Recall, HandExamples) {
    const std::vector<node_id> truth{1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(recall_at_k(std::vector<node_id>{3, 9, 1}, truth, 3), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(recall_at_k(std::vector<node_id>{3, 2, 1}, truth, 3), 1.0);
    EXPECT_DOUBLE_EQ(recall_at_k(std::vector<node_id>{7, 8, 9}, truth, 3), 0.0);
    // repeated ids count once
    EXPECT_DOUBLE_EQ(recall_at_k(std::vector<node_id>{1, 1, 1}, truth, 3), 1.0 / 3.0);
    EXPECT_THROW(recall_at_k(std::vector<node_id>{1}, truth, 5), usage_error);
    EXPECT_THROW(recall_at_k(std::vector<node_id>{1}, truth, 0), usage_error);
}

TEST(Synthetic, GaussianNormsConcentrate) {
    const auto d = generate_synthetic({SyntheticKind::GaussianIID, 10000, 32, 1});
    EXPECT_LT(coefficient_of_variation(d), 0.15);
}

TEST(Synthetic, HeavyTailSpreadsNorms) {
    const auto d = generate_synthetic({SyntheticKind::HeavyNormTail, 10000, 32, 1});
    EXPECT_GE(coefficient_of_variation(d), 0.2);
}

TEST(Synthetic, BlobsFollowRoundRobinClusters) {
    SyntheticSpec s{SyntheticKind::ClusteredBlobs, 400, 8, 5};
    s.clusters = 4;
    s.spread = 0.1;
    s.center_scale = 10.0;
    const auto d = generate_synthetic(s);
    // points i and i+4 share a centre, so they are much closer than points of different clusters
    EXPECT_LT(euclidean_sq(d[0], d[4]), euclidean_sq(d[0], d[1]));
    EXPECT_LT(euclidean_sq(d[3], d[7]), euclidean_sq(d[3], d[2]));
}

TEST(Synthetic, SameSeedSameBytes) {
    for (auto kind : {SyntheticKind::GaussianIID, SyntheticKind::ClusteredBlobs, SyntheticKind::HeavyNormTail}) {
        SyntheticSpec s{kind, 500, 16, 99};
        EXPECT_EQ(generate_synthetic(s), generate_synthetic(s));
        SyntheticSpec t = s;
        t.seed = 100;
        EXPECT_FALSE(generate_synthetic(s) == generate_synthetic(t));
    }
}

TEST(Synthetic, KindParsing) {
    EXPECT_EQ(parse_synthetic_kind("gaussian"), SyntheticKind::GaussianIID);
    EXPECT_EQ(parse_synthetic_kind("blobs"), SyntheticKind::ClusteredBlobs);
    EXPECT_EQ(parse_synthetic_kind("heavytail"), SyntheticKind::HeavyNormTail);
    EXPECT_THROW(parse_synthetic_kind("uniform"), usage_error);
}

TEST(Benchmark, RecordsFollowPoolSizes) {
    const auto data = generate_synthetic({SyntheticKind::GaussianIID, 800, 8, 3});
    const auto queries = generate_synthetic({SyntheticKind::GaussianIID, 30, 8, 4});
    BuildParams bp;
    bp.K = 24;
    bp.K1 = 12;
    bp.K2 = 12;
    bp.ls = 32;
    const auto graph = materialize(build_index(data, bp), 16, 0.5);
    const auto gt = compute_ground_truth(data, queries, 10, MetricKind::InnerProduct);
    SearchParams base;
    base.k = 10;
    base.m = 2;
    const auto recs = run_benchmark(graph, data, queries, gt, {10, 50, 200}, base, 1, 1);
    ASSERT_EQ(recs.size(), 3u);
    for (const auto& r : recs) {
        EXPECT_EQ(r.R, 16u);
        EXPECT_DOUBLE_EQ(r.alpha, 0.5);
        EXPECT_EQ(r.m, 2u);
        EXPECT_GE(r.recall, 0.0);
        EXPECT_LE(r.recall, 1.0);
        EXPECT_GT(r.dist_comps, 0.0);
    }
    EXPECT_LE(recs[0].dist_comps, recs[2].dist_comps);
    EXPECT_GE(recs[2].recall, 0.95);

    const auto pt = cost_at_recall(graph, data, queries, gt, base, SearchMode::Anms, 0.9, 200, 1);
    EXPECT_TRUE(pt.reached);
    EXPECT_GE(pt.recall, 0.9);
    EXPECT_LE(pt.ls, 200u);
}

TEST(Verify, PassesOnGaussianData) {
    const auto d = generate_synthetic({SyntheticKind::GaussianIID, 1000, 8, 17});
    const auto checks = verify_suite(d, nullptr, {});
    for (const auto& c : checks) EXPECT_TRUE(c.pass || c.informational) << c.name << ": " << c.detail;
    EXPECT_TRUE(suite_passed(checks));
    std::size_t ran = 0;
    for (const auto& c : checks) ran += c.skipped ? 0 : 1;
    EXPECT_GE(ran, 8u);
}

TEST(Verify, FlagsInjectedSelfLoop) {
    const auto d = generate_synthetic({SyntheticKind::GaussianIID, 300, 8, 17});
    BuildParams bp;
    bp.K = 16;
    bp.K1 = 8;
    bp.K2 = 8;
    bp.ls = 24;
    auto idx = build_index(d, bp);
    EXPECT_TRUE(suite_passed(verify_suite(d, &idx, {})));
    idx.euclid[0].insert(idx.euclid[0].begin(), 0);
    EXPECT_FALSE(suite_passed(verify_suite(d, &idx, {})));
}

TEST(Verify, ToleratesDuplicatedPoints) {
    const auto base = generate_synthetic({SyntheticKind::GaussianIID, 200, 6, 23});
    std::vector<float> v = base.data();
    v.insert(v.end(), base.data().begin(), base.data().end());
    const Dataset d(400, 6, std::move(v));
    // every point has a twin, so no point strictly dominates itself
    EXPECT_TRUE(self_dominator_set(d).empty());
    const auto checks = verify_suite(d, nullptr, {});
    for (const auto& c : checks) EXPECT_TRUE(c.pass || c.informational) << c.name << ": " << c.detail;
    EXPECT_TRUE(suite_passed(checks));
}
