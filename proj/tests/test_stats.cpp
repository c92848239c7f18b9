#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include <mag/bench.hpp>
#include <mag/stats.hpp>

#include "test_util.hpp"

using namespace mag;

TEST(CoefficientOfVariation, HandValues) {
    EXPECT_NEAR(coefficient_of_variation(fixtures::points(2, {3, 4, 5, 0, 0, -5})), 0.0, 1e-12);
    // norms 1 and 3: population sigma 1, mean 2
    EXPECT_NEAR(coefficient_of_variation(fixtures::points(2, {1, 0, 0, 3})), 0.5, 1e-12);
}

TEST(CoefficientOfVariation, Errors) {
    EXPECT_THROW(coefficient_of_variation(fixtures::points(2, {0, 0, 0, 0})), usage_error);
    EXPECT_THROW(coefficient_of_variation(fixtures::points(2, {1, 1})), usage_error);
}

TEST(CoefficientOfVariation, ScaleInvariant) {
    const auto d = generate_synthetic({SyntheticKind::HeavyNormTail, 500, 8, 3});
    std::vector<float> scaled(d.data());
    for (auto& v : scaled) v *= 7.5f;
    EXPECT_NEAR(coefficient_of_variation(d), coefficient_of_variation(Dataset(d.size(), d.dim(), scaled)), 1e-5);
}

TEST(KMeans, SeparatesTwoBlobs) {
    std::mt19937_64 rng(1);
    std::normal_distribution<float> g(0.0f, 0.3f);
    std::vector<float> v;
    std::vector<int> label;
    for (int i = 0; i < 200; ++i) {
        const float cx = i % 2 == 0 ? -10.0f : 10.0f;
        v.push_back(cx + g(rng));
        v.push_back(g(rng));
        label.push_back(i % 2);
    }
    const Dataset d(200, 2, v);
    const auto c = kmeans(d, 2, ClusterMetric::Euclidean, 5);
    // purity: each cluster is label-homogeneous
    std::set<std::pair<int, std::uint32_t>> seen;
    for (int i = 0; i < 200; ++i) seen.insert({label[i], c.assignment[i]});
    EXPECT_EQ(seen.size(), 2u);
    EXPECT_EQ(kmeans(d, 2, ClusterMetric::Euclidean, 5), c);
}

TEST(KMeans, SingleClusterIsTheMean) {
    const auto d = fixtures::points(2, {0, 0, 2, 0, 4, 6});
    const auto c = kmeans(d, 1, ClusterMetric::Euclidean, 0);
    EXPECT_EQ(c.assignment, (std::vector<std::uint32_t>{0, 0, 0}));
    EXPECT_FLOAT_EQ(c.centroids[0], 2.0f);
    EXPECT_FLOAT_EQ(c.centroids[1], 2.0f);
}

TEST(KMeans, TooManyClustersForDistinctPoints) {
    const auto d = fixtures::points(2, {1, 1, 1, 1, 2, 2});
    EXPECT_THROW(kmeans(d, 3, ClusterMetric::Euclidean, 0), usage_error);
    EXPECT_NO_THROW(kmeans(d, 2, ClusterMetric::Euclidean, 0));
    // (1,1) and (2,2) share a direction
    EXPECT_THROW(kmeans(d, 2, ClusterMetric::Cosine, 0), usage_error);
}

TEST(KMeans, CosineCentroidsAreUnitLength) {
    const auto d = fixtures::gaussian(300, 5, 8);
    const auto c = kmeans(d, 4, ClusterMetric::Cosine, 2);
    for (std::size_t a = 0; a < 4; ++a) {
        double s = 0;
        for (std::size_t j = 0; j < 5; ++j) s += double(c.centroids[a * 5 + j]) * c.centroids[a * 5 + j];
        EXPECT_NEAR(s, 1.0, 1e-5);
    }
}

namespace {
Clustering labels(std::size_t k, std::vector<std::uint32_t> a) { return {k, std::move(a), {}}; }
}  // namespace

TEST(DaviesBouldin, HandComputedTwoClusters) {
    const auto d = fixtures::points(2, {0, 0, 0, 1, 10, 0, 10, 1});
    EXPECT_NEAR(davies_bouldin(d, labels(2, {0, 0, 1, 1}), ClusterMetric::Euclidean), 0.1, 1e-12);
}

TEST(DaviesBouldin, FartherApartIsLower) {
    const auto near = fixtures::points(2, {0, 0, 0, 1, 10, 0, 10, 1});
    const auto far = fixtures::points(2, {0, 0, 0, 1, 20, 0, 20, 1});
    EXPECT_LT(davies_bouldin(far, labels(2, {0, 0, 1, 1}), ClusterMetric::Euclidean),
              davies_bouldin(near, labels(2, {0, 0, 1, 1}), ClusterMetric::Euclidean));
}

TEST(DaviesBouldin, SingletonsGiveZero) {
    EXPECT_EQ(davies_bouldin(fixtures::points(2, {0, 0, 3, 4}), labels(2, {0, 1}), ClusterMetric::Euclidean), 0.0);
}

TEST(DaviesBouldin, Errors) {
    const auto d = fixtures::points(2, {0, 0, 2, 2, 1, 1, 1, 1});
    // both clusters centred at (1,1)
    EXPECT_THROW(davies_bouldin(d, labels(2, {0, 0, 1, 1}), ClusterMetric::Euclidean), usage_error);
    EXPECT_THROW(davies_bouldin(d, labels(1, {0, 0, 0, 0}), ClusterMetric::Euclidean), usage_error);
    EXPECT_THROW(davies_bouldin(fixtures::points(2, {0, 0, 1, 0}), labels(2, {0, 1}), ClusterMetric::Cosine),
                 usage_error);
}

TEST(DaviesBouldin, CosineUsesAngularSeparation) {
    // two directions at 90 degrees; members are parallel to their centroid -> spread 0
    const auto d = fixtures::points(2, {1, 0, 5, 0, 0, 2, 0, 9});
    EXPECT_NEAR(davies_bouldin(d, labels(2, {0, 0, 1, 1}), ClusterMetric::Cosine), 0.0, 1e-12);
}

TEST(DaviesBouldin, EuclideanScaleInvariant) {
    const auto d = generate_synthetic({SyntheticKind::ClusteredBlobs, 400, 6, 4, 4});
    const auto c = kmeans(d, 4, ClusterMetric::Euclidean, 1);
    std::vector<float> scaled(d.data());
    for (auto& v : scaled) v *= 3.0f;
    EXPECT_NEAR(davies_bouldin(d, c, ClusterMetric::Euclidean),
                davies_bouldin(Dataset(d.size(), d.dim(), scaled), c, ClusterMetric::Euclidean), 1e-5);
}

TEST(SelfDominators, HandExample) {
    // a=(2,0), b=(0,2), c=(0.9,0.9): <c,c>=1.62 < <c,a>=1.8
    const auto d = fixtures::points(2, {2, 0, 0, 2, 0.9f, 0.9f});
    EXPECT_EQ(self_dominator_set(d), (std::vector<node_id>{0, 1}));
}

TEST(SelfDominators, SingletonAndDuplicates) {
    EXPECT_EQ(self_dominator_set(fixtures::points(3, {1, 2, 3})), (std::vector<node_id>{0}));
    EXPECT_TRUE(self_dominator_set(fixtures::points(2, {1, 1, 1, 1, 1, 1})).empty());
}

namespace {
// Independent census via the full Gram matrix.
std::vector<node_id> census_by_matrix(const Dataset& d) {
    const std::size_t n = d.size();
    std::vector<double> gram(n * n, 0.0);
    for (std::size_t t = 0; t < d.dim(); ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) gram[i * n + j] += double(d[i][t]) * double(d[j][t]);
        }
    }
    std::vector<node_id> out;
    for (std::size_t i = 0; i < n; ++i) {
        bool ok = true;
        for (std::size_t j = 0; j < n && ok; ++j) ok = j == i || gram[i * n + i] > gram[i * n + j];
        if (ok) out.push_back(static_cast<node_id>(i));
    }
    return out;
}
}  // namespace

TEST(SelfDominatorsProperty, AgreesWithMatrixRoute) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const auto d = seed % 2 ? fixtures::gaussian(300 + 100 * seed, 4 + seed, seed)
                                : generate_synthetic({SyntheticKind::HeavyNormTail, 400, 8, seed});
        EXPECT_EQ(self_dominator_set(d, 2), census_by_matrix(d));
        EXPECT_EQ(detail::self_dominators_by_gram(d), census_by_matrix(d));
    }
}

TEST(SelfDominatorsProperty, AddingPointsOnlyRemovesDominators) {
    const auto big = fixtures::gaussian(800, 6, 17);
    std::vector<node_id> prev;
    std::size_t prev_n = 0;
    for (std::size_t n : {100u, 200u, 400u, 800u}) {
        std::vector<float> prefix(big.data().begin(), big.data().begin() + static_cast<std::ptrdiff_t>(n * 6));
        const auto cur = self_dominator_set(Dataset(n, 6, prefix));
        // a point of the smaller prefix that dominates in the larger one dominated there too
        for (node_id v : cur) {
            if (v < prev_n) EXPECT_TRUE(std::binary_search(prev.begin(), prev.end(), v)) << "node " << v;
        }
        std::size_t survivors = 0;
        for (node_id v : cur) survivors += v < prev_n ? 1 : 0;
        if (prev_n) EXPECT_LE(survivors, prev.size());
        prev = cur;
        prev_n = n;
    }
}

TEST(DominatorProbability, KnownValues) {
    EXPECT_NEAR(dominator_probability(0.0), 0.5, 1e-12);
    EXPECT_NEAR(dominator_probability(4.0), 0.99997, 1e-5);
    EXPECT_NEAR(dominator_probability(1.0), 0.8413447460685429, 1e-7);
    EXPECT_THROW(dominator_probability(-1.0), usage_error);
}

TEST(DominatorProbability, MonteCarloMatchesPhi) {
    for (double r : {0.5, 1.0, 2.0, 3.0}) {
        EXPECT_NEAR(dominator_probability_mc(r, 32, 20000, 99), dominator_probability(r), 0.03) << "r=" << r;
    }
    EXPECT_EQ(dominator_probability_mc(1.0, 32, 1000, 5), dominator_probability_mc(1.0, 32, 1000, 5));
}

TEST(ExpectedSelfDominators, ClosedForms) {
    EXPECT_NEAR(expected_self_dominators(1000, 7, 0.0), 1000.0, 1e-9);
    // d = 2: Q(1, u) = exp(-u) with u = r^2 / 2 = ln 2
    EXPECT_NEAR(expected_self_dominators(1000, 2, std::sqrt(2.0 * std::numbers::ln2)), 500.0, 1e-9);
    EXPECT_NEAR(expected_self_dominators(1000, 16, 1e3), 0.0, 1e-12);
    EXPECT_EQ(expected_self_dominators(1000, 16, std::numeric_limits<double>::infinity()), 0.0);
}

TEST(EstimateNnAngle, HandArithmetic) {
    EXPECT_NEAR(estimate_nn_angle(100, 10, 0.5), 0.0, 1e-12);  // argument 1.209 clamps to 1
    const double arg = (std::log(100.0) + 50.0 * std::log(1.0 / 0.75)) / 50.0;
    EXPECT_NEAR(arg, 0.3798, 1e-4);
    EXPECT_NEAR(estimate_nn_angle(100, 100, 0.5), std::acos(arg), 1e-12);
    EXPECT_NEAR(estimate_nn_angle(100, 100, 0.5), 1.181, 1e-3);
    EXPECT_NEAR(estimate_nn_angle(1e30, 100, 0.5), 0.0, 1e-12);
    EXPECT_THROW(estimate_nn_angle(100, 10, 0.0), usage_error);
    EXPECT_THROW(estimate_nn_angle(100, 10, 1.0), usage_error);
}

TEST(StatsReport, GaussianVersusHeavyTail) {
    const auto g = generate_synthetic({SyntheticKind::GaussianIID, 2000, 32, 1});
    const auto h = generate_synthetic({SyntheticKind::HeavyNormTail, 2000, 32, 1});
    const auto rg = compute_stats(g, 8, 1, 1);
    const auto rh = compute_stats(h, 8, 1, 1);
    EXPECT_LT(rg.cv, 0.15);
    EXPECT_GE(rh.cv, 0.2);
    EXPECT_GT(rg.self_dominator_fraction, rh.self_dominator_fraction);
    EXPECT_TRUE(rg.census_exact);
    EXPECT_EQ(compute_stats(g, 8, 1, 4).dbi_cosine, rg.dbi_cosine);
    const auto hint = tuning_hint(rh);
    EXPECT_TRUE(hint.find("raise alpha") != std::string::npos || hint.find("larger alpha") != std::string::npos)
        << hint;
}
