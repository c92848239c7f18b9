#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include <mag/index.hpp>
#include <mag/io.hpp>
#include <mag/search.hpp>

#include "test_util.hpp"

using namespace mag;
namespace fs = std::filesystem;

namespace {

std::set<node_id> edge_set(const SearchGraph& g, std::size_t i) {
    return {g.neighbors(i).begin(), g.neighbors(i).end()};
}

MagIndex small_index(std::uint64_t seed = 1, unsigned workers = 1) {
    static const Dataset d = fixtures::gaussian(400, 8, 77);
    BuildParams p;
    p.K = 24;
    p.K1 = 12;
    p.K2 = 12;
    p.ls = 40;
    p.seed = seed;
    p.workers = workers;
    return build_index(d, p);
}

// Hand-made index: node 0 carries the lists under test, everything else is empty.
MagIndex hand_index(std::vector<node_id> euclid0, std::vector<node_id> ip0, std::size_t n) {
    MagIndex idx;
    idx.n = n;
    idx.dim = 1;
    idx.K1 = 32;
    idx.K2 = 32;
    idx.euclid.assign(n, {});
    idx.ip.assign(n, {});
    idx.euclid[0] = std::move(euclid0);
    idx.ip[0] = std::move(ip0);
    idx.self_dominator.assign(n, 0);
    idx.metadata = {{"medoid", 0}};
    return idx;
}

fs::path temp_file(const std::string& name) { return fs::temp_directory_path() / ("mag_test_" + name); }

std::vector<char> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Stage1, CollinearHandExample) {
    const auto d = fixtures::points(1, {0, 1, 3});
    const auto idx = build_stage1(d, 2, 2, KnnMode::Exact, 0, 1);
    // 3 is farther from 0 (9) than from 1 (4), so it is pruned
    EXPECT_EQ(idx.euclid[0], (std::vector<node_id>{1}));
    EXPECT_EQ(idx.euclid[2], (std::vector<node_id>{1}));
    const auto one = build_stage1(d, 2, 1, KnnMode::Exact, 0, 1);
    for (std::size_t i = 0; i < 3; ++i) ASSERT_EQ(one.euclid[i].size(), 1u);
    EXPECT_EQ(one.euclid[0][0], 1u);
    EXPECT_EQ(one.euclid[1][0], 0u);
}

TEST(Stage1, EdgesComeFromKnnAndRespectCap) {
    const auto d = fixtures::gaussian(300, 6, 9);
    const auto knn = build_exact_knn(d, 20);
    const auto idx = build_stage1(d, 20, 8, KnnMode::Exact, 0);
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_LE(idx.euclid[i].size(), 8u);
        ASSERT_FALSE(idx.euclid[i].empty());
        EXPECT_EQ(idx.euclid[i][0], knn.row(i)[0].id);
        for (node_id v : idx.euclid[i]) {
            bool found = false;
            for (const auto& s : knn.row(i)) found |= s.id == v;
            EXPECT_TRUE(found);
        }
    }
    EXPECT_TRUE(validate_index(idx, &d).empty());
}

TEST(Stage1, ParameterErrors) {
    const auto d = fixtures::gaussian(10, 2, 1);
    EXPECT_THROW(build_stage1(d, 10, 4, KnnMode::Exact, 0), usage_error);
    EXPECT_THROW(build_stage1(d, 5, 6, KnnMode::Exact, 0), usage_error);
    EXPECT_THROW(build_stage1(d, 5, 0, KnnMode::Exact, 0), usage_error);
}

TEST(Stage2, SaturatedPoolMatchesExactSelectionTruncated) {
    const auto d = fixtures::gaussian(1000, 8, 21);
    const auto s1 = build_stage1(d, 16, 8, KnnMode::Exact, 3);
    const auto idx = build_stage2(s1, d, 16, d.size(), 3);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto id = static_cast<node_id>(i);
        EXPECT_EQ(idx.ip[i], ndg_select(id, ranked_others(d, id, MetricKind::InnerProduct), d, 16)) << "node " << i;
    }
}

TEST(Stage2, ZeroK2KeepsStageOne) {
    const auto d = fixtures::gaussian(200, 4, 2);
    const auto s1 = build_stage1(d, 10, 6, KnnMode::Exact, 0);
    EXPECT_EQ(build_stage2(s1, d, 0, 50, 0), s1);
}

TEST(Stage2, DominantPointLeadsDominatorLists) {
    const auto base = fixtures::gaussian(40, 4, 5);
    std::vector<float> v = base.data();
    v.insert(v.end(), {60.0f, 0.0f, 0.0f, 0.0f});
    const Dataset d(41, 4, std::move(v));
    const node_id z = 40;
    const auto s1 = build_stage1(d, 8, 4, KnnMode::Exact, 0);
    const auto idx = build_stage2(s1, d, 8, d.size(), 0);
    std::size_t checked = 0;
    for (std::size_t i = 0; i < 40; ++i) {
        // z is the MIPS answer of x whenever 60 x_0 beats every other <x, y>
        const auto top = brute_force_topk(d, d[i], 2, MetricKind::InnerProduct);
        const node_id best = top[0] == i ? top[1] : top[0];
        if (best != z) continue;
        ++checked;
        ASSERT_FALSE(idx.ip[i].empty());
        EXPECT_EQ(idx.ip[i].front(), z) << "node " << i;
    }
    EXPECT_GT(checked, 10u);
}

TEST(Stage2, ConnectivityCarriesOverFromStageOne) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const auto d = fixtures::gaussian(500, 6, 300 + seed);
        const auto s1 = build_stage1(d, 24, 12, KnnMode::Exact, seed);
        if (count_scc(s1.euclid) != 1) continue;
        const auto idx = build_stage2(s1, d, 12, d.size(), seed);
        for (double alpha : {0.25, 0.5}) {
            // R large enough that every stage-1 edge is loaded
            const std::size_t R = 12 + ip_quota(48, alpha) + 12;
            const auto g = materialize(idx, R, alpha);
            for (std::size_t i = 0; i < d.size(); ++i) {
                for (node_id v : s1.euclid[i]) ASSERT_TRUE(edge_set(g, i).count(v));
            }
            EXPECT_EQ(count_scc(g.adjacency()), 1u) << "seed " << seed << " alpha " << alpha;
        }
    }
}

TEST(Stage2, MipsAnswerReachableFromAnyStart) {
    const auto d = fixtures::gaussian(600, 8, 41);
    const auto queries = fixtures::gaussian(100, 8, 42);
    const auto s1 = build_stage1(d, 24, 12, KnnMode::Exact, 1);
    const auto idx = build_stage2(s1, d, 12, d.size(), 1);
    const auto merged = materialize(idx, 24, 0.5);
    SearchParams p;
    p.ls = d.size();
    p.k = 1;
    p.entry = EntryPolicy::FixedMedoid;
    for (node_id start : {node_id{0}, node_id{123}, node_id{599}}) {
        const SearchGraph g(merged.adjacency(), {}, 24, 0.5, start);
        for (std::size_t qi = 0; qi < queries.size(); ++qi) {
            const auto r = greedy_search(g, d, queries[qi], p, MetricKind::InnerProduct);
            const auto truth = brute_force_topk(d, queries[qi], 1, MetricKind::InnerProduct);
            EXPECT_NEAR(inner_product_f64(queries[qi], d[r.ids[0]]), inner_product_f64(queries[qi], d[truth[0]]), 1e-4)
                << "start " << start << " query " << qi;
        }
    }
}

TEST(Stage2, FlagsMatchCensusAndValidate) {
    const Dataset d = fixtures::gaussian(400, 8, 77);
    const auto idx = small_index();
    std::vector<std::uint8_t> expect(d.size(), 0);
    for (node_id v : self_dominator_set(d)) expect[v] = 1;
    EXPECT_EQ(idx.self_dominator, expect);
    EXPECT_TRUE(validate_index(idx, &d).empty());
    EXPECT_EQ(idx.metadata.at("K2"), 12);
    EXPECT_EQ(idx.metadata.at("knn"), "exact");
}

TEST(Build, DeterministicAcrossWorkerCounts) {
    EXPECT_EQ(small_index(5, 1), small_index(5, 4));
    EXPECT_EQ(small_index(5, 2), small_index(5, 3));
}

TEST(Build, NNDescentModeIsValid) {
    const auto d = fixtures::gaussian(600, 8, 8);
    BuildParams p;
    p.K = 20;
    p.K1 = 10;
    p.K2 = 10;
    p.ls = 30;
    p.knn = KnnMode::NNDescent;
    const auto idx = build_index(d, p);
    EXPECT_TRUE(validate_index(idx, &d).empty());
    EXPECT_EQ(idx.metadata.at("knn"), "nndescent");
}

TEST(Validate, DetectsInjectedFaults) {
    const Dataset d = fixtures::gaussian(400, 8, 77);
    auto idx = small_index();
    idx.euclid[3].push_back(3);
    EXPECT_FALSE(validate_index(idx, &d).empty());
    idx = small_index();
    idx.ip[7].push_back(idx.ip[7].front());
    EXPECT_FALSE(validate_index(idx).empty());
    idx = small_index();
    std::swap(idx.euclid[1][0], idx.euclid[1][1]);
    EXPECT_FALSE(validate_index(idx, &d).empty());
    idx = small_index();
    idx.self_dominator[0] ^= 1;
    EXPECT_FALSE(validate_index(idx, &d).empty());
}

TEST(Persistence, RoundTripIsByteIdentical) {
    const auto idx = small_index();
    const auto a = temp_file("rt_a.mag"), b = temp_file("rt_b.mag");
    save_index(idx, a);
    const auto loaded = load_index(a);
    EXPECT_EQ(loaded, idx);
    save_index(loaded, b);
    EXPECT_EQ(slurp(a), slurp(b));
    fs::remove(a);
    fs::remove(b);
}

TEST(Persistence, RejectsCorruptFiles) {
    const auto bytes = serialize_index(small_index());
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    EXPECT_THROW(deserialize_index(bad_magic), format_error);
    auto bad_version = bytes;
    bad_version[4] = 2;
    EXPECT_THROW(deserialize_index(bad_version), format_error);
    for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
        std::vector<char> truncated(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
        EXPECT_THROW(deserialize_index(truncated), format_error) << "cut at " << cut;
    }
    auto trailing = bytes;
    trailing.push_back('\0');
    EXPECT_THROW(deserialize_index(trailing), format_error);
    EXPECT_THROW(load_index(temp_file("does_not_exist.mag")), io_error);
}

TEST(IpQuota, RoundsUpWithoutFloatingPointDrift) {
    EXPECT_EQ(ip_quota(10, 0.3), 3u);
    EXPECT_EQ(ip_quota(10, 0.25), 3u);
    EXPECT_EQ(ip_quota(10, 0.0), 0u);
    EXPECT_EQ(ip_quota(10, 1.0), 10u);
    EXPECT_EQ(ip_quota(7, 0.5), 4u);
    EXPECT_EQ(ip_quota(32, 0.5), 16u);
}

TEST(Materialize, QuotaSplit) {
    std::vector<node_id> euc, ip{1, 2, 3, 4, 5};
    for (node_id v = 6; v <= 20; ++v) euc.push_back(v);
    const auto idx = hand_index(euc, ip, 21);
    const auto g = materialize(idx, 10, 0.3);
    EXPECT_EQ(g.ip_count(0), 3u);
    const std::vector<node_id> want{1, 2, 3, 6, 7, 8, 9, 10, 11, 12};
    EXPECT_EQ(std::vector<node_id>(g.neighbors(0).begin(), g.neighbors(0).end()), want);

    const auto g0 = materialize(idx, 10, 0.0);
    EXPECT_EQ(g0.ip_count(0), 0u);
    EXPECT_EQ(g0.neighbors(0).size(), 10u);
    EXPECT_EQ(g0.neighbors(0)[0], 6u);

    // only 5 dominators exist; the Euclidean quota stays at zero
    const auto g1 = materialize(idx, 10, 1.0);
    EXPECT_EQ(g1.ip_count(0), 5u);
    EXPECT_EQ(g1.neighbors(0).size(), 5u);
}

TEST(Materialize, CrossKindDuplicatesFreeTheSlot) {
    const auto idx = hand_index({2, 6, 7, 8, 9}, {1, 2, 3}, 10);
    const auto g = materialize(idx, 5, 0.4);
    EXPECT_EQ(std::vector<node_id>(g.neighbors(0).begin(), g.neighbors(0).end()),
              (std::vector<node_id>{1, 2, 6, 7, 8}));
}

TEST(Materialize, Errors) {
    const auto idx = hand_index({1}, {1}, 2);
    EXPECT_THROW(materialize(idx, 0, 0.5), usage_error);
    EXPECT_THROW(materialize(idx, 4, -0.1), usage_error);
    EXPECT_THROW(materialize(idx, 4, 1.1), usage_error);
}

TEST(MaterializeProperty, DegreeBoundMonotoneAndDeterministic) {
    const auto idx = small_index();
    for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        SearchGraph prev;
        for (std::size_t R = 1; R <= 24; ++R) {
            const auto g = materialize(idx, R, alpha);
            EXPECT_EQ(g, materialize(idx, R, alpha));
            for (std::size_t i = 0; i < g.size(); ++i) {
                EXPECT_LE(g.neighbors(i).size(), R);
                EXPECT_LE(g.ip_count(i), ip_quota(R, alpha));
                const auto s = edge_set(g, i);
                EXPECT_EQ(s.size(), g.neighbors(i).size());
                EXPECT_EQ(s.count(static_cast<node_id>(i)), 0u);
                if (R > 1) {
                    const auto p = edge_set(prev, i);
                    EXPECT_TRUE(std::includes(s.begin(), s.end(), p.begin(), p.end())) << "R " << R << " node " << i;
                }
            }
            prev = g;
        }
    }
}
