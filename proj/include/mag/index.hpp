#pragma once

// Metric-amphibious graph index: Euclidean (MRNG-pruned) edges plus injected
// inner-product dominator edges, its binary file format, and runtime loading
// under an out-degree cap R and IP-edge ratio alpha.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "knn.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "prune.hpp"
#include "search.hpp"
#include "search_graph.hpp"
#include "stats.hpp"

namespace mag {

inline constexpr std::uint32_t kIndexVersion = 1;
inline constexpr char kIndexMagic[4] = {'M', 'A', 'G', '1'};
/// Above this size self-dominator flags come from the stage-2 search instead of an exact census.
inline constexpr std::size_t kExactCensusLimit = 20000;

struct MagIndex {
    std::size_t n = 0;
    std::size_t dim = 0;
    std::uint32_t K1 = 0;
    std::uint32_t K2 = 0;
    std::vector<std::vector<node_id>> euclid;  // ascending distance
    std::vector<std::vector<node_id>> ip;      // descending inner product
    std::vector<std::uint8_t> self_dominator;
    nlohmann::json metadata = nlohmann::json::object();

    node_id entry() const { return metadata.value("medoid", node_id{0}); }

    friend bool operator==(const MagIndex& a, const MagIndex& b) {
        return a.n == b.n && a.dim == b.dim && a.K1 == b.K1 && a.K2 == b.K2 && a.euclid == b.euclid &&
               a.ip == b.ip && a.self_dominator == b.self_dominator && a.metadata == b.metadata;
    }
};

struct BuildParams {
    std::size_t K = 64;    // K-NN candidates per node
    std::size_t K1 = 32;   // Euclidean edge cap
    std::size_t K2 = 32;   // dominator edge cap
    std::size_t ls = 100;  // stage-2 pool size
    std::uint64_t seed = 42;
    KnnMode knn = KnnMode::Exact;
    std::size_t nndescent_iters = 10;
    unsigned workers = 0;
};

/// Point closest to the dataset mean (lowest id on ties).
inline node_id approximate_medoid(const Dataset& data) {
    std::vector<double> mean(data.dim(), 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t j = 0; j < data.dim(); ++j) mean[j] += data[i][j];
    }
    for (auto& v : mean) v /= double(data.size());
    node_id best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < data.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < data.dim(); ++j) s += (data[i][j] - mean[j]) * (data[i][j] - mean[j]);
        if (s < bd) {
            bd = s;
            best = static_cast<node_id>(i);
        }
    }
    return best;
}

/// Stage 1: K-NN graph sparsified with MRNG pruning, at most K1 edges per node.
inline MagIndex build_stage1(const Dataset& data, std::size_t K, std::size_t K1, KnnMode mode, std::uint64_t seed,
                             unsigned workers = 0, std::size_t nndescent_iters = 10) {
    const std::size_t n = data.size();
    detail::require(n >= 2, "index needs at least two points");
    detail::require(K >= 1 && K < n, "K must be in [1, n)");
    detail::require(K1 >= 1 && K1 <= K, "K1 must be in [1, K]");

    const KnnGraph knn =
        mode == KnnMode::Exact ? build_exact_knn(data, K, workers) : build_nndescent_knn(data, K, seed, nndescent_iters, workers);

    MagIndex idx;
    idx.n = n;
    idx.dim = data.dim();
    idx.K1 = static_cast<std::uint32_t>(K1);
    idx.K2 = 0;
    idx.euclid.resize(n);
    idx.ip.resize(n);
    parallel_for(n, workers, [&](std::size_t i) {
        idx.euclid[i] = mrng_prune(static_cast<node_id>(i), knn.row(i), data, K1);
    });
    idx.self_dominator.assign(n, 0);
    if (n <= kExactCensusLimit) {
        for (node_id v : self_dominator_set(data, workers)) idx.self_dominator[v] = 1;
    }
    idx.metadata = {{"K", K},
                    {"K1", K1},
                    {"knn", mode == KnnMode::Exact ? "exact" : "nndescent"},
                    {"nndescent_iters", mode == KnnMode::Exact ? 0 : nndescent_iters},
                    {"seed", seed},
                    {"medoid", approximate_medoid(data)},
                    {"census", n <= kExactCensusLimit ? "exact" : "search"}};
    return idx;
}

/// Stage 2: for each point, an IP greedy search on the stage-1 graph collects its
/// best inner-product candidates; dominator selection keeps at most K2 of them.
inline MagIndex build_stage2(const MagIndex& stage1, const Dataset& data, std::size_t K2, std::size_t ls,
                             std::uint64_t seed, unsigned workers = 0) {
    detail::require(stage1.n == data.size() && stage1.dim == data.dim(), "stage-1 index does not match dataset");
    if (K2 == 0) return stage1;
    detail::require(ls >= K2, "stage-2 pool size must be >= K2");
    const std::size_t n = data.size();
    const SearchGraph g(stage1.euclid, {}, stage1.K1, 0.0, stage1.entry());

    MagIndex idx = stage1;
    idx.K2 = static_cast<std::uint32_t>(K2);
    const bool exact_census = n <= kExactCensusLimit;
    std::vector<std::uint8_t> first_in_own(n, 0);

    const unsigned w = workers == 0 ? default_workers() : workers;
    const std::size_t blocks = std::min<std::size_t>(w, n);
    parallel_for(blocks, w, [&](std::size_t b) {
        Searcher searcher(g, data);
        const std::size_t lo = b * n / blocks, hi = (b + 1) * n / blocks;
        for (std::size_t i = lo; i < hi; ++i) {
            const auto x = static_cast<node_id>(i);
            SearchParams p;
            p.ls = std::min(ls, n);
            p.k = p.ls;
            p.seed = mix_seed(seed, i);
            const auto res = searcher.greedy_from(data[i], p, MetricKind::InnerProduct, stage1.euclid[i]);
            std::vector<Scored> cands;
            cands.reserve(res.ids.size());
            for (std::size_t r = 0; r < res.ids.size(); ++r) {
                if (res.ids[r] == x) continue;
                cands.push_back({res.ids[r], res.scores[r]});
            }
            if (!res.ids.empty() && res.ids.front() == x && (res.ids.size() == 1 || res.scores[1] < res.scores[0])) {
                first_in_own[i] = 1;
            }
            idx.ip[i] = ndg_select(x, cands, data, K2);
        }
    });
    if (!exact_census) idx.self_dominator = std::move(first_in_own);
    idx.metadata["K2"] = K2;
    idx.metadata["ls"] = ls;
    idx.metadata["stage2_seed"] = seed;
    return idx;
}

inline MagIndex build_index(const Dataset& data, const BuildParams& p) {
    auto s1 = build_stage1(data, p.K, p.K1, p.knn, p.seed, p.workers, p.nndescent_iters);
    return build_stage2(s1, data, p.K2, p.ls, p.seed, p.workers);
}

/// Number of dominator edges loaded per node for a given (R, alpha).
inline std::size_t ip_quota(std::size_t R, double alpha) {
    // guard against alpha * R landing a hair above an integer (0.3 * 10 = 3.0000000000000004)
    const double raw = std::ceil(alpha * double(R) - 1e-9);
    return static_cast<std::size_t>(std::clamp(raw, 0.0, double(R)));
}

/// Runtime graph: per node the first min(ceil(alpha R), |ip|) dominator edges, then
/// up to R - ceil(alpha R) Euclidean edges not already taken.
inline SearchGraph materialize(const MagIndex& index, std::size_t R, double alpha) {
    detail::require(R >= 1, "R must be >= 1");
    detail::require(alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0, 1]");
    const std::size_t quota_ip = ip_quota(R, alpha);
    const std::size_t quota_euc = R - quota_ip;
    std::vector<std::vector<node_id>> lists(index.n);
    std::vector<std::uint32_t> ip_counts(index.n, 0);
    for (std::size_t i = 0; i < index.n; ++i) {
        auto& out = lists[i];
        const auto& ip = index.ip[i];
        const std::size_t take_ip = std::min(quota_ip, ip.size());
        out.assign(ip.begin(), ip.begin() + static_cast<std::ptrdiff_t>(take_ip));
        ip_counts[i] = static_cast<std::uint32_t>(take_ip);
        std::size_t euc = 0;
        for (node_id v : index.euclid[i]) {
            if (euc == quota_euc) break;
            if (std::find(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(take_ip), v) !=
                out.begin() + static_cast<std::ptrdiff_t>(take_ip)) {
                continue;
            }
            out.push_back(v);
            ++euc;
        }
    }
    return SearchGraph(lists, std::move(ip_counts), R, alpha, index.n == 0 ? 0 : index.entry());
}

// ---------------------------------------------------------------------------
// Persistence

namespace detail {

inline void put_u32(std::vector<char>& out, std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    out.insert(out.end(), b, b + 4);
}

class ByteReader {
public:
    explicit ByteReader(const std::vector<char>& buf) : buf_(buf) {}

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v;
        std::memcpy(&v, buf_.data() + pos_, 4);
        pos_ += 4;
        return v;
    }
    void bytes(void* dst, std::size_t len, const char* what) {
        need(len, what);
        if (len) std::memcpy(dst, buf_.data() + pos_, len);
        pos_ += len;
    }
    std::size_t remaining() const { return buf_.size() - pos_; }

private:
    void need(std::size_t len, const char* what) const {
        if (buf_.size() - pos_ < len) throw format_error(std::string("index file truncated while reading ") + what);
    }
    const std::vector<char>& buf_;
    std::size_t pos_ = 0;
};

inline std::uint32_t narrow_u32(std::size_t v, const char* what) {
    require(v <= std::numeric_limits<std::uint32_t>::max(), std::string(what) + " does not fit in 32 bits");
    return static_cast<std::uint32_t>(v);
}

}  // namespace detail

inline std::vector<char> serialize_index(const MagIndex& idx) {
    std::vector<char> out;
    out.insert(out.end(), std::begin(kIndexMagic), std::end(kIndexMagic));
    detail::put_u32(out, kIndexVersion);
    detail::put_u32(out, detail::narrow_u32(idx.n, "n"));
    detail::put_u32(out, detail::narrow_u32(idx.dim, "dim"));
    detail::put_u32(out, idx.K1);
    detail::put_u32(out, idx.K2);
    for (std::size_t i = 0; i < idx.n; ++i) {
        detail::put_u32(out, detail::narrow_u32(idx.euclid[i].size(), "edge count"));
        detail::put_u32(out, detail::narrow_u32(idx.ip[i].size(), "edge count"));
        for (node_id v : idx.euclid[i]) detail::put_u32(out, v);
        for (node_id v : idx.ip[i]) detail::put_u32(out, v);
    }
    out.insert(out.end(), idx.self_dominator.begin(), idx.self_dominator.end());
    const std::string meta = idx.metadata.dump();
    detail::put_u32(out, detail::narrow_u32(meta.size(), "metadata"));
    out.insert(out.end(), meta.begin(), meta.end());
    return out;
}

inline MagIndex deserialize_index(const std::vector<char>& buf) {
    detail::ByteReader in(buf);
    char magic[4];
    in.bytes(magic, 4, "magic");
    if (!std::equal(std::begin(magic), std::end(magic), std::begin(kIndexMagic))) {
        throw format_error("not a MAG index (bad magic)");
    }
    const std::uint32_t version = in.u32("version");
    if (version != kIndexVersion) {
        throw format_error("unsupported index version " + std::to_string(version) + " (expected " +
                           std::to_string(kIndexVersion) + ")");
    }
    MagIndex idx;
    idx.n = in.u32("n");
    idx.dim = in.u32("dim");
    idx.K1 = in.u32("K1");
    idx.K2 = in.u32("K2");
    // every node needs at least 8 bytes of edge header
    if (idx.n > in.remaining() / 8) throw format_error("index file truncated: node count exceeds file size");
    idx.euclid.resize(idx.n);
    idx.ip.resize(idx.n);
    for (std::size_t i = 0; i < idx.n; ++i) {
        const std::uint32_t ne = in.u32("edge header");
        const std::uint32_t ni = in.u32("edge header");
        if (std::uint64_t(ne) + ni > in.remaining() / 4) throw format_error("index file truncated in edge lists");
        idx.euclid[i].resize(ne);
        idx.ip[i].resize(ni);
        in.bytes(idx.euclid[i].data(), ne * sizeof(node_id), "edges");
        in.bytes(idx.ip[i].data(), ni * sizeof(node_id), "edges");
        for (node_id v : idx.euclid[i]) {
            if (v >= idx.n) throw format_error("edge target out of range at node " + std::to_string(i));
        }
        for (node_id v : idx.ip[i]) {
            if (v >= idx.n) throw format_error("edge target out of range at node " + std::to_string(i));
        }
    }
    idx.self_dominator.resize(idx.n);
    in.bytes(idx.self_dominator.data(), idx.n, "dominator flags");
    const std::uint32_t meta_len = in.u32("metadata length");
    std::string meta(meta_len, '\0');
    in.bytes(meta.data(), meta_len, "metadata");
    if (in.remaining() != 0) throw format_error("trailing bytes after index metadata");
    try {
        idx.metadata = nlohmann::json::parse(meta);
    } catch (const nlohmann::json::exception& e) {
        throw format_error(std::string("index metadata is not valid JSON: ") + e.what());
    }
    return idx;
}

inline void save_index(const MagIndex& idx, const std::filesystem::path& path) {
    const auto bytes = serialize_index(idx);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw io_error("write failed: " + path.string());
}

inline MagIndex load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_index(bytes);
}

/// Structural checks on an index against its dataset. Returns one message per problem.
inline std::vector<std::string> validate_index(const MagIndex& idx, const Dataset* data = nullptr) {
    std::vector<std::string> problems;
    auto report = [&](std::size_t i, const std::string& what) {
        if (problems.size() < 20) problems.push_back("node " + std::to_string(i) + ": " + what);
    };
    if (idx.euclid.size() != idx.n || idx.ip.size() != idx.n || idx.self_dominator.size() != idx.n) {
        problems.push_back("per-node arrays do not match n");
        return problems;
    }
    if (data && (data->size() != idx.n || data->dim() != idx.dim)) {
        problems.push_back("index shape does not match dataset");
        return problems;
    }
    for (std::size_t i = 0; i < idx.n; ++i) {
        for (int kind = 0; kind < 2; ++kind) {
            const auto& list = kind == 0 ? idx.euclid[i] : idx.ip[i];
            const std::size_t cap = kind == 0 ? idx.K1 : idx.K2;
            if (list.size() > cap) report(i, "too many edges");
            std::vector<node_id> sorted(list);
            std::sort(sorted.begin(), sorted.end());
            if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) report(i, "duplicate edge");
            for (node_id v : list) {
                if (v >= idx.n) report(i, "edge out of range");
                if (v == i) report(i, "self-loop");
            }
            if (!data) continue;
            const MetricKind metric = kind == 0 ? MetricKind::Euclidean : MetricKind::InnerProduct;
            for (std::size_t e = 1; e < list.size(); ++e) {
                if (list[e] >= idx.n || list[e - 1] >= idx.n) break;
                const float a = score(metric, (*data)[i], (*data)[list[e - 1]]);
                const float b = score(metric, (*data)[i], (*data)[list[e]]);
                if (!better(metric, a, list[e - 1], b, list[e])) {
                    report(i, kind == 0 ? "euclidean edges out of order" : "ip edges out of order");
                    break;
                }
            }
        }
    }
    if (data && idx.n <= kExactCensusLimit && idx.metadata.value("census", std::string("exact")) == "exact") {
        std::vector<std::uint8_t> expect(idx.n, 0);
        for (node_id v : self_dominator_set(*data)) expect[v] = 1;
        if (expect != idx.self_dominator) problems.push_back("self-dominator flags disagree with exact census");
    }
    return problems;
}

}  // namespace mag
