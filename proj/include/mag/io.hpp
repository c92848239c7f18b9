#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "metrics.hpp"
#include "parallel.hpp"

namespace mag {

static_assert(std::endian::native == std::endian::little,
              "fvecs/ivecs and index files are read and written as little-endian");

/// Per-query top-k ids, best first under `metric`.
struct GroundTruth {
    std::size_t k = 0;
    std::vector<node_id> ids;  // row-major, queries() * k
    MetricKind metric = MetricKind::InnerProduct;

    std::size_t queries() const noexcept { return k == 0 ? 0 : ids.size() / k; }
    std::span<const node_id> row(std::size_t i) const noexcept { return {ids.data() + i * k, k}; }

    friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

namespace detail {

template <typename T>
std::vector<std::vector<T>> read_vecs(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path.string());
    std::vector<std::vector<T>> rows;
    std::int32_t first_dim = -1;
    for (;;) {
        std::int32_t d = 0;
        in.read(reinterpret_cast<char*>(&d), sizeof d);
        if (in.gcount() == 0) break;
        if (in.gcount() != sizeof d) {
            throw format_error(std::string(what) + ": truncated dimension field in " + path.string());
        }
        if (d <= 0) throw format_error(std::string(what) + ": non-positive dimension " + std::to_string(d));
        if (first_dim < 0) first_dim = d;
        if (d != first_dim) {
            throw format_error(std::string(what) + ": inconsistent dimension " + std::to_string(d) +
                               " (expected " + std::to_string(first_dim) + ")");
        }
        std::vector<T> row(static_cast<std::size_t>(d));
        const auto bytes = static_cast<std::streamsize>(row.size() * sizeof(T));
        in.read(reinterpret_cast<char*>(row.data()), bytes);
        if (in.gcount() != bytes) {
            throw format_error(std::string(what) + ": truncated record " + std::to_string(rows.size()));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

template <typename T>
void write_vecs(const std::filesystem::path& path, std::size_t rows, std::size_t dim, const T* data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    const auto d = static_cast<std::int32_t>(dim);
    for (std::size_t i = 0; i < rows; ++i) {
        out.write(reinterpret_cast<const char*>(&d), sizeof d);
        out.write(reinterpret_cast<const char*>(data + i * dim), static_cast<std::streamsize>(dim * sizeof(T)));
    }
    out.flush();
    if (!out) throw io_error("write failed: " + path.string());
}

}  // namespace detail

inline Dataset read_fvecs(const std::filesystem::path& path) {
    auto rows = detail::read_vecs<float>(path, "fvecs");
    if (rows.empty()) throw format_error("fvecs: no records in " + path.string());
    const std::size_t dim = rows.front().size();
    std::vector<float> flat;
    flat.reserve(rows.size() * dim);
    for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
    try {
        return Dataset(rows.size(), dim, std::move(flat));
    } catch (const usage_error& e) {
        throw format_error(std::string("fvecs: ") + e.what());
    }
}

inline void write_fvecs(const Dataset& data, const std::filesystem::path& path) {
    detail::write_vecs(path, data.size(), data.dim(), data.data().data());
}

/// ivecs rows become a GroundTruth; the file does not record the metric, so the caller supplies it.
inline GroundTruth read_ivecs(const std::filesystem::path& path, MetricKind metric = MetricKind::InnerProduct) {
    auto rows = detail::read_vecs<std::int32_t>(path, "ivecs");
    if (rows.empty()) throw format_error("ivecs: no records in " + path.string());
    GroundTruth gt;
    gt.k = rows.front().size();
    gt.metric = metric;
    gt.ids.reserve(rows.size() * gt.k);
    for (const auto& r : rows) {
        for (std::int32_t v : r) {
            if (v < 0) throw format_error("ivecs: negative id " + std::to_string(v));
            gt.ids.push_back(static_cast<node_id>(v));
        }
    }
    return gt;
}

inline void write_ivecs(const GroundTruth& gt, const std::filesystem::path& path) {
    std::vector<std::int32_t> flat(gt.ids.begin(), gt.ids.end());
    detail::write_vecs(path, gt.queries(), gt.k, flat.data());
}

/// Exact top-k by exhaustive scan with 64-bit accumulation; ties go to the lower id.
inline std::vector<node_id> brute_force_topk(const Dataset& data, std::span<const float> q, std::size_t k,
                                             MetricKind metric) {
    detail::require(k >= 1, "k must be >= 1");
    detail::require(k <= data.size(), "k = " + std::to_string(k) + " exceeds n = " + std::to_string(data.size()));
    detail::require(q.size() == data.dim(), "query dimension does not match dataset");
    std::vector<BasicScored<double>> all(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        all[i] = {static_cast<node_id>(i), score_f64(metric, q, data[i])};
    }
    const ScoreOrder order{metric};
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), order);
    std::vector<node_id> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = all[i].id;
    return out;
}

inline GroundTruth compute_ground_truth(const Dataset& data, const Dataset& queries, std::size_t k,
                                        MetricKind metric, unsigned workers = 0) {
    detail::require(queries.dim() == data.dim(), "query dimension does not match dataset");
    detail::require(k >= 1 && k <= data.size(), "k must be in [1, n]");
    GroundTruth gt;
    gt.k = k;
    gt.metric = metric;
    gt.ids.resize(queries.size() * k);
    parallel_for(queries.size(), workers, [&](std::size_t i) {
        const auto row = brute_force_topk(data, queries[i], k, metric);
        std::copy(row.begin(), row.end(), gt.ids.begin() + static_cast<std::ptrdiff_t>(i * k));
    });
    return gt;
}

}  // namespace mag
