#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace mag {

using node_id = std::uint32_t;

/// n vectors of fixed dimension in one row-major float buffer.
class Dataset {
public:
    Dataset() = default;

    Dataset(std::size_t n, std::size_t dim, std::vector<float> data)
        : n_(n), dim_(dim), data_(std::move(data)) {
        detail::require(n_ >= 1, "dataset must hold at least one vector");
        detail::require(dim_ >= 1, "dataset dimension must be >= 1");
        detail::require(data_.size() == n_ * dim_, "dataset buffer length must equal n * dim");
        for (float v : data_) {
            detail::require(std::isfinite(v), "dataset values must be finite");
        }
    }

    std::size_t size() const noexcept { return n_; }
    std::size_t dim() const noexcept { return dim_; }
    bool empty() const noexcept { return n_ == 0; }

    std::span<const float> row(std::size_t i) const noexcept {
        return {data_.data() + i * dim_, dim_};
    }
    std::span<const float> operator[](std::size_t i) const noexcept { return row(i); }

    const std::vector<float>& data() const noexcept { return data_; }

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    std::size_t n_ = 0;
    std::size_t dim_ = 0;
    std::vector<float> data_;
};

enum class MetricKind : std::uint8_t { InnerProduct, Euclidean };

inline std::string_view to_string(MetricKind m) {
    return m == MetricKind::InnerProduct ? "ip" : "l2";
}

inline MetricKind parse_metric(std::string_view s) {
    if (s == "ip") return MetricKind::InnerProduct;
    if (s == "l2") return MetricKind::Euclidean;
    throw usage_error("unknown metric '" + std::string(s) + "' (expected ip or l2)");
}

namespace detail {

// Engine kernels accumulate in 8 interleaved float lanes (lane j takes indices
// j, j+8, ...), combined pairwise in a fixed order, then the tail sequentially.
// The order is fixed, so results are reproducible and symmetric in (x, y).
inline constexpr std::size_t kLanes = 8;

inline float combine_lanes(const float (&acc)[kLanes]) noexcept {
    return ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
}

inline void check_dims(std::span<const float> x, std::span<const float> y) {
    require(x.size() == y.size(), "dimension mismatch: " + std::to_string(x.size()) + " vs " +
                                      std::to_string(y.size()));
}

inline float ip_unchecked(const float* x, const float* y, std::size_t d) noexcept {
    float acc[kLanes] = {};
    std::size_t i = 0;
    for (; i + kLanes <= d; i += kLanes) {
        for (std::size_t j = 0; j < kLanes; ++j) acc[j] += x[i + j] * y[i + j];
    }
    float s = combine_lanes(acc);
    for (; i < d; ++i) s += x[i] * y[i];
    return s;
}

inline float l2_unchecked(const float* x, const float* y, std::size_t d) noexcept {
    float acc[kLanes] = {};
    std::size_t i = 0;
    for (; i + kLanes <= d; i += kLanes) {
        for (std::size_t j = 0; j < kLanes; ++j) {
            const float t = x[i + j] - y[i + j];
            acc[j] += t * t;
        }
    }
    float s = combine_lanes(acc);
    for (; i < d; ++i) {
        const float t = x[i] - y[i];
        s += t * t;
    }
    return s;
}

}  // namespace detail

inline float inner_product(std::span<const float> x, std::span<const float> y) {
    detail::check_dims(x, y);
    return detail::ip_unchecked(x.data(), y.data(), x.size());
}

inline float euclidean_sq(std::span<const float> x, std::span<const float> y) {
    detail::check_dims(x, y);
    return detail::l2_unchecked(x.data(), y.data(), x.size());
}

inline float norm(std::span<const float> x) {
    return std::sqrt(detail::ip_unchecked(x.data(), x.data(), x.size()));
}

/// Reference kernels: strictly sequential accumulation by index.
inline float inner_product_seq(std::span<const float> x, std::span<const float> y) {
    detail::check_dims(x, y);
    float s = 0.0f;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline float euclidean_sq_seq(std::span<const float> x, std::span<const float> y) {
    detail::check_dims(x, y);
    float s = 0.0f;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const float t = x[i] - y[i];
        s += t * t;
    }
    return s;
}

/// 64-bit accumulation for oracle code paths.
inline double inner_product_f64(std::span<const float> x, std::span<const float> y) {
    detail::check_dims(x, y);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += double(x[i]) * double(y[i]);
    return s;
}

inline double euclidean_sq_f64(std::span<const float> x, std::span<const float> y) {
    detail::check_dims(x, y);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = double(x[i]) - double(y[i]);
        s += t * t;
    }
    return s;
}

inline float score(MetricKind metric, std::span<const float> q, std::span<const float> x) {
    return metric == MetricKind::InnerProduct ? inner_product(q, x) : euclidean_sq(q, x);
}

inline double score_f64(MetricKind metric, std::span<const float> q, std::span<const float> x) {
    return metric == MetricKind::InnerProduct ? inner_product_f64(q, x) : euclidean_sq_f64(q, x);
}

/// Strict "a ranks before b": larger IP or smaller distance; equal scores fall back to lower id.
template <typename T>
constexpr bool better(MetricKind metric, T score_a, node_id id_a, T score_b, node_id id_b) noexcept {
    if (score_a != score_b) {
        return metric == MetricKind::InnerProduct ? score_a > score_b : score_a < score_b;
    }
    return id_a < id_b;
}

template <typename T>
struct BasicScored {
    node_id id;
    T score;
    friend bool operator==(const BasicScored&, const BasicScored&) = default;
};
using Scored = BasicScored<float>;

/// Comparator object usable with std::sort and friends.
struct ScoreOrder {
    MetricKind metric;
    template <typename T>
    constexpr bool operator()(const BasicScored<T>& a, const BasicScored<T>& b) const noexcept {
        return better(metric, a.score, a.id, b.score, b.id);
    }
};

}  // namespace mag
