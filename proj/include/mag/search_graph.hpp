#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "errors.hpp"
#include "metrics.hpp"

namespace mag {

/// Immutable runtime adjacency in CSR form. For graphs materialized from a
/// MagIndex, each list starts with its `ip_count(i)` dominator edges.
class SearchGraph {
public:
    SearchGraph() = default;

    /// Adjacency lists taken as-is; `ip_counts` may be empty (all edges Euclidean).
    explicit SearchGraph(const std::vector<std::vector<node_id>>& lists, std::vector<std::uint32_t> ip_counts = {},
                         std::size_t max_degree = 0, double alpha = 0.0, node_id entry = 0)
        : max_degree_(max_degree), alpha_(alpha), entry_(entry), ip_count_(std::move(ip_counts)) {
        offsets_.reserve(lists.size() + 1);
        offsets_.push_back(0);
        for (const auto& l : lists) {
            for (node_id v : l) {
                detail::require(v < lists.size(), "edge target out of range");
                ids_.push_back(v);
            }
            offsets_.push_back(static_cast<std::uint64_t>(ids_.size()));
            if (max_degree == 0) max_degree_ = std::max(max_degree_, l.size());
        }
        if (ip_count_.empty()) ip_count_.assign(lists.size(), 0);
        detail::require(ip_count_.size() == lists.size(), "ip count vector does not match node count");
        detail::require(lists.empty() || entry_ < lists.size(), "entry point out of range");
    }

    std::size_t size() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::size_t max_degree() const noexcept { return max_degree_; }
    double alpha() const noexcept { return alpha_; }
    node_id entry() const noexcept { return entry_; }

    std::span<const node_id> neighbors(std::size_t i) const noexcept {
        return {ids_.data() + offsets_[i], static_cast<std::size_t>(offsets_[i + 1] - offsets_[i])};
    }
    std::uint32_t ip_count(std::size_t i) const noexcept { return ip_count_[i]; }
    std::size_t edge_count() const noexcept { return ids_.size(); }

    std::vector<std::vector<node_id>> adjacency() const {
        std::vector<std::vector<node_id>> out(size());
        for (std::size_t i = 0; i < size(); ++i) out[i].assign(neighbors(i).begin(), neighbors(i).end());
        return out;
    }

    friend bool operator==(const SearchGraph&, const SearchGraph&) = default;

private:
    std::size_t max_degree_ = 0;
    double alpha_ = 0.0;
    node_id entry_ = 0;
    std::vector<std::uint64_t> offsets_;
    std::vector<node_id> ids_;
    std::vector<std::uint32_t> ip_count_;
};

}  // namespace mag
