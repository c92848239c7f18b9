#pragma once

// Data-topology indicators used for alpha/m tuning (norm CV, Davies-Bouldin
// under Euclidean and cosine geometry, self-dominator census) together with the
// closed-form estimators for Gaussian data.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "errors.hpp"
#include "metrics.hpp"
#include "parallel.hpp"

namespace mag {

enum class ClusterMetric : std::uint8_t { Euclidean, Cosine };

struct Clustering {
    std::size_t n_clusters = 0;
    std::vector<std::uint32_t> assignment;
    std::vector<float> centroids;  // n_clusters * dim, row-major

    friend bool operator==(const Clustering&, const Clustering&) = default;
};

struct StatsReport {
    double cv = 0.0;
    double dbi_euclidean = 0.0;
    double dbi_cosine = 0.0;
    double self_dominator_fraction = 0.0;
    std::size_t n_clusters = 0;
    bool census_exact = true;

    friend bool operator==(const StatsReport&, const StatsReport&) = default;
};

/// Population std-dev of vector norms over their mean.
inline double coefficient_of_variation(const Dataset& data) {
    detail::require(data.size() >= 2, "coefficient of variation needs n >= 2");
    std::vector<double> norms(data.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        norms[i] = std::sqrt(inner_product_f64(data[i], data[i]));
        sum += norms[i];
    }
    const double mean = sum / double(data.size());
    detail::require(mean > 0.0, "coefficient of variation undefined: mean norm is zero");
    double var = 0.0;
    for (double v : norms) var += (v - mean) * (v - mean);
    var /= double(data.size());
    return std::sqrt(var) / mean;
}

namespace detail {

inline std::vector<double> normalized_copy(const Dataset& data) {
    std::vector<double> out(data.size() * data.dim());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double nrm = std::sqrt(inner_product_f64(data[i], data[i]));
        require(nrm > 0.0, "cosine geometry is undefined for zero vectors (row " + std::to_string(i) + ")");
        for (std::size_t j = 0; j < data.dim(); ++j) out[i * data.dim() + j] = double(data[i][j]) / nrm;
    }
    return out;
}

inline std::vector<double> as_double(const Dataset& data) {
    return {data.data().begin(), data.data().end()};
}

// Distance between two points in the clustering geometry. Points in cosine
// mode are unit vectors (centroids are renormalized), so 1 - dot is 1 - cos.
inline double cluster_distance(ClusterMetric metric, const double* a, const double* b, std::size_t dim) {
    double s = 0.0;
    if (metric == ClusterMetric::Euclidean) {
        for (std::size_t j = 0; j < dim; ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
        return std::sqrt(s);
    }
    for (std::size_t j = 0; j < dim; ++j) s += a[j] * b[j];
    return 1.0 - s;
}

// Centroid of each cluster: arithmetic mean, renormalized in cosine mode.
inline std::vector<double> cluster_centroids(ClusterMetric metric, const std::vector<double>& pts, std::size_t dim,
                                             const std::vector<std::uint32_t>& assignment, std::size_t k) {
    std::vector<double> c(k * dim, 0.0);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        ++count[assignment[i]];
        for (std::size_t j = 0; j < dim; ++j) c[assignment[i] * dim + j] += pts[i * dim + j];
    }
    for (std::size_t a = 0; a < k; ++a) {
        if (count[a] == 0) continue;
        for (std::size_t j = 0; j < dim; ++j) c[a * dim + j] /= double(count[a]);
        if (metric == ClusterMetric::Cosine) {
            double nrm = 0.0;
            for (std::size_t j = 0; j < dim; ++j) nrm += c[a * dim + j] * c[a * dim + j];
            nrm = std::sqrt(nrm);
            if (nrm > 0.0) {
                for (std::size_t j = 0; j < dim; ++j) c[a * dim + j] /= nrm;
            }
        }
    }
    return c;
}

}  // namespace detail

/// Lloyd's k-means with k-means++ seeding. Cosine mode clusters unit-normalized
/// copies and keeps centroids on the unit sphere.
inline Clustering kmeans(const Dataset& data, std::size_t n_clusters, ClusterMetric metric, std::uint64_t seed,
                         std::size_t max_iter = 100) {
    detail::require(n_clusters >= 1, "kmeans needs at least one cluster");
    detail::require(n_clusters <= data.size(), "kmeans: more clusters than points");
    const std::size_t n = data.size();
    const std::size_t dim = data.dim();
    const auto pts = metric == ClusterMetric::Cosine ? detail::normalized_copy(data) : detail::as_double(data);

    {
        // distinct-point check so every cluster can be non-empty
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        auto row_less = [&](std::size_t a, std::size_t b) {
            return std::lexicographical_compare(pts.begin() + a * dim, pts.begin() + (a + 1) * dim,
                                                pts.begin() + b * dim, pts.begin() + (b + 1) * dim);
        };
        std::sort(order.begin(), order.end(), row_less);
        std::size_t distinct = n == 0 ? 0 : 1;
        for (std::size_t i = 1; i < n; ++i) {
            if (row_less(order[i - 1], order[i])) ++distinct;
        }
        detail::require(n_clusters <= distinct, "kmeans: n_clusters (" + std::to_string(n_clusters) +
                                                    ") exceeds number of distinct points (" +
                                                    std::to_string(distinct) + ")");
    }

    auto dist = [&](const double* a, const double* b) {
        // Seeding and assignment use squared Euclidean on the working copy; for unit
        // vectors that is 2(1 - cos), so the ordering matches cosine distance.
        double s = 0.0;
        for (std::size_t j = 0; j < dim; ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
        return s;
    };

    std::mt19937_64 rng(seed);
    std::vector<double> centroids(n_clusters * dim);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    std::copy_n(pts.begin() + first * dim, dim, centroids.begin());
    for (std::size_t c = 1; c < n_clusters; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            best[i] = std::min(best[i], dist(&pts[i * dim], &centroids[(c - 1) * dim]));
            total += best[i];
        }
        // D^2 sampling; total > 0 because at least c + 1 distinct points exist
        double r = std::uniform_real_distribution<double>(0.0, total)(rng);
        std::size_t pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            if (r < best[i]) {
                pick = i;
                break;
            }
            r -= best[i];
        }
        while (best[pick] == 0.0) pick = (pick + n - 1) % n;
        std::copy_n(pts.begin() + pick * dim, dim, centroids.begin() + c * dim);
    }

    std::vector<std::uint32_t> assign(n, 0);
    for (std::size_t iter = 0; iter <= max_iter; ++iter) {
        bool changed = iter == 0;
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t arg = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < n_clusters; ++c) {
                const double dd = dist(&pts[i * dim], &centroids[c * dim]);
                if (dd < bd) {
                    bd = dd;
                    arg = static_cast<std::uint32_t>(c);
                }
            }
            if (assign[i] != arg) changed = true;
            assign[i] = arg;
        }
        // Empty clusters take the point farthest from its current centroid.
        std::vector<std::size_t> count(n_clusters, 0);
        for (auto a : assign) ++count[a];
        for (std::size_t c = 0; c < n_clusters; ++c) {
            if (count[c] != 0) continue;
            std::size_t far = 0;
            double fd = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (count[assign[i]] <= 1) continue;
                const double dd = dist(&pts[i * dim], &centroids[assign[i] * dim]);
                if (dd > fd) {
                    fd = dd;
                    far = i;
                }
            }
            --count[assign[far]];
            assign[far] = static_cast<std::uint32_t>(c);
            count[c] = 1;
            changed = true;
        }
        centroids = detail::cluster_centroids(metric, pts, dim, assign, n_clusters);
        if (!changed) break;
    }

    Clustering out;
    out.n_clusters = n_clusters;
    out.assignment = std::move(assign);
    out.centroids.assign(centroids.begin(), centroids.end());
    return out;
}

/// Davies-Bouldin index: mean over clusters of max_{j != i} (s_i + s_j) / d(c_i, c_j).
/// Centroids are recomputed from the assignment; s_i is the mean member-to-centroid
/// distance (Euclidean distance, or 1 - cosine similarity in cosine mode).
inline double davies_bouldin(const Dataset& data, const Clustering& clustering, ClusterMetric metric) {
    const std::size_t k = clustering.n_clusters;
    const std::size_t dim = data.dim();
    detail::require(k >= 2, "Davies-Bouldin index needs at least two clusters");
    detail::require(clustering.assignment.size() == data.size(), "assignment size does not match dataset");
    for (auto a : clustering.assignment) detail::require(a < k, "cluster id out of range");

    const auto pts = metric == ClusterMetric::Cosine ? detail::normalized_copy(data) : detail::as_double(data);
    const auto cent = detail::cluster_centroids(metric, pts, dim, clustering.assignment, k);

    std::vector<double> spread(k, 0.0);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto a = clustering.assignment[i];
        spread[a] += detail::cluster_distance(metric, &pts[i * dim], &cent[a * dim], dim);
        ++count[a];
    }
    for (std::size_t a = 0; a < k; ++a) {
        detail::require(count[a] > 0, "cluster " + std::to_string(a) + " is empty");
        spread[a] /= double(count[a]);
    }

    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double worst = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            const double sep = detail::cluster_distance(metric, &cent[i * dim], &cent[j * dim], dim);
            detail::require(sep > 0.0, "coincident centroids " + std::to_string(i) + " and " + std::to_string(j));
            worst = std::max(worst, (spread[i] + spread[j]) / sep);
        }
        total += worst;
    }
    return total / double(k);
}

/// true iff <x_i, x_i> > <x_i, x_j> for every j != i (64-bit accumulation).
inline bool is_self_dominator(const Dataset& data, std::size_t i) {
    const auto xi = data[i];
    const double self = inner_product_f64(xi, xi);
    for (std::size_t j = 0; j < data.size(); ++j) {
        if (j != i && !(self > inner_product_f64(xi, data[j]))) return false;
    }
    return true;
}

/// Exact census of self-dominators, ascending ids. O(n^2 d).
inline std::vector<node_id> self_dominator_set(const Dataset& data, unsigned workers = 0) {
    std::vector<std::uint8_t> flag(data.size(), 0);
    parallel_for(data.size(), workers, [&](std::size_t i) { flag[i] = is_self_dominator(data, i) ? 1 : 0; });
    std::vector<node_id> out;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (flag[i]) out.push_back(static_cast<node_id>(i));
    }
    return out;
}

/// Standard normal CDF.
inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Per-pair probability that a norm-r point out-scores an independent N(0, I) point
/// against itself: P(<x,y> < r^2 | ||x|| = r) = Phi(r).
inline double dominator_probability(double r) {
    detail::require(r >= 0.0, "norm must be non-negative");
    return standard_normal_cdf(r);
}

/// Monte-Carlo estimate of the per-pair probability above in dimension d.
/// x is a uniformly random direction scaled to norm r; y has i.i.d. N(0,1) entries.
inline double dominator_probability_mc(double r, std::size_t d, std::size_t samples, std::uint64_t seed) {
    detail::require(d >= 1 && samples >= 1, "need d >= 1 and samples >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> x(d), y(d);
    std::size_t hits = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        double nrm = 0.0;
        for (auto& v : x) {
            v = gauss(rng);
            nrm += v * v;
        }
        nrm = std::sqrt(nrm);
        double dot = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            y[j] = gauss(rng);
            dot += (r * x[j] / nrm) * y[j];
        }
        if (dot < r * r) ++hits;
    }
    return double(hits) / double(samples);
}

/// n * P(||x|| > r) for x ~ N(0, I_d): n times the regularized upper incomplete gamma Q(d/2, r^2/2).
inline double expected_self_dominators(std::size_t n, std::size_t d, double r) {
    detail::require(n >= 1 && d >= 1, "need n >= 1 and d >= 1");
    detail::require(r >= 0.0, "norm threshold must be non-negative");
    if (std::isinf(r)) return 0.0;
    return double(n) * boost::math::gamma_q(double(d) / 2.0, r * r / 2.0);
}

/// Estimated angle (radians) between a Gaussian point and its Euclidean nearest
/// neighbour: arccos(min(((log n) + (d/2) log(1/(1 - t^2))) / (t d), 1)).
inline double estimate_nn_angle(double n, std::size_t d, double t) {
    detail::require(n >= 2.0 && d >= 1, "need n >= 2 and d >= 1");
    detail::require(t > 0.0 && t < 1.0, "t must lie in (0, 1)");
    const double dd = double(d);
    const double arg = (std::log(n) + dd / 2.0 * std::log(1.0 / (1.0 - t * t))) / (t * dd);
    return std::acos(std::clamp(arg, -1.0, 1.0));
}

/// Self-dominator fraction: exact census up to `census_limit` points, otherwise the
/// fraction over a seeded sample of `census_limit` points, each tested against the full set.
inline double self_dominator_fraction(const Dataset& data, std::size_t census_limit, std::uint64_t seed,
                                      unsigned workers, bool* exact = nullptr) {
    if (data.size() <= census_limit) {
        if (exact) *exact = true;
        return double(self_dominator_set(data, workers).size()) / double(data.size());
    }
    if (exact) *exact = false;
    std::vector<node_id> ids(data.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<node_id>(i);
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < census_limit; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, ids.size() - 1);
        std::swap(ids[i], ids[pick(rng)]);
    }
    std::vector<std::uint8_t> flag(census_limit, 0);
    parallel_for(census_limit, workers, [&](std::size_t s) { flag[s] = is_self_dominator(data, ids[s]) ? 1 : 0; });
    std::size_t hits = 0;
    for (auto f : flag) hits += f;
    return double(hits) / double(census_limit);
}

inline StatsReport compute_stats(const Dataset& data, std::size_t n_clusters = 16, std::uint64_t seed = 42,
                                 unsigned workers = 0, std::size_t census_limit = 20000) {
    StatsReport rep;
    rep.n_clusters = std::min(n_clusters, data.size());
    rep.cv = coefficient_of_variation(data);
    const auto ce = kmeans(data, rep.n_clusters, ClusterMetric::Euclidean, seed);
    rep.dbi_euclidean = davies_bouldin(data, ce, ClusterMetric::Euclidean);
    const auto cc = kmeans(data, rep.n_clusters, ClusterMetric::Cosine, seed);
    rep.dbi_cosine = davies_bouldin(data, cc, ClusterMetric::Cosine);
    rep.self_dominator_fraction = self_dominator_fraction(data, census_limit, seed, workers, &rep.census_exact);
    return rep;
}

/// CV >= 0.1 favours IP-oriented settings (higher alpha, smaller m); DBI <= 2 under
/// either geometry favours Euclidean-oriented settings (lower alpha, larger m).
inline std::string tuning_hint(const StatsReport& rep) {
    const bool ip_oriented = rep.cv >= 0.1;
    const bool clustered = rep.dbi_euclidean <= 2.0 || rep.dbi_cosine <= 2.0;
    if (ip_oriented && clustered) return "mixed: high CV favours larger alpha, clustering favours larger m";
    if (ip_oriented) return "ip-oriented: raise alpha, lower m";
    if (clustered) return "euclidean-oriented: lower alpha, raise m";
    return "balanced: start from alpha=0.5 and a small m";
}

}  // namespace mag
