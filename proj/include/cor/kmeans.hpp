#ifndef COR_KMEANS_HPP
#define COR_KMEANS_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cor/common.hpp"
#include "cor/dataset.hpp"

namespace cor {

enum class DistanceKind { SquaredEuclidean, GeneralizedKl };

/// How the K starting rows are drawn: uniformly, or each next row with
/// probability proportional to its distance from the rows already chosen.
enum class InitMethod { Uniform, Spread };

inline std::string to_string(InitMethod m) { return m == InitMethod::Spread ? "spread" : "uniform"; }

inline InitMethod parse_init(const std::string& s)
{
    if (s == "uniform")
        return InitMethod::Uniform;
    if (s == "spread")
        return InitMethod::Spread;
    throw Error("unknown init method '" + s + "' (expected uniform or spread)");
}

/// A set of points that K-means-- can cluster: it knows how to seed a
/// centroid from a point, measure a point against a centroid, and rebuild
/// centroids as the arithmetic mean of their inlier members.
template <class S>
concept PointSpace = requires(const S& s, std::size_t i, std::span<const int> labels,
                              std::vector<typename S::centroid_type>& centroids,
                              const typename S::centroid_type& c) {
    { s.size() } -> std::convertible_to<std::size_t>;
    { s.centroid_from_point(i) } -> std::same_as<typename S::centroid_type>;
    { s.distance(i, c) } -> std::convertible_to<double>;
    { s.same_point(i, i) } -> std::convertible_to<bool>;
    s.update_centroids(labels, centroids);
};

struct KMeansOptions {
    std::size_t K = 2;
    std::size_t o = 0;
    std::uint64_t seed = 0;
    std::size_t max_iter = 100;
    double tol = 1e-9;
    InitMethod init = InitMethod::Uniform;
};

template <class Centroid>
struct KMeansResult {
    LabeledPartition partition;
    std::vector<Centroid> centroids;
    std::vector<std::size_t> counts;
    std::vector<double> objective_trace;  // inlier objective after each centroid update
    std::size_t iterations = 0;
    bool converged = false;
};

/// Called after every centroid update with (iteration, labels, centroids, objective).
template <class Centroid>
using IterationObserver =
    std::function<void(std::size_t, const LabeledPartition&, const std::vector<Centroid>&, double)>;

/// Maps (iteration, labels, centroids, inlier distance sum) to the quantity
/// whose change decides convergence.
template <class Centroid>
using StoppingObjective =
    std::function<double(std::size_t, const LabeledPartition&, const std::vector<Centroid>&, double)>;

/// Dense rows under squared Euclidean distance.
class EuclideanSpace {
public:
    using centroid_type = std::vector<double>;

    explicit EuclideanSpace(const DataMatrix& X) : X_(&X) {}

    std::size_t size() const { return X_->rows(); }

    centroid_type centroid_from_point(std::size_t i) const
    {
        const auto r = X_->row(i);
        return {r.begin(), r.end()};
    }

    double distance(std::size_t i, const centroid_type& c) const
    {
        const auto r = X_->row(i);
        double s = 0;
        for (std::size_t j = 0; j < r.size(); ++j) {
            const double diff = r[j] - c[j];
            s += diff * diff;
        }
        return s;
    }

    bool same_point(std::size_t a, std::size_t b) const
    {
        const auto ra = X_->row(a), rb = X_->row(b);
        return std::equal(ra.begin(), ra.end(), rb.begin());
    }

    void update_centroids(std::span<const int> labels, std::vector<centroid_type>& centroids) const
    {
        const std::size_t d = X_->cols();
        std::vector<std::size_t> counts(centroids.size(), 0);
        for (auto& c : centroids)
            std::fill(c.begin(), c.end(), 0.0);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == kOutlier)
                continue;
            auto& c = centroids[static_cast<std::size_t>(labels[i])];
            const auto r = X_->row(i);
            for (std::size_t j = 0; j < d; ++j)
                c[j] += r[j];
            ++counts[static_cast<std::size_t>(labels[i])];
        }
        for (std::size_t k = 0; k < centroids.size(); ++k) {
            if (counts[k] == 0)
                continue;
            for (auto& v : centroids[k])
                v /= static_cast<double>(counts[k]);
        }
    }

private:
    const DataMatrix* X_;
};

namespace detail {

/// K distinct point indices drawn uniformly; points with identical content
/// are skipped while enough distinct ones remain.
template <PointSpace Space>
std::vector<std::size_t> sample_initial_points(const Space& space, std::size_t K, Rng& rng)
{
    const std::size_t n = space.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::size_t> chosen;
    chosen.reserve(K);
    // Partial Fisher-Yates: draw until K pairwise-distinct points are found.
    std::size_t drawn = 0;
    for (; drawn < n && chosen.size() < K; ++drawn) {
        const auto j = static_cast<std::size_t>(uniform_int(rng, drawn, n - 1));
        std::swap(order[drawn], order[j]);
        const std::size_t cand = order[drawn];
        const bool fresh = std::none_of(chosen.begin(), chosen.end(),
                                        [&](std::size_t c) { return space.same_point(c, cand); });
        if (fresh)
            chosen.push_back(cand);
    }
    // Fewer than K distinct points exist: fill with duplicates in draw order.
    for (std::size_t t = 0; chosen.size() < K && t < n; ++t) {
        if (std::find(chosen.begin(), chosen.end(), order[t]) == chosen.end())
            chosen.push_back(order[t]);
    }
    return chosen;
}

/// K distinct point indices: the first uniform, each further one drawn with
/// probability proportional to its distance to the nearest chosen point.
/// Falls back to uniform draws once every remaining point is at distance 0.
template <PointSpace Space>
std::vector<std::size_t> sample_spread_points(const Space& space, std::size_t K, Rng& rng)
{
    const std::size_t n = space.size();
    std::vector<std::size_t> chosen{static_cast<std::size_t>(uniform_int(rng, 0, n - 1))};
    std::vector<double> dmin(n, std::numeric_limits<double>::infinity());
    while (chosen.size() < K) {
        const auto c = space.centroid_from_point(chosen.back());
        double total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            dmin[i] = std::min(dmin[i], std::max(0.0, space.distance(i, c)));
            if (std::find(chosen.begin(), chosen.end(), i) != chosen.end())
                dmin[i] = 0;
            total += dmin[i];
        }
        std::size_t pick = n;
        if (total > 0 && std::isfinite(total)) {
            const double u = static_cast<double>(uniform_int(rng, 0, (1ULL << 53) - 1)) / 9007199254740992.0;
            double acc = 0;
            for (std::size_t i = 0; i < n && pick == n; ++i) {
                acc += dmin[i];
                if (dmin[i] > 0 && u * total < acc)
                    pick = i;
            }
            for (std::size_t i = n; pick == n && i-- > 0;)
                if (dmin[i] > 0)
                    pick = i;
        } else {
            std::vector<std::size_t> rest;
            for (std::size_t i = 0; i < n; ++i)
                if (std::find(chosen.begin(), chosen.end(), i) == chosen.end())
                    rest.push_back(i);
            pick = rest[static_cast<std::size_t>(uniform_int(rng, 0, rest.size() - 1))];
        }
        chosen.push_back(pick);
    }
    return chosen;
}

/// Reorders `idx` so that its first `o` entries are the points with the
/// largest distances (ties: lower index first), in linear expected time.
inline void select_farthest(std::vector<std::size_t>& idx, std::span<const double> dist, std::size_t o)
{
    if (o == 0 || o >= idx.size())
        return;
    auto farther = [&](std::size_t a, std::size_t b) {
        return dist[a] > dist[b] || (dist[a] == dist[b] && a < b);
    };
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(o - 1), idx.end(), farther);
}

} // namespace detail

/// K-means-- over an arbitrary point space.
///
/// Each iteration computes every point's nearest-centroid distance, labels the
/// o farthest points as outliers, assigns the rest to their nearest centroid
/// (ties to the lower index), and recomputes centroids over inliers only. A
/// cluster left empty takes over the inlier farthest from its own centroid
/// among clusters with at least two members. Iteration stops when the inlier
/// objective (or `stopping`, when given) changes by at most tol, or after
/// max_iter iterations.
template <PointSpace Space>
KMeansResult<typename Space::centroid_type>
kmeans_minus_minus(const Space& space, const KMeansOptions& opt,
                   const IterationObserver<typename Space::centroid_type>& observer = {},
                   const StoppingObjective<typename Space::centroid_type>& stopping = {})
{
    using Centroid = typename Space::centroid_type;
    const std::size_t n = space.size();
    if (opt.K == 0)
        throw Error("K must be >= 1");
    if (opt.K + opt.o > n)
        throw Error("K + o = " + std::to_string(opt.K + opt.o) + " exceeds the number of points " +
                    std::to_string(n));
    if (!(opt.tol >= 0))
        throw Error("tol must be >= 0");

    Rng rng(derive_seed(opt.seed, 0xc3a7));
    KMeansResult<Centroid> res;
    const auto initial = opt.init == InitMethod::Spread ? detail::sample_spread_points(space, opt.K, rng)
                                                        : detail::sample_initial_points(space, opt.K, rng);
    for (std::size_t i : initial)
        res.centroids.push_back(space.centroid_from_point(i));

    res.partition.K = opt.K;
    res.partition.labels.assign(n, 0);
    std::vector<int> nearest(n, 0);
    std::vector<double> dist(n, 0.0);
    std::vector<std::size_t> order(n);

    const std::size_t max_iter = std::max<std::size_t>(1, opt.max_iter);
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        parallel_for(n, [&](std::size_t i) {
            double best = std::numeric_limits<double>::infinity();
            int best_k = 0;
            for (std::size_t k = 0; k < opt.K; ++k) {
                const double dk = space.distance(i, res.centroids[k]);
                if (dk < best) {
                    best = dk;
                    best_k = static_cast<int>(k);
                }
            }
            nearest[i] = best_k;
            dist[i] = best;
        }, 512);

        std::iota(order.begin(), order.end(), 0);
        detail::select_farthest(order, dist, opt.o);
        auto& labels = res.partition.labels;
        labels = nearest;
        for (std::size_t t = 0; t < opt.o; ++t)
            labels[order[t]] = kOutlier;

        // Empty-cluster repair.
        std::vector<std::size_t> sizes = res.partition.cluster_sizes();
        for (std::size_t k = 0; k < opt.K; ++k) {
            if (sizes[k] != 0)
                continue;
            std::size_t donor = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (labels[i] == kOutlier || sizes[static_cast<std::size_t>(labels[i])] < 2)
                    continue;
                if (donor == n || dist[i] > dist[donor])
                    donor = i;
            }
            if (donor == n)
                throw Error("cannot repair empty cluster " + std::to_string(k));
            --sizes[static_cast<std::size_t>(labels[donor])];
            labels[donor] = static_cast<int>(k);
            sizes[k] = 1;
        }

        space.update_centroids(labels, res.centroids);
        res.counts = sizes;

        parallel_for(n, [&](std::size_t i) {
            dist[i] = labels[i] == kOutlier ? 0.0
                                            : space.distance(i, res.centroids[static_cast<std::size_t>(labels[i])]);
        }, 1024);
        double objective = 0;
        for (std::size_t i = 0; i < n; ++i)
            objective += dist[i];

        res.objective_trace.push_back(objective);
        res.iterations = iter + 1;
        if (observer)
            observer(iter, res.partition, res.centroids, objective);
        const double tracked = stopping ? stopping(iter, res.partition, res.centroids, objective) : objective;
        if (std::abs(previous - tracked) <= opt.tol) {
            res.converged = true;
            break;
        }
        previous = tracked;
    }
    return res;
}

/// Lloyd's K-means with squared Euclidean distance; K-means-- with o = 0.
inline LabeledPartition kmeans(const DataMatrix& X, std::size_t K, std::uint64_t seed,
                               std::size_t max_iter = 100, double tol = 1e-9)
{
    if (K > X.rows())
        throw Error("K = " + std::to_string(K) + " exceeds the number of points " + std::to_string(X.rows()));
    return kmeans_minus_minus(EuclideanSpace(X), {.K = K, .o = 0, .seed = seed, .max_iter = max_iter, .tol = tol})
        .partition;
}

/// Sum of squared distances from each inlier to the mean of its cluster.
inline double sse(const DataMatrix& X, const LabeledPartition& p)
{
    EuclideanSpace space(X);
    std::vector<std::vector<double>> c(p.K, std::vector<double>(X.cols(), 0.0));
    space.update_centroids(p.labels, c);
    double s = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p.labels[i] != kOutlier)
            s += space.distance(i, c[static_cast<std::size_t>(p.labels[i])]);
    }
    return s;
}

} // namespace cor

#endif
