#ifndef COR_COR_HPP
#define COR_COR_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cor/common.hpp"
#include "cor/dataset.hpp"
#include "cor/kmeans.hpp"
#include "cor/partition_space.hpp"

namespace cor {

inline constexpr double kDefaultEpsilon = 1e-12;

inline double clamp_probability(double t, double epsilon)
{
    return std::clamp(t, epsilon, 1.0 - epsilon);
}

/// Scalar Bregman divergence generated by x log x:
///   s log(s / t') - s + t',   t' = clamp(t, epsilon, 1 - epsilon),
/// with 0 log(0 / t') = 0.
inline double generalized_kl(double s, double t, double epsilon = kDefaultEpsilon)
{
    const double tc = clamp_probability(t, epsilon);
    const double head = s > 0.0 ? s * std::log(s / tc) : 0.0;
    return head - s + tc;
}

/// Binary cross-entropy between a binary row and a probability vector,
/// which is what the paired divergence f(b, m) + f(1-b, 1-m) reduces to.
/// m and 1 - m are clamped separately, as the two halves of the pair are.
inline double point_distance(std::span<const double> b, std::span<const double> m,
                             double epsilon = kDefaultEpsilon)
{
    if (b.size() != m.size())
        throw Error("point_distance: row has " + std::to_string(b.size()) + " columns, centroid has " +
                    std::to_string(m.size()));
    double s = 0;
    for (std::size_t c = 0; c < b.size(); ++c) {
        const double hit = clamp_probability(m[c], epsilon);
        const double miss = clamp_probability(1.0 - m[c], epsilon);
        s -= b[c] * std::log(hit) + (1.0 - b[c]) * std::log(miss);
    }
    return s;
}

/// Centroid over [B B~]: m holds the B half; the B~ half is 1 - m.
///
/// `weight` and `base` cache the clamped logs so that a row with active
/// columns A is scored as base + sum_{c in A} weight[c].
struct KlCentroid {
    std::vector<double> m;
    std::size_t count = 0;
    double epsilon = kDefaultEpsilon;
    std::vector<double> weight;
    double base = 0.0;

    void refresh()
    {
        weight.resize(m.size());
        base = 0.0;
        for (std::size_t c = 0; c < m.size(); ++c) {
            const double miss = -std::log(clamp_probability(1.0 - m[c], epsilon));
            base += miss;
            weight[c] = -std::log(clamp_probability(m[c], epsilon)) - miss;
        }
    }
};

/// Rows of [B B~] under the paired generalized-KL distance.
class KlSpace {
public:
    using centroid_type = KlCentroid;

    KlSpace(const ConcatEncoding& points, double epsilon) : points_(&points.base()), epsilon_(epsilon) {}

    std::size_t size() const { return points_->n(); }

    KlCentroid centroid_from_point(std::size_t i) const
    {
        KlCentroid c;
        c.epsilon = epsilon_;
        c.m.assign(points_->R(), 0.0);
        for (auto col : points_->active(i))
            c.m[col] = 1.0;
        c.count = 1;
        c.refresh();
        return c;
    }

    double distance(std::size_t i, const KlCentroid& c) const
    {
        double s = c.base;
        for (auto col : points_->active(i))
            s += c.weight[col];
        return s;
    }

    bool same_point(std::size_t a, std::size_t b) const
    {
        const auto ra = points_->active(a), rb = points_->active(b);
        return std::equal(ra.begin(), ra.end(), rb.begin());
    }

    void update_centroids(std::span<const int> labels, std::vector<KlCentroid>& centroids) const
    {
        for (auto& c : centroids) {
            c.m.assign(points_->R(), 0.0);
            c.count = 0;
            c.epsilon = epsilon_;
        }
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == kOutlier)
                continue;
            auto& c = centroids[static_cast<std::size_t>(labels[i])];
            for (auto col : points_->active(i))
                c.m[col] += 1.0;
            ++c.count;
        }
        for (auto& c : centroids) {
            if (c.count > 0) {
                for (auto& v : c.m)
                    v /= static_cast<double>(c.count);
            }
            c.refresh();
        }
    }

private:
    const BinaryEncoding* points_;
    double epsilon_;
};

namespace detail {

inline double entropy_term(double p)
{
    return p > 0.0 ? -p * std::log(p) : 0.0;
}

} // namespace detail

/// Size-weighted sum of per-cluster holoentropies over the inliers:
///   sum_k |C_k| / (n - o) * sum_c [ -p log p - (1 - p) log(1 - p) ],
/// p being the fraction of C_k's members with a one in column c of B.
inline double holoentropy_objective(const BinaryEncoding& B, const LabeledPartition& partition)
{
    if (B.flipped())
        throw Error("holoentropy_objective expects the unflipped encoding B");
    if (partition.size() != B.n())
        throw Error("partition covers " + std::to_string(partition.size()) + " points, encoding has " +
                    std::to_string(B.n()));
    partition.validate();
    const std::size_t R = B.R();
    std::vector<std::size_t> sizes(partition.K, 0);
    std::vector<std::size_t> ones(partition.K * R, 0);
    std::size_t inliers = 0;
    for (std::size_t l = 0; l < B.n(); ++l) {
        const int k = partition.labels[l];
        if (k == kOutlier)
            continue;
        ++sizes[static_cast<std::size_t>(k)];
        ++inliers;
        for (auto col : B.active(l))
            ++ones[static_cast<std::size_t>(k) * R + col];
    }
    double total = 0;
    for (std::size_t k = 0; k < partition.K; ++k) {
        if (sizes[k] == 0)
            throw Error("holoentropy_objective: cluster " + std::to_string(k) + " is empty");
        double h = 0;
        for (std::size_t c = 0; c < R; ++c) {
            const double p = static_cast<double>(ones[k * R + c]) / static_cast<double>(sizes[k]);
            h += detail::entropy_term(p) + detail::entropy_term(1.0 - p);
        }
        total += static_cast<double>(sizes[k]) / static_cast<double>(inliers) * h;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Solver

struct CorConfig {
    std::size_t K = 2;
    std::size_t o = 0;
    std::size_t r = 100;
    BpStrategy bp_strategy = BpStrategy::RPS;
    double ratio = 0.5;  // used by RFS only
    std::uint64_t seed = 0;
    std::size_t max_iter = 100;
    double tol = 1e-9;
    double epsilon = kDefaultEpsilon;
    InitMethod init = InitMethod::Spread;

    void validate() const
    {
        if (K < 1)
            throw Error("K must be >= 1");
        if (r < 1)
            throw Error("r must be >= 1");
        if (max_iter < 1)
            throw Error("max_iter must be >= 1");
        if (!(tol >= 0))
            throw Error("tol must be >= 0");
        if (!(epsilon > 0 && epsilon < 0.5))
            throw Error("epsilon must lie in (0, 0.5)");
        if (bp_strategy == BpStrategy::RFS && !(ratio > 0 && ratio <= 1))
            throw Error("feature ratio must lie in (0, 1]");
    }

    bool operator==(const CorConfig&) const = default;
};

struct CorResult {
    LabeledPartition partition;
    std::vector<KlCentroid> centroids;
    std::vector<double> objective_trace;  // holoentropy objective over inliers, per iteration
    std::vector<double> distance_trace;   // summed inlier distances, per iteration
    std::size_t iterations = 0;
    bool converged = false;
    CorConfig config;
    double bp_ms = 0.0;
    double solve_ms = 0.0;
};

/// Per-iteration view handed to a CorObserver after each centroid update.
struct CorIteration {
    std::size_t iteration;
    const LabeledPartition& partition;
    const std::vector<KlCentroid>& centroids;
    const BinaryEncoding& B;
    double objective;
};

using CorObserver = std::function<void(const CorIteration&)>;

namespace detail {

inline std::uint64_t bp_seed(std::uint64_t seed) { return derive_seed(seed, 0xb9); }
inline std::uint64_t init_seed(std::uint64_t seed) { return derive_seed(seed, 0x1417); }

inline double elapsed_ms(std::chrono::steady_clock::time_point since)
{
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

} // namespace detail

/// Runs K-means-- with the paired generalized-KL distance on [B B~] built
/// from an existing ensemble. The trace records the holoentropy objective;
/// iteration stops once it changes by at most cfg.tol.
inline CorResult run_cor_from_bps(const BasicPartitionSet& bps, const CorConfig& cfg, const CorObserver& observer = {})
{
    cfg.validate();
    bps.validate();
    if (cfg.K + cfg.o > bps.n())
        throw Error("K + o = " + std::to_string(cfg.K + cfg.o) + " exceeds the number of points " +
                    std::to_string(bps.n()));
    const auto start = std::chrono::steady_clock::now();

    const BinaryEncoding B = encode(bps, false);
    const BinaryEncoding B_flip = encode(bps, true);
    const ConcatEncoding points = concat(B, B_flip);
    const KlSpace space(points, cfg.epsilon);

    CorResult out;
    out.config = cfg;
    auto track = [&](std::size_t iter, const LabeledPartition& p, const std::vector<KlCentroid>& c, double) {
        const double h = holoentropy_objective(B, p);
        out.objective_trace.push_back(h);
        if (observer)
            observer(CorIteration{iter, p, c, B, h});
        return h;
    };
    KMeansOptions opt{.K = cfg.K, .o = cfg.o, .seed = detail::init_seed(cfg.seed), .max_iter = cfg.max_iter,
                      .tol = cfg.tol, .init = cfg.init};
    auto res = kmeans_minus_minus(space, opt, {}, track);

    out.partition = std::move(res.partition);
    out.centroids = std::move(res.centroids);
    out.distance_trace = std::move(res.objective_trace);
    out.iterations = res.iterations;
    out.converged = res.converged;
    out.solve_ms = detail::elapsed_ms(start);
    return out;
}

/// Full pipeline: ensemble generation, encoding, and the K-means-- solve.
inline CorResult run_cor(const DataMatrix& X, const CorConfig& cfg, const CorObserver& observer = {})
{
    cfg.validate();
    if (cfg.K + cfg.o > X.rows())
        throw Error("K + o = " + std::to_string(cfg.K + cfg.o) + " exceeds the number of points " +
                    std::to_string(X.rows()));
    const auto start = std::chrono::steady_clock::now();
    const BasicPartitionSet bps = cfg.bp_strategy == BpStrategy::RFS
                                      ? generate_bps_rfs(X, cfg.r, cfg.K, cfg.ratio, detail::bp_seed(cfg.seed))
                                      : generate_bps_rps(X, cfg.r, cfg.K, detail::bp_seed(cfg.seed));
    const double bp_ms = detail::elapsed_ms(start);
    CorResult out = run_cor_from_bps(bps, cfg, observer);
    out.bp_ms = bp_ms;
    return out;
}

/// Ensemble that run_cor would build for this input and configuration.
inline BasicPartitionSet cor_basic_partitions(const DataMatrix& X, const CorConfig& cfg)
{
    cfg.validate();
    return cfg.bp_strategy == BpStrategy::RFS ? generate_bps_rfs(X, cfg.r, cfg.K, cfg.ratio, detail::bp_seed(cfg.seed))
                                              : generate_bps_rps(X, cfg.r, cfg.K, detail::bp_seed(cfg.seed));
}

} // namespace cor

#endif
