#ifndef COR_PARTITION_SPACE_HPP
#define COR_PARTITION_SPACE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cor/common.hpp"
#include "cor/dataset.hpp"
#include "cor/kmeans.hpp"

namespace cor {

enum class BpStrategy { RPS, RFS, External };

inline std::string to_string(BpStrategy s)
{
    switch (s) {
    case BpStrategy::RPS: return "rps";
    case BpStrategy::RFS: return "rfs";
    case BpStrategy::External: return "external";
    }
    return "?";
}

inline BpStrategy parse_strategy(const std::string& s)
{
    std::string l = s;
    std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (l == "rps")
        return BpStrategy::RPS;
    if (l == "rfs")
        return BpStrategy::RFS;
    if (l == "external")
        return BpStrategy::External;
    throw Error("unknown basic-partition strategy '" + s + "' (expected rps or rfs)");
}

/// How an ensemble was produced; enough to regenerate it.
struct BpDescriptor {
    BpStrategy strategy = BpStrategy::External;
    std::uint64_t seed = 0;
    std::size_t K = 0;                 // cluster numbers drawn from {2..2K}
    double ratio = 1.0;                // RFS feature ratio
    std::vector<std::uint64_t> run_seeds;
    std::vector<std::size_t> requested_k;
    std::vector<std::vector<std::size_t>> features;  // RFS only

    bool operator==(const BpDescriptor&) const = default;
};

/// The ensemble of r basic partitions over the same n points.
struct BasicPartitionSet {
    std::vector<std::vector<int>> partitions;  // r label vectors, labels in [0, K_i)
    std::vector<std::size_t> cluster_counts;   // K_i
    BpDescriptor descriptor;

    std::size_t r() const { return partitions.size(); }
    std::size_t n() const { return partitions.empty() ? 0 : partitions.front().size(); }
    std::size_t R() const { return std::accumulate(cluster_counts.begin(), cluster_counts.end(), std::size_t{0}); }

    void validate() const
    {
        if (partitions.empty())
            throw Error("basic partition set is empty");
        if (cluster_counts.size() != partitions.size())
            throw Error("cluster count list does not match the number of partitions");
        for (std::size_t i = 0; i < partitions.size(); ++i) {
            if (partitions[i].size() != n())
                throw Error("basic partition " + std::to_string(i) + " covers a different number of points");
            if (cluster_counts[i] == 0)
                throw Error("basic partition " + std::to_string(i) + " has no clusters");
            for (int l : partitions[i]) {
                if (l < 0 || static_cast<std::size_t>(l) >= cluster_counts[i])
                    throw Error("basic partition " + std::to_string(i) + " has label " + std::to_string(l) +
                                " outside [0, " + std::to_string(cluster_counts[i]) + ")");
            }
        }
    }

    /// Content fingerprint used to check that two encodings share an ensemble.
    std::uint64_t fingerprint() const
    {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        auto feed = [&](std::uint64_t v) { h = mix_seed(h ^ v); };
        feed(partitions.size());
        for (std::size_t i = 0; i < partitions.size(); ++i) {
            feed(cluster_counts[i]);
            for (int l : partitions[i])
                feed(static_cast<std::uint64_t>(l));
        }
        return h;
    }
};

/// Relabels to 0..K'-1 in ascending order of the original label, dropping
/// labels that have no members. Returns K'.
inline std::size_t compact_labels(std::vector<int>& labels)
{
    std::map<int, int> remap;
    for (int l : labels)
        remap[l] = 0;
    int next = 0;
    for (auto& [from, to] : remap)
        to = next++;
    for (int& l : labels)
        l = remap.at(l);
    return remap.size();
}

struct BpOptions {
    std::size_t max_iter = 100;
    double tol = 1e-9;
};

namespace detail {

inline BasicPartitionSet generate_bps(const DataMatrix& X, std::size_t r, std::size_t K, std::uint64_t seed,
                                      BpStrategy strategy, double ratio, const BpOptions& opt)
{
    if (r < 1)
        throw Error("need at least one basic partition");
    if (K < 1)
        throw Error("K must be >= 1");
    if (2 * K > X.rows())
        throw Error("2K = " + std::to_string(2 * K) + " exceeds the number of points " + std::to_string(X.rows()));
    std::size_t n_features = X.cols();
    if (strategy == BpStrategy::RFS) {
        if (!(ratio > 0.0 && ratio <= 1.0))
            throw Error("feature ratio must lie in (0, 1]");
        n_features = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(X.cols()) - 1e-12));
        if (n_features < 1)
            throw Error("feature ratio selects no features");
    }

    BasicPartitionSet bps;
    bps.partitions.resize(r);
    bps.cluster_counts.resize(r);
    auto& desc = bps.descriptor;
    desc = {strategy, seed, K, strategy == BpStrategy::RFS ? ratio : 1.0, {}, {}, {}};
    desc.run_seeds.resize(r);
    desc.requested_k.resize(r);
    if (strategy == BpStrategy::RFS)
        desc.features.resize(r);

    // Draws happen up front so each run depends only on (seed, run index).
    for (std::size_t i = 0; i < r; ++i) {
        desc.run_seeds[i] = derive_seed(seed, i);
        Rng rng(desc.run_seeds[i]);
        desc.requested_k[i] = static_cast<std::size_t>(uniform_int(rng, 2, 2 * K));
        if (strategy == BpStrategy::RFS) {
            std::vector<std::size_t> cols(X.cols());
            std::iota(cols.begin(), cols.end(), 0);
            shuffle(cols, rng);
            cols.resize(n_features);
            std::sort(cols.begin(), cols.end());
            desc.features[i] = std::move(cols);
        }
    }

    auto run_one = [&](std::size_t i) {
        const std::uint64_t kmeans_seed = derive_seed(desc.run_seeds[i], 1);
        LabeledPartition p;
        if (strategy == BpStrategy::RFS) {
            const DataMatrix sub = X.select_columns(desc.features[i]);
            p = kmeans(sub, desc.requested_k[i], kmeans_seed, opt.max_iter, opt.tol);
        } else {
            p = kmeans(X, desc.requested_k[i], kmeans_seed, opt.max_iter, opt.tol);
        }
        bps.cluster_counts[i] = compact_labels(p.labels);
        bps.partitions[i] = std::move(p.labels);
    };
    // Runs are independent; each one writes only its own slot.
    parallel_for(r, run_one, 1);
    return bps;
}

} // namespace detail

/// Random parameter selection: r K-means runs, each with a cluster number
/// drawn uniformly from {2..2K}.
inline BasicPartitionSet generate_bps_rps(const DataMatrix& X, std::size_t r, std::size_t K, std::uint64_t seed,
                                          const BpOptions& opt = {})
{
    return detail::generate_bps(X, r, K, seed, BpStrategy::RPS, 1.0, opt);
}

/// Random feature selection: like RPS, but each run clusters on
/// ceil(ratio * d) randomly chosen features.
inline BasicPartitionSet generate_bps_rfs(const DataMatrix& X, std::size_t r, std::size_t K, double ratio,
                                          std::uint64_t seed, const BpOptions& opt = {})
{
    return detail::generate_bps(X, r, K, seed, BpStrategy::RFS, ratio, opt);
}

/// Wraps externally produced label vectors as an ensemble (labels compacted).
inline BasicPartitionSet make_bps(std::vector<std::vector<int>> partitions)
{
    BasicPartitionSet bps;
    for (auto& p : partitions) {
        if (std::any_of(p.begin(), p.end(), [](int l) { return l < 0; }))
            throw Error("basic partition labels must be non-negative");
        bps.cluster_counts.push_back(compact_labels(p));
        bps.partitions.push_back(std::move(p));
    }
    bps.validate();
    return bps;
}

// ---------------------------------------------------------------------------
// Binary encodings

/// One-hot encoding B of an ensemble (or its flip B~ when `flipped`).
///
/// Row l has one active column per partition: offset_i + label. B holds ones
/// exactly at the active columns; B~ holds ones everywhere else, so both are
/// stored as the same n x r index table.
class BinaryEncoding {
public:
    BinaryEncoding() = default;

    BinaryEncoding(const BasicPartitionSet& bps, bool flipped) : flipped_(flipped)
    {
        bps.validate();
        n_ = bps.n();
        r_ = bps.r();
        offsets_.resize(r_ + 1, 0);
        for (std::size_t i = 0; i < r_; ++i)
            offsets_[i + 1] = offsets_[i] + static_cast<std::uint32_t>(bps.cluster_counts[i]);
        active_.resize(n_ * r_);
        for (std::size_t l = 0; l < n_; ++l) {
            for (std::size_t i = 0; i < r_; ++i)
                active_[l * r_ + i] = offsets_[i] + static_cast<std::uint32_t>(bps.partitions[i][l]);
        }
        provenance_ = bps.fingerprint();
    }

    std::size_t n() const { return n_; }
    std::size_t r() const { return r_; }
    std::size_t R() const { return offsets_.empty() ? 0 : offsets_.back(); }
    bool flipped() const { return flipped_; }
    std::uint64_t provenance() const { return provenance_; }

    /// Column range [offsets[i], offsets[i+1]) belongs to partition i.
    std::span<const std::uint32_t> offsets() const { return offsets_; }

    /// Columns where row l of B is 1 (ascending, one per partition).
    std::span<const std::uint32_t> active(std::size_t l) const { return {active_.data() + l * r_, r_}; }

    int at(std::size_t l, std::size_t col) const
    {
        const auto a = active(l);
        const bool hit = std::binary_search(a.begin(), a.end(), static_cast<std::uint32_t>(col));
        return (hit != flipped_) ? 1 : 0;
    }

    std::size_t row_sum(std::size_t l) const
    {
        (void)l;
        return flipped_ ? R() - r_ : r_;
    }

    /// Dense copy of row l (length R); meant for tests and small inputs.
    std::vector<double> dense_row(std::size_t l) const
    {
        std::vector<double> row(R(), flipped_ ? 1.0 : 0.0);
        for (auto c : active(l))
            row[c] = flipped_ ? 0.0 : 1.0;
        return row;
    }

private:
    std::size_t n_ = 0;
    std::size_t r_ = 0;
    bool flipped_ = false;
    std::uint64_t provenance_ = 0;
    std::vector<std::uint32_t> offsets_;
    std::vector<std::uint32_t> active_;
};

inline BinaryEncoding encode(const BasicPartitionSet& bps, bool flipped)
{
    return BinaryEncoding(bps, flipped);
}

/// Recovers the ensemble labels from an encoding.
inline std::vector<std::vector<int>> decode(const BinaryEncoding& enc)
{
    std::vector<std::vector<int>> parts(enc.r(), std::vector<int>(enc.n()));
    const auto off = enc.offsets();
    for (std::size_t l = 0; l < enc.n(); ++l) {
        const auto a = enc.active(l);
        for (std::size_t i = 0; i < enc.r(); ++i)
            parts[i][l] = static_cast<int>(a[i] - off[i]);
    }
    return parts;
}

/// The n x 2R matrix [B B~]. Holds a reference to B; B~ is implied.
class ConcatEncoding {
public:
    ConcatEncoding(const BinaryEncoding& b, const BinaryEncoding& b_flipped) : b_(&b)
    {
        if (b.flipped() || !b_flipped.flipped())
            throw Error("concat expects (B, B~): the first encoding unflipped, the second flipped");
        if (b.provenance() != b_flipped.provenance() || b.n() != b_flipped.n() || b.R() != b_flipped.R())
            throw Error("concat: encodings come from different basic partition sets");
    }

    const BinaryEncoding& base() const { return *b_; }
    std::size_t n() const { return b_->n(); }
    std::size_t cols() const { return 2 * b_->R(); }

    int at(std::size_t l, std::size_t col) const
    {
        const std::size_t R = b_->R();
        const int b = b_->at(l, col < R ? col : col - R);
        return col < R ? b : 1 - b;
    }

    std::size_t row_sum(std::size_t l) const
    {
        (void)l;
        return b_->R();
    }

    std::vector<double> dense_row(std::size_t l) const
    {
        auto left = b_->dense_row(l);
        std::vector<double> row(left);
        for (double v : left)
            row.push_back(1.0 - v);
        return row;
    }

private:
    const BinaryEncoding* b_;
};

inline ConcatEncoding concat(const BinaryEncoding& b, const BinaryEncoding& b_flipped)
{
    return ConcatEncoding(b, b_flipped);
}

} // namespace cor

#endif
