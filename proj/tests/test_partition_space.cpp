#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "cor/dataset.hpp"
#include "cor/partition_space.hpp"

using namespace cor;

namespace {

DataMatrix blobs(std::uint64_t seed, std::size_t d = 2)
{
    return synth_blobs({.n_per_cluster = 30, .K = 3, .d = d, .cluster_sep = 10, .o = 4, .outlier_scale = 30, .seed = seed})
        .data;
}

} // namespace

TEST(GenerateRps, ClusterNumbersInRange)
{
    const auto X = blobs(1);
    const auto bps = generate_bps_rps(X, 5, 3, 9);
    ASSERT_EQ(bps.r(), 5u);
    EXPECT_EQ(bps.n(), X.rows());
    for (std::size_t i = 0; i < bps.r(); ++i) {
        EXPECT_GE(bps.descriptor.requested_k[i], 2u);
        EXPECT_LE(bps.descriptor.requested_k[i], 6u);
        EXPECT_GE(bps.cluster_counts[i], 1u);
        EXPECT_LE(bps.cluster_counts[i], bps.descriptor.requested_k[i]);
    }
    EXPECT_NO_THROW(bps.validate());
}

TEST(GenerateRps, SingleClusterRangeCollapsesToTwo)
{
    const auto bps = generate_bps_rps(blobs(2), 1, 1, 3);
    ASSERT_EQ(bps.r(), 1u);
    EXPECT_EQ(bps.descriptor.requested_k[0], 2u);
    EXPECT_EQ(bps.cluster_counts[0], 2u);
}

TEST(GenerateRps, DeterministicForSeed)
{
    const auto X = blobs(3);
    const auto a = generate_bps_rps(X, 8, 3, 21);
    const auto b = generate_bps_rps(X, 8, 3, 21);
    EXPECT_EQ(a.partitions, b.partitions);
    EXPECT_EQ(a.cluster_counts, b.cluster_counts);
    EXPECT_EQ(a.descriptor, b.descriptor);
    EXPECT_NE(generate_bps_rps(X, 8, 3, 22).partitions, a.partitions);
}

// Each run depends only on (seed, run index), so a shorter ensemble is a
// prefix of a longer one; this is what makes parallel generation reproducible.
TEST(GenerateRps, RunsAreIndependentOfEnsembleSize)
{
    const auto X = blobs(4);
    const auto small = generate_bps_rps(X, 3, 3, 5);
    const auto large = generate_bps_rps(X, 10, 3, 5);
    for (std::size_t i = 0; i < 3; ++i)
        EXPECT_EQ(small.partitions[i], large.partitions[i]);
}

TEST(GenerateRps, RejectsTooLargeK)
{
    const auto X = DataMatrix::from_rows({{0}, {1}, {2}});
    EXPECT_THROW(generate_bps_rps(X, 2, 2, 0), Error);
}

TEST(GenerateRfs, FeatureCountIsCeilingOfRatio)
{
    const auto X10 = blobs(5, 10);
    const auto bps = generate_bps_rfs(X10, 6, 3, 0.5, 1);
    for (const auto& f : bps.descriptor.features) {
        EXPECT_EQ(f.size(), 5u);
        EXPECT_TRUE(std::is_sorted(f.begin(), f.end()));
        EXPECT_EQ(std::adjacent_find(f.begin(), f.end()), f.end());
    }
    const auto X3 = blobs(6, 3);
    for (const auto& f : generate_bps_rfs(X3, 4, 3, 0.4, 2).descriptor.features)
        EXPECT_EQ(f.size(), 2u);
    const auto X8 = blobs(6, 8);
    EXPECT_EQ(generate_bps_rfs(X8, 1, 2, 0.5, 3).descriptor.features[0].size(), 4u);
}

TEST(GenerateRfs, FullRatioUsesEveryFeature)
{
    const auto X = blobs(7, 4);
    const auto bps = generate_bps_rfs(X, 3, 3, 1.0, 4);
    for (const auto& f : bps.descriptor.features)
        EXPECT_EQ(f, (std::vector<std::size_t>{0, 1, 2, 3}));
    EXPECT_THROW(generate_bps_rfs(X, 3, 3, 0.0, 4), Error);
    EXPECT_THROW(generate_bps_rfs(X, 3, 3, 1.5, 4), Error);
}

TEST(CompactLabels, DropsEmptyLabels)
{
    std::vector<int> l{4, 0, 4, 7};
    EXPECT_EQ(compact_labels(l), 3u);
    EXPECT_EQ(l, (std::vector<int>{1, 0, 1, 2}));
}

TEST(Encode, SinglePartition)
{
    const auto bps = make_bps({{0, 1, 0}});
    const auto B = encode(bps, false);
    EXPECT_EQ(B.R(), 2u);
    EXPECT_EQ(B.dense_row(0), (std::vector<double>{1, 0}));
    EXPECT_EQ(B.dense_row(1), (std::vector<double>{0, 1}));
    EXPECT_EQ(B.dense_row(2), (std::vector<double>{1, 0}));
    const auto Bt = encode(bps, true);
    EXPECT_EQ(Bt.dense_row(0), (std::vector<double>{0, 1}));
    EXPECT_EQ(Bt.dense_row(1), (std::vector<double>{1, 0}));
    EXPECT_EQ(Bt.dense_row(2), (std::vector<double>{0, 1}));
}

TEST(Encode, TwoPartitions)
{
    const auto bps = make_bps({{0, 1}, {1, 0}});
    const auto B = encode(bps, false);
    EXPECT_EQ(B.dense_row(0), (std::vector<double>{1, 0, 0, 1}));
    EXPECT_EQ(B.dense_row(1), (std::vector<double>{0, 1, 1, 0}));
    EXPECT_EQ(B.row_sum(0), 2u);
}

TEST(Concat, RowsSumToR)
{
    const auto bps = make_bps({{0, 1}, {1, 0}});
    const auto B = encode(bps, false);
    const auto Bt = encode(bps, true);
    const auto C = concat(B, Bt);
    EXPECT_EQ(C.cols(), 8u);
    for (std::size_t l = 0; l < 2; ++l) {
        const auto row = C.dense_row(l);
        EXPECT_EQ(std::accumulate(row.begin(), row.end(), 0.0), 4.0);
        for (std::size_t c = 0; c < 8; ++c)
            EXPECT_EQ(C.at(l, c), static_cast<int>(row[c]));
    }
}

TEST(Concat, SinglePartitionThreePoints)
{
    const auto bps = make_bps({{0, 1, 0}});
    const auto B = encode(bps, false);
    const auto Bt = encode(bps, true);
    const auto C = concat(B, Bt);
    EXPECT_EQ(C.dense_row(0), (std::vector<double>{1, 0, 0, 1}));
    EXPECT_EQ(C.dense_row(1), (std::vector<double>{0, 1, 1, 0}));
}

TEST(Concat, RejectsSwappedOrForeignEncodings)
{
    const auto bps = make_bps({{0, 1}, {1, 0}});
    const auto B = encode(bps, false);
    const auto Bt = encode(bps, true);
    EXPECT_THROW(concat(Bt, B), Error);
    EXPECT_THROW(concat(B, B), Error);
    const auto other = make_bps({{0, 1}, {0, 1}});
    EXPECT_THROW(concat(B, encode(other, true)), Error);
}

// Property: row sums, per-block one-hot structure, B + B~ = 1 and exact
// recovery of the ensemble, over random ensembles.
TEST(Encode, StructuralInvariantsOnRandomEnsembles)
{
    std::mt19937_64 gen(17);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 1 + gen() % 40;
        const std::size_t r = 1 + gen() % 6;
        std::vector<std::vector<int>> parts(r, std::vector<int>(n));
        for (auto& p : parts) {
            const int k = 1 + static_cast<int>(gen() % 5);
            for (auto& l : p)
                l = static_cast<int>(gen() % static_cast<unsigned>(k));
        }
        const auto bps = make_bps(parts);
        const auto B = encode(bps, false);
        const auto Bt = encode(bps, true);
        const auto off = B.offsets();
        for (std::size_t l = 0; l < n; ++l) {
            const auto b = B.dense_row(l);
            const auto bt = Bt.dense_row(l);
            EXPECT_EQ(std::accumulate(b.begin(), b.end(), 0.0), static_cast<double>(r));
            EXPECT_EQ(std::accumulate(bt.begin(), bt.end(), 0.0), static_cast<double>(B.R() - r));
            for (std::size_t c = 0; c < B.R(); ++c)
                EXPECT_EQ(b[c] + bt[c], 1.0);
            for (std::size_t i = 0; i < r; ++i)
                EXPECT_EQ(std::accumulate(b.begin() + off[i], b.begin() + off[i + 1], 0.0), 1.0);
        }
        EXPECT_EQ(decode(B), bps.partitions);
    }
}
