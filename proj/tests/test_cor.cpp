#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cor/cor.hpp"
#include "cor/metrics.hpp"
#include "oracles.hpp"

using namespace cor;

namespace {

std::vector<std::vector<double>> dense(const BinaryEncoding& B)
{
    std::vector<std::vector<double>> rows;
    for (std::size_t l = 0; l < B.n(); ++l)
        rows.push_back(B.dense_row(l));
    return rows;
}

BasicPartitionSet random_ensemble(std::mt19937_64& gen, std::size_t n, std::size_t r, int max_k)
{
    std::vector<std::vector<int>> parts(r, std::vector<int>(n));
    for (auto& p : parts) {
        const int k = 2 + static_cast<int>(gen() % static_cast<unsigned>(max_k - 1));
        for (auto& l : p)
            l = static_cast<int>(gen() % static_cast<unsigned>(k));
    }
    return make_bps(parts);
}

} // namespace

TEST(GeneralizedKl, Examples)
{
    EXPECT_NEAR(generalized_kl(1, 0.25), std::log(4.0) - 0.75, 1e-12);
    EXPECT_NEAR(generalized_kl(1, 0.25), 0.636294, 1e-6);
    EXPECT_NEAR(generalized_kl(0, 0.5), 0.5, 1e-15);
    EXPECT_NEAR(generalized_kl(1, 1), 0.0, 1e-11);
    // clamped to epsilon: log(1e12) - 1 + 1e-12
    EXPECT_NEAR(generalized_kl(1, 0), 12 * std::log(10.0) - 1, 1e-9);
}

TEST(PointDistance, Examples)
{
    const std::vector<double> b{1, 0};
    EXPECT_NEAR(point_distance(b, std::vector<double>{0.5, 0.5}), 2 * std::log(2.0), 1e-12);
    EXPECT_NEAR(point_distance(std::vector<double>{1}, std::vector<double>{0.5}), 0.693147, 1e-6);
    EXPECT_NEAR(point_distance(std::vector<double>{1}, std::vector<double>{0.0}), -std::log(1e-12), 1e-6);
    EXPECT_NEAR(point_distance(b, b), 0.0, 1e-10);
    EXPECT_THROW(point_distance(b, std::vector<double>{0.5}), Error);
}

// The closed form has to agree with the paired divergence summed from its
// definition for arbitrary binary rows and probability vectors.
TEST(PointDistance, MatchesPairedDivergence)
{
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 500; ++t) {
        const std::size_t R = 1 + gen() % 12;
        std::vector<double> b(R), m(R);
        for (std::size_t c = 0; c < R; ++c) {
            b[c] = static_cast<double>(gen() % 2);
            m[c] = (t % 5 == 0) ? static_cast<double>(gen() % 2) : u(gen);
        }
        EXPECT_NEAR(point_distance(b, m), oracle::paired_kl_distance(b, m, kDefaultEpsilon), 1e-9);
    }
}

TEST(KlSpace, DistanceMatchesDenseComputation)
{
    std::mt19937_64 gen(5);
    const auto bps = random_ensemble(gen, 25, 4, 4);
    const auto B = encode(bps, false);
    const auto Bt = encode(bps, true);
    const auto C = concat(B, Bt);
    const KlSpace space(C, kDefaultEpsilon);
    std::vector<int> labels(25);
    for (auto& l : labels)
        l = static_cast<int>(gen() % 3);
    std::vector<KlCentroid> cents(3);
    space.update_centroids(labels, cents);
    for (std::size_t i = 0; i < 25; ++i) {
        for (const auto& c : cents) {
            // generalized KL summed over all 2R columns of [B B~]
            std::vector<double> full(c.m);
            for (double v : c.m)
                full.push_back(1 - v);
            const auto row = C.dense_row(i);
            double direct = 0;
            for (std::size_t col = 0; col < row.size(); ++col)
                direct += generalized_kl(row[col], full[col]);
            EXPECT_NEAR(space.distance(i, c), direct, 1e-9);
            EXPECT_NEAR(space.distance(i, c), point_distance(B.dense_row(i), c.m), 1e-9);
        }
    }
}

TEST(Holoentropy, Examples)
{
    // identical rows: zero entropy
    {
        const auto B = encode(make_bps({{0, 0}, {1, 1}}), false);
        EXPECT_NEAR(holoentropy_objective(B, {{0, 0}, 1}), 0.0, 1e-15);
    }
    // two rows differing in every column of a single partition
    {
        const auto B = encode(make_bps({{0, 1}}), false);
        EXPECT_NEAR(holoentropy_objective(B, {{0, 0}, 1}), 2 * std::log(2.0), 1e-12);
    }
    // the outlier is left out of the sum and of the normalizer
    {
        const auto B = encode(make_bps({{0, 1, 0, 1}}), false);
        const double h = holoentropy_objective(B, {{0, 0, 1, kOutlier}, 2});
        EXPECT_NEAR(h, 2.0 / 3.0 * 2 * std::log(2.0), 1e-12);
    }
}

TEST(Holoentropy, RejectsBadInput)
{
    const auto bps = make_bps({{0, 1, 0}});
    const auto B = encode(bps, false);
    EXPECT_THROW(holoentropy_objective(B, {{0, 0, 0}, 2}), Error);
    EXPECT_THROW(holoentropy_objective(encode(bps, true), {{0, 0, 1}, 2}), Error);
    EXPECT_THROW(holoentropy_objective(B, {{0, 1}, 2}), Error);
}

TEST(Holoentropy, MatchesDenseOracle)
{
    std::mt19937_64 gen(7);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 6 + gen() % 20;
        const auto bps = random_ensemble(gen, n, 1 + gen() % 5, 5);
        const auto B = encode(bps, false);
        const std::size_t K = 1 + gen() % 3;
        LabeledPartition p{std::vector<int>(n), K};
        for (std::size_t i = 0; i < n; ++i)
            p.labels[i] = i < K ? static_cast<int>(i) : static_cast<int>(gen() % (K + 1)) - 1;
        EXPECT_NEAR(holoentropy_objective(B, p), oracle::dense_holoentropy(dense(B), p.labels, K), 1e-10);
    }
}

// With centroids set to cluster means, the summed inlier distance over
// [B B~] equals (n - o) times the holoentropy objective.
TEST(Holoentropy, EqualsScaledInlierDistance)
{
    std::mt19937_64 gen(11);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 10 + gen() % 30;
        const auto bps = random_ensemble(gen, n, 1 + gen() % 6, 5);
        const auto B = encode(bps, false);
        const auto Bt = encode(bps, true);
        const auto C = concat(B, Bt);
        const KlSpace space(C, kDefaultEpsilon);
        const std::size_t K = 1 + gen() % 3;
        LabeledPartition p{std::vector<int>(n), K};
        std::size_t o = 0;
        for (std::size_t i = 0; i < n; ++i) {
            p.labels[i] = i < K ? static_cast<int>(i) : static_cast<int>(gen() % (K + 1)) - 1;
            o += p.labels[i] == kOutlier ? 1 : 0;
        }
        std::vector<KlCentroid> cents(K);
        space.update_centroids(p.labels, cents);
        double total = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (p.labels[i] != kOutlier)
                total += space.distance(i, cents[static_cast<std::size_t>(p.labels[i])]);
        EXPECT_NEAR(total, static_cast<double>(n - o) * holoentropy_objective(B, p), 1e-9);
    }
}

TEST(RunCor, ObserverSeesObjectiveEqualToDistanceSum)
{
    const auto data = synth_blobs({.n_per_cluster = 40, .K = 3, .d = 2, .cluster_sep = 10, .o = 5, .seed = 2});
    std::size_t calls = 0;
    CorConfig cfg{.K = 3, .o = 5, .r = 20, .seed = 4};
    const auto res = run_cor(data.data, cfg, [&](const CorIteration& it) {
        ++calls;
        EXPECT_NEAR(it.objective, holoentropy_objective(it.B, it.partition), 1e-12);
    });
    EXPECT_EQ(calls, res.iterations);
    ASSERT_EQ(res.objective_trace.size(), res.distance_trace.size());
    const double inliers = static_cast<double>(data.data.rows() - 5);
    for (std::size_t t = 0; t < res.objective_trace.size(); ++t)
        EXPECT_NEAR(res.distance_trace[t], inliers * res.objective_trace[t],
                    1e-9 * std::max(1.0, res.distance_trace[t]));
}

TEST(RunCor, RecoversSeparatedClustersAndOutliers)
{
    const auto data = synth_blobs({.n_per_cluster = 50, .K = 3, .d = 2, .cluster_sep = 10, .o = 5, .seed = 8});
    const auto res = run_cor(data.data, {.K = 3, .o = 5, .r = 30, .seed = 1});
    EXPECT_EQ(res.partition.outlier_count(), 5u);
    const auto ev = evaluate(res.partition.labels, data.truth.labels);
    EXPECT_GE(ev.nmi, 0.9);
    EXPECT_GE(ev.jaccard, 0.8);
    EXPECT_TRUE(res.converged);
    EXPECT_LE(res.iterations, 100u);
}

TEST(RunCor, SpreadSeedingRecoversEveryBlobSeed)
{
    std::size_t uniform_good = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto data = synth_blobs({.n_per_cluster = 50, .K = 3, .d = 2, .cluster_sep = 10, .o = 5, .seed = seed});
        const auto spread = evaluate(run_cor(data.data, {.K = 3, .o = 5, .r = 30, .seed = seed}).partition.labels,
                                     data.truth.labels);
        EXPECT_GE(spread.nmi, 0.9) << seed;
        EXPECT_GE(spread.jaccard, 0.8) << seed;
        const auto uniform = evaluate(
            run_cor(data.data, {.K = 3, .o = 5, .r = 30, .seed = seed, .init = InitMethod::Uniform}).partition.labels,
            data.truth.labels);
        uniform_good += uniform.nmi >= 0.9 && uniform.jaccard >= 0.8 ? 1 : 0;
    }
    // two rows from one blob trap uniform seeding on a few of these
    EXPECT_LT(uniform_good, 10u);
}

TEST(RunCor, NoOutliersRequested)
{
    const auto data = synth_blobs({.n_per_cluster = 20, .K = 2, .d = 2, .o = 1, .seed = 3});
    const auto res = run_cor(data.data, {.K = 2, .o = 0, .r = 10, .seed = 1});
    EXPECT_EQ(res.partition.outlier_count(), 0u);
    for (auto s : res.partition.cluster_sizes())
        EXPECT_GT(s, 0u);
}

TEST(RunCor, SingleSeparatingPartition)
{
    const auto bps = make_bps({{0, 0, 0, 1, 1, 1}});
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto res = run_cor_from_bps(bps, {.K = 2, .o = 0, .r = 1, .seed = seed});
        const auto& l = res.partition.labels;
        EXPECT_EQ(l[0], l[1]);
        EXPECT_EQ(l[1], l[2]);
        EXPECT_EQ(l[3], l[4]);
        EXPECT_EQ(l[4], l[5]);
        EXPECT_NE(l[0], l[3]);
        EXPECT_NEAR(res.objective_trace.back(), 0.0, 1e-12);
    }
}

TEST(RunCor, DeterministicForSeed)
{
    const auto data = synth_blobs({.n_per_cluster = 30, .K = 3, .d = 3, .o = 4, .seed = 6});
    const CorConfig cfg{.K = 3, .o = 4, .r = 15, .seed = 77};
    const auto a = run_cor(data.data, cfg);
    const auto b = run_cor(data.data, cfg);
    EXPECT_EQ(a.partition, b.partition);
    EXPECT_EQ(a.objective_trace, b.objective_trace);
    const CorConfig rfs{.K = 3, .o = 4, .r = 15, .bp_strategy = BpStrategy::RFS, .ratio = 0.5, .seed = 77};
    EXPECT_EQ(run_cor(data.data, rfs).partition, run_cor(data.data, rfs).partition);
}

TEST(RunCor, TraceIsMonotone)
{
    std::mt19937_64 gen(19);
    for (int t = 0; t < 40; ++t) {
        const std::size_t n = 20 + gen() % 40;
        const auto bps = random_ensemble(gen, n, 2 + gen() % 6, 6);
        const CorConfig cfg{.K = 2 + gen() % 3, .o = gen() % 4, .r = bps.r(), .seed = gen()};
        const auto res = run_cor_from_bps(bps, cfg);
        const double slack = 4.0 * static_cast<double>(n * bps.R()) * cfg.epsilon;
        for (std::size_t i = 1; i < res.distance_trace.size(); ++i)
            EXPECT_LE(res.distance_trace[i], res.distance_trace[i - 1] + slack);
        for (std::size_t i = 1; i < res.objective_trace.size(); ++i)
            EXPECT_LE(res.objective_trace[i], res.objective_trace[i - 1] + slack);
    }
}

TEST(RunCor, ReachesBruteForceOptimumOnTinyInstances)
{
    const auto bps = make_bps({{0, 0, 0, 1, 1, 1}, {0, 0, 1, 1, 1, 0}});
    const double best = oracle::brute_force_holoentropy(dense(encode(bps, false)), 2, 1);
    std::size_t hits = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto res = run_cor_from_bps(bps, {.K = 2, .o = 1, .r = 2, .seed = seed});
        const double h = res.objective_trace.back();
        EXPECT_GE(h, best - 1e-9);
        hits += std::abs(h - best) <= 1e-6 * std::max(1.0, best) ? 1 : 0;
    }
    EXPECT_GE(hits, 40u);
}

// Scaling the features changes nothing K-means can see, so the ensemble and
// hence the COR result stay the same.
TEST(RunCor, InvariantUnderUniformScaling)
{
    const auto data = synth_blobs({.n_per_cluster = 25, .K = 3, .d = 2, .o = 3, .seed = 12});
    std::vector<double> scaled;
    for (std::size_t i = 0; i < data.data.rows(); ++i)
        for (std::size_t j = 0; j < data.data.cols(); ++j)
            scaled.push_back(4.0 * data.data(i, j));
    const DataMatrix Y(data.data.rows(), data.data.cols(), scaled);
    const CorConfig cfg{.K = 3, .o = 3, .r = 10, .seed = 5};
    EXPECT_EQ(run_cor(data.data, cfg).partition, run_cor(Y, cfg).partition);
}

TEST(RunCor, RejectsBadConfig)
{
    const auto X = DataMatrix::from_rows({{0}, {1}, {2}, {3}});
    EXPECT_THROW(run_cor(X, {.K = 3, .o = 2, .r = 2}), Error);
    EXPECT_THROW(run_cor(X, {.K = 2, .o = 0, .r = 0}), Error);
    EXPECT_THROW(run_cor(X, {.K = 2, .o = 0, .r = 2, .epsilon = 0}), Error);
}
