#ifndef COR_METRICS_HPP
#define COR_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cor/common.hpp"

namespace cor {

/// Co-occurrence counts between predicted groups (rows) and truth groups
/// (columns). Outliers on either side form their own group.
struct ContingencyTable {
    std::vector<std::vector<std::size_t>> counts;

    std::size_t rows() const { return counts.size(); }
    std::size_t cols() const { return counts.empty() ? 0 : counts.front().size(); }

    std::vector<std::size_t> row_sums() const
    {
        std::vector<std::size_t> s(rows(), 0);
        for (std::size_t i = 0; i < rows(); ++i)
            for (auto v : counts[i])
                s[i] += v;
        return s;
    }

    std::vector<std::size_t> col_sums() const
    {
        std::vector<std::size_t> s(cols(), 0);
        for (const auto& row : counts)
            for (std::size_t j = 0; j < row.size(); ++j)
                s[j] += row[j];
        return s;
    }

    std::size_t total() const
    {
        std::size_t n = 0;
        for (auto v : row_sums())
            n += v;
        return n;
    }

    ContingencyTable transposed() const
    {
        ContingencyTable t;
        t.counts.assign(cols(), std::vector<std::size_t>(rows(), 0));
        for (std::size_t i = 0; i < rows(); ++i)
            for (std::size_t j = 0; j < cols(); ++j)
                t.counts[j][i] = counts[i][j];
        return t;
    }
};

/// Groups are ordered by label value, so kOutlier (-1) comes first.
inline ContingencyTable contingency(std::span<const int> pred, std::span<const int> truth)
{
    if (pred.size() != truth.size())
        throw Error("contingency: prediction has " + std::to_string(pred.size()) + " labels, truth has " +
                    std::to_string(truth.size()));
    std::map<int, std::size_t> rows, cols;
    for (int p : pred)
        rows[p] = 0;
    for (int t : truth)
        cols[t] = 0;
    std::size_t next = 0;
    for (auto& [label, idx] : rows)
        idx = next++;
    next = 0;
    for (auto& [label, idx] : cols)
        idx = next++;
    ContingencyTable table;
    table.counts.assign(rows.size(), std::vector<std::size_t>(cols.size(), 0));
    for (std::size_t i = 0; i < pred.size(); ++i)
        ++table.counts[rows.at(pred[i])][cols.at(truth[i])];
    return table;
}

/// Mutual information over the geometric mean of the two marginal
/// entropies. When either side has zero entropy the score is 0, except for
/// two single-group partitions, which agree perfectly and score 1.
inline double nmi(const ContingencyTable& table)
{
    const double n = static_cast<double>(table.total());
    if (n == 0)
        throw Error("nmi: empty contingency table");
    const auto a = table.row_sums();
    const auto b = table.col_sums();
    double mi = 0;
    for (std::size_t i = 0; i < table.rows(); ++i) {
        for (std::size_t j = 0; j < table.cols(); ++j) {
            const double nij = static_cast<double>(table.counts[i][j]);
            if (nij > 0)
                mi += nij * std::log(n * nij / (static_cast<double>(a[i]) * static_cast<double>(b[j])));
        }
    }
    auto plogp = [n](const std::vector<std::size_t>& marg) {
        double s = 0;
        for (auto m : marg) {
            if (m > 0)
                s += static_cast<double>(m) * std::log(static_cast<double>(m) / n);
        }
        return s;
    };
    const double ha = plogp(a);
    const double hb = plogp(b);
    const auto nonempty = [](const std::vector<std::size_t>& m) {
        return std::count_if(m.begin(), m.end(), [](std::size_t v) { return v > 0; });
    };
    if (ha == 0.0 || hb == 0.0)
        return (nonempty(a) == 1 && nonempty(b) == 1) ? 1.0 : 0.0;
    return mi / std::sqrt(ha * hb);
}

/// Normalized (adjusted) Rand index from pair counts; may be negative.
inline double rand_normalized(const ContingencyTable& table)
{
    const double n = static_cast<double>(table.total());
    if (n < 2)
        throw Error("rand_normalized: need at least two points");
    auto pairs = [](double v) { return v * (v - 1.0) / 2.0; };
    double sum_ij = 0;
    for (const auto& row : table.counts)
        for (auto v : row)
            sum_ij += pairs(static_cast<double>(v));
    double sum_a = 0, sum_b = 0;
    for (auto v : table.row_sums())
        sum_a += pairs(static_cast<double>(v));
    for (auto v : table.col_sums())
        sum_b += pairs(static_cast<double>(v));
    const double expected = sum_a * sum_b / pairs(n);
    const double denom = sum_a / 2.0 + sum_b / 2.0 - expected;
    if (denom == 0.0)
        return 1.0;  // both sides all singletons or both one group
    return (sum_ij - expected) / denom;
}

namespace detail {

inline std::vector<std::size_t> sorted_unique(std::span<const std::size_t> s)
{
    std::vector<std::size_t> v(s.begin(), s.end());
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

inline std::size_t intersection_size(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b)
{
    std::size_t count = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++count;
            ++ia;
            ++ib;
        }
    }
    return count;
}

} // namespace detail

/// |O & O*| / |O | O*|; 1 when both sets are empty.
inline double outlier_jaccard(std::span<const std::size_t> pred, std::span<const std::size_t> truth)
{
    const auto a = detail::sorted_unique(pred);
    const auto b = detail::sorted_unique(truth);
    const std::size_t inter = detail::intersection_size(a, b);
    const std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Harmonic mean of outlier precision and recall; 0 when both are 0.
inline double outlier_f_measure(std::span<const std::size_t> pred, std::span<const std::size_t> truth)
{
    const auto a = detail::sorted_unique(pred);
    const auto b = detail::sorted_unique(truth);
    if (a.empty() && b.empty())
        return 1.0;
    const double inter = static_cast<double>(detail::intersection_size(a, b));
    const double precision = a.empty() ? 0.0 : inter / static_cast<double>(a.size());
    const double recall = b.empty() ? 0.0 : inter / static_cast<double>(b.size());
    return precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

/// score(A_i) = sum_j P(A_i, D_j) / max_i P(A_i, D_j) over a matrix indexed
/// [algorithm][dataset]. Datasets whose best value is not positive are skipped.
inline std::vector<double> score(const std::vector<std::vector<double>>& results)
{
    if (results.empty() || results.front().empty())
        throw Error("score: empty result matrix");
    const std::size_t datasets = results.front().size();
    for (const auto& row : results) {
        if (row.size() != datasets)
            throw Error("score: ragged result matrix");
    }
    std::vector<double> out(results.size(), 0.0);
    for (std::size_t j = 0; j < datasets; ++j) {
        double best = results[0][j];
        for (const auto& row : results)
            best = std::max(best, row[j]);
        if (!(best > 0))
            continue;
        for (std::size_t i = 0; i < results.size(); ++i)
            out[i] += results[i][j] / best;
    }
    return out;
}

/// score rescaled to 100 * score / (number of counted datasets), so an
/// algorithm that is best everywhere scores 100.
inline std::vector<double> score_percent(const std::vector<std::vector<double>>& results)
{
    auto s = score(results);
    std::size_t counted = 0;
    for (std::size_t j = 0; j < results.front().size(); ++j) {
        double best = results[0][j];
        for (const auto& row : results)
            best = std::max(best, row[j]);
        counted += best > 0 ? 1 : 0;
    }
    for (auto& v : s)
        v = counted == 0 ? 0.0 : 100.0 * v / static_cast<double>(counted);
    return s;
}

struct EvalReport {
    double nmi = 0;
    double rn = 0;
    double jaccard = 0;
    double f_measure = 0;
};

inline std::vector<std::size_t> outlier_indices(std::span<const int> labels)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == kOutlier)
            out.push_back(i);
    }
    return out;
}

/// All four metrics for label vectors where kOutlier marks outliers.
inline EvalReport evaluate(std::span<const int> pred, std::span<const int> truth)
{
    const auto table = contingency(pred, truth);
    const auto po = outlier_indices(pred);
    const auto to = outlier_indices(truth);
    return {nmi(table), rand_normalized(table), outlier_jaccard(po, to), outlier_f_measure(po, to)};
}

} // namespace cor

#endif
