#ifndef COR_DATASET_HPP
#define COR_DATASET_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "cor/common.hpp"

namespace cor {

/// Dense row-major n x d feature matrix.
class DataMatrix {
public:
    DataMatrix() = default;

    DataMatrix(std::size_t rows, std::size_t cols, std::vector<double> values,
               std::vector<std::string> row_ids = {})
        : rows_(rows), cols_(cols), values_(std::move(values)), row_ids_(std::move(row_ids))
    {
        validate();
    }

    static DataMatrix from_rows(const std::vector<std::vector<double>>& rows)
    {
        if (rows.empty())
            throw Error("data matrix needs at least one row");
        std::vector<double> values;
        values.reserve(rows.size() * rows.front().size());
        for (const auto& r : rows) {
            if (r.size() != rows.front().size())
                throw Error("ragged rows in data matrix");
            values.insert(values.end(), r.begin(), r.end());
        }
        return DataMatrix(rows.size(), rows.front().size(), std::move(values));
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::span<const double> values() const { return values_; }
    const std::vector<std::string>& row_ids() const { return row_ids_; }

    std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

    /// Copy holding only the given feature columns, in the given order.
    DataMatrix select_columns(std::span<const std::size_t> columns) const
    {
        std::vector<double> out;
        out.reserve(rows_ * columns.size());
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t c : columns) {
                if (c >= cols_)
                    throw Error("column index " + std::to_string(c) + " out of range");
                out.push_back((*this)(i, c));
            }
        }
        return DataMatrix(rows_, columns.size(), std::move(out), row_ids_);
    }

    bool operator==(const DataMatrix&) const = default;

private:
    void validate() const
    {
        if (rows_ == 0 || cols_ == 0)
            throw Error("data matrix must have at least one row and one column");
        if (values_.size() != rows_ * cols_)
            throw Error("data matrix value count does not match its shape");
        for (std::size_t k = 0; k < values_.size(); ++k) {
            if (!std::isfinite(values_[k]))
                throw Error("non-finite value at row " + std::to_string(k / cols_) + ", column " +
                            std::to_string(k % cols_));
        }
        if (!row_ids_.empty()) {
            if (row_ids_.size() != rows_)
                throw Error("row id count does not match row count");
            std::unordered_set<std::string> seen(row_ids_.begin(), row_ids_.end());
            if (seen.size() != row_ids_.size())
                throw Error("row ids are not unique");
        }
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
    std::vector<std::string> row_ids_;
};

/// Min-max scales every feature to [0, 1]; constant features become 0.
inline DataMatrix min_max_scale(const DataMatrix& X)
{
    std::vector<double> lo(X.cols(), INFINITY), hi(X.cols(), -INFINITY);
    for (std::size_t i = 0; i < X.rows(); ++i) {
        for (std::size_t j = 0; j < X.cols(); ++j) {
            lo[j] = std::min(lo[j], X(i, j));
            hi[j] = std::max(hi[j], X(i, j));
        }
    }
    std::vector<double> out(X.values().begin(), X.values().end());
    for (std::size_t i = 0; i < X.rows(); ++i) {
        for (std::size_t j = 0; j < X.cols(); ++j) {
            const double span = hi[j] - lo[j];
            out[i * X.cols() + j] = span > 0 ? (X(i, j) - lo[j]) / span : 0.0;
        }
    }
    return DataMatrix(X.rows(), X.cols(), std::move(out), X.row_ids());
}

// ---------------------------------------------------------------------------
// CSV ingestion

/// Label column given by zero-based index or by header name.
using ColumnSelector = std::variant<std::size_t, std::string>;

struct CsvData {
    DataMatrix data;
    std::optional<std::vector<std::string>> labels;
    std::vector<std::string> header;  // empty when the file has no header
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line)
{
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(trim(line.substr(start)));
            break;
        }
        cells.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return cells;
}

inline std::optional<double> parse_real(std::string_view cell)
{
    if (!cell.empty() && cell.front() == '+')
        cell.remove_prefix(1);
    double v = 0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
        return std::nullopt;
    return v;
}

} // namespace detail

/// Parses comma-separated text. Every non-label cell must be a finite real.
inline CsvData parse_csv(std::istream& in, const std::optional<ColumnSelector>& label_column,
                         bool has_header, const std::string& source = "<stream>")
{
    CsvData out;
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::size_t> label_index;
    std::size_t arity = 0;

    auto resolve_label = [&](std::size_t width) {
        if (!label_column)
            return;
        if (const auto* idx = std::get_if<std::size_t>(&*label_column)) {
            if (*idx >= width)
                throw Error(source + ": label column " + std::to_string(*idx) + " out of range");
            label_index = *idx;
            return;
        }
        const auto& name = std::get<std::string>(*label_column);
        const auto it = std::find(out.header.begin(), out.header.end(), name);
        if (it == out.header.end())
            throw Error(source + ": no column named '" + name + "'");
        label_index = static_cast<std::size_t>(it - out.header.begin());
    };

    std::vector<double> values;
    std::vector<std::string> labels;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty())
            continue;
        const auto cells = detail::split_csv_line(line);
        if (arity == 0) {
            arity = cells.size();
            if (has_header) {
                for (auto c : cells)
                    out.header.emplace_back(c);
                resolve_label(arity);
                continue;
            }
            if (label_column && std::holds_alternative<std::string>(*label_column))
                throw Error(source + ": label column given by name but the file has no header");
            resolve_label(arity);
        }
        if (cells.size() != arity)
            throw Error(source + ": line " + std::to_string(line_no) + " has " +
                        std::to_string(cells.size()) + " fields, expected " + std::to_string(arity));
        for (std::size_t j = 0; j < cells.size(); ++j) {
            if (label_index && j == *label_index) {
                labels.emplace_back(cells[j]);
                continue;
            }
            const auto v = detail::parse_real(cells[j]);
            if (!v)
                throw Error(source + ": cannot parse '" + std::string(cells[j]) +
                            "' as a finite real at row " + std::to_string(rows) + ", column " +
                            std::to_string(j) + " (line " + std::to_string(line_no) + ")");
            values.push_back(*v);
        }
        ++rows;
    }
    if (rows == 0)
        throw Error(source + ": no data rows");
    const std::size_t d = arity - (label_index ? 1 : 0);
    if (d == 0)
        throw Error(source + ": no feature columns");
    out.data = DataMatrix(rows, d, std::move(values));
    if (label_index)
        out.labels = std::move(labels);
    return out;
}

inline CsvData load_csv(const std::string& path, const std::optional<ColumnSelector>& label_column,
                        bool has_header)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open '" + path + "'");
    return parse_csv(in, label_column, has_header, path);
}

// ---------------------------------------------------------------------------
// Ground truth

/// Reference labels: inlier classes numbered 0..K-1, outliers kOutlier.
struct GroundTruth {
    std::vector<int> labels;
    std::vector<bool> outlier_mask;
    std::size_t n_clusters = 0;
    std::size_t n_outliers = 0;
    std::vector<std::string> class_names;     // index = inlier class id
    std::vector<std::string> outlier_classes;  // raw classes folded into the outlier set

    std::vector<std::size_t> outliers() const
    {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < outlier_mask.size(); ++i) {
            if (outlier_mask[i])
                out.push_back(i);
        }
        return out;
    }

    bool operator==(const GroundTruth&) const = default;
};

/// Turns the `n_smallest_classes` least frequent classes into the outlier
/// set. Equal sizes are ordered by class name so the choice is deterministic.
/// The remaining classes are numbered in ascending name order.
inline GroundTruth prepare_ground_truth(std::span<const std::string> raw, std::size_t n_smallest_classes)
{
    std::map<std::string, std::size_t> counts;
    for (const auto& l : raw)
        ++counts[l];
    if (counts.size() < n_smallest_classes + 1)
        throw Error("need at least " + std::to_string(n_smallest_classes + 1) + " classes, found " +
                    std::to_string(counts.size()));

    std::vector<std::pair<std::size_t, std::string>> by_size;
    for (const auto& [name, c] : counts)
        by_size.emplace_back(c, name);
    std::sort(by_size.begin(), by_size.end());

    GroundTruth gt;
    std::map<std::string, int> ids;
    for (std::size_t k = 0; k < by_size.size(); ++k) {
        if (k < n_smallest_classes)
            gt.outlier_classes.push_back(by_size[k].second);
        else
            ids[by_size[k].second] = 0;
    }
    for (auto& [name, id] : ids) {
        id = static_cast<int>(gt.class_names.size());
        gt.class_names.push_back(name);
    }
    gt.labels.reserve(raw.size());
    gt.outlier_mask.reserve(raw.size());
    for (const auto& l : raw) {
        const auto it = ids.find(l);
        const bool outlier = it == ids.end();
        gt.labels.push_back(outlier ? kOutlier : it->second);
        gt.outlier_mask.push_back(outlier);
        gt.n_outliers += outlier ? 1 : 0;
    }
    gt.n_clusters = gt.class_names.size();
    return gt;
}

/// Ground truth where rows carrying `outlier_label` are the outliers and every
/// other class is kept.
inline GroundTruth ground_truth_with_outlier_label(std::span<const std::string> raw,
                                                   const std::string& outlier_label)
{
    std::map<std::string, int> ids;
    for (const auto& l : raw) {
        if (l != outlier_label)
            ids[l] = 0;
    }
    GroundTruth gt;
    for (auto& [name, id] : ids) {
        id = static_cast<int>(gt.class_names.size());
        gt.class_names.push_back(name);
    }
    gt.outlier_classes.push_back(outlier_label);
    for (const auto& l : raw) {
        const bool outlier = l == outlier_label;
        gt.labels.push_back(outlier ? kOutlier : ids.at(l));
        gt.outlier_mask.push_back(outlier);
        gt.n_outliers += outlier ? 1 : 0;
    }
    gt.n_clusters = gt.class_names.size();
    return gt;
}

// ---------------------------------------------------------------------------
// Synthetic blobs

struct BlobSpec {
    std::size_t n_per_cluster = 50;
    std::size_t K = 3;
    std::size_t d = 2;
    double cluster_sep = 10.0;
    std::size_t o = 5;
    double outlier_scale = 30.0;
    std::uint64_t seed = 0;
};

struct SyntheticData {
    DataMatrix data;
    GroundTruth truth;
    std::vector<std::vector<double>> centers;
};

/// Isotropic Gaussian blobs (standard deviation cluster_sep / 8) whose
/// centers are pairwise at least cluster_sep apart, followed by o outliers
/// drawn in a shell around the blob layout at distance >= outlier_scale from
/// every center. Rows are blob-major; outliers are the last o rows.
inline SyntheticData synth_blobs(const BlobSpec& spec)
{
    if (spec.n_per_cluster < 1 || spec.K < 1 || spec.d < 1 || spec.o < 1)
        throw Error("synth_blobs: all counts must be >= 1");
    if (!(spec.cluster_sep > 0) || !(spec.outlier_scale > spec.cluster_sep))
        throw Error("synth_blobs: need 0 < cluster_sep < outlier_scale");

    Rng rng(derive_seed(spec.seed, 0x5eed));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::size_t d = spec.d;

    auto dist = [](std::span<const double> a, std::span<const double> b) {
        double s = 0;
        for (std::size_t j = 0; j < a.size(); ++j)
            s += (a[j] - b[j]) * (a[j] - b[j]);
        return std::sqrt(s);
    };

    // Centers in a box large enough to fit K separated points comfortably.
    const double per_axis = std::ceil(std::pow(static_cast<double>(spec.K), 1.0 / static_cast<double>(d)));
    const double side = 2.0 * spec.cluster_sep * std::max(1.0, per_axis);
    std::vector<std::vector<double>> centers;
    constexpr int kRestarts = 100;
    constexpr int kTries = 1000;
    for (int restart = 0; restart < kRestarts && centers.size() < spec.K; ++restart) {
        centers.clear();
        for (std::size_t k = 0; k < spec.K; ++k) {
            bool placed = false;
            for (int t = 0; t < kTries && !placed; ++t) {
                std::vector<double> c(d);
                for (auto& v : c)
                    v = side * unit(rng);
                placed = std::all_of(centers.begin(), centers.end(),
                                     [&](const auto& o) { return dist(c, o) >= spec.cluster_sep; });
                if (placed)
                    centers.push_back(std::move(c));
            }
            if (!placed)
                break;
        }
    }
    if (centers.size() < spec.K)
        throw Error("synth_blobs: cannot place " + std::to_string(spec.K) + " centers " +
                    std::to_string(spec.cluster_sep) + " apart in " + std::to_string(d) + " dimensions");

    const double sigma = spec.cluster_sep / 8.0;
    std::vector<double> values;
    values.reserve((spec.K * spec.n_per_cluster + spec.o) * d);
    std::vector<std::string> raw;
    for (std::size_t k = 0; k < spec.K; ++k) {
        for (std::size_t i = 0; i < spec.n_per_cluster; ++i) {
            for (std::size_t j = 0; j < d; ++j)
                values.push_back(centers[k][j] + sigma * gauss(rng));
            raw.push_back(std::to_string(k));
        }
    }

    std::vector<double> middle(d, 0.0);
    for (const auto& c : centers)
        for (std::size_t j = 0; j < d; ++j)
            middle[j] += c[j] / static_cast<double>(spec.K);
    double spread = 0;
    for (const auto& c : centers)
        spread = std::max(spread, dist(c, middle));

    for (std::size_t i = 0; i < spec.o; ++i) {
        std::vector<double> p(d);
        bool ok = false;
        for (int t = 0; t < 100000 && !ok; ++t) {
            double norm = 0;
            for (auto& v : p) {
                v = gauss(rng);
                norm += v * v;
            }
            norm = std::sqrt(norm);
            const double radius = spread + spec.outlier_scale * (1.0 + 0.5 * unit(rng));
            for (std::size_t j = 0; j < d; ++j)
                p[j] = middle[j] + radius * p[j] / norm;
            ok = std::all_of(centers.begin(), centers.end(),
                             [&](const auto& c) { return dist(p, c) >= spec.outlier_scale; });
        }
        if (!ok)
            throw Error("synth_blobs: cannot place outlier");
        values.insert(values.end(), p.begin(), p.end());
        raw.push_back("outlier");
    }

    const std::size_t n = spec.K * spec.n_per_cluster + spec.o;
    SyntheticData out{DataMatrix(n, d, std::move(values)), ground_truth_with_outlier_label(raw, "outlier"),
                      std::move(centers)};
    return out;
}

} // namespace cor

#endif
