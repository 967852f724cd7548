#ifndef COR_IO_HPP
#define COR_IO_HPP

// File formats and JSON views of the library types. Needs nlohmann/json.

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cor/common.hpp"
#include "cor/cor.hpp"
#include "cor/dataset.hpp"
#include "cor/metrics.hpp"
#include "cor/partition_space.hpp"

namespace cor {

using json = nlohmann::ordered_json;

inline json to_json(const CorConfig& c)
{
    json j;
    j["K"] = c.K;
    j["o"] = c.o;
    j["r"] = c.r;
    j["strategy"] = to_string(c.bp_strategy);
    if (c.bp_strategy == BpStrategy::RFS)
        j["ratio"] = c.ratio;
    j["seed"] = c.seed;
    j["max_iter"] = c.max_iter;
    j["tol"] = c.tol;
    j["epsilon"] = c.epsilon;
    j["init"] = to_string(c.init);
    return j;
}

inline json to_json(const EvalReport& e)
{
    return json{{"nmi", e.nmi}, {"rn", e.rn}, {"jaccard", e.jaccard}, {"f_measure", e.f_measure}};
}

/// Serialized result: labels use -1 for outliers.
inline json to_json(const CorResult& r)
{
    json j;
    j["config"] = to_json(r.config);
    j["labels"] = r.partition.labels;
    j["objective_trace"] = r.objective_trace;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["wall_ms"] = r.bp_ms + r.solve_ms;
    j["bp_ms"] = r.bp_ms;
    j["solve_ms"] = r.solve_ms;
    return j;
}

// ---------------------------------------------------------------------------
// Label files: one integer per line, optional header line, -1 for outliers.

inline std::vector<int> read_labels(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open '" + path + "'");
    std::vector<int> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto cell = detail::trim(line);
        if (cell.empty())
            continue;
        int v = 0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || ptr != cell.data() + cell.size()) {
            if (labels.empty() && line_no == 1)
                continue;  // header
            throw Error(path + ": line " + std::to_string(line_no) + ": '" + std::string(cell) +
                        "' is not an integer label");
        }
        if (v < kOutlier)
            throw Error(path + ": line " + std::to_string(line_no) + ": negative label other than -1");
        labels.push_back(v);
    }
    return labels;
}

inline void write_labels(const std::string& path, std::span<const int> labels)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write '" + path + "'");
    out << "label\n";
    for (int l : labels)
        out << l << '\n';
}

// ---------------------------------------------------------------------------
// Basic partition persistence: <prefix>.csv holds n rows x r label columns,
// <prefix>.json records cluster counts and how the ensemble was generated.

inline json descriptor_json(const BasicPartitionSet& bps)
{
    const auto& d = bps.descriptor;
    json j;
    j["n"] = bps.n();
    j["r"] = bps.r();
    j["R"] = bps.R();
    j["cluster_counts"] = bps.cluster_counts;
    j["strategy"] = to_string(d.strategy);
    j["seed"] = d.seed;
    j["K"] = d.K;
    if (d.strategy == BpStrategy::RFS) {
        j["ratio"] = d.ratio;
        j["features_per_run"] = d.features.empty() ? 0 : d.features.front().size();
        j["features"] = d.features;
    }
    j["requested_k"] = d.requested_k;
    j["run_seeds"] = d.run_seeds;
    return j;
}

inline void save_bps(const BasicPartitionSet& bps, const std::string& csv_path, const std::string& json_path)
{
    bps.validate();
    {
        std::ofstream out(csv_path);
        if (!out)
            throw Error("cannot write '" + csv_path + "'");
        for (std::size_t i = 0; i < bps.r(); ++i)
            out << (i ? "," : "") << "bp" << i;
        out << '\n';
        for (std::size_t l = 0; l < bps.n(); ++l) {
            for (std::size_t i = 0; i < bps.r(); ++i)
                out << (i ? "," : "") << bps.partitions[i][l];
            out << '\n';
        }
    }
    std::ofstream out(json_path);
    if (!out)
        throw Error("cannot write '" + json_path + "'");
    out << descriptor_json(bps).dump(2) << '\n';
}

/// Loads a persisted ensemble. The sidecar is optional; when present its
/// cluster counts must agree with the labels.
inline BasicPartitionSet load_bps(const std::string& csv_path, const std::string& json_path = "")
{
    const CsvData csv = load_csv(csv_path, std::nullopt, true);
    const auto& X = csv.data;
    std::vector<std::vector<int>> parts(X.cols(), std::vector<int>(X.rows()));
    for (std::size_t l = 0; l < X.rows(); ++l) {
        for (std::size_t i = 0; i < X.cols(); ++i) {
            const double v = X(l, i);
            if (v < 0 || v != std::floor(v))
                throw Error(csv_path + ": label at row " + std::to_string(l) + ", column " + std::to_string(i) +
                            " is not a non-negative integer");
            parts[i][l] = static_cast<int>(v);
        }
    }
    BasicPartitionSet bps;
    bps.partitions = std::move(parts);
    for (const auto& p : bps.partitions)
        bps.cluster_counts.push_back(static_cast<std::size_t>(*std::max_element(p.begin(), p.end())) + 1);

    if (!json_path.empty()) {
        std::ifstream in(json_path);
        if (!in)
            throw Error("cannot open '" + json_path + "'");
        const json j = json::parse(in);
        const auto counts = j.at("cluster_counts").get<std::vector<std::size_t>>();
        if (counts.size() != bps.r())
            throw Error(json_path + ": cluster_counts lists " + std::to_string(counts.size()) +
                        " partitions, CSV has " + std::to_string(bps.r()));
        for (std::size_t i = 0; i < counts.size(); ++i) {
            if (counts[i] < bps.cluster_counts[i])
                throw Error(json_path + ": cluster count of partition " + std::to_string(i) + " is too small");
        }
        bps.cluster_counts = counts;
        auto& d = bps.descriptor;
        d.strategy = parse_strategy(j.value("strategy", std::string("external")));
        d.seed = j.value("seed", std::uint64_t{0});
        d.K = j.value("K", std::size_t{0});
        d.ratio = j.value("ratio", 1.0);
        d.requested_k = j.value("requested_k", std::vector<std::size_t>{});
        d.run_seeds = j.value("run_seeds", std::vector<std::uint64_t>{});
        d.features = j.value("features", std::vector<std::vector<std::size_t>>{});
    }
    bps.validate();
    return bps;
}

} // namespace cor

#endif
