#ifndef COR_EXPERIMENT_HPP
#define COR_EXPERIMENT_HPP

// Multi-run experiment orchestration behind the `run` subcommand.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cor/cor.hpp"
#include "cor/dataset.hpp"
#include "cor/io.hpp"
#include "cor/kmeans.hpp"
#include "cor/metrics.hpp"
#include "cor/partition_space.hpp"

namespace cor {

enum class Method { COR, KMeansBaseline, KMeansMinusMinusBaseline };

inline std::string to_string(Method m)
{
    switch (m) {
    case Method::COR: return "COR";
    case Method::KMeansBaseline: return "KMEANS_BASELINE";
    case Method::KMeansMinusMinusBaseline: return "KMEANSMM_BASELINE";
    }
    return "?";
}

inline Method parse_method(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    std::replace(s.begin(), s.end(), '-', '_');
    if (s == "COR")
        return Method::COR;
    if (s == "KMEANS_BASELINE" || s == "KMEANS")
        return Method::KMeansBaseline;
    if (s == "KMEANSMM_BASELINE" || s == "KMEANSMM" || s == "KMEANS__")
        return Method::KMeansMinusMinusBaseline;
    throw Error("unknown method '" + s + "' (expected COR, KMEANS_BASELINE or KMEANSMM_BASELINE)");
}

inline ColumnSelector parse_column(const std::string& s)
{
    if (!s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
        return static_cast<std::size_t>(std::stoull(s));
    return s;
}

struct DatasetSpec {
    std::string path;
    std::optional<ColumnSelector> label_col;
    bool has_header = true;
    std::size_t n_smallest_classes = 1;
    std::optional<std::string> outlier_label;  // when set, overrides n_smallest_classes
    bool scale_features = false;
};

struct ExperimentConfig {
    DatasetSpec dataset;
    Method method = Method::COR;
    std::optional<std::size_t> K;  // default: ground-truth cluster count
    std::optional<std::size_t> o;  // default: ground-truth outlier count
    std::size_t r = 100;
    BpStrategy strategy = BpStrategy::RPS;
    double ratio = 0.5;
    std::size_t max_iter = 100;
    double tol = 1e-9;
    double epsilon = kDefaultEpsilon;
    InitMethod init = InitMethod::Spread;  // COR only; baselines seed uniformly
    std::size_t n_runs = 20;
    std::uint64_t master_seed = 0;
    std::string out;
    std::string labels_dir;  // optional per-run label CSVs
    std::string bps_path;    // optional persisted ensemble (COR only)

    void validate() const
    {
        if (dataset.path.empty())
            throw Error("config: dataset.path is required");
        if (!dataset.label_col)
            throw Error("config: dataset.label_col is required for evaluation");
        if (n_runs < 1)
            throw Error("config: n_runs must be >= 1");
        if (!bps_path.empty() && method != Method::COR)
            throw Error("config: bps is only used by the COR method");
    }
};

/// Fills `cfg` from a JSON document; absent keys keep their current values.
inline void apply_json(ExperimentConfig& cfg, const json& j)
{
    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        if (d.is_string()) {
            cfg.dataset.path = d.get<std::string>();
        } else {
            cfg.dataset.path = d.value("path", cfg.dataset.path);
            if (d.contains("label_col")) {
                const auto& lc = d.at("label_col");
                cfg.dataset.label_col = lc.is_number_unsigned() ? ColumnSelector(lc.get<std::size_t>())
                                                               : parse_column(lc.get<std::string>());
            }
            cfg.dataset.has_header = d.value("has_header", cfg.dataset.has_header);
            cfg.dataset.n_smallest_classes = d.value("n_smallest_classes", cfg.dataset.n_smallest_classes);
            if (d.contains("outlier_label") && !d.at("outlier_label").is_null())
                cfg.dataset.outlier_label = d.at("outlier_label").get<std::string>();
            cfg.dataset.scale_features = d.value("scale_features", cfg.dataset.scale_features);
        }
    }
    if (j.contains("method"))
        cfg.method = parse_method(j.at("method").get<std::string>());
    if (j.contains("K") && !j.at("K").is_null())
        cfg.K = j.at("K").get<std::size_t>();
    if (j.contains("o") && !j.at("o").is_null())
        cfg.o = j.at("o").get<std::size_t>();
    cfg.r = j.value("r", cfg.r);
    if (j.contains("strategy"))
        cfg.strategy = parse_strategy(j.at("strategy").get<std::string>());
    cfg.ratio = j.value("ratio", cfg.ratio);
    cfg.max_iter = j.value("max_iter", cfg.max_iter);
    cfg.tol = j.value("tol", cfg.tol);
    cfg.epsilon = j.value("epsilon", cfg.epsilon);
    if (j.contains("init"))
        cfg.init = parse_init(j.at("init").get<std::string>());
    cfg.n_runs = j.value("n_runs", cfg.n_runs);
    cfg.master_seed = j.value("master_seed", cfg.master_seed);
    cfg.out = j.value("out", cfg.out);
    cfg.labels_dir = j.value("labels_dir", cfg.labels_dir);
    cfg.bps_path = j.value("bps", cfg.bps_path);
}

inline ExperimentConfig load_experiment_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open config '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error("config '" + path + "': " + e.what());
    }
    ExperimentConfig cfg;
    apply_json(cfg, j);
    return cfg;
}

inline json to_json(const ExperimentConfig& c, std::size_t K, std::size_t o)
{
    json d;
    d["path"] = c.dataset.path;
    if (c.dataset.label_col) {
        if (const auto* idx = std::get_if<std::size_t>(&*c.dataset.label_col))
            d["label_col"] = *idx;
        else
            d["label_col"] = std::get<std::string>(*c.dataset.label_col);
    }
    d["has_header"] = c.dataset.has_header;
    if (c.dataset.outlier_label)
        d["outlier_label"] = *c.dataset.outlier_label;
    else
        d["n_smallest_classes"] = c.dataset.n_smallest_classes;
    d["scale_features"] = c.dataset.scale_features;
    json j;
    j["dataset"] = d;
    j["method"] = to_string(c.method);
    j["K"] = K;
    j["o"] = o;
    if (c.method == Method::COR) {
        j["r"] = c.r;
        j["strategy"] = to_string(c.strategy);
        if (c.strategy == BpStrategy::RFS)
            j["ratio"] = c.ratio;
        j["epsilon"] = c.epsilon;
        j["init"] = to_string(c.init);
        if (!c.bps_path.empty())
            j["bps"] = c.bps_path;
    }
    j["max_iter"] = c.max_iter;
    j["tol"] = c.tol;
    j["n_runs"] = c.n_runs;
    j["master_seed"] = c.master_seed;
    return j;
}

/// Data and reference labels prepared for evaluation.
struct PreparedDataset {
    DataMatrix X;
    GroundTruth truth;
};

inline PreparedDataset prepare_dataset(const DatasetSpec& spec)
{
    CsvData csv = load_csv(spec.path, spec.label_col, spec.has_header);
    if (!csv.labels)
        throw Error(spec.path + ": no label column selected");
    GroundTruth gt = spec.outlier_label ? ground_truth_with_outlier_label(*csv.labels, *spec.outlier_label)
                                        : prepare_ground_truth(*csv.labels, spec.n_smallest_classes);
    DataMatrix X = spec.scale_features ? min_max_scale(csv.data) : std::move(csv.data);
    return {std::move(X), std::move(gt)};
}

struct RunOutcome {
    std::size_t run = 0;
    std::uint64_t seed = 0;
    LabeledPartition partition;
    EvalReport metrics;
    std::vector<double> objective_trace;
    std::size_t iterations = 0;
    double wall_ms = 0;
};

/// K-means with K+1 clusters; the smallest cluster (lowest id on ties)
/// becomes the outlier set and the rest are renumbered 0..K-1.
inline LabeledPartition smallest_cluster_as_outliers(const LabeledPartition& p)
{
    const auto sizes = p.cluster_sizes();
    const auto smallest = static_cast<int>(std::min_element(sizes.begin(), sizes.end()) - sizes.begin());
    LabeledPartition out;
    out.K = p.K - 1;
    out.labels.reserve(p.size());
    for (int l : p.labels) {
        if (l == smallest)
            out.labels.push_back(kOutlier);
        else
            out.labels.push_back(l > smallest ? l - 1 : l);
    }
    return out;
}

inline RunOutcome run_once(const ExperimentConfig& cfg, const PreparedDataset& data, std::size_t K, std::size_t o,
                           std::size_t run, const BasicPartitionSet* bps)
{
    RunOutcome out;
    out.run = run;
    out.seed = cfg.master_seed + run;
    const auto start = std::chrono::steady_clock::now();
    switch (cfg.method) {
    case Method::COR: {
        CorConfig cc{.K = K, .o = o, .r = cfg.r, .bp_strategy = cfg.strategy, .ratio = cfg.ratio, .seed = out.seed,
                     .max_iter = cfg.max_iter, .tol = cfg.tol, .epsilon = cfg.epsilon, .init = cfg.init};
        CorResult res = bps ? run_cor_from_bps(*bps, cc) : run_cor(data.X, cc);
        out.partition = std::move(res.partition);
        out.objective_trace = std::move(res.objective_trace);
        out.iterations = res.iterations;
        break;
    }
    case Method::KMeansBaseline: {
        auto res = kmeans_minus_minus(EuclideanSpace(data.X), {.K = K + 1, .o = 0, .seed = out.seed,
                                                               .max_iter = cfg.max_iter, .tol = cfg.tol});
        out.partition = smallest_cluster_as_outliers(res.partition);
        out.objective_trace = std::move(res.objective_trace);
        out.iterations = res.iterations;
        break;
    }
    case Method::KMeansMinusMinusBaseline: {
        auto res = kmeans_minus_minus(EuclideanSpace(data.X),
                                      {.K = K, .o = o, .seed = out.seed, .max_iter = cfg.max_iter, .tol = cfg.tol});
        out.partition = std::move(res.partition);
        out.objective_trace = std::move(res.objective_trace);
        out.iterations = res.iterations;
        break;
    }
    }
    out.wall_ms = detail::elapsed_ms(start);
    out.metrics = evaluate(out.partition.labels, data.truth.labels);
    return out;
}

struct MeanStd {
    double mean = 0;
    double std = 0;
};

/// Mean and sample standard deviation (0 for a single value).
inline MeanStd mean_std(const std::vector<double>& v)
{
    MeanStd m;
    if (v.empty())
        return m;
    for (double x : v)
        m.mean += x;
    m.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0;
        for (double x : v)
            ss += (x - m.mean) * (x - m.mean);
        m.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return m;
}

inline json aggregate_json(const std::vector<RunOutcome>& runs)
{
    std::vector<double> nmi, rn, jac, f;
    for (const auto& r : runs) {
        nmi.push_back(r.metrics.nmi);
        rn.push_back(r.metrics.rn);
        jac.push_back(r.metrics.jaccard);
        f.push_back(r.metrics.f_measure);
    }
    json agg;
    for (const auto& [name, values] :
         {std::pair{"nmi", &nmi}, std::pair{"rn", &rn}, std::pair{"jaccard", &jac}, std::pair{"f_measure", &f}}) {
        const auto ms = mean_std(*values);
        agg[name] = json{{"mean", ms.mean}, {"std", ms.std}};
    }
    return agg;
}

inline std::string utc_timestamp()
{
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

struct ExperimentReport {
    json report;
    std::vector<RunOutcome> runs;
    bool ok = true;
};

inline void write_report(const std::string& path, const json& report)
{
    if (path.empty())
        return;
    const std::filesystem::path p(path);
    if (p.has_parent_path())
        std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write report '" + path + "'");
    out << report.dump(2) << '\n';
}

/// Runs every seed of an experiment and writes the JSON report to cfg.out.
///
/// Report layout: {config, dataset, runs: [{run, seed, metrics,
/// objective_trace, iterations, wall_ms}], aggregate: {metric: {mean, std}},
/// status, timestamp}. wall_ms and timestamp are the only fields that vary
/// between identical invocations. If a run fails, the runs completed so far
/// are written with status "failed" and the error is rethrown.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg)
{
    cfg.validate();
    const PreparedDataset data = prepare_dataset(cfg.dataset);
    const std::size_t K = cfg.K.value_or(data.truth.n_clusters);
    const std::size_t o = cfg.o.value_or(data.truth.n_outliers);

    std::optional<BasicPartitionSet> bps;
    if (!cfg.bps_path.empty()) {
        const std::string sidecar = std::filesystem::path(cfg.bps_path).replace_extension(".json").string();
        bps = load_bps(cfg.bps_path, std::filesystem::exists(sidecar) ? sidecar : "");
        if (bps->n() != data.X.rows())
            throw Error("basic partitions cover " + std::to_string(bps->n()) + " points, dataset has " +
                        std::to_string(data.X.rows()));
    }

    ExperimentReport rep;
    json& report = rep.report;
    report["config"] = to_json(cfg, K, o);
    report["dataset"] = json{{"n", data.X.rows()},
                             {"d", data.X.cols()},
                             {"K", data.truth.n_clusters},
                             {"o", data.truth.n_outliers},
                             {"outlier_classes", data.truth.outlier_classes}};
    report["runs"] = json::array();

    if (!cfg.labels_dir.empty())
        std::filesystem::create_directories(cfg.labels_dir);

    std::string failure;
    for (std::size_t run = 0; run < cfg.n_runs; ++run) {
        try {
            RunOutcome oc = run_once(cfg, data, K, o, run, bps ? &*bps : nullptr);
            report["runs"].push_back(json{{"run", oc.run},
                                          {"seed", oc.seed},
                                          {"metrics", to_json(oc.metrics)},
                                          {"objective_trace", oc.objective_trace},
                                          {"iterations", oc.iterations},
                                          {"wall_ms", oc.wall_ms}});
            if (!cfg.labels_dir.empty())
                write_labels((std::filesystem::path(cfg.labels_dir) / ("run_" + std::to_string(run) + ".csv")).string(),
                             oc.partition.labels);
            rep.runs.push_back(std::move(oc));
        } catch (const std::exception& e) {
            failure = "run " + std::to_string(run) + ": " + e.what();
            break;
        }
    }
    report["aggregate"] = aggregate_json(rep.runs);
    report["status"] = failure.empty() ? "ok" : "failed";
    if (!failure.empty())
        report["error"] = failure;
    report["timestamp"] = utc_timestamp();
    write_report(cfg.out, report);
    if (!failure.empty()) {
        rep.ok = false;
        throw Error(failure);
    }
    return rep;
}

} // namespace cor

#endif
