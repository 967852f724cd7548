#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "cor/cor.hpp"
#include "cor/dataset.hpp"
#include "cor/experiment.hpp"
#include "cor/io.hpp"
#include "cor/metrics.hpp"
#include "cor/partition_space.hpp"

namespace {

struct RunFlags {
    std::string config;
    std::optional<std::string> dataset, label_col, strategy, out, method, labels_dir, bps, init;
    std::optional<std::size_t> k, o, r, runs, n_smallest;
    std::optional<double> ratio;
    std::optional<std::uint64_t> seed;
    bool scale_features = false;
};

int cmd_run(const RunFlags& f)
{
    cor::ExperimentConfig cfg;
    if (!f.config.empty())
        cfg = cor::load_experiment_config(f.config);
    // flag > file > default
    if (f.dataset)
        cfg.dataset.path = *f.dataset;
    if (f.label_col)
        cfg.dataset.label_col = cor::parse_column(*f.label_col);
    if (f.scale_features)
        cfg.dataset.scale_features = true;
    if (f.n_smallest)
        cfg.dataset.n_smallest_classes = *f.n_smallest;
    if (f.method)
        cfg.method = cor::parse_method(*f.method);
    if (f.k)
        cfg.K = *f.k;
    if (f.o)
        cfg.o = *f.o;
    if (f.r)
        cfg.r = *f.r;
    if (f.strategy)
        cfg.strategy = cor::parse_strategy(*f.strategy);
    if (f.ratio)
        cfg.ratio = *f.ratio;
    if (f.init)
        cfg.init = cor::parse_init(*f.init);
    if (f.runs)
        cfg.n_runs = *f.runs;
    if (f.seed)
        cfg.master_seed = *f.seed;
    if (f.out)
        cfg.out = *f.out;
    if (f.labels_dir)
        cfg.labels_dir = *f.labels_dir;
    if (f.bps)
        cfg.bps_path = *f.bps;

    const auto rep = cor::run_experiment(cfg);
    if (cfg.out.empty())
        std::cout << rep.report.dump(2) << '\n';
    else
        std::cerr << "wrote " << cfg.out << " (" << rep.runs.size() << " runs)\n";
    return 0;
}

struct GenFlags {
    std::string dataset;
    std::optional<std::string> label_col;
    bool no_header = false;
    bool scale_features = false;
    std::size_t r = 100;
    std::size_t k = 2;
    std::string strategy = "rps";
    double ratio = 0.5;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_gen_bps(const GenFlags& f)
{
    std::optional<cor::ColumnSelector> label;
    if (f.label_col)
        label = cor::parse_column(*f.label_col);
    auto csv = cor::load_csv(f.dataset, label, !f.no_header);
    const cor::DataMatrix X = f.scale_features ? cor::min_max_scale(csv.data) : std::move(csv.data);
    const auto strategy = cor::parse_strategy(f.strategy);
    if (strategy == cor::BpStrategy::External)
        throw cor::Error("gen-bps: strategy must be rps or rfs");
    const auto bps = strategy == cor::BpStrategy::RFS ? cor::generate_bps_rfs(X, f.r, f.k, f.ratio, f.seed)
                                                      : cor::generate_bps_rps(X, f.r, f.k, f.seed);
    cor::save_bps(bps, f.out + ".csv", f.out + ".json");
    std::cerr << "wrote " << f.out << ".csv and " << f.out << ".json (" << bps.r() << " partitions, R = " << bps.R()
              << ")\n";
    return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& truth_path)
{
    const auto pred = cor::read_labels(pred_path);
    const auto truth = cor::read_labels(truth_path);
    if (pred.size() != truth.size())
        throw cor::Error("eval: " + pred_path + " has " + std::to_string(pred.size()) + " labels, " + truth_path +
                         " has " + std::to_string(truth.size()));
    std::cout << cor::to_json(cor::evaluate(pred, truth)).dump(2) << '\n';
    return 0;
}

int cmd_synth(const cor::BlobSpec& spec, const std::string& out)
{
    const auto data = cor::synth_blobs(spec);
    std::ofstream os(out);
    if (!os)
        throw cor::Error("cannot write '" + out + "'");
    for (std::size_t j = 0; j < data.data.cols(); ++j)
        os << 'x' << j << ',';
    os << "label\n";
    os.precision(17);
    for (std::size_t i = 0; i < data.data.rows(); ++i) {
        for (std::size_t j = 0; j < data.data.cols(); ++j)
            os << data.data(i, j) << ',';
        os << data.truth.labels[i] << '\n';
    }
    std::cerr << "wrote " << out << " (" << data.data.rows() << " rows, " << data.truth.n_outliers
              << " outliers labeled -1)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Clustering with outlier removal in the partition space"};
    app.require_subcommand(1);

    RunFlags run;
    auto* run_cmd = app.add_subcommand("run", "Run a multi-seed experiment and write a JSON report");
    run_cmd->add_option("--config", run.config, "JSON experiment config");
    run_cmd->add_option("--dataset", run.dataset, "CSV dataset path");
    run_cmd->add_option("--label-col", run.label_col, "Label column (index or header name)");
    run_cmd->add_option("--n-smallest-classes", run.n_smallest,
                        "Number of smallest classes treated as outliers (default 1)");
    run_cmd->add_option("--method", run.method, "COR, KMEANS_BASELINE or KMEANSMM_BASELINE");
    run_cmd->add_option("--k", run.k, "Number of clusters (default: from ground truth)");
    run_cmd->add_option("--o", run.o, "Number of outliers (default: from ground truth)");
    run_cmd->add_option("--r", run.r, "Number of basic partitions");
    run_cmd->add_option("--strategy", run.strategy, "Basic partition strategy: rps|rfs");
    run_cmd->add_option("--ratio", run.ratio, "Feature ratio for rfs");
    run_cmd->add_option("--init", run.init, "COR centroid seeding: spread (default) or uniform");
    run_cmd->add_option("--runs", run.runs, "Number of runs");
    run_cmd->add_option("--seed", run.seed, "Master seed; run i uses seed + i");
    run_cmd->add_option("--out", run.out, "Report path (stdout when omitted)");
    run_cmd->add_option("--labels-dir", run.labels_dir, "Directory for per-run label CSVs");
    run_cmd->add_option("--bps", run.bps, "Persisted basic partitions CSV (COR only)");
    run_cmd->add_flag("--scale-features", run.scale_features, "Min-max scale features to [0, 1]");

    GenFlags gen;
    auto* gen_cmd = app.add_subcommand("gen-bps", "Generate and persist basic partitions");
    gen_cmd->add_option("--dataset", gen.dataset, "CSV dataset path")->required();
    gen_cmd->add_option("--label-col", gen.label_col, "Label column to exclude from the features");
    gen_cmd->add_flag("--no-header", gen.no_header, "The CSV has no header row");
    gen_cmd->add_flag("--scale-features", gen.scale_features, "Min-max scale features to [0, 1]");
    gen_cmd->add_option("--r", gen.r, "Number of basic partitions");
    gen_cmd->add_option("--k", gen.k, "Cluster numbers are drawn from {2..2K}");
    gen_cmd->add_option("--strategy", gen.strategy, "rps|rfs");
    gen_cmd->add_option("--ratio", gen.ratio, "Feature ratio for rfs");
    gen_cmd->add_option("--seed", gen.seed, "Seed");
    gen_cmd->add_option("--out", gen.out, "Output prefix; writes <out>.csv and <out>.json")->required();

    std::string pred_path, truth_path;
    auto* eval_cmd = app.add_subcommand("eval", "Score predicted labels against reference labels (-1 = outlier)");
    eval_cmd->add_option("pred", pred_path, "Predicted labels file")->required();
    eval_cmd->add_option("truth", truth_path, "Reference labels file")->required();

    cor::BlobSpec blob;
    std::string synth_out;
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic blobs dataset with -1 outlier labels");
    synth_cmd->add_option("--n-per", blob.n_per_cluster, "Points per cluster");
    synth_cmd->add_option("--k", blob.K, "Number of clusters");
    synth_cmd->add_option("--d", blob.d, "Dimensions");
    synth_cmd->add_option("--sep", blob.cluster_sep, "Minimum distance between centers");
    synth_cmd->add_option("--o", blob.o, "Number of outliers");
    synth_cmd->add_option("--scale", blob.outlier_scale, "Minimum outlier distance from every center");
    synth_cmd->add_option("--seed", blob.seed, "Seed");
    synth_cmd->add_option("--out", synth_out, "Output CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd)
            return cmd_run(run);
        if (*gen_cmd)
            return cmd_gen_bps(gen);
        if (*eval_cmd)
            return cmd_eval(pred_path, truth_path);
        if (*synth_cmd)
            return cmd_synth(blob, synth_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
