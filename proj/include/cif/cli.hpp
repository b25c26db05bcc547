#pragma once

// Command-line driver: every verification and training workflow is a
// subcommand. All tables are CSV with a header row, written atomically;
// summary text mirrors the usual mean+-std presentation in percs with two
// decimals.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cif/config.hpp"
#include "cif/dataset.hpp"
#include "cif/errors.hpp"
#include "cif/fusion.hpp"
#include "cif/io.hpp"
#include "cif/metrics.hpp"
#include "cif/model.hpp"
#include "cif/snr.hpp"
#include "cif/svd.hpp"
#include "cif/train.hpp"

namespace cif::cli {

namespace fs = std::filesystem;

inline std::string fmt(double v) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.10g", v);
    return buffer;
}

inline std::string fmt_pct(double mean, double stddev) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.2f±%.2f", 100.0 * mean, 100.0 * stddev);
    return buffer;
}

inline void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    io::write_file_atomic(path, text);
}

// --- snr-verify -------------------------------------------------------------

struct SnrVerifyOptions {
    std::string out_dir = "out";
    std::size_t samples = 100'000;
    std::uint64_t seed = 1;
};

inline int run_snr_verify(const SnrVerifyOptions& opt) {
    const std::vector<std::pair<double, double>> coefficient_pairs = {
        {1, 1}, {1, -1}, {-1, 1}, {0.5, 1}, {1, 0.5}, {0.3, 1}, {-0.5, 1}, {0.3, -1},
    };
    const std::vector<double> correlations = {-0.9, -0.45, 0.0, 0.45, 0.9};

    std::string csv = "a,b,rho,gamma,theoretical_gain,empirical_gain,mode,N,seed\n";
    std::size_t cell = 0;
    for (double rho : correlations) {
        for (double gamma : correlations) {
            SignalModel model{1.0, 1.0, rho, gamma};
            const auto draw = sample_correlated_pairs(model, opt.samples, opt.seed + cell);
            for (auto [a, b] : coefficient_pairs) {
                const double denominator = a * a + b * b + 2 * a * b * gamma;
                if (denominator < 0.1) continue;
                const double theory = theoretical_gain(a, b, rho, gamma);
                const double measured =
                    empirical_snr_gain(a, b, draw.s1, draw.s2, draw.e1, draw.e2);
                csv += fmt(a) + "," + fmt(b) + "," + fmt(rho) + "," + fmt(gamma) + "," +
                       fmt(theory) + "," + fmt(measured) + "," +
                       to_string(classify_mode(a, b, rho, gamma)) + "," +
                       std::to_string(opt.samples) + "," + std::to_string(opt.seed + cell) + "\n";
            }
            ++cell;
        }
    }
    fs::create_directories(opt.out_dir);
    io::write_file_atomic(fs::path(opt.out_dir) / "snr_verify.csv", csv);
    std::cout << "wrote " << (fs::path(opt.out_dir) / "snr_verify.csv").string() << "\n";
    return 0;
}

// --- gradcheck ----------------------------------------------------------------

struct GradcheckOptions {
    std::uint64_t seed = 12;
    double tolerance = 1e-4;
};

inline int run_gradcheck(const GradcheckOptions& opt) {
    HmBiTcnConfig cfg;
    cfg.input_channels = 4;
    cfg.kernel_size = 3;
    cfg.channel_widths = {16, 16, 16};
    cfg.dilation_schedule = {4, 2, 1};
    cfg.num_classes = 2;
    CifConfig cif_cfg;
    cif_cfg.side = 1;
    cif_cfg.width = 2;
    cif_cfg.a = 1.0;
    cif_cfg.b = -1.0;
    cif_cfg.coefficient_mode = CoefficientMode::LearnableSuppression;
    cfg.cif = cif_cfg;

    HmBiTcn model(cfg, opt.seed);
    Rng rng(substream_seed(opt.seed, 5));
    std::vector<double> xv(2 * 16 * 4);
    for (auto& v : xv) v = rng.normal();
    Tensor x({2, 16, 4}, std::move(xv));
    const std::vector<int> labels = {0, 1};

    model.zero_grad();
    backward(softmax_cross_entropy(model.forward(x), labels));

    const double h = 1e-5;
    double worst = 0.0;
    for (auto& param : model.parameters()) {
        const auto analytic = param.grad();
        auto& values = param.mutable_values();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + h;
            const double up = softmax_cross_entropy(model.forward(x), labels).value();
            values[i] = saved - h;
            const double down = softmax_cross_entropy(model.forward(x), labels).value();
            values[i] = saved;
            worst = std::max(worst, max_relative_error({analytic[i]}, {(up - down) / (2 * h)}));
        }
    }
    std::cout << "parameters checked: " << model.count_parameters()
              << "\nmax relative error: " << fmt(worst) << "\n"
              << (worst < opt.tolerance ? "PASS" : "FAIL") << " (tolerance " << fmt(opt.tolerance)
              << ")\n";
    return worst < opt.tolerance ? 0 : 1;
}

// --- svd-report ---------------------------------------------------------------

struct SvdReportOptions {
    std::string out_dir = "out";
    std::string data_dir;  // first sample of this dataset when given
    std::size_t rows = 64;
    std::size_t cols = 8;
    std::uint64_t seed = 5;
    std::vector<std::size_t> widths;       // defaults to 1..C/2 (capped at 4)
    std::vector<double> a_values = {1.0, 1.0};
    std::vector<double> b_values = {1.0, -1.0};
};

inline int run_svd_report(const SvdReportOptions& opt) {
    Matrix x;
    if (!opt.data_dir.empty()) {
        const Dataset data = load_dataset(opt.data_dir);
        if (data.samples.empty()) throw ConfigError("svd-report: dataset has no samples");
        x = Matrix(data.steps, data.channels, data.samples.front().values);
    } else {
        Rng rng(opt.seed);
        x = Matrix(opt.rows, opt.cols);
        for (auto& v : x.data) v = rng.normal();
    }
    if (opt.a_values.size() != opt.b_values.size())
        throw ConfigError("svd-report: --a and --b need the same number of values");

    std::vector<std::size_t> widths = opt.widths;
    if (widths.empty())
        for (std::size_t n = 1; n <= std::min<std::size_t>(x.cols / 2, 4); ++n)
            widths.push_back(n);

    std::string csv = "n,a,b,linear_identity_residual,shared_pattern_error";
    for (int i = 1; i <= 5; ++i) csv += ",angle" + std::to_string(i) + "_deg";
    csv += "\n";
    for (std::size_t n : widths) {
        if (n < 1 || 2 * n > x.cols)
            throw ConfigError("svd-report: width must satisfy 1 <= n <= C/2");
        const auto f1 = svd(front_block(x, n));
        const auto f2 = svd(back_block(x, n));
        const auto angles = principal_angles(f1.u, f2.u);
        for (std::size_t i = 0; i < opt.a_values.size(); ++i) {
            const double a = opt.a_values[i], b = opt.b_values[i];
            csv += std::to_string(n) + "," + fmt(a) + "," + fmt(b) + "," +
                   fmt(linear_identity_residual(x, n, a, b)) + "," +
                   fmt(shared_pattern_error(x, n, a, b));
            for (std::size_t angle_index = 0; angle_index < 5; ++angle_index)
                csv += "," + (angle_index < angles.size()
                                  ? fmt(angles[angle_index] * 180.0 / Rng::pi())
                                  : std::string(""));
            csv += "\n";
        }
    }
    fs::create_directories(opt.out_dir);
    io::write_file_atomic(fs::path(opt.out_dir) / "svd_report.csv", csv);
    std::cout << "wrote " << (fs::path(opt.out_dir) / "svd_report.csv").string() << "\n";
    return 0;
}

// --- gen-data -----------------------------------------------------------------

struct GenDataOptions {
    std::string config_path;
    std::string out_dir = "out/dataset";
    std::optional<std::uint64_t> seed;
    SyntheticSpec spec;
};

inline int run_gen_data(const GenDataOptions& opt) {
    SyntheticSpec spec = opt.spec;
    if (!opt.config_path.empty()) {
        const ExperimentConfig cfg = load_experiment_config(opt.config_path);
        if (!cfg.synthetic) throw ConfigError("gen-data: config has no synthetic block");
        spec = *cfg.synthetic;
    }
    if (opt.seed) spec.seed = *opt.seed;
    const Dataset data = generate_synthetic(spec);
    save_dataset(data, opt.out_dir);
    std::cout << "wrote " << data.samples.size() << " samples to " << opt.out_dir << "\n";
    return 0;
}

// --- cif-apply ------------------------------------------------------------------

struct CifApplyOptions {
    std::string data_dir;
    std::string out_dir;
    CifConfig cfg;
};

inline int run_cif_apply(const CifApplyOptions& opt) {
    Dataset data = load_dataset(opt.data_dir);
    opt.cfg.validate(data.channels);

    auto transform = [&](std::vector<double>& values) {
        Tensor x({1, data.steps, data.channels}, values);
        Tensor out = opt.cfg.pair_map.empty()
                         ? apply_cif(x, opt.cfg)
                         : apply_psf(x, opt.cfg.pair_map, opt.cfg.a, opt.cfg.b);
        values = out.values();
    };
    for (auto& sample : data.samples) transform(sample.values);
    // The fusion is linear, so the ground-truth decomposition transforms the
    // same way and stays consistent with the fused samples.
    for (auto& signal : data.signal_parts) transform(signal);
    for (auto& noise : data.noise_parts) transform(noise);

    save_dataset(data, opt.out_dir);
    std::cout << "wrote fused dataset to " << opt.out_dir << "\n";
    return 0;
}

// --- train / eval ----------------------------------------------------------------

struct TrainOptions {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;  // restricts to a single seed
};

inline std::string history_csv(const TrainResult& result) {
    std::string csv = "epoch,train_loss,val_f1\n";
    for (const auto& row : result.history)
        csv += std::to_string(row.epoch) + "," + fmt(row.train_loss) + "," + fmt(row.val_f1) + "\n";
    return csv;
}

inline std::string metrics_csv_header() {
    return "seed,accuracy,precision,recall,f1,auroc,auprc\n";
}

inline std::string metrics_csv_row(std::uint64_t seed, const EvalResult& r) {
    return std::to_string(seed) + "," + fmt(r.accuracy) + "," + fmt(r.precision_macro) + "," +
           fmt(r.recall_macro) + "," + fmt(r.f1_macro) + "," + fmt(r.auroc_macro) + "," +
           fmt(r.auprc_macro) + "\n";
}

inline std::string summary_text(const MetricsReport& report) {
    auto line = [&](const char* name, std::pair<double, double> ms) {
        return std::string(name) + ": " + fmt_pct(ms.first, ms.second) + "\n";
    };
    std::string text;
    text += line("accuracy ", report.accuracy());
    text += line("precision", report.precision());
    text += line("recall   ", report.recall());
    text += line("f1       ", report.f1());
    text += line("auroc    ", report.auroc());
    text += line("auprc    ", report.auprc());
    return text;
}

inline int run_train(const TrainOptions& opt) {
    ExperimentConfig cfg = load_experiment_config(opt.config_path);
    const std::string out_dir = opt.out_dir.empty() ? cfg.output_dir : opt.out_dir;
    if (opt.seed) cfg.train.seeds = {*opt.seed};

    const Dataset data = cfg.load_data();
    const HmBiTcnConfig model_cfg = cfg.model_for(data);
    const SplitIndices parts = split(data, cfg.split);
    fs::create_directories(out_dir);
    io::write_file_atomic(fs::path(out_dir) / "config.json", to_json(cfg).dump(2) + "\n");

    MetricsReport report;
    std::string per_seed_csv = metrics_csv_header();
    for (std::uint64_t seed : cfg.train.seeds) {
        HmBiTcn model(model_cfg, seed);
        const TrainResult result = train(model, data, parts, cfg.train, seed);
        const EvalResult test_metrics = evaluate(model, data, parts.test);
        report.runs.push_back(test_metrics);
        per_seed_csv += metrics_csv_row(seed, test_metrics);
        io::write_file_atomic(
            fs::path(out_dir) / ("history_seed" + std::to_string(seed) + ".csv"),
            history_csv(result));
        model.save_parameters(fs::path(out_dir) / ("params_seed" + std::to_string(seed) + ".hmbt"));
        std::cout << "seed " << seed << ": best val F1 " << fmt(result.best_val_f1) << " at epoch "
                  << result.best_epoch << ", test acc " << fmt(test_metrics.accuracy) << "\n";
    }
    io::write_file_atomic(fs::path(out_dir) / "per_seed_metrics.csv", per_seed_csv);
    io::write_file_atomic(fs::path(out_dir) / "summary.txt", summary_text(report));
    std::cout << summary_text(report);

    const TimingReport timing = timing_report(model_cfg, cfg.train.batch_size, data.steps);
    std::cout << "parameters: " << timing.parameter_count << ", forward "
              << fmt(timing.forward_seconds) << " s, backward " << fmt(timing.backward_seconds)
              << " s per batch of " << timing.batch << "\n";
    return 0;
}

struct EvalOptions {
    std::string config_path;
    std::string params_path;
    std::string split_name = "test";
    std::string out_dir;
};

inline int run_eval(const EvalOptions& opt) {
    const ExperimentConfig cfg = load_experiment_config(opt.config_path);
    const Dataset data = cfg.load_data();
    const HmBiTcnConfig model_cfg = cfg.model_for(data);
    const SplitIndices parts = split(data, cfg.split);

    const std::vector<std::size_t>* indices = nullptr;
    if (opt.split_name == "train") indices = &parts.train;
    else if (opt.split_name == "val") indices = &parts.val;
    else if (opt.split_name == "test") indices = &parts.test;
    else throw ConfigError("eval: --split must be train, val, or test");

    HmBiTcn model(model_cfg, 0);
    model.load_parameters(opt.params_path);
    const EvalResult metrics = evaluate(model, data, *indices);

    std::string csv = metrics_csv_header();
    csv += metrics_csv_row(0, metrics);
    if (!opt.out_dir.empty()) {
        fs::create_directories(opt.out_dir);
        io::write_file_atomic(fs::path(opt.out_dir) / "eval.csv", csv);
    }
    std::cout << "split " << opt.split_name << ": accuracy " << fmt(metrics.accuracy) << ", f1 "
              << fmt(metrics.f1_macro) << ", auroc " << fmt(metrics.auroc_macro) << ", auprc "
              << fmt(metrics.auprc_macro) << "\n";
    return 0;
}

// --- ablate -------------------------------------------------------------------

struct AblateOptions {
    std::string config_path;
    std::string out_dir;
};

inline std::string ablate_table(const ExperimentConfig& cfg) {
    const Dataset data = cfg.load_data();
    const SplitIndices parts = split(data, cfg.split);  // shared by every cell

    std::string csv =
        "cif,direction,accuracy_mean,accuracy_std,precision_mean,precision_std,recall_mean,"
        "recall_std,f1_mean,f1_std,auroc_mean,auroc_std,auprc_mean,auprc_std\n";
    for (bool with_cif : {true, false}) {
        for (DirectionMode direction :
             {DirectionMode::Forward, DirectionMode::Backward, DirectionMode::Both}) {
            HmBiTcnConfig model_cfg = cfg.model_for(data);
            model_cfg.direction_mode = direction;
            if (!with_cif) model_cfg.cif.reset();
            else if (!model_cfg.cif)
                throw ConfigError("ablate: config must carry a cif block for the CIF-on cells");

            const MultiSeedResult result = run_multi_seed(model_cfg, data, parts, cfg.train);
            const auto acc = result.report.accuracy();
            const auto prec = result.report.precision();
            const auto rec = result.report.recall();
            const auto f1 = result.report.f1();
            const auto auroc = result.report.auroc();
            const auto auprc = result.report.auprc();
            csv += std::string(with_cif ? "on" : "off") + "," + to_string(direction) + "," +
                   fmt(acc.first) + "," + fmt(acc.second) + "," + fmt(prec.first) + "," +
                   fmt(prec.second) + "," + fmt(rec.first) + "," + fmt(rec.second) + "," +
                   fmt(f1.first) + "," + fmt(f1.second) + "," + fmt(auroc.first) + "," +
                   fmt(auroc.second) + "," + fmt(auprc.first) + "," + fmt(auprc.second) + "\n";
        }
    }
    return csv;
}

inline int run_ablate(const AblateOptions& opt) {
    const ExperimentConfig cfg = load_experiment_config(opt.config_path);
    const std::string out_dir = opt.out_dir.empty() ? cfg.output_dir : opt.out_dir;
    const std::string csv = ablate_table(cfg);
    fs::create_directories(out_dir);
    io::write_file_atomic(fs::path(out_dir) / "ablate.csv", csv);
    std::cout << csv;
    return 0;
}

// --- grid-cif -----------------------------------------------------------------

struct GridCifOptions {
    std::string config_path;
    std::string out_dir;
    std::vector<int> t_values = {1};
    std::vector<std::size_t> n_values = {1};
    std::vector<double> a_values = {1.0};
    std::vector<double> b_values = {1.0, -1.0};
};

inline int run_grid_cif(const GridCifOptions& opt) {
    const ExperimentConfig cfg = load_experiment_config(opt.config_path);
    const std::string out_dir = opt.out_dir.empty() ? cfg.output_dir : opt.out_dir;
    const Dataset data = cfg.load_data();
    const SplitIndices parts = split(data, cfg.split);

    std::string csv = "t,n,a,b,accuracy_mean,accuracy_std,f1_mean,f1_std\n";
    for (int t : opt.t_values)
        for (std::size_t n : opt.n_values)
            for (double a : opt.a_values)
                for (double b : opt.b_values) {
                    HmBiTcnConfig model_cfg = cfg.model_for(data);
                    CifConfig cif_cfg = model_cfg.cif.value_or(CifConfig{});
                    cif_cfg.side = t;
                    cif_cfg.width = n;
                    cif_cfg.a = a;
                    cif_cfg.b = b;
                    cif_cfg.pair_map.clear();
                    cif_cfg.validate(data.channels);
                    model_cfg.cif = cif_cfg;
                    const MultiSeedResult result =
                        run_multi_seed(model_cfg, data, parts, cfg.train);
                    const auto acc = result.report.accuracy();
                    const auto f1 = result.report.f1();
                    csv += std::to_string(t) + "," + std::to_string(n) + "," + fmt(a) + "," +
                           fmt(b) + "," + fmt(acc.first) + "," + fmt(acc.second) + "," +
                           fmt(f1.first) + "," + fmt(f1.second) + "\n";
                }
    fs::create_directories(out_dir);
    io::write_file_atomic(fs::path(out_dir) / "grid_cif.csv", csv);
    std::cout << csv;
    return 0;
}

// --- dispatch -------------------------------------------------------------------

inline int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"Channel-imposed fusion and HM-BiTCN toolkit"};
    app.require_subcommand(1);

    SnrVerifyOptions snr_opt;
    auto* snr = app.add_subcommand("snr-verify", "Monte-Carlo check of the fusion SNR gain law");
    snr->add_option("--out", snr_opt.out_dir, "output directory");
    snr->add_option("--samples", snr_opt.samples, "samples per cell");
    snr->add_option("--seed", snr_opt.seed, "base seed");

    GradcheckOptions grad_opt;
    auto* grad = app.add_subcommand("gradcheck", "full-model finite-difference gradient check");
    grad->add_option("--seed", grad_opt.seed, "seed");
    grad->add_option("--tolerance", grad_opt.tolerance, "max relative error allowed");

    SvdReportOptions svd_opt;
    auto* svdr = app.add_subcommand("svd-report", "fusion SVD diagnostics per (n, a, b)");
    svdr->add_option("--out", svd_opt.out_dir, "output directory");
    svdr->add_option("--data", svd_opt.data_dir, "dataset directory (first sample is analyzed)");
    svdr->add_option("--rows", svd_opt.rows, "rows of the random matrix");
    svdr->add_option("--cols", svd_opt.cols, "columns of the random matrix");
    svdr->add_option("--seed", svd_opt.seed, "seed for the random matrix");
    svdr->add_option("--n", svd_opt.widths, "group widths to analyze");
    svdr->add_option("--a", svd_opt.a_values, "front coefficients");
    svdr->add_option("--b", svd_opt.b_values, "back coefficients");

    GenDataOptions gen_opt;
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
    gen->add_option("--config", gen_opt.config_path, "experiment config with a synthetic block");
    gen->add_option("--out", gen_opt.out_dir, "output dataset directory");
    std::int64_t gen_seed = -1;
    gen->add_option("--seed", gen_seed, "override the generation seed");
    gen->add_option("--classes", gen_opt.spec.classes, "number of classes");
    gen->add_option("--subjects", gen_opt.spec.subjects_per_class, "subjects per class");
    gen->add_option("--samples", gen_opt.spec.samples_per_subject, "samples per subject");
    gen->add_option("--steps", gen_opt.spec.steps, "time steps");
    gen->add_option("--channels", gen_opt.spec.channels, "channels (even)");
    gen->add_option("--sigma-s2", gen_opt.spec.sigma_s2, "signal variance");
    gen->add_option("--sigma-e2", gen_opt.spec.sigma_e2, "noise variance");
    gen->add_option("--rho", gen_opt.spec.rho, "pair signal correlation");
    gen->add_option("--gamma", gen_opt.spec.gamma, "pair noise correlation");

    CifApplyOptions apply_opt;
    auto* apply = app.add_subcommand("cif-apply", "apply channel fusion to a dataset");
    apply->add_option("--data", apply_opt.data_dir, "input dataset directory")->required();
    apply->add_option("--out", apply_opt.out_dir, "output dataset directory")->required();
    apply->add_option("--t", apply_opt.cfg.side, "side selector (sign only)");
    apply->add_option("--n", apply_opt.cfg.width, "group width");
    apply->add_option("--a", apply_opt.cfg.a, "front coefficient");
    apply->add_option("--b", apply_opt.cfg.b, "back coefficient");
    std::vector<std::string> pair_specs;
    apply->add_option("--pair", pair_specs, "pair as src:partner:dst (repeatable)");

    TrainOptions train_opt;
    auto* train_cmd = app.add_subcommand("train", "train over the configured seeds");
    train_cmd->add_option("--config", train_opt.config_path, "experiment config")->required();
    train_cmd->add_option("--out", train_opt.out_dir, "output directory");
    std::int64_t train_seed = -1;
    train_cmd->add_option("--seed", train_seed, "train a single seed");

    EvalOptions eval_opt;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate saved parameters on a split");
    eval_cmd->add_option("--config", eval_opt.config_path, "experiment config")->required();
    eval_cmd->add_option("--params", eval_opt.params_path, "parameter file")->required();
    eval_cmd->add_option("--split", eval_opt.split_name, "train, val, or test");
    eval_cmd->add_option("--out", eval_opt.out_dir, "output directory");

    AblateOptions ablate_opt;
    auto* ablate_cmd =
        app.add_subcommand("ablate", "2x3 grid: {CIF on/off} x {forward, backward, both}");
    ablate_cmd->add_option("--config", ablate_opt.config_path, "experiment config")->required();
    ablate_cmd->add_option("--out", ablate_opt.out_dir, "output directory");

    GridCifOptions grid_opt;
    auto* grid_cmd = app.add_subcommand("grid-cif", "manual sweep over (t, n, a, b)");
    grid_cmd->add_option("--config", grid_opt.config_path, "experiment config")->required();
    grid_cmd->add_option("--out", grid_opt.out_dir, "output directory");
    grid_cmd->add_option("--t", grid_opt.t_values, "side selectors");
    grid_cmd->add_option("--n", grid_opt.n_values, "group widths");
    grid_cmd->add_option("--a", grid_opt.a_values, "front coefficients");
    grid_cmd->add_option("--b", grid_opt.b_values, "back coefficients");

    std::vector<const char*> argv;
    argv.push_back("cif");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (snr->parsed()) return run_snr_verify(snr_opt);
        if (grad->parsed()) return run_gradcheck(grad_opt);
        if (svdr->parsed()) return run_svd_report(svd_opt);
        if (gen->parsed()) {
            if (gen_seed >= 0) gen_opt.seed = static_cast<std::uint64_t>(gen_seed);
            return run_gen_data(gen_opt);
        }
        if (apply->parsed()) {
            for (const auto& text : pair_specs) {
                ChannelPair pair;
                if (std::sscanf(text.c_str(), "%zu:%zu:%zu", &pair.source, &pair.partner,
                                &pair.destination) != 3)
                    throw ConfigError("cif-apply: --pair expects src:partner:dst");
                apply_opt.cfg.pair_map.push_back(pair);
            }
            return run_cif_apply(apply_opt);
        }
        if (train_cmd->parsed()) {
            if (train_seed >= 0) train_opt.seed = static_cast<std::uint64_t>(train_seed);
            return run_train(train_opt);
        }
        if (eval_cmd->parsed()) return run_eval(eval_opt);
        if (ablate_cmd->parsed()) return run_ablate(ablate_opt);
        if (grid_cmd->parsed()) return run_grid_cif(grid_opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    std::cerr << "error: no subcommand selected\n";
    return 2;
}

}  // namespace cif::cli
