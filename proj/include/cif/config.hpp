#pragma once

// Experiment configuration: one JSON document mirroring the config structs.
// The model's input channel and class counts are filled in from the dataset
// at load time, so configs stay portable across datasets.

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "cif/dataset.hpp"
#include "cif/errors.hpp"
#include "cif/fusion.hpp"
#include "cif/io.hpp"
#include "cif/model.hpp"
#include "cif/train.hpp"

namespace cif {

struct ExperimentConfig {
    std::optional<std::string> dataset_path;
    std::optional<SyntheticSpec> synthetic;
    HmBiTcnConfig model;
    TrainConfig train;
    SplitSpec split;
    std::string output_dir = "out";

    Dataset load_data() const {
        if (dataset_path) return load_dataset(*dataset_path);
        if (synthetic) return generate_synthetic(*synthetic);
        throw ConfigError("experiment: need either a dataset path or a synthetic spec");
    }

    // Binds dataset-derived dimensions into the model config.
    HmBiTcnConfig model_for(const Dataset& data) const {
        HmBiTcnConfig cfg = model;
        cfg.input_channels = data.channels;
        cfg.num_classes = data.classes;
        cfg.validate();
        return cfg;
    }
};

namespace detail_config {

inline CoefficientMode coefficient_mode_from_string(const std::string& s) {
    if (s == "fixed") return CoefficientMode::Fixed;
    if (s == "learnable-coupling") return CoefficientMode::LearnableCoupling;
    if (s == "learnable-suppression") return CoefficientMode::LearnableSuppression;
    throw ConfigError("unknown coefficient mode '" + s + "'");
}

inline std::string to_string(CoefficientMode mode) {
    switch (mode) {
        case CoefficientMode::Fixed: return "fixed";
        case CoefficientMode::LearnableCoupling: return "learnable-coupling";
        case CoefficientMode::LearnableSuppression: return "learnable-suppression";
    }
    return "?";
}

}  // namespace detail_config

inline nlohmann::json to_json(const CifConfig& cfg) {
    nlohmann::json j;
    j["t"] = cfg.side;
    j["n"] = cfg.width;
    j["a"] = cfg.a;
    j["b"] = cfg.b;
    j["coefficient_mode"] = detail_config::to_string(cfg.coefficient_mode);
    if (!cfg.pair_map.empty()) {
        auto& pairs = j["pair_map"] = nlohmann::json::array();
        for (const auto& p : cfg.pair_map)
            pairs.push_back({p.source, p.partner, p.destination});
    }
    return j;
}

inline CifConfig cif_config_from_json(const nlohmann::json& j) {
    CifConfig cfg;
    cfg.side = j.value("t", 1);
    cfg.width = j.value("n", std::size_t{1});
    cfg.a = j.value("a", 1.0);
    cfg.b = j.value("b", 1.0);
    cfg.coefficient_mode =
        detail_config::coefficient_mode_from_string(j.value("coefficient_mode", "fixed"));
    if (j.contains("pair_map")) {
        for (const auto& entry : j.at("pair_map")) {
            if (!entry.is_array() || entry.size() != 3)
                throw ConfigError("cif pair_map entries must be [source, partner, destination]");
            cfg.pair_map.push_back({entry[0].get<std::size_t>(), entry[1].get<std::size_t>(),
                                    entry[2].get<std::size_t>()});
        }
    }
    return cfg;
}

inline nlohmann::json to_json(const SyntheticSpec& spec) {
    return {
        {"classes", spec.classes},
        {"subjects_per_class", spec.subjects_per_class},
        {"samples_per_subject", spec.samples_per_subject},
        {"steps", spec.steps},
        {"channels", spec.channels},
        {"sigma_s2", spec.sigma_s2},
        {"sigma_e2", spec.sigma_e2},
        {"rho", spec.rho},
        {"gamma", spec.gamma},
        {"seed", spec.seed},
    };
}

inline SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
    SyntheticSpec spec;
    spec.classes = j.value("classes", spec.classes);
    spec.subjects_per_class = j.value("subjects_per_class", spec.subjects_per_class);
    spec.samples_per_subject = j.value("samples_per_subject", spec.samples_per_subject);
    spec.steps = j.value("steps", spec.steps);
    spec.channels = j.value("channels", spec.channels);
    spec.sigma_s2 = j.value("sigma_s2", spec.sigma_s2);
    spec.sigma_e2 = j.value("sigma_e2", spec.sigma_e2);
    spec.rho = j.value("rho", spec.rho);
    spec.gamma = j.value("gamma", spec.gamma);
    spec.seed = j.value("seed", spec.seed);
    spec.validate();
    return spec;
}

inline ExperimentConfig experiment_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    if (j.contains("dataset_path")) cfg.dataset_path = j.at("dataset_path").get<std::string>();
    if (j.contains("synthetic")) cfg.synthetic = synthetic_spec_from_json(j.at("synthetic"));

    if (j.contains("model")) {
        const auto& m = j.at("model");
        cfg.model.kernel_size = m.value("kernel_size", cfg.model.kernel_size);
        if (m.contains("channel_widths"))
            cfg.model.channel_widths = m.at("channel_widths").get<std::vector<std::size_t>>();
        if (m.contains("dilation_schedule"))
            cfg.model.dilation_schedule =
                m.at("dilation_schedule").get<std::vector<std::size_t>>();
        cfg.model.direction_mode =
            direction_from_string(m.value("direction_mode", std::string("both")));
        if (m.contains("cif") && !m.at("cif").is_null())
            cfg.model.cif = cif_config_from_json(m.at("cif"));
    }

    if (j.contains("train")) {
        const auto& t = j.at("train");
        cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
        cfg.train.adam_beta1 = t.value("adam_beta1", cfg.train.adam_beta1);
        cfg.train.adam_beta2 = t.value("adam_beta2", cfg.train.adam_beta2);
        cfg.train.adam_eps = t.value("adam_eps", cfg.train.adam_eps);
        cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
        cfg.train.max_epochs = t.value("max_epochs", cfg.train.max_epochs);
        cfg.train.patience = t.value("patience", cfg.train.patience);
        if (t.contains("seeds")) cfg.train.seeds = t.at("seeds").get<std::vector<std::uint64_t>>();
        cfg.train.validate();
    }

    if (j.contains("split")) {
        const auto& s = j.at("split");
        cfg.split.mode = split_mode_from_string(s.value("mode", std::string("subject-independent")));
        if (s.contains("ratios")) {
            const auto ratios = s.at("ratios").get<std::vector<double>>();
            if (ratios.size() != 3) throw ConfigError("split.ratios must have three entries");
            cfg.split.train_ratio = ratios[0];
            cfg.split.val_ratio = ratios[1];
            cfg.split.test_ratio = ratios[2];
        }
        cfg.split.seed = s.value("seed", cfg.split.seed);
        if (s.contains("train_subjects"))
            cfg.split.train_subjects = s.at("train_subjects").get<std::vector<std::string>>();
        if (s.contains("val_subjects"))
            cfg.split.val_subjects = s.at("val_subjects").get<std::vector<std::string>>();
        if (s.contains("test_subjects"))
            cfg.split.test_subjects = s.at("test_subjects").get<std::vector<std::string>>();
        cfg.split.validate();
    }

    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    return cfg;
}

inline nlohmann::json to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    if (cfg.dataset_path) j["dataset_path"] = *cfg.dataset_path;
    if (cfg.synthetic) j["synthetic"] = to_json(*cfg.synthetic);
    nlohmann::json m;
    m["kernel_size"] = cfg.model.kernel_size;
    m["channel_widths"] = cfg.model.channel_widths;
    m["dilation_schedule"] = cfg.model.dilation_schedule;
    m["direction_mode"] = to_string(cfg.model.direction_mode);
    if (cfg.model.cif) m["cif"] = to_json(*cfg.model.cif);
    j["model"] = m;
    j["train"] = {
        {"learning_rate", cfg.train.learning_rate}, {"adam_beta1", cfg.train.adam_beta1},
        {"adam_beta2", cfg.train.adam_beta2},       {"adam_eps", cfg.train.adam_eps},
        {"batch_size", cfg.train.batch_size},       {"max_epochs", cfg.train.max_epochs},
        {"patience", cfg.train.patience},           {"seeds", cfg.train.seeds},
    };
    nlohmann::json s;
    s["mode"] = to_string(cfg.split.mode);
    s["ratios"] = {cfg.split.train_ratio, cfg.split.val_ratio, cfg.split.test_ratio};
    s["seed"] = cfg.split.seed;
    if (!cfg.split.train_subjects.empty()) s["train_subjects"] = cfg.split.train_subjects;
    if (!cfg.split.val_subjects.empty()) s["val_subjects"] = cfg.split.val_subjects;
    if (!cfg.split.test_subjects.empty()) s["test_subjects"] = cfg.split.test_subjects;
    j["split"] = s;
    j["output_dir"] = cfg.output_dir;
    return j;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in " + path.string() + ": " + e.what());
    }
    return experiment_from_json(j);
}

}  // namespace cif
