#pragma once

#include <cstdint>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "enamle/dataset.hpp"
#include "enamle/linear_svm.hpp"
#include "enamle/mlp.hpp"
#include "enamle/random_forest.hpp"
#include "enamle/submodel_plan.hpp"

namespace enamle {

enum class ClassifierKind { mlp, random_forest, linear_svm };

inline std::string to_string(ClassifierKind k) {
    switch (k) {
        case ClassifierKind::mlp: return "mlp";
        case ClassifierKind::random_forest: return "random_forest";
        case ClassifierKind::linear_svm: return "linear_svm";
    }
    throw std::logic_error("unknown ClassifierKind");
}

inline ClassifierKind classifier_kind_from_string(const std::string& s) {
    if (s == "mlp") return ClassifierKind::mlp;
    if (s == "random_forest") return ClassifierKind::random_forest;
    if (s == "linear_svm") return ClassifierKind::linear_svm;
    throw std::invalid_argument("unknown classifier kind: " + s);
}

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::mlp;
    std::uint64_t seed = 0;
    MlpParams mlp;
    ForestParams forest;
    SvmParams svm;
};

inline void to_json(nlohmann::json& j, const ClassifierSpec& s) {
    j = {{"kind", to_string(s.kind)}, {"seed", s.seed}};
    switch (s.kind) {
        case ClassifierKind::mlp: j.update(nlohmann::json(s.mlp)); break;
        case ClassifierKind::random_forest: j.update(nlohmann::json(s.forest)); break;
        case ClassifierKind::linear_svm: j.update(nlohmann::json(s.svm)); break;
    }
}
inline void from_json(const nlohmann::json& j, ClassifierSpec& s) {
    s.kind = classifier_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("seed")) j.at("seed").get_to(s.seed);
    switch (s.kind) {
        case ClassifierKind::mlp: j.get_to(s.mlp); break;
        case ClassifierKind::random_forest: j.get_to(s.forest); break;
        case ClassifierKind::linear_svm: j.get_to(s.svm); break;
    }
}

/// A trained classifier of any supported kind, predicting over a fixed
/// ordered feature subset.
struct TrainedModel {
    std::variant<MlpModel, ForestModel, SvmModel> impl;

    int in_dim() const {
        return std::visit([](const auto& m) { return m.in_dim; }, impl);
    }
    int predict(std::span<const double> x) const {
        return std::visit([&](const auto& m) { return m.predict(x); }, impl);
    }
};

/// Single prediction; errors on feature-width mismatch. Pure.
inline int predict_one(const TrainedModel& model, std::span<const double> features) {
    return model.predict(features);
}

inline void to_json(nlohmann::json& j, const TrainedModel& m) {
    if (const auto* p = std::get_if<MlpModel>(&m.impl)) {
        j = *p;
        j["kind"] = "mlp";
    } else if (const auto* p2 = std::get_if<ForestModel>(&m.impl)) {
        j = *p2;
        j["kind"] = "random_forest";
    } else {
        j = std::get<SvmModel>(m.impl);
        j["kind"] = "linear_svm";
    }
}
inline void from_json(const nlohmann::json& j, TrainedModel& m) {
    switch (classifier_kind_from_string(j.at("kind").get<std::string>())) {
        case ClassifierKind::mlp: m.impl = j.get<MlpModel>(); break;
        case ClassifierKind::random_forest: m.impl = j.get<ForestModel>(); break;
        case ClassifierKind::linear_svm: m.impl = j.get<SvmModel>(); break;
    }
}

/// Per-sensor arithmetic mean over training rows; the imputation source for
/// failed sensors at inference time.
inline std::vector<double> fit_imputer(const Dataset& d) {
    const auto rows = d.rows_tagged(SplitTag::train);
    if (rows.empty()) throw std::invalid_argument("fit_imputer: empty training partition");
    std::vector<double> means(d.n_sensors(), 0.0);
    for (std::size_t j = 0; j < d.n_sensors(); ++j) {
        double acc = 0.0;
        for (std::size_t i : rows) acc += d.at(i, j);
        means[j] = acc / static_cast<double>(rows.size());
    }
    return means;
}

/// Base model plus the plan's sub-models, with everything inference needs:
/// training accuracies (suitability ordering), imputation means, and the
/// raw-to-model-space scaling captured from the training data.
struct TrainedEnsemble {
    EnsemblePlan plan;
    ClassifierSpec classifier_spec;
    std::vector<std::string> sensor_names;  // dataset column order
    std::vector<std::string> class_names;
    TrainedModel base_model;
    std::vector<TrainedModel> sub_models;
    double base_training_accuracy = 0.0;
    std::vector<double> sub_training_accuracy;
    std::vector<double> imputer_means;  // per sensor
    bool input_normalized = false;
    std::vector<double> norm_min, norm_max;

    // Derived lookup tables, rebuilt by finalize().
    std::vector<std::vector<int>> feature_index_sets;     // per sub-model
    std::vector<std::vector<std::uint64_t>> feature_masks;  // per sub-model bitset

    std::size_t n_sensors() const { return sensor_names.size(); }

    int sensor_index(const std::string& name) const {
        for (std::size_t j = 0; j < sensor_names.size(); ++j)
            if (sensor_names[j] == name) return static_cast<int>(j);
        throw std::invalid_argument("unknown sensor: " + name);
    }

    /// Rebuilds index sets and bit masks from the plan's sensor names.
    void finalize() {
        const std::size_t words = (n_sensors() + 63) / 64;
        feature_index_sets.clear();
        feature_masks.clear();
        for (const auto& fs : plan.feature_sets) {
            std::vector<int> idx;
            std::vector<std::uint64_t> mask(words, 0);
            for (const auto& name : fs) {
                const int j = sensor_index(name);
                idx.push_back(j);
                mask[static_cast<std::size_t>(j) / 64] |= std::uint64_t{1} << (j % 64);
            }
            feature_index_sets.push_back(std::move(idx));
            feature_masks.push_back(std::move(mask));
        }
    }
};

namespace detail {

inline TrainedModel train_model(const std::vector<double>& X, const std::vector<int>& y,
                                int in_dim, int n_classes, const ClassifierSpec& spec,
                                std::uint64_t seed) {
    switch (spec.kind) {
        case ClassifierKind::mlp:
            return {MlpModel::train(X, y, in_dim, n_classes, spec.mlp, seed)};
        case ClassifierKind::random_forest:
            return {ForestModel::train(X, y, in_dim, n_classes, spec.forest, seed)};
        case ClassifierKind::linear_svm:
            return {SvmModel::train(X, y, in_dim, n_classes, spec.svm, seed)};
    }
    throw std::logic_error("unknown classifier kind");
}

inline double training_accuracy(const TrainedModel& m, const std::vector<double>& X,
                                const std::vector<int>& y, int in_dim) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const std::span<const double> row{X.data() + i * static_cast<std::size_t>(in_dim),
                                          static_cast<std::size_t>(in_dim)};
        if (m.predict(row) == y[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(y.size());
}

}  // namespace detail

/// Trains the base model on all sensors and one sub-model per plan feature
/// set. Sub-model j's training matrix is built from its feature subset only,
/// so excluded sensor columns are never read. Per-model seeds derive from
/// the ClassifierSpec seed by model index; training is deterministic.
inline TrainedEnsemble train(const Dataset& d, const EnsemblePlan& plan,
                             const ClassifierSpec& spec) {
    if (!d.has_split()) throw std::invalid_argument("train: dataset has no split");
    if (!d.normalized) throw std::invalid_argument("train: dataset not normalized");

    TrainedEnsemble ens;
    ens.plan = plan;
    ens.classifier_spec = spec;
    ens.sensor_names = d.sensor_names;
    ens.class_names = d.class_names;
    ens.input_normalized = d.normalized;
    ens.norm_min = d.norm_min;
    ens.norm_max = d.norm_max;
    ens.finalize();  // validates plan sensors against the dataset

    const auto rows = d.rows_tagged(SplitTag::train);
    if (rows.empty()) throw std::invalid_argument("train: empty training partition");
    const int n_classes = static_cast<int>(d.class_names.size());
    {
        std::vector<int> class_rows(static_cast<std::size_t>(n_classes), 0);
        for (std::size_t i : rows) class_rows[static_cast<std::size_t>(d.labels[i])]++;
        for (int c = 0; c < n_classes; ++c)
            if (class_rows[static_cast<std::size_t>(c)] == 0)
                throw std::invalid_argument("train: class with zero training rows: " +
                                            d.class_names[static_cast<std::size_t>(c)]);
    }

    const int s = static_cast<int>(d.n_sensors());
    std::vector<int> y;
    y.reserve(rows.size());
    for (std::size_t i : rows) y.push_back(d.labels[i]);

    std::vector<double> Xbase;
    Xbase.reserve(rows.size() * static_cast<std::size_t>(s));
    for (std::size_t i : rows) {
        const auto r = d.row(i);
        Xbase.insert(Xbase.end(), r.begin(), r.end());
    }
    ens.base_model = detail::train_model(Xbase, y, s, n_classes, spec,
                                         rng::derive_seed(spec.seed, 0));
    ens.base_training_accuracy = detail::training_accuracy(ens.base_model, Xbase, y, s);

    for (std::size_t j = 0; j < ens.feature_index_sets.size(); ++j) {
        const auto& idx = ens.feature_index_sets[j];
        const int dim = static_cast<int>(idx.size());
        std::vector<double> Xsub;
        Xsub.reserve(rows.size() * idx.size());
        for (std::size_t i : rows)
            for (int col : idx) Xsub.push_back(d.at(i, static_cast<std::size_t>(col)));
        TrainedModel m = detail::train_model(Xsub, y, dim, n_classes, spec,
                                             rng::derive_seed(spec.seed, j + 1));
        ens.sub_training_accuracy.push_back(detail::training_accuracy(m, Xsub, y, dim));
        ens.sub_models.push_back(std::move(m));
    }

    ens.imputer_means = fit_imputer(d);
    return ens;
}

inline constexpr int kEnsembleFormatVersion = 1;

inline nlohmann::json ensemble_to_json(const TrainedEnsemble& e) {
    return {{"format_version", kEnsembleFormatVersion},
            {"classifier_spec", e.classifier_spec},
            {"plan", e.plan},
            {"sensor_names", e.sensor_names},
            {"class_names", e.class_names},
            {"base_model", e.base_model},
            {"sub_models", e.sub_models},
            {"base_training_accuracy", e.base_training_accuracy},
            {"sub_training_accuracy", e.sub_training_accuracy},
            {"imputer_means", e.imputer_means},
            {"input_normalized", e.input_normalized},
            {"norm_min", e.norm_min},
            {"norm_max", e.norm_max}};
}

inline TrainedEnsemble ensemble_from_json(const nlohmann::json& j) {
    const int v = j.at("format_version").get<int>();
    if (v != kEnsembleFormatVersion)
        throw std::runtime_error("unsupported ensemble format version " + std::to_string(v));
    TrainedEnsemble e;
    j.at("classifier_spec").get_to(e.classifier_spec);
    j.at("plan").get_to(e.plan);
    j.at("sensor_names").get_to(e.sensor_names);
    j.at("class_names").get_to(e.class_names);
    j.at("base_model").get_to(e.base_model);
    j.at("sub_models").get_to(e.sub_models);
    j.at("base_training_accuracy").get_to(e.base_training_accuracy);
    j.at("sub_training_accuracy").get_to(e.sub_training_accuracy);
    j.at("imputer_means").get_to(e.imputer_means);
    j.at("input_normalized").get_to(e.input_normalized);
    j.at("norm_min").get_to(e.norm_min);
    j.at("norm_max").get_to(e.norm_max);
    e.finalize();
    return e;
}

inline void save_ensemble(const TrainedEnsemble& e, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_ensemble: cannot open " + path);
    out << ensemble_to_json(e).dump(2) << '\n';
}

inline TrainedEnsemble load_ensemble(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_ensemble: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return ensemble_from_json(j);
}

}  // namespace enamle
