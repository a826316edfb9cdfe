// Command-line front end: dataset synthesis, ensemble training, single-shot
// inference, failure-sweep benchmarking, and report diffing.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "enamle/enamle.hpp"

namespace {

using nlohmann::json;

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

std::vector<double> parse_rate_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(enamle::parse_rate(std::stod(tok)));
    return out;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw enamle::ConfigError("cannot open " + path);
    json j;
    in >> j;
    return j;
}

int cmd_synth(const std::string& groups, int rows, int classes, double noise,
              std::uint64_t seed, const std::string& out, const std::string& label) {
    const auto d = enamle::synthesize(parse_int_list(groups), rows, classes, noise, seed);
    enamle::save_csv(d, out, label);
    std::cout << "wrote " << out << ": " << d.n_rows() << " rows, " << d.n_sensors()
              << " sensors, " << d.class_names.size() << " classes\n";
    return 0;
}

struct TrainArgs {
    std::string data, label = "label", kind = "mlp", m = "minm", out = "model.json";
    double train_fraction = 0.85, threshold = 0.7;
    std::uint64_t split_seed = 1, seed = 42;
    enamle::MlpParams mlp;
    enamle::ForestParams forest;
    enamle::SvmParams svm;
};

int cmd_train(const TrainArgs& a) {
    auto d = enamle::load_csv(a.data, a.label);
    std::vector<std::string> warnings;
    d = enamle::split(d, a.train_fraction, a.split_seed, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    d = enamle::normalize(d);

    const auto groups = enamle::build_groups(d, a.threshold);
    if (groups.all_singletons())
        std::cerr << "warning: no correlated groups found; every sub-model degenerates to the "
                     "full sensor set and failed sensors always need imputation\n";
    const int min_m = enamle::compute_min_m(groups);
    const int m = enamle::MSize::parse(json(a.m)).resolve(min_m);
    const auto plan = enamle::build_feature_sets(groups, m);

    enamle::ClassifierSpec spec;
    spec.kind = enamle::classifier_kind_from_string(a.kind);
    spec.seed = a.seed;
    spec.mlp = a.mlp;
    spec.forest = a.forest;
    spec.svm = a.svm;

    const auto ens = enamle::train(d, plan, spec);
    enamle::save_ensemble(ens, a.out);

    json info{{"model", a.out},
              {"min_m", min_m},
              {"m", m},
              {"groups", groups},
              {"base_training_accuracy", ens.base_training_accuracy},
              {"sub_training_accuracy", ens.sub_training_accuracy}};
    std::cout << info.dump(2) << '\n';
    return 0;
}

struct InferArgs {
    std::string model, request, policy = "enamle";
    std::string m = "minm", small_m = "minm", large_m = "minm";
    std::string tbms = "50%";
    double low_upper = 0.15, moderate_upper = 0.45;
    int min_vote = 3;
    bool no_scale = false;
};

enamle::InferenceRequest request_from_json(const json& j, const enamle::TrainedEnsemble& ens,
                                           bool apply_scale) {
    enamle::InferenceRequest req;
    req.values.assign(ens.n_sensors(), 0.0);
    for (const auto& name : j.at("failed").get<std::vector<std::string>>())
        req.failed.push_back(ens.sensor_index(name));
    std::sort(req.failed.begin(), req.failed.end());
    const auto& vals = j.at("values");
    std::vector<bool> seen(ens.n_sensors(), false);
    if (vals.is_object()) {
        for (const auto& [name, v] : vals.items()) {
            const int idx = ens.sensor_index(name);
            req.values[static_cast<std::size_t>(idx)] = v.get<double>();
            seen[static_cast<std::size_t>(idx)] = true;
        }
    } else {
        const auto arr = vals.get<std::vector<double>>();
        if (arr.size() != ens.n_sensors())
            throw enamle::ConfigError("request: values array width mismatch");
        req.values = arr;
        seen.assign(ens.n_sensors(), true);
    }
    for (std::size_t i = 0; i < ens.n_sensors(); ++i) {
        const bool failed = std::binary_search(req.failed.begin(), req.failed.end(),
                                               static_cast<int>(i));
        if (!failed && !seen[i])
            throw enamle::ConfigError("request: missing value for non-failed sensor " +
                                      ens.sensor_names[i]);
    }
    if (apply_scale && ens.input_normalized) {
        for (std::size_t i = 0; i < ens.n_sensors(); ++i) {
            const double range = ens.norm_max[i] - ens.norm_min[i];
            double v = range > 0.0 ? (req.values[i] - ens.norm_min[i]) / range : 0.0;
            req.values[i] = std::clamp(v, 0.0, 1.0);
        }
    }
    return req;
}

int cmd_infer(const InferArgs& a) {
    const auto ens = enamle::load_ensemble(a.model);
    const auto req = request_from_json(load_json_file(a.request), ens, !a.no_scale);

    enamle::InferenceOutcome out;
    if (a.policy == "base") {
        out = enamle::base_infer(req, ens);
    } else if (a.policy == "secoe") {
        const int m = enamle::MSize::parse(json(a.m)).resolve(ens.plan.min_m);
        out = enamle::secoe_infer(req, ens, m, a.min_vote);
    } else if (a.policy == "enamle") {
        enamle::EnamleConfig cfg;
        cfg.small_m = enamle::MSize::parse(json(a.small_m)).resolve(ens.plan.min_m);
        cfg.large_m = std::max(
            cfg.small_m, enamle::MSize::parse(json(a.large_m)).resolve(ens.plan.min_m));
        cfg.t = enamle::TbmsThreshold::parse(a.tbms);
        cfg.bounds = {a.low_upper, a.moderate_upper};
        cfg.min_vote = a.min_vote;
        out = enamle::enamle_infer(req, ens, cfg);
    } else {
        throw enamle::ConfigError("unknown policy: " + a.policy);
    }
    std::cout << enamle::outcome_to_json(out, ens).dump(2) << '\n';
    return 0;
}

int cmd_bench(const std::string& config_path, const std::string& rates, int runs, long seed,
              const std::string& out_dir) {
    auto cfg = load_json_file(config_path).get<enamle::ExperimentConfig>();
    if (!rates.empty()) cfg.schedule.rates = parse_rate_list(rates);
    if (runs > 0) cfg.schedule.runs_per_rate = runs;
    if (seed >= 0) cfg.schedule.master_seed = static_cast<std::uint64_t>(seed);
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        cfg.out_csv = (std::filesystem::path(out_dir) / "results.csv").string();
        cfg.out_summary = (std::filesystem::path(out_dir) / "summary.json").string();
    }
    const auto result = enamle::run_bench(cfg);
    enamle::write_report_csv(result.rows, cfg.out_csv);
    std::ofstream summary(cfg.out_summary);
    if (!summary) throw std::runtime_error("cannot open " + cfg.out_summary);
    summary << result.summary.dump(2) << '\n';
    std::cout << "wrote " << cfg.out_csv << " (" << result.rows.size() << " rows) and "
              << cfg.out_summary << '\n';
    return 0;
}

int cmd_diff(const std::string& a_path, const std::string& b_path, const std::string& out_path) {
    const auto a = enamle::read_report_csv(a_path);
    const auto b = enamle::read_report_csv(b_path);
    const auto deltas = enamle::report_diff(a, b);
    if (out_path.empty()) {
        enamle::write_diff_csv(deltas, std::cout);
    } else {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot open " + out_path);
        enamle::write_diff_csv(deltas, out);
        std::cout << "wrote " << out_path << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Energy-aware ensemble inference toolkit for sensor data with failures"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic correlated-sensor CSV dataset");
    std::string sy_groups = "4,4,4";
    int sy_rows = 2000, sy_classes = 4;
    double sy_noise = 0.1;
    std::uint64_t sy_seed = 7;
    std::string sy_out = "synth.csv", sy_label = "label";
    synth->add_option("--groups", sy_groups, "Comma-separated correlated group sizes");
    synth->add_option("--rows", sy_rows, "Number of rows");
    synth->add_option("--classes", sy_classes, "Number of classes");
    synth->add_option("--noise", sy_noise, "Per-sensor noise standard deviation");
    synth->add_option("--seed", sy_seed, "Generator seed");
    synth->add_option("--out", sy_out, "Output CSV path")->required();
    synth->add_option("--label", sy_label, "Label column name");

    // train
    auto* train = app.add_subcommand("train", "Train a base model and rotation-plan sub-models");
    TrainArgs ta;
    train->add_option("--data", ta.data, "Input CSV")->required();
    train->add_option("--label", ta.label, "Label column name");
    train->add_option("--train-fraction", ta.train_fraction, "Training fraction");
    train->add_option("--split-seed", ta.split_seed, "Split seed");
    train->add_option("--threshold", ta.threshold, "Correlation grouping threshold");
    train->add_option("--kind", ta.kind, "Classifier: mlp | random_forest | linear_svm");
    train->add_option("--seed", ta.seed, "Training seed");
    train->add_option("--m", ta.m, "Ensemble size (integer or minm+K)");
    train->add_option("--out", ta.out, "Output model path");
    train->add_option("--hidden-width", ta.mlp.hidden_width, "MLP hidden width");
    train->add_option("--epochs", ta.mlp.epochs, "MLP epochs");
    train->add_option("--batch-size", ta.mlp.batch_size, "MLP batch size");
    train->add_option("--learning-rate", ta.mlp.learning_rate, "MLP learning rate");
    train->add_option("--trees", ta.forest.n_trees, "Forest size");
    train->add_option("--max-depth", ta.forest.max_depth, "Forest tree depth limit");
    train->add_option("--svm-epochs", ta.svm.epochs, "SVM epochs");
    train->add_option("--svm-learning-rate", ta.svm.learning_rate, "SVM learning rate");
    train->add_option("--regularization", ta.svm.regularization, "SVM regularization");

    // infer
    auto* infer = app.add_subcommand("infer", "Run one inference from a JSON request");
    InferArgs ia;
    infer->add_option("--model", ia.model, "Trained ensemble JSON")->required();
    infer->add_option("--request", ia.request, "Request JSON {values, failed}")->required();
    infer->add_option("--policy", ia.policy, "base | secoe | enamle");
    infer->add_option("--m", ia.m, "SECOE active ensemble size");
    infer->add_option("--small-m", ia.small_m, "ENAMLE small ensemble size");
    infer->add_option("--large-m", ia.large_m, "ENAMLE large ensemble size");
    infer->add_option("--tbms", ia.tbms, "TBMS threshold: percentage (50%), fraction, or count");
    infer->add_option("--low-upper", ia.low_upper, "Low range upper bound");
    infer->add_option("--moderate-upper", ia.moderate_upper, "Moderate range upper bound");
    infer->add_option("--min-vote", ia.min_vote, "Minimum suitable models for a vote");
    infer->add_flag("--no-scale", ia.no_scale, "Values are already in model space");

    // bench
    auto* bench = app.add_subcommand("bench", "Run a failure-sweep experiment from a JSON config");
    std::string b_config, b_rates, b_out_dir;
    int b_runs = 0;
    long b_seed = -1;
    bench->add_option("--config", b_config, "Experiment config JSON")->required();
    bench->add_option("--rates", b_rates, "Override rates, e.g. 5,10,20,30,40,50,60");
    bench->add_option("--runs", b_runs, "Override runs per rate");
    bench->add_option("--seed", b_seed, "Override master seed");
    bench->add_option("--out-dir", b_out_dir, "Directory for results.csv and summary.json");

    // diff
    auto* diff = app.add_subcommand("diff", "Relative metric deltas between two results.csv files");
    std::string d_a, d_b, d_out;
    diff->add_option("--a", d_a, "Baseline report")->required();
    diff->add_option("--b", d_b, "Comparison report")->required();
    diff->add_option("--out", d_out, "Output CSV (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed())
            return cmd_synth(sy_groups, sy_rows, sy_classes, sy_noise, sy_seed, sy_out, sy_label);
        if (train->parsed()) return cmd_train(ta);
        if (infer->parsed()) return cmd_infer(ia);
        if (bench->parsed()) return cmd_bench(b_config, b_rates, b_runs, b_seed, b_out_dir);
        if (diff->parsed()) return cmd_diff(d_a, d_b, d_out);
    } catch (const enamle::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
