#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "enamle/correlation.hpp"
#include "enamle/dataset.hpp"
#include "enamle/failure_sim.hpp"
#include "enamle/inference.hpp"
#include "enamle/learners.hpp"
#include "enamle/metering.hpp"
#include "enamle/submodel_plan.hpp"

namespace enamle {

/// Invalid experiment configuration; the CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SynthSpec {
    std::vector<int> groups;
    int rows = 1000;
    int classes = 2;
    double noise = 0.1;
    std::uint64_t seed = 0;
};

inline void to_json(nlohmann::json& j, const SynthSpec& s) {
    j = {{"groups", s.groups}, {"rows", s.rows}, {"classes", s.classes},
         {"noise", s.noise},   {"seed", s.seed}};
}
inline void from_json(const nlohmann::json& j, SynthSpec& s) {
    j.at("groups").get_to(s.groups);
    if (j.contains("rows")) j.at("rows").get_to(s.rows);
    if (j.contains("classes")) j.at("classes").get_to(s.classes);
    if (j.contains("noise")) j.at("noise").get_to(s.noise);
    if (j.contains("seed")) j.at("seed").get_to(s.seed);
}

struct DataSource {
    std::string path;          // CSV file, used when synth is absent
    std::string label_column = "label";
    std::optional<SynthSpec> synth;
};

inline void to_json(nlohmann::json& j, const DataSource& d) {
    j = nlohmann::json::object();
    if (d.synth)
        j["synth"] = *d.synth;
    else
        j["path"] = d.path;
    j["label"] = d.label_column;
}
inline void from_json(const nlohmann::json& j, DataSource& d) {
    if (j.contains("synth"))
        d.synth = j.at("synth").get<SynthSpec>();
    else if (j.contains("path"))
        j.at("path").get_to(d.path);
    else
        throw ConfigError("dataset: need either 'path' or 'synth'");
    if (j.contains("label")) j.at("label").get_to(d.label_column);
}

/// Ensemble size given either absolutely or relative to the plan's MinM
/// ("minm", "minm+4").
struct MSize {
    bool relative = false;
    int value = 0;  // absolute size, or offset from MinM when relative

    int resolve(int min_m) const { return relative ? min_m + value : value; }

    static MSize parse(const nlohmann::json& j) {
        MSize m;
        if (j.is_number_integer() || j.is_number_unsigned()) {
            m.value = j.get<int>();
            return m;
        }
        if (j.is_string()) {
            std::string s = j.get<std::string>();
            if (s.rfind("minm", 0) == 0) {
                m.relative = true;
                m.value = s.size() > 4 ? std::stoi(s.substr(4)) : 0;  // "+K" parses signed
                return m;
            }
            m.value = std::stoi(s);
            return m;
        }
        throw ConfigError("ensemble size must be an integer or a 'minm+K' string");
    }

    nlohmann::json to_config_json() const {
        if (!relative) return value;
        if (value == 0) return "minm";
        return "minm" + std::string(value > 0 ? "+" : "") + std::to_string(value);
    }
};

struct ArmSpec {
    enum class Kind { base, secoe, enamle };
    Kind kind = Kind::base;
    MSize m;                    // secoe
    MSize small_m, large_m;     // enamle
    TbmsThreshold t = TbmsThreshold::of_fraction(0.5);
    RangeBounds bounds;
    int min_vote = 3;

    std::string label(int min_m) const {
        switch (kind) {
            case Kind::base: return "base";
            case Kind::secoe: return "secoe_m" + std::to_string(m.resolve(min_m));
            case Kind::enamle:
                return "enamle_s" + std::to_string(small_m.resolve(min_m)) + "_l" +
                       std::to_string(large_m.resolve(min_m));
        }
        throw std::logic_error("unknown arm kind");
    }
};

inline void to_json(nlohmann::json& j, const ArmSpec& a) {
    switch (a.kind) {
        case ArmSpec::Kind::base: j = {{"kind", "base"}}; break;
        case ArmSpec::Kind::secoe: j = {{"kind", "secoe"}, {"m", a.m.to_config_json()}}; break;
        case ArmSpec::Kind::enamle:
            j = {{"kind", "enamle"},
                 {"small_m", a.small_m.to_config_json()},
                 {"large_m", a.large_m.to_config_json()},
                 {"t", a.t},
                 {"bounds", a.bounds},
                 {"min_vote", a.min_vote}};
            break;
    }
}
inline void from_json(const nlohmann::json& j, ArmSpec& a) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "base") {
        a.kind = ArmSpec::Kind::base;
    } else if (kind == "secoe") {
        a.kind = ArmSpec::Kind::secoe;
        a.m = MSize::parse(j.at("m"));
    } else if (kind == "enamle") {
        a.kind = ArmSpec::Kind::enamle;
        a.small_m = MSize::parse(j.at("small_m"));
        a.large_m = MSize::parse(j.at("large_m"));
        if (j.contains("t")) j.at("t").get_to(a.t);
        if (j.contains("bounds")) j.at("bounds").get_to(a.bounds);
        if (j.contains("min_vote")) j.at("min_vote").get_to(a.min_vote);
    } else {
        throw ConfigError("unknown arm kind: " + kind);
    }
}

struct ExperimentConfig {
    DataSource source;
    double train_fraction = 0.85;
    std::uint64_t split_seed = 1;
    double correlation_threshold = 0.7;
    ClassifierSpec classifier;
    std::vector<ArmSpec> arms;
    FailureSchedule schedule;
    EnergyModel energy;
    std::string out_csv = "results.csv";
    std::string out_summary = "summary.json";

    void validate() const {
        if (arms.empty()) throw ConfigError("config: at least one arm required");
        if (!(train_fraction > 0.0 && train_fraction < 1.0))
            throw ConfigError("config: train_fraction must be in (0, 1)");
        if (!(correlation_threshold > 0.0 && correlation_threshold < 1.0))
            throw ConfigError("config: correlation_threshold must be in (0, 1)");
        try {
            schedule.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    j = {{"dataset", c.source},
         {"train_fraction", c.train_fraction},
         {"split_seed", c.split_seed},
         {"correlation_threshold", c.correlation_threshold},
         {"classifier", c.classifier},
         {"arms", c.arms},
         {"schedule",
          {{"rates", c.schedule.rates},
           {"runs_per_rate", c.schedule.runs_per_rate},
           {"master_seed", c.schedule.master_seed},
           {"per_row_failures", c.schedule.per_row_failures}}},
         {"energy", c.energy},
         {"output", {{"csv", c.out_csv}, {"summary", c.out_summary}}}};
}

/// Rates above 1 are read as percentages (the usual 5..60 grid).
inline double parse_rate(double r) { return r > 1.0 ? r / 100.0 : r; }

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    try {
        j.at("dataset").get_to(c.source);
        if (j.contains("train_fraction")) j.at("train_fraction").get_to(c.train_fraction);
        if (j.contains("split_seed")) j.at("split_seed").get_to(c.split_seed);
        if (j.contains("correlation_threshold"))
            j.at("correlation_threshold").get_to(c.correlation_threshold);
        j.at("classifier").get_to(c.classifier);
        j.at("arms").get_to(c.arms);
        const auto& sj = j.at("schedule");
        for (double r : sj.at("rates").get<std::vector<double>>())
            c.schedule.rates.push_back(parse_rate(r));
        if (sj.contains("runs_per_rate")) sj.at("runs_per_rate").get_to(c.schedule.runs_per_rate);
        if (sj.contains("master_seed")) sj.at("master_seed").get_to(c.schedule.master_seed);
        if (sj.contains("per_row_failures"))
            sj.at("per_row_failures").get_to(c.schedule.per_row_failures);
        if (j.contains("energy")) j.at("energy").get_to(c.energy);
        if (j.contains("output")) {
            const auto& oj = j.at("output");
            if (oj.contains("csv")) oj.at("csv").get_to(c.out_csv);
            if (oj.contains("summary")) oj.at("summary").get_to(c.out_summary);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
}

/// One results.csv row: a (arm, rate) cell or an arm's all-rates average
/// (rate column "avg"). Energy and per-op columns are per-inference means.
struct ReportRow {
    std::string arm;
    std::string rate;  // formatted rate or "avg"
    int runs = 0;
    std::uint64_t n_inferences = 0;
    double accuracy = 0.0;
    double energy = 0.0;
    double throughput = 0.0;
    OpEnergy per_op;
};

struct BenchResult {
    std::vector<ReportRow> rows;
    nlohmann::json summary;
    // per arm: failure-set hash per (rate, run), for fairness auditing
    std::vector<std::vector<std::uint64_t>> failure_hashes;
    std::vector<std::string> arm_labels;
    int min_m = 0;
};

namespace detail {

inline std::uint64_t hash_failed_set(const std::vector<int>& failed) {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (int f : failed) {
        std::uint64_t s = h ^ static_cast<std::uint64_t>(f);
        h = rng::splitmix64(s);
    }
    return h;
}

inline std::string format_rate(double r) { return detail::format_double(r); }

}  // namespace detail

inline BenchResult run_bench(const ExperimentConfig& cfg) {
    cfg.validate();

    Dataset d = cfg.source.synth
                    ? synthesize(cfg.source.synth->groups, cfg.source.synth->rows,
                                 cfg.source.synth->classes, cfg.source.synth->noise,
                                 cfg.source.synth->seed)
                    : load_csv(cfg.source.path, cfg.source.label_column);
    d = split(d, cfg.train_fraction, cfg.split_seed);
    d = normalize(d);

    const GroupSet groups = build_groups(d, cfg.correlation_threshold);
    const int min_m = compute_min_m(groups);

    int max_m = min_m;
    for (const auto& arm : cfg.arms) {
        switch (arm.kind) {
            case ArmSpec::Kind::base: break;
            case ArmSpec::Kind::secoe: max_m = std::max(max_m, arm.m.resolve(min_m)); break;
            case ArmSpec::Kind::enamle:
                max_m = std::max(max_m, arm.large_m.resolve(min_m));
                break;
        }
    }
    for (const auto& arm : cfg.arms) {
        if (arm.kind == ArmSpec::Kind::secoe && arm.m.resolve(min_m) < min_m)
            throw ConfigError("arm " + arm.label(min_m) + ": m below MinM=" + std::to_string(min_m));
        if (arm.kind == ArmSpec::Kind::enamle && arm.small_m.resolve(min_m) < min_m)
            throw ConfigError("arm " + arm.label(min_m) +
                              ": small_m below MinM=" + std::to_string(min_m));
    }

    const EnsemblePlan plan = build_feature_sets(groups, max_m);
    const TrainedEnsemble ens = train(d, plan, cfg.classifier);

    BenchResult result;
    result.min_m = min_m;

    const std::size_t n_rates = cfg.schedule.rates.size();
    struct Cell {
        std::vector<std::uint64_t> correct_per_run;
        std::vector<std::uint64_t> n_per_run;
        OpEnergy energy;
        std::uint64_t n = 0;
        std::uint64_t wall_ns = 0;
    };

    for (const auto& arm : cfg.arms) {
        const std::string label = arm.label(min_m);
        result.arm_labels.push_back(label);

        std::function<InferenceOutcome(const InferenceRequest&)> infer_fn;
        switch (arm.kind) {
            case ArmSpec::Kind::base:
                infer_fn = [&](const InferenceRequest& req) { return base_infer(req, ens); };
                break;
            case ArmSpec::Kind::secoe: {
                const int m_active = arm.m.resolve(min_m);
                infer_fn = [&, m_active](const InferenceRequest& req) {
                    return secoe_infer(req, ens, m_active, arm.min_vote);
                };
                break;
            }
            case ArmSpec::Kind::enamle: {
                EnamleConfig ecfg;
                ecfg.small_m = arm.small_m.resolve(min_m);
                ecfg.large_m = arm.large_m.resolve(min_m);
                ecfg.t = arm.t;
                ecfg.bounds = arm.bounds;
                ecfg.min_vote = arm.min_vote;
                try {
                    ecfg.validate(ens.plan);
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(std::string("arm ") + label + ": " + e.what());
                }
                infer_fn = [&, ecfg](const InferenceRequest& req) {
                    return enamle_infer(req, ens, ecfg);
                };
                break;
            }
        }

        std::vector<Cell> cells(n_rates);
        for (auto& c : cells) {
            c.correct_per_run.assign(static_cast<std::size_t>(cfg.schedule.runs_per_rate), 0);
            c.n_per_run.assign(static_cast<std::size_t>(cfg.schedule.runs_per_rate), 0);
        }
        std::vector<std::uint64_t> hashes;
        std::uint64_t pending_wall_ns = 0;

        auto engine = [&](const InferenceRequest& req) {
            const auto t0 = std::chrono::steady_clock::now();
            InferenceOutcome out = infer_fn(req);
            pending_wall_ns = static_cast<std::uint64_t>(
                std::chrono::duration_cast<std::chrono::nanoseconds>(
                    std::chrono::steady_clock::now() - t0)
                    .count());
            return out;
        };
        int last_run = -1;
        std::size_t last_rate = static_cast<std::size_t>(-1);
        auto sink = [&](std::size_t rate_idx, int run, std::size_t row,
                        const InferenceRequest& req, const InferenceOutcome& out) {
            Cell& c = cells[rate_idx];
            if (run != last_run || rate_idx != last_rate) {
                hashes.push_back(detail::hash_failed_set(req.failed));
                last_run = run;
                last_rate = rate_idx;
            }
            if (out.label == d.labels[row]) c.correct_per_run[static_cast<std::size_t>(run)]++;
            c.n_per_run[static_cast<std::size_t>(run)]++;
            c.n++;
            c.energy += account(out, cfg.energy);
            c.wall_ns += pending_wall_ns;
        };
        run_sweep(cfg.schedule, d, engine, sink);
        result.failure_hashes.push_back(std::move(hashes));

        // Per-rate rows: accuracy is the mean of per-run accuracies; energy
        // and per-op values are per-inference means.
        double acc_sum = 0.0, energy_sum = 0.0, tp_sum = 0.0;
        OpEnergy per_op_sum;
        std::uint64_t n_total = 0;
        for (std::size_t ri = 0; ri < n_rates; ++ri) {
            const Cell& c = cells[ri];
            ReportRow row;
            row.arm = label;
            row.rate = detail::format_rate(cfg.schedule.rates[ri]);
            row.runs = cfg.schedule.runs_per_rate;
            row.n_inferences = c.n;
            double acc = 0.0;
            for (std::size_t r = 0; r < c.correct_per_run.size(); ++r)
                acc += accuracy(c.correct_per_run[r], c.n_per_run[r]);
            row.accuracy = acc / static_cast<double>(cfg.schedule.runs_per_rate);
            const double inv_n = 1.0 / static_cast<double>(c.n);
            row.per_op.find = c.energy.find * inv_n;
            row.per_op.detect = c.energy.detect * inv_n;
            row.per_op.impute = c.energy.impute * inv_n;
            row.per_op.infer = c.energy.infer * inv_n;
            row.per_op.vote = c.energy.vote * inv_n;
            row.energy = row.per_op.total();
            if (cfg.energy.mode == EnergyMode::measured)
                row.throughput = throughput(c.n, static_cast<double>(c.wall_ns) * 1e-6);
            else
                row.throughput = c.energy.total() > 0.0
                                     ? static_cast<double>(c.n) / c.energy.total()
                                     : 0.0;
            acc_sum += row.accuracy;
            energy_sum += row.energy;
            tp_sum += row.throughput;
            per_op_sum += row.per_op;
            n_total += c.n;
            result.rows.push_back(std::move(row));
        }
        ReportRow avg;
        avg.arm = label;
        avg.rate = "avg";
        avg.runs = cfg.schedule.runs_per_rate;
        avg.n_inferences = n_total;
        const double inv_r = 1.0 / static_cast<double>(n_rates);
        avg.accuracy = acc_sum * inv_r;
        avg.energy = energy_sum * inv_r;
        avg.throughput = tp_sum * inv_r;
        avg.per_op.find = per_op_sum.find * inv_r;
        avg.per_op.detect = per_op_sum.detect * inv_r;
        avg.per_op.impute = per_op_sum.impute * inv_r;
        avg.per_op.infer = per_op_sum.infer * inv_r;
        avg.per_op.vote = per_op_sum.vote * inv_r;
        result.rows.push_back(std::move(avg));
    }

    result.summary = {
        {"config", cfg},
        {"min_m", min_m},
        {"max_m", max_m},
        {"arms", result.arm_labels},
        {"groups", groups},
        {"base_training_accuracy", ens.base_training_accuracy},
        {"sub_training_accuracy", ens.sub_training_accuracy},
        {"energy_unit", cfg.energy.mode == EnergyMode::simulated ? "cost_units" : "mJ"},
        {"environment", {{"compiler", __VERSION__}, {"cxx", __cplusplus}}},
    };
    return result;
}

inline const char* kCsvHeader =
    "arm,rate,runs,n_inferences,accuracy,energy,throughput,find,detect,impute,infer,vote";

inline void write_report_csv(const std::vector<ReportRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open report for writing: " + path);
    out << kCsvHeader << '\n';
    for (const auto& r : rows) {
        out << r.arm << ',' << r.rate << ',' << r.runs << ',' << r.n_inferences << ','
            << detail::format_double(r.accuracy) << ',' << detail::format_double(r.energy) << ','
            << detail::format_double(r.throughput) << ',' << detail::format_double(r.per_op.find)
            << ',' << detail::format_double(r.per_op.detect) << ','
            << detail::format_double(r.per_op.impute) << ','
            << detail::format_double(r.per_op.infer) << ','
            << detail::format_double(r.per_op.vote) << '\n';
    }
}

inline std::vector<ReportRow> read_report_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open report: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty report: " + path);
    if (detail::strip(line) != kCsvHeader)
        throw std::runtime_error("unrecognized report header in " + path);
    std::vector<ReportRow> rows;
    while (std::getline(in, line)) {
        if (detail::strip(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != 12) throw std::runtime_error("bad report row: " + line);
        ReportRow r;
        r.arm = cells[0];
        r.rate = cells[1];
        r.runs = std::stoi(cells[2]);
        r.n_inferences = std::stoull(cells[3]);
        double vals[8];
        for (int i = 0; i < 8; ++i)
            if (!detail::parse_double(cells[static_cast<std::size_t>(4 + i)], vals[i]))
                throw std::runtime_error("bad numeric cell in report row: " + line);
        r.accuracy = vals[0];
        r.energy = vals[1];
        r.throughput = vals[2];
        r.per_op.find = vals[3];
        r.per_op.detect = vals[4];
        r.per_op.impute = vals[5];
        r.per_op.infer = vals[6];
        r.per_op.vote = vals[7];
        rows.push_back(std::move(r));
    }
    return rows;
}

/// Relative change (b - a) / a per metric, per matching (arm, rate) row.
struct DiffRow {
    std::string arm;
    std::string rate;
    double accuracy = 0.0;
    double energy = 0.0;
    double throughput = 0.0;
    OpEnergy per_op;
};

inline std::vector<DiffRow> report_diff(const std::vector<ReportRow>& a,
                                        const std::vector<ReportRow>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("report_diff: mismatched grids");
    std::vector<DiffRow> out;
    auto rel = [](double va, double vb) {
        if (va == 0.0) return vb == 0.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
        return (vb - va) / va;
    };
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].arm != b[i].arm || a[i].rate != b[i].rate)
            throw std::invalid_argument("report_diff: mismatched grids at row " + std::to_string(i));
        DiffRow dr;
        dr.arm = a[i].arm;
        dr.rate = a[i].rate;
        dr.accuracy = rel(a[i].accuracy, b[i].accuracy);
        dr.energy = rel(a[i].energy, b[i].energy);
        dr.throughput = rel(a[i].throughput, b[i].throughput);
        dr.per_op.find = rel(a[i].per_op.find, b[i].per_op.find);
        dr.per_op.detect = rel(a[i].per_op.detect, b[i].per_op.detect);
        dr.per_op.impute = rel(a[i].per_op.impute, b[i].per_op.impute);
        dr.per_op.infer = rel(a[i].per_op.infer, b[i].per_op.infer);
        dr.per_op.vote = rel(a[i].per_op.vote, b[i].per_op.vote);
        out.push_back(std::move(dr));
    }
    return out;
}

inline void write_diff_csv(const std::vector<DiffRow>& rows, std::ostream& out) {
    out << "arm,rate,accuracy,energy,throughput,find,detect,impute,infer,vote\n";
    for (const auto& r : rows) {
        out << r.arm << ',' << r.rate << ',' << detail::format_double(r.accuracy) << ','
            << detail::format_double(r.energy) << ',' << detail::format_double(r.throughput) << ','
            << detail::format_double(r.per_op.find) << ',' << detail::format_double(r.per_op.detect)
            << ',' << detail::format_double(r.per_op.impute) << ','
            << detail::format_double(r.per_op.infer) << ','
            << detail::format_double(r.per_op.vote) << '\n';
    }
}

}  // namespace enamle
