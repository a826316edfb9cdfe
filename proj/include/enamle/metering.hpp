#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "enamle/inference.hpp"

namespace enamle {

enum class EnergyMode { simulated, measured };

inline std::string to_string(EnergyMode m) {
    return m == EnergyMode::simulated ? "simulated" : "measured";
}

/// Unit costs per stage driver in simulated mode. The stage drivers are:
/// find -> sub-model specs scanned, detect -> candidates ranked,
/// impute -> values imputed, infer -> (model, feature) pairs evaluated,
/// vote -> predictions aggregated.
struct CostCoefficients {
    double find = 1.0;
    double detect = 2.0;
    double impute = 200.0;
    double infer = 10.0;
    double vote = 150.0;
};

/// Per-stage current draw in amperes for measured mode (user-calibrated;
/// only the voltage has a standard default).
struct CurrentProfile {
    double find = 0.5;
    double detect = 0.5;
    double impute = 0.5;
    double infer = 0.5;
    double vote = 0.5;
};

struct EnergyModel {
    EnergyMode mode = EnergyMode::simulated;
    double voltage = 5.039;
    CostCoefficients cost;
    CurrentProfile amps;
};

inline void to_json(nlohmann::json& j, const CostCoefficients& c) {
    j = {{"find", c.find}, {"detect", c.detect}, {"impute", c.impute},
         {"infer", c.infer}, {"vote", c.vote}};
}
inline void from_json(const nlohmann::json& j, CostCoefficients& c) {
    if (j.contains("find")) j.at("find").get_to(c.find);
    if (j.contains("detect")) j.at("detect").get_to(c.detect);
    if (j.contains("impute")) j.at("impute").get_to(c.impute);
    if (j.contains("infer")) j.at("infer").get_to(c.infer);
    if (j.contains("vote")) j.at("vote").get_to(c.vote);
}
inline void to_json(nlohmann::json& j, const CurrentProfile& c) {
    j = {{"find", c.find}, {"detect", c.detect}, {"impute", c.impute},
         {"infer", c.infer}, {"vote", c.vote}};
}
inline void from_json(const nlohmann::json& j, CurrentProfile& c) {
    if (j.contains("find")) j.at("find").get_to(c.find);
    if (j.contains("detect")) j.at("detect").get_to(c.detect);
    if (j.contains("impute")) j.at("impute").get_to(c.impute);
    if (j.contains("infer")) j.at("infer").get_to(c.infer);
    if (j.contains("vote")) j.at("vote").get_to(c.vote);
}
inline void to_json(nlohmann::json& j, const EnergyModel& m) {
    j = {{"mode", to_string(m.mode)},
         {"voltage", m.voltage},
         {"cost_coefficients", m.cost},
         {"current_profile", m.amps}};
}
inline void from_json(const nlohmann::json& j, EnergyModel& m) {
    if (j.contains("mode")) {
        const auto s = j.at("mode").get<std::string>();
        if (s == "simulated")
            m.mode = EnergyMode::simulated;
        else if (s == "measured")
            m.mode = EnergyMode::measured;
        else
            throw std::invalid_argument("energy mode must be 'simulated' or 'measured'");
    }
    if (j.contains("voltage")) j.at("voltage").get_to(m.voltage);
    if (j.contains("cost_coefficients")) j.at("cost_coefficients").get_to(m.cost);
    if (j.contains("current_profile")) j.at("current_profile").get_to(m.amps);
}

inline double accuracy(std::uint64_t correct, std::uint64_t total) {
    if (total == 0) throw std::invalid_argument("accuracy: zero total");
    if (correct > total) throw std::invalid_argument("accuracy: correct exceeds total");
    return static_cast<double>(correct) / static_cast<double>(total);
}

inline double throughput(std::uint64_t n, double elapsed_ms) {
    if (n == 0) return 0.0;
    if (!(elapsed_ms > 0.0)) throw std::invalid_argument("throughput: elapsed time must be positive");
    return static_cast<double>(n) / elapsed_ms;
}

/// Joules = W x s with W = V x A.
inline double joules(double elapsed_s, double amperes, double voltage) {
    if (elapsed_s < 0.0 || amperes < 0.0 || voltage < 0.0)
        throw std::invalid_argument("joules: negative input");
    return voltage * amperes * elapsed_s;
}

/// Five-way energy attribution for one inference. Simulated mode yields cost
/// units, measured mode millijoules.
struct OpEnergy {
    double find = 0.0, detect = 0.0, impute = 0.0, infer = 0.0, vote = 0.0;

    double total() const { return find + detect + impute + infer + vote; }
    OpEnergy& operator+=(const OpEnergy& o) {
        find += o.find;
        detect += o.detect;
        impute += o.impute;
        infer += o.infer;
        vote += o.vote;
        return *this;
    }
};

inline OpEnergy account(const InferenceOutcome& out, const EnergyModel& model) {
    const OpCosts& c = out.op_costs;
    OpEnergy e;
    if (model.mode == EnergyMode::simulated) {
        e.find = model.cost.find * static_cast<double>(c.find_specs_scanned);
        e.detect = model.cost.detect * static_cast<double>(c.detect_candidates_ranked);
        e.impute = model.cost.impute * static_cast<double>(c.imputed_values);
        e.infer = model.cost.infer * static_cast<double>(c.infer_model_feature_pairs);
        e.vote = model.cost.vote * static_cast<double>(c.vote_predictions);
    } else {
        const double to_mj = 1000.0;
        e.find = joules(static_cast<double>(c.find_ns) * 1e-9, model.amps.find, model.voltage) * to_mj;
        e.detect =
            joules(static_cast<double>(c.detect_ns) * 1e-9, model.amps.detect, model.voltage) * to_mj;
        e.impute =
            joules(static_cast<double>(c.impute_ns) * 1e-9, model.amps.impute, model.voltage) * to_mj;
        e.infer =
            joules(static_cast<double>(c.infer_ns) * 1e-9, model.amps.infer, model.voltage) * to_mj;
        e.vote = joules(static_cast<double>(c.vote_ns) * 1e-9, model.amps.vote, model.voltage) * to_mj;
    }
    return e;
}

/// Aggregate metrics over a block of inferences.
struct MeterReport {
    double accuracy = 0.0;
    double total_energy = 0.0;  // mJ (measured) or cost units (simulated)
    OpEnergy per_op;
    double throughput = 0.0;  // inferences/ms (measured) or inferences per unit cost (simulated)
    std::uint64_t n_inferences = 0;
    double wall_ms = 0.0;
};

inline MeterReport make_report(std::uint64_t correct, std::uint64_t n, const OpEnergy& per_op,
                               EnergyMode mode, double wall_ms) {
    MeterReport r;
    r.accuracy = accuracy(correct, n);
    r.per_op = per_op;
    r.total_energy = per_op.total();
    r.n_inferences = n;
    r.wall_ms = wall_ms;
    if (mode == EnergyMode::measured)
        r.throughput = throughput(n, wall_ms);
    else
        r.throughput = r.total_energy > 0.0 ? static_cast<double>(n) / r.total_energy : 0.0;
    return r;
}

}  // namespace enamle
