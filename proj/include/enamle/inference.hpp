#pragma once

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "enamle/learners.hpp"

namespace enamle {

/// One inference sample: a full-width value vector plus the indices of
/// sensors whose readings are missing. Entries at failed positions are
/// ignored by every engine.
struct InferenceRequest {
    std::vector<double> values;
    std::vector<int> failed;  // sorted, unique sensor indices
};

enum class InferencePath { base, vote_all, tbms, moderate_large, high_small, single_best };

inline std::string to_string(InferencePath p) {
    switch (p) {
        case InferencePath::base: return "base";
        case InferencePath::vote_all: return "vote_all";
        case InferencePath::tbms: return "tbms";
        case InferencePath::moderate_large: return "moderate_large";
        case InferencePath::high_small: return "high_small";
        case InferencePath::single_best: return "single_best";
    }
    throw std::logic_error("unknown InferencePath");
}

/// Cost drivers and wall time for the five inference stages.
struct OpCosts {
    std::uint64_t find_specs_scanned = 0;
    std::uint64_t detect_candidates_ranked = 0;
    std::uint64_t imputed_values = 0;
    std::uint64_t infer_model_feature_pairs = 0;
    std::uint64_t vote_predictions = 0;  // 0 when a single model predicts
    std::uint64_t find_ns = 0, detect_ns = 0, impute_ns = 0, infer_ns = 0, vote_ns = 0;
};

struct InferenceOutcome {
    int label = 0;
    InferencePath path = InferencePath::base;
    std::vector<int> participants;  // sub-model indices; empty on the base path
    int imputed_count = 0;
    OpCosts op_costs;
};

inline void to_json(nlohmann::json& j, const OpCosts& c) {
    j = {{"find", c.find_specs_scanned},
         {"detect", c.detect_candidates_ranked},
         {"impute", c.imputed_values},
         {"infer", c.infer_model_feature_pairs},
         {"vote", c.vote_predictions},
         {"stage_ns",
          {{"find", c.find_ns},
           {"detect", c.detect_ns},
           {"impute", c.impute_ns},
           {"infer", c.infer_ns},
           {"vote", c.vote_ns}}}};
}

struct SuitableModel {
    int index = 0;
    int match = 0;  // |failed ∩ feature set|
};

/// TBMS threshold: either a fraction of the suitable models (a percentage
/// like "50%") or an absolute model count.
struct TbmsThreshold {
    bool is_count = false;
    double fraction = 0.5;
    int count = 0;

    static TbmsThreshold of_fraction(double f) {
        if (!(f > 0.0 && f <= 1.0))
            throw std::invalid_argument("TBMS fraction must be in (0, 1]");
        return {false, f, 0};
    }
    static TbmsThreshold of_count(int c) {
        if (c < 1) throw std::invalid_argument("TBMS count must be positive");
        return {true, 0.0, c};
    }

    /// "50%" -> fraction 0.5, "0.5" -> fraction, "3" -> count.
    static TbmsThreshold parse(const std::string& s) {
        if (s.empty()) throw std::invalid_argument("empty TBMS threshold");
        if (s.back() == '%')
            return of_fraction(std::stod(s.substr(0, s.size() - 1)) / 100.0);
        if (s.find('.') != std::string::npos) return of_fraction(std::stod(s));
        return of_count(std::stoi(s));
    }

    int selected_of(int n_suitable) const {
        if (is_count) return std::min(count, n_suitable);
        return static_cast<int>(std::ceil(fraction * static_cast<double>(n_suitable)));
    }
};

inline void to_json(nlohmann::json& j, const TbmsThreshold& t) {
    if (t.is_count)
        j = t.count;
    else
        j = t.fraction;
}
inline void from_json(const nlohmann::json& j, TbmsThreshold& t) {
    if (j.is_string()) {
        t = TbmsThreshold::parse(j.get<std::string>());
    } else if (j.is_number_integer() || j.is_number_unsigned()) {
        t = TbmsThreshold::of_count(j.get<int>());
    } else {
        t = TbmsThreshold::of_fraction(j.get<double>());
    }
}

/// Missing-data-rate range boundaries: (0, low_upper] is low,
/// (low_upper, moderate_upper] is moderate, above is high.
struct RangeBounds {
    double low_upper = 0.15;
    double moderate_upper = 0.45;
};

inline void to_json(nlohmann::json& j, const RangeBounds& b) {
    j = {{"low_upper", b.low_upper}, {"moderate_upper", b.moderate_upper}};
}
inline void from_json(const nlohmann::json& j, RangeBounds& b) {
    if (j.contains("low_upper")) j.at("low_upper").get_to(b.low_upper);
    if (j.contains("moderate_upper")) j.at("moderate_upper").get_to(b.moderate_upper);
}

struct EnamleConfig {
    int small_m = 0;
    int large_m = 0;
    TbmsThreshold t = TbmsThreshold::of_fraction(0.5);
    RangeBounds bounds;
    int min_vote = 3;

    void validate(const EnsemblePlan& plan) const {
        if (small_m < plan.min_m)
            throw std::invalid_argument("enamle: small_m below MinM=" + std::to_string(plan.min_m));
        if (large_m < small_m) throw std::invalid_argument("enamle: large_m below small_m");
        if (large_m > plan.m) throw std::invalid_argument("enamle: large_m exceeds trained m");
        if (!(bounds.low_upper > 0.0 && bounds.low_upper < bounds.moderate_upper &&
              bounds.moderate_upper < 1.0))
            throw std::invalid_argument("enamle: invalid range bounds");
        if (min_vote < 1) throw std::invalid_argument("enamle: min_vote must be positive");
    }
};

inline double missing_rate(const InferenceRequest& req, int total_sensors) {
    if (total_sensors < 1) throw std::invalid_argument("missing_rate: no sensors");
    return static_cast<double>(req.failed.size()) / static_cast<double>(total_sensors);
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline std::uint64_t elapsed_ns(Clock::time_point from) {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - from).count());
}

inline std::vector<std::uint64_t> failed_mask(const std::vector<int>& failed, std::size_t n_sensors) {
    std::vector<std::uint64_t> mask((n_sensors + 63) / 64, 0);
    for (int f : failed) {
        if (f < 0 || static_cast<std::size_t>(f) >= n_sensors)
            throw std::invalid_argument("failed sensor index out of range");
        mask[static_cast<std::size_t>(f) / 64] |= std::uint64_t{1} << (f % 64);
    }
    return mask;
}

}  // namespace detail

/// Ranks the first `m_active` sub-models by how few failed sensors their
/// feature sets contain and returns the ones achieving the minimum, ordered
/// by descending training accuracy (index as the final tie-break).
inline std::vector<SuitableModel> find_suitable(const std::vector<int>& failed,
                                                const TrainedEnsemble& ens, int m_active) {
    if (m_active < 1 || m_active > static_cast<int>(ens.feature_masks.size()))
        throw std::invalid_argument("find_suitable: m_active out of range");
    const auto fmask = detail::failed_mask(failed, ens.n_sensors());
    std::vector<SuitableModel> all(static_cast<std::size_t>(m_active));
    int min_match = std::numeric_limits<int>::max();
    for (int j = 0; j < m_active; ++j) {
        const auto& mask = ens.feature_masks[static_cast<std::size_t>(j)];
        int match = 0;
        for (std::size_t w = 0; w < mask.size(); ++w)
            match += std::popcount(mask[w] & fmask[w]);
        all[static_cast<std::size_t>(j)] = {j, match};
        min_match = std::min(min_match, match);
    }
    std::vector<SuitableModel> suitable;
    for (const auto& sm : all)
        if (sm.match == min_match) suitable.push_back(sm);
    std::stable_sort(suitable.begin(), suitable.end(),
                     [&](const SuitableModel& a, const SuitableModel& b) {
                         const double aa = ens.sub_training_accuracy[static_cast<std::size_t>(a.index)];
                         const double ab = ens.sub_training_accuracy[static_cast<std::size_t>(b.index)];
                         if (aa != ab) return aa > ab;
                         return a.index < b.index;
                     });
    return suitable;
}

struct Selection {
    std::vector<int> models;
    bool single_fallback = false;  // collapsed to the single most suitable model
};

/// Applies the fewer-than-min_vote single-best rule and, when requested, the
/// TBMS cut to the ranked suitable list.
inline Selection select_models(const std::vector<SuitableModel>& suitable, const TbmsThreshold& t,
                               int min_vote, bool apply_tbms) {
    if (suitable.empty()) throw std::invalid_argument("select_models: empty suitable set");
    Selection sel;
    if (static_cast<int>(suitable.size()) < min_vote) {
        sel.models.push_back(suitable.front().index);
        sel.single_fallback = true;
        return sel;
    }
    if (apply_tbms) {
        const int k = t.selected_of(static_cast<int>(suitable.size()));
        if (k < min_vote) {
            sel.models.push_back(suitable.front().index);
            sel.single_fallback = true;
            return sel;
        }
        for (int i = 0; i < k; ++i)
            sel.models.push_back(suitable[static_cast<std::size_t>(i)].index);
        return sel;
    }
    for (const auto& sm : suitable) sel.models.push_back(sm.index);
    return sel;
}

struct ImputedVector {
    std::vector<double> values;  // feature-set order
    int imputed = 0;
};

/// Projects the request onto a feature subset, substituting training means
/// for failed sensors.
inline ImputedVector impute(const InferenceRequest& req, const std::vector<int>& feature_set,
                            const std::vector<double>& means) {
    ImputedVector out;
    out.values.reserve(feature_set.size());
    for (int j : feature_set) {
        if (static_cast<std::size_t>(j) >= means.size())
            throw std::invalid_argument("impute: sensor without a mean entry");
        const bool is_failed =
            std::binary_search(req.failed.begin(), req.failed.end(), j);
        if (is_failed) {
            out.values.push_back(means[static_cast<std::size_t>(j)]);
            ++out.imputed;
        } else {
            out.values.push_back(req.values[static_cast<std::size_t>(j)]);
        }
    }
    return out;
}

/// Majority vote. Tied classes resolve to the class predicted by the
/// highest-training-accuracy model among them; remaining ties go to the
/// lowest model index.
inline int vote(const std::vector<std::pair<int, int>>& predictions,
                const std::vector<double>& training_accuracy) {
    if (predictions.empty()) throw std::invalid_argument("vote: empty prediction list");
    std::vector<std::pair<int, int>> counts;  // (class, votes)
    for (const auto& [mi, cls] : predictions) {
        (void)mi;
        bool found = false;
        for (auto& [c, n] : counts)
            if (c == cls) {
                ++n;
                found = true;
            }
        if (!found) counts.emplace_back(cls, 1);
    }
    int max_votes = 0;
    for (const auto& [c, n] : counts) max_votes = std::max(max_votes, n);
    int best_class = -1, best_model = -1;
    double best_acc = -1.0;
    for (const auto& [mi, cls] : predictions) {
        int votes_for = 0;
        for (const auto& [c, n] : counts)
            if (c == cls) votes_for = n;
        if (votes_for != max_votes) continue;
        const double acc = training_accuracy[static_cast<std::size_t>(mi)];
        if (acc > best_acc || (acc == best_acc && mi < best_model) || best_class < 0) {
            best_acc = acc;
            best_model = mi;
            best_class = cls;
        }
    }
    return best_class;
}

namespace detail {

inline InferenceOutcome base_path_outcome(const InferenceRequest& req, const TrainedEnsemble& ens) {
    InferenceOutcome out;
    out.path = InferencePath::base;
    const auto t0 = Clock::now();
    std::vector<int> all_sensors(ens.n_sensors());
    for (std::size_t j = 0; j < ens.n_sensors(); ++j) all_sensors[j] = static_cast<int>(j);
    const auto iv = impute(req, all_sensors, ens.imputer_means);
    out.imputed_count = iv.imputed;
    out.op_costs.imputed_values = static_cast<std::uint64_t>(iv.imputed);
    out.op_costs.impute_ns = elapsed_ns(t0);
    const auto t1 = Clock::now();
    out.label = ens.base_model.predict(iv.values);
    out.op_costs.infer_model_feature_pairs = ens.n_sensors();
    out.op_costs.infer_ns = elapsed_ns(t1);
    return out;
}

// Shared tail of every sub-model path: impute + predict per participant,
// then vote when more than one participant remains.
inline InferenceOutcome run_participants(const InferenceRequest& req, const TrainedEnsemble& ens,
                                         const Selection& sel, InferenceOutcome out) {
    out.participants = sel.models;
    std::vector<std::pair<int, int>> predictions;
    for (int j : sel.models) {
        const auto& idx = ens.feature_index_sets[static_cast<std::size_t>(j)];
        const auto t0 = Clock::now();
        const auto iv = impute(req, idx, ens.imputer_means);
        out.imputed_count += iv.imputed;
        out.op_costs.imputed_values += static_cast<std::uint64_t>(iv.imputed);
        out.op_costs.impute_ns += elapsed_ns(t0);
        const auto t1 = Clock::now();
        predictions.emplace_back(j, ens.sub_models[static_cast<std::size_t>(j)].predict(iv.values));
        out.op_costs.infer_model_feature_pairs += idx.size();
        out.op_costs.infer_ns += elapsed_ns(t1);
    }
    const auto t2 = Clock::now();
    if (predictions.size() >= 2) {
        out.label = vote(predictions, ens.sub_training_accuracy);
        out.op_costs.vote_predictions = predictions.size();
        out.op_costs.vote_ns = elapsed_ns(t2);
    } else {
        out.label = predictions.front().second;
    }
    return out;
}

struct RankedStage {
    std::vector<SuitableModel> suitable;
    OpCosts costs;
};

inline RankedStage find_and_detect(const InferenceRequest& req, const TrainedEnsemble& ens,
                                   int m_active) {
    RankedStage st;
    const auto t0 = Clock::now();
    st.suitable = find_suitable(req.failed, ens, m_active);
    st.costs.find_specs_scanned = static_cast<std::uint64_t>(m_active);
    st.costs.find_ns = elapsed_ns(t0);
    st.costs.detect_candidates_ranked = st.suitable.size();
    return st;
}

}  // namespace detail

/// SECOE inference: find suitable sub-models over the first m_active, let
/// all of them vote (single best when fewer than min_vote are suitable).
/// With no failed sensors the base model predicts directly.
inline InferenceOutcome secoe_infer(const InferenceRequest& req, const TrainedEnsemble& ens,
                                    int m_active, int min_vote = 3) {
    if (m_active < ens.plan.min_m)
        throw std::invalid_argument("secoe_infer: m_active below MinM");
    if (m_active > ens.plan.m) throw std::invalid_argument("secoe_infer: m_active above trained m");
    if (req.values.size() != ens.n_sensors())
        throw std::invalid_argument("secoe_infer: request width mismatch");
    if (req.failed.empty()) return detail::base_path_outcome(req, ens);

    auto st = detail::find_and_detect(req, ens, m_active);
    const auto t0 = detail::Clock::now();
    const Selection sel = select_models(st.suitable, TbmsThreshold::of_fraction(1.0), min_vote,
                                        /*apply_tbms=*/false);
    st.costs.detect_ns = detail::elapsed_ns(t0);

    InferenceOutcome out;
    out.op_costs = st.costs;
    out.path = sel.single_fallback ? InferencePath::single_best : InferencePath::vote_all;
    return detail::run_participants(req, ens, sel, std::move(out));
}

/// ENAMLE inference: routes by missing-data rate (MDRMS) and applies TBMS in
/// the low range. Low and high ranges draw from the small ensemble prefix,
/// the moderate range from the large one.
inline InferenceOutcome enamle_infer(const InferenceRequest& req, const TrainedEnsemble& ens,
                                     const EnamleConfig& cfg) {
    cfg.validate(ens.plan);
    if (req.values.size() != ens.n_sensors())
        throw std::invalid_argument("enamle_infer: request width mismatch");
    const double rate = missing_rate(req, static_cast<int>(ens.n_sensors()));
    if (rate == 0.0) return detail::base_path_outcome(req, ens);

    int m_active;
    bool apply_tbms;
    InferencePath path;
    if (rate <= cfg.bounds.low_upper) {
        m_active = cfg.small_m;
        apply_tbms = true;
        path = InferencePath::tbms;
    } else if (rate <= cfg.bounds.moderate_upper) {
        m_active = cfg.large_m;
        apply_tbms = false;
        path = InferencePath::moderate_large;
    } else {
        m_active = cfg.small_m;
        apply_tbms = false;
        path = InferencePath::high_small;
    }

    auto st = detail::find_and_detect(req, ens, m_active);
    const auto t0 = detail::Clock::now();
    const Selection sel = select_models(st.suitable, cfg.t, cfg.min_vote, apply_tbms);
    st.costs.detect_ns = detail::elapsed_ns(t0);

    InferenceOutcome out;
    out.op_costs = st.costs;
    out.path = sel.single_fallback ? InferencePath::single_best : path;
    return detail::run_participants(req, ens, sel, std::move(out));
}

/// Baseline: the base model predicts with every failed sensor mean-imputed.
inline InferenceOutcome base_infer(const InferenceRequest& req, const TrainedEnsemble& ens) {
    if (req.values.size() != ens.n_sensors())
        throw std::invalid_argument("base_infer: request width mismatch");
    return detail::base_path_outcome(req, ens);
}

inline nlohmann::json outcome_to_json(const InferenceOutcome& out, const TrainedEnsemble& ens) {
    return {{"label", ens.class_names[static_cast<std::size_t>(out.label)]},
            {"path", to_string(out.path)},
            {"participants", out.participants},
            {"imputed_count", out.imputed_count},
            {"op_costs", out.op_costs}};
}

}  // namespace enamle
