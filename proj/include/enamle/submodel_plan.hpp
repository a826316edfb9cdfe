#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "enamle/correlation.hpp"

namespace enamle {

/// Per-sub-model feature subsets obtained by rotating a half-width selection
/// window over each correlated group. Sub-model j takes, from each group of
/// size n and width w = ceil(n/2), the sensors at cyclic positions
/// j, j+1, ..., j+w-1. Singleton-group sensors appear in every feature set.
struct EnsemblePlan {
    GroupSet group_set;
    int min_m = 0;
    int m = 0;
    std::vector<int> window_widths;                       // per group
    std::vector<std::vector<std::string>> feature_sets;   // per sub-model, rotation order
    std::vector<std::vector<std::string>> excluded_sets;  // complements, group order
    std::vector<std::string> singleton_sensors;           // always imputed when failed
};

namespace detail {

inline int window_width(int group_size) { return (group_size + 1) / 2; }

// Window j of a cyclic group of size n covers position p iff the backward
// distance from p to j is below the width.
inline bool window_covers(int j, int p, int n, int w) { return ((p - j) % n + n) % n < w; }

inline bool rotation_covers_group(int m, int n) {
    if (n < 2) return true;
    const int w = window_width(n);
    for (int p = 0; p < n; ++p) {
        bool included = false, excluded = false;
        for (int j = 0; j < m; ++j) {
            if (window_covers(j % n, p, n, w))
                included = true;
            else
                excluded = true;
        }
        if (!included || !excluded) return false;
    }
    return true;
}

}  // namespace detail

/// True when every sensor of every non-singleton group is both selected by
/// at least one of the first m windows and skipped by at least one.
inline bool rotation_covers(const GroupSet& gs, int m) {
    if (m < 1) return false;
    for (const auto& g : gs.groups)
        if (!detail::rotation_covers_group(m, static_cast<int>(g.size()))) return false;
    return true;
}

/// Smallest ensemble size giving full inclusion/exclusion coverage, found by
/// brute-force search from 1 upward. All-singleton group sets degenerate to 1
/// (no exclusion is possible; such sensors are flagged in the plan).
inline int compute_min_m(const GroupSet& gs) {
    if (gs.groups.empty()) throw std::invalid_argument("compute_min_m: empty group set");
    const int bound = static_cast<int>(gs.max_group_size()) + 2;
    for (int m = 1; m <= bound; ++m)
        if (rotation_covers(gs, m)) return m;
    throw std::logic_error("compute_min_m: no covering ensemble size found");  // unreachable
}

inline EnsemblePlan build_feature_sets(const GroupSet& gs, int m) {
    const int min_m = compute_min_m(gs);
    if (m < min_m)
        throw std::invalid_argument("build_feature_sets: m=" + std::to_string(m) +
                                    " is below MinM=" + std::to_string(min_m));
    EnsemblePlan plan;
    plan.group_set = gs;
    plan.min_m = min_m;
    plan.m = m;
    for (const auto& g : gs.groups) {
        plan.window_widths.push_back(detail::window_width(static_cast<int>(g.size())));
        if (g.size() == 1) plan.singleton_sensors.push_back(g.front());
    }
    for (int j = 0; j < m; ++j) {
        std::vector<std::string> selected, excluded;
        for (std::size_t gi = 0; gi < gs.groups.size(); ++gi) {
            const auto& g = gs.groups[gi];
            const int n = static_cast<int>(g.size());
            const int w = plan.window_widths[gi];
            if (n == 1) {
                selected.push_back(g.front());
                continue;
            }
            for (int i = 0; i < w; ++i)
                selected.push_back(g[static_cast<std::size_t>((j + i) % n)]);
            for (int p = 0; p < n; ++p)
                if (!detail::window_covers(j % n, p, n, w))
                    excluded.push_back(g[static_cast<std::size_t>(p)]);
        }
        plan.feature_sets.push_back(std::move(selected));
        plan.excluded_sets.push_back(std::move(excluded));
    }
    return plan;
}

inline void to_json(nlohmann::json& j, const EnsemblePlan& p) {
    j = nlohmann::json{{"group_set", p.group_set},
                       {"min_m", p.min_m},
                       {"m", p.m},
                       {"window_widths", p.window_widths},
                       {"feature_sets", p.feature_sets},
                       {"excluded_sets", p.excluded_sets},
                       {"singleton_sensors", p.singleton_sensors}};
}

inline void from_json(const nlohmann::json& j, EnsemblePlan& p) {
    j.at("group_set").get_to(p.group_set);
    j.at("min_m").get_to(p.min_m);
    j.at("m").get_to(p.m);
    j.at("window_widths").get_to(p.window_widths);
    j.at("feature_sets").get_to(p.feature_sets);
    j.at("excluded_sets").get_to(p.excluded_sets);
    j.at("singleton_sensors").get_to(p.singleton_sensors);
}

}  // namespace enamle
