#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "enamle/dataset.hpp"

namespace enamle {

/// Pearson correlation coefficient. Constant series correlate to 0 by
/// convention; exactly collinear series return +/-1 (Cauchy-Schwarz holds
/// with equality only then, so a >= comparison absorbs rounding).
inline double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("pearson: need at least 2 samples");

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    const double den2 = sxx * syy;
    if (den2 <= 0.0) return 0.0;
    if (sxy * sxy >= den2) return sxy > 0.0 ? 1.0 : -1.0;
    return sxy / std::sqrt(den2);
}

/// Ordered partition of the sensor set into correlated groups. Group order
/// and within-group order follow first-insertion order.
struct GroupSet {
    std::vector<std::vector<std::string>> groups;
    double threshold = 0.7;

    std::size_t n_sensors() const {
        std::size_t n = 0;
        for (const auto& g : groups) n += g.size();
        return n;
    }
    std::size_t max_group_size() const {
        std::size_t n = 0;
        for (const auto& g : groups) n = std::max(n, g.size());
        return n;
    }
    bool all_singletons() const { return max_group_size() <= 1; }
};

inline void to_json(nlohmann::json& j, const GroupSet& gs) {
    j = nlohmann::json{{"threshold", gs.threshold}, {"groups", gs.groups}};
}

inline void from_json(const nlohmann::json& j, GroupSet& gs) {
    j.at("threshold").get_to(gs.threshold);
    j.at("groups").get_to(gs.groups);
}

/// Pairwise Pearson matrix over the given rows (symmetric, unit diagonal for
/// non-constant columns).
inline std::vector<std::vector<double>> correlation_matrix(const Dataset& d,
                                                           const std::vector<std::size_t>& rows) {
    const std::size_t s = d.n_sensors();
    std::vector<std::vector<double>> cols(s, std::vector<double>(rows.size()));
    for (std::size_t j = 0; j < s; ++j)
        for (std::size_t i = 0; i < rows.size(); ++i) cols[j][i] = d.at(rows[i], j);

    std::vector<std::vector<double>> r(s, std::vector<double>(s, 0.0));
    for (std::size_t a = 0; a < s; ++a) {
        r[a][a] = 1.0;
        for (std::size_t b = a + 1; b < s; ++b) {
            const double v = pearson(cols[a], cols[b]);
            r[a][b] = v;
            r[b][a] = v;
        }
    }
    return r;
}

/// Greedy agglomeration in column order: each sensor joins the group of its
/// maximum-correlation predecessor when that correlation reaches the
/// threshold, otherwise it opens a new group. Correlations are computed on
/// training rows only; only positive correlations qualify.
inline GroupSet build_groups(const Dataset& d, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0))
        throw std::invalid_argument("build_groups: threshold must be in (0, 1)");
    if (!d.has_split())
        throw std::invalid_argument("build_groups: dataset has no training partition");

    const auto rows = d.rows_tagged(SplitTag::train);
    if (rows.size() < 2)
        throw std::invalid_argument("build_groups: need at least 2 training rows");
    const auto corr = correlation_matrix(d, rows);

    const std::size_t s = d.n_sensors();
    GroupSet gs;
    gs.threshold = threshold;
    std::vector<int> group_of(s, -1);
    for (std::size_t j = 0; j < s; ++j) {
        int best = -1;
        for (std::size_t k = 0; k < j; ++k) {
            if (best < 0 || corr[j][k] > corr[j][static_cast<std::size_t>(best)])
                best = static_cast<int>(k);
        }
        if (best >= 0 && corr[j][static_cast<std::size_t>(best)] >= threshold) {
            const int gi = group_of[static_cast<std::size_t>(best)];
            gs.groups[static_cast<std::size_t>(gi)].push_back(d.sensor_names[j]);
            group_of[j] = gi;
        } else {
            group_of[j] = static_cast<int>(gs.groups.size());
            gs.groups.push_back({d.sensor_names[j]});
        }
    }
    return gs;
}

}  // namespace enamle
