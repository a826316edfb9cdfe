#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "enamle/rng.hpp"

namespace enamle {

struct ForestParams {
    int n_trees = 50;
    int max_depth = 8;
    int min_samples_split = 2;
    int feature_candidates = 0;  // 0 -> floor(sqrt(in_dim)), at least 1
};

inline void to_json(nlohmann::json& j, const ForestParams& p) {
    j = {{"n_trees", p.n_trees},
         {"max_depth", p.max_depth},
         {"min_samples_split", p.min_samples_split},
         {"feature_candidates", p.feature_candidates}};
}
inline void from_json(const nlohmann::json& j, ForestParams& p) {
    if (j.contains("n_trees")) j.at("n_trees").get_to(p.n_trees);
    if (j.contains("max_depth")) j.at("max_depth").get_to(p.max_depth);
    if (j.contains("min_samples_split")) j.at("min_samples_split").get_to(p.min_samples_split);
    if (j.contains("feature_candidates")) j.at("feature_candidates").get_to(p.feature_candidates);
}

/// Bagged CART trees with per-split feature subsampling. Every source of
/// randomness derives from the training seed, so trees are reproducible.
struct ForestModel {
    struct Node {
        int feature = -1;       // -1 marks a leaf
        double threshold = 0.0;
        int left = -1, right = -1;
        int leaf_label = 0;
    };
    struct Tree {
        std::vector<Node> nodes;
        int predict(std::span<const double> x) const {
            int idx = 0;
            while (nodes[static_cast<std::size_t>(idx)].feature >= 0) {
                const Node& nd = nodes[static_cast<std::size_t>(idx)];
                idx = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
            }
            return nodes[static_cast<std::size_t>(idx)].leaf_label;
        }
    };

    int in_dim = 0;
    int n_classes = 0;
    std::vector<Tree> trees;

    int predict(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != in_dim)
            throw std::invalid_argument("ForestModel::predict: feature width mismatch");
        std::vector<int> votes(static_cast<std::size_t>(n_classes), 0);
        for (const auto& t : trees) votes[static_cast<std::size_t>(t.predict(x))]++;
        int best = 0;
        for (int c = 1; c < n_classes; ++c)
            if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)]) best = c;
        return best;
    }

    /// Bootstrap sample of tree `tree_index`; pure in (seed, tree_index, n).
    static std::vector<std::size_t> bootstrap_indices(std::uint64_t seed, int tree_index,
                                                      std::size_t n) {
        auto eng = rng::make_engine(rng::derive_seed(seed, 0xb007, static_cast<std::uint64_t>(tree_index)));
        std::vector<std::size_t> out(n);
        for (std::size_t i = 0; i < n; ++i)
            out[i] = static_cast<std::size_t>(rng::uniform_below(eng, n));
        return out;
    }

    static ForestModel train(const std::vector<double>& X, const std::vector<int>& y, int in_dim,
                             int n_classes, const ForestParams& params, std::uint64_t seed) {
        if (in_dim < 1 || n_classes < 2) throw std::invalid_argument("ForestModel::train: bad dims");
        const std::size_t n = y.size();
        ForestModel f;
        f.in_dim = in_dim;
        f.n_classes = n_classes;
        const int k = params.feature_candidates > 0
                          ? std::min(params.feature_candidates, in_dim)
                          : std::max(1, static_cast<int>(std::sqrt(static_cast<double>(in_dim))));
        for (int t = 0; t < params.n_trees; ++t) {
            auto rows = bootstrap_indices(seed, t, n);
            auto eng = rng::make_engine(rng::derive_seed(seed, 0x52ee, static_cast<std::uint64_t>(t)));
            Tree tree;
            Builder b{X, y, in_dim, n_classes, params, k, eng, tree};
            b.grow(rows, 0);
            f.trees.push_back(std::move(tree));
        }
        return f;
    }

private:
    struct Builder {
        const std::vector<double>& X;
        const std::vector<int>& y;
        int in_dim;
        int n_classes;
        const ForestParams& params;
        int k;
        rng::Engine& eng;
        Tree& tree;

        int majority(const std::vector<std::size_t>& rows) const {
            std::vector<int> counts(static_cast<std::size_t>(n_classes), 0);
            for (std::size_t r : rows) counts[static_cast<std::size_t>(y[r])]++;
            int best = 0;
            for (int c = 1; c < n_classes; ++c)
                if (counts[static_cast<std::size_t>(c)] > counts[static_cast<std::size_t>(best)])
                    best = c;
            return best;
        }

        double gini(const std::vector<int>& counts, int total) const {
            if (total == 0) return 0.0;
            double g = 1.0;
            for (int c : counts) {
                const double p = static_cast<double>(c) / total;
                g -= p * p;
            }
            return g;
        }

        // Returns node index in tree.nodes.
        int grow(std::vector<std::size_t>& rows, int depth) {
            const int idx = static_cast<int>(tree.nodes.size());
            tree.nodes.emplace_back();

            bool pure = true;
            for (std::size_t i = 1; i < rows.size(); ++i)
                if (y[rows[i]] != y[rows[0]]) {
                    pure = false;
                    break;
                }
            if (pure || depth >= params.max_depth ||
                static_cast<int>(rows.size()) < params.min_samples_split) {
                tree.nodes[static_cast<std::size_t>(idx)].leaf_label = majority(rows);
                return idx;
            }

            const auto feats = rng::sample_without_replacement(in_dim, k, eng);
            int best_feat = -1;
            double best_thresh = 0.0, best_impurity = 1e300;
            std::vector<std::pair<double, int>> vals;  // (feature value, label)
            std::vector<int> left_counts(static_cast<std::size_t>(n_classes));
            std::vector<int> right_counts(static_cast<std::size_t>(n_classes));
            for (int feat : feats) {
                vals.clear();
                for (std::size_t r : rows)
                    vals.emplace_back(X[r * static_cast<std::size_t>(in_dim) +
                                        static_cast<std::size_t>(feat)],
                                      y[r]);
                std::sort(vals.begin(), vals.end());
                std::fill(left_counts.begin(), left_counts.end(), 0);
                std::fill(right_counts.begin(), right_counts.end(), 0);
                for (const auto& [v, lab] : vals) right_counts[static_cast<std::size_t>(lab)]++;
                const int total = static_cast<int>(vals.size());
                for (int i = 0; i + 1 < total; ++i) {
                    const int lab = vals[static_cast<std::size_t>(i)].second;
                    left_counts[static_cast<std::size_t>(lab)]++;
                    right_counts[static_cast<std::size_t>(lab)]--;
                    if (vals[static_cast<std::size_t>(i)].first ==
                        vals[static_cast<std::size_t>(i + 1)].first)
                        continue;  // no boundary between equal values
                    const int nl = i + 1, nr = total - nl;
                    const double impurity =
                        (nl * gini(left_counts, nl) + nr * gini(right_counts, nr)) / total;
                    if (impurity < best_impurity) {
                        best_impurity = impurity;
                        best_feat = feat;
                        best_thresh = 0.5 * (vals[static_cast<std::size_t>(i)].first +
                                             vals[static_cast<std::size_t>(i + 1)].first);
                    }
                }
            }
            if (best_feat < 0) {  // all candidate features constant on this node
                tree.nodes[static_cast<std::size_t>(idx)].leaf_label = majority(rows);
                return idx;
            }

            std::vector<std::size_t> left_rows, right_rows;
            for (std::size_t r : rows) {
                if (X[r * static_cast<std::size_t>(in_dim) + static_cast<std::size_t>(best_feat)] <=
                    best_thresh)
                    left_rows.push_back(r);
                else
                    right_rows.push_back(r);
            }
            tree.nodes[static_cast<std::size_t>(idx)].feature = best_feat;
            tree.nodes[static_cast<std::size_t>(idx)].threshold = best_thresh;
            const int li = grow(left_rows, depth + 1);
            tree.nodes[static_cast<std::size_t>(idx)].left = li;
            const int ri = grow(right_rows, depth + 1);
            tree.nodes[static_cast<std::size_t>(idx)].right = ri;
            return idx;
        }
    };
};

inline void to_json(nlohmann::json& j, const ForestModel::Node& n) {
    j = {{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right}, {"c", n.leaf_label}};
}
inline void from_json(const nlohmann::json& j, ForestModel::Node& n) {
    j.at("f").get_to(n.feature);
    j.at("t").get_to(n.threshold);
    j.at("l").get_to(n.left);
    j.at("r").get_to(n.right);
    j.at("c").get_to(n.leaf_label);
}
inline void to_json(nlohmann::json& j, const ForestModel::Tree& t) { j = {{"nodes", t.nodes}}; }
inline void from_json(const nlohmann::json& j, ForestModel::Tree& t) {
    j.at("nodes").get_to(t.nodes);
}
inline void to_json(nlohmann::json& j, const ForestModel& f) {
    j = {{"in_dim", f.in_dim}, {"n_classes", f.n_classes}, {"trees", f.trees}};
}
inline void from_json(const nlohmann::json& j, ForestModel& f) {
    j.at("in_dim").get_to(f.in_dim);
    j.at("n_classes").get_to(f.n_classes);
    j.at("trees").get_to(f.trees);
}

}  // namespace enamle
