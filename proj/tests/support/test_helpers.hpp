#pragma once

#include <string>
#include <vector>

#include "enamle/correlation.hpp"
#include "enamle/dataset.hpp"
#include "enamle/learners.hpp"
#include "enamle/submodel_plan.hpp"

namespace enamle::test_helpers {

inline GroupSet groups_of_sizes(const std::vector<int>& sizes, double threshold = 0.7) {
    GroupSet gs;
    gs.threshold = threshold;
    int s = 0;
    for (std::size_t g = 0; g < sizes.size(); ++g) {
        std::vector<std::string> grp;
        for (int k = 0; k < sizes[g]; ++k) grp.push_back("s" + std::to_string(s++));
        gs.groups.push_back(std::move(grp));
    }
    return gs;
}

/// Fast trained ensemble over a synthetic dataset whose planted structure
/// matches `group_sizes` exactly. Uses a small forest so tests stay quick.
inline TrainedEnsemble quick_ensemble(const std::vector<int>& group_sizes, int m,
                                      int n_rows = 400, int n_classes = 3,
                                      std::uint64_t seed = 11,
                                      ClassifierKind kind = ClassifierKind::random_forest) {
    Dataset d = synthesize(group_sizes, n_rows, n_classes, 0.05, seed);
    d = split(d, 0.85, seed + 1);
    d = normalize(d);
    GroupSet gs;
    gs.threshold = 0.7;
    gs.groups = planted_groups(group_sizes);
    const EnsemblePlan plan = build_feature_sets(gs, m);
    ClassifierSpec spec;
    spec.kind = kind;
    spec.seed = seed + 2;
    spec.forest.n_trees = 10;
    spec.forest.max_depth = 5;
    spec.mlp.epochs = 30;
    spec.mlp.hidden_width = 12;
    spec.svm.epochs = 30;
    return train(d, plan, spec);
}

}  // namespace enamle::test_helpers
