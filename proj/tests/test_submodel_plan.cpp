#include "enamle/submodel_plan.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "enamle/rng.hpp"
#include "support/test_helpers.hpp"

namespace {

using namespace enamle;
using test_helpers::groups_of_sizes;

// Closed-form MinM for one group of size n; used only to cross-check the
// brute-force search.
int closed_form_min_m(int n) {
    const int w = (n + 1) / 2;
    return std::max(n - w + 1, w + 1);
}

TEST(ComputeMinM, PairNeedsTwoModels) {
    EXPECT_EQ(compute_min_m(groups_of_sizes({2})), 2);
}

TEST(ComputeMinM, MixedGroupSizes) {
    EXPECT_EQ(compute_min_m(groups_of_sizes({4, 2})), 3);
}

TEST(ComputeMinM, SizeTenNeedsSix) {
    EXPECT_EQ(compute_min_m(groups_of_sizes({10})), 6);
}

TEST(ComputeMinM, MatchesClosedFormForSingleGroups) {
    for (int n = 2; n <= 12; ++n)
        EXPECT_EQ(compute_min_m(groups_of_sizes({n})), closed_form_min_m(n)) << "n=" << n;
}

TEST(ComputeMinM, AllSingletonsDegenerateToOne) {
    EXPECT_EQ(compute_min_m(groups_of_sizes({1, 1, 1})), 1);
    EXPECT_TRUE(groups_of_sizes({1, 1, 1}).all_singletons());
}

TEST(ComputeMinM, EmptyGroupSetRejected) {
    GroupSet gs;
    EXPECT_THROW(compute_min_m(gs), std::invalid_argument);
}

TEST(BuildFeatureSets, RotationOverOneGroupOfFour) {
    GroupSet gs;
    gs.groups = {{"s1", "s2", "s3", "s4"}};
    const EnsemblePlan plan = build_feature_sets(gs, 3);
    ASSERT_EQ(plan.feature_sets.size(), 3u);
    EXPECT_EQ(plan.feature_sets[0], (std::vector<std::string>{"s1", "s2"}));
    EXPECT_EQ(plan.feature_sets[1], (std::vector<std::string>{"s2", "s3"}));
    EXPECT_EQ(plan.feature_sets[2], (std::vector<std::string>{"s3", "s4"}));
    EXPECT_EQ(plan.excluded_sets[0], (std::vector<std::string>{"s3", "s4"}));
    EXPECT_EQ(plan.excluded_sets[2], (std::vector<std::string>{"s1", "s2"}));
}

TEST(BuildFeatureSets, RotationOverTwoGroups) {
    GroupSet gs;
    gs.groups = {{"a", "b"}, {"c", "d", "e"}};
    const EnsemblePlan plan = build_feature_sets(gs, 3);
    EXPECT_EQ(plan.min_m, 3);
    EXPECT_EQ(plan.feature_sets[0], (std::vector<std::string>{"a", "c", "d"}));
    EXPECT_EQ(plan.feature_sets[1], (std::vector<std::string>{"b", "d", "e"}));
    EXPECT_EQ(plan.feature_sets[2], (std::vector<std::string>{"a", "e", "c"}));
    // every sensor included at least once and excluded at least once
    for (const auto& name : {"a", "b", "c", "d", "e"}) {
        int inc = 0, exc = 0;
        for (int j = 0; j < 3; ++j) {
            const auto& fs = plan.feature_sets[static_cast<std::size_t>(j)];
            const auto& ex = plan.excluded_sets[static_cast<std::size_t>(j)];
            inc += std::count(fs.begin(), fs.end(), name);
            exc += std::count(ex.begin(), ex.end(), name);
        }
        EXPECT_GE(inc, 1) << name;
        EXPECT_GE(exc, 1) << name;
    }
}

TEST(BuildFeatureSets, SingletonsAppearInEverySet) {
    const GroupSet gs = groups_of_sizes({1, 3, 1});
    const EnsemblePlan plan = build_feature_sets(gs, compute_min_m(gs));
    EXPECT_EQ(plan.singleton_sensors, (std::vector<std::string>{"s0", "s4"}));
    for (const auto& fs : plan.feature_sets) {
        EXPECT_NE(std::find(fs.begin(), fs.end(), "s0"), fs.end());
        EXPECT_NE(std::find(fs.begin(), fs.end(), "s4"), fs.end());
    }
    for (const auto& ex : plan.excluded_sets) {
        EXPECT_EQ(std::find(ex.begin(), ex.end(), "s0"), ex.end());
        EXPECT_EQ(std::find(ex.begin(), ex.end(), "s4"), ex.end());
    }
}

TEST(BuildFeatureSets, FullCycleIncludesEachPositionExactlyWTimes) {
    for (int n = 2; n <= 9; ++n) {
        GroupSet gs = groups_of_sizes({n});
        const int m = n;  // full rotation cycle
        if (m < compute_min_m(gs)) continue;
        const EnsemblePlan plan = build_feature_sets(gs, m);
        const int w = (n + 1) / 2;
        for (int p = 0; p < n; ++p) {
            const std::string name = "s" + std::to_string(p);
            int inc = 0;
            for (const auto& fs : plan.feature_sets)
                inc += std::count(fs.begin(), fs.end(), name);
            EXPECT_EQ(inc, w) << "n=" << n << " p=" << p;
        }
    }
}

TEST(BuildFeatureSets, BelowMinMRejected) {
    const GroupSet gs = groups_of_sizes({4, 2});
    EXPECT_THROW(build_feature_sets(gs, 2), std::invalid_argument);
}

bool covers(const EnsemblePlan& plan, const GroupSet& gs, int m) {
    for (const auto& g : gs.groups) {
        if (g.size() < 2) continue;
        for (const auto& name : g) {
            int inc = 0, exc = 0;
            for (int j = 0; j < m; ++j) {
                const auto& fs = plan.feature_sets[static_cast<std::size_t>(j)];
                const auto& ex = plan.excluded_sets[static_cast<std::size_t>(j)];
                inc += std::count(fs.begin(), fs.end(), name);
                exc += std::count(ex.begin(), ex.end(), name);
            }
            if (inc == 0 || exc == 0) return false;
        }
    }
    return true;
}

TEST(Coverage, RandomStructuresAtMinMAndBeyond) {
    auto eng = rng::make_engine(4242);
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<int> sizes;
        const int n_groups = 1 + static_cast<int>(rng::uniform_below(eng, 5));
        for (int g = 0; g < n_groups; ++g)
            sizes.push_back(1 + static_cast<int>(rng::uniform_below(eng, 12)));
        const GroupSet gs = groups_of_sizes(sizes);
        const int min_m = compute_min_m(gs);
        const int extra = static_cast<int>(rng::uniform_below(eng, 17));
        const EnsemblePlan plan = build_feature_sets(gs, min_m + extra);
        EXPECT_TRUE(covers(plan, gs, min_m + extra));
        EXPECT_TRUE(covers(plan, gs, min_m));
        if (min_m > 1 && !gs.all_singletons()) {
            // one fewer model must violate coverage for some sensor
            EXPECT_FALSE(covers(plan, gs, min_m - 1));
        }
    }
}

TEST(PrefixStability, SmallerPlanIsPrefixOfLarger) {
    auto eng = rng::make_engine(777);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<int> sizes;
        const int n_groups = 1 + static_cast<int>(rng::uniform_below(eng, 4));
        for (int g = 0; g < n_groups; ++g)
            sizes.push_back(1 + static_cast<int>(rng::uniform_below(eng, 8)));
        const GroupSet gs = groups_of_sizes(sizes);
        const int min_m = compute_min_m(gs);
        const int k = 1 + static_cast<int>(rng::uniform_below(eng, 9));
        const EnsemblePlan small = build_feature_sets(gs, min_m);
        const EnsemblePlan large = build_feature_sets(gs, min_m + k);
        for (int j = 0; j < min_m; ++j) {
            EXPECT_EQ(small.feature_sets[static_cast<std::size_t>(j)],
                      large.feature_sets[static_cast<std::size_t>(j)]);
            EXPECT_EQ(small.excluded_sets[static_cast<std::size_t>(j)],
                      large.excluded_sets[static_cast<std::size_t>(j)]);
        }
    }
}

TEST(SingleFailureGuarantee, EverySensorExcludedSomewhere) {
    for (const auto& sizes : std::vector<std::vector<int>>{{2}, {3}, {5, 2}, {4, 4, 1}, {12, 3}}) {
        const GroupSet gs = groups_of_sizes(sizes);
        const int min_m = compute_min_m(gs);
        for (int m : {min_m, min_m + 3}) {
            const EnsemblePlan plan = build_feature_sets(gs, m);
            for (const auto& g : gs.groups) {
                if (g.size() < 2) continue;
                for (const auto& name : g) {
                    bool excluded_somewhere = false;
                    for (const auto& ex : plan.excluded_sets)
                        if (std::find(ex.begin(), ex.end(), name) != ex.end())
                            excluded_somewhere = true;
                    EXPECT_TRUE(excluded_somewhere) << name << " m=" << m;
                }
            }
        }
    }
}

TEST(Plan, FeatureAndExcludedSetsPartitionEachGroup) {
    const GroupSet gs = groups_of_sizes({5, 2, 1, 7});
    const EnsemblePlan plan = build_feature_sets(gs, compute_min_m(gs) + 2);
    for (std::size_t j = 0; j < plan.feature_sets.size(); ++j) {
        std::set<std::string> all(plan.feature_sets[j].begin(), plan.feature_sets[j].end());
        for (const auto& name : plan.excluded_sets[j])
            EXPECT_TRUE(all.insert(name).second) << "overlap at " << name;
        EXPECT_EQ(all.size(), gs.n_sensors());
    }
    // each feature set takes exactly w_g from every group of size >= 2
    for (std::size_t j = 0; j < plan.feature_sets.size(); ++j) {
        for (std::size_t gi = 0; gi < gs.groups.size(); ++gi) {
            const auto& g = gs.groups[gi];
            int taken = 0;
            for (const auto& name : g)
                taken += std::count(plan.feature_sets[j].begin(), plan.feature_sets[j].end(), name);
            if (g.size() >= 2)
                EXPECT_EQ(taken, plan.window_widths[gi]);
            else
                EXPECT_EQ(taken, 1);
        }
    }
}

TEST(Plan, JsonRoundTrip) {
    const GroupSet gs = groups_of_sizes({3, 1, 4});
    const EnsemblePlan plan = build_feature_sets(gs, compute_min_m(gs) + 1);
    const nlohmann::json j = plan;
    const EnsemblePlan back = j.get<EnsemblePlan>();
    EXPECT_EQ(back.feature_sets, plan.feature_sets);
    EXPECT_EQ(back.excluded_sets, plan.excluded_sets);
    EXPECT_EQ(back.min_m, plan.min_m);
    EXPECT_EQ(back.m, plan.m);
    EXPECT_EQ(back.window_widths, plan.window_widths);
    EXPECT_EQ(back.singleton_sensors, plan.singleton_sensors);
    EXPECT_EQ(back.group_set.groups, gs.groups);
}

}  // namespace
