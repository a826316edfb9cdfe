#include "enamle/correlation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "enamle/rng.hpp"
#include "support/test_helpers.hpp"

namespace {

using namespace enamle;

TEST(Pearson, PerfectPositive) {
    const std::vector<double> x{1, 2, 3}, y{2, 4, 6};
    EXPECT_EQ(pearson(x, y), 1.0);
}

TEST(Pearson, PerfectNegative) {
    const std::vector<double> x{1, 2, 3}, y{3, 2, 1};
    EXPECT_EQ(pearson(x, y), -1.0);
}

TEST(Pearson, HandDerivedValue) {
    // mx = my = 2.5; Sxy = 4, Sxx = Syy = 5 -> r = 4/5.
    const std::vector<double> x{1, 2, 3, 4}, y{1, 3, 2, 4};
    EXPECT_DOUBLE_EQ(pearson(x, y), 0.8);
}

TEST(Pearson, ConstantSeriesConvention) {
    const std::vector<double> x{5, 5, 5}, y{1, 2, 3};
    EXPECT_EQ(pearson(x, y), 0.0);
    EXPECT_EQ(pearson(y, x), 0.0);
    EXPECT_EQ(pearson(x, x), 0.0);
}

TEST(Pearson, Errors) {
    const std::vector<double> x{1, 2, 3}, y{1, 2};
    EXPECT_THROW(pearson(x, y), std::invalid_argument);
    const std::vector<double> one{1};
    EXPECT_THROW(pearson(one, one), std::invalid_argument);
}

TEST(Pearson, SymmetryProperty) {
    auto eng = rng::make_engine(101);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(20), y(20);
        for (auto& v : x) v = rng::uniform(eng, -5, 5);
        for (auto& v : y) v = rng::uniform(eng, -5, 5);
        EXPECT_NEAR(pearson(x, y), pearson(y, x), 1e-12);
    }
}

TEST(Pearson, PositiveAffineInvariance) {
    auto eng = rng::make_engine(102);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(25), y(25);
        for (auto& v : x) v = rng::uniform(eng, -2, 2);
        for (auto& v : y) v = rng::uniform(eng, -2, 2);
        const double a = rng::uniform(eng, 0.1, 4.0);
        const double b = rng::uniform(eng, -3.0, 3.0);
        std::vector<double> xt(25);
        for (std::size_t i = 0; i < 25; ++i) xt[i] = a * x[i] + b;
        EXPECT_NEAR(pearson(xt, y), pearson(x, y), 1e-9);
    }
}

TEST(Pearson, StaysInsideUnitInterval) {
    auto eng = rng::make_engine(103);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> x(10), y(10);
        for (auto& v : x) v = rng::uniform(eng, -1, 1);
        const double slope = rng::uniform(eng, -2, 2);
        for (std::size_t i = 0; i < 10; ++i)
            y[i] = slope * x[i] + 0.001 * rng::normal(eng);
        const double r = pearson(x, y);
        EXPECT_LE(r, 1.0);
        EXPECT_GE(r, -1.0);
    }
}

// Dataset whose training-row correlation matrix is forced by construction:
// (a, b) near 1, (c, d) near 1, all cross pairs weak (c follows a strided
// permutation of the ramp).
Dataset grouped_pairs_dataset() {
    Dataset d;
    d.sensor_names = {"a", "b", "c", "d"};
    d.class_names = {"x", "y"};
    const double a[10] = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    const double c[10] = {5, 0, 6, 1, 7, 2, 8, 3, 9, 4};
    for (int i = 0; i < 10; ++i) {
        d.features.push_back(a[i]);
        d.features.push_back(a[i] + (i % 2 == 0 ? 0.1 : -0.1));
        d.features.push_back(c[i]);
        d.features.push_back(c[i] + (i % 2 == 0 ? -0.15 : 0.15));
    }
    d.labels.assign(10, 0);
    d.split.assign(10, SplitTag::train);
    return d;
}

TEST(BuildGroups, GreedyTraceOnPlantedPairs) {
    const Dataset d = grouped_pairs_dataset();
    const auto rows = d.rows_tagged(SplitTag::train);
    const auto corr = correlation_matrix(d, rows);
    ASSERT_GT(corr[0][1], 0.9);
    ASSERT_GT(corr[2][3], 0.9);
    for (int x : {0, 1})
        for (int y : {2, 3})
            ASSERT_LT(std::abs(corr[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)]),
                      0.6);

    const GroupSet gs = build_groups(d, 0.7);
    ASSERT_EQ(gs.groups.size(), 2u);
    EXPECT_EQ(gs.groups[0], (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(gs.groups[1], (std::vector<std::string>{"c", "d"}));
}

TEST(BuildGroups, AllSingletonsWhenNothingCorrelates) {
    Dataset d;
    d.sensor_names = {"a", "b", "c"};
    d.class_names = {"x"};
    auto eng = rng::make_engine(55);
    for (int i = 0; i < 200; ++i)
        for (int j = 0; j < 3; ++j) d.features.push_back(rng::uniform01(eng));
    d.labels.assign(200, 0);
    d.split.assign(200, SplitTag::train);
    const GroupSet gs = build_groups(d, 0.7);
    EXPECT_EQ(gs.groups.size(), 3u);
    EXPECT_TRUE(gs.all_singletons());
}

TEST(BuildGroups, RecoversPlantedPartition) {
    Dataset d = synthesize({3, 2}, 2000, 2, 0.05, 31);
    d = split(d, 0.85, 1);
    const GroupSet gs = build_groups(d, 0.7);
    EXPECT_EQ(gs.groups, planted_groups({3, 2}));
}

TEST(BuildGroups, HighNoiseSyntheticCorrelationLevels) {
    Dataset d = synthesize({3, 3}, 2000, 2, 0.1, 77);
    const auto all = [&] {
        std::vector<std::size_t> rows(d.n_rows());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        return rows;
    }();
    const auto corr = correlation_matrix(d, all);
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b)
            EXPECT_GT(corr[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)], 0.9);
    for (int a = 0; a < 3; ++a)
        for (int b = 3; b < 6; ++b)
            EXPECT_LT(std::abs(corr[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]),
                      0.2);
}

TEST(BuildGroups, OutputIsAlwaysAPartition) {
    auto eng = rng::make_engine(909);
    for (int trial = 0; trial < 20; ++trial) {
        const int n_groups = 1 + static_cast<int>(rng::uniform_below(eng, 4));
        std::vector<int> sizes;
        for (int g = 0; g < n_groups; ++g)
            sizes.push_back(1 + static_cast<int>(rng::uniform_below(eng, 4)));
        if (n_groups == 1 && sizes[0] == 1) sizes.push_back(1);  // generator needs >= 2 sensors
        const double noise = rng::uniform(eng, 0.0, 0.6);
        Dataset d = synthesize(sizes, 300, 2, noise, eng());
        d = split(d, 0.85, eng());
        const GroupSet gs = build_groups(d, 0.7);

        std::set<std::string> seen;
        std::size_t total = 0;
        for (const auto& g : gs.groups) {
            ASSERT_FALSE(g.empty());
            for (const auto& name : g) {
                EXPECT_TRUE(seen.insert(name).second) << "duplicate sensor " << name;
                ++total;
            }
        }
        EXPECT_EQ(total, d.n_sensors());
    }
}

TEST(BuildGroups, NegativeCorrelationNeverGroups) {
    Dataset d = synthesize({3, 2}, 1500, 2, 0.05, 99);
    // negate g1_s0 so the second planted pair correlates near -1
    for (std::size_t i = 0; i < d.n_rows(); ++i)
        d.features[i * d.n_sensors() + 3] = -d.features[i * d.n_sensors() + 3];
    d = split(d, 0.85, 4);
    const GroupSet gs = build_groups(d, 0.7);
    ASSERT_EQ(gs.groups.size(), 3u);
    EXPECT_EQ(gs.groups[0], (std::vector<std::string>{"g0_s0", "g0_s1", "g0_s2"}));
    EXPECT_EQ(gs.groups[1], (std::vector<std::string>{"g1_s0"}));
    EXPECT_EQ(gs.groups[2], (std::vector<std::string>{"g1_s1"}));
}

TEST(GroupSet, JsonRoundTrip) {
    const GroupSet gs = test_helpers::groups_of_sizes({3, 1, 2}, 0.65);
    const nlohmann::json j = gs;
    const GroupSet back = j.get<GroupSet>();
    EXPECT_EQ(back.groups, gs.groups);
    EXPECT_DOUBLE_EQ(back.threshold, gs.threshold);
}

TEST(BuildGroups, Preconditions) {
    Dataset d = synthesize({2, 2}, 50, 2, 0.1, 1);
    EXPECT_THROW(build_groups(d, 0.7), std::invalid_argument);  // no split yet
    d = split(d, 0.85, 1);
    EXPECT_THROW(build_groups(d, 0.0), std::invalid_argument);
    EXPECT_THROW(build_groups(d, 1.0), std::invalid_argument);
}

}  // namespace
