#include "enamle/bench.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

namespace {

using namespace enamle;

nlohmann::json tiny_config_json() {
    return nlohmann::json::parse(R"({
        "dataset": {"synth": {"groups": [3, 3], "rows": 160, "classes": 2, "noise": 0.05, "seed": 3}},
        "train_fraction": 0.85,
        "split_seed": 1,
        "correlation_threshold": 0.7,
        "classifier": {"kind": "random_forest", "seed": 5, "n_trees": 6, "max_depth": 4},
        "arms": [
            {"kind": "base"},
            {"kind": "secoe", "m": "minm"},
            {"kind": "enamle", "small_m": "minm", "large_m": "minm+1", "t": 0.5}
        ],
        "schedule": {"rates": [20, 50], "runs_per_rate": 2, "master_seed": 11},
        "energy": {"mode": "simulated"}
    })");
}

TEST(Config, ParsesRelativeSizesAndPercentRates) {
    const auto cfg = tiny_config_json().get<ExperimentConfig>();
    EXPECT_EQ(cfg.arms.size(), 3u);
    EXPECT_TRUE(cfg.arms[1].m.relative);
    EXPECT_EQ(cfg.arms[1].m.value, 0);
    EXPECT_TRUE(cfg.arms[2].large_m.relative);
    EXPECT_EQ(cfg.arms[2].large_m.value, 1);
    ASSERT_EQ(cfg.schedule.rates.size(), 2u);
    EXPECT_DOUBLE_EQ(cfg.schedule.rates[0], 0.2);
    EXPECT_DOUBLE_EQ(cfg.schedule.rates[1], 0.5);
}

TEST(Config, EmptyArmsRejected) {
    auto j = tiny_config_json();
    j["arms"] = nlohmann::json::array();
    EXPECT_THROW(j.get<ExperimentConfig>(), ConfigError);
}

TEST(Config, MissingDatasetRejected) {
    auto j = tiny_config_json();
    j["dataset"] = {{"label", "x"}};
    EXPECT_THROW(j.get<ExperimentConfig>(), ConfigError);
}

TEST(Config, BadArmKindRejected) {
    auto j = tiny_config_json();
    j["arms"][0]["kind"] = "bogus";
    EXPECT_THROW(j.get<ExperimentConfig>(), ConfigError);
}

TEST(MSizeParse, Forms) {
    EXPECT_EQ(MSize::parse(nlohmann::json(7)).resolve(3), 7);
    EXPECT_EQ(MSize::parse(nlohmann::json("minm")).resolve(3), 3);
    EXPECT_EQ(MSize::parse(nlohmann::json("minm+4")).resolve(3), 7);
    EXPECT_EQ(MSize::parse(nlohmann::json("minm-1")).resolve(3), 2);
    EXPECT_EQ(MSize::parse(nlohmann::json("9")).resolve(3), 9);
    EXPECT_THROW(MSize::parse(nlohmann::json(1.5)), ConfigError);
}

class BenchRun : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        result_ = new BenchResult(run_bench(tiny_config_json().get<ExperimentConfig>()));
    }
    static void TearDownTestSuite() {
        delete result_;
        result_ = nullptr;
    }
    static BenchResult* result_;
};
BenchResult* BenchRun::result_ = nullptr;

TEST_F(BenchRun, RowGridIsArmsTimesRatesPlusAverages) {
    // 3 arms x (2 rates + 1 average row)
    EXPECT_EQ(result_->rows.size(), 9u);
    EXPECT_EQ(result_->arm_labels.size(), 3u);
    EXPECT_EQ(result_->arm_labels[0], "base");
    EXPECT_EQ(result_->arm_labels[1], "secoe_m" + std::to_string(result_->min_m));
    for (const auto& label : result_->arm_labels) {
        int rate_rows = 0, avg_rows = 0;
        for (const auto& row : result_->rows) {
            if (row.arm != label) continue;
            (row.rate == "avg" ? avg_rows : rate_rows)++;
        }
        EXPECT_EQ(rate_rows, 2);
        EXPECT_EQ(avg_rows, 1);
    }
}

TEST_F(BenchRun, ArmsSeeIdenticalFailureSets) {
    ASSERT_EQ(result_->failure_hashes.size(), 3u);
    EXPECT_EQ(result_->failure_hashes[0], result_->failure_hashes[1]);
    EXPECT_EQ(result_->failure_hashes[0], result_->failure_hashes[2]);
    EXPECT_EQ(result_->failure_hashes[0].size(), 2u * 2u);  // rates x runs
}

TEST_F(BenchRun, AverageRowIsMeanOfRateRows) {
    for (const auto& label : result_->arm_labels) {
        double acc = 0.0, energy = 0.0, tp = 0.0;
        int n = 0;
        const ReportRow* avg = nullptr;
        for (const auto& row : result_->rows) {
            if (row.arm != label) continue;
            if (row.rate == "avg") {
                avg = &row;
            } else {
                acc += row.accuracy;
                energy += row.energy;
                tp += row.throughput;
                ++n;
            }
        }
        ASSERT_NE(avg, nullptr);
        ASSERT_EQ(n, 2);
        EXPECT_NEAR(avg->accuracy, acc / n, 1e-12);
        EXPECT_NEAR(avg->energy, energy / n, 1e-12);
        EXPECT_NEAR(avg->throughput, tp / n, 1e-12);
    }
}

TEST_F(BenchRun, PerOpColumnsSumToEnergy) {
    for (const auto& row : result_->rows)
        EXPECT_NEAR(row.per_op.total(), row.energy, 1e-9) << row.arm << " " << row.rate;
}

TEST_F(BenchRun, CsvRoundTripPreservesRows) {
    const std::string path = std::string(::testing::TempDir()) + "bench_rt.csv";
    write_report_csv(result_->rows, path);
    const auto back = read_report_csv(path);
    ASSERT_EQ(back.size(), result_->rows.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_EQ(back[i].arm, result_->rows[i].arm);
        EXPECT_EQ(back[i].rate, result_->rows[i].rate);
        EXPECT_EQ(back[i].runs, result_->rows[i].runs);
        EXPECT_EQ(back[i].n_inferences, result_->rows[i].n_inferences);
        EXPECT_EQ(back[i].accuracy, result_->rows[i].accuracy);
        EXPECT_EQ(back[i].energy, result_->rows[i].energy);
        EXPECT_EQ(back[i].throughput, result_->rows[i].throughput);
        EXPECT_EQ(back[i].per_op.vote, result_->rows[i].per_op.vote);
    }
}

TEST_F(BenchRun, SummaryCarriesConfigEchoAndEnvironment) {
    EXPECT_TRUE(result_->summary.contains("config"));
    EXPECT_TRUE(result_->summary.contains("environment"));
    EXPECT_EQ(result_->summary.at("energy_unit"), "cost_units");
    EXPECT_GE(result_->summary.at("min_m").get<int>(), 1);
}

TEST(BenchDeterminism, RepeatedRunsAreByteIdentical) {
    auto j = tiny_config_json();
    j["schedule"]["runs_per_rate"] = 1;
    const auto cfg = j.get<ExperimentConfig>();
    const std::string a_path = std::string(::testing::TempDir()) + "det_a.csv";
    const std::string b_path = std::string(::testing::TempDir()) + "det_b.csv";
    write_report_csv(run_bench(cfg).rows, a_path);
    write_report_csv(run_bench(cfg).rows, b_path);
    std::ifstream fa(a_path), fb(b_path);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_FALSE(sa.str().empty());
}

TEST(BenchErrors, SecoeBelowMinMIsConfigError) {
    auto j = tiny_config_json();
    j["arms"] = nlohmann::json::array({nlohmann::json{{"kind", "secoe"}, {"m", "minm-1"}}});
    const auto cfg = j.get<ExperimentConfig>();
    EXPECT_THROW(run_bench(cfg), ConfigError);
}

std::vector<ReportRow> diff_fixture_a() {
    std::vector<ReportRow> rows;
    for (const char* rate : {"0.2", "0.5", "avg"}) {
        ReportRow r;
        r.arm = "secoe_m3";
        r.rate = rate;
        r.runs = 2;
        r.n_inferences = 48;
        r.accuracy = 0.8;
        r.energy = 100.0;
        r.throughput = 0.01;
        r.per_op.impute = 60.0;
        r.per_op.infer = 40.0;
        rows.push_back(r);
    }
    return rows;
}

TEST(ReportDiff, IdenticalReportsGiveZeroDeltas) {
    const auto a = diff_fixture_a();
    const auto deltas = report_diff(a, a);
    for (const auto& d : deltas) {
        EXPECT_DOUBLE_EQ(d.accuracy, 0.0);
        EXPECT_DOUBLE_EQ(d.energy, 0.0);
        EXPECT_DOUBLE_EQ(d.throughput, 0.0);
    }
}

TEST(ReportDiff, RelativeChangeArithmetic) {
    const auto a = diff_fixture_a();
    auto b = a;
    for (auto& r : b) r.energy = 80.0;  // 100 -> 80 is -20%
    const auto deltas = report_diff(a, b);
    for (const auto& d : deltas) EXPECT_NEAR(d.energy, -0.20, 1e-12);
}

TEST(ReportDiff, AveragedRowDeltaMatchesRecomputation) {
    auto a = diff_fixture_a();
    auto b = a;
    b[0].energy = 90.0;
    b[1].energy = 110.0;
    b[2].energy = (90.0 + 110.0) / 2.0;  // rebuilt average row
    a[2].energy = (a[0].energy + a[1].energy) / 2.0;
    const auto deltas = report_diff(a, b);
    const double expect = (b[2].energy - a[2].energy) / a[2].energy;
    EXPECT_NEAR(deltas[2].energy, expect, 1e-12);
}

TEST(ReportDiff, MismatchedGridsRejected) {
    const auto a = diff_fixture_a();
    auto b = a;
    b[1].rate = "0.6";
    EXPECT_THROW(report_diff(a, b), std::invalid_argument);
    b = a;
    b.pop_back();
    EXPECT_THROW(report_diff(a, b), std::invalid_argument);
}

TEST(ReportDiff, CsvWriterShape) {
    const auto a = diff_fixture_a();
    const auto deltas = report_diff(a, a);
    std::ostringstream out;
    write_diff_csv(deltas, out);
    std::string line;
    std::istringstream in(out.str());
    std::getline(in, line);
    EXPECT_EQ(line, "arm,rate,accuracy,energy,throughput,find,detect,impute,infer,vote");
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    EXPECT_EQ(rows, 3);
}

}  // namespace
