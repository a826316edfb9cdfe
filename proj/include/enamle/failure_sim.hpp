#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "enamle/dataset.hpp"
#include "enamle/inference.hpp"
#include "enamle/rng.hpp"

namespace enamle {

/// Sweep description: which missing-data rates to test, how many seeded runs
/// per rate, and whether one failure set persists across a run (default,
/// models hard sensor failures) or is redrawn per row.
struct FailureSchedule {
    std::vector<double> rates;  // strictly increasing, each in (0, 1]
    int runs_per_rate = 10;
    std::uint64_t master_seed = 0;
    bool per_row_failures = false;

    void validate() const {
        if (rates.empty()) throw std::invalid_argument("schedule: no rates");
        for (std::size_t i = 0; i < rates.size(); ++i) {
            if (!(rates[i] > 0.0 && rates[i] <= 1.0))
                throw std::invalid_argument("schedule: rate out of (0, 1]");
            if (i > 0 && rates[i] <= rates[i - 1])
                throw std::invalid_argument("schedule: rates must be strictly increasing");
        }
        if (runs_per_rate < 1) throw std::invalid_argument("schedule: runs_per_rate must be >= 1");
    }
};

/// Draws max(1, round(rate * S)) distinct sensor indices, seeded. Sorted.
inline std::vector<int> inject(int n_sensors, double rate, std::uint64_t seed) {
    if (!(rate > 0.0 && rate <= 1.0)) throw std::invalid_argument("inject: rate out of (0, 1]");
    if (n_sensors < 1) throw std::invalid_argument("inject: no sensors");
    const int k = std::max(1L, std::lround(rate * static_cast<double>(n_sensors)));
    auto eng = rng::make_engine(seed);
    auto picked = rng::sample_without_replacement(n_sensors, k, eng);
    std::sort(picked.begin(), picked.end());
    return picked;
}

/// Name-level variant of inject().
inline std::vector<std::string> inject_names(const std::vector<std::string>& sensors, double rate,
                                             std::uint64_t seed) {
    const auto idx = inject(static_cast<int>(sensors.size()), rate, seed);
    std::vector<std::string> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(sensors[static_cast<std::size_t>(i)]);
    return out;
}

/// Pure derivation of the per-(rate, run) failure seed.
inline std::uint64_t sweep_child_seed(std::uint64_t master_seed, std::size_t rate_index,
                                      int run_index) {
    return rng::derive_seed(master_seed, 0xFA11, rate_index, static_cast<std::uint64_t>(run_index));
}

/// Runs `engine` over every test row for each (rate, run) cell. The failure
/// seed depends only on (master_seed, rate index, run index) so different
/// policies evaluated against the same schedule see identical failure sets.
///
/// Sink signature: (rate_index, run_index, row, request, outcome).
template <typename EngineFn, typename SinkFn>
void run_sweep(const FailureSchedule& schedule, const Dataset& d, EngineFn&& engine,
               SinkFn&& sink) {
    schedule.validate();
    const auto test_rows = d.rows_tagged(SplitTag::test);
    if (test_rows.empty()) throw std::invalid_argument("run_sweep: empty test partition");
    const int s = static_cast<int>(d.n_sensors());

    for (std::size_t ri = 0; ri < schedule.rates.size(); ++ri) {
        const double rate = schedule.rates[ri];
        for (int run = 0; run < schedule.runs_per_rate; ++run) {
            const std::uint64_t child = sweep_child_seed(schedule.master_seed, ri, run);
            std::vector<int> run_failed;
            if (!schedule.per_row_failures) run_failed = inject(s, rate, child);
            for (std::size_t k = 0; k < test_rows.size(); ++k) {
                const std::size_t row = test_rows[k];
                InferenceRequest req;
                const auto r = d.row(row);
                req.values.assign(r.begin(), r.end());
                req.failed = schedule.per_row_failures
                                 ? inject(s, rate, rng::derive_seed(child, k))
                                 : run_failed;
                const InferenceOutcome out = engine(req);
                sink(ri, run, row, req, out);
            }
        }
    }
}

}  // namespace enamle
