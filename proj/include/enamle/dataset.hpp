#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "enamle/rng.hpp"

namespace enamle {

enum class SplitTag : std::uint8_t { none, train, test };

/// Labeled sensor dataset: N rows over S named sensor columns plus a class
/// label per row. Feature storage is row-major.
struct Dataset {
    std::vector<std::string> sensor_names;
    std::vector<std::string> class_names;   // label vocabulary, first-appearance order
    std::vector<double> features;           // n_rows x n_sensors
    std::vector<int> labels;                // index into class_names
    std::vector<SplitTag> split;            // per row; all none until split()
    bool normalized = false;
    // Per-column scaling stats, filled by normalize(). Needed to map raw
    // inference requests into model space after training.
    std::vector<double> norm_min;
    std::vector<double> norm_max;

    std::size_t n_rows() const { return labels.size(); }
    std::size_t n_sensors() const { return sensor_names.size(); }

    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * n_sensors(), n_sensors()};
    }
    double at(std::size_t i, std::size_t j) const { return features[i * n_sensors() + j]; }

    bool has_split() const {
        return std::any_of(split.begin(), split.end(),
                           [](SplitTag t) { return t != SplitTag::none; });
    }

    int sensor_index(const std::string& name) const {
        for (std::size_t j = 0; j < sensor_names.size(); ++j)
            if (sensor_names[j] == name) return static_cast<int>(j);
        return -1;
    }

    std::vector<std::size_t> rows_tagged(SplitTag tag) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < split.size(); ++i)
            if (split[i] == tag) out.push_back(i);
        return out;
    }
};

namespace detail {

inline std::string strip(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(strip(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    cells.push_back(strip(cur));
    return cells;
}

inline bool parse_double(const std::string& s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

}  // namespace detail

/// Parses a headered CSV file; every column except `label_column` becomes a
/// sensor, in header order. No split is assigned.
inline Dataset load_csv(const std::string& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file: " + path);
    const auto header = detail::split_csv_line(line);

    int label_col = -1;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (header[j] == label_column) label_col = static_cast<int>(j);
    if (label_col < 0)
        throw std::runtime_error("load_csv: label column not found: " + label_column);

    Dataset d;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (static_cast<int>(j) != label_col) d.sensor_names.push_back(header[j]);
    if (d.sensor_names.size() < 2)
        throw std::runtime_error("load_csv: need at least 2 feature columns");

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::strip(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error("load_csv: ragged row at line " + std::to_string(line_no));
        for (std::size_t j = 0; j < cells.size(); ++j) {
            if (static_cast<int>(j) == label_col) continue;
            double v;
            if (!detail::parse_double(cells[j], v))
                throw std::runtime_error("load_csv: non-numeric feature cell at line " +
                                         std::to_string(line_no) + ", column " + header[j]);
            d.features.push_back(v);
        }
        const std::string& cls = cells[static_cast<std::size_t>(label_col)];
        int ci = -1;
        for (std::size_t k = 0; k < d.class_names.size(); ++k)
            if (d.class_names[k] == cls) ci = static_cast<int>(k);
        if (ci < 0) {
            ci = static_cast<int>(d.class_names.size());
            d.class_names.push_back(cls);
        }
        d.labels.push_back(ci);
    }
    d.split.assign(d.n_rows(), SplitTag::none);
    return d;
}

inline void save_csv(const Dataset& d, const std::string& path,
                     const std::string& label_column = "label") {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_csv: cannot open file for writing: " + path);
    for (const auto& name : d.sensor_names) out << name << ',';
    out << label_column << '\n';
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        for (std::size_t j = 0; j < d.n_sensors(); ++j)
            out << detail::format_double(d.at(i, j)) << ',';
        out << d.class_names[static_cast<std::size_t>(d.labels[i])] << '\n';
    }
}

/// Min-max scales every column to [0, 1]. When a split exists the statistics
/// come from training rows only and test values are clipped into [0, 1];
/// otherwise whole-column statistics are used. Constant columns map to 0.
inline Dataset normalize(const Dataset& d) {
    if (d.normalized) throw std::invalid_argument("normalize: dataset already normalized");
    Dataset out = d;
    const std::size_t s = d.n_sensors();
    out.norm_min.assign(s, 0.0);
    out.norm_max.assign(s, 0.0);

    std::vector<std::size_t> stat_rows;
    if (d.has_split())
        stat_rows = d.rows_tagged(SplitTag::train);
    else {
        stat_rows.resize(d.n_rows());
        std::iota(stat_rows.begin(), stat_rows.end(), std::size_t{0});
    }
    if (stat_rows.empty()) throw std::invalid_argument("normalize: no rows to compute statistics");

    for (std::size_t j = 0; j < s; ++j) {
        double lo = d.at(stat_rows[0], j), hi = lo;
        for (std::size_t i : stat_rows) {
            lo = std::min(lo, d.at(i, j));
            hi = std::max(hi, d.at(i, j));
        }
        out.norm_min[j] = lo;
        out.norm_max[j] = hi;
        const double range = hi - lo;
        for (std::size_t i = 0; i < d.n_rows(); ++i) {
            double& v = out.features[i * s + j];
            v = range > 0.0 ? (v - lo) / range : 0.0;
            v = std::clamp(v, 0.0, 1.0);
        }
    }
    out.normalized = true;
    return out;
}

/// Seeded stratified train/test assignment. The train row count targets
/// round(train_fraction * N); classes with at least two rows keep at least
/// one row on each side. Classes with a single row go to train with a
/// warning.
inline Dataset split(const Dataset& d, double train_fraction, std::uint64_t seed,
                     std::vector<std::string>* warnings = nullptr) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("split: train_fraction must be in (0, 1)");
    const std::size_t n = d.n_rows();
    if (n == 0) throw std::invalid_argument("split: empty dataset");

    const std::size_t n_classes = d.class_names.size();
    std::vector<std::vector<std::size_t>> by_class(n_classes);
    for (std::size_t i = 0; i < n; ++i)
        by_class[static_cast<std::size_t>(d.labels[i])].push_back(i);

    const long target_total = std::lround(train_fraction * static_cast<double>(n));

    struct ClassQuota {
        std::size_t cls;
        long count;      // rows in class
        long train;      // assigned train rows
        double frac;     // fractional remainder of the ideal quota
        bool stratified; // has >= 2 rows, participates in rebalancing
    };
    std::vector<ClassQuota> quotas;
    long assigned = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        const long cnt = static_cast<long>(by_class[c].size());
        if (cnt == 0) continue;
        ClassQuota q{c, cnt, 0, 0.0, cnt >= 2};
        if (!q.stratified) {
            q.train = cnt;  // lone row cannot be stratified
            if (warnings)
                warnings->push_back("split: class '" + d.class_names[c] +
                                    "' has fewer than 2 rows; placed in train");
        } else {
            const double ideal = train_fraction * static_cast<double>(cnt);
            q.train = static_cast<long>(ideal);
            q.frac = ideal - static_cast<double>(q.train);
            q.train = std::clamp(q.train, 1L, cnt - 1);
        }
        assigned += q.train;
        quotas.push_back(q);
    }

    // Largest-remainder rebalancing toward the global target, honoring the
    // one-test-row floor per class.
    auto can_grow = [](const ClassQuota& q) { return q.stratified && q.train < q.count - 1; };
    auto can_shrink = [](const ClassQuota& q) { return q.stratified && q.train > 1; };
    while (assigned < target_total) {
        ClassQuota* best = nullptr;
        for (auto& q : quotas)
            if (can_grow(q) && (!best || q.frac > best->frac)) best = &q;
        if (!best) break;
        best->train += 1;
        best->frac -= 1.0;
        ++assigned;
    }
    while (assigned > target_total) {
        ClassQuota* best = nullptr;
        for (auto& q : quotas)
            if (can_shrink(q) && (!best || q.frac < best->frac)) best = &q;
        if (!best) break;
        best->train -= 1;
        best->frac += 1.0;
        --assigned;
    }

    Dataset out = d;
    out.split.assign(n, SplitTag::test);
    for (const auto& q : quotas) {
        auto rows = by_class[q.cls];
        auto eng = rng::make_engine(rng::derive_seed(seed, q.cls));
        rng::shuffle(rows, eng);
        for (long i = 0; i < q.count; ++i)
            out.split[rows[static_cast<std::size_t>(i)]] =
                i < q.train ? SplitTag::train : SplitTag::test;
    }
    return out;
}

/// Generates a dataset with planted correlation structure: one latent factor
/// per group and row, each sensor in the group equal to that latent plus
/// independent Gaussian noise. Labels are rank-quantile bins of a fixed
/// alternating-sign combination of the latent factors.
inline Dataset synthesize(const std::vector<int>& group_sizes, int n_rows, int n_classes,
                          double noise, std::uint64_t seed) {
    if (group_sizes.empty()) throw std::invalid_argument("synthesize: no groups");
    for (int g : group_sizes)
        if (g < 1) throw std::invalid_argument("synthesize: group sizes must be positive");
    if (n_classes < 2) throw std::invalid_argument("synthesize: need at least 2 classes");
    if (n_rows < n_classes) throw std::invalid_argument("synthesize: need at least one row per class");
    if (noise < 0.0) throw std::invalid_argument("synthesize: noise must be non-negative");

    const std::size_t n_groups = group_sizes.size();
    Dataset d;
    for (std::size_t g = 0; g < n_groups; ++g)
        for (int k = 0; k < group_sizes[g]; ++k)
            d.sensor_names.push_back("g" + std::to_string(g) + "_s" + std::to_string(k));
    const std::size_t s = d.sensor_names.size();
    if (s < 2) throw std::invalid_argument("synthesize: need at least 2 sensors in total");

    auto latent_eng = rng::make_engine(rng::derive_seed(seed, 0x1a7e27));
    auto noise_eng = rng::make_engine(rng::derive_seed(seed, 0x5e15e));

    // Latents are a balanced two-mode mixture at +/-1. The column mean then
    // sits in a low-density valley, so mean-imputing a failed sensor moves a
    // sample off the data manifold the way real concurrent failures do.
    // Within-group correlation stays near 1 for small noise.
    std::vector<double> latents(static_cast<std::size_t>(n_rows) * n_groups);
    for (auto& v : latents) {
        const double mode = rng::uniform01(latent_eng) < 0.5 ? -1.0 : 1.0;
        v = mode + 0.25 * rng::normal(latent_eng);
    }

    d.features.resize(static_cast<std::size_t>(n_rows) * s);
    for (int i = 0; i < n_rows; ++i) {
        std::size_t col = 0;
        for (std::size_t g = 0; g < n_groups; ++g) {
            const double latent = latents[static_cast<std::size_t>(i) * n_groups + g];
            for (int k = 0; k < group_sizes[g]; ++k)
                d.features[static_cast<std::size_t>(i) * s + col++] =
                    latent + noise * rng::normal(noise_eng);
        }
    }

    // Alternating-sign weights keep the class score sensitive to every
    // group while centering mean-imputed rows near the middle bins.
    std::vector<double> score(static_cast<std::size_t>(n_rows));
    for (int i = 0; i < n_rows; ++i) {
        double acc = 0.0;
        for (std::size_t g = 0; g < n_groups; ++g) {
            const double w = (g % 2 == 0 ? 1.0 : -1.0) * (1.0 + 0.25 * static_cast<double>(g));
            acc += w * latents[static_cast<std::size_t>(i) * n_groups + g];
        }
        score[static_cast<std::size_t>(i)] = acc;
    }
    std::vector<std::size_t> order(score.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return score[a] != score[b] ? score[a] < score[b] : a < b;
    });
    d.labels.assign(static_cast<std::size_t>(n_rows), 0);
    for (std::size_t r = 0; r < order.size(); ++r)
        d.labels[order[r]] = static_cast<int>((r * static_cast<std::size_t>(n_classes)) /
                                              static_cast<std::size_t>(n_rows));
    for (int c = 0; c < n_classes; ++c) d.class_names.push_back("c" + std::to_string(c));
    d.split.assign(d.n_rows(), SplitTag::none);
    return d;
}

/// Ground-truth partition implied by synthesize()'s naming scheme.
inline std::vector<std::vector<std::string>> planted_groups(const std::vector<int>& group_sizes) {
    std::vector<std::vector<std::string>> out;
    for (std::size_t g = 0; g < group_sizes.size(); ++g) {
        std::vector<std::string> grp;
        for (int k = 0; k < group_sizes[g]; ++k)
            grp.push_back("g" + std::to_string(g) + "_s" + std::to_string(k));
        out.push_back(std::move(grp));
    }
    return out;
}

}  // namespace enamle
