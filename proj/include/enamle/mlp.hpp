#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "enamle/rng.hpp"

namespace enamle {

struct MlpParams {
    int hidden_width = 32;
    int epochs = 200;
    int batch_size = 32;
    double learning_rate = 0.5;
    double lr_decay = 0.02;  // lr_t = learning_rate / (1 + lr_decay * epoch)
};

inline void to_json(nlohmann::json& j, const MlpParams& p) {
    j = {{"hidden_width", p.hidden_width},
         {"epochs", p.epochs},
         {"batch_size", p.batch_size},
         {"learning_rate", p.learning_rate},
         {"lr_decay", p.lr_decay}};
}
inline void from_json(const nlohmann::json& j, MlpParams& p) {
    if (j.contains("hidden_width")) j.at("hidden_width").get_to(p.hidden_width);
    if (j.contains("epochs")) j.at("epochs").get_to(p.epochs);
    if (j.contains("batch_size")) j.at("batch_size").get_to(p.batch_size);
    if (j.contains("learning_rate")) j.at("learning_rate").get_to(p.learning_rate);
    if (j.contains("lr_decay")) j.at("lr_decay").get_to(p.lr_decay);
}

/// Single-hidden-layer classifier: sigmoid hidden units, softmax output,
/// trained with seeded mini-batch gradient descent on cross-entropy.
struct MlpModel {
    int in_dim = 0;
    int hidden = 0;
    int n_classes = 0;
    std::vector<double> w1, b1;  // hidden x in_dim, hidden
    std::vector<double> w2, b2;  // n_classes x hidden, n_classes

    struct Gradients {
        std::vector<double> w1, b1, w2, b2;
    };

    void forward(std::span<const double> x, std::vector<double>& h,
                 std::vector<double>& z) const {
        h.assign(static_cast<std::size_t>(hidden), 0.0);
        for (int u = 0; u < hidden; ++u) {
            double a = b1[static_cast<std::size_t>(u)];
            const double* wrow = &w1[static_cast<std::size_t>(u) * static_cast<std::size_t>(in_dim)];
            for (int k = 0; k < in_dim; ++k) a += wrow[k] * x[static_cast<std::size_t>(k)];
            h[static_cast<std::size_t>(u)] = 1.0 / (1.0 + std::exp(-a));
        }
        z.assign(static_cast<std::size_t>(n_classes), 0.0);
        for (int c = 0; c < n_classes; ++c) {
            double a = b2[static_cast<std::size_t>(c)];
            const double* wrow = &w2[static_cast<std::size_t>(c) * static_cast<std::size_t>(hidden)];
            for (int u = 0; u < hidden; ++u) a += wrow[u] * h[static_cast<std::size_t>(u)];
            z[static_cast<std::size_t>(c)] = a;
        }
    }

    int predict(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != in_dim)
            throw std::invalid_argument("MlpModel::predict: feature width mismatch");
        std::vector<double> h, z;
        forward(x, h, z);
        int best = 0;
        for (int c = 1; c < n_classes; ++c)
            if (z[static_cast<std::size_t>(c)] > z[static_cast<std::size_t>(best)]) best = c;
        return best;
    }

    /// Mean cross-entropy over a batch, computed as logsumexp(z) - z[label]
    /// so it stays smooth for the finite-difference gradient check.
    double batch_loss(const std::vector<double>& X, const std::vector<int>& y) const {
        const std::size_t n = y.size();
        std::vector<double> h, z;
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            forward({X.data() + i * static_cast<std::size_t>(in_dim),
                     static_cast<std::size_t>(in_dim)},
                    h, z);
            double zmax = z[0];
            for (double v : z) zmax = std::max(zmax, v);
            double sum = 0.0;
            for (double v : z) sum += std::exp(v - zmax);
            loss += zmax + std::log(sum) - z[static_cast<std::size_t>(y[i])];
        }
        return loss / static_cast<double>(n);
    }

    Gradients batch_gradient(const std::vector<double>& X, const std::vector<int>& y) const {
        const std::size_t n = y.size();
        Gradients g;
        g.w1.assign(w1.size(), 0.0);
        g.b1.assign(b1.size(), 0.0);
        g.w2.assign(w2.size(), 0.0);
        g.b2.assign(b2.size(), 0.0);
        std::vector<double> h, z, p(static_cast<std::size_t>(n_classes));
        std::vector<double> dh(static_cast<std::size_t>(hidden));
        for (std::size_t i = 0; i < n; ++i) {
            const double* x = X.data() + i * static_cast<std::size_t>(in_dim);
            forward({x, static_cast<std::size_t>(in_dim)}, h, z);
            double zmax = z[0];
            for (double v : z) zmax = std::max(zmax, v);
            double sum = 0.0;
            for (int c = 0; c < n_classes; ++c) {
                p[static_cast<std::size_t>(c)] = std::exp(z[static_cast<std::size_t>(c)] - zmax);
                sum += p[static_cast<std::size_t>(c)];
            }
            for (int c = 0; c < n_classes; ++c) p[static_cast<std::size_t>(c)] /= sum;
            p[static_cast<std::size_t>(y[i])] -= 1.0;  // dL/dz
            for (int c = 0; c < n_classes; ++c) {
                const double dz = p[static_cast<std::size_t>(c)];
                g.b2[static_cast<std::size_t>(c)] += dz;
                double* grow = &g.w2[static_cast<std::size_t>(c) * static_cast<std::size_t>(hidden)];
                for (int u = 0; u < hidden; ++u) grow[u] += dz * h[static_cast<std::size_t>(u)];
            }
            for (int u = 0; u < hidden; ++u) {
                double acc = 0.0;
                for (int c = 0; c < n_classes; ++c)
                    acc += w2[static_cast<std::size_t>(c) * static_cast<std::size_t>(hidden) +
                              static_cast<std::size_t>(u)] *
                           p[static_cast<std::size_t>(c)];
                dh[static_cast<std::size_t>(u)] =
                    acc * h[static_cast<std::size_t>(u)] * (1.0 - h[static_cast<std::size_t>(u)]);
            }
            for (int u = 0; u < hidden; ++u) {
                const double dz = dh[static_cast<std::size_t>(u)];
                g.b1[static_cast<std::size_t>(u)] += dz;
                double* grow = &g.w1[static_cast<std::size_t>(u) * static_cast<std::size_t>(in_dim)];
                for (int k = 0; k < in_dim; ++k) grow[k] += dz * x[k];
            }
        }
        const double inv = 1.0 / static_cast<double>(n);
        for (auto* v : {&g.w1, &g.b1, &g.w2, &g.b2})
            for (double& e : *v) e *= inv;
        return g;
    }

    static MlpModel train(const std::vector<double>& X, const std::vector<int>& y, int in_dim,
                          int n_classes, const MlpParams& params, std::uint64_t seed) {
        if (in_dim < 1 || n_classes < 2) throw std::invalid_argument("MlpModel::train: bad dims");
        const std::size_t n = y.size();
        MlpModel m;
        m.in_dim = in_dim;
        m.hidden = params.hidden_width;
        m.n_classes = n_classes;
        auto eng = rng::make_engine(seed);
        const double a1 = std::sqrt(6.0 / static_cast<double>(in_dim + params.hidden_width));
        const double a2 = std::sqrt(6.0 / static_cast<double>(params.hidden_width + n_classes));
        m.w1.resize(static_cast<std::size_t>(params.hidden_width) * static_cast<std::size_t>(in_dim));
        m.b1.assign(static_cast<std::size_t>(params.hidden_width), 0.0);
        m.w2.resize(static_cast<std::size_t>(n_classes) * static_cast<std::size_t>(params.hidden_width));
        m.b2.assign(static_cast<std::size_t>(n_classes), 0.0);
        for (auto& w : m.w1) w = rng::uniform(eng, -a1, a1);
        for (auto& w : m.w2) w = rng::uniform(eng, -a2, a2);

        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::vector<double> bx;
        std::vector<int> by;
        const int bs = std::max(1, params.batch_size);
        for (int epoch = 0; epoch < params.epochs; ++epoch) {
            rng::shuffle(order, eng);
            const double lr = params.learning_rate / (1.0 + params.lr_decay * epoch);
            for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(bs)) {
                const std::size_t stop = std::min(n, start + static_cast<std::size_t>(bs));
                bx.clear();
                by.clear();
                for (std::size_t i = start; i < stop; ++i) {
                    const double* row = X.data() + order[i] * static_cast<std::size_t>(in_dim);
                    bx.insert(bx.end(), row, row + in_dim);
                    by.push_back(y[order[i]]);
                }
                const Gradients g = m.batch_gradient(bx, by);
                for (std::size_t k = 0; k < m.w1.size(); ++k) m.w1[k] -= lr * g.w1[k];
                for (std::size_t k = 0; k < m.b1.size(); ++k) m.b1[k] -= lr * g.b1[k];
                for (std::size_t k = 0; k < m.w2.size(); ++k) m.w2[k] -= lr * g.w2[k];
                for (std::size_t k = 0; k < m.b2.size(); ++k) m.b2[k] -= lr * g.b2[k];
            }
        }
        return m;
    }
};

inline void to_json(nlohmann::json& j, const MlpModel& m) {
    j = {{"in_dim", m.in_dim}, {"hidden", m.hidden},   {"n_classes", m.n_classes},
         {"w1", m.w1},         {"b1", m.b1},           {"w2", m.w2},
         {"b2", m.b2}};
}
inline void from_json(const nlohmann::json& j, MlpModel& m) {
    j.at("in_dim").get_to(m.in_dim);
    j.at("hidden").get_to(m.hidden);
    j.at("n_classes").get_to(m.n_classes);
    j.at("w1").get_to(m.w1);
    j.at("b1").get_to(m.b1);
    j.at("w2").get_to(m.w2);
    j.at("b2").get_to(m.b2);
}

}  // namespace enamle
