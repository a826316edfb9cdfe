#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace enamle {

struct SvmParams {
    int epochs = 100;
    double regularization = 1e-3;
    double learning_rate = 2.0;
    double lr_decay = 0.05;  // lr_t = learning_rate / (1 + lr_decay * epoch)
};

inline void to_json(nlohmann::json& j, const SvmParams& p) {
    j = {{"epochs", p.epochs},
         {"regularization", p.regularization},
         {"learning_rate", p.learning_rate},
         {"lr_decay", p.lr_decay}};
}
inline void from_json(const nlohmann::json& j, SvmParams& p) {
    if (j.contains("epochs")) j.at("epochs").get_to(p.epochs);
    if (j.contains("regularization")) j.at("regularization").get_to(p.regularization);
    if (j.contains("learning_rate")) j.at("learning_rate").get_to(p.learning_rate);
    if (j.contains("lr_decay")) j.at("lr_decay").get_to(p.lr_decay);
}

/// One-vs-rest linear classifier trained by full-batch subgradient descent
/// on the regularized hinge loss; the returned weights are the Polyak
/// average of the per-epoch iterates.
struct SvmModel {
    int in_dim = 0;
    int n_classes = 0;
    std::vector<double> weights;  // n_classes x in_dim
    std::vector<double> bias;     // n_classes

    double score(int cls, std::span<const double> x) const {
        const double* w = &weights[static_cast<std::size_t>(cls) * static_cast<std::size_t>(in_dim)];
        double s = bias[static_cast<std::size_t>(cls)];
        for (int k = 0; k < in_dim; ++k) s += w[k] * x[static_cast<std::size_t>(k)];
        return s;
    }

    int predict(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != in_dim)
            throw std::invalid_argument("SvmModel::predict: feature width mismatch");
        int best = 0;
        double best_score = score(0, x);
        for (int c = 1; c < n_classes; ++c) {
            const double s = score(c, x);
            if (s > best_score) {
                best_score = s;
                best = c;
            }
        }
        return best;
    }

    /// Regularized hinge objective for one binary problem:
    /// lambda/2 ||w||^2 + mean_i max(0, 1 - y_i (w.x_i + b)).
    static double objective(const std::vector<double>& w, double b, const std::vector<double>& X,
                            const std::vector<int>& ypm, int in_dim, double lambda) {
        double reg = 0.0;
        for (double v : w) reg += v * v;
        reg *= 0.5 * lambda;
        double hinge = 0.0;
        const std::size_t n = ypm.size();
        for (std::size_t i = 0; i < n; ++i) {
            double s = b;
            const double* x = X.data() + i * static_cast<std::size_t>(in_dim);
            for (int k = 0; k < in_dim; ++k) s += w[static_cast<std::size_t>(k)] * x[k];
            const double margin = 1.0 - static_cast<double>(ypm[i]) * s;
            if (margin > 0.0) hinge += margin;
        }
        return reg + hinge / static_cast<double>(n);
    }

    /// When `objective_trace` is given it receives, per class, the averaged
    /// iterate's objective after each epoch.
    static SvmModel train(const std::vector<double>& X, const std::vector<int>& y, int in_dim,
                          int n_classes, const SvmParams& params, std::uint64_t /*seed*/,
                          std::vector<std::vector<double>>* objective_trace = nullptr) {
        if (in_dim < 1 || n_classes < 2) throw std::invalid_argument("SvmModel::train: bad dims");
        const std::size_t n = y.size();
        SvmModel m;
        m.in_dim = in_dim;
        m.n_classes = n_classes;
        m.weights.assign(static_cast<std::size_t>(n_classes) * static_cast<std::size_t>(in_dim), 0.0);
        m.bias.assign(static_cast<std::size_t>(n_classes), 0.0);
        if (objective_trace) objective_trace->assign(static_cast<std::size_t>(n_classes), {});

        std::vector<int> ypm(n);
        std::vector<double> w(static_cast<std::size_t>(in_dim));
        std::vector<double> gw(static_cast<std::size_t>(in_dim));
        std::vector<double> wavg(static_cast<std::size_t>(in_dim));
        for (int cls = 0; cls < n_classes; ++cls) {
            for (std::size_t i = 0; i < n; ++i) ypm[i] = y[i] == cls ? 1 : -1;
            std::fill(w.begin(), w.end(), 0.0);
            double b = 0.0;
            std::fill(wavg.begin(), wavg.end(), 0.0);
            double bavg = 0.0;
            for (int epoch = 0; epoch < params.epochs; ++epoch) {
                std::fill(gw.begin(), gw.end(), 0.0);
                double gb = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    double s = b;
                    const double* x = X.data() + i * static_cast<std::size_t>(in_dim);
                    for (int k = 0; k < in_dim; ++k) s += w[static_cast<std::size_t>(k)] * x[k];
                    if (static_cast<double>(ypm[i]) * s < 1.0) {
                        const double yi = static_cast<double>(ypm[i]);
                        for (int k = 0; k < in_dim; ++k)
                            gw[static_cast<std::size_t>(k)] -= yi * x[k];
                        gb -= yi;
                    }
                }
                const double inv = 1.0 / static_cast<double>(n);
                const double lr = params.learning_rate / (1.0 + params.lr_decay * epoch);
                for (int k = 0; k < in_dim; ++k) {
                    const std::size_t kk = static_cast<std::size_t>(k);
                    w[kk] -= lr * (params.regularization * w[kk] + gw[kk] * inv);
                }
                b -= lr * gb * inv;
                // running Polyak average over epochs 1..e+1
                const double t = static_cast<double>(epoch + 1);
                for (int k = 0; k < in_dim; ++k) {
                    const std::size_t kk = static_cast<std::size_t>(k);
                    wavg[kk] += (w[kk] - wavg[kk]) / t;
                }
                bavg += (b - bavg) / t;
                if (objective_trace)
                    (*objective_trace)[static_cast<std::size_t>(cls)].push_back(
                        objective(wavg, bavg, X, ypm, in_dim, params.regularization));
            }
            std::copy(wavg.begin(), wavg.end(),
                      m.weights.begin() +
                          static_cast<std::ptrdiff_t>(static_cast<std::size_t>(cls) *
                                                      static_cast<std::size_t>(in_dim)));
            m.bias[static_cast<std::size_t>(cls)] = bavg;
        }
        return m;
    }
};

inline void to_json(nlohmann::json& j, const SvmModel& m) {
    j = {{"in_dim", m.in_dim},
         {"n_classes", m.n_classes},
         {"weights", m.weights},
         {"bias", m.bias}};
}
inline void from_json(const nlohmann::json& j, SvmModel& m) {
    j.at("in_dim").get_to(m.in_dim);
    j.at("n_classes").get_to(m.n_classes);
    j.at("weights").get_to(m.weights);
    j.at("bias").get_to(m.bias);
}

}  // namespace enamle
