#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "btcf/lstm.hpp"

namespace btcf::test {

// Plain-loop recomputation of the cell recurrences, independent of the
// library's vectorised forward pass.
inline double reference_prediction(const lstm::LstmModel<double>& m, const Eigen::MatrixXd& window) {
    const auto H = static_cast<int>(m.hidden_size());
    const auto F = static_cast<int>(m.n_features());
    std::vector<double> h(H, 0.0), c(H, 0.0);
    auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    for (int t = 0; t < window.rows(); ++t) {
        std::vector<double> z(H + F);
        for (int j = 0; j < H; ++j) z[j] = h[j];
        for (int j = 0; j < F; ++j) z[H + j] = window(t, j);
        std::vector<double> pre[4];
        for (int g = 0; g < 4; ++g) {
            pre[g].assign(H, 0.0);
            for (int r = 0; r < H; ++r) {
                double acc = m.b[g](r);
                for (int k = 0; k < H + F; ++k) acc += m.W[g](r, k) * z[k];
                pre[g][r] = acc;
            }
        }
        for (int r = 0; r < H; ++r) {
            const double f = sig(pre[lstm::kForget][r]);
            const double i = sig(pre[lstm::kInput][r]);
            const double o = sig(pre[lstm::kOutput][r]);
            const double g = std::tanh(pre[lstm::kCandidate][r]);
            c[r] = f * c[r] + i * g;
            h[r] = o * std::tanh(c[r]);
        }
    }
    double y = m.bd;
    for (int r = 0; r < H; ++r) y += m.wd(r) * h[r];
    return y;
}

inline lstm::LstmModel<double> random_model(Eigen::Index hidden, Eigen::Index features, std::mt19937_64& rng,
                                            double spread = 0.8) {
    std::uniform_real_distribution<double> u(-spread, spread);
    lstm::LstmModel<double> m(hidden, features);
    lstm::for_each_tensor(
        [&](auto&& t) {
            for (Eigen::Index r = 0; r < t.rows(); ++r)
                for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = u(rng);
        },
        m);
    return m;
}

struct GradientCheck {
    double max_relative_error = 0.0;
    std::size_t parameters = 0;
};

// Central differences of the prediction against backward() with
// d_prediction = 1. Relative error is |a - n| / max(|a|, |n|, floor).
inline GradientCheck check_gradients(const lstm::LstmModel<double>& model, const Eigen::MatrixXd& window,
                                     double h = 1e-5, double floor = 1e-8) {
    const auto fwd = lstm::forward(model, window);
    const auto analytic = lstm::backward(model, fwd.cache, 1.0);
    GradientCheck out;
    lstm::LstmModel<double> probe = model;
    std::vector<double*> params;
    std::vector<double> grads;
    lstm::for_each_tensor(
        [&](auto&& p, auto&& g) {
            for (Eigen::Index r = 0; r < p.rows(); ++r)
                for (Eigen::Index c = 0; c < p.cols(); ++c) {
                    params.push_back(&p(r, c));
                    grads.push_back(g(r, c));
                }
        },
        probe, analytic);
    for (std::size_t k = 0; k < params.size(); ++k) {
        double& x = *params[k];
        const double saved = x;
        x = saved + h;
        const double up = lstm::predict(probe, window);
        x = saved - h;
        const double down = lstm::predict(probe, window);
        x = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(grads[k]), std::abs(numeric), floor});
        out.max_relative_error = std::max(out.max_relative_error, std::abs(grads[k] - numeric) / denom);
    }
    out.parameters = params.size();
    return out;
}

}  // namespace btcf::test
