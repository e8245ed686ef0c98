#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <concepts>
#include <cstdint>

namespace btcf {

/// Visits a single dense Eigen tensor (or several with identical shapes).
template <typename F, typename... Tensors>
    requires(std::derived_from<std::remove_cvref_t<Tensors>,
                               Eigen::PlainObjectBase<std::remove_cvref_t<Tensors>>> &&
             ...)
void for_each_tensor(F&& f, Tensors&&... tensors) {
    f(tensors...);
}

template <typename Derived>
    requires std::derived_from<Derived, Eigen::PlainObjectBase<Derived>>
Derived zeros_like(const Derived& tensor) {
    return Derived::Zero(tensor.rows(), tensor.cols());
}

/// Moment estimates for every tensor of a parameter set, plus the step count.
template <typename Params>
struct AdamState {
    Params m;
    Params v;
    std::int64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    explicit AdamState(const Params& shape) : m(zeros_like(shape)), v(zeros_like(shape)) {}
};

/// One bias-corrected Adam update of `params` in place.
template <typename Params>
void adam_step(Params& params, const Params& grads, AdamState<Params>& state, double learning_rate) {
    ++state.step;
    const double b1 = state.beta1;
    const double b2 = state.beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    const double eps = state.epsilon;
    for_each_tensor(
        [&](auto&& p, auto&& g, auto&& m, auto&& v) {
            using Scalar = typename std::remove_cvref_t<decltype(p)>::Scalar;
            m = Scalar(b1) * m + Scalar(1.0 - b1) * g;
            v = Scalar(b2) * v + Scalar(1.0 - b2) * g.cwiseAbs2();
            const auto m_hat = m.array() / Scalar(correction1);
            const auto v_hat = v.array() / Scalar(correction2);
            p.array() -= Scalar(learning_rate) * m_hat / (v_hat.sqrt() + Scalar(eps));
        },
        params, grads, state.m, state.v);
}

}  // namespace btcf
