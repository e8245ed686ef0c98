#include "btcf/arima.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "btcf/csv.hpp"

namespace btcf::arima {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Conditional innovations e_t for t in [p, m), zero before p, together with
// their Jacobian with respect to (c, phi, theta) (intercept column only when
// requested).
struct CssEvaluation {
    VectorXd innovations;  // length m - p
    MatrixXd jacobian;     // (m - p) x n_params
    double objective = 0.0;
};

CssEvaluation evaluate_css(const VectorXd& w, int p, int q, bool intercept, double c,
                           const VectorXd& phi, const VectorXd& theta, bool with_jacobian) {
    const Index m = w.size();
    const Index rows = m - p;
    const Index offset = intercept ? 1 : 0;
    const Index n_params = offset + p + q;
    CssEvaluation ev;
    ev.innovations = VectorXd::Zero(rows);
    if (with_jacobian) ev.jacobian = MatrixXd::Zero(rows, n_params);
    for (Index r = 0; r < rows; ++r) {
        const Index t = r + p;
        double e = w(t) - c;
        for (int i = 1; i <= p; ++i) e -= phi(i - 1) * w(t - i);
        for (int j = 1; j <= q; ++j) {
            if (r - j >= 0) e -= theta(j - 1) * ev.innovations(r - j);
        }
        ev.innovations(r) = e;
        if (with_jacobian) {
            auto row = ev.jacobian.row(r);
            if (intercept) row(0) = -1.0;
            for (int i = 1; i <= p; ++i) row(offset + i - 1) = -w(t - i);
            for (int k = 1; k <= q; ++k) {
                if (r - k >= 0) row(offset + p + k - 1) = -ev.innovations(r - k);
            }
            for (int j = 1; j <= q; ++j) {
                if (r - j >= 0) row -= theta(j - 1) * ev.jacobian.row(r - j);
            }
        }
    }
    ev.objective = ev.innovations.squaredNorm();
    return ev;
}

bool is_constant(const Eigen::Ref<const VectorXd>& v) {
    if (v.size() == 0) return true;
    const double lo = v.minCoeff();
    const double hi = v.maxCoeff();
    return hi - lo <= 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
}

VectorXd inverse_root_moduli(const VectorXd& coeffs, double sign) {
    // Companion matrix of z^k - sign*(c1 z^{k-1} + ... + ck).
    const Index k = coeffs.size();
    if (k == 0) return VectorXd();
    MatrixXd companion = MatrixXd::Zero(k, k);
    companion.row(0) = sign * coeffs.transpose();
    if (k > 1) companion.bottomLeftCorner(k - 1, k - 1).setIdentity();
    Eigen::EigenSolver<MatrixXd> solver(companion, false);
    VectorXd moduli = solver.eigenvalues().cwiseAbs();
    std::sort(moduli.data(), moduli.data() + moduli.size(), std::greater<>());
    return moduli;
}

}  // namespace

void ArimaOrder::validate() const {
    if (p < 0 || d < 0 || q < 0) throw DomainError("ARIMA orders must be non-negative");
    if (p + q == 0 && d == 0) throw DomainError("ARIMA(0,0,0) is degenerate");
}

std::string ArimaOrder::name() const {
    return "ARIMA(" + std::to_string(p) + "," + std::to_string(d) + "," + std::to_string(q) + ")";
}

ArimaOrder parse_order(std::string_view text) {
    const auto fields = csv::split_line(text);
    if (fields.size() != 3) throw DomainError("ARIMA order must be p,d,q: '" + std::string(text) + "'");
    ArimaOrder order;
    int* slots[] = {&order.p, &order.d, &order.q};
    for (std::size_t i = 0; i < 3; ++i) {
        const auto v = csv::parse_integer(fields[i]);
        if (!v || *v < 0 || *v > 1000) {
            throw DomainError("bad ARIMA order component '" + fields[i] + "'");
        }
        *slots[i] = static_cast<int>(*v);
    }
    order.validate();
    return order;
}

ArimaModel fit(const Eigen::Ref<const VectorXd>& series, const ArimaOrder& order,
               const FitOptions& options) {
    order.validate();
    const int p = order.p, d = order.d, q = order.q;
    if (series.size() <= static_cast<Index>(d + p + q + 1)) {
        throw DataError("series of length " + std::to_string(series.size()) + " is too short for " +
                        order.name());
    }
    if (!series.allFinite()) throw DataError("series contains non-finite values");

    ArimaModel model;
    model.order = order;
    model.n_observations = static_cast<std::size_t>(series.size());

    const VectorXd w = difference(series, d);
    const Index m = w.size();
    const Index rows = m - p;
    const bool intercept = options.include_intercept;

    // Level tails: last value of each differencing level.
    model.level_tail.resize(d);
    {
        VectorXd level = series;
        for (int k = 0; k < d; ++k) {
            model.level_tail(k) = level(level.size() - 1);
            const Index len = level.size() - 1;
            level = (level.tail(len) - level.head(len)).eval();
        }
    }

    // AR-only least squares (also the Gauss-Newton start when q > 0).
    double c = 0.0;
    VectorXd phi = VectorXd::Zero(p);
    if (p > 0 && is_constant(w.head(m - 1))) {
        model.warnings.push_back("singular design: differenced series is constant; fitted " +
                                 std::string(intercept ? "intercept only" : "zero model"));
        if (intercept) c = w.tail(rows).mean();
    } else if (p > 0 || intercept) {
        const Index offset = intercept ? 1 : 0;
        MatrixXd X(rows, offset + p);
        if (intercept) X.col(0).setOnes();
        for (int i = 1; i <= p; ++i) X.col(offset + i - 1) = w.segment(p - i, rows);
        const VectorXd y = w.tail(rows);
        Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(X);
        const VectorXd beta = cod.solve(y);
        if (cod.rank() < X.cols()) {
            model.warnings.push_back("rank-deficient design (rank " + std::to_string(cod.rank()) +
                                     " of " + std::to_string(X.cols()) +
                                     "); minimum-norm least-squares solution used");
        }
        if (intercept) c = beta(0);
        phi = beta.segment(offset, p);
    }

    VectorXd theta = VectorXd::Zero(q);
    CssEvaluation ev = evaluate_css(w, p, q, intercept, c, phi, theta, q > 0);
    if (q > 0) {
        const Index offset = intercept ? 1 : 0;
        bool converged = false;
        for (int iter = 0; iter < options.max_iterations; ++iter) {
            model.iterations = iter + 1;
            Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(ev.jacobian);
            const VectorXd step = cod.solve(-ev.innovations);
            double alpha = 1.0;
            bool improved = false;
            for (int halving = 0; halving < 40; ++halving, alpha *= 0.5) {
                const double c_try = intercept ? c + alpha * step(0) : 0.0;
                const VectorXd phi_try = phi + alpha * step.segment(offset, p);
                const VectorXd theta_try = theta + alpha * step.segment(offset + p, q);
                CssEvaluation trial =
                    evaluate_css(w, p, q, intercept, c_try, phi_try, theta_try, true);
                if (std::isfinite(trial.objective) && trial.objective < ev.objective) {
                    const double decrease = ev.objective - trial.objective;
                    c = c_try;
                    phi = phi_try;
                    theta = theta_try;
                    const double previous = ev.objective;
                    ev = std::move(trial);
                    improved = true;
                    if (decrease <= options.tolerance * (previous + 1e-300)) converged = true;
                    break;
                }
            }
            // No descent along the Gauss-Newton direction: stationary point.
            if (!improved || converged) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            throw ConvergenceError(order.name() + " did not converge after " +
                                       std::to_string(options.max_iterations) +
                                       " iterations (objective " +
                                       csv::format_number(ev.objective) + ")",
                                   ev.objective);
        }
    }

    model.intercept = c;
    model.ar = phi;
    model.ma = theta;
    model.sigma2 = rows > 0 ? ev.objective / static_cast<double>(rows) : 0.0;
    model.recent_diffs = w.tail(p);
    model.recent_innovations = VectorXd::Zero(q);
    for (int j = 0; j < q && j < rows; ++j) {
        model.recent_innovations(q - 1 - j) = ev.innovations(rows - 1 - j);
    }
    if (!std::isfinite(model.intercept) || !model.ar.allFinite() || !model.ma.allFinite()) {
        throw DataError(order.name() + " produced non-finite coefficients");
    }
    return model;
}

namespace {
double forecast_differenced(const ArimaModel& model) {
    const int p = model.order.p, q = model.order.q;
    double w_hat = model.intercept;
    for (int i = 1; i <= p; ++i) w_hat += model.ar(i - 1) * model.recent_diffs(p - i);
    for (int j = 1; j <= q; ++j) w_hat += model.ma(j - 1) * model.recent_innovations(q - j);
    return w_hat;
}
}  // namespace

double forecast_one(const ArimaModel& model) {
    double value = forecast_differenced(model);
    for (Index k = model.level_tail.size(); k-- > 0;) value += model.level_tail(k);
    return value;
}

void update(ArimaModel& model, double observation) {
    const int p = model.order.p, q = model.order.q, d = model.order.d;
    const double w_hat = forecast_differenced(model);
    double level_value = observation;
    for (int k = 0; k < d; ++k) {
        const double next = level_value - model.level_tail(k);
        model.level_tail(k) = level_value;
        level_value = next;
    }
    const double w_new = level_value;
    if (p > 0) {
        model.recent_diffs.head(p - 1) = model.recent_diffs.tail(p - 1).eval();
        model.recent_diffs(p - 1) = w_new;
    }
    if (q > 0) {
        model.recent_innovations.head(q - 1) = model.recent_innovations.tail(q - 1).eval();
        model.recent_innovations(q - 1) = w_new - w_hat;
    }
    ++model.n_observations;
}

Eigen::VectorXd ar_inverse_root_moduli(const ArimaModel& model) {
    return inverse_root_moduli(model.ar, 1.0);
}

Eigen::VectorXd ma_inverse_root_moduli(const ArimaModel& model) {
    return inverse_root_moduli(model.ma, -1.0);
}

RefitPolicy parse_refit_policy(std::string_view text) {
    if (text == "always") return RefitPolicy::always;
    if (text == "once") return RefitPolicy::once;
    throw DomainError("refit policy must be 'always' or 'once'");
}

std::string_view to_string(RefitPolicy policy) noexcept {
    return policy == RefitPolicy::always ? "always" : "once";
}

Eigen::VectorXd rolling_forecast_from(const Eigen::Ref<const VectorXd>& series,
                                      const ArimaOrder& order, std::size_t train_length,
                                      RefitPolicy refit, const FitOptions& options) {
    const auto n = static_cast<std::size_t>(series.size());
    if (train_length == 0 || train_length >= n) {
        throw DataError("training prefix must leave at least one test point");
    }
    const std::size_t tests = n - train_length;
    VectorXd predictions(static_cast<Index>(tests));
    ArimaModel model;
    for (std::size_t k = 0; k < tests; ++k) {
        const std::size_t known = train_length + k;
        try {
            if (k == 0 || refit == RefitPolicy::always) {
                model = fit(series.head(static_cast<Index>(known)), order, options);
            } else {
                update(model, series(static_cast<Index>(known - 1)));
            }
        } catch (const Error& e) {
            throw DataError("rolling forecast failed at index " + std::to_string(known) + ": " +
                            e.what());
        }
        predictions(static_cast<Index>(k)) = forecast_one(model);
    }
    return predictions;
}

Eigen::VectorXd rolling_forecast(const Eigen::Ref<const VectorXd>& series, const ArimaOrder& order,
                                 double train_fraction, RefitPolicy refit,
                                 const FitOptions& options) {
    const std::size_t cut = split_point(static_cast<std::size_t>(series.size()), train_fraction);
    return rolling_forecast_from(series, order, cut, refit, options);
}

}  // namespace btcf::arima
