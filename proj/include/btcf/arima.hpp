#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "btcf/dataset.hpp"
#include "btcf/error.hpp"

namespace btcf::arima {

struct ArimaOrder {
    int p = 10;
    int d = 1;
    int q = 0;

    /// Rejects negative orders and the degenerate (0,0,0).
    void validate() const;
    std::string name() const;  // "ARIMA(p,d,q)"

    friend bool operator==(const ArimaOrder&, const ArimaOrder&) = default;
};

/// Parses "p,d,q".
ArimaOrder parse_order(std::string_view text);

// ---------------------------------------------------------------------------
// Differencing

/// d applications of first differences. Throws DataError when len <= d.
template <typename Derived>
VectorX<typename Derived::Scalar> difference(const Eigen::MatrixBase<Derived>& series, int d) {
    using Scalar = typename Derived::Scalar;
    if (d < 0) throw DomainError("differencing order must be >= 0");
    if (series.size() <= d) {
        throw DataError("series of length " + std::to_string(series.size()) +
                        " is too short to difference " + std::to_string(d) + " times");
    }
    VectorX<Scalar> out = series;
    for (int k = 0; k < d; ++k) {
        const Eigen::Index m = out.size() - 1;
        out = (out.tail(m) - out.head(m)).eval();
    }
    return out;
}

/// First value of each differencing level 0..d-1: the seeds undifference needs.
template <typename Derived>
VectorX<typename Derived::Scalar> difference_seeds(const Eigen::MatrixBase<Derived>& series, int d) {
    using Scalar = typename Derived::Scalar;
    if (series.size() <= d) throw DataError("series too short for differencing");
    VectorX<Scalar> seeds(d);
    VectorX<Scalar> level = series;
    for (int k = 0; k < d; ++k) {
        seeds(k) = level(0);
        const Eigen::Index m = level.size() - 1;
        level = (level.tail(m) - level.head(m)).eval();
    }
    return seeds;
}

/// Inverse of difference: integrates `diffs` once per seed, innermost level
/// last. undifference(difference(x, d), difference_seeds(x, d)) == x.
template <typename D1, typename D2>
VectorX<typename D1::Scalar> undifference(const Eigen::MatrixBase<D1>& diffs,
                                          const Eigen::MatrixBase<D2>& seeds) {
    using Scalar = typename D1::Scalar;
    VectorX<Scalar> level = diffs;
    for (Eigen::Index k = seeds.size(); k-- > 0;) {
        VectorX<Scalar> up(level.size() + 1);
        up(0) = seeds(k);
        for (Eigen::Index j = 0; j < level.size(); ++j) up(j + 1) = up(j) + level(j);
        level = std::move(up);
    }
    return level;
}

// ---------------------------------------------------------------------------
// Estimation and forecasting

struct FitOptions {
    /// Drift/intercept term on the differenced series.
    bool include_intercept = true;
    /// Gauss-Newton limits for q > 0.
    int max_iterations = 200;
    double tolerance = 1e-10;
};

struct ArimaModel {
    ArimaOrder order;
    double intercept = 0.0;
    Eigen::VectorXd ar;  // phi_1 .. phi_p
    Eigen::VectorXd ma;  // theta_1 .. theta_q
    double sigma2 = 0.0;

    // Forecast state, most recent value last.
    Eigen::VectorXd recent_diffs;        // last p values of the differenced series
    Eigen::VectorXd recent_innovations;  // last q innovations
    Eigen::VectorXd level_tail;          // last value of each level 0..d-1

    std::size_t n_observations = 0;
    int iterations = 0;
    std::vector<std::string> warnings;
};

/// Differences d times, then fits intercept + AR by least squares when q = 0,
/// or minimises the conditional sum of squared innovations by Gauss-Newton
/// (starting from the AR-only fit) when q > 0.
ArimaModel fit(const Eigen::Ref<const Eigen::VectorXd>& series, const ArimaOrder& order,
               const FitOptions& options = {});

/// One-step-ahead forecast in original units.
double forecast_one(const ArimaModel& model);

/// Appends an observation to the forecast state without re-estimating.
void update(ArimaModel& model, double observation);

/// Moduli of the inverse roots of the AR (resp. MA) polynomial; all < 1 means
/// stationary (resp. invertible). Reported, never enforced.
Eigen::VectorXd ar_inverse_root_moduli(const ArimaModel& model);
Eigen::VectorXd ma_inverse_root_moduli(const ArimaModel& model);

enum class RefitPolicy { always, once };
RefitPolicy parse_refit_policy(std::string_view text);
std::string_view to_string(RefitPolicy policy) noexcept;

/// Static one-step forecasts over series[train_length:]: each forecast uses
/// only earlier observations, after which the true value is appended (and
/// the model refit under RefitPolicy::always).
Eigen::VectorXd rolling_forecast_from(const Eigen::Ref<const Eigen::VectorXd>& series,
                                      const ArimaOrder& order, std::size_t train_length,
                                      RefitPolicy refit = RefitPolicy::always,
                                      const FitOptions& options = {});

/// Same, with train_length = floor(train_fraction * len).
Eigen::VectorXd rolling_forecast(const Eigen::Ref<const Eigen::VectorXd>& series,
                                 const ArimaOrder& order, double train_fraction = 0.7,
                                 RefitPolicy refit = RefitPolicy::always,
                                 const FitOptions& options = {});

}  // namespace btcf::arima
