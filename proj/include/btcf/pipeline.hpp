#pragma once

// End-to-end model runs on a merged series, producing comparable reports.

#include <string>

#include "btcf/arima.hpp"
#include "btcf/dataset.hpp"
#include "btcf/eval.hpp"
#include "btcf/lstm.hpp"

namespace btcf::pipeline {

struct LstmRunOptions {
    FeatureSet features = FeatureSet::price_only;
    /// n_features is taken from `features`.
    lstm::LstmConfig config;
    double train_fraction = 0.7;
};

struct LstmRun {
    eval::ForecastReport report;  // USD units
    lstm::LstmModel<double> model;
    lstm::TrainHistory history;
    double test_rmse_scaled = 0.0;
    /// Index into the series of the first test target.
    std::size_t test_start = 0;
};

/// "LSTM-single" or "LSTM-multi".
std::string lstm_model_name(FeatureSet features);

/// Scales the whole series, frames it with the configured lag, splits
/// chronologically, trains on the training part and forecasts the test part.
LstmRun run_lstm(const MergedSeries& series, const LstmRunOptions& options);

/// First test index shared by every model for a given lag and split.
std::size_t test_start_index(std::size_t series_length, std::size_t lag, double train_fraction);

struct ArimaRunOptions {
    arima::ArimaOrder order;
    arima::RefitPolicy refit = arima::RefitPolicy::always;
    arima::FitOptions fit;
};

/// Rolling one-step forecasts of the price column from `test_start` on.
/// build_time_ms is the initial fit, train_or_fit_time_ms the whole run.
eval::ForecastReport run_arima(const MergedSeries& series, const ArimaRunOptions& options,
                               std::size_t test_start);

eval::ForecastReport run_naive(const MergedSeries& series, std::size_t test_start);

}  // namespace btcf::pipeline
