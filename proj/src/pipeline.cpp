#include "btcf/pipeline.hpp"

#include "btcf/timing.hpp"

namespace btcf::pipeline {

std::string lstm_model_name(FeatureSet features) {
    return features == FeatureSet::price_only ? "LSTM-single" : "LSTM-multi";
}

std::size_t test_start_index(std::size_t series_length, std::size_t lag, double train_fraction) {
    if (series_length <= lag) throw DataError("series too short for lag " + std::to_string(lag));
    return lag + split_point(series_length - lag, train_fraction);
}

LstmRun run_lstm(const MergedSeries& series, const LstmRunOptions& options) {
    auto config = options.config;
    config.n_features = feature_count(options.features);
    const auto scaler = fit_scaler(series.values);
    const auto scaled = scale_series(series, scaler);
    const auto supervised = to_supervised(scaled, scaler, config.lag, options.features);
    const auto [train_set, test_set] = split(supervised, options.train_fraction);

    auto trained = lstm::train(config, train_set);
    const Eigen::VectorXd scaled_pred = lstm::predict_scaled(trained.model, test_set);

    LstmRun run;
    run.test_start = config.lag + train_set.size();
    run.test_rmse_scaled = eval::rmse(test_set.targets, scaled_pred);
    const auto n_test = static_cast<Eigen::Index>(test_set.size());
    Eigen::VectorXd actual = series.price().segment(static_cast<Eigen::Index>(run.test_start), n_test);
    Eigen::VectorXd predicted = unscale_column(scaled_pred, scaler, MergedSeries::kPrice);
    run.report = eval::make_report(lstm_model_name(options.features), test_set.target_times,
                                   std::move(actual), std::move(predicted), trained.history.build_ms,
                                   trained.history.train_ms);
    run.report.loss_history = trained.history.loss;
    run.model = std::move(trained.model);
    run.history = std::move(trained.history);
    return run;
}

eval::ForecastReport run_arima(const MergedSeries& series, const ArimaRunOptions& options,
                               std::size_t test_start) {
    const Eigen::VectorXd price = series.price();
    const auto initial = time_call([&] {
        return arima::fit(price.head(static_cast<Eigen::Index>(test_start)), options.order, options.fit);
    });
    const auto rolling = time_call([&] {
        return arima::rolling_forecast_from(price, options.order, test_start, options.refit, options.fit);
    });
    const auto n_test = price.size() - static_cast<Eigen::Index>(test_start);
    return eval::make_report(options.order.name(),
                             {series.times.begin() + static_cast<std::ptrdiff_t>(test_start), series.times.end()},
                             price.tail(n_test), rolling.result, initial.elapsed_ms, rolling.elapsed_ms);
}

eval::ForecastReport run_naive(const MergedSeries& series, std::size_t test_start) {
    return eval::naive_baseline_from(series.times, series.price(), test_start);
}

}  // namespace btcf::pipeline
