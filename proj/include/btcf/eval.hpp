#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "btcf/csv.hpp"
#include "btcf/dataset.hpp"
#include "btcf/lstm.hpp"
#include "btcf/timing.hpp"

namespace btcf::eval {

using btcf::time_call;

/// Mean squared error. Throws DataError on empty input or length mismatch.
double mse(const Eigen::Ref<const Eigen::VectorXd>& actual,
           const Eigen::Ref<const Eigen::VectorXd>& predicted);

double rmse(const Eigen::Ref<const Eigen::VectorXd>& actual,
            const Eigen::Ref<const Eigen::VectorXd>& predicted);

struct ForecastReport {
    std::string model_name;
    std::vector<std::int64_t> times;
    Eigen::VectorXd actual;
    Eigen::VectorXd predicted;
    double mse = 0.0;
    double rmse = 0.0;
    double build_time_ms = 0.0;
    double train_or_fit_time_ms = 0.0;
    /// Per-epoch training loss, empty for models without one.
    std::vector<double> loss_history;

    std::size_t size() const noexcept { return times.size(); }
};

/// Assembles a report and computes its error metrics.
ForecastReport make_report(std::string model_name, std::vector<std::int64_t> times,
                           Eigen::VectorXd actual, Eigen::VectorXd predicted,
                           double build_time_ms = 0.0, double train_or_fit_time_ms = 0.0);

/// Predicts every value after the first `train_length` as the previous true
/// value.
ForecastReport naive_baseline_from(const std::vector<std::int64_t>& times,
                                   const Eigen::Ref<const Eigen::VectorXd>& series,
                                   std::size_t train_length);

ForecastReport naive_baseline(const std::vector<std::int64_t>& times,
                              const Eigen::Ref<const Eigen::VectorXd>& series,
                              double train_fraction = 0.7);

struct ComparisonRow {
    std::string model_name;
    double rmse = 0.0;
    double mse = 0.0;
    double build_time_ms = 0.0;
    double train_or_fit_time_ms = 0.0;
    bool winner = false;
};

/// Rows sorted by ascending RMSE, ties by name; the first row is the winner.
struct ComparisonTable {
    std::vector<ComparisonRow> rows;

    const ComparisonRow& winner() const { return rows.front(); }
    std::string to_text() const;
    csv::Table to_csv() const;
};

ComparisonTable compare(const std::vector<ForecastReport>& reports);

// ---------------------------------------------------------------------------
// Plot data

enum class PlotKind { normalized_series, train_loss, forecast_overlay };

PlotKind parse_plot_kind(std::string_view text);
std::string_view to_string(PlotKind kind) noexcept;

/// normalized_series takes a scaled MergedSeries, train_loss a TrainHistory,
/// forecast_overlay a ForecastReport.
using PlotInput = std::variant<MergedSeries, lstm::TrainHistory, ForecastReport>;

/// Columns: normalized_series "time,price,sentiment"; train_loss
/// "epoch,loss"; forecast_overlay "time,actual,predicted".
csv::Table plot_table(PlotKind kind, const PlotInput& input);
void emit_plot_data(PlotKind kind, const PlotInput& input, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Files

/// Forecast file "time,actual,predicted".
void write_forecast(const std::filesystem::path& path, const ForecastReport& report);

/// Report file (JSON): model name, metrics, predictions and loss history.
/// Wall-clock timings are not stored here, so the file is reproducible.
void write_report(const std::filesystem::path& path, const ForecastReport& report);
ForecastReport read_report(const std::filesystem::path& path);

}  // namespace btcf::eval
