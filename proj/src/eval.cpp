#include "btcf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "btcf/error.hpp"

namespace btcf::eval {

namespace {

void check_pair(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
    if (a.size() == 0 || b.size() == 0) throw DataError("error metric on an empty series");
    if (a.size() != b.size()) {
        throw DataError("error metric on series of different lengths (" + std::to_string(a.size()) +
                        " vs " + std::to_string(b.size()) + ")");
    }
}

std::string fixed(double v, int digits) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(digits) << v;
    return out.str();
}

}  // namespace

double mse(const Eigen::Ref<const Eigen::VectorXd>& actual,
           const Eigen::Ref<const Eigen::VectorXd>& predicted) {
    check_pair(actual, predicted);
    return (actual - predicted).squaredNorm() / static_cast<double>(actual.size());
}

double rmse(const Eigen::Ref<const Eigen::VectorXd>& actual,
            const Eigen::Ref<const Eigen::VectorXd>& predicted) {
    return std::sqrt(mse(actual, predicted));
}

ForecastReport make_report(std::string model_name, std::vector<std::int64_t> times,
                           Eigen::VectorXd actual, Eigen::VectorXd predicted, double build_time_ms,
                           double train_or_fit_time_ms) {
    if (times.size() != static_cast<std::size_t>(actual.size())) {
        throw DataError("report: " + std::to_string(times.size()) + " time stamps for " +
                        std::to_string(actual.size()) + " values");
    }
    ForecastReport report;
    report.mse = mse(actual, predicted);
    report.rmse = std::sqrt(report.mse);
    report.model_name = std::move(model_name);
    report.times = std::move(times);
    report.actual = std::move(actual);
    report.predicted = std::move(predicted);
    report.build_time_ms = build_time_ms;
    report.train_or_fit_time_ms = train_or_fit_time_ms;
    return report;
}

ForecastReport naive_baseline_from(const std::vector<std::int64_t>& times,
                                   const Eigen::Ref<const Eigen::VectorXd>& series,
                                   std::size_t train_length) {
    const auto n = static_cast<std::size_t>(series.size());
    if (times.size() != n) throw DataError("naive baseline: times and values differ in length");
    if (train_length == 0 || train_length >= n) {
        throw DataError("naive baseline: training prefix must leave at least one test point");
    }
    const auto tests = static_cast<Eigen::Index>(n - train_length);
    const auto start = static_cast<Eigen::Index>(train_length);
    auto timed = time_call([&] { return Eigen::VectorXd(series.segment(start - 1, tests)); });
    return make_report("naive", {times.begin() + start, times.end()}, series.segment(start, tests),
                       std::move(timed.result), 0.0, timed.elapsed_ms);
}

ForecastReport naive_baseline(const std::vector<std::int64_t>& times,
                              const Eigen::Ref<const Eigen::VectorXd>& series, double train_fraction) {
    return naive_baseline_from(times, series,
                               split_point(static_cast<std::size_t>(series.size()), train_fraction));
}

ComparisonTable compare(const std::vector<ForecastReport>& reports) {
    if (reports.size() < 2) throw DataError("comparison needs at least two reports");
    ComparisonTable table;
    table.rows.reserve(reports.size());
    for (const auto& r : reports) {
        table.rows.push_back({r.model_name, r.rmse, r.mse, r.build_time_ms, r.train_or_fit_time_ms, false});
    }
    std::stable_sort(table.rows.begin(), table.rows.end(), [](const auto& a, const auto& b) {
        if (a.rmse != b.rmse) return a.rmse < b.rmse;
        return a.model_name < b.model_name;
    });
    table.rows.front().winner = true;
    return table;
}

std::string ComparisonTable::to_text() const {
    std::size_t name_width = 5;
    for (const auto& r : rows) name_width = std::max(name_width, r.model_name.size());
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(name_width)) << "model" << "  " << std::right
        << std::setw(14) << "rmse" << std::setw(18) << "mse" << std::setw(14) << "build_ms"
        << std::setw(16) << "train_fit_ms" << "\n";
    for (const auto& r : rows) {
        out << std::left << std::setw(static_cast<int>(name_width)) << r.model_name << "  "
            << std::right << std::setw(14) << fixed(r.rmse, 6) << std::setw(18) << fixed(r.mse, 6)
            << std::setw(14) << fixed(r.build_time_ms, 3) << std::setw(16)
            << fixed(r.train_or_fit_time_ms, 3) << (r.winner ? "  <- best" : "") << "\n";
    }
    return out.str();
}

csv::Table ComparisonTable::to_csv() const {
    csv::Table t;
    t.header = {"rank", "model", "rmse", "mse", "build_time_ms", "train_or_fit_time_ms", "winner"};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        t.rows.push_back({std::to_string(i + 1), r.model_name, csv::format_number(r.rmse),
                          csv::format_number(r.mse), csv::format_number(r.build_time_ms),
                          csv::format_number(r.train_or_fit_time_ms), r.winner ? "1" : "0"});
    }
    return t;
}

PlotKind parse_plot_kind(std::string_view text) {
    if (text == "normalized_series") return PlotKind::normalized_series;
    if (text == "train_loss") return PlotKind::train_loss;
    if (text == "forecast_overlay") return PlotKind::forecast_overlay;
    throw DomainError("unknown plot kind: " + std::string(text));
}

std::string_view to_string(PlotKind kind) noexcept {
    switch (kind) {
        case PlotKind::normalized_series: return "normalized_series";
        case PlotKind::train_loss: return "train_loss";
        case PlotKind::forecast_overlay: break;
    }
    return "forecast_overlay";
}

csv::Table plot_table(PlotKind kind, const PlotInput& input) {
    csv::Table t;
    switch (kind) {
        case PlotKind::normalized_series: {
            const auto* series = std::get_if<MergedSeries>(&input);
            if (!series) throw DataError("normalized_series plot needs a merged series");
            t.header = {"time", "price", "sentiment"};
            for (std::size_t i = 0; i < series->size(); ++i) {
                const auto r = static_cast<Eigen::Index>(i);
                t.rows.push_back({std::to_string(series->times[i]),
                                  csv::format_number(series->values(r, MergedSeries::kPrice)),
                                  csv::format_number(series->values(r, MergedSeries::kSentiment))});
            }
            break;
        }
        case PlotKind::train_loss: {
            const std::vector<double>* loss = nullptr;
            if (const auto* h = std::get_if<lstm::TrainHistory>(&input)) loss = &h->loss;
            if (const auto* r = std::get_if<ForecastReport>(&input)) loss = &r->loss_history;
            if (!loss) throw DataError("train_loss plot needs a training history");
            t.header = {"epoch", "loss"};
            for (std::size_t e = 0; e < loss->size(); ++e) {
                t.rows.push_back({std::to_string(e + 1), csv::format_number((*loss)[e])});
            }
            break;
        }
        case PlotKind::forecast_overlay: {
            const auto* report = std::get_if<ForecastReport>(&input);
            if (!report) throw DataError("forecast_overlay plot needs a forecast report");
            t.header = {"time", "actual", "predicted"};
            for (std::size_t i = 0; i < report->size(); ++i) {
                const auto r = static_cast<Eigen::Index>(i);
                t.rows.push_back({std::to_string(report->times[i]), csv::format_number(report->actual(r)),
                                  csv::format_number(report->predicted(r))});
            }
            break;
        }
    }
    return t;
}

void emit_plot_data(PlotKind kind, const PlotInput& input, const std::filesystem::path& path) {
    csv::write_table(path, plot_table(kind, input));
}

void write_forecast(const std::filesystem::path& path, const ForecastReport& report) {
    emit_plot_data(PlotKind::forecast_overlay, report, path);
}

void write_report(const std::filesystem::path& path, const ForecastReport& report) {
    nlohmann::ordered_json j;
    j["model"] = report.model_name;
    j["mse"] = report.mse;
    j["rmse"] = report.rmse;
    j["n_predictions"] = report.size();
    auto& rows = j["predictions"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < report.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        rows.push_back({report.times[i], report.actual(r), report.predicted(r)});
    }
    j["loss_history"] = report.loss_history;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open output file: " + path.string());
    out << j.dump(1) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

ForecastReport read_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open input file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
        std::vector<std::int64_t> times;
        const auto& rows = j.at("predictions");
        Eigen::VectorXd actual(static_cast<Eigen::Index>(rows.size()));
        Eigen::VectorXd predicted(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            times.push_back(rows[i].at(0).get<std::int64_t>());
            actual(r) = rows[i].at(1).get<double>();
            predicted(r) = rows[i].at(2).get<double>();
        }
        auto report = make_report(j.at("model").get<std::string>(), std::move(times), std::move(actual),
                                  std::move(predicted));
        if (j.contains("loss_history")) report.loss_history = j["loss_history"].get<std::vector<double>>();
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": malformed report: " + e.what());
    }
}

}  // namespace btcf::eval
