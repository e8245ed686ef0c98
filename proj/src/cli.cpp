#include "btcf/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "btcf/arima.hpp"
#include "btcf/dataset.hpp"
#include "btcf/error.hpp"
#include "btcf/eval.hpp"
#include "btcf/ingest.hpp"
#include "btcf/lstm.hpp"
#include "btcf/pipeline.hpp"
#include "btcf/replay_server.hpp"
#include "btcf/sentiment.hpp"

#ifndef BTCF_DEFAULT_FIXTURES_DIR
#define BTCF_DEFAULT_FIXTURES_DIR "fixtures"
#endif

namespace btcf::cli {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_interrupt(int) { g_interrupted.store(true); }

struct LstmFlags {
    std::size_t lag = 1;
    Eigen::Index hidden = 32;
    std::size_t epochs = 200;
    double learning_rate = 0.01;
    std::uint64_t seed = 0;
};

void add_lstm_flags(CLI::App* cmd, LstmFlags& f) {
    cmd->add_option("--lag", f.lag, "Input window length")->check(CLI::PositiveNumber);
    cmd->add_option("--hidden", f.hidden, "LSTM hidden units")->check(CLI::PositiveNumber);
    cmd->add_option("--epochs", f.epochs, "Full-batch training epochs");
    cmd->add_option("--learning-rate", f.learning_rate, "Adam learning rate")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", f.seed, "Weight initialisation seed");
}

lstm::LstmConfig to_config(const LstmFlags& f) {
    lstm::LstmConfig c;
    c.lag = f.lag;
    c.hidden_size = f.hidden;
    c.epochs = f.epochs;
    c.learning_rate = f.learning_rate;
    c.seed = f.seed;
    return c;
}

MergedSeries load_series(const fs::path& path) { return fill_missing(read_merged(path)); }

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string file_stem(const std::string& model_name) {
    std::string out;
    for (char ch : model_name) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        } else if (!out.empty() && out.back() != '_') {
            out.push_back('_');
        }
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out;
}

void write_model_outputs(const fs::path& dir, const eval::ForecastReport& report) {
    const auto stem = file_stem(report.model_name);
    eval::write_forecast(dir / (stem + "_forecast.csv"), report);
    eval::write_report(dir / (stem + "_report.json"), report);
}

void write_comparison(const fs::path& dir, const eval::ComparisonTable& table, std::ostream& out) {
    std::string text = table.to_text();
    text += "\nScaler fitted on the full series before the train/test split, so test-range "
            "min/max inform the normalisation.\n";
    text += "Wall-clock timings are hardware-dependent.\n";
    std::ofstream file(dir / "comparison.txt", std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open output file: " + (dir / "comparison.txt").string());
    file << text;
    csv::write_table(dir / "comparison.csv", table.to_csv());
    out << text;
}

// ---------------------------------------------------------------------------

int cmd_ingest(const fs::path& config_path, const fs::path& out_dir, std::size_t max_polls,
               std::ostream& out, std::ostream& err) {
    const auto sources = ingest::load_source_configs(config_path);
    if (sources.empty()) throw DataError(config_path.string() + ": no sources configured");
    ensure_dir(out_dir);

    std::vector<std::unique_ptr<ingest::RecordLog>> logs;
    for (const auto& s : sources) logs.push_back(std::make_unique<ingest::RecordLog>(out_dir / (s.name + ".csv"), s.schema));

    g_interrupted = false;
    auto previous = std::signal(SIGINT, on_interrupt);
    std::stop_source stop;
    std::mutex err_mutex;
    std::vector<std::size_t> counts(sources.size(), 0);
    std::vector<std::exception_ptr> failures(sources.size());
    {
        std::vector<std::jthread> workers;
        for (std::size_t i = 0; i < sources.size(); ++i) {
            workers.emplace_back([&, i] {
                ingest::PollOptions options;
                options.max_attempts = max_polls;
                options.on_error = [&](std::string_view line) {
                    std::lock_guard lock(err_mutex);
                    err << "warning: " << line << '\n';
                };
                try {
                    counts[i] = ingest::poll(sources[i], *logs[i], stop.get_token(), options);
                } catch (...) {
                    failures[i] = std::current_exception();
                    stop.request_stop();
                }
            });
        }
        std::jthread watcher([&](std::stop_token self) {
            while (!self.stop_requested() && !stop.stop_requested()) {
                if (g_interrupted.load()) stop.request_stop();
                std::this_thread::sleep_for(std::chrono::milliseconds(50));
            }
        });
        for (auto& w : workers) w.join();
        watcher.request_stop();
    }
    std::signal(SIGINT, previous);
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }
    for (std::size_t i = 0; i < sources.size(); ++i) {
        out << sources[i].name << ": " << counts[i] << " records -> " << logs[i]->path().string() << '\n';
    }
    return 0;
}

int cmd_sentiment(const std::string& posts_path, const std::string& url, const fs::path& lexicon_path,
                  const fs::path& out_path, std::ostream& out) {
    const auto lexicon = sentiment::Lexicon::load(lexicon_path);
    std::vector<sentiment::RawPost> posts;
    if (!url.empty()) {
        posts = ingest::fetch_posts(url);
    } else if (!posts_path.empty()) {
        posts = sentiment::read_posts(posts_path);
    } else {
        throw DomainError("sentiment: either --posts or --url is required");
    }
    std::vector<sentiment::SentimentRecord> records;
    records.reserve(posts.size());
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& post : posts) {
        records.push_back(sentiment::process_post(post, lexicon));
        ++counts[static_cast<int>(records.back().label)];
    }
    std::stable_sort(records.begin(), records.end(),
                     [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    sentiment::write_sentiment_log(out_path, records);
    out << records.size() << " posts scored: " << counts[2] << " positive, " << counts[0]
        << " negative, " << counts[1] << " neutral -> " << out_path.string() << '\n';
    return 0;
}

int cmd_merge(const fs::path& prices_path, const std::string& sentiment_path, std::int64_t bucket,
              const fs::path& out_path, std::ostream& out) {
    const auto prices = read_prices(prices_path);
    std::vector<sentiment::SentimentRecord> sentiments;
    if (!sentiment_path.empty()) sentiments = sentiment::read_sentiment_log(sentiment_path);
    const auto merged = merge(prices, sentiments, bucket);
    write_merged(out_path, merged);
    out << merged.size() << " rows -> " << out_path.string() << '\n';
    return 0;
}

int cmd_train_lstm(const fs::path& data, const std::string& features, const LstmFlags& flags,
                   double train_fraction, const fs::path& out_dir, const std::string& model_out,
                   std::ostream& out) {
    const auto series = load_series(data);
    pipeline::LstmRunOptions options;
    options.features = parse_feature_set(features);
    options.config = to_config(flags);
    options.train_fraction = train_fraction;
    const auto run = pipeline::run_lstm(series, options);
    ensure_dir(out_dir);
    write_model_outputs(out_dir, run.report);
    const auto stem = file_stem(run.report.model_name);
    eval::emit_plot_data(eval::PlotKind::train_loss, run.history, out_dir / (stem + "_train_loss.csv"));
    if (!model_out.empty()) lstm::save(model_out, run.model);
    out << run.report.model_name << ": test RMSE " << csv::format_number(run.report.rmse) << " USD ("
        << csv::format_number(run.test_rmse_scaled) << " scaled), build "
        << csv::format_number(run.history.build_ms) << " ms, train "
        << csv::format_number(run.history.train_ms) << " ms\n";
    return 0;
}

int cmd_train_arima(const fs::path& data, const std::string& order_text, const std::string& refit,
                    bool no_intercept, double train_fraction, const fs::path& out_dir, std::ostream& out) {
    const auto series = load_series(data);
    pipeline::ArimaRunOptions options;
    options.order = arima::parse_order(order_text);
    options.refit = arima::parse_refit_policy(refit);
    options.fit.include_intercept = !no_intercept;
    const std::size_t test_start = split_point(series.size(), train_fraction);
    const auto report = pipeline::run_arima(series, options, test_start);
    ensure_dir(out_dir);
    write_model_outputs(out_dir, report);
    const auto model = arima::fit(series.price().head(static_cast<Eigen::Index>(series.size())), options.order,
                                  options.fit);
    out << report.model_name << ": test RMSE " << csv::format_number(report.rmse) << " USD, initial fit "
        << csv::format_number(report.build_time_ms) << " ms, rolling "
        << csv::format_number(report.train_or_fit_time_ms) << " ms\n";
    out << "full-sample fit: intercept " << csv::format_number(model.intercept) << ", sigma2 "
        << csv::format_number(model.sigma2);
    const auto moduli = arima::ar_inverse_root_moduli(model);
    if (moduli.size() > 0) out << ", max AR inverse root modulus " << csv::format_number(moduli.maxCoeff());
    out << '\n';
    for (const auto& w : model.warnings) out << "warning: " << w << '\n';
    return 0;
}

int cmd_evaluate(const fs::path& data, const LstmFlags& flags, const std::string& order_text,
                 const std::string& refit, double train_fraction, const fs::path& out_dir, std::ostream& out) {
    const auto series = load_series(data);
    const auto order = arima::parse_order(order_text);
    const auto refit_policy = arima::parse_refit_policy(refit);
    ensure_dir(out_dir);
    ensure_dir(out_dir / "plots");

    const auto scaler = fit_scaler(series.values);
    eval::emit_plot_data(eval::PlotKind::normalized_series, scale_series(series, scaler),
                         out_dir / "plots" / "normalized_series.csv");

    std::vector<eval::ForecastReport> reports;
    std::size_t test_start = 0;
    for (auto features : {FeatureSet::price_only, FeatureSet::price_and_sentiment}) {
        pipeline::LstmRunOptions options;
        options.features = features;
        options.config = to_config(flags);
        options.train_fraction = train_fraction;
        auto run = pipeline::run_lstm(series, options);
        test_start = run.test_start;
        const auto stem = file_stem(run.report.model_name);
        eval::emit_plot_data(eval::PlotKind::train_loss, run.history, out_dir / "plots" / (stem + "_train_loss.csv"));
        reports.push_back(std::move(run.report));
    }
    pipeline::ArimaRunOptions arima_options;
    arima_options.order = order;
    arima_options.refit = refit_policy;
    reports.push_back(pipeline::run_arima(series, arima_options, test_start));
    reports.push_back(pipeline::run_naive(series, test_start));

    for (const auto& r : reports) {
        write_model_outputs(out_dir, r);
        eval::emit_plot_data(eval::PlotKind::forecast_overlay, r,
                             out_dir / "plots" / (file_stem(r.model_name) + "_forecast_overlay.csv"));
    }
    write_comparison(out_dir, eval::compare(reports), out);
    return 0;
}

int cmd_plot(const std::vector<std::string>& reports, const std::string& data, const fs::path& out_dir,
             std::ostream& out) {
    if (reports.empty() && data.empty()) throw DomainError("plot: give --report and/or --data");
    ensure_dir(out_dir);
    std::size_t files = 0;
    if (!data.empty()) {
        const auto series = load_series(data);
        eval::emit_plot_data(eval::PlotKind::normalized_series, scale_series(series, fit_scaler(series.values)),
                             out_dir / "normalized_series.csv");
        ++files;
    }
    for (const auto& path : reports) {
        const auto report = eval::read_report(path);
        const auto stem = file_stem(report.model_name);
        eval::emit_plot_data(eval::PlotKind::forecast_overlay, report, out_dir / (stem + "_forecast_overlay.csv"));
        ++files;
        if (!report.loss_history.empty()) {
            eval::emit_plot_data(eval::PlotKind::train_loss, report, out_dir / (stem + "_train_loss.csv"));
            ++files;
        }
    }
    out << files << " plot files -> " << out_dir.string() << '\n';
    return 0;
}

}  // namespace

fs::path fixtures_dir() {
    if (const char* env = std::getenv("BTCF_FIXTURES_DIR"); env && *env) return env;
    return BTCF_DEFAULT_FIXTURES_DIR;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bitcoin price forecasting toolkit: ingest, sentiment, merge, LSTM/ARIMA evaluation", "btcf"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);

    // ingest
    std::string ingest_config;
    std::string ingest_out = "logs";
    std::size_t max_polls = 0;
    auto* ingest = app.add_subcommand("ingest", "Poll configured price sources into record logs");
    ingest->add_option("--config", ingest_config, "Source config (JSON)")->required();
    ingest->add_option("--out-dir", ingest_out, "Directory for one log per source");
    ingest->add_option("--max-polls", max_polls, "Attempts per source (0 = until interrupted)");

    // serve-replay
    std::string replay_dir = (fixtures_dir() / "replay").string();
    std::string replay_host = "127.0.0.1";
    int replay_port = 8080;
    auto* serve = app.add_subcommand("serve-replay", "Serve recorded API payloads for offline ingestion");
    serve->add_option("--fixtures", replay_dir, "Replay fixtures directory");
    serve->add_option("--host", replay_host, "Bind address");
    serve->add_option("--port", replay_port, "Port");

    // sentiment
    std::string posts_path, posts_url;
    std::string lexicon_path = (fixtures_dir() / "lexicon.csv").string();
    std::string sentiment_out;
    auto* sent = app.add_subcommand("sentiment", "Score posts into a sentiment log");
    sent->add_option("--posts", posts_path, "Posts file (timestamp,source,text)");
    sent->add_option("--url", posts_url, "Replay server base URL to fetch posts from");
    sent->add_option("--lexicon", lexicon_path, "Lexicon file (word,weight)");
    sent->add_option("--out", sentiment_out, "Sentiment log output")->required();

    // merge
    std::string merge_prices, merge_sentiment, merge_out;
    std::int64_t bucket = 86400;
    auto* mrg = app.add_subcommand("merge", "Merge prices and sentiment into time,price,sentiment");
    mrg->add_option("--prices", merge_prices, "Price record log or time,price file")->required();
    mrg->add_option("--sentiment", merge_sentiment, "Sentiment log (optional)");
    mrg->add_option("--bucket", bucket, "Bucket width in seconds")->check(CLI::PositiveNumber);
    mrg->add_option("--out", merge_out, "Merged dataset output")->required();

    // train-lstm
    std::string lstm_data, lstm_features = "price_only", lstm_model_out;
    std::string lstm_out_dir = "results";
    double lstm_fraction = 0.7;
    LstmFlags lstm_flags;
    auto* tl = app.add_subcommand("train-lstm", "Train the LSTM and forecast the test range");
    tl->add_option("--data", lstm_data, "Merged dataset")->required();
    tl->add_option("--features", lstm_features, "price_only | price_and_sentiment")
        ->check(CLI::IsMember({"price_only", "price_and_sentiment", "single", "multi"}));
    add_lstm_flags(tl, lstm_flags);
    tl->add_option("--train-fraction", lstm_fraction, "Chronological training share");
    tl->add_option("--out-dir", lstm_out_dir, "Report directory");
    tl->add_option("--model-out", lstm_model_out, "Save trained parameters here");

    // train-arima
    std::string arima_data, arima_order = "10,1,0", arima_refit = "always";
    std::string arima_out_dir = "results";
    double arima_fraction = 0.7;
    bool no_intercept = false;
    auto* ta = app.add_subcommand("train-arima", "Rolling one-step ARIMA forecasts over the test range");
    ta->add_option("--data", arima_data, "Merged dataset")->required();
    ta->add_option("--order", arima_order, "p,d,q");
    ta->add_option("--refit", arima_refit, "always | once")->check(CLI::IsMember({"always", "once"}));
    ta->add_flag("--no-intercept", no_intercept, "Fit without a drift term");
    ta->add_option("--train-fraction", arima_fraction, "Chronological training share");
    ta->add_option("--out-dir", arima_out_dir, "Report directory");

    // evaluate
    std::string eval_data, eval_order = "10,1,0", eval_refit = "always";
    std::string eval_out_dir = "results";
    double eval_fraction = 0.7;
    LstmFlags eval_flags;
    auto* ev = app.add_subcommand("evaluate", "Run both LSTMs, ARIMA and the naive baseline; compare");
    ev->add_option("--data", eval_data, "Merged dataset")->required();
    add_lstm_flags(ev, eval_flags);
    ev->add_option("--order", eval_order, "ARIMA p,d,q");
    ev->add_option("--refit", eval_refit, "always | once")->check(CLI::IsMember({"always", "once"}));
    ev->add_option("--train-fraction", eval_fraction, "Chronological training share");
    ev->add_option("--out-dir", eval_out_dir, "Output directory");

    // plot
    std::vector<std::string> plot_reports;
    std::string plot_data;
    std::string plot_out_dir = "plots";
    auto* pl = app.add_subcommand("plot", "Re-emit plot data from saved reports");
    pl->add_option("--report", plot_reports, "Report JSON file(s)");
    pl->add_option("--data", plot_data, "Merged dataset for the normalized_series plot");
    pl->add_option("--out-dir", plot_out_dir, "Output directory");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (*ingest) return cmd_ingest(ingest_config, ingest_out, max_polls, out, err);
        if (*serve) {
            ingest::ReplayServer server(replay_dir);
            out << "serving " << replay_dir << " on http://" << replay_host << ":" << replay_port << std::endl;
            server.run(replay_host, replay_port);
            return 0;
        }
        if (*sent) return cmd_sentiment(posts_path, posts_url, lexicon_path, sentiment_out, out);
        if (*mrg) return cmd_merge(merge_prices, merge_sentiment, bucket, merge_out, out);
        if (*tl) {
            return cmd_train_lstm(lstm_data, lstm_features, lstm_flags, lstm_fraction, lstm_out_dir,
                                  lstm_model_out, out);
        }
        if (*ta) {
            return cmd_train_arima(arima_data, arima_order, arima_refit, no_intercept, arima_fraction,
                                   arima_out_dir, out);
        }
        if (*ev) {
            return cmd_evaluate(eval_data, eval_flags, eval_order, eval_refit, eval_fraction, eval_out_dir, out);
        }
        if (*pl) return cmd_plot(plot_reports, plot_data, plot_out_dir, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, out, err);
}

}  // namespace btcf::cli
