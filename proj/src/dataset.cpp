#include "btcf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "btcf/csv.hpp"

namespace btcf {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::int64_t bucket_label(std::int64_t t, std::int64_t bucket) {
    // ceil(t / bucket) * bucket, valid for negative t too.
    std::int64_t q = t / bucket;
    if (t % bucket != 0 && t > 0) ++q;
    return q * bucket;
}

void require_ordered(const std::vector<std::int64_t>& times, const char* what) {
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (times[i] < times[i - 1]) {
            throw DataError(std::string(what) + " are not time-ordered at index " +
                            std::to_string(i));
        }
    }
}

bool is_missing_field(const std::string& field) {
    return field.empty() || field == "nan" || field == "NaN" || field == "NA";
}

}  // namespace

MergedSeries merge(const std::vector<TimedPrice>& prices,
                   const std::vector<sentiment::SentimentRecord>& sentiments,
                   std::int64_t bucket_seconds) {
    if (bucket_seconds <= 0) throw DomainError("bucket duration must be positive");
    if (prices.empty()) throw DataError("merge: no price data");
    {
        std::vector<std::int64_t> pt(prices.size()), st(sentiments.size());
        std::transform(prices.begin(), prices.end(), pt.begin(), [](const auto& p) { return p.time; });
        std::transform(sentiments.begin(), sentiments.end(), st.begin(),
                       [](const auto& s) { return s.timestamp; });
        require_ordered(pt, "prices");
        require_ordered(st, "sentiment records");
    }

    std::map<std::int64_t, double> last_price;
    for (const auto& p : prices) last_price[bucket_label(p.time, bucket_seconds)] = p.price;

    std::map<std::int64_t, std::pair<double, std::size_t>> polarity;
    for (const auto& s : sentiments) {
        auto& [sum, count] = polarity[bucket_label(s.timestamp, bucket_seconds)];
        sum += s.polarity;
        ++count;
    }

    MergedSeries out;
    out.times.reserve(last_price.size());
    out.values.resize(static_cast<Eigen::Index>(last_price.size()), 2);
    Eigen::Index row = 0;
    for (const auto& [label, price] : last_price) {
        out.times.push_back(label);
        out.values(row, MergedSeries::kPrice) = price;
        const auto it = polarity.find(label);
        out.values(row, MergedSeries::kSentiment) =
            it == polarity.end() ? 0.0 : it->second.first / static_cast<double>(it->second.second);
        ++row;
    }
    return out;
}

MergedSeries fill_missing(MergedSeries series) {
    auto price = series.values.col(MergedSeries::kPrice);
    const Eigen::Index n = price.size();
    Eigen::Index first_valid = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isnan(price(i))) {
            first_valid = i;
            break;
        }
    }
    if (first_valid < 0) throw DataError("fill_missing: every price is missing");
    for (Eigen::Index i = 0; i < first_valid; ++i) price(i) = price(first_valid);
    for (Eigen::Index i = first_valid + 1; i < n; ++i) {
        if (std::isnan(price(i))) price(i) = price(i - 1);
    }
    auto sentiment = series.values.col(MergedSeries::kSentiment);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::isnan(sentiment(i))) sentiment(i) = 0.0;
    }
    return series;
}

MergedSeries read_merged(const std::filesystem::path& path) {
    const auto table = csv::read_table(path);
    const auto tc = table.column("time");
    const auto pc = table.column("price");
    const auto sc = table.column("sentiment");
    if (!tc || !pc || !sc) {
        throw DataError(path.string() + ": expected header time,price,sentiment");
    }
    MergedSeries out;
    out.times.reserve(table.rows.size());
    out.values.resize(static_cast<Eigen::Index>(table.rows.size()), 2);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const auto where = path.string() + ":" + std::to_string(i + 2);
        const auto t = csv::parse_integer(row[*tc]);
        if (!t) throw DataError(where + ": bad time '" + row[*tc] + "'");
        if (!out.times.empty() && *t <= out.times.back()) {
            throw DataError(where + ": time stamps must be strictly increasing");
        }
        out.times.push_back(*t);
        auto cell = [&](std::size_t col, const char* name) {
            if (is_missing_field(row[col])) return kMissing;
            const auto v = csv::parse_number(row[col]);
            if (!v) throw DataError(where + ": bad " + name + " '" + row[col] + "'");
            return *v;
        };
        const auto r = static_cast<Eigen::Index>(i);
        out.values(r, MergedSeries::kPrice) = cell(*pc, "price");
        out.values(r, MergedSeries::kSentiment) = cell(*sc, "sentiment");
    }
    return out;
}

void write_merged(const std::filesystem::path& path, const MergedSeries& series) {
    csv::Table table;
    table.header = {"time", "price", "sentiment"};
    table.rows.reserve(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        table.rows.push_back({std::to_string(series.times[i]),
                              csv::format_number(series.values(r, MergedSeries::kPrice)),
                              csv::format_number(series.values(r, MergedSeries::kSentiment))});
    }
    csv::write_table(path, table);
}

std::vector<TimedPrice> read_prices(const std::filesystem::path& path) {
    const auto table = csv::read_table(path);
    // (time column, price column) in order of preference.
    static const std::pair<const char*, const char*> kLayouts[] = {
        {"timestamp", "last"}, {"created", "price_usd"}, {"created", "usd_15m"}, {"time", "price"}};
    for (const auto& [time_name, price_name] : kLayouts) {
        const auto tc = table.column(time_name);
        const auto pc = table.column(price_name);
        if (!tc || !pc) continue;
        std::vector<TimedPrice> out;
        out.reserve(table.rows.size());
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            const auto& row = table.rows[i];
            const auto t = csv::parse_integer(row[*tc]);
            const auto p = csv::parse_number(row[*pc]);
            if (!t || !p) {
                throw DataError(path.string() + ":" + std::to_string(i + 2) + ": malformed price row");
            }
            out.push_back({*t, *p});
        }
        return out;
    }
    throw DataError(path.string() + ": unrecognised price file header");
}

std::string_view to_string(FeatureSet features) noexcept {
    return features == FeatureSet::price_only ? "price_only" : "price_and_sentiment";
}

FeatureSet parse_feature_set(std::string_view text) {
    if (text == "price_only" || text == "single") return FeatureSet::price_only;
    if (text == "price_and_sentiment" || text == "multi") return FeatureSet::price_and_sentiment;
    throw DomainError("unknown feature set: " + std::string(text));
}

std::size_t split_point(std::size_t n, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw DomainError("train fraction must lie in (0, 1)");
    }
    if (n < 2) throw DataError("cannot split fewer than 2 samples");
    // The small slack keeps exact products such as 0.7 * 10 from rounding down.
    auto cut = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 1e-9));
    cut = std::clamp<std::size_t>(cut, 1, n - 1);
    return cut;
}

}  // namespace btcf
