#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "btcf/error.hpp"
#include "btcf/sentiment.hpp"

namespace btcf {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Time-ordered (time, price, sentiment) rows. NaN marks a missing value
/// until fill_missing has run.
struct MergedSeries {
    static constexpr Eigen::Index kPrice = 0;
    static constexpr Eigen::Index kSentiment = 1;

    std::vector<std::int64_t> times;
    /// n x 2, columns (price, sentiment).
    Eigen::MatrixX2d values;

    std::size_t size() const noexcept { return times.size(); }
    auto price() const { return values.col(kPrice); }
    auto sentiment() const { return values.col(kSentiment); }
};

struct TimedPrice {
    std::int64_t time = 0;
    double price = 0.0;
};

/// Buckets are right-closed: a sample at time t belongs to the bucket labelled
/// ceil(t / bucket) * bucket. Rows exist only for buckets holding a price
/// (the last one wins); sentiment is the mean polarity of the bucket's posts,
/// 0.0 when it has none.
MergedSeries merge(const std::vector<TimedPrice>& prices,
                   const std::vector<sentiment::SentimentRecord>& sentiments,
                   std::int64_t bucket_seconds);

/// Forward-fills missing prices, back-fills a missing prefix from the first
/// valid price, and sets missing sentiment to 0.
MergedSeries fill_missing(MergedSeries series);

// Merged dataset file: header "time,price,sentiment". Empty, "nan" or "NaN"
// fields load as missing.
MergedSeries read_merged(const std::filesystem::path& path);
void write_merged(const std::filesystem::path& path, const MergedSeries& series);

/// Loads (time, price) pairs from a price record log (bitstamp "last",
/// marketcap "price_usd", blockchain quotes "usd_15m") or a plain "time,price"
/// file.
std::vector<TimedPrice> read_prices(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Min-max scaling

template <typename Scalar>
struct ScalerParams {
    RowVectorX<Scalar> min;
    RowVectorX<Scalar> max;

    Eigen::Index columns() const noexcept { return min.size(); }
};

template <typename Derived>
ScalerParams<typename Derived::Scalar> fit_scaler(const Eigen::MatrixBase<Derived>& data) {
    if (data.rows() == 0) throw DataError("cannot fit a scaler on an empty series");
    return {data.colwise().minCoeff(), data.colwise().maxCoeff()};
}

/// (x - min) / (max - min) per column; constant columns map to 0.
template <typename Derived>
MatrixX<typename Derived::Scalar> scale(const Eigen::MatrixBase<Derived>& data,
                                        const ScalerParams<typename Derived::Scalar>& params) {
    using Scalar = typename Derived::Scalar;
    if (data.cols() != params.columns()) {
        throw DataError("scale: column count " + std::to_string(data.cols()) +
                        " does not match scaler (" + std::to_string(params.columns()) + ")");
    }
    MatrixX<Scalar> out(data.rows(), data.cols());
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
        const Scalar range = params.max(j) - params.min(j);
        if (range > Scalar(0)) {
            out.col(j) = (data.col(j).array() - params.min(j)) / range;
        } else {
            out.col(j).setZero();
        }
    }
    return out;
}

template <typename Derived>
MatrixX<typename Derived::Scalar> unscale(const Eigen::MatrixBase<Derived>& scaled,
                                          const ScalerParams<typename Derived::Scalar>& params) {
    using Scalar = typename Derived::Scalar;
    if (scaled.cols() != params.columns()) {
        throw DataError("unscale: column count " + std::to_string(scaled.cols()) +
                        " does not match scaler (" + std::to_string(params.columns()) + ")");
    }
    MatrixX<Scalar> out(scaled.rows(), scaled.cols());
    for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
        out.col(j) = scaled.col(j).array() * (params.max(j) - params.min(j)) + params.min(j);
    }
    return out;
}

/// Inverts the scaling of a single column (e.g. model output in price units).
template <typename Derived>
VectorX<typename Derived::Scalar> unscale_column(const Eigen::MatrixBase<Derived>& scaled,
                                                 const ScalerParams<typename Derived::Scalar>& params,
                                                 Eigen::Index column) {
    if (column < 0 || column >= params.columns()) {
        throw DataError("unscale_column: column " + std::to_string(column) + " out of range");
    }
    return scaled.array() * (params.max(column) - params.min(column)) + params.min(column);
}

/// Scales the value columns of a merged series, keeping its time axis.
inline MergedSeries scale_series(const MergedSeries& series, const ScalerParams<double>& params) {
    return {series.times, scale(series.values, params)};
}

// ---------------------------------------------------------------------------
// Supervised framing

enum class FeatureSet { price_only, price_and_sentiment };

std::string_view to_string(FeatureSet features) noexcept;
FeatureSet parse_feature_set(std::string_view text);

inline Eigen::Index feature_count(FeatureSet features) noexcept {
    return features == FeatureSet::price_only ? 1 : 2;
}

template <typename Scalar>
struct SupervisedDataset {
    /// Each sample is a lag x n_features window, oldest row first.
    std::vector<MatrixX<Scalar>> inputs;
    /// Next-step scaled price for each window.
    VectorX<Scalar> targets;
    /// Time stamp of each target row.
    std::vector<std::int64_t> target_times;
    std::size_t lag = 1;
    ScalerParams<Scalar> scaler;
    std::vector<std::string> feature_names;

    std::size_t size() const noexcept { return inputs.size(); }
    Eigen::Index n_features() const noexcept { return static_cast<Eigen::Index>(feature_names.size()); }
};

/// Sample i covers scaled rows i .. i+lag-1 and targets the price at row
/// i+lag, giving len - lag samples.
template <typename Scalar = double>
SupervisedDataset<Scalar> to_supervised(const MergedSeries& scaled,
                                        const ScalerParams<double>& scaler, std::size_t lag,
                                        FeatureSet features) {
    if (lag == 0) throw DomainError("lag must be positive");
    const std::size_t n = scaled.size();
    if (n <= lag) {
        throw DataError("series of length " + std::to_string(n) + " is too short for lag " +
                        std::to_string(lag));
    }
    const Eigen::Index width = feature_count(features);
    const auto lag_rows = static_cast<Eigen::Index>(lag);

    SupervisedDataset<Scalar> ds;
    ds.lag = lag;
    ds.scaler = {scaler.min.template cast<Scalar>(), scaler.max.template cast<Scalar>()};
    ds.feature_names = features == FeatureSet::price_only
                           ? std::vector<std::string>{"price"}
                           : std::vector<std::string>{"price", "sentiment"};
    const std::size_t count = n - lag;
    ds.inputs.reserve(count);
    ds.targets.resize(static_cast<Eigen::Index>(count));
    ds.target_times.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        ds.inputs.push_back(scaled.values.block(row, 0, lag_rows, width).template cast<Scalar>());
        ds.targets(row) = static_cast<Scalar>(scaled.values(row + lag_rows, MergedSeries::kPrice));
        ds.target_times.push_back(scaled.times[i + lag]);
    }
    return ds;
}

/// Number of leading items that go to training: floor(fraction * n), with
/// at least one item on each side.
std::size_t split_point(std::size_t n, double train_fraction);

/// Chronological split: train = first floor(fraction * n) samples.
template <typename Scalar>
std::pair<SupervisedDataset<Scalar>, SupervisedDataset<Scalar>> split(
    const SupervisedDataset<Scalar>& dataset, double train_fraction = 0.7) {
    const std::size_t n = dataset.size();
    const std::size_t cut = split_point(n, train_fraction);
    auto part = [&](std::size_t begin, std::size_t end) {
        SupervisedDataset<Scalar> out;
        out.lag = dataset.lag;
        out.scaler = dataset.scaler;
        out.feature_names = dataset.feature_names;
        out.inputs.assign(dataset.inputs.begin() + static_cast<std::ptrdiff_t>(begin),
                          dataset.inputs.begin() + static_cast<std::ptrdiff_t>(end));
        out.targets = dataset.targets.segment(static_cast<Eigen::Index>(begin),
                                              static_cast<Eigen::Index>(end - begin));
        out.target_times.assign(dataset.target_times.begin() + static_cast<std::ptrdiff_t>(begin),
                                dataset.target_times.begin() + static_cast<std::ptrdiff_t>(end));
        return out;
    };
    return {part(0, cut), part(cut, n)};
}

}  // namespace btcf
