#pragma once

// Single-layer LSTM with a one-unit dense head, trained full-batch by
// backpropagation through time with Adam on mean absolute error.
//
// Cell, per step t with z = [h_{t-1}; x_t]:
//   f = sigmoid(Wf z + bf)   i = sigmoid(Wi z + bi)   o = sigmoid(Wo z + bo)
//   g = tanh(Wg z + bg)      c_t = f * c_{t-1} + i * g   h_t = o * tanh(c_t)
// prediction = Wd h_last + bd. The state starts at zero for every window.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "btcf/adam.hpp"
#include "btcf/dataset.hpp"
#include "btcf/error.hpp"
#include "btcf/timing.hpp"

namespace btcf::lstm {

struct LstmConfig {
    Eigen::Index n_features = 1;
    Eigen::Index hidden_size = 32;
    std::size_t lag = 1;
    std::size_t epochs = 200;
    double learning_rate = 0.01;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_features != 1 && n_features != 2) throw DomainError("n_features must be 1 or 2");
        if (hidden_size <= 0) throw DomainError("hidden_size must be positive");
        if (lag == 0) throw DomainError("lag must be positive");
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
            throw DomainError("learning_rate must be positive and finite");
        }
    }
};

enum Gate : std::size_t { kForget = 0, kInput = 1, kOutput = 2, kCandidate = 3 };

template <typename Scalar = double>
struct LstmModel {
    /// Gate weights, hidden x (hidden + features), indexed by Gate.
    std::array<MatrixX<Scalar>, 4> W;
    std::array<VectorX<Scalar>, 4> b;
    RowVectorX<Scalar> wd;
    Scalar bd = Scalar(0);

    LstmModel() = default;
    LstmModel(Eigen::Index hidden, Eigen::Index features) {
        for (auto& w : W) w = MatrixX<Scalar>::Zero(hidden, hidden + features);
        for (auto& v : b) v = VectorX<Scalar>::Zero(hidden);
        wd = RowVectorX<Scalar>::Zero(hidden);
    }

    Eigen::Index hidden_size() const noexcept { return W[0].rows(); }
    Eigen::Index n_features() const noexcept { return W[0].cols() - W[0].rows(); }

    bool all_finite() const {
        bool ok = std::isfinite(static_cast<double>(bd)) && wd.allFinite();
        for (std::size_t k = 0; k < 4; ++k) ok = ok && W[k].allFinite() && b[k].allFinite();
        return ok;
    }

    friend bool operator==(const LstmModel& a, const LstmModel& b_) {
        bool same = a.bd == b_.bd && a.wd == b_.wd;
        for (std::size_t k = 0; k < 4; ++k) same = same && a.W[k] == b_.W[k] && a.b[k] == b_.b[k];
        return same;
    }
};

/// Gradients share the parameter layout.
template <typename Scalar = double>
using LstmGradients = LstmModel<Scalar>;

/// Tensor names in visiting order; also the order of the model file.
inline constexpr std::array<std::string_view, 10> kTensorNames = {
    "Wf", "Wi", "Wo", "Wg", "bf", "bi", "bo", "bg", "Wd", "bd"};

template <typename T>
struct is_lstm_model : std::false_type {};
template <typename Scalar>
struct is_lstm_model<LstmModel<Scalar>> : std::true_type {};

namespace detail {
template <typename Scalar>
auto scalar_view(Scalar& x) {
    if constexpr (std::is_const_v<Scalar>) {
        return Eigen::Map<const Eigen::Matrix<std::remove_const_t<Scalar>, 1, 1>>(&x);
    } else {
        return Eigen::Map<Eigen::Matrix<Scalar, 1, 1>>(&x);
    }
}
}  // namespace detail

/// Visits the ten parameter tensors of one or more same-shaped models, in
/// kTensorNames order. The scalar dense bias is presented as a 1x1 map.
template <typename F, typename... Models>
    requires(is_lstm_model<std::remove_cvref_t<Models>>::value && ...)
void for_each_tensor(F&& f, Models&&... models) {
    for (std::size_t k = 0; k < 4; ++k) f(models.W[k]...);
    for (std::size_t k = 0; k < 4; ++k) f(models.b[k]...);
    f(models.wd...);
    f(detail::scalar_view(models.bd)...);
}

template <typename Scalar>
LstmModel<Scalar> zeros_like(const LstmModel<Scalar>& model) {
    return LstmModel<Scalar>(model.hidden_size(), model.n_features());
}

/// Weights uniform in [-1/sqrt(hidden), 1/sqrt(hidden)], biases zero.
template <typename Scalar = double>
LstmModel<Scalar> init(const LstmConfig& config) {
    config.validate();
    LstmModel<Scalar> model(config.hidden_size, config.n_features);
    std::mt19937_64 rng(config.seed);
    const double k = 1.0 / std::sqrt(static_cast<double>(config.hidden_size));
    std::uniform_real_distribution<double> dist(-k, k);
    auto fill = [&](auto& tensor) {
        for (Eigen::Index r = 0; r < tensor.rows(); ++r) {
            for (Eigen::Index c = 0; c < tensor.cols(); ++c) tensor(r, c) = static_cast<Scalar>(dist(rng));
        }
    };
    for (auto& w : model.W) fill(w);
    fill(model.wd);
    return model;
}

/// Everything the backward pass needs from one forward pass.
template <typename Scalar = double>
struct LstmCache {
    std::vector<VectorX<Scalar>> z;       // [h_{t-1}; x_t]
    std::array<std::vector<VectorX<Scalar>>, 4> gate;  // activations by Gate
    std::vector<VectorX<Scalar>> c;
    std::vector<VectorX<Scalar>> tanh_c;
    std::vector<VectorX<Scalar>> h;

    std::size_t steps() const noexcept { return c.size(); }
};

template <typename Scalar>
struct ForwardResult {
    Scalar prediction;
    LstmCache<Scalar> cache;
};

namespace detail {
// Kept strictly inside (0, 1): saturated inputs would otherwise round to
// exactly 0 or 1.
template <typename Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& x) {
    using Scalar = typename Derived::Scalar;
    constexpr Scalar lo = std::numeric_limits<Scalar>::min();
    constexpr Scalar hi = Scalar(1) - std::numeric_limits<Scalar>::epsilon() / Scalar(2);
    return (Scalar(1) / (Scalar(1) + (-x.array()).exp())).cwiseMax(lo).cwiseMin(hi).matrix();
}

template <typename Scalar, typename Derived>
void check_window(const LstmModel<Scalar>& model, const Eigen::MatrixBase<Derived>& window) {
    if (window.rows() == 0) throw DataError("empty input window");
    if (window.cols() != model.n_features()) {
        throw DataError("window has " + std::to_string(window.cols()) + " features, model expects " +
                        std::to_string(model.n_features()));
    }
    if (!window.allFinite()) throw DataError("non-finite value in input window");
}
}  // namespace detail

/// Runs the cell over the window rows (oldest first).
template <typename Scalar, typename Derived>
ForwardResult<Scalar> forward(const LstmModel<Scalar>& model, const Eigen::MatrixBase<Derived>& window) {
    detail::check_window(model, window);
    const Eigen::Index H = model.hidden_size();
    const Eigen::Index F = model.n_features();
    const auto steps = static_cast<std::size_t>(window.rows());

    ForwardResult<Scalar> out{Scalar(0), {}};
    auto& cache = out.cache;
    cache.z.reserve(steps);
    cache.c.reserve(steps);
    cache.tanh_c.reserve(steps);
    cache.h.reserve(steps);
    for (auto& g : cache.gate) g.reserve(steps);

    VectorX<Scalar> h = VectorX<Scalar>::Zero(H);
    VectorX<Scalar> c = VectorX<Scalar>::Zero(H);
    for (std::size_t t = 0; t < steps; ++t) {
        VectorX<Scalar> z(H + F);
        z.head(H) = h;
        z.tail(F) = window.row(static_cast<Eigen::Index>(t)).transpose().template cast<Scalar>();
        VectorX<Scalar> f = detail::sigmoid(model.W[kForget] * z + model.b[kForget]);
        VectorX<Scalar> i = detail::sigmoid(model.W[kInput] * z + model.b[kInput]);
        VectorX<Scalar> o = detail::sigmoid(model.W[kOutput] * z + model.b[kOutput]);
        VectorX<Scalar> g = (model.W[kCandidate] * z + model.b[kCandidate]).array().tanh().matrix();
        c = f.cwiseProduct(c) + i.cwiseProduct(g);
        VectorX<Scalar> tc = c.array().tanh().matrix();
        h = o.cwiseProduct(tc);

        cache.z.push_back(std::move(z));
        cache.gate[kForget].push_back(std::move(f));
        cache.gate[kInput].push_back(std::move(i));
        cache.gate[kOutput].push_back(std::move(o));
        cache.gate[kCandidate].push_back(std::move(g));
        cache.c.push_back(c);
        cache.tanh_c.push_back(std::move(tc));
        cache.h.push_back(h);
    }
    out.prediction = model.wd.dot(h) + model.bd;
    return out;
}

/// Prediction only.
template <typename Scalar, typename Derived>
Scalar predict(const LstmModel<Scalar>& model, const Eigen::MatrixBase<Derived>& window) {
    return forward(model, window).prediction;
}

/// Adds d_prediction * d(prediction)/d(parameters) into `grads`.
template <typename Scalar>
void backward_accumulate(const LstmModel<Scalar>& model, const LstmCache<Scalar>& cache,
                         Scalar d_prediction, LstmGradients<Scalar>& grads) {
    const Eigen::Index H = model.hidden_size();
    const std::size_t steps = cache.steps();
    if (steps == 0) throw DataError("backward: empty cache");
    if (d_prediction == Scalar(0)) return;

    grads.wd += d_prediction * cache.h.back().transpose();
    grads.bd += d_prediction;

    VectorX<Scalar> dh = d_prediction * model.wd.transpose();
    VectorX<Scalar> dc = VectorX<Scalar>::Zero(H);
    std::array<VectorX<Scalar>, 4> da;
    for (std::size_t s = steps; s-- > 0;) {
        const auto& f = cache.gate[kForget][s];
        const auto& i = cache.gate[kInput][s];
        const auto& o = cache.gate[kOutput][s];
        const auto& g = cache.gate[kCandidate][s];
        const auto& tc = cache.tanh_c[s];

        const VectorX<Scalar> d_o = dh.cwiseProduct(tc);
        dc += dh.cwiseProduct(o).cwiseProduct((Scalar(1) - tc.array().square()).matrix());
        const VectorX<Scalar> d_f =
            s > 0 ? VectorX<Scalar>(dc.cwiseProduct(cache.c[s - 1])) : VectorX<Scalar>::Zero(H);
        const VectorX<Scalar> d_i = dc.cwiseProduct(g);
        const VectorX<Scalar> d_g = dc.cwiseProduct(i);

        da[kForget] = d_f.array() * f.array() * (Scalar(1) - f.array());
        da[kInput] = d_i.array() * i.array() * (Scalar(1) - i.array());
        da[kOutput] = d_o.array() * o.array() * (Scalar(1) - o.array());
        da[kCandidate] = d_g.array() * (Scalar(1) - g.array().square());

        VectorX<Scalar> dz = VectorX<Scalar>::Zero(model.W[0].cols());
        for (std::size_t k = 0; k < 4; ++k) {
            grads.W[k].noalias() += da[k] * cache.z[s].transpose();
            grads.b[k] += da[k];
            dz.noalias() += model.W[k].transpose() * da[k];
        }
        dh = dz.head(H);
        dc = dc.cwiseProduct(f).eval();
    }
}

/// Exact gradient of d_prediction * prediction with respect to every parameter.
template <typename Scalar>
LstmGradients<Scalar> backward(const LstmModel<Scalar>& model, const LstmCache<Scalar>& cache,
                               Scalar d_prediction) {
    LstmGradients<Scalar> grads = zeros_like(model);
    backward_accumulate(model, cache, d_prediction, grads);
    return grads;
}

struct TrainHistory {
    /// Mean absolute error (scaled units) at the start of each epoch.
    std::vector<double> loss;
    std::vector<double> epoch_ms;
    /// Model construction (initialisation) wall time.
    double build_ms = 0.0;
    double train_ms = 0.0;
};

template <typename Scalar>
struct TrainResult {
    LstmModel<Scalar> model;
    TrainHistory history;
};

/// Full-batch training: each epoch evaluates mean |prediction - target| over
/// every sample and takes one Adam step. The subgradient at a zero residual
/// is 0.
template <typename Scalar = double>
TrainResult<Scalar> train(const LstmConfig& config, const SupervisedDataset<Scalar>& data) {
    config.validate();
    if (data.size() == 0) throw DataError("cannot train on an empty dataset");
    if (data.n_features() != config.n_features) {
        throw DataError("dataset has " + std::to_string(data.n_features()) +
                        " features but the model is configured for " +
                        std::to_string(config.n_features));
    }
    if (data.lag != config.lag) {
        throw DataError("dataset lag " + std::to_string(data.lag) + " differs from configured lag " +
                        std::to_string(config.lag));
    }

    TrainResult<Scalar> result;
    auto built = time_call([&] { return init<Scalar>(config); });
    result.model = std::move(built.result);
    result.history.build_ms = built.elapsed_ms;
    if (config.epochs == 0) return result;

    auto& model = result.model;
    AdamState<LstmModel<Scalar>> adam(model);
    const auto n = static_cast<Scalar>(data.size());
    const auto train_start = Clock::now();
    result.history.loss.reserve(config.epochs);
    result.history.epoch_ms.reserve(config.epochs);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const auto epoch_start = Clock::now();
        LstmGradients<Scalar> grads = zeros_like(model);
        Scalar loss = Scalar(0);
        for (std::size_t s = 0; s < data.size(); ++s) {
            auto fwd = forward(model, data.inputs[s]);
            const Scalar residual = fwd.prediction - data.targets(static_cast<Eigen::Index>(s));
            loss += std::abs(residual);
            const Scalar sign = residual > Scalar(0) ? Scalar(1) : (residual < Scalar(0) ? Scalar(-1) : Scalar(0));
            backward_accumulate(model, fwd.cache, sign / n, grads);
        }
        loss /= n;
        if (!std::isfinite(static_cast<double>(loss))) {
            throw DataError("training diverged: non-finite loss at epoch " + std::to_string(epoch));
        }
        result.history.loss.push_back(static_cast<double>(loss));
        adam_step(model, grads, adam, config.learning_rate);
        result.history.epoch_ms.push_back(elapsed_ms(epoch_start));
    }
    result.history.train_ms = elapsed_ms(train_start);
    return result;
}

/// Scaled-space predictions, one per sample.
template <typename Scalar>
VectorX<Scalar> predict_scaled(const LstmModel<Scalar>& model, const SupervisedDataset<Scalar>& data) {
    VectorX<Scalar> out(static_cast<Eigen::Index>(data.size()));
    for (std::size_t s = 0; s < data.size(); ++s) {
        out(static_cast<Eigen::Index>(s)) = predict(model, data.inputs[s]);
    }
    return out;
}

/// Predictions in original price units, unscaled with the dataset's scaler.
template <typename Scalar>
VectorX<Scalar> predict_series(const LstmModel<Scalar>& model, const SupervisedDataset<Scalar>& data) {
    return unscale_column(predict_scaled(model, data), data.scaler, MergedSeries::kPrice);
}

// ---------------------------------------------------------------------------
// Model file: "btcf-lstm 1" then "hidden H features F", then per tensor a line
// "<name> <rows> <cols>" followed by one line per row of decimal values.

template <typename Scalar>
void save(const std::filesystem::path& path, const LstmModel<Scalar>& model) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open output file: " + path.string());
    out << std::setprecision(std::numeric_limits<Scalar>::max_digits10);
    out << "btcf-lstm 1\n";
    out << "hidden " << model.hidden_size() << " features " << model.n_features() << '\n';
    std::size_t index = 0;
    for_each_tensor(
        [&](const auto& tensor) {
            out << kTensorNames[index++] << ' ' << tensor.rows() << ' ' << tensor.cols() << '\n';
            for (Eigen::Index r = 0; r < tensor.rows(); ++r) {
                for (Eigen::Index c = 0; c < tensor.cols(); ++c) out << (c ? " " : "") << tensor(r, c);
                out << '\n';
            }
        },
        model);
    if (!out) throw IoError("write failed: " + path.string());
}

template <typename Scalar = double>
LstmModel<Scalar> load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open input file: " + path.string());
    std::string magic;
    int version = 0;
    std::string hidden_kw, features_kw;
    Eigen::Index hidden = 0, features = 0;
    in >> magic >> version >> hidden_kw >> hidden >> features_kw >> features;
    if (!in || magic != "btcf-lstm" || version != 1 || hidden_kw != "hidden" ||
        features_kw != "features" || hidden <= 0 || features <= 0) {
        throw DataError(path.string() + ": not an LSTM model file");
    }
    LstmModel<Scalar> model(hidden, features);
    std::size_t index = 0;
    for_each_tensor(
        [&](auto&& tensor) {
            std::string name;
            Eigen::Index rows = 0, cols = 0;
            in >> name >> rows >> cols;
            if (!in || name != kTensorNames[index] || rows != tensor.rows() || cols != tensor.cols()) {
                throw DataError(path.string() + ": bad header for tensor " +
                                std::string(kTensorNames[index]));
            }
            for (Eigen::Index r = 0; r < rows; ++r) {
                for (Eigen::Index c = 0; c < cols; ++c) {
                    Scalar v{};
                    if (!(in >> v)) {
                        throw DataError(path.string() + ": truncated tensor " +
                                        std::string(kTensorNames[index]));
                    }
                    tensor(r, c) = v;
                }
            }
            ++index;
        },
        model);
    if (!model.all_finite()) throw DataError(path.string() + ": non-finite parameter");
    return model;
}

}  // namespace btcf::lstm
