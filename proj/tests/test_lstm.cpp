#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "btcf/adam.hpp"
#include "btcf/dataset.hpp"
#include "btcf/lstm.hpp"
#include "lstm_oracles.hpp"
#include "test_support.hpp"

using namespace btcf;
using lstm::LstmConfig;
using lstm::LstmModel;

namespace {

SupervisedDataset<double> sine_dataset(std::size_t n, std::size_t lag, FeatureSet features = FeatureSet::price_only) {
    MergedSeries s;
    s.values.resize(static_cast<Eigen::Index>(n), 2);
    for (std::size_t i = 0; i < n; ++i) {
        s.times.push_back(static_cast<std::int64_t>(i));
        s.values(static_cast<Eigen::Index>(i), 0) = 100.0 + 10.0 * std::sin(2.0 * M_PI * static_cast<double>(i) / 20.0);
        s.values(static_cast<Eigen::Index>(i), 1) = 0.0;
    }
    const auto p = fit_scaler(s.values);
    return to_supervised(scale_series(s, p), p, lag, features);
}

LstmConfig small_config(std::size_t lag = 3, std::size_t epochs = 30) {
    LstmConfig c;
    c.hidden_size = 4;
    c.lag = lag;
    c.epochs = epochs;
    c.seed = 17;
    return c;
}

}  // namespace

TEST(LstmInit, DeterministicShapesAndRange) {
    LstmConfig c;
    c.n_features = 2;
    c.seed = 123;
    const auto a = lstm::init(c);
    const auto b = lstm::init(c);
    EXPECT_TRUE(a == b);
    EXPECT_EQ(a.W[lstm::kForget].rows(), 32);
    EXPECT_EQ(a.W[lstm::kForget].cols(), 34);
    EXPECT_EQ(a.wd.cols(), 32);
    const double k = 1.0 / std::sqrt(32.0);
    for (const auto& w : a.W) {
        EXPECT_LE(w.cwiseAbs().maxCoeff(), k);
    }
    EXPECT_LE(a.wd.cwiseAbs().maxCoeff(), k);
    for (const auto& bias : a.b) EXPECT_TRUE(bias.isZero(0));
    EXPECT_EQ(a.bd, 0.0);
    c.seed = 124;
    EXPECT_FALSE(lstm::init(c) == a);
}

TEST(LstmConfig, Validation) {
    LstmConfig c;
    c.hidden_size = 0;
    EXPECT_THROW(c.validate(), DomainError);
    c = {};
    c.n_features = 3;
    EXPECT_THROW(c.validate(), DomainError);
    c = {};
    c.lag = 0;
    EXPECT_THROW(c.validate(), DomainError);
    c = {};
    c.learning_rate = 0.0;
    EXPECT_THROW(c.validate(), DomainError);
}

TEST(LstmForward, ZeroModel) {
    LstmModel<double> m(5, 2);
    Eigen::MatrixXd window = Eigen::MatrixXd::Random(4, 2);
    const auto r = lstm::forward(m, window);
    EXPECT_EQ(r.prediction, 0.0);
    for (std::size_t t = 0; t < r.cache.steps(); ++t) {
        EXPECT_TRUE(r.cache.gate[lstm::kForget][t].isApprox(Eigen::VectorXd::Constant(5, 0.5)));
        EXPECT_TRUE(r.cache.gate[lstm::kCandidate][t].isZero(0));
        EXPECT_TRUE(r.cache.c[t].isZero(0));
        EXPECT_TRUE(r.cache.h[t].isZero(0));
    }
}

TEST(LstmForward, ActivationRanges) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const auto m = test::random_model(6, 2, rng, 3.0);
        const Eigen::MatrixXd window = Eigen::MatrixXd::Random(5, 2) * 10.0;
        const auto r = lstm::forward(m, window);
        for (std::size_t t = 0; t < r.cache.steps(); ++t) {
            for (auto g : {lstm::kForget, lstm::kInput, lstm::kOutput}) {
                EXPECT_GT(r.cache.gate[g][t].minCoeff(), 0.0);
                EXPECT_LT(r.cache.gate[g][t].maxCoeff(), 1.0);
            }
            EXPECT_LT(r.cache.h[t].cwiseAbs().maxCoeff(), 1.0);
        }
    }
}

TEST(LstmForward, MatchesReferenceRecurrence) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 40; ++trial) {
        const auto m = test::random_model(2, 1 + trial % 2, rng);
        const Eigen::MatrixXd window = (Eigen::MatrixXd::Random(2, m.n_features()).array() + 1.0) / 2.0;
        EXPECT_NEAR(lstm::predict(m, window), test::reference_prediction(m, window), 1e-14);
    }
}

TEST(LstmForward, RejectsBadWindows) {
    LstmModel<double> m(3, 1);
    Eigen::MatrixXd w(2, 1);
    w << 0.1, std::nan("");
    EXPECT_THROW(lstm::forward(m, w), DataError);
    EXPECT_THROW(lstm::forward(m, Eigen::MatrixXd::Zero(2, 2)), DataError);
    EXPECT_THROW(lstm::forward(m, Eigen::MatrixXd(0, 1)), DataError);
}

TEST(LstmBackward, FiniteDifferences) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 30; ++trial) {
        const Eigen::Index hidden = 1 + trial % 4;
        const Eigen::Index features = 1 + trial % 2;
        const Eigen::Index lag = 1 + trial % 3;
        const auto m = test::random_model(hidden, features, rng);
        const Eigen::MatrixXd window = (Eigen::MatrixXd::Random(lag, features).array() + 1.0) / 2.0;
        const auto check = test::check_gradients(m, window);
        EXPECT_LT(check.max_relative_error, 1e-4) << "trial " << trial;
    }
}

TEST(LstmBackward, ZeroUpstreamGradient) {
    std::mt19937_64 rng(1);
    const auto m = test::random_model(3, 2, rng);
    const auto r = lstm::forward(m, Eigen::MatrixXd::Constant(3, 2, 0.5));
    const auto g = lstm::backward(m, r.cache, 0.0);
    lstm::for_each_tensor([](const auto& t) { EXPECT_TRUE(t.isZero(0)); }, g);
}

TEST(LstmBackward, SingleStepClosedForm) {
    // With lag 1 and h0 = c0 = 0: c = i*g, h = o*tanh(c), y = wd.h + bd.
    std::mt19937_64 rng(12);
    const auto m = test::random_model(3, 1, rng);
    Eigen::MatrixXd x(1, 1);
    x << 0.3;
    const auto r = lstm::forward(m, x);
    const auto grads = lstm::backward(m, r.cache, 1.0);
    const auto& i = r.cache.gate[lstm::kInput][0];
    const auto& g = r.cache.gate[lstm::kCandidate][0];
    const auto& o = r.cache.gate[lstm::kOutput][0];
    const Eigen::ArrayXd tc = (i.array() * g.array()).tanh();
    const Eigen::ArrayXd dh = m.wd.transpose().array();
    const Eigen::ArrayXd dc = dh * o.array() * (1.0 - tc.square());
    EXPECT_TRUE(grads.wd.transpose().isApprox((o.array() * tc).matrix(), 1e-14));
    EXPECT_EQ(grads.bd, 1.0);
    EXPECT_TRUE(grads.b[lstm::kOutput].isApprox((dh * tc * o.array() * (1.0 - o.array())).matrix(), 1e-14));
    EXPECT_TRUE(grads.b[lstm::kCandidate].isApprox((dc * i.array() * (1.0 - g.array().square())).matrix(), 1e-14));
    EXPECT_TRUE(grads.b[lstm::kInput].isApprox((dc * g.array() * i.array() * (1.0 - i.array())).matrix(), 1e-14));
    // c_prev = 0 so the forget gate gets no gradient
    EXPECT_TRUE(grads.b[lstm::kForget].isZero(0));
    EXPECT_TRUE(grads.W[lstm::kForget].isZero(0));
    // h_prev = 0 so the recurrent block of every W is zero
    for (const auto& w : grads.W) EXPECT_TRUE(w.leftCols(3).isZero(0));
}

TEST(Adam, ZeroGradientLeavesParameters) {
    std::mt19937_64 rng(3);
    auto m = test::random_model(3, 1, rng);
    const auto before = m;
    AdamState<LstmModel<double>> state(m);
    adam_step(m, lstm::zeros_like(m), state, 0.01);
    EXPECT_TRUE(m == before);
    EXPECT_EQ(state.step, 1);
}

TEST(Adam, FirstStepClosedForm) {
    Eigen::VectorXd p(1), g(1);
    p << 1.0;
    g << 0.5;
    AdamState<Eigen::VectorXd> state(p);
    adam_step(p, g, state, 0.01);
    // m_hat = 0.5, v_hat = 0.25: step = lr * 0.5 / (0.5 + eps)
    EXPECT_NEAR(p(0), 1.0 - 0.01 * 0.5 / (0.5 + 1e-8), 1e-15);
    EXPECT_NEAR(p(0), 0.99, 1e-9);
    EXPECT_EQ(state.step, 1);
    EXPECT_GE(state.v.minCoeff(), 0.0);
}

TEST(Adam, Deterministic) {
    std::mt19937_64 rng(30);
    const auto start = test::random_model(2, 2, rng);
    const auto grads = test::random_model(2, 2, rng);
    auto a = start, b = start;
    AdamState<LstmModel<double>> sa(a), sb(b);
    for (int k = 0; k < 3; ++k) {
        adam_step(a, grads, sa, 0.01);
        adam_step(b, grads, sb, 0.01);
    }
    EXPECT_TRUE(a == b);
    EXPECT_TRUE(sa.m == sb.m);
    EXPECT_TRUE(sa.v == sb.v);
}

TEST(LstmTrain, ZeroEpochsReturnsInit) {
    auto c = small_config(3, 0);
    const auto ds = sine_dataset(40, 3);
    const auto r = lstm::train(c, ds);
    EXPECT_TRUE(r.model == lstm::init(c));
    EXPECT_TRUE(r.history.loss.empty());
    EXPECT_TRUE(r.history.epoch_ms.empty());
}

TEST(LstmTrain, Deterministic) {
    const auto c = small_config(3, 25);
    const auto ds = sine_dataset(60, 3);
    const auto a = lstm::train(c, ds);
    const auto b = lstm::train(c, ds);
    EXPECT_TRUE(a.model == b.model);
    EXPECT_EQ(a.history.loss, b.history.loss);
}

TEST(LstmTrain, LossTrendsDownOnSine) {
    LstmConfig c;
    c.hidden_size = 8;
    c.lag = 5;
    c.epochs = 150;
    c.seed = 7;
    const auto ds = sine_dataset(120, 5);
    const auto r = lstm::train(c, ds);
    const auto& loss = r.history.loss;
    ASSERT_EQ(loss.size(), 150u);
    ASSERT_EQ(r.history.epoch_ms.size(), 150u);
    const double slack = 0.1 * loss.front();
    for (std::size_t n = 0; n < loss.size(); ++n) {
        ASSERT_TRUE(std::isfinite(loss[n]));
        ASSERT_GE(loss[n], 0.0);
        for (std::size_t k = n + 1; k < loss.size(); k += 7) ASSERT_LE(loss[k], loss[n] + slack) << n << " " << k;
    }
    EXPECT_LT(loss.back(), 0.5 * loss.front());
}

TEST(LstmTrain, RejectsMismatchedData) {
    auto c = small_config(3, 1);
    EXPECT_THROW(lstm::train(c, sine_dataset(30, 2)), DataError);
    EXPECT_THROW(lstm::train(c, sine_dataset(30, 3, FeatureSet::price_and_sentiment)), DataError);
    SupervisedDataset<double> empty;
    empty.lag = 3;
    empty.feature_names = {"price"};
    EXPECT_THROW(lstm::train(c, empty), DataError);
}

TEST(LstmPredict, SeriesUnscaling) {
    const auto ds = sine_dataset(50, 2);
    LstmModel<double> zero(4, 1);
    const auto pred = lstm::predict_series(zero, ds);
    ASSERT_EQ(static_cast<std::size_t>(pred.size()), ds.size());
    EXPECT_TRUE((pred.array() == ds.scaler.min(0)).all());

    std::mt19937_64 rng(5);
    const auto m = test::random_model(4, 1, rng);
    const Eigen::VectorXd scaled = lstm::predict_scaled(m, ds);
    Eigen::MatrixXd as_matrix(scaled.size(), 2);
    as_matrix.col(0) = scaled;
    as_matrix.col(1).setZero();
    const Eigen::VectorXd oracle = unscale(as_matrix, ds.scaler).col(0);
    EXPECT_TRUE(lstm::predict_series(m, ds).isApprox(oracle, 1e-14));
}

TEST(LstmMultiFeature, ZeroSentimentMatchesSingle) {
    std::mt19937_64 rng(77);
    const Eigen::Index H = 5;
    const auto single = test::random_model(H, 1, rng);
    LstmModel<double> multi(H, 2);
    for (std::size_t g = 0; g < 4; ++g) {
        multi.W[g].leftCols(H + 1) = single.W[g];
        multi.W[g].col(H + 1).setZero();
        multi.b[g] = single.b[g];
    }
    multi.wd = single.wd;
    multi.bd = single.bd;
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd prices = (Eigen::MatrixXd::Random(4, 1).array() + 1.0) / 2.0;
        Eigen::MatrixXd both(4, 2);
        both.col(0) = prices;
        both.col(1).setZero();
        EXPECT_NEAR(lstm::predict(multi, both), lstm::predict(single, prices), 1e-9);
    }
}

TEST(LstmModelFile, RoundTrip) {
    test::TempDir dir;
    std::mt19937_64 rng(99);
    const auto m = test::random_model(3, 2, rng);
    lstm::save(dir / "m.txt", m);
    const auto back = lstm::load(dir / "m.txt");
    EXPECT_TRUE(back == m);
    EXPECT_EQ(test::slurp(dir / "m.txt").substr(0, 12), "btcf-lstm 1\n");
    test::write_file(dir / "bad.txt", "btcf-lstm 1\nhidden 3 features 2\nWf 3 5\n1 2\n");
    EXPECT_THROW(lstm::load(dir / "bad.txt"), DataError);
    EXPECT_THROW(lstm::load(dir / "none.txt"), DataError);
}

TEST(LstmFloat, SinglePrecisionInstantiates) {
    LstmConfig c = small_config(2, 3);
    const auto ds = sine_dataset(20, 2);
    SupervisedDataset<float> f;
    f.lag = ds.lag;
    f.feature_names = ds.feature_names;
    f.scaler = {ds.scaler.min.cast<float>(), ds.scaler.max.cast<float>()};
    f.targets = ds.targets.cast<float>();
    for (const auto& w : ds.inputs) f.inputs.push_back(w.cast<float>());
    f.target_times = ds.target_times;
    const auto r = lstm::train(c, f);
    EXPECT_EQ(r.history.loss.size(), 3u);
    EXPECT_TRUE(r.model.all_finite());
}
