#include "windprob/ngboost.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace windprob;
using namespace windprob::ngboost;

namespace {

template <typename F>
void expect_code(F&& f, ErrorCode code) {
    try {
        f();
        FAIL() << "expected error " << to_string(code);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

FeatureMatrix one_column(std::vector<double> x) {
    FeatureMatrix m;
    for (std::size_t i = 0; i < x.size(); ++i) {
        m.times.emplace_back(static_cast<std::int64_t>(i));
    }
    m.names = {"x"};
    m.columns = {std::move(x)};
    return m;
}

double central(auto&& f, double x, double h = 1e-5) { return (f(x + h) - f(x - h)) / (2.0 * h); }

// Inverse CDF by bisection on erfc: independent of the rational approximation.
double ppf_bisect(double p) {
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (stats::normal_cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST(Ngboost, LogScoreExamples) {
    EXPECT_NEAR(log_score(0.0, {0.0, 0.0}), 0.9189385, 1e-7);
    EXPECT_NEAR(log_score(1.0, {0.0, 0.0}), 0.9189385 + 0.5, 1e-7);
    const double a = log_score(3.0, {1.0, std::log(2.0)});
    const double b = log_score(1.0 + 2.0 * 2.0, {1.0, std::log(4.0)});
    EXPECT_NEAR(b - a, std::log(2.0), 1e-12);
    expect_code([] { log_score(std::nan(""), {0.0, 0.0}); }, ErrorCode::NonFiniteInput);
}

TEST(Ngboost, NaturalGradientExamples) {
    const auto g0 = natural_gradient(0.0, {0.0, 0.0});
    EXPECT_DOUBLE_EQ(g0.d_mu, 0.0);
    EXPECT_DOUBLE_EQ(g0.d_log_sigma, 0.5);
    const double s = 1.7;
    const auto g1 = natural_gradient(s, {0.0, std::log(s)});
    EXPECT_NEAR(g1.d_mu, -s, 1e-12);
    EXPECT_NEAR(g1.d_log_sigma, 0.0, 1e-12);
    // The μ component does not depend on σ.
    for (double ls : {-2.0, 0.0, 3.0}) {
        EXPECT_DOUBLE_EQ(natural_gradient(2.5, {1.0, ls}).d_mu, -1.5);
    }
}

TEST(Ngboost, GradientsMatchFiniteDifferences) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 50; ++trial) {
        const double y = 3.0 * n01(rng), mu = 3.0 * n01(rng), ls = 0.7 * n01(rng);
        const double num_mu = central([&](double m) { return log_score(y, {m, ls}); }, mu);
        const double num_ls = central([&](double l) { return log_score(y, {mu, l}); }, ls);
        const auto g = ordinary_gradient(y, {mu, ls});
        EXPECT_NEAR(g.d_mu, num_mu, 1e-6 * std::max(1.0, std::abs(num_mu)));
        EXPECT_NEAR(g.d_log_sigma, num_ls, 1e-6 * std::max(1.0, std::abs(num_ls)));
        const auto f = fisher_diagonal({mu, ls});
        const auto nat = natural_gradient(y, {mu, ls});
        EXPECT_NEAR(nat.d_mu, num_mu / f[0], 1e-6 * std::max(1.0, std::abs(nat.d_mu)));
        EXPECT_NEAR(nat.d_log_sigma, num_ls / f[1], 1e-6 * std::max(1.0, std::abs(nat.d_log_sigma)));
    }
}

TEST(Ngboost, FisherMatchesExpectedOuterProduct) {
    // E_y[∇L ∇Lᵀ] by trapezoid quadrature over y ~ N(μ, σ²).
    const GaussianParams p{0.4, std::log(1.3)};
    const double s = p.sigma();
    double i11 = 0.0, i22 = 0.0, i12 = 0.0;
    const int m = 40000;
    const double lo = -12.0, hi = 12.0, h = (hi - lo) / m;
    for (int k = 0; k <= m; ++k) {
        const double z = lo + h * k;
        const double w = (k == 0 || k == m ? 0.5 : 1.0) * h * stats::normal_pdf(z);
        const auto g = ordinary_gradient(p.mu + s * z, p);
        i11 += w * g.d_mu * g.d_mu;
        i22 += w * g.d_log_sigma * g.d_log_sigma;
        i12 += w * g.d_mu * g.d_log_sigma;
    }
    const auto f = fisher_diagonal(p);
    EXPECT_NEAR(i11, f[0], 1e-8);
    EXPECT_NEAR(i22, f[1], 1e-8);
    EXPECT_NEAR(i12, 0.0, 1e-8);
}

TEST(Ngboost, GaussianQuantiles) {
    EXPECT_NEAR(stats::normal_ppf(0.95), 1.6449, 1e-4);
    for (double p : {1e-6, 0.001, 0.02, 0.05, 0.3, 0.5, 0.77, 0.95, 0.999}) {
        EXPECT_NEAR(stats::normal_ppf(p), ppf_bisect(p), 1e-9) << p;
    }
    const GaussianParams g{2.0, std::log(0.5)};
    const auto q = gaussian_quantiles(g, kFixedLevels);
    EXPECT_DOUBLE_EQ(q[3], 2.0);
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_NEAR(q[k] - 2.0, -(q[6 - k] - 2.0), 1e-12);
    }
    for (std::size_t k = 1; k < q.size(); ++k) {
        EXPECT_LT(q[k - 1], q[k]);
    }
}

TEST(Ngboost, HomoskedasticRecoversSigma) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::normal_distribution<double> n01;
    auto gen = [&](std::size_t n) {
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = u(rng);
            y[i] = 2.0 * x[i] + n01(rng);
        }
        return std::pair{one_column(x), y};
    };
    const auto [xt, yt] = gen(20000);
    const auto [xv, yv] = gen(5000);
    gbt::GbtParams p;
    p.n_estimators = 500;
    p.max_depth = 3;
    p.min_child_weight = 200;
    p.early_stopping_rounds = 20;
    const auto model = train_ngboost(xt, yt, p, {}, gbt::Validation{xv, yv});
    std::vector<double> grid;
    for (int k = 0; k <= 20; ++k) {
        grid.push_back(-1.8 + 0.18 * k);
    }
    for (const auto& g : model.predict_params(one_column(grid))) {
        EXPECT_GE(g.sigma(), 0.85);
        EXPECT_LE(g.sigma(), 1.15);
    }
}

TEST(Ngboost, HeteroskedasticSigmaIncreasesWithSpread) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::normal_distribution<double> n01;
    const std::size_t n = 6000;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = u(rng);
        y[i] = (0.2 + std::abs(x[i])) * n01(rng);
    }
    gbt::GbtParams p;
    p.n_estimators = 200;
    p.max_depth = 3;
    p.min_child_weight = 50;
    NgboostTrace trace;
    const auto model = train_ngboost(one_column(x), y, p, {}, std::nullopt, &trace);
    double prev = -1.0;
    for (double a : {0.25, 0.75, 1.25, 1.75, 2.25, 2.75}) {
        const auto params = model.predict_params(one_column({-a, a}));
        const double s = 0.5 * (params[0].sigma() + params[1].sigma());
        EXPECT_GT(s, prev) << "|x|=" << a;
        prev = s;
    }
    ASSERT_FALSE(trace.train_log_score.empty());
    double last = trace.initial_log_score;
    for (double l : trace.train_log_score) {
        EXPECT_LE(l, last + 1e-12);
        last = l;
    }
}

TEST(Ngboost, DegenerateTargetsAndFloor) {
    const auto x = one_column({0, 1, 2, 3});
    gbt::GbtParams p;
    p.n_estimators = 5;
    expect_code([&] { train_ngboost(x, std::vector<double>{2, 2, 2, 2}, p); }, ErrorCode::DegenerateVariance);
    NgboostOptions opts;
    opts.sigma_floor = 0.01;
    const auto model = train_ngboost(x, std::vector<double>{2, 2, 2, 2 + 1e-9}, p, opts);
    for (const auto& g : model.predict_params(x)) {
        EXPECT_GE(g.sigma(), 0.01 * (1.0 - 1e-12));
        EXPECT_TRUE(std::isfinite(g.mu));
    }
}

TEST(Ngboost, PredictDistributionAndRoundTrip) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n01;
    std::vector<double> x(300), y(300);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = static_cast<double>(i % 17);
        y[i] = 0.3 * x[i] + n01(rng);
    }
    gbt::GbtParams p;
    p.n_estimators = 20;
    p.subsample = 0.8;
    p.seed = 11;
    const auto fm = one_column(x);
    const auto model = train_ngboost(fm, y, p);
    const auto d = model.predict(fm);
    ASSERT_EQ(d.size(), x.size());
    for (const auto& row : d) {
        EXPECT_NO_THROW(row.validate());
        ASSERT_TRUE(row.gaussian.has_value());
        EXPECT_DOUBLE_EQ(*row.at(0.5), row.gaussian->mu);
    }
    const auto back = ngboost_from_json(nlohmann::json::parse(to_json(model).dump()));
    EXPECT_EQ(to_json(back).dump(), to_json(model).dump());
    EXPECT_EQ(back.predict(fm)[7].values, d[7].values);
    const auto again = train_ngboost(fm, y, p);
    EXPECT_EQ(to_json(again).dump(), to_json(model).dump());
}
