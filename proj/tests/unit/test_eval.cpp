#include "windprob/cqr.hpp"
#include "windprob/eval.hpp"
#include "windprob/layout_io.hpp"
#include "windprob/ngboost.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace windprob;
using namespace windprob::eval;

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

PredictiveDistribution quantiles(std::vector<double> values) {
    PredictiveDistribution d;
    d.levels.assign(kFixedLevels.begin(), kFixedLevels.end());
    d.values = std::move(values);
    return d;
}

PredictiveDistribution constant(double v) { return quantiles(std::vector<double>(kFixedLevels.size(), v)); }

PredictiveDistribution normal_quantiles(double mu, double sigma) {
    return quantiles(ngboost::gaussian_quantiles({mu, std::log(sigma)}, kFixedLevels));
}

FarmLayout small_farm() { return FarmLayout("F", reference_grid("T", 1, 2, 7, 7)); }

} // namespace

TEST(Eval, MaeExamples) {
    const std::vector<double> a{1, 2, 3};
    EXPECT_EQ(mae(a, a), 0.0);
    EXPECT_DOUBLE_EQ(mae(std::vector<double>{0, 2}, std::vector<double>{1, 1}), 1.0);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n01;
    std::vector<double> y(1000), yh(1000);
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = n01(rng);
        yh[i] = n01(rng);
    }
    const double oracle = std::transform_reduce(y.begin(), y.end(), yh.begin(), 0.0, std::plus<>(),
                                                [](double u, double v) { return std::abs(u - v); }) /
                          1000.0;
    EXPECT_NEAR(mae(y, yh), oracle, 1e-12);
    expect_code([&] { mae(a, std::vector<double>{1}); }, ErrorCode::LengthMismatch);
    expect_code([] { mae(std::vector<double>{}, std::vector<double>{}); }, ErrorCode::EmptyData);
}

TEST(Eval, RiemannWeights) {
    const auto w = riemann_weights(kFixedLevels);
    const std::array<double, 7> expected = {0.075, 0.10, 0.20, 0.25, 0.20, 0.10, 0.075};
    for (std::size_t k = 0; k < w.size(); ++k) {
        EXPECT_NEAR(w[k], expected[k], 1e-15) << k;
    }
    EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-15);
}

TEST(Eval, DegenerateCrpsClosedForm) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int i = 0; i < 200; ++i) {
        const double y = u(rng), yh = u(rng);
        const double c = crps_from_quantiles(y, constant(yh));
        EXPECT_NEAR(c, degenerate_crps(y, yh), 1e-12);
        // Σ w_k τ_k = Σ w_k (1 - τ_k) = ½, so twice the score is the absolute error.
        EXPECT_NEAR(2.0 * c, std::abs(y - yh), 1e-12);
    }
    EXPECT_EQ(crps_from_quantiles(4.0, constant(4.0)), 0.0);
}

TEST(Eval, CrpsHandComputed) {
    // y at the median, quantiles at ±1, ±2, ±3 around it.
    const auto d = quantiles({-3, -2, -1, 0, 1, 2, 3});
    // Below y the loss is τ(y - q), above it (1 - τ)(q - y); both tails give the same terms.
    const double hand = 2.0 * (0.075 * 0.05 * 3 + 0.10 * 0.10 * 2 + 0.20 * 0.25 * 1);
    EXPECT_NEAR(crps_from_quantiles(0.0, d), hand, 1e-12);
    double prev = crps_from_quantiles(0.0, d);
    for (double s : {1.5, 2.0, 3.0}) {
        const auto wide = quantiles({-3 * s, -2 * s, -1 * s, 0, 1 * s, 2 * s, 3 * s});
        const double c = crps_from_quantiles(0.0, wide);
        EXPECT_GT(c, prev);
        prev = c;
    }
    PredictiveDistribution partial;
    partial.levels = {0.25, 0.5, 0.75};
    partial.values = {0, 1, 2};
    expect_code([&] { crps_from_quantiles(1.0, partial); }, ErrorCode::MissingLevel);
    expect_code([] { crps_from_quantiles(1.0, quantiles({0, 1, 2, 3, 2, 5, 6})); }, ErrorCode::InvalidArgument);
}

TEST(Eval, CrpsIsNonNegative) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n01;
    for (int i = 0; i < 500; ++i) {
        std::vector<double> v(7);
        for (auto& x : v) {
            x = 3.0 * n01(rng);
        }
        std::sort(v.begin(), v.end());
        EXPECT_GE(crps_from_quantiles(3.0 * n01(rng), quantiles(v)), 0.0);
    }
}

TEST(Eval, ProprietySpotCheck) {
    int strict_shift = 0, strict_inflate = 0;
    for (int seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(100 + seed);
        std::uniform_real_distribution<double> ux(0.0, 5.0);
        std::normal_distribution<double> n01;
        double truth = 0.0, shifted = 0.0, inflated = 0.0;
        for (int i = 0; i < 2000; ++i) {
            const double mu = std::sin(ux(rng)) * 3.0;
            const double sigma = 0.5 + 0.2 * mu * mu;
            const double y = mu + sigma * n01(rng);
            truth += crps_from_quantiles(y, normal_quantiles(mu, sigma));
            shifted += crps_from_quantiles(y, normal_quantiles(mu + 0.3 * sigma, sigma));
            inflated += crps_from_quantiles(y, normal_quantiles(mu, 1.5 * sigma));
        }
        strict_shift += truth < shifted ? 1 : 0;
        strict_inflate += truth < inflated ? 1 : 0;
    }
    EXPECT_GE(strict_shift, 18);
    EXPECT_GE(strict_inflate, 18);
}

TEST(Eval, IntervalCoverage) {
    const std::vector<PredictiveDistribution> d(4, quantiles({0, 1, 2, 3, 4, 5, 6}));
    EXPECT_EQ(interval_coverage(std::vector<double>{1.0, 2.0, 4.5, 5.0}, d, 0.2), 1.0);
    EXPECT_EQ(interval_coverage(std::vector<double>{-1, 7, 8, 0.5}, d, 0.2), 0.0);
    EXPECT_EQ(interval_coverage(std::vector<double>{0, 6, 3, 9}, d, 0.1), 0.75);
    expect_code([&] { interval_coverage(std::vector<double>{0, 1, 2, 3}, d, 0.3); }, ErrorCode::MissingLevel);
}

TEST(Eval, CqrCoverageWithinBand) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 4.0);
    std::normal_distribution<double> n01;
    auto gen = [&](std::size_t n) {
        FeatureMatrix m;
        m.names = {"x"};
        m.columns.assign(1, {});
        std::vector<double> y;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = u(rng);
            m.times.emplace_back(static_cast<std::int64_t>(i));
            m.columns[0].push_back(x);
            y.push_back(x + (0.3 + 0.3 * x) * n01(rng));
        }
        return std::pair{m, y};
    };
    const auto [xt, yt] = gen(2000);
    const auto [xc, yc] = gen(1000);
    const auto [xs, ys] = gen(5000);
    gbt::GbtParams p;
    p.n_estimators = 60;
    p.max_depth = 3;
    p.min_child_weight = 20;
    const auto model = cqr::fit_cqr(xt, yt, xc, yc, p);
    const auto d = model.predict(xs);
    for (double alpha : {0.1, 0.2}) {
        const double cov = interval_coverage(ys, d, alpha);
        EXPECT_GE(cov, 1.0 - alpha - 0.02) << alpha;
        EXPECT_LE(cov, 1.0 - alpha + 1.0 / 1001.0 + 0.02) << alpha;
    }
}

TEST(Eval, AssignRegion) {
    const auto farm = small_farm();
    const auto& t = farm.modal_turbine();
    EXPECT_EQ(assign_region(0.0, t), Region::One);
    EXPECT_EQ(assign_region(std::nextafter(t.cut_in(), 0.0), t), Region::One);
    EXPECT_EQ(assign_region(t.cut_in(), t), Region::Two);
    EXPECT_EQ(assign_region(t.rated_speed(), t), Region::Three);
    EXPECT_EQ(assign_region(std::nextafter(t.cut_out(), 0.0), t), Region::Three);
    EXPECT_EQ(assign_region(t.cut_out(), t), Region::Excluded);
    expect_code([&] { assign_region(-1.0, t); }, ErrorCode::InvalidArgument);
}

TEST(Eval, ReportAggregation) {
    const auto farm = small_farm();
    const double cap = farm.installed_capacity();
    const auto& t = farm.modal_turbine();
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> speed(0.0, t.cut_out() + 3.0), power(0.0, cap);
    FarmForecasts f{&farm, {}, {}, {}};
    std::size_t n_excluded = 0;
    for (int i = 0; i < 600; ++i) {
        const double v = speed(rng);
        const double c = power(rng);
        f.mean_speed.push_back(v);
        f.y.push_back(power(rng));
        f.dists.push_back(quantiles({c - 3, c - 2, c - 1, c, c + 1, c + 2, c + 3}));
        n_excluded += v >= t.cut_out() ? 1 : 0;
    }
    const auto rep = build_report("test", std::vector<FarmForecasts>{f});
    ASSERT_EQ(rep.farms.size(), 1u);
    const auto& fr = rep.farms[0];
    EXPECT_EQ(fr.excluded, n_excluded);
    std::size_t n = 0;
    double mae_sum = 0.0, crps_sum = 0.0;
    for (const auto& r : fr.regions) {
        n += r.n;
        mae_sum += static_cast<double>(r.n) * r.mae;
        crps_sum += static_cast<double>(r.n) * r.crps.value_or(0.0);
    }
    EXPECT_EQ(n + n_excluded, 600u);
    EXPECT_EQ(fr.overall.n, n);
    EXPECT_NEAR(mae_sum / static_cast<double>(n), fr.overall.mae, 1e-12);
    EXPECT_NEAR(crps_sum / static_cast<double>(n), *fr.overall.crps, 1e-12);

    // Independent recomputation over the kept rows.
    double abs_err = 0.0;
    for (std::size_t i = 0; i < f.y.size(); ++i) {
        if (f.mean_speed[i] < t.cut_out()) {
            abs_err += std::abs(f.y[i] - f.dists[i].values[3]);
        }
    }
    EXPECT_NEAR(fr.overall.mae, abs_err / static_cast<double>(n) / cap, 1e-12);
    EXPECT_EQ(rep.average.n_farms, 1u);
    EXPECT_DOUBLE_EQ(rep.average.mae, fr.overall.mae);
    ASSERT_EQ(rep.coverage_average.size(), 2u);
    EXPECT_NO_THROW(to_json(rep).dump());
    EXPECT_NE(format_table(rep).find("region 3"), std::string::npos);
}

TEST(Eval, PointForecastsHaveNoCrps) {
    const auto a = small_farm();
    const auto b = FarmLayout("G", reference_grid("U", 1, 1, 7, 7));
    auto point = [](double v) {
        PredictiveDistribution d;
        d.levels = {0.5};
        d.values = {v};
        return d;
    };
    const FarmForecasts fa{&a, {1.0, 3.0}, {point(2.0), point(2.0)}, {5.0, 12.0}};
    const FarmForecasts fb{&b, {0.0, 1.0}, {point(0.5), point(0.5)}, {1.0, 9.0}};
    const auto rep = build_report("point", std::vector<FarmForecasts>{fa, fb});
    EXPECT_FALSE(rep.average.crps.has_value());
    EXPECT_TRUE(rep.coverage_average.empty());
    EXPECT_NEAR(rep.farms[0].overall.mae, 1.0 / a.installed_capacity(), 1e-12);
    EXPECT_NEAR(rep.average.mae, 0.5 * (1.0 / a.installed_capacity() + 0.5 / b.installed_capacity()), 1e-12);
    EXPECT_EQ(rep.region_average[0].n_farms, 1u);
    EXPECT_NE(format_table(rep).find("NA"), std::string::npos);
}

TEST(Eval, NormalizationIsLinear) {
    const auto farm = small_farm();
    EXPECT_DOUBLE_EQ(normalize_power(125.0, 250.0), 0.5);
    EXPECT_NEAR(normalize_power(3.0 + 4.5, farm), normalize_power(3.0, farm) + normalize_power(4.5, farm), 1e-15);
    expect_code([] { normalize_power(1.0, 0.0); }, ErrorCode::ZeroCapacity);
}
