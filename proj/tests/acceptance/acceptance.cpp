// Acceptance runner. `acceptance N` runs criterion N, `acceptance` runs all ten. Each criterion
// prints one PASS/FAIL line; the exit status is nonzero if any selected criterion fails.

#include "windprob/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace windprob;
using namespace windprob::pipeline;
namespace fs = std::filesystem;

namespace {

constexpr int kSeeds = 20;
constexpr int kRequiredSeeds = 18;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
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

// ---------------------------------------------------------------------------------------------
// 1. Conformal coverage

SplitData concat(const std::vector<const SplitData*>& parts) {
    SplitData out;
    out.x.names = parts.front()->x.names;
    out.x.columns.assign(out.x.names.size(), {});
    out.x.target.emplace();
    for (const auto* p : parts) {
        out.x.times.insert(out.x.times.end(), p->x.times.begin(), p->x.times.end());
        for (std::size_t c = 0; c < out.x.columns.size(); ++c) {
            out.x.columns[c].insert(out.x.columns[c].end(), p->x.columns[c].begin(), p->x.columns[c].end());
        }
        out.x.target->insert(out.x.target->end(), p->y().begin(), p->y().end());
        out.mean_speed.insert(out.mean_speed.end(), p->mean_speed.begin(), p->mean_speed.end());
        out.mean_direction.insert(out.mean_direction.end(), p->mean_direction.begin(), p->mean_direction.end());
    }
    return out;
}

Outcome conformal_coverage() {
    constexpr std::size_t n_train = 2000, n_cal = 1000, n_test = 5000;
    const std::vector<double> alphas{0.2, 0.1};
    std::vector<double> mean_cov(alphas.size(), 0.0);
    std::vector<double> tied(alphas.size(), 0.0); // share of calibration scores equal to s_hat
    for (int seed = 1; seed <= kSeeds; ++seed) {
        Config cfg;
        cfg.scenario.seed = static_cast<std::uint64_t>(seed);
        cfg.scenario.n_hours = 10000;
        const auto layouts = std::vector<FarmLayout>{default_cluster()[0]};
        const auto d = generate_synthetic(cfg.scenario, layouts);
        const auto ds = prepare_dataset({d.forecasts, d.production, d.flags, d.reference, d.layouts}, cfg);
        const auto& src = ds.farms.front();
        const auto pooled = concat({&src.train, &src.calibration, &src.test});
        require(pooled.rows() >= n_train + n_cal + n_test, ErrorCode::EmptyData, "scenario too short for coverage check");
        // Random assignment of hours to the three roles makes the rows exchangeable.
        std::vector<std::size_t> idx(pooled.rows());
        std::iota(idx.begin(), idx.end(), 0);
        std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
        std::shuffle(idx.begin(), idx.end(), rng);
        auto take = [&](std::size_t from, std::size_t n) {
            std::vector<std::size_t> rows(idx.begin() + static_cast<std::ptrdiff_t>(from),
                                          idx.begin() + static_cast<std::ptrdiff_t>(from + n));
            return pipeline::detail::subset(pooled, rows);
        };
        FarmData farm;
        farm.farm_id = src.farm_id;
        farm.train = take(0, n_train);
        farm.calibration = take(n_train, n_cal);
        farm.test = take(n_train + n_cal, n_test);
        cfg.heads.cqr.alphas = alphas;
        const auto model = train_head(Head::Cqr, cfg.heads, farm, ds.layout(farm.farm_id), farm_seed(cfg.seed, 0));
        const auto dists = predict_head(model, farm.test.x, cfg.seed);
        const auto cqr_model = cqr::cqr_from_json(model.bundle);
        const auto raw = cqr_model.models.predict_raw(farm.calibration.x);
        for (std::size_t a = 0; a < alphas.size(); ++a) {
            mean_cov[a] += eval::interval_coverage(farm.test.y(), dists, alphas[a]) / kSeeds;
            const auto& cal = cqr_model.calibrations[a];
            std::size_t ties = 0;
            for (std::size_t i = 0; i < raw.size(); ++i) {
                PredictiveDistribution q;
                q.levels = cqr_model.models.levels;
                q.values = cqr::monotonize(raw[i]);
                ties += cqr::conformal_score(farm.calibration.y()[i], *q.at(cal.lower_level()), *q.at(cal.upper_level())) ==
                                cal.s_hat
                            ? 1
                            : 0;
            }
            tied[a] += static_cast<double>(ties) / static_cast<double>(raw.size()) / kSeeds;
        }
    }
    Outcome o{true, ""};
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        const double target = 1.0 - alphas[a];
        const double lo = target - 0.02;
        const double hi = target + 1.0 / (n_cal + 1.0) + 0.02;
        o.pass = o.pass && mean_cov[a] >= lo && mean_cov[a] <= hi;
        o.detail += fmt("%s%.0f%% interval: mean coverage %.4f in [%.4f, %.4f], %.1f%% of scores tied at s_hat",
                        a ? "; " : "", 100 * target, mean_cov[a], lo, hi, 100 * tied[a]);
    }
    return o;
}

// ---------------------------------------------------------------------------------------------
// 2. Pinball minimizer

std::vector<double> random_dataset(int k, std::mt19937_64& rng) {
    std::vector<double> y(500);
    std::gamma_distribution<double> gam(2.0, 1.5);
    std::normal_distribution<double> nrm(3.0, 2.0);
    std::lognormal_distribution<double> logn(0.0, 1.0);
    std::uniform_int_distribution<int> ties(0, 20);
    for (auto& v : y) {
        switch (k % 4) {
        case 0: v = gam(rng); break;
        case 1: v = nrm(rng); break;
        case 2: v = logn(rng); break;
        default: v = 0.5 * ties(rng); break;
        }
    }
    return y;
}

Outcome pinball_minimizer() {
    std::mt19937_64 rng(2);
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
        const auto y = random_dataset(k, rng);
        const auto x = one_column(std::vector<double>(y.size(), 1.0));
        for (double tau : kFixedLevels) {
            const auto obj = gbt::quantile_objective(tau);
            gbt::GbtParams p;
            p.n_estimators = 1;
            p.learning_rate = 1.0;
            const auto model = gbt::train(x, y, obj, p);
            auto total = [&](double c) {
                double s = 0.0;
                for (double v : y) {
                    s += eval::pinball(v, c, tau);
                }
                return s;
            };
            double best = std::numeric_limits<double>::infinity();
            for (double c : y) {
                best = std::min(best, total(c));
            }
            worst = std::max(worst, total(model.predict_row(std::vector<double>{1.0})) - best);
        }
    }
    return {worst <= 1e-6, fmt("max total-loss excess over brute-force scan %.3g (tol 1e-6), 10 datasets x 7 levels", worst)};
}

// ---------------------------------------------------------------------------------------------
// 3. Gradient checks

double central(const std::function<double(double)>& f, double x, double h = 1e-5) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

double rel_err(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

Outcome gradient_checks() {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    std::normal_distribution<double> n01;
    double q_err = 0.0, ls_err = 0.0, nat_err = 0.0;
    for (double tau : kFixedLevels) {
        const auto obj = gbt::quantile_objective(tau);
        for (int checked = 0; checked < 200;) {
            const double y = u(rng), p = u(rng);
            if (std::abs(y - p) <= 1e-3) {
                continue;
            }
            q_err = std::max(q_err, rel_err(obj.gradient(y, p), central([&](double v) { return obj.loss(y, v); }, p)));
            ++checked;
        }
    }
    for (int trial = 0; trial < 500; ++trial) {
        const double y = 3.0 * n01(rng), mu = 3.0 * n01(rng), ls = 0.7 * n01(rng);
        const double num_mu = central([&](double m) { return ngboost::log_score(y, {m, ls}); }, mu);
        const double num_ls = central([&](double l) { return ngboost::log_score(y, {mu, l}); }, ls);
        const auto g = ngboost::ordinary_gradient(y, {mu, ls});
        ls_err = std::max({ls_err, rel_err(g.d_mu, num_mu), rel_err(g.d_log_sigma, num_ls)});
        const auto f = ngboost::fisher_diagonal({mu, ls});
        const auto nat = ngboost::natural_gradient(y, {mu, ls});
        nat_err = std::max({nat_err, rel_err(nat.d_mu, num_mu / f[0]), rel_err(nat.d_log_sigma, num_ls / f[1])});
    }
    // Fisher information against E[∇L ∇Lᵀ] by quadrature.
    const ngboost::GaussianParams gp{0.4, std::log(1.3)};
    double i11 = 0.0, i22 = 0.0;
    const int m = 40000;
    const double lo = -12.0, h = 24.0 / m;
    for (int k = 0; k <= m; ++k) {
        const double z = lo + h * k;
        const double w = (k == 0 || k == m ? 0.5 : 1.0) * h * stats::normal_pdf(z);
        const auto g = ngboost::ordinary_gradient(gp.mu + gp.sigma() * z, gp);
        i11 += w * g.d_mu * g.d_mu;
        i22 += w * g.d_log_sigma * g.d_log_sigma;
    }
    const auto f = ngboost::fisher_diagonal(gp);
    const double fisher_err = std::max(rel_err(f[0], i11), rel_err(f[1], i22));
    const bool pass = q_err <= 1e-6 && ls_err <= 1e-6 && nat_err <= 1e-6 && fisher_err <= 1e-6;
    return {pass, fmt("max rel err: quantile %.2g, log score %.2g, natural %.2g, Fisher %.2g (tol 1e-6)", q_err, ls_err,
                      nat_err, fisher_err)};
}

// ---------------------------------------------------------------------------------------------
// 4. NGBoost parameter recovery

Outcome ngboost_recovery() {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::normal_distribution<double> n01;
    auto true_sigma = [](double x) { return 0.5 + 0.4 * std::abs(x); };
    auto gen = [&](std::size_t n) {
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = u(rng);
            y[i] = std::sin(x[i]) + true_sigma(x[i]) * n01(rng);
        }
        return std::pair{x, y};
    };
    const auto [xt, yt] = gen(20000);
    const auto [xv, yv] = gen(5000);
    const auto [xs, ys] = gen(6000);
    gbt::GbtParams p;
    p.n_estimators = 1000;
    p.learning_rate = 0.1;
    p.max_depth = 3;
    p.min_child_weight = 200;
    p.early_stopping_rounds = 30;
    const auto xv_m = one_column(xv);
    const auto model = ngboost::train_ngboost(one_column(xt), yt, p, {}, gbt::Validation{xv_m, yv});
    const auto params = model.predict_params(one_column(xs));
    double se = 0.0;
    std::vector<double> fit(6, 0.0), truth(6, 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        se += std::pow(params[i].mu - std::sin(xs[i]), 2);
        const auto b = std::min<std::size_t>(5, static_cast<std::size_t>(xs[i] + 3.0));
        fit[b] += params[i].sigma();
        truth[b] += true_sigma(xs[i]);
    }
    const double rmse = std::sqrt(se / static_cast<double>(xs.size()));
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t b = 0; b < fit.size(); ++b) {
        lo = std::min(lo, fit[b] / truth[b]);
        hi = std::max(hi, fit[b] / truth[b]);
    }
    return {rmse < 0.1 && lo >= 0.85 && hi <= 1.15,
            fmt("mu RMSE %.4f (< 0.1); sigma ratio over 6 bins in [%.3f, %.3f] (need [0.85, 1.15])", rmse, lo, hi)};
}

// ---------------------------------------------------------------------------------------------
// 5. Diffusion vs Gaussian on a bimodal target

Outcome diffusion_bimodal() {
    int wins = 0;
    std::string worst;
    double worst_ratio = 0.0;
    for (int seed = 1; seed <= kSeeds; ++seed) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::bernoulli_distribution coin(0.5);
        std::normal_distribution<double> n01;
        auto gen = [&](std::size_t n) {
            std::vector<double> x(n), y(n);
            for (std::size_t i = 0; i < n; ++i) {
                x[i] = u(rng);
                y[i] = 3.0 * x[i] + (coin(rng) ? 2.0 : -2.0) + 0.3 * n01(rng);
            }
            return std::pair{x, y};
        };
        const auto [xt, yt] = gen(3000);
        const auto [xv, yv] = gen(750);
        const auto [xs, ys] = gen(200);
        const auto test = one_column(xs);

        diffusion::DiffusionParams dp;
        dp.n_repeats = 10;
        dp.tree.n_estimators = 400;
        dp.tree.max_depth = 7;
        dp.tree.num_leaves = 128;
        dp.tree.min_child_weight = 20;
        dp.tree.learning_rate = 0.1;
        dp.tree.seed = static_cast<std::uint64_t>(seed);
        const auto diff = diffusion::train_diffusion(one_column(xt), yt, dp).predict(test, static_cast<std::uint64_t>(seed));

        gbt::GbtParams np;
        np.n_estimators = 300;
        np.max_depth = 3;
        np.min_child_weight = 50;
        np.early_stopping_rounds = 20;
        np.seed = static_cast<std::uint64_t>(seed);
        const auto xv_m = one_column(xv);
        const auto gauss = ngboost::train_ngboost(one_column(xt), yt, np, {}, gbt::Validation{xv_m, yv}).predict(test);

        double c_diff = 0.0, c_gauss = 0.0;
        for (std::size_t i = 0; i < ys.size(); ++i) {
            c_diff += eval::crps_from_quantiles(ys[i], diff[i]);
            c_gauss += eval::crps_from_quantiles(ys[i], gauss[i]);
        }
        wins += c_diff < c_gauss ? 1 : 0;
        if (c_diff / c_gauss > worst_ratio) {
            worst_ratio = c_diff / c_gauss;
            worst = fmt("seed %d", seed);
        }
    }
    return {wins >= kRequiredSeeds, fmt("diffusion CRPS below NGBoost in %d/%d seeds (need >= %d); worst ratio %.3f (%s)",
                                        wins, kSeeds, kRequiredSeeds, worst_ratio, worst.c_str())};
}

// ---------------------------------------------------------------------------------------------
// 6. Method ordering

double test_mae(const FarmData& f, const FarmLayout& layout, const std::vector<PredictiveDistribution>& d) {
    const std::vector<eval::FarmForecasts> farms{{&layout, f.test.y(), d, f.test.mean_speed}};
    return eval::build_report("m", farms, std::vector<double>{}).average.mae;
}

std::vector<PredictiveDistribution> as_points(const SplitData& s, const std::vector<double>& v) {
    std::vector<PredictiveDistribution> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(point_distribution(s.x.times[i], v[i]));
    }
    return out;
}

Outcome method_ordering() {
    int passed = 0;
    std::string failures;
    double min_ml_gap = 1.0, min_wake_gap = 1.0;
    for (int seed = 1; seed <= kSeeds; ++seed) {
        Config cfg;
        cfg.seed = static_cast<std::uint64_t>(seed);
        cfg.scenario.seed = cfg.seed;
        cfg.wake.max_calibration_cases = 200;
        auto& dp = cfg.heads.diffusion.params;
        dp.n_repeats = 3;
        dp.tree.n_estimators = 150;
        dp.n_samples = 60;
        dp.n_steps = 20;
        const auto d = generate_synthetic(cfg.scenario, {default_cluster()[0]});
        const auto ds = prepare_dataset({d.forecasts, d.production, d.flags, d.reference, d.layouts}, cfg);
        const auto& f = ds.farms.front();
        const auto& layout = ds.layout(f.farm_id);
        double ml = 0.0;
        for (Head h : {Head::Cqr, Head::Ngboost, Head::Diffusion}) {
            const auto m = train_head(h, cfg.heads, f, layout, farm_seed(cfg.seed, 0));
            ml = std::max(ml, test_mae(f, layout, predict_head(m, f.test.x, cfg.seed)));
        }
        const auto cal = calibrate_farm_wake(layout, f, ds.reference, cfg.wake);
        const double wk = test_mae(f, layout, as_points(f.test, wake_baseline(layout, f.test, cal.params, f.max_observed_train)));
        const double pc = test_mae(f, layout, as_points(f.test, power_curve_baseline(layout, f.test, f.max_observed_train)));
        min_ml_gap = std::min(min_ml_gap, wk - ml);
        min_wake_gap = std::min(min_wake_gap, pc - wk);
        if (wk - ml > 0.01 && pc - wk > 0.01) {
            ++passed;
        } else {
            failures += fmt(" seed %d (ML %.4f wake %.4f pc %.4f)", seed, ml, wk, pc);
        }
    }
    return {passed >= kRequiredSeeds,
            fmt("ML < wake < power curve with gaps > 1pp in %d/%d seeds (need >= %d); min gaps %.2fpp, %.2fpp", passed,
                kSeeds, kRequiredSeeds, 100 * min_ml_gap, 100 * min_wake_gap) +
                (failures.empty() ? "" : ";" + failures)};
}

// ---------------------------------------------------------------------------------------------
// 7. Ensemble ablation

Outcome ensemble_ablation() {
    int passed = 0;
    std::string failures;
    for (int seed = 1; seed <= kSeeds; ++seed) {
        Config cfg;
        cfg.seed = static_cast<std::uint64_t>(seed);
        cfg.scenario.seed = cfg.seed;
        const auto d = generate_synthetic(cfg.scenario);
        const auto ds = prepare_dataset({d.forecasts, d.production, d.flags, d.reference, d.layouts}, cfg);
        const auto r = run_ablation(ds, cfg, cfg.seed);
        const double ens = r.entry(kEnsembleInput).mae;
        bool ok = r.entry(kReferenceInput).mae <= ens;
        for (const auto& e : r.entries) {
            ok = ok && (e.input == kReferenceInput || ens <= e.mae);
        }
        if (ok) {
            ++passed;
        } else {
            failures += fmt(" seed %d", seed);
        }
    }
    return {passed >= kRequiredSeeds,
            fmt("reference <= ensemble <= every single provider in %d/%d seeds (need >= %d)", passed, kSeeds,
                kRequiredSeeds) +
                (failures.empty() ? "" : "; failed:" + failures)};
}

// ---------------------------------------------------------------------------------------------
// 8. Wake self-consistency

Outcome wake_consistency() {
    const wake::WakeParams truth{0.38371, 0.003678, 0.06};

    const FarmLayout other("g", reference_grid("G", 2, 2, 6, 6, 3000.0, 500.0));
    const FarmLayout grid("f", reference_grid("T", 3, 3, 5, 7), {other});
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> speed(4.0, 13.0), dir(0.0, 360.0);
    std::vector<wake::WakeObservation> clean;
    for (int i = 0; i < 400; ++i) {
        const wake::FlowCase fc{speed(rng), dir(rng)};
        clean.push_back({fc, wake::farm_power(grid, fc, truth).total_power});
    }
    const auto r0 = wake::calibrate_wake(grid, clean);
    const double e0 = std::max(std::abs(r0.params.k_a / truth.k_a - 1.0), std::abs(r0.params.k_b / truth.k_b - 1.0));

    const FarmLayout row("f", reference_grid("T", 6, 1, 5, 5));
    std::uniform_real_distribution<double> row_speed(5.0, 10.0), row_dir(-15.0, 15.0), jitter(-0.02, 0.02);
    std::bernoulli_distribution flip(0.5);
    std::vector<wake::WakeObservation> noisy;
    for (int i = 0; i < 10000; ++i) {
        const wake::FlowCase fc{row_speed(rng), row_dir(rng) + (flip(rng) ? 180.0 : 0.0)};
        noisy.push_back({fc, wake::farm_power(row, fc, truth).total_power * (1.0 + jitter(rng))});
    }
    const auto r1 = wake::calibrate_wake(row, noisy);
    const double e1 = std::max(std::abs(r1.params.k_a / truth.k_a - 1.0), std::abs(r1.params.k_b / truth.k_b - 1.0));

    std::uniform_real_distribution<double> any_speed(0.0, 30.0);
    int violations = 0;
    for (int i = 0; i < 1000; ++i) {
        const wake::FlowCase fc{any_speed(rng), dir(rng)};
        violations += wake::farm_power(grid, fc, truth).total_power > wake::power_curve_forecast(grid, fc.wind_speed) + 1e-12;
    }
    return {e0 <= 0.05 && e1 <= 0.15 && violations == 0,
            fmt("noise-free max rel err %.4f (<= 0.05); 2%% noise max rel err %.4f (<= 0.15); %d violations in 1000 cases",
                e0, e1, violations)};
}

// ---------------------------------------------------------------------------------------------
// 9. CRPS/MAE identity

Outcome crps_identity() {
    // Midpoint widths of the fixed levels, written out independently of the library.
    constexpr std::array<double, 7> w{0.075, 0.10, 0.20, 0.25, 0.20, 0.10, 0.075};
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    double closed_err = 0.0, mae_err = 0.0;
    std::vector<double> ys, yh;
    double sum_crps = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double y = u(rng), q = u(rng);
        PredictiveDistribution d;
        d.levels.assign(kFixedLevels.begin(), kFixedLevels.end());
        d.values.assign(kFixedLevels.size(), q);
        const double c = eval::crps_from_quantiles(y, d);
        double closed = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k) {
            const double tau = kFixedLevels[k];
            closed += w[k] * (y >= q ? tau * (y - q) : (1.0 - tau) * (q - y));
        }
        closed_err = std::max(closed_err, std::abs(c - closed));
        mae_err = std::max(mae_err, std::abs(2.0 * c - std::abs(y - q)));
        ys.push_back(y);
        yh.push_back(q);
        sum_crps += c;
    }
    const double mean_err = std::abs(2.0 * sum_crps / static_cast<double>(ys.size()) - eval::mae(ys, yh));
    return {closed_err <= 1e-12 && mae_err <= 1e-12 && mean_err <= 1e-12,
            fmt("|CRPS - closed form| <= %.2g; |2 CRPS - |y - q|| <= %.2g; |2 mean CRPS - MAE| = %.2g (tol 1e-12)",
                closed_err, mae_err, mean_err)};
}

// ---------------------------------------------------------------------------------------------
// 10. Determinism

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + WINDPROB_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

std::vector<fs::path> files_under(const fs::path& root) {
    std::vector<fs::path> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) {
            out.push_back(fs::relative(e.path(), root));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

Outcome determinism() {
    const fs::path base = fs::temp_directory_path() / ("windprob_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(base);
    const std::string config = R"({"scenario": {"n_hours": 2000},
 "filters": {"min_bin_count": 30},
 "heads": {"cqr": {"gbt": {"n_estimators": 60}},
           "diffusion": {"gbt": {"n_estimators": 40}, "n_repeats": 3, "n_samples": 30, "n_steps": 15}}})";
    std::string failed_step;
    for (const char* r : {"a", "b"}) {
        const fs::path root = base / r / "run";
        fs::create_directories(root);
        text::write_file((root / "config.json").string(), config);
        const std::string g = "--seed 7 --config \"" + (root / "config.json").string() + "\" --out \"";
        const std::string o = root.string();
        const std::vector<std::string> steps{
            g + o + "/sim\" simulate",
            g + o + "/data\" prepare --input \"" + o + "/sim\"",
            g + o + "/model_cqr\" train --data \"" + o + "/data\" --head cqr",
            g + o + "/model_diffusion\" train --data \"" + o + "/data\" --head diffusion",
            g + o + "/pred\" predict --data \"" + o + "/data\" --model \"" + o + "/model_cqr\"",
            g + o + "/pred_d\" predict --data \"" + o + "/data\" --model \"" + o + "/model_diffusion\"",
            g + o + "/report\" evaluate --data \"" + o + "/data\" --predictions \"" + o + "/pred/cqr.csv\" --predictions \"" +
                o + "/pred_d/diffusion.csv\"",
        };
        for (const auto& s : steps) {
            if (failed_step.empty() && run_cli(s) != 0) {
                failed_step = s;
            }
        }
    }
    if (!failed_step.empty()) {
        fs::remove_all(base);
        return {false, "command failed: " + failed_step};
    }
    const auto a = files_under(base / "a" / "run");
    const auto b = files_under(base / "b" / "run");
    std::size_t differing = 0;
    std::string first;
    if (a != b) {
        first = "file sets differ";
        ++differing;
    } else {
        for (const auto& rel : a) {
            if (text::read_file((base / "a" / "run" / rel).string()) != text::read_file((base / "b" / "run" / rel).string())) {
                ++differing;
                first = first.empty() ? rel.string() : first;
            }
        }
    }
    fs::remove_all(base);
    return {differing == 0 && a.size() > 10,
            fmt("%zu files compared across two runs, %zu differ", a.size(), differing) +
                (first.empty() ? "" : " (first: " + first + ")")};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "conformal coverage", conformal_coverage},
        {2, "pinball minimizer oracle", pinball_minimizer},
        {3, "gradient checks", gradient_checks},
        {4, "NGBoost parameter recovery", ngboost_recovery},
        {5, "diffusion vs Gaussian on bimodal target", diffusion_bimodal},
        {6, "method ordering", method_ordering},
        {7, "ensemble ablation direction", ensemble_ablation},
        {8, "wake self-consistency", wake_consistency},
        {9, "CRPS/MAE identity", crps_identity},
        {10, "determinism", determinism},
    };
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) {
        selected.push_back(std::atoi(argv[i]));
    }
    bool ok = true;
    for (const auto& c : all) {
        if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) {
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
        ok = ok && o.pass;
    }
    return ok ? 0 : 1;
}
