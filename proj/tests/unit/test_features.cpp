#include "windprob/features.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

using namespace windprob;

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

double angular_distance(double a, double b) {
    const double d = std::fmod(std::abs(a - b), 360.0);
    return std::min(d, 360.0 - d);
}

std::vector<EnsembleForecastRecord> hourly(std::size_t n, const std::vector<std::string>& providers, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> speed(0.0, 20.0), dir(0.0, 360.0);
    std::vector<EnsembleForecastRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        EnsembleForecastRecord r{Timestamp(static_cast<std::int64_t>(1000 + i)), {}};
        for (const auto& p : providers) {
            r.providers.push_back({p, speed(rng), wrap_degrees(dir(rng))});
        }
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace

TEST(Circular, Examples) {
    const auto a = circular_mean_std(std::vector<double>{350.0, 10.0});
    EXPECT_NEAR(angular_distance(a.mean_direction, 0.0), 0.0, 1e-9);
    EXPECT_NEAR(a.resultant_length, std::cos(10.0 * std::numbers::pi / 180.0), 1e-12);
    EXPECT_NEAR(a.circular_std, std::sqrt(-2.0 * std::log(a.resultant_length)), 1e-12);

    const auto b = circular_mean_std(std::vector<double>{90.0, 90.0, 90.0});
    EXPECT_NEAR(b.mean_direction, 90.0, 1e-9);
    EXPECT_NEAR(b.circular_std, 0.0, 1e-7);

    expect_code([] { circular_mean_std(std::vector<double>{0.0, 90.0, 180.0, 270.0}); }, ErrorCode::DegenerateResultant);
    expect_code([] { circular_mean_std(std::vector<double>{}); }, ErrorCode::EmptyData);
}

TEST(Circular, RotationInvariance) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> dir(0.0, 60.0), delta(-720.0, 720.0), start(0.0, 360.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double s = start(rng);
        std::vector<double> d(5);
        for (auto& v : d) {
            v = wrap_degrees(s + dir(rng));
        }
        const double k = delta(rng);
        std::vector<double> rotated;
        for (double v : d) {
            rotated.push_back(wrap_degrees(v + k));
        }
        const auto a = circular_mean_std(d);
        const auto b = circular_mean_std(rotated);
        EXPECT_NEAR(angular_distance(b.mean_direction, wrap_degrees(a.mean_direction + k)), 0.0, 1e-8);
        EXPECT_NEAR(b.circular_std, a.circular_std, 1e-9);
        EXPECT_GE(b.mean_direction, 0.0);
        EXPECT_LT(b.mean_direction, 360.0);
    }
}

TEST(Features, ColumnCountMatchesEnumeratedNames) {
    const std::vector<std::string> providers{"a", "b", "c"};
    const auto records = hourly(10, providers, 1);
    for (const std::vector<int>& lags : {std::vector<int>{-1, 0, 1}, std::vector<int>{0}, std::vector<int>{-3, -1, 0, 2}}) {
        const auto m = build_features(records, {lags, {}});
        const std::size_t p = providers.size(), l = lags.size();
        EXPECT_EQ(m.cols(), p * l * 3 + l * 5 + p + 1);
        // Enumerate the expected names independently.
        std::vector<std::string> expected;
        for (int lag : lags) {
            const std::string sfx = lag < 0 ? ".t" + std::to_string(lag) : ".t+" + std::to_string(lag);
            for (const auto& id : providers) {
                for (const char* v : {"speed.", "dir_sin.", "dir_cos."}) {
                    expected.push_back(v + id + sfx);
                }
            }
            for (const char* s : {"speed_mean", "speed_std", "dir_cmean_sin", "dir_cmean_cos", "dir_cstd"}) {
                expected.push_back(s + sfx);
            }
        }
        for (const auto& id : providers) {
            expected.push_back("missing." + id);
        }
        expected.push_back("dir_degenerate");
        EXPECT_EQ(m.names, expected);
        EXPECT_EQ(std::set<std::string>(m.names.begin(), m.names.end()).size(), m.names.size());
    }
}

TEST(Features, EdgeRowsDropped) {
    const auto one = hourly(1, {"a"}, 3);
    const auto m = build_features(one, {});
    EXPECT_EQ(m.rows(), 0u);
    EXPECT_EQ(m.cols(), 3u * 3 + 3 * 5 + 1 + 1);

    // A gap removes the rows that need the missing hour.
    auto records = hourly(10, {"a", "b"}, 4);
    records.erase(records.begin() + 5);
    const auto g = build_features(records, {});
    // Rows at original hours 0 and 9 lack a neighbour; hours 4 and 6 border the gap.
    EXPECT_EQ(g.rows(), 9u - 4u);
    for (const auto& t : g.times) {
        EXPECT_NE(t.hours(), 1004);
        EXPECT_NE(t.hours(), 1006);
    }
}

TEST(Features, ValuesAndLagAlignment) {
    const auto records = hourly(6, {"a", "b"}, 5);
    const auto m = build_features(records, {});
    ASSERT_EQ(m.rows(), 4u);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const std::size_t i = r + 1;
        EXPECT_EQ(m.times[r], records[i].time);
        EXPECT_DOUBLE_EQ(m.column("speed.a.t-1")[r], records[i - 1].providers[0].wind_speed);
        EXPECT_DOUBLE_EQ(m.column("speed.b.t+1")[r], records[i + 1].providers[1].wind_speed);
        const double d = records[i].providers[0].wind_direction * std::numbers::pi / 180.0;
        EXPECT_NEAR(m.column("dir_sin.a.t+0")[r], std::sin(d), 1e-12);
        EXPECT_NEAR(m.column("dir_cos.a.t+0")[r], std::cos(d), 1e-12);
        const double sa = records[i].providers[0].wind_speed, sb = records[i].providers[1].wind_speed;
        EXPECT_NEAR(m.column("speed_mean.t+0")[r], 0.5 * (sa + sb), 1e-12);
        EXPECT_NEAR(m.column("speed_std.t+0")[r], 0.5 * std::abs(sa - sb), 1e-12);
    }
}

TEST(Features, IdenticalSpeedsGiveZeroStd) {
    auto records = hourly(5, {"a", "b", "c"}, 6);
    for (auto& r : records) {
        for (auto& p : r.providers) {
            p.wind_speed = 7.5;
        }
    }
    const auto m = build_features(records, {});
    for (double v : m.column("speed_std.t+0")) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(Features, MissingProviderFilledWithMeanAndFlagged) {
    auto records = hourly(5, {"a", "b", "c"}, 7);
    records[2].providers.erase(records[2].providers.begin() + 1);
    const auto m = build_features(records, {});
    ASSERT_EQ(m.rows(), 3u);
    const double mean = 0.5 * (records[2].providers[0].wind_speed + records[2].providers[1].wind_speed);
    EXPECT_NEAR(m.column("speed.b.t+0")[1], mean, 1e-12);
    EXPECT_NEAR(m.column("speed.b.t+1")[0], mean, 1e-12);
    EXPECT_EQ(m.column("missing.b")[1], 1.0);
    EXPECT_EQ(m.column("missing.b")[0], 0.0);
    EXPECT_EQ(m.column("missing.a")[1], 0.0);
}

TEST(Features, DegenerateDirectionFlag) {
    std::vector<EnsembleForecastRecord> records;
    for (int i = 0; i < 3; ++i) {
        records.push_back({Timestamp(i), {{"a", 5, 0.0}, {"b", 5, 90.0}, {"c", 5, 180.0}, {"d", 5, 270.0}}});
    }
    const auto m = build_features(records, {});
    ASSERT_EQ(m.rows(), 1u);
    EXPECT_EQ(m.column("dir_degenerate")[0], 1.0);
    EXPECT_EQ(m.column("dir_cmean_sin.t+0")[0], 0.0);
    EXPECT_EQ(m.column("dir_cmean_cos.t+0")[0], 1.0);
}

TEST(Features, TargetJoinAndMisalignment) {
    const auto records = hourly(5, {"a"}, 8);
    std::vector<PowerObservation> obs;
    for (const auto& r : records) {
        obs.push_back({r.time, static_cast<double>(r.time.hours() - 1000), "f"});
    }
    const auto m = build_features(records, {}, obs);
    ASSERT_TRUE(m.target.has_value());
    EXPECT_EQ(*m.target, (std::vector<double>{1, 2, 3}));
    obs.erase(obs.begin() + 2);
    expect_code([&] { build_features(records, {}, obs); }, ErrorCode::MisalignedTarget);
}

TEST(Features, DeterministicAndSortedInput) {
    const auto records = hourly(50, {"z", "a", "m"}, 9);
    const auto a = build_features(records, {});
    const auto b = build_features(records, {});
    EXPECT_EQ(a.names, b.names);
    EXPECT_EQ(a.columns, b.columns);
    auto shuffled = records;
    std::swap(shuffled[3], shuffled[4]);
    expect_code([&] { build_features(shuffled, {}); }, ErrorCode::InvalidArgument);
}

TEST(Features, EnsembleMeanInputs) {
    const std::vector<EnsembleForecastRecord> records{
        {Timestamp(0), {{"a", 8, 350.0}, {"b", 10, 10.0}, {"c", 12, 0.0}}},
        {Timestamp(1), {{"a", 6.5, 123.0}}},
    };
    const auto m = ensemble_mean_inputs(records);
    ASSERT_EQ(m.size(), 2u);
    EXPECT_DOUBLE_EQ(m[0].wind_speed, 10.0);
    EXPECT_NEAR(angular_distance(m[0].wind_direction, 0.0), 0.0, 1e-9);
    EXPECT_DOUBLE_EQ(m[1].wind_speed, 6.5);
    EXPECT_NEAR(m[1].wind_direction, 123.0, 1e-9);
    const std::vector<EnsembleForecastRecord> opposed{{Timestamp(0), {{"a", 5, 0.0}, {"b", 5, 180.0}}}};
    expect_code([&] { ensemble_mean_inputs(opposed); }, ErrorCode::DegenerateResultant);
}
