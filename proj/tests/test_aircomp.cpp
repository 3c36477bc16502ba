#include <doctest.h>

#include <cmath>

#include "airrecomp/aircomp.hpp"
#include "airrecomp/errors.hpp"

using namespace airrecomp;

TEST_CASE("two-point normalization") {
    const NormalizedUpdate n = normalize(ModelUpdate{{1.0, -1.0}, 0});
    CHECK(n.mean == doctest::Approx(0.0));
    CHECK(n.std == doctest::Approx(std::sqrt(2.0)));
    CHECK(n.values[0] == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(n.values[1] == doctest::Approx(-1.0 / std::sqrt(2.0)));
}

TEST_CASE("constant update degenerates to zeros") {
    const NormalizedUpdate n = normalize(ModelUpdate{{2.0, 2.0, 2.0}, 0});
    CHECK(n.mean == doctest::Approx(2.0));
    CHECK(n.std == 0.0);
    for (double v : n.values) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("normalization round-trips") {
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const int d = 2 + rng.uniform_int(20);
        ModelUpdate u;
        u.values.resize(d);
        const double scale = std::pow(10.0, -3 + rng.uniform_int(7));
        for (double& v : u.values) {
            v = scale * rng.normal();
        }
        const NormalizedUpdate n = normalize(u);
        if (n.std > 0.0) {
            double mean_acc = 0.0, var_acc = 0.0;
            for (double v : n.values) {
                mean_acc += v;
            }
            mean_acc /= d;
            for (double v : n.values) {
                var_acc += (v - mean_acc) * (v - mean_acc);
            }
            var_acc /= (d - 1);
            CHECK(std::abs(mean_acc) < 1e-9);
            CHECK(var_acc == doctest::Approx(1.0).epsilon(1e-9));
        }
        for (int i = 0; i < d; ++i) {
            const double rebuilt = n.values[i] * n.std + n.mean;
            CHECK(rebuilt == doctest::Approx(u.values[i]).epsilon(1e-9));
        }
    }
}

TEST_CASE("normalize rejects short updates") {
    CHECK_THROWS_AS(normalize(ModelUpdate{{1.0}, 0}), error);
}

namespace {

PowerPolicy inversion_policy(const ChannelRealization& chan, double eta) {
    PowerPolicy p;
    p.eta = eta;
    p.p_max = 1e12;
    p.num_retx = 1;
    for (double g : chan.gains) {
        p.powers.push_back(eta / (g * g));
    }
    return p;
}

} // namespace

TEST_CASE("noiseless channel inversion reproduces the exact mean") {
    Rng rng(5);
    ChannelRealization chan = draw_channel(4, rng, 0.0);
    const PowerPolicy policy = inversion_policy(chan, 0.7);
    std::vector<NormalizedUpdate> updates(4);
    std::vector<double> expected(6, 0.0);
    for (int k = 0; k < 4; ++k) {
        updates[k].values.resize(6);
        for (int i = 0; i < 6; ++i) {
            updates[k].values[i] = rng.normal();
            expected[i] += updates[k].values[i] / 4.0;
        }
    }
    const std::vector<double> agg = aggregate_uplink(updates, policy, chan, 1, rng);
    for (int i = 0; i < 6; ++i) {
        CHECK(agg[i] == doctest::Approx(expected[i]).epsilon(1e-12));
    }
}

TEST_CASE("averaged retransmissions shrink the noise variance to sigma^2/M") {
    Rng rng(123);
    ChannelRealization chan{{1.0}, 1.0, 1};
    PowerPolicy policy{{1.0}, 1.0, 1.0, 4};
    const int d = 100, calls = 100;
    std::vector<NormalizedUpdate> updates{NormalizedUpdate{std::vector<double>(d, 0.0), 0.0, 1.0}};
    double sum = 0.0, sum_sq = 0.0;
    for (int c = 0; c < calls; ++c) {
        const std::vector<double> agg = aggregate_uplink(updates, policy, chan, 4, rng);
        for (double v : agg) {
            sum += v;
            sum_sq += v * v;
        }
    }
    const int n = d * calls;
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    // 10^4 pooled samples of variance 1/4: same chi-square window as the spec
    CHECK(var > 0.94 * 0.25);
    CHECK(var < 1.06 * 0.25);
}

TEST_CASE("opposite updates cancel over equal channels") {
    Rng rng(1);
    ChannelRealization chan{{1.0, 1.0}, 0.0, 2};
    PowerPolicy policy{{1.0, 1.0}, 1.0, 1.0, 1};
    std::vector<NormalizedUpdate> updates{NormalizedUpdate{{1.0}, 0.0, 1.0},
                                          NormalizedUpdate{{-1.0}, 0.0, 1.0}};
    const std::vector<double> agg = aggregate_uplink(updates, policy, chan, 1, rng);
    CHECK(agg[0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("aggregate dimension mismatch raises") {
    Rng rng(1);
    ChannelRealization chan{{1.0, 1.0}, 0.0, 2};
    PowerPolicy policy{{1.0, 1.0}, 1.0, 1.0, 1};
    std::vector<NormalizedUpdate> updates{NormalizedUpdate{{1.0, 2.0}, 0.0, 1.0},
                                          NormalizedUpdate{{-1.0}, 0.0, 1.0}};
    CHECK_THROWS_AS(aggregate_uplink(updates, policy, chan, 1, rng), error);
}

TEST_CASE("denormalization from means alone") {
    const ModelUpdate out = denormalize({0.0}, {{2.0, 0.0}, {4.0, 0.0}});
    CHECK(out.values[0] == doctest::Approx(3.0));
}

TEST_CASE("denormalization with averaged scale") {
    const ModelUpdate out = denormalize({1.0}, {{0.0, 1.0}, {0.0, 3.0}});
    CHECK(out.values[0] == doctest::Approx(2.0));
}

TEST_CASE("equal stds give perfect reconstruction") {
    Rng rng(9);
    ChannelRealization chan = draw_channel(3, rng, 0.0);
    const PowerPolicy policy = inversion_policy(chan, 1.3);
    const int d = 8;
    std::vector<ModelUpdate> raw(3);
    std::vector<double> true_mean(d, 0.0);
    // shifts of a shared base vector have identical sample stds
    std::vector<double> base(d);
    for (double& v : base) {
        v = rng.normal();
    }
    for (int k = 0; k < 3; ++k) {
        raw[k].values.resize(d);
        for (int i = 0; i < d; ++i) {
            raw[k].values[i] = base[i] + 0.5 * k;
            true_mean[i] += raw[k].values[i] / 3.0;
        }
    }
    std::vector<NormalizedUpdate> updates(3);
    std::vector<std::pair<double, double>> stats(3);
    for (int k = 0; k < 3; ++k) {
        updates[k] = normalize(raw[k]);
        stats[k] = {updates[k].mean, updates[k].std};
        CHECK(updates[k].std == doctest::Approx(updates[0].std).epsilon(1e-12));
    }
    const std::vector<double> agg = aggregate_uplink(updates, policy, chan, 1, rng);
    const ModelUpdate rebuilt = denormalize(agg, stats);
    for (int i = 0; i < d; ++i) {
        CHECK(rebuilt.values[i] == doctest::Approx(true_mean[i]).epsilon(1e-9));
    }
}

TEST_CASE("denormalize rejects empty statistics") {
    CHECK_THROWS_AS(denormalize({1.0}, {}), error);
}

TEST_CASE("end-to-end aggregation is unbiased under channel inversion") {
    // equal per-device stds (shifted copies of one base vector), the regime
    // with exact reconstruction in expectation
    Rng rng(21);
    ChannelRealization chan = draw_channel(3, rng, 1.5);
    const PowerPolicy policy = inversion_policy(chan, 2.0);
    const int d = 4;
    std::vector<ModelUpdate> raw(3);
    std::vector<double> true_mean(d, 0.0);
    std::vector<double> base(d);
    for (double& v : base) {
        v = rng.normal();
    }
    for (int k = 0; k < 3; ++k) {
        raw[k].values.resize(d);
        for (int i = 0; i < d; ++i) {
            raw[k].values[i] = base[i] + 0.7 * k;
            true_mean[i] += raw[k].values[i] / 3.0;
        }
    }
    std::vector<NormalizedUpdate> updates(3);
    std::vector<std::pair<double, double>> stats(3);
    for (int k = 0; k < 3; ++k) {
        updates[k] = normalize(raw[k]);
        stats[k] = {updates[k].mean, updates[k].std};
    }
    const int trials = 4000;
    std::vector<double> acc(d, 0.0);
    for (int t = 0; t < trials; ++t) {
        const std::vector<double> agg = aggregate_uplink(updates, policy, chan, 2, rng);
        const ModelUpdate rebuilt = denormalize(agg, stats);
        for (int i = 0; i < d; ++i) {
            acc[i] += rebuilt.values[i];
        }
    }
    // per-element noise sd of the denormalized estimate, then 3 sigma of the mean
    double std_avg = 0.0;
    for (const auto& [m, s] : stats) {
        std_avg += s / 3.0;
    }
    const double noise_sd =
        std_avg * std::sqrt(chan.noise_variance / (2.0 * policy.eta * 9.0));
    for (int i = 0; i < d; ++i) {
        const double mean = acc[i] / trials;
        CHECK(std::abs(mean - true_mean[i]) < 3.0 * noise_sd / std::sqrt(trials) + 1e-9);
    }
}

TEST_CASE("empirical aggregate error matches the analytic value") {
    Rng rng(33);
    ChannelRealization chan = draw_channel(5, rng, 2.0);
    const PowerPolicy policy = solve_power_control(chan, 1.0, 2);
    const int d = 400, trials = 400;
    double err_acc = 0.0;
    for (int t = 0; t < trials; ++t) {
        std::vector<NormalizedUpdate> updates(5);
        std::vector<double> mean(d, 0.0);
        for (int k = 0; k < 5; ++k) {
            updates[k].values.resize(d);
            updates[k].mean = 0.0;
            updates[k].std = 1.0;
            for (int i = 0; i < d; ++i) {
                updates[k].values[i] = rng.normal();
                mean[i] += updates[k].values[i] / 5.0;
            }
        }
        const std::vector<double> agg = aggregate_uplink(updates, policy, chan, 2, rng);
        for (int i = 0; i < d; ++i) {
            err_acc += (agg[i] - mean[i]) * (agg[i] - mean[i]);
        }
    }
    const double empirical = err_acc / (double(d) * trials);
    const double analytic = analytic_mse(policy, chan);
    // 160k pooled squared errors: few-percent Monte-Carlo band
    CHECK(empirical == doctest::Approx(analytic).epsilon(0.05));
}

TEST_CASE("noise contribution scales as 1/M") {
    Rng rng(55);
    ChannelRealization chan = draw_channel(4, rng, 1.0);
    PowerPolicy policy = solve_power_control(chan, 1.0, 1);
    const int d = 3000;
    std::vector<NormalizedUpdate> updates(4, NormalizedUpdate{std::vector<double>(d, 0.0), 0.0, 1.0});
    double sxx = 0.0, sxy = 0.0;
    for (int m : {1, 2, 4, 8}) {
        policy.num_retx = m;
        const std::vector<double> agg = aggregate_uplink(updates, policy, chan, m, rng);
        double var = 0.0;
        for (double v : agg) {
            var += v * v;
        }
        var /= d;
        const double x = 1.0 / m;
        sxx += x * x;
        sxy += x * var;
    }
    const double slope = sxy / sxx; // regression through the origin
    const double expected = chan.noise_variance / (policy.eta * 16.0);
    CHECK(slope == doctest::Approx(expected).epsilon(0.10));
}
