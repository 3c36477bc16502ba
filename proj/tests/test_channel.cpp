#include <doctest.h>

#include <cmath>

#include "airrecomp/channel.hpp"
#include "airrecomp/errors.hpp"

using namespace airrecomp;

TEST_CASE("draw_channel is deterministic under a fixed seed") {
    Rng a(12345), b(12345);
    const ChannelRealization ca = draw_channel(3, a);
    const ChannelRealization cb = draw_channel(3, b);
    REQUIRE(ca.gains.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(ca.gains[i] == cb.gains[i]);
    }
}

TEST_CASE("unit Rayleigh magnitudes have unit mean square") {
    Rng rng(7);
    const ChannelRealization chan = draw_channel(100000, rng);
    double acc = 0.0;
    for (double g : chan.gains) {
        acc += g * g;
    }
    const double mean_sq = acc / chan.gains.size();
    CHECK(mean_sq > 0.97);
    CHECK(mean_sq < 1.03);
}

TEST_CASE("gains are nonnegative") {
    for (std::uint64_t seed = 1; seed <= 32; ++seed) {
        Rng rng(seed);
        const ChannelRealization chan = draw_channel(1, rng);
        CHECK(chan.gains[0] >= 0.0);
    }
}

TEST_CASE("noiseless superposition of equal gains") {
    Rng rng(1);
    ChannelRealization chan{{1.0, 1.0}, 0.0, 2};
    std::vector<std::vector<double>> signals{{1.0}, {1.0}};
    const std::vector<double> y = transmit_once(signals, chan, rng);
    REQUIRE(y.size() == 1);
    CHECK(y[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("noiseless weighted sum") {
    Rng rng(1);
    ChannelRealization chan{{0.5, 1.0, 2.0}, 0.0, 3};
    std::vector<std::vector<double>> signals{{1.0}, {2.0}, {3.0}};
    const std::vector<double> y = transmit_once(signals, chan, rng);
    CHECK(y[0] == doctest::Approx(8.5).epsilon(1e-12));
}

TEST_CASE("noise-only output has the configured variance") {
    // chi-square interval for 10^4 samples at variance 1
    Rng rng(99);
    ChannelRealization chan{{1.0}, 1.0, 1};
    std::vector<std::vector<double>> signals{{0.0, 0.0}};
    double sum = 0.0, sum_sq = 0.0;
    const int trials = 5000; // 2 elements per call -> 10^4 samples
    for (int t = 0; t < trials; ++t) {
        const std::vector<double> y = transmit_once(signals, chan, rng);
        for (double v : y) {
            sum += v;
            sum_sq += v * v;
        }
    }
    const int n = 2 * trials;
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(var > 0.94);
    CHECK(var < 1.06);
}

TEST_CASE("mismatched signal lengths raise a dimension error") {
    Rng rng(1);
    ChannelRealization chan{{1.0, 1.0}, 0.0, 2};
    std::vector<std::vector<double>> signals{{1.0, 2.0}, {1.0}};
    CHECK_THROWS_AS(transmit_once(signals, chan, rng), error);
    try {
        transmit_once(signals, chan, rng);
    } catch (const error& e) {
        CHECK(e.category() == errc::dimension);
    }
}

TEST_CASE("noiseless transmission is linear in the signals") {
    Rng seed_rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const int k = 1 + seed_rng.uniform_int(5);
        const int d = 1 + seed_rng.uniform_int(6);
        ChannelRealization chan = draw_channel(k, seed_rng, 0.0);
        std::vector<std::vector<double>> a(k, std::vector<double>(d));
        std::vector<std::vector<double>> b(k, std::vector<double>(d));
        std::vector<std::vector<double>> ab(k, std::vector<double>(d));
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j < d; ++j) {
                a[i][j] = seed_rng.normal();
                b[i][j] = seed_rng.normal();
                ab[i][j] = a[i][j] + b[i][j];
            }
        }
        Rng rng(0);
        const std::vector<double> ya = transmit_once(a, chan, rng);
        const std::vector<double> yb = transmit_once(b, chan, rng);
        const std::vector<double> yab = transmit_once(ab, chan, rng);
        for (int j = 0; j < d; ++j) {
            CHECK(ya[j] + yb[j] == doctest::Approx(yab[j]).epsilon(1e-9));
        }
    }
}

TEST_CASE("output mean equals the noiseless superposition") {
    Rng rng(5);
    ChannelRealization chan = draw_channel(3, rng, 2.0);
    std::vector<std::vector<double>> signals{{0.7}, {-1.3}, {2.1}};
    double noiseless = 0.0;
    for (int k = 0; k < 3; ++k) {
        noiseless += chan.gains[k] * signals[k][0];
    }
    const int trials = 20000;
    double acc = 0.0;
    for (int t = 0; t < trials; ++t) {
        acc += transmit_once(signals, chan, rng)[0];
    }
    const double mean = acc / trials;
    const double three_sigma = 3.0 * std::sqrt(2.0 / trials);
    CHECK(std::abs(mean - noiseless) < three_sigma);
}
