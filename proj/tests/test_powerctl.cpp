#include <doctest.h>

#include <cmath>

#include "airrecomp/errors.hpp"
#include "airrecomp/powerctl.hpp"
#include "oracle.hpp"

using namespace airrecomp;

TEST_CASE("single-device candidate closed forms") {
    ChannelRealization chan{{1.0}, 1.0, 1};
    CHECK(eta_candidate(chan, 1, 1.0, 1) == doctest::Approx(4.0).epsilon(1e-12));
    // more retransmissions shrink the candidate
    CHECK(eta_candidate(chan, 1, 1.0, 4) == doctest::Approx(1.5625).epsilon(1e-12));
}

TEST_CASE("two-device candidates match a hand computation") {
    ChannelRealization chan{{0.5, 2.0}, 1.0, 2}; // already ascending
    // k=1: ((0.25 + 1)/0.5)^2; k=2: ((0.25 + 4 + 1)/2.5)^2
    CHECK(eta_candidate(chan, 1, 1.0, 1) == doctest::Approx(6.25).epsilon(1e-12));
    CHECK(eta_candidate(chan, 2, 1.0, 1) == doctest::Approx(4.41).epsilon(1e-12));
    const PowerPolicy policy = solve_power_control(chan, 1.0, 1);
    CHECK(policy.eta == doctest::Approx(4.41).epsilon(1e-12));
    const double grid = oracle::grid_min_mse(chan, 1.0, 1);
    CHECK(analytic_mse(policy, chan) <= grid + 1e-9);
}

TEST_CASE("zero prefix raises a division error") {
    ChannelRealization chan{{0.0, 1.0}, 1.0, 2};
    CHECK_THROWS_AS(eta_candidate(chan, 1, 1.0, 1), error);
}

TEST_CASE("single-device optimum") {
    ChannelRealization chan{{1.0}, 1.0, 1};
    PowerPolicy p1 = solve_power_control(chan, 1.0, 1);
    CHECK(p1.eta == doctest::Approx(4.0));
    CHECK(p1.powers[0] == doctest::Approx(1.0));
    CHECK(analytic_mse(p1, chan) == doctest::Approx(0.5).epsilon(1e-12));

    PowerPolicy p4 = solve_power_control(chan, 1.0, 4);
    CHECK(p4.eta == doctest::Approx(1.5625));
    CHECK(p4.powers[0] == doctest::Approx(1.0));
    CHECK(analytic_mse(p4, chan) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("perfect inversion with no noise has zero error") {
    ChannelRealization chan{{0.8, 1.4, 2.0}, 0.0, 3};
    PowerPolicy policy;
    policy.eta = 0.25;
    policy.p_max = 10.0;
    policy.num_retx = 1;
    for (double g : chan.gains) {
        policy.powers.push_back(policy.eta / (g * g));
    }
    CHECK(analytic_mse(policy, chan) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("analytic_mse rejects nonpositive eta") {
    ChannelRealization chan{{1.0}, 1.0, 1};
    PowerPolicy policy{{1.0}, 0.0, 1.0, 1};
    CHECK_THROWS_AS(analytic_mse(policy, chan), error);
}

TEST_CASE("all-zero gains raise a no-signal error") {
    ChannelRealization chan{{0.0, 0.0}, 1.0, 2};
    CHECK_THROWS_AS(solve_power_control(chan, 1.0, 1), error);
}

TEST_CASE("closed form certifies against the grid oracle") {
    Rng rng(2024);
    double worst = -1.0;
    for (int trial = 0; trial < 200; ++trial) {
        const int k = 1 + rng.uniform_int(5);
        const double noise_var = 0.1 + 9.9 * rng.uniform();
        ChannelRealization chan = draw_channel(k, rng, noise_var);
        const int m_options[] = {1, 2, 4, 8};
        const int m = m_options[rng.uniform_int(4)];
        const PowerPolicy policy = solve_power_control(chan, 1.0, m);
        const double mse = analytic_mse(policy, chan);
        const double grid = oracle::grid_min_mse(chan, 1.0, m, 20000);
        CHECK(mse <= grid + 1e-9);
        worst = std::max(worst, mse - grid);
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("optimal policy splits into inverters and max-power devices") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        ChannelRealization chan = draw_channel(6, rng, 1.0 + 4.0 * rng.uniform());
        const PowerPolicy policy = solve_power_control(chan, 1.0, 2);
        int at_max = 0;
        for (std::size_t k = 0; k < chan.gains.size(); ++k) {
            const double inverting = policy.eta / (chan.gains[k] * chan.gains[k]);
            const bool is_max = std::abs(policy.powers[k] - 1.0) < 1e-12;
            const bool is_inv = std::abs(policy.powers[k] - inverting) < 1e-9 * inverting;
            CHECK((is_max || is_inv));
            CHECK(policy.powers[k] <= 1.0 + 1e-12);
            at_max += is_max ? 1 : 0;
        }
        // with positive noise the weakest device saturates
        CHECK(at_max >= 1);
    }
}

TEST_CASE("eta is nonincreasing in the retransmission count") {
    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        ChannelRealization chan = draw_channel(8, rng, 0.5 + 5.0 * rng.uniform());
        double prev = solve_power_control(chan, 1.0, 1).eta;
        for (int m : {2, 4, 8, 16}) {
            const double eta = solve_power_control(chan, 1.0, m).eta;
            CHECK(eta <= prev + 1e-12);
            prev = eta;
        }
    }
}

TEST_CASE("unaware baseline coincides with the optimum at M=1") {
    Rng rng(3);
    ChannelRealization chan = draw_channel(10, rng, 2.0);
    const PowerPolicy aware = solve_power_control(chan, 1.0, 1);
    const PowerPolicy unaware = solve_power_control_unaware(chan, 1.0, 1);
    CHECK(aware.eta == unaware.eta);
    for (std::size_t k = 0; k < aware.powers.size(); ++k) {
        CHECK(aware.powers[k] == unaware.powers[k]);
    }
}

TEST_CASE("retransmission-aware control dominates the unaware baseline per draw") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        ChannelRealization chan = draw_channel(20, rng, 0.2 + 8.0 * rng.uniform());
        const PowerPolicy aware = solve_power_control(chan, 1.0, 8);
        const PowerPolicy unaware = solve_power_control_unaware(chan, 1.0, 8);
        CHECK(analytic_mse(aware, chan) <= analytic_mse(unaware, chan) + 1e-15);
    }
}

TEST_CASE("aware-vs-unaware gap grows with the retransmission count") {
    Rng rng(19);
    const int draws = 200;
    std::vector<ChannelRealization> chans;
    for (int i = 0; i < draws; ++i) {
        chans.push_back(draw_channel(20, rng, 4.0));
    }
    double prev_gap = 0.0;
    for (int m : {2, 4, 8}) {
        double gap = 0.0;
        for (const ChannelRealization& chan : chans) {
            const PowerPolicy aware = solve_power_control(chan, 1.0, m);
            const PowerPolicy unaware = solve_power_control_unaware(chan, 1.0, m);
            gap += analytic_mse(unaware, chan) - analytic_mse(aware, chan);
        }
        gap /= draws;
        CHECK(gap >= prev_gap);
        prev_gap = gap;
    }
}
