#include "airrecomp/powerctl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "airrecomp/errors.hpp"

namespace airrecomp {

namespace {

void check_inputs(const ChannelRealization& chan, double p_max, int num_retx) {
    if (chan.num_devices < 1 || chan.gains.empty()) {
        throw error(errc::dimension, "power control: channel has no devices");
    }
    if (p_max <= 0.0) {
        throw error(errc::domain, "power control: p_max must be positive");
    }
    if (num_retx < 1) {
        throw error(errc::domain, "power control: num_retx must be >= 1");
    }
}

} // namespace

double eta_candidate(const ChannelRealization& chan, int sorted_prefix_k, double p_max, int num_retx) {
    if (sorted_prefix_k < 1 || sorted_prefix_k > chan.num_devices) {
        throw error(errc::dimension, "eta_candidate: prefix size out of range");
    }
    double gain_power_sum = 0.0; // sum_j |h_j|^2 P
    double gain_amp_sum = 0.0;   // sum_j |h_j| sqrt(P)
    const double sqrt_p = std::sqrt(p_max);
    for (int j = 0; j < sorted_prefix_k; ++j) {
        gain_power_sum += chan.gains[j] * chan.gains[j] * p_max;
        gain_amp_sum += chan.gains[j] * sqrt_p;
    }
    if (gain_amp_sum <= 0.0) {
        throw error(errc::domain, "eta_candidate: all gains in prefix are zero");
    }
    const double ratio = (gain_power_sum + chan.noise_variance / num_retx) / gain_amp_sum;
    return ratio * ratio;
}

PowerPolicy solve_power_control(const ChannelRealization& chan, double p_max, int num_retx) {
    check_inputs(chan, p_max, num_retx);
    if (*std::max_element(chan.gains.begin(), chan.gains.end()) <= 0.0) {
        throw error(errc::domain, "solve_power_control: no device has a nonzero channel");
    }

    ChannelRealization sorted = chan;
    std::sort(sorted.gains.begin(), sorted.gains.end());
    // Leading zero gains cannot carry signal; candidates start at the first
    // nonzero prefix so the candidate denominators stay positive.
    double eta_star = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= sorted.num_devices; ++k) {
        if (sorted.gains[static_cast<std::size_t>(k) - 1] <= 0.0) {
            continue;
        }
        eta_star = std::min(eta_star, eta_candidate(sorted, k, p_max, num_retx));
    }

    PowerPolicy policy;
    policy.eta = eta_star;
    policy.p_max = p_max;
    policy.num_retx = num_retx;
    policy.powers.resize(chan.gains.size());
    for (std::size_t k = 0; k < chan.gains.size(); ++k) {
        const double g = chan.gains[k];
        policy.powers[k] = (g > 0.0) ? std::min(p_max, eta_star / (g * g)) : p_max;
    }
    return policy;
}

PowerPolicy solve_power_control_unaware(const ChannelRealization& chan, double p_max, int num_retx) {
    PowerPolicy policy = solve_power_control(chan, p_max, 1);
    policy.num_retx = num_retx;
    return policy;
}

double analytic_mse(const PowerPolicy& policy, const ChannelRealization& chan) {
    if (policy.powers.size() != chan.gains.size()) {
        throw error(errc::dimension, "analytic_mse: policy and channel disagree on K");
    }
    if (policy.eta <= 0.0) {
        throw error(errc::domain, "analytic_mse: eta must be positive");
    }
    const double sqrt_eta = std::sqrt(policy.eta);
    double fading = 0.0;
    for (std::size_t k = 0; k < chan.gains.size(); ++k) {
        const double a = std::sqrt(policy.powers[k]) * chan.gains[k] / sqrt_eta - 1.0;
        fading += a * a;
    }
    const double noise = chan.noise_variance / (policy.num_retx * policy.eta);
    const double k_devices = static_cast<double>(chan.num_devices);
    return (fading + noise) / (k_devices * k_devices);
}

} // namespace airrecomp
