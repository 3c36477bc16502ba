#include "airrecomp/channel.hpp"

#include "airrecomp/errors.hpp"

namespace airrecomp {

ChannelRealization draw_channel(int num_devices, Rng& rng, double noise_variance) {
    if (num_devices < 1) {
        throw error(errc::dimension, "draw_channel: num_devices must be >= 1");
    }
    if (noise_variance < 0.0) {
        throw error(errc::domain, "draw_channel: noise_variance must be >= 0");
    }
    ChannelRealization chan;
    chan.num_devices = num_devices;
    chan.noise_variance = noise_variance;
    chan.gains.resize(static_cast<std::size_t>(num_devices));
    for (double& g : chan.gains) {
        g = rng.rayleigh_unit();
    }
    return chan;
}

std::vector<double> transmit_once(std::span<const std::vector<double>> signals,
                                  const ChannelRealization& chan, Rng& rng) {
    if (signals.size() != chan.gains.size()) {
        throw error(errc::dimension, "transmit_once: signal count does not match channel size");
    }
    const std::size_t dim = signals.empty() ? 0 : signals.front().size();
    if (dim == 0) {
        throw error(errc::dimension, "transmit_once: empty signal");
    }
    for (const auto& s : signals) {
        if (s.size() != dim) {
            throw error(errc::dimension, "transmit_once: signals have mismatched lengths");
        }
    }
    std::vector<double> received(dim, 0.0);
    for (std::size_t k = 0; k < signals.size(); ++k) {
        const double g = chan.gains[k];
        const std::vector<double>& s = signals[k];
        for (std::size_t i = 0; i < dim; ++i) {
            received[i] += g * s[i];
        }
    }
    if (chan.noise_variance > 0.0) {
        const double sd = std::sqrt(chan.noise_variance);
        for (std::size_t i = 0; i < dim; ++i) {
            received[i] += rng.normal(0.0, sd);
        }
    }
    return received;
}

} // namespace airrecomp
