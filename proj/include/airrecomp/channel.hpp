#pragma once

#include <span>
#include <vector>

#include "airrecomp/rng.hpp"

namespace airrecomp {

// One block-fading realization of the uplink multiple-access channel.
// Transmit-side phase pre-compensation makes the effective per-device channel
// its magnitude, so the model is real-valued throughout. Immutable after
// construction; safe to share across trial workers.
struct ChannelRealization {
    std::vector<double> gains;  // |h_k|, one per device
    double noise_variance = 0.0; // sigma_z^2, per element per transmission
    int num_devices = 0;         // K
};

// Draws K magnitudes of unit Rayleigh fading (E[|h|^2] = 1), deterministic
// given the generator state.
ChannelRealization draw_channel(int num_devices, Rng& rng, double noise_variance = 0.0);

// Superposes the K already power-scaled signals through the fading channel and
// adds one fresh vector of real Gaussian noise: y[i] = sum_k |h_k| x_k[i] + z[i].
std::vector<double> transmit_once(std::span<const std::vector<double>> signals,
                                  const ChannelRealization& chan, Rng& rng);

} // namespace airrecomp
