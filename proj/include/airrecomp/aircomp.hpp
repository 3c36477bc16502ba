#pragma once

#include <utility>
#include <vector>

#include "airrecomp/channel.hpp"
#include "airrecomp/powerctl.hpp"

namespace airrecomp {

struct ModelUpdate {
    std::vector<double> values;
    int device_id = 0;
};

// A device update shifted to zero mean and scaled to unit sample variance
// (d-1 divisor), plus the statistics needed to undo it at the server.
struct NormalizedUpdate {
    std::vector<double> values;
    double mean = 0.0;
    double std = 0.0;
};

// Guard below which an update counts as constant: it is sent as zeros and
// reconstructed from its mean alone.
inline constexpr double kStdEpsilon = 1e-12;

NormalizedUpdate normalize(const ModelUpdate& update);

// Uplink aggregation for one round: every device sends sqrt(p_k) * values_k,
// the same signals are retransmitted num_retx times over static fading with
// fresh noise each time, and the receiver averages and scales by sqrt(eta)*K.
std::vector<double> aggregate_uplink(const std::vector<NormalizedUpdate>& updates,
                                     const PowerPolicy& policy,
                                     const ChannelRealization& chan,
                                     int num_retx, Rng& rng);

// Server-side denormalization with the averaged per-device statistics. The
// estimate is already real-valued in this model, so taking the real part is
// the identity here.
ModelUpdate denormalize(const std::vector<double>& aggregate,
                        const std::vector<std::pair<double, double>>& stats);

} // namespace airrecomp
