#pragma once

#include <vector>

#include "airrecomp/channel.hpp"

namespace airrecomp {

// Transmit power policy for one communication round: per-device expected
// per-element powers p_k, the receiver-side post-transmission scalar eta, the
// peak constraint they were solved under, and the retransmission count the
// policy was optimized for.
struct PowerPolicy {
    std::vector<double> powers; // p_k
    double eta = 0.0;
    double p_max = 0.0;
    int num_retx = 1; // M
};

// Candidate post-transmission scalar assuming the weakest `sorted_prefix_k`
// devices (gains ascending) transmit at peak power. Requires chan.gains sorted
// ascending; 1 <= sorted_prefix_k <= K.
double eta_candidate(const ChannelRealization& chan, int sorted_prefix_k, double p_max, int num_retx);

// Closed-form MSE-optimal policy: eta* is the best candidate over all prefix
// sizes, and each device either inverts its channel or saturates at p_max.
// Unit tests certify the result against a dense grid oracle.
PowerPolicy solve_power_control(const ChannelRealization& chan, double p_max, int num_retx);

// Baseline that ignores retransmissions: powers and eta are M=1-optimal, then
// deployed with num_retx retransmissions anyway.
PowerPolicy solve_power_control_unaware(const ChannelRealization& chan, double p_max, int num_retx);

// Per-element estimation MSE of the aggregate under zero-mean unit-variance
// updates: (1/K^2) [ sum_k (sqrt(p_k)|h_k|/sqrt(eta) - 1)^2 + sigma_z^2/(M eta) ].
double analytic_mse(const PowerPolicy& policy, const ChannelRealization& chan);

} // namespace airrecomp
