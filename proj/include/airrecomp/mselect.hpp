#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "airrecomp/bounds.hpp"
#include "airrecomp/channel.hpp"

namespace airrecomp {

// Per-round training cost, per-transmission uplink cost, and the total budget
// constraining (train_cost + M * uplink_cost) * N <= budget.
struct CostModel {
    double train_cost = 0.0;  // C_t
    double uplink_cost = 1.0; // C_u
    double budget = 0.0;      // C-bar
};

// Largest round count affordable with M uplink transmissions per round;
// 0 means this M is infeasible and is excluded from candidate sets.
int rounds_for(const CostModel& cost, int num_retx);

struct SelectionResult {
    int m_star = 0;
    int n_star = 0;
    // objective value per feasible candidate M, ascending in M
    std::vector<std::pair<int, double>> objectives;
};

struct SelectConfig {
    int num_devices = 10;       // K
    double p_max = 0.5;
    double noise_variance = 0.0; // sigma_z^2
    double step_size = 0.05;     // beta
    int m_max = 64;
    // Explicit candidate list (e.g. the retransmission counts an experiment
    // actually sweeps); empty means every integer in [1, m_max].
    std::vector<int> candidates;
    int num_draws = 100; // channel draws to average the objective over
    std::uint64_t seed = 1;
};

// Diminishing-term objective K sqrt(eta(M)) / (2 N(M) beta sum_k sqrt(p_k)|h_k|)
// for one channel realization, with (eta, p) re-solved at each M.
double diminishing_objective(const ChannelRealization& chan, double p_max, double step_size,
                             int num_retx, int rounds);

// Single-draw selection over the given channel realization (noise variance is
// carried by the realization).
SelectionResult select_m_diminishing(const CostModel& cost, const ChannelRealization& chan,
                                     double p_max, double step_size, int m_max);

// Draw-averaged selection: the objective is averaged over cfg.num_draws seeded
// Rayleigh realizations before the argmin. Ties break toward smaller M.
SelectionResult select_m_diminishing(const CostModel& cost, const SelectConfig& cfg);

// Full-bound proxy: evaluates the applicable loss-gap bound at N(M) with the
// policy re-solved per M on the fixed channel in base.chan. Needs mu/L; an
// unknown Lipschitz constant is a not_applicable error. Candidates whose
// policy makes the step size inadmissible carry an infinite objective.
SelectionResult select_m_full_bound(const CostModel& cost, const BoundParams& base,
                                    Convexity kind, const SelectConfig& cfg);

struct SigmaSweepPoint {
    double sigma_z = 0.0;
    int m_star = 0;
    std::vector<std::pair<int, double>> objectives;
};

// Draw-averaged selection per noise level; the same seed (hence the same draw
// set) is used at every grid point.
std::vector<SigmaSweepPoint> sweep_sigma(const CostModel& cost, const SelectConfig& cfg,
                                         std::span<const double> sigma_grid);

} // namespace airrecomp
