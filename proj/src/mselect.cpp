#include "airrecomp/mselect.hpp"

#include <cmath>
#include <limits>

#include "airrecomp/errors.hpp"
#include "airrecomp/powerctl.hpp"

namespace airrecomp {

namespace {

std::vector<int> candidate_list(const CostModel& cost, int m_max,
                                const std::vector<int>& explicit_candidates) {
    std::vector<int> out;
    if (!explicit_candidates.empty()) {
        for (int m : explicit_candidates) {
            if (m >= 1 && rounds_for(cost, m) >= 1) {
                out.push_back(m);
            }
        }
    } else {
        for (int m = 1; m <= m_max; ++m) {
            if (rounds_for(cost, m) < 1) {
                break; // rounds are nonincreasing in M
            }
            out.push_back(m);
        }
    }
    if (out.empty()) {
        throw error(errc::budget, "select_m: no retransmission count fits the budget");
    }
    return out;
}

SelectionResult argmin_result(const CostModel& cost,
                              const std::vector<std::pair<int, double>>& objectives) {
    SelectionResult result;
    result.objectives = objectives;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [m, value] : objectives) {
        if (value < best) { // strict: ties stay with the smaller M
            best = value;
            result.m_star = m;
        }
    }
    if (result.m_star == 0) {
        throw error(errc::not_applicable, "select_m: no candidate has a finite objective");
    }
    result.n_star = rounds_for(cost, result.m_star);
    return result;
}

} // namespace

int rounds_for(const CostModel& cost, int num_retx) {
    if (num_retx < 1) {
        throw error(errc::domain, "rounds_for: num_retx must be >= 1");
    }
    const double per_round = cost.train_cost + num_retx * cost.uplink_cost;
    if (per_round <= 0.0) {
        throw error(errc::domain, "rounds_for: per-round cost must be positive");
    }
    return static_cast<int>(std::floor(cost.budget / per_round));
}

double diminishing_objective(const ChannelRealization& chan, double p_max, double step_size,
                             int num_retx, int rounds) {
    const PowerPolicy policy = solve_power_control(chan, p_max, num_retx);
    double amp_sum = 0.0;
    for (std::size_t k = 0; k < chan.gains.size(); ++k) {
        amp_sum += std::sqrt(policy.powers[k]) * chan.gains[k];
    }
    return chan.num_devices * std::sqrt(policy.eta) / (2.0 * rounds * step_size * amp_sum);
}

SelectionResult select_m_diminishing(const CostModel& cost, const ChannelRealization& chan,
                                     double p_max, double step_size, int m_max) {
    const std::vector<int> candidates = candidate_list(cost, m_max, {});
    std::vector<std::pair<int, double>> objectives;
    objectives.reserve(candidates.size());
    for (int m : candidates) {
        objectives.emplace_back(m, diminishing_objective(chan, p_max, step_size, m,
                                                         rounds_for(cost, m)));
    }
    return argmin_result(cost, objectives);
}

SelectionResult select_m_diminishing(const CostModel& cost, const SelectConfig& cfg) {
    const std::vector<int> candidates = candidate_list(cost, cfg.m_max, cfg.candidates);
    Rng rng(derive_seed(cfg.seed, {0x5e1ec7u}));
    std::vector<ChannelRealization> draws;
    draws.reserve(cfg.num_draws);
    for (int d = 0; d < cfg.num_draws; ++d) {
        draws.push_back(draw_channel(cfg.num_devices, rng, cfg.noise_variance));
    }
    std::vector<std::pair<int, double>> objectives;
    objectives.reserve(candidates.size());
    for (int m : candidates) {
        const int rounds = rounds_for(cost, m);
        double sum = 0.0;
        for (const ChannelRealization& chan : draws) {
            sum += diminishing_objective(chan, cfg.p_max, cfg.step_size, m, rounds);
        }
        objectives.emplace_back(m, sum / cfg.num_draws);
    }
    return argmin_result(cost, objectives);
}

SelectionResult select_m_full_bound(const CostModel& cost, const BoundParams& base,
                                    Convexity kind, const SelectConfig& cfg) {
    if (base.lipschitz <= 0.0) {
        throw error(errc::not_applicable,
                    "select_m_full_bound: the Lipschitz constant is unknown for this problem");
    }
    if (kind == Convexity::strongly_convex && base.mu <= 0.0) {
        throw error(errc::not_applicable, "select_m_full_bound: mu must be known and positive");
    }
    const std::vector<int> candidates = candidate_list(cost, cfg.m_max, cfg.candidates);
    std::vector<std::pair<int, double>> objectives;
    objectives.reserve(candidates.size());
    for (int m : candidates) {
        BoundParams params = base;
        params.policy = solve_power_control(base.chan, cfg.p_max, m);
        double value = std::numeric_limits<double>::infinity();
        if (check_step_size(params, kind).admissible) {
            value = loss_gap_bound(params, rounds_for(cost, m), kind).total();
        }
        objectives.emplace_back(m, value);
    }
    return argmin_result(cost, objectives);
}

std::vector<SigmaSweepPoint> sweep_sigma(const CostModel& cost, const SelectConfig& cfg,
                                         std::span<const double> sigma_grid) {
    if (sigma_grid.empty()) {
        throw error(errc::config, "sweep_sigma: empty grid");
    }
    std::vector<SigmaSweepPoint> points;
    points.reserve(sigma_grid.size());
    for (double sigma_z : sigma_grid) {
        SelectConfig point_cfg = cfg;
        point_cfg.noise_variance = sigma_z * sigma_z;
        const SelectionResult sel = select_m_diminishing(cost, point_cfg);
        points.push_back({sigma_z, sel.m_star, sel.objectives});
    }
    return points;
}

} // namespace airrecomp
