#include "airrecomp/bounds.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "airrecomp/errors.hpp"

namespace airrecomp {

namespace {

// sum sqrt(p_k)|h_k| and sum p_k |h_k|^2
struct PolicySums {
    double amp = 0.0;
    double power = 0.0;
};

PolicySums policy_sums(const PowerPolicy& policy, const ChannelRealization& chan) {
    if (policy.powers.size() != chan.gains.size()) {
        throw error(errc::dimension, "bounds: policy and channel disagree on K");
    }
    PolicySums s;
    for (std::size_t k = 0; k < chan.gains.size(); ++k) {
        s.amp += std::sqrt(policy.powers[k]) * chan.gains[k];
        s.power += policy.powers[k] * chan.gains[k] * chan.gains[k];
    }
    return s;
}

} // namespace

double compute_c1(const PowerPolicy& policy, const ChannelRealization& chan) {
    return policy_sums(policy, chan).amp / std::sqrt(policy.eta);
}

double compute_c2(const BoundParams& params) {
    if (params.mu <= 0.0) {
        throw error(errc::not_applicable, "compute_c2: requires a strongly convex loss (mu > 0)");
    }
    const double c1 = compute_c1(params.policy, params.chan);
    const double k_devices = static_cast<double>(params.chan.num_devices);
    return 1.0 - (2.0 * params.beta / k_devices) *
                     (params.mu * params.lipschitz / (params.mu + params.lipschitz)) * c1;
}

double compute_c3(const BoundParams& params) {
    const PolicySums s = policy_sums(params.policy, params.chan);
    const double k_devices = static_cast<double>(params.chan.num_devices);
    const double eta = params.policy.eta;
    return params.sigma_bound_sq * s.power / (k_devices * eta) +
           params.dim * params.chan.noise_variance /
               (params.policy.num_retx * k_devices * k_devices * eta);
}

StepSizeCheck check_step_size(const BoundParams& params, Convexity kind) {
    const PolicySums s = policy_sums(params.policy, params.chan);
    const double sqrt_eta = std::sqrt(params.policy.eta);
    const double k_devices = static_cast<double>(params.chan.num_devices);
    StepSizeCheck check;
    if (kind == Convexity::strongly_convex) {
        if (params.mu <= 0.0) {
            throw error(errc::not_applicable, "check_step_size: strongly convex check needs mu > 0");
        }
        const double lhs = k_devices * sqrt_eta * (params.mu + params.lipschitz) /
                           (2.0 * params.mu * params.lipschitz * s.amp);
        const double rhs = (2.0 * sqrt_eta / (params.mu + params.lipschitz)) * s.amp / s.power;
        check.supremum = std::min(lhs, rhs);
    } else {
        check.supremum = (sqrt_eta / params.lipschitz) * s.amp / s.power;
    }
    check.admissible = params.beta > 0.0 && params.beta < check.supremum;
    return check;
}

BoundSplit loss_gap_bound(const BoundParams& params, int round, Convexity kind) {
    const StepSizeCheck check = check_step_size(params, kind);
    if (!check.admissible) {
        throw error(errc::domain, "loss_gap_bound: step size " + std::to_string(params.beta) +
                                      " violates the admissible supremum " +
                                      std::to_string(check.supremum));
    }
    const double c1 = compute_c1(params.policy, params.chan);
    const double c3 = compute_c3(params);
    const double k_devices = static_cast<double>(params.chan.num_devices);
    BoundSplit split;
    if (kind == Convexity::strongly_convex) {
        const double c2 = compute_c2(params);
        split.diminishing = 0.5 * params.lipschitz * std::pow(c2, round) * params.r0_sq;
        split.post_convergence =
            params.beta * params.beta * params.lipschitz * c3 / (2.0 * (1.0 - c2));
    } else {
        if (round < 1) {
            throw error(errc::domain, "loss_gap_bound: convex bound needs round >= 1");
        }
        split.diminishing = k_devices * params.r0_sq / (2.0 * round * params.beta * c1);
        split.post_convergence =
            0.5 * params.beta * (k_devices / c1 + params.lipschitz * params.beta) * c3;
    }
    return split;
}

double BoundReport::diminishing_term(int round) const {
    if (kind == Convexity::strongly_convex) {
        return 0.5 * params.lipschitz * std::pow(c2, round) * params.r0_sq;
    }
    const double k_devices = static_cast<double>(params.chan.num_devices);
    return k_devices * params.r0_sq / (2.0 * round * params.beta * c1);
}

BoundReport make_bound_report(const BoundParams& params, Convexity kind) {
    BoundReport report;
    report.kind = kind;
    report.params = params;
    report.c1 = compute_c1(params.policy, params.chan);
    report.c2 = (kind == Convexity::strongly_convex)
                    ? compute_c2(params)
                    : std::numeric_limits<double>::quiet_NaN();
    report.c3 = compute_c3(params);
    report.post_convergence_term = loss_gap_bound(params, 1, kind).post_convergence;
    return report;
}

} // namespace airrecomp
