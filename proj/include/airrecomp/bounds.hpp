#pragma once

#include "airrecomp/channel.hpp"
#include "airrecomp/powerctl.hpp"

namespace airrecomp {

enum class Convexity { convex, strongly_convex };

// Problem constants feeding the loss-gap bounds: curvature (mu, L), step size,
// the coordinate-variance budget ||sigma||^2, model dimension, expected initial
// squared distance E[r0^2], and the power policy / channel the run used.
struct BoundParams {
    double mu = 0.0;            // 0 for merely-convex losses
    double lipschitz = 0.0;     // L
    double beta = 0.0;
    double sigma_bound_sq = 0.0; // ||sigma||^2
    int dim = 0;                 // d
    double r0_sq = 0.0;          // E[r0^2]
    PowerPolicy policy;
    ChannelRealization chan;
};

// c1 = sum_k sqrt(p_k)|h_k| / sqrt(eta): the effective aggregate gain.
double compute_c1(const PowerPolicy& policy, const ChannelRealization& chan);

// c2 = 1 - (2 beta / K) (mu L / (mu + L)) c1; strongly-convex only.
double compute_c2(const BoundParams& params);

// c3 = ||sigma||^2 sum_k p_k |h_k|^2 / (K eta) + d sigma_z^2 / (M K^2 eta).
double compute_c3(const BoundParams& params);

struct StepSizeCheck {
    double supremum = 0.0;
    bool admissible = false; // beta strictly below the supremum
};

StepSizeCheck check_step_size(const BoundParams& params, Convexity kind);

struct BoundSplit {
    double diminishing = 0.0;     // decays with the round counter
    double post_convergence = 0.0; // persists at convergence
    double total() const { return diminishing + post_convergence; }
};

// Upper bound on E[F(W_n)] - F(W*) at round n. Refuses with the violated
// step-size supremum when beta is inadmissible.
BoundSplit loss_gap_bound(const BoundParams& params, int round, Convexity kind);

// Evaluated constants plus the term split, for reporting and CSV sweeps.
struct BoundReport {
    Convexity kind = Convexity::strongly_convex;
    double c1 = 0.0;
    double c2 = 0.0; // NaN for the convex bound
    double c3 = 0.0;
    double post_convergence_term = 0.0;
    BoundParams params;

    double diminishing_term(int round) const;
    double total(int round) const { return diminishing_term(round) + post_convergence_term; }
};

BoundReport make_bound_report(const BoundParams& params, Convexity kind);

} // namespace airrecomp
