#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "airrecomp/aircomp.hpp"
#include "airrecomp/data.hpp"
#include "airrecomp/mlp.hpp"
#include "airrecomp/mselect.hpp"

namespace airrecomp {

struct GlobalModel {
    std::vector<double> weights;
    int round = 0;
};

enum class ProblemKind { quadratic, mlp };

// One device's local optimization problem: either a quadratic with a known
// target or a full-batch MLP problem over a data shard.
struct LocalProblem {
    ProblemKind kind = ProblemKind::quadratic;
    MlpSpec spec;                    // mlp only
    Shard shard;                     // mlp only
    std::vector<double> quad_target; // quadratic only: a_k
    int epochs = 1;                  // E
    double step_size = 0.05;         // beta
    int device_id = 0;
};

double local_loss(const LocalProblem& prob, std::span<const double> weights);
void local_gradient(const LocalProblem& prob, std::span<const double> weights,
                    std::span<double> grad);

// Runs E epochs of full-batch gradient descent from the global model and
// returns (W_n - W_E) / beta. With E = 1 this is exactly the local gradient.
ModelUpdate local_train(const GlobalModel& model, const LocalProblem& prob);

// W <- W - beta * estimate; increments the round counter and guards against
// non-finite weights.
GlobalModel global_step(const GlobalModel& model, const ModelUpdate& estimated_update, double beta);

enum class EvalKind { none, accuracy, nmse, loss_gap };

struct EvalSpec {
    EvalKind kind = EvalKind::none;
    const Dataset* test = nullptr; // accuracy / nmse
    MlpSpec spec;                  // head used for evaluation
    double f_star = 0.0;           // loss_gap reference
};

// Held-out metric: classification accuracy or normalized MSE.
double eval_model(const GlobalModel& model, const MlpSpec& spec, const Dataset& test,
                  TaskKind task);

struct FlConfig {
    int num_retx = 1;            // M
    double p_max = 0.5;
    double noise_variance = 0.0; // sigma_z^2
    double step_size = 0.05;     // beta (global and local)
    int epochs = 1;              // E
    CostModel cost;              // budget == 0 disables cost accounting
    int max_rounds = 0;          // extra cap; 0 = none
    bool normalize_updates = true;
    bool freeze_channel = false; // one fading realization for the whole run
    // Externally supplied realization, used for every round (implies frozen).
    // Must outlive the run; its noise_variance wins over the field above.
    const ChannelRealization* channel = nullptr;
    std::uint64_t seed = 1;
};

struct TraceRow {
    int round = 0;
    double loss = 0.0;   // global training loss F(W_round)
    double metric = 0.0; // eval metric (NaN when EvalKind::none)
    double cum_cost = 0.0;
    int num_retx = 1;
    double eta = 0.0;
    std::uint64_t seed = 0;
};

struct TrainingTrace {
    std::vector<TraceRow> rows;
    std::vector<double> final_weights;
};

// Per-round view for validation hooks: weights entering the round, the raw
// local updates, the denormalized server estimate, and the policy used.
struct RoundObservation {
    int round = 0;
    std::span<const double> weights_before;
    const std::vector<ModelUpdate>& local_updates;
    std::span<const double> estimated_update;
    const PowerPolicy& policy;
    const ChannelRealization& chan;
};

using RoundObserver = std::function<void(const RoundObservation&)>;

// The full train/aggregate loop: broadcast, local training, normalization,
// per-round power control, M-fold analog aggregation, denormalization, and the
// global step, repeated until the cost budget (or round cap) is exhausted.
// The trace is truncated at the last round the budget fully covers.
TrainingTrace run_airrecomp(const std::vector<LocalProblem>& devices, const GlobalModel& init,
                            const EvalSpec& eval, const FlConfig& cfg,
                            const RoundObserver& observer = {});

} // namespace airrecomp
