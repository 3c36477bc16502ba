#include "airrecomp/learner.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "airrecomp/errors.hpp"
#include "airrecomp/powerctl.hpp"

namespace airrecomp {

namespace {

constexpr std::uint64_t kChannelStream = 0xc4a1;
constexpr std::uint64_t kNoiseStream = 0x401e;

bool all_finite(std::span<const double> values) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

} // namespace

double local_loss(const LocalProblem& prob, std::span<const double> weights) {
    if (prob.kind == ProblemKind::quadratic) {
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            const double d = weights[i] - prob.quad_target[i];
            acc += d * d;
        }
        return 0.5 * acc;
    }
    return mlp_loss(prob.spec, weights, prob.shard);
}

void local_gradient(const LocalProblem& prob, std::span<const double> weights,
                    std::span<double> grad) {
    if (prob.kind == ProblemKind::quadratic) {
        if (weights.size() != prob.quad_target.size() || grad.size() != weights.size()) {
            throw error(errc::dimension, "local_gradient: dimension mismatch");
        }
        for (std::size_t i = 0; i < weights.size(); ++i) {
            grad[i] = weights[i] - prob.quad_target[i];
        }
        return;
    }
    mlp_loss_grad(prob.spec, weights, prob.shard, grad);
}

ModelUpdate local_train(const GlobalModel& model, const LocalProblem& prob) {
    if (prob.epochs < 1) {
        throw error(errc::config, "local_train: epochs must be >= 1");
    }
    std::vector<double> w = model.weights;
    std::vector<double> grad(w.size());
    for (int e = 0; e < prob.epochs; ++e) {
        local_gradient(prob, w, grad);
        if (!all_finite(grad)) {
            throw error(errc::numeric, "local_train: non-finite gradient at round " +
                                           std::to_string(model.round) + ", device " +
                                           std::to_string(prob.device_id));
        }
        for (std::size_t i = 0; i < w.size(); ++i) {
            w[i] -= prob.step_size * grad[i];
        }
    }
    ModelUpdate update;
    update.device_id = prob.device_id;
    update.values.resize(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        update.values[i] = (model.weights[i] - w[i]) / prob.step_size;
    }
    return update;
}

GlobalModel global_step(const GlobalModel& model, const ModelUpdate& estimated_update,
                        double beta) {
    if (estimated_update.values.size() != model.weights.size()) {
        throw error(errc::dimension, "global_step: update dimension mismatch");
    }
    GlobalModel next;
    next.round = model.round + 1;
    next.weights.resize(model.weights.size());
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
        next.weights[i] = model.weights[i] - beta * estimated_update.values[i];
    }
    if (!all_finite(next.weights)) {
        throw error(errc::numeric,
                    "global_step: non-finite weights at round " + std::to_string(next.round));
    }
    return next;
}

double eval_model(const GlobalModel& model, const MlpSpec& spec, const Dataset& test,
                  TaskKind task) {
    if (task == TaskKind::classification) {
        return mlp_accuracy(spec, model.weights, test);
    }
    return mlp_nmse(spec, model.weights, test);
}

namespace {

double evaluate_metric(const GlobalModel& model, const EvalSpec& eval, double loss) {
    switch (eval.kind) {
        case EvalKind::none:
            return std::numeric_limits<double>::quiet_NaN();
        case EvalKind::accuracy:
            return eval_model(model, eval.spec, *eval.test, TaskKind::classification);
        case EvalKind::nmse:
            return eval_model(model, eval.spec, *eval.test, TaskKind::regression);
        case EvalKind::loss_gap:
            return loss - eval.f_star;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double global_loss(const std::vector<LocalProblem>& devices, std::span<const double> weights) {
    double sum = 0.0;
    for (const LocalProblem& prob : devices) {
        sum += local_loss(prob, weights);
    }
    return sum / static_cast<double>(devices.size());
}

} // namespace

TrainingTrace run_airrecomp(const std::vector<LocalProblem>& devices, const GlobalModel& init,
                            const EvalSpec& eval, const FlConfig& cfg,
                            const RoundObserver& observer) {
    if (devices.empty()) {
        throw error(errc::config, "run_airrecomp: no devices");
    }
    if ((eval.kind == EvalKind::accuracy || eval.kind == EvalKind::nmse) && eval.test == nullptr) {
        throw error(errc::config, "run_airrecomp: eval kind needs a test set");
    }
    const int num_devices = static_cast<int>(devices.size());
    const double per_round_cost = cfg.cost.train_cost + cfg.num_retx * cfg.cost.uplink_cost;
    const bool budgeted = cfg.cost.budget > 0.0;
    if (budgeted && per_round_cost > cfg.cost.budget) {
        throw error(errc::budget, "run_airrecomp: budget does not cover a single round");
    }

    GlobalModel model = init;
    TrainingTrace trace;
    double cum_cost = 0.0;

    std::vector<ModelUpdate> updates(devices.size());
    std::vector<NormalizedUpdate> normalized(devices.size());
    std::vector<std::pair<double, double>> stats(devices.size());

    for (int round = 0;; ++round) {
        if (budgeted && cum_cost + per_round_cost > cfg.cost.budget) {
            break;
        }
        if (cfg.max_rounds > 0 && round >= cfg.max_rounds) {
            break;
        }

        // Devices are independent given the broadcast model.
        for (std::size_t k = 0; k < devices.size(); ++k) {
            updates[k] = local_train(model, devices[k]);
        }
        for (std::size_t k = 0; k < devices.size(); ++k) {
            if (cfg.normalize_updates) {
                normalized[k] = normalize(updates[k]);
                stats[k] = {normalized[k].mean, normalized[k].std};
            } else {
                // Analysis regime: treat updates as already zero-mean unit-variance.
                normalized[k] = NormalizedUpdate{updates[k].values, 0.0, 1.0};
                stats[k] = {0.0, 1.0};
            }
        }

        ChannelRealization chan;
        if (cfg.channel != nullptr) {
            chan = *cfg.channel;
        } else {
            const std::uint64_t chan_step =
                cfg.freeze_channel ? 0 : static_cast<std::uint64_t>(round);
            Rng chan_rng(derive_seed(cfg.seed, {kChannelStream, chan_step}));
            chan = draw_channel(num_devices, chan_rng, cfg.noise_variance);
        }
        const PowerPolicy policy = solve_power_control(chan, cfg.p_max, cfg.num_retx);

        Rng noise_rng(derive_seed(cfg.seed, {kNoiseStream, static_cast<std::uint64_t>(round)}));
        const std::vector<double> aggregate =
            aggregate_uplink(normalized, policy, chan, cfg.num_retx, noise_rng);
        const ModelUpdate estimate = denormalize(aggregate, stats);

        if (observer) {
            observer(RoundObservation{round, model.weights, updates, estimate.values, policy, chan});
        }

        model = global_step(model, estimate, cfg.step_size);
        cum_cost += per_round_cost;

        TraceRow row;
        row.round = model.round;
        row.loss = global_loss(devices, model.weights);
        row.metric = evaluate_metric(model, eval, row.loss);
        row.cum_cost = cum_cost;
        row.num_retx = cfg.num_retx;
        row.eta = policy.eta;
        row.seed = cfg.seed;
        trace.rows.push_back(row);
    }

    trace.final_weights = model.weights;
    return trace;
}

} // namespace airrecomp
