#pragma once

#include <span>
#include <vector>

#include "airrecomp/data.hpp"
#include "airrecomp/rng.hpp"

namespace airrecomp {

enum class Activation { relu };
enum class HeadKind { softmax_cross_entropy, linear_mse };

// One-hidden-layer fully connected network. Weight vector layout:
// [W1 hidden x input][b1][W2 output x hidden][b2], rows contiguous.
struct MlpSpec {
    int input = 0;
    int hidden = 0;
    int output = 0;
    Activation activation = Activation::relu;
    HeadKind head = HeadKind::softmax_cross_entropy;

    int weight_count() const {
        return hidden * input + hidden + output * hidden + output;
    }
};

// Seeded uniform init in +-sqrt(6/(fan_in+fan_out)) per layer; biases zero.
std::vector<double> init_mlp_weights(const MlpSpec& spec, Rng& rng);

// Mean per-sample loss over the shard (cross-entropy or mean squared error).
double mlp_loss(const MlpSpec& spec, std::span<const double> weights, const Shard& shard);

// Mean loss and its gradient in one pass; grad must have weight_count() slots.
double mlp_loss_grad(const MlpSpec& spec, std::span<const double> weights, const Shard& shard,
                     std::span<double> grad);

// Raw network outputs for one feature row (pre-softmax for the classifier).
std::vector<double> mlp_predict(const MlpSpec& spec, std::span<const double> weights,
                                const double* features);

double mlp_accuracy(const MlpSpec& spec, std::span<const double> weights, const Dataset& test);

// MSE(prediction, target) / variance(target).
double mlp_nmse(const MlpSpec& spec, std::span<const double> weights, const Dataset& test);

} // namespace airrecomp
