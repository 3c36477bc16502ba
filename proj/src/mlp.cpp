#include "airrecomp/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "airrecomp/errors.hpp"

namespace airrecomp {

namespace {

struct Layout {
    int w1 = 0, b1 = 0, w2 = 0, b2 = 0; // offsets
    explicit Layout(const MlpSpec& s) {
        w1 = 0;
        b1 = s.hidden * s.input;
        w2 = b1 + s.hidden;
        b2 = w2 + s.output * s.hidden;
    }
};

// Forward pass for one sample; returns hidden activations and raw outputs.
inline void forward(const MlpSpec& s, const Layout& off, const double* w, const double* x,
                    double* hidden, double* out) {
    for (int j = 0; j < s.hidden; ++j) {
        const double* row = w + off.w1 + std::size_t(j) * s.input;
        double acc = w[off.b1 + j];
        for (int i = 0; i < s.input; ++i) {
            acc += row[i] * x[i];
        }
        hidden[j] = acc > 0.0 ? acc : 0.0;
    }
    for (int o = 0; o < s.output; ++o) {
        const double* row = w + off.w2 + std::size_t(o) * s.hidden;
        double acc = w[off.b2 + o];
        for (int j = 0; j < s.hidden; ++j) {
            acc += row[j] * hidden[j];
        }
        out[o] = acc;
    }
}

// Loss and d(loss)/d(out) for one sample. For the softmax head the gradient is
// softmax(out) - onehot; for the MSE head it is 2*(out - y).
inline double head_loss_grad(const MlpSpec& s, const Dataset& data, int sample, const double* out,
                             double* dout) {
    if (s.head == HeadKind::softmax_cross_entropy) {
        const int label = data.labels[sample];
        double max_v = out[0];
        for (int o = 1; o < s.output; ++o) {
            max_v = std::max(max_v, out[o]);
        }
        double denom = 0.0;
        for (int o = 0; o < s.output; ++o) {
            denom += std::exp(out[o] - max_v);
        }
        const double log_denom = std::log(denom);
        for (int o = 0; o < s.output; ++o) {
            const double p = std::exp(out[o] - max_v) / denom;
            dout[o] = p - (o == label ? 1.0 : 0.0);
        }
        return -(out[label] - max_v - log_denom);
    }
    // linear + mean squared error, scalar or vector output
    double loss = 0.0;
    const double y = data.targets[sample];
    for (int o = 0; o < s.output; ++o) {
        const double diff = out[o] - y;
        loss += diff * diff;
        dout[o] = 2.0 * diff;
    }
    return loss;
}

} // namespace

std::vector<double> init_mlp_weights(const MlpSpec& spec, Rng& rng) {
    if (spec.input < 1 || spec.hidden < 1 || spec.output < 1) {
        throw error(errc::dimension, "init_mlp_weights: all layer sizes must be >= 1");
    }
    Layout off(spec);
    std::vector<double> w(static_cast<std::size_t>(spec.weight_count()), 0.0);
    const double lim1 = std::sqrt(6.0 / (spec.input + spec.hidden));
    for (int i = 0; i < spec.hidden * spec.input; ++i) {
        w[off.w1 + i] = (2.0 * rng.uniform() - 1.0) * lim1;
    }
    const double lim2 = std::sqrt(6.0 / (spec.hidden + spec.output));
    for (int i = 0; i < spec.output * spec.hidden; ++i) {
        w[off.w2 + i] = (2.0 * rng.uniform() - 1.0) * lim2;
    }
    return w;
}

double mlp_loss(const MlpSpec& spec, std::span<const double> weights, const Shard& shard) {
    if (static_cast<int>(weights.size()) != spec.weight_count()) {
        throw error(errc::dimension, "mlp_loss: weight vector size mismatch");
    }
    if (shard.size() == 0) {
        throw error(errc::dimension, "mlp_loss: empty shard");
    }
    Layout off(spec);
    std::vector<double> hidden(spec.hidden), out(spec.output), dout(spec.output);
    double total = 0.0;
    for (int idx : shard.indices) {
        forward(spec, off, weights.data(), shard.data->row(idx), hidden.data(), out.data());
        total += head_loss_grad(spec, *shard.data, idx, out.data(), dout.data());
    }
    return total / shard.size();
}

double mlp_loss_grad(const MlpSpec& spec, std::span<const double> weights, const Shard& shard,
                     std::span<double> grad) {
    if (static_cast<int>(weights.size()) != spec.weight_count() ||
        grad.size() != weights.size()) {
        throw error(errc::dimension, "mlp_loss_grad: weight/grad size mismatch");
    }
    if (shard.size() == 0) {
        throw error(errc::dimension, "mlp_loss_grad: empty shard");
    }
    Layout off(spec);
    std::fill(grad.begin(), grad.end(), 0.0);
    std::vector<double> hidden(spec.hidden), out(spec.output), dout(spec.output), dhidden(spec.hidden);
    const double* w = weights.data();
    double* g = grad.data();
    double total = 0.0;

    for (int idx : shard.indices) {
        const double* x = shard.data->row(idx);
        forward(spec, off, w, x, hidden.data(), out.data());
        total += head_loss_grad(spec, *shard.data, idx, out.data(), dout.data());

        std::fill(dhidden.begin(), dhidden.end(), 0.0);
        for (int o = 0; o < spec.output; ++o) {
            const double d = dout[o];
            const double* w2row = w + off.w2 + std::size_t(o) * spec.hidden;
            double* g2row = g + off.w2 + std::size_t(o) * spec.hidden;
            for (int j = 0; j < spec.hidden; ++j) {
                g2row[j] += d * hidden[j];
                dhidden[j] += d * w2row[j];
            }
            g[off.b2 + o] += d;
        }
        for (int j = 0; j < spec.hidden; ++j) {
            if (hidden[j] <= 0.0) {
                continue; // relu gate
            }
            const double d = dhidden[j];
            double* g1row = g + off.w1 + std::size_t(j) * spec.input;
            for (int i = 0; i < spec.input; ++i) {
                g1row[i] += d * x[i];
            }
            g[off.b1 + j] += d;
        }
    }
    const double inv_n = 1.0 / shard.size();
    for (double& v : grad) {
        v *= inv_n;
    }
    return total * inv_n;
}

std::vector<double> mlp_predict(const MlpSpec& spec, std::span<const double> weights,
                                const double* features) {
    Layout off(spec);
    std::vector<double> hidden(spec.hidden), out(spec.output);
    forward(spec, off, weights.data(), features, hidden.data(), out.data());
    return out;
}

double mlp_accuracy(const MlpSpec& spec, std::span<const double> weights, const Dataset& test) {
    if (test.num_samples == 0) {
        throw error(errc::dimension, "mlp_accuracy: empty test set");
    }
    Layout off(spec);
    std::vector<double> hidden(spec.hidden), out(spec.output);
    int correct = 0;
    for (int i = 0; i < test.num_samples; ++i) {
        forward(spec, off, weights.data(), test.row(i), hidden.data(), out.data());
        const int pred = static_cast<int>(std::max_element(out.begin(), out.end()) - out.begin());
        if (pred == test.labels[i]) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / test.num_samples;
}

double mlp_nmse(const MlpSpec& spec, std::span<const double> weights, const Dataset& test) {
    if (test.num_samples == 0) {
        throw error(errc::dimension, "mlp_nmse: empty test set");
    }
    Layout off(spec);
    std::vector<double> hidden(spec.hidden), out(spec.output);
    double mse = 0.0, mean = 0.0;
    for (double t : test.targets) {
        mean += t;
    }
    mean /= test.num_samples;
    double var = 0.0;
    for (double t : test.targets) {
        var += (t - mean) * (t - mean);
    }
    var /= test.num_samples;
    for (int i = 0; i < test.num_samples; ++i) {
        forward(spec, off, weights.data(), test.row(i), hidden.data(), out.data());
        const double diff = out[0] - test.targets[i];
        mse += diff * diff;
    }
    mse /= test.num_samples;
    return var > 0.0 ? mse / var : mse;
}

} // namespace airrecomp
