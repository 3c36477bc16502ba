#include "airrecomp/aircomp.hpp"

#include <cmath>

#include "airrecomp/errors.hpp"

namespace airrecomp {

NormalizedUpdate normalize(const ModelUpdate& update) {
    const std::size_t dim = update.values.size();
    if (dim < 2) {
        throw error(errc::dimension, "normalize: update needs at least 2 elements");
    }
    double mean = 0.0;
    for (double v : update.values) {
        mean += v;
    }
    mean /= static_cast<double>(dim);
    double var = 0.0;
    for (double v : update.values) {
        var += (v - mean) * (v - mean);
    }
    var /= static_cast<double>(dim - 1);
    const double std_dev = std::sqrt(var);

    NormalizedUpdate out;
    out.mean = mean;
    if (std_dev < kStdEpsilon) {
        out.std = 0.0;
        out.values.assign(dim, 0.0);
        return out;
    }
    out.std = std_dev;
    out.values.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        out.values[i] = (update.values[i] - mean) / std_dev;
    }
    return out;
}

std::vector<double> aggregate_uplink(const std::vector<NormalizedUpdate>& updates,
                                     const PowerPolicy& policy,
                                     const ChannelRealization& chan,
                                     int num_retx, Rng& rng) {
    if (updates.empty()) {
        throw error(errc::dimension, "aggregate_uplink: no updates");
    }
    if (updates.size() != chan.gains.size() || updates.size() != policy.powers.size()) {
        throw error(errc::dimension, "aggregate_uplink: K mismatch between updates, policy, channel");
    }
    if (num_retx < 1) {
        throw error(errc::domain, "aggregate_uplink: num_retx must be >= 1");
    }
    const std::size_t dim = updates.front().values.size();
    std::vector<std::vector<double>> signals(updates.size());
    for (std::size_t k = 0; k < updates.size(); ++k) {
        if (updates[k].values.size() != dim) {
            throw error(errc::dimension, "aggregate_uplink: updates have mismatched lengths");
        }
        const double amp = std::sqrt(policy.powers[k]);
        signals[k].resize(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            signals[k][i] = amp * updates[k].values[i];
        }
    }

    // Identical signals across the M transmissions, fresh noise per transmission.
    std::vector<double> sum(dim, 0.0);
    for (int m = 0; m < num_retx; ++m) {
        std::vector<double> received = transmit_once(signals, chan, rng);
        for (std::size_t i = 0; i < dim; ++i) {
            sum[i] += received[i];
        }
    }
    const double scale = 1.0 / (static_cast<double>(num_retx) * std::sqrt(policy.eta) *
                                static_cast<double>(chan.num_devices));
    for (double& v : sum) {
        v *= scale;
    }
    return sum;
}

ModelUpdate denormalize(const std::vector<double>& aggregate,
                        const std::vector<std::pair<double, double>>& stats) {
    if (stats.empty()) {
        throw error(errc::dimension, "denormalize: empty statistics");
    }
    double mean_sum = 0.0;
    double std_sum = 0.0;
    for (const auto& [mean, std_dev] : stats) {
        mean_sum += mean;
        std_sum += std_dev;
    }
    const double k_devices = static_cast<double>(stats.size());
    const double std_avg = std_sum / k_devices;
    const double mean_avg = mean_sum / k_devices;

    ModelUpdate out;
    out.values.resize(aggregate.size());
    for (std::size_t i = 0; i < aggregate.size(); ++i) {
        out.values[i] = aggregate[i] * std_avg + mean_avg;
    }
    return out;
}

} // namespace airrecomp
