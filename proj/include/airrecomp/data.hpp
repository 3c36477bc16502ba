#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "airrecomp/rng.hpp"

namespace airrecomp {

enum class TaskKind { classification, regression };

// Row-major feature matrix plus either integer labels or real targets.
struct Dataset {
    int num_samples = 0;
    int feature_dim = 0;
    std::vector<double> features; // num_samples * feature_dim
    std::vector<int> labels;      // classification
    std::vector<double> targets;  // regression
    TaskKind task = TaskKind::classification;

    const double* row(int i) const { return features.data() + static_cast<std::size_t>(i) * feature_dim; }
};

// A device's view into a dataset: row indices, no copies.
struct Shard {
    const Dataset* data = nullptr;
    std::vector<int> indices;
    int device_id = 0;

    int size() const { return static_cast<int>(indices.size()); }
};

// Standard IDX binary containers (big-endian), magic 0x00000803 for images and
// 0x00000801 for labels. Pixels are flattened row-wise and scaled to [0,1].
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

// IDX writers, for fixtures and for exporting synthetic classification sets in
// a form the loader can ingest.
void write_idx_images(const std::string& path, const std::vector<std::uint8_t>& pixels,
                      int count, int rows, int cols);
void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels);

// Synthetic 5-feature regression set: standardized features, smooth nonlinear
// target plus Gaussian observation noise. Deterministic given the generator.
Dataset synth_regression(int n, double noise, Rng& rng);

// Synthetic multi-class set shaped like an image-classification task: class
// prototypes plus per-pixel noise, quantized to bytes so it can round-trip
// through the IDX format. Used when no real image corpus is on disk.
Dataset synth_classification(int n, int num_classes, int feature_dim, double class_sep,
                             double pixel_noise, Rng& rng);

enum class PartitionScheme { iid_equal };

// Shuffles then chunks into K disjoint shards covering the dataset; the first
// (n mod K) shards take one extra sample.
std::vector<Shard> partition(const Dataset& data, int num_devices, PartitionScheme scheme, Rng& rng);

// Per-device quadratics F_k(w) = 0.5 ||w - a_k||^2 with known global optimum
// W* = mean_k a_k. The average loss F has mu = L = 1 by construction.
struct QuadraticProblem {
    int num_devices = 0;
    int dim = 0;
    std::vector<std::vector<double>> targets; // a_k
    std::vector<double> w_star;
    double f_star = 0.0; // F(W*) = (1/2K) sum_k ||W* - a_k||^2
    double mu = 1.0;
    double lipschitz = 1.0;
};

QuadraticProblem make_quadratic_problem(int num_devices, int dim, double spread, Rng& rng);

// Same problem family with explicitly chosen per-device targets.
QuadraticProblem quadratic_from_targets(std::vector<std::vector<double>> targets);

// CSV export of a synthetic dataset for inspection.
void write_dataset_csv(const std::string& path, const Dataset& data);

} // namespace airrecomp
