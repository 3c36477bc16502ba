#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "airrecomp/learner.hpp"
#include "airrecomp/mselect.hpp"

namespace airrecomp {

// Experiment configuration, one nested section per module. A JSON file feeds
// it and CLI flags override individual values; every command validates the
// fields it uses before running.
struct ExperimentConfig {
    std::string experiment; // mse-sweep | baseline-compare | train | select-m | sigma-sweep | bound-validate

    std::uint64_t seed = 0;
    bool seed_set = false;
    int trials = 0; // 0 = per-command default
    int workers = 0; // 0 = hardware concurrency
    bool full_scale = false;
    std::string out;

    struct Channel {
        int num_devices = 10;            // K
        double noise_variance = 0.0;     // sigma_z^2 (train / select / bound-validate)
        std::vector<double> noise_var_grid; // sigma_z^2 grid (mse-sweep, baseline-compare)
        std::vector<double> sigma_grid;  // sigma_z grid (sigma-sweep)
        bool freeze = false;
    } channel;

    struct Power {
        double p_max = 0.5;
        std::vector<int> m_list{1, 2, 4, 8};
    } power;

    struct Train {
        std::string problem = "synth-class"; // mnist | synth-class | synth-reg | quadratic
        std::string mnist_images, mnist_labels, mnist_test_images, mnist_test_labels;
        int samples_per_device = 600; // desk scale; 6000 at full scale
        int test_samples = 2000;
        double step_size = 0.05; // beta
        int epochs = 2;          // E
        int hidden = 100;
        int quad_dim = 8;
        double quad_spread = 1.0;
        double synth_noise = 0.25;      // regression observation noise
        int synth_classes = 10;
        int synth_feature_dim = 784;
        double synth_class_sep = 0.12;
        double synth_pixel_noise = 0.35;
        bool emit_per_seed = false;
    } train;

    CostModel cost{4.0, 1.0, 150.0};

    struct Select {
        int m_max = 64;
        int num_draws = 100;
        // Candidate retransmission counts. When the config never mentions the
        // key, select-m and sigma-sweep default to the counts the training
        // experiments sweep ({1,2,4,8,16}); an explicit empty list means full
        // integer enumeration up to m_max.
        std::vector<int> candidates;
        bool candidates_set = false;
        std::string objective = "diminishing"; // or full-bound
    } select;

    struct Bound {
        double mu = 1.0;
        double lipschitz = 1.0;
        double sigma_bound_sq = -1.0; // <0 = measure empirically (bound-validate)
        double r0_sq = -1.0;          // <0 = measure empirically
        int dim = 8;
        int rounds = 50;
        std::string beta = "auto"; // "auto" = half the admissible supremum
    } bound;
};

ExperimentConfig load_config(const std::string& path);
void validate_config(const ExperimentConfig& cfg);

// Canonical serialization; its FNV-1a hash goes into every CSV header.
std::string canonical_config(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

// ---- experiment results (CSV plus the numbers the tests assert on) ----

struct MseCell {
    double noise_variance = 0.0;
    int num_retx = 1;
    double mse_empirical = 0.0;
    double mse_analytic = 0.0; // averaged over channel draws
};

struct MseSweepResult {
    std::vector<MseCell> cells;
    std::string csv;
};

struct BaselineCell {
    double noise_variance = 0.0;
    int num_retx = 1;
    double aware_empirical = 0.0;
    double aware_analytic = 0.0;
    double unaware_empirical = 0.0;
    double unaware_analytic = 0.0;
};

struct BaselineCompareResult {
    std::vector<BaselineCell> cells;
    std::string csv;
};

struct TrainResult {
    // traces[m_index][trial]: every per-seed trace
    std::vector<std::vector<TrainingTrace>> traces;
    std::vector<int> m_list;
    std::string csv;
};

struct SelectMResult {
    SelectionResult selection;
    std::string csv;
};

struct SigmaSweepResult {
    std::vector<SigmaSweepPoint> points;
    std::string csv;
};

struct BoundValidateResult {
    std::vector<double> gap_mean;    // per round, over seeds
    std::vector<double> gap_stderr;
    std::vector<double> bound_strong;
    std::vector<double> bound_convex;
    double c1 = 0.0, c2 = 0.0, c3 = 0.0, beta = 0.0;
    double sigma_bound_sq = 0.0, r0_sq = 0.0;
    std::string csv;
};

MseSweepResult run_mse_sweep(const ExperimentConfig& cfg);
BaselineCompareResult run_baseline_compare(const ExperimentConfig& cfg);
TrainResult run_train(const ExperimentConfig& cfg);
SelectMResult run_select_m(const ExperimentConfig& cfg);
SigmaSweepResult run_sigma_sweep(const ExperimentConfig& cfg);
BoundValidateResult run_bound_validate(const ExperimentConfig& cfg);

// Dispatches on cfg.experiment, writes the CSV to cfg.out (or stdout when
// empty), returns the CSV text.
std::string run_experiment(const ExperimentConfig& cfg);

// Deterministic fan-out: trial i always computes with the same derived seed
// regardless of worker count; reduction happens in trial order.
void parallel_trials(int num_trials, int workers, const std::function<void(int)>& body);

// Classification set for training commands: real IDX files when configured,
// otherwise a seeded synthetic corpus written through the IDX format so the
// loader path is always exercised.
struct ClassificationData {
    Dataset train;
    Dataset test;
    bool synthetic = false;
};
ClassificationData load_classification_data(const ExperimentConfig& cfg);

} // namespace airrecomp
