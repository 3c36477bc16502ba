#include "airrecomp/harness.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "airrecomp/bounds.hpp"
#include "airrecomp/csv.hpp"
#include "airrecomp/errors.hpp"
#include "airrecomp/powerctl.hpp"

namespace airrecomp {

namespace {

using nlohmann::json;

constexpr std::uint64_t kChanTrialStream = 0x11c4;
constexpr std::uint64_t kDataTrialStream = 0x11da;
constexpr std::uint64_t kNoiseTrialStream = 0x1140;
constexpr std::uint64_t kPartitionStream = 0x9a27;
constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kRunStream = 0x5eed;
constexpr std::uint64_t kInstanceStream = 0xab1e;
constexpr std::uint64_t kFixedChannelStream = 0xface;
constexpr std::uint64_t kCorpusStream = 0xc0de;

void expect_keys(const json& obj, const char* section, std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw error(errc::config,
                        std::string("config: unknown key '") + key + "' in section " + section);
        }
    }
}

template <typename T>
void get_to(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) {
        obj.at(key).get_to(out);
    }
}

ExperimentConfig parse_config(const json& j);

} // namespace

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw error(errc::io, "cannot open config file " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw error(errc::config, std::string("config parse error: ") + e.what());
    }
    try {
        return parse_config(j);
    } catch (const json::exception& e) {
        throw error(errc::config, std::string("config field error: ") + e.what());
    }
}

namespace {

ExperimentConfig parse_config(const json& j) {
    expect_keys(j, "(top level)",
                {"experiment", "seed", "trials", "workers", "full_scale", "out", "channel",
                 "power", "train", "cost", "select", "bound"});
    ExperimentConfig cfg;
    get_to(j, "experiment", cfg.experiment);
    if (j.contains("seed")) {
        cfg.seed = j.at("seed").get<std::uint64_t>();
        cfg.seed_set = true;
    }
    get_to(j, "trials", cfg.trials);
    get_to(j, "workers", cfg.workers);
    get_to(j, "full_scale", cfg.full_scale);
    get_to(j, "out", cfg.out);
    if (j.contains("channel")) {
        const json& c = j.at("channel");
        expect_keys(c, "channel",
                    {"num_devices", "noise_variance", "noise_var_grid", "sigma_grid", "freeze"});
        get_to(c, "num_devices", cfg.channel.num_devices);
        get_to(c, "noise_variance", cfg.channel.noise_variance);
        get_to(c, "noise_var_grid", cfg.channel.noise_var_grid);
        get_to(c, "sigma_grid", cfg.channel.sigma_grid);
        get_to(c, "freeze", cfg.channel.freeze);
    }
    if (j.contains("power")) {
        const json& p = j.at("power");
        expect_keys(p, "power", {"p_max", "m_list"});
        get_to(p, "p_max", cfg.power.p_max);
        get_to(p, "m_list", cfg.power.m_list);
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        expect_keys(t, "train",
                    {"problem", "mnist_images", "mnist_labels", "mnist_test_images",
                     "mnist_test_labels", "samples_per_device", "test_samples", "step_size",
                     "epochs", "hidden", "quad_dim", "quad_spread", "synth_noise", "synth_classes",
                     "synth_feature_dim", "synth_class_sep", "synth_pixel_noise", "emit_per_seed"});
        get_to(t, "problem", cfg.train.problem);
        get_to(t, "mnist_images", cfg.train.mnist_images);
        get_to(t, "mnist_labels", cfg.train.mnist_labels);
        get_to(t, "mnist_test_images", cfg.train.mnist_test_images);
        get_to(t, "mnist_test_labels", cfg.train.mnist_test_labels);
        get_to(t, "samples_per_device", cfg.train.samples_per_device);
        get_to(t, "test_samples", cfg.train.test_samples);
        get_to(t, "step_size", cfg.train.step_size);
        get_to(t, "epochs", cfg.train.epochs);
        get_to(t, "hidden", cfg.train.hidden);
        get_to(t, "quad_dim", cfg.train.quad_dim);
        get_to(t, "quad_spread", cfg.train.quad_spread);
        get_to(t, "synth_noise", cfg.train.synth_noise);
        get_to(t, "synth_classes", cfg.train.synth_classes);
        get_to(t, "synth_feature_dim", cfg.train.synth_feature_dim);
        get_to(t, "synth_class_sep", cfg.train.synth_class_sep);
        get_to(t, "synth_pixel_noise", cfg.train.synth_pixel_noise);
        get_to(t, "emit_per_seed", cfg.train.emit_per_seed);
    }
    if (j.contains("cost")) {
        const json& c = j.at("cost");
        expect_keys(c, "cost", {"train_cost", "uplink_cost", "budget"});
        get_to(c, "train_cost", cfg.cost.train_cost);
        get_to(c, "uplink_cost", cfg.cost.uplink_cost);
        get_to(c, "budget", cfg.cost.budget);
    }
    if (j.contains("select")) {
        const json& s = j.at("select");
        expect_keys(s, "select", {"m_max", "num_draws", "candidates", "objective"});
        get_to(s, "m_max", cfg.select.m_max);
        get_to(s, "num_draws", cfg.select.num_draws);
        if (s.contains("candidates")) {
            cfg.select.candidates = s.at("candidates").get<std::vector<int>>();
            cfg.select.candidates_set = true;
        }
        get_to(s, "objective", cfg.select.objective);
    }
    if (j.contains("bound")) {
        const json& b = j.at("bound");
        expect_keys(b, "bound",
                    {"mu", "lipschitz", "sigma_bound_sq", "r0_sq", "dim", "rounds", "beta"});
        get_to(b, "mu", cfg.bound.mu);
        get_to(b, "lipschitz", cfg.bound.lipschitz);
        get_to(b, "sigma_bound_sq", cfg.bound.sigma_bound_sq);
        get_to(b, "r0_sq", cfg.bound.r0_sq);
        get_to(b, "dim", cfg.bound.dim);
        get_to(b, "rounds", cfg.bound.rounds);
        get_to(b, "beta", cfg.bound.beta);
    }
    return cfg;
}

} // namespace

void validate_config(const ExperimentConfig& cfg) {
    static const std::vector<std::string> kExperiments = {
        "mse-sweep", "baseline-compare", "train", "select-m", "sigma-sweep", "bound-validate"};
    bool known = false;
    for (const std::string& e : kExperiments) {
        if (cfg.experiment == e) {
            known = true;
            break;
        }
    }
    if (!known) {
        throw error(errc::config, "config: unknown experiment '" + cfg.experiment + "'");
    }
    if (!cfg.seed_set) {
        throw error(errc::config, "config: seed is mandatory (set it in the file or via --seed)");
    }
    if (cfg.channel.num_devices < 1) {
        throw error(errc::config, "config: channel.num_devices must be >= 1");
    }
    if (cfg.power.p_max <= 0.0) {
        throw error(errc::config, "config: power.p_max must be positive");
    }
    for (int m : cfg.power.m_list) {
        if (m < 1) {
            throw error(errc::config, "config: power.m_list entries must be >= 1");
        }
    }
    if (cfg.trials < 0) {
        throw error(errc::config, "config: trials must be nonnegative");
    }
    if (cfg.channel.noise_variance < 0.0) {
        throw error(errc::config, "config: channel.noise_variance must be >= 0");
    }
    if (cfg.train.step_size <= 0.0) {
        throw error(errc::config, "config: train.step_size must be positive");
    }
    if (cfg.train.epochs < 1) {
        throw error(errc::config, "config: train.epochs must be >= 1");
    }
    if (cfg.experiment == "train" || cfg.experiment == "select-m" ||
        cfg.experiment == "sigma-sweep") {
        if (cfg.cost.budget < cfg.cost.train_cost + cfg.cost.uplink_cost) {
            throw error(errc::config, "config: budget does not cover one round at M=1");
        }
        if (cfg.cost.uplink_cost <= 0.0) {
            throw error(errc::config, "config: cost.uplink_cost must be positive");
        }
        if (cfg.cost.train_cost < 0.0) {
            throw error(errc::config, "config: cost.train_cost must be >= 0");
        }
    }
    if (cfg.experiment == "train") {
        const std::string& p = cfg.train.problem;
        if (p != "mnist" && p != "synth-class" && p != "synth-reg" && p != "quadratic") {
            throw error(errc::config, "config: unknown train.problem '" + p + "'");
        }
        if (p == "mnist" && (cfg.train.mnist_images.empty() || cfg.train.mnist_labels.empty())) {
            throw error(errc::config, "config: mnist problem needs image and label paths");
        }
    }
}

std::string canonical_config(const ExperimentConfig& cfg) {
    json j;
    j["experiment"] = cfg.experiment;
    j["seed"] = cfg.seed;
    j["trials"] = cfg.trials;
    j["full_scale"] = cfg.full_scale;
    j["channel"] = {{"num_devices", cfg.channel.num_devices},
                    {"noise_variance", cfg.channel.noise_variance},
                    {"noise_var_grid", cfg.channel.noise_var_grid},
                    {"sigma_grid", cfg.channel.sigma_grid},
                    {"freeze", cfg.channel.freeze}};
    j["power"] = {{"p_max", cfg.power.p_max}, {"m_list", cfg.power.m_list}};
    j["train"] = {{"problem", cfg.train.problem},
                  {"mnist_images", cfg.train.mnist_images},
                  {"mnist_labels", cfg.train.mnist_labels},
                  {"mnist_test_images", cfg.train.mnist_test_images},
                  {"mnist_test_labels", cfg.train.mnist_test_labels},
                  {"samples_per_device", cfg.train.samples_per_device},
                  {"test_samples", cfg.train.test_samples},
                  {"step_size", cfg.train.step_size},
                  {"epochs", cfg.train.epochs},
                  {"hidden", cfg.train.hidden},
                  {"quad_dim", cfg.train.quad_dim},
                  {"quad_spread", cfg.train.quad_spread},
                  {"synth_noise", cfg.train.synth_noise},
                  {"synth_classes", cfg.train.synth_classes},
                  {"synth_feature_dim", cfg.train.synth_feature_dim},
                  {"synth_class_sep", cfg.train.synth_class_sep},
                  {"synth_pixel_noise", cfg.train.synth_pixel_noise}};
    j["cost"] = {{"train_cost", cfg.cost.train_cost},
                 {"uplink_cost", cfg.cost.uplink_cost},
                 {"budget", cfg.cost.budget}};
    j["select"] = {{"m_max", cfg.select.m_max},
                   {"num_draws", cfg.select.num_draws},
                   {"candidates", cfg.select.candidates},
                   {"objective", cfg.select.objective}};
    j["bound"] = {{"mu", cfg.bound.mu},
                  {"lipschitz", cfg.bound.lipschitz},
                  {"sigma_bound_sq", cfg.bound.sigma_bound_sq},
                  {"r0_sq", cfg.bound.r0_sq},
                  {"dim", cfg.bound.dim},
                  {"rounds", cfg.bound.rounds},
                  {"beta", cfg.bound.beta}};
    return j.dump();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    return fnv1a64(canonical_config(cfg));
}

void parallel_trials(int num_trials, int workers, const std::function<void(int)>& body) {
    int n_workers = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
    n_workers = std::max(1, std::min(n_workers, num_trials));
    if (n_workers == 1) {
        for (int t = 0; t < num_trials; ++t) {
            body(t);
        }
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex error_mutex;
    for (int w = 0; w < n_workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int t = next.fetch_add(1);
                if (t >= num_trials || failed.load()) {
                    return;
                }
                try {
                    body(t);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!failed.exchange(true)) {
                        first_error = e.what();
                    }
                    return;
                }
            }
        });
    }
    for (std::thread& th : pool) {
        th.join();
    }
    if (failed.load()) {
        throw error(errc::numeric, "trial worker failed: " + first_error);
    }
}

namespace {

std::string csv_preamble(const ExperimentConfig& cfg) {
    return "airrecomp " + cfg.experiment + " config=" + hash_hex(config_hash(cfg)) +
           " seed=" + std::to_string(cfg.seed) +
           " units: sigma_z stddev, mse per-element squared error, cost abstract units";
}

std::vector<double> default_noise_var_grid() {
    std::vector<double> grid;
    for (int i = 1; i <= 10; ++i) {
        grid.push_back(0.5 * i); // sigma_z^2 in [0.5, 5]
    }
    return grid;
}

int effective_trials(const ExperimentConfig& cfg, int dflt) {
    return cfg.trials > 0 ? cfg.trials : dflt;
}

// Default candidate set for the selection experiments: the retransmission
// counts the training sweeps actually run. An explicit empty list in the
// config requests full integer enumeration instead.
std::vector<int> selection_candidates(const ExperimentConfig& cfg) {
    if (cfg.select.candidates_set) {
        return cfg.select.candidates;
    }
    return {1, 2, 4, 8, 16};
}

// Squared estimation error of one transmission experiment cell, maximally
// paired: the channel and the unit-normal data are shared across cells, and
// the summed noise of M transmissions is drawn as a single Gaussian.
struct CellDraw {
    double err_sq = 0.0;
    double analytic = 0.0;
};

CellDraw scalar_cell(const ChannelRealization& chan, const std::vector<double>& symbols,
                     const PowerPolicy& policy, double noise_sum) {
    const int k_devices = chan.num_devices;
    const double sqrt_eta = std::sqrt(policy.eta);
    double err = 0.0;
    for (int k = 0; k < k_devices; ++k) {
        err += (std::sqrt(policy.powers[k]) * chan.gains[k] / sqrt_eta - 1.0) * symbols[k];
    }
    err /= k_devices;
    err += noise_sum / (policy.num_retx * sqrt_eta * k_devices);
    CellDraw out;
    out.err_sq = err * err;
    out.analytic = analytic_mse(policy, chan);
    return out;
}

} // namespace

MseSweepResult run_mse_sweep(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const std::vector<double> grid =
        cfg.channel.noise_var_grid.empty() ? default_noise_var_grid() : cfg.channel.noise_var_grid;
    const std::vector<int>& m_list = cfg.power.m_list;
    if (grid.empty() || m_list.empty()) {
        throw error(errc::config, "mse-sweep: noise grid and m_list must be nonempty");
    }
    const int trials = effective_trials(cfg, 20000);
    const int k_devices = cfg.channel.num_devices;
    const std::size_t n_cells = grid.size() * m_list.size();

    std::vector<double> emp(n_cells * trials), ana(n_cells * trials);
    parallel_trials(trials, cfg.workers, [&](int t) {
        Rng chan_rng(derive_seed(cfg.seed, {kChanTrialStream, static_cast<std::uint64_t>(t)}));
        Rng data_rng(derive_seed(cfg.seed, {kDataTrialStream, static_cast<std::uint64_t>(t)}));
        ChannelRealization chan = draw_channel(k_devices, chan_rng, 0.0);
        std::vector<double> symbols(k_devices);
        for (double& s : symbols) {
            s = data_rng.normal();
        }
        std::size_t cell = 0;
        for (std::size_t vi = 0; vi < grid.size(); ++vi) {
            chan.noise_variance = grid[vi];
            for (std::size_t mi = 0; mi < m_list.size(); ++mi, ++cell) {
                const int m = m_list[mi];
                Rng noise_rng(derive_seed(
                    cfg.seed, {kNoiseTrialStream, static_cast<std::uint64_t>(t), cell}));
                const PowerPolicy policy = solve_power_control(chan, cfg.power.p_max, m);
                const double noise_sum = noise_rng.normal(0.0, std::sqrt(m * grid[vi]));
                const CellDraw d = scalar_cell(chan, symbols, policy, noise_sum);
                emp[cell * trials + t] = d.err_sq;
                ana[cell * trials + t] = d.analytic;
            }
        }
    });

    MseSweepResult result;
    CsvBuilder csv;
    csv.comment(csv_preamble(cfg));
    csv.field("sigma_z_sq").field("sigma_z").field("m").field("mse_empirical").field("mse_analytic").field("trials");
    csv.end_row();
    std::size_t cell = 0;
    for (std::size_t vi = 0; vi < grid.size(); ++vi) {
        for (std::size_t mi = 0; mi < m_list.size(); ++mi, ++cell) {
            double e = 0.0, a = 0.0;
            for (int t = 0; t < trials; ++t) {
                e += emp[cell * trials + t];
                a += ana[cell * trials + t];
            }
            MseCell out;
            out.noise_variance = grid[vi];
            out.num_retx = m_list[mi];
            out.mse_empirical = e / trials;
            out.mse_analytic = a / trials;
            result.cells.push_back(out);
            csv.field(out.noise_variance)
                .field(std::sqrt(out.noise_variance))
                .field(out.num_retx)
                .field(out.mse_empirical)
                .field(out.mse_analytic)
                .field(trials);
            csv.end_row();
        }
    }
    result.csv = csv.str();
    return result;
}

BaselineCompareResult run_baseline_compare(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const std::vector<double> grid =
        cfg.channel.noise_var_grid.empty() ? default_noise_var_grid() : cfg.channel.noise_var_grid;
    const std::vector<int>& m_list = cfg.power.m_list;
    const int trials = effective_trials(cfg, 20000);
    const int k_devices = cfg.channel.num_devices;
    const std::size_t n_cells = grid.size() * m_list.size();

    struct Acc {
        double aw_e, aw_a, un_e, un_a;
    };
    std::vector<Acc> per_trial(n_cells * trials);
    parallel_trials(trials, cfg.workers, [&](int t) {
        Rng chan_rng(derive_seed(cfg.seed, {kChanTrialStream, static_cast<std::uint64_t>(t)}));
        Rng data_rng(derive_seed(cfg.seed, {kDataTrialStream, static_cast<std::uint64_t>(t)}));
        ChannelRealization chan = draw_channel(k_devices, chan_rng, 0.0);
        std::vector<double> symbols(k_devices);
        for (double& s : symbols) {
            s = data_rng.normal();
        }
        std::size_t cell = 0;
        for (std::size_t vi = 0; vi < grid.size(); ++vi) {
            chan.noise_variance = grid[vi];
            for (std::size_t mi = 0; mi < m_list.size(); ++mi, ++cell) {
                const int m = m_list[mi];
                Rng noise_rng(derive_seed(
                    cfg.seed, {kNoiseTrialStream, static_cast<std::uint64_t>(t), cell}));
                const double noise_sum = noise_rng.normal(0.0, std::sqrt(m * grid[vi]));
                const PowerPolicy aware = solve_power_control(chan, cfg.power.p_max, m);
                const PowerPolicy unaware = solve_power_control_unaware(chan, cfg.power.p_max, m);
                const CellDraw da = scalar_cell(chan, symbols, aware, noise_sum);
                const CellDraw du = scalar_cell(chan, symbols, unaware, noise_sum);
                per_trial[cell * trials + t] = {da.err_sq, da.analytic, du.err_sq, du.analytic};
            }
        }
    });

    BaselineCompareResult result;
    CsvBuilder csv;
    csv.comment(csv_preamble(cfg));
    csv.field("sigma_z_sq").field("sigma_z").field("m")
        .field("mse_aware_empirical").field("mse_aware_analytic")
        .field("mse_unaware_empirical").field("mse_unaware_analytic").field("trials");
    csv.end_row();
    std::size_t cell = 0;
    for (std::size_t vi = 0; vi < grid.size(); ++vi) {
        for (std::size_t mi = 0; mi < m_list.size(); ++mi, ++cell) {
            BaselineCell out;
            out.noise_variance = grid[vi];
            out.num_retx = m_list[mi];
            for (int t = 0; t < trials; ++t) {
                const Acc& a = per_trial[cell * trials + t];
                out.aware_empirical += a.aw_e;
                out.aware_analytic += a.aw_a;
                out.unaware_empirical += a.un_e;
                out.unaware_analytic += a.un_a;
            }
            out.aware_empirical /= trials;
            out.aware_analytic /= trials;
            out.unaware_empirical /= trials;
            out.unaware_analytic /= trials;
            result.cells.push_back(out);
            csv.field(out.noise_variance)
                .field(std::sqrt(out.noise_variance))
                .field(out.num_retx)
                .field(out.aware_empirical)
                .field(out.aware_analytic)
                .field(out.unaware_empirical)
                .field(out.unaware_analytic)
                .field(trials);
            csv.end_row();
        }
    }
    result.csv = csv.str();
    return result;
}

namespace {

Dataset slice_dataset(const Dataset& src, int start, int count) {
    Dataset out;
    out.task = src.task;
    out.num_samples = count;
    out.feature_dim = src.feature_dim;
    out.features.assign(src.features.begin() + std::size_t(start) * src.feature_dim,
                        src.features.begin() + std::size_t(start + count) * src.feature_dim);
    if (!src.labels.empty()) {
        out.labels.assign(src.labels.begin() + start, src.labels.begin() + start + count);
    }
    if (!src.targets.empty()) {
        out.targets.assign(src.targets.begin() + start, src.targets.begin() + start + count);
    }
    return out;
}

} // namespace

ClassificationData load_classification_data(const ExperimentConfig& cfg) {
    ClassificationData out;
    const int per_device = cfg.full_scale ? 6000 : cfg.train.samples_per_device;
    const int train_n = per_device * cfg.channel.num_devices;
    const int test_n = cfg.train.test_samples;
    if (cfg.train.problem == "mnist") {
        Dataset train_full = load_mnist_idx(cfg.train.mnist_images, cfg.train.mnist_labels);
        if (train_full.num_samples < train_n) {
            throw error(errc::config, "mnist training set smaller than requested shard total");
        }
        out.train = slice_dataset(train_full, 0, train_n);
        if (!cfg.train.mnist_test_images.empty()) {
            Dataset test_full =
                load_mnist_idx(cfg.train.mnist_test_images, cfg.train.mnist_test_labels);
            out.test = slice_dataset(test_full, 0, std::min(test_n, test_full.num_samples));
        } else {
            out.test = slice_dataset(train_full, train_n,
                                     std::min(test_n, train_full.num_samples - train_n));
        }
        return out;
    }
    // Seeded synthetic corpus, one draw for train and test together.
    Rng rng(derive_seed(cfg.seed, {kCorpusStream}));
    Dataset all = synth_classification(train_n + test_n, cfg.train.synth_classes,
                                       cfg.train.synth_feature_dim, cfg.train.synth_class_sep,
                                       cfg.train.synth_pixel_noise, rng);
    out.train = slice_dataset(all, 0, train_n);
    out.test = slice_dataset(all, train_n, test_n);
    out.synthetic = true;
    return out;
}

TrainResult run_train(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const int trials = effective_trials(cfg, cfg.full_scale ? 50 : 20);
    const std::vector<int>& m_list = cfg.power.m_list;
    TrainResult result;
    result.m_list = m_list;
    result.traces.assign(m_list.size(), std::vector<TrainingTrace>(trials));

    const bool is_quad = cfg.train.problem == "quadratic";
    const bool is_reg = cfg.train.problem == "synth-reg";

    Dataset train_set, test_set;
    if (!is_quad) {
        if (is_reg) {
            const int per_device = cfg.full_scale ? 2500 : cfg.train.samples_per_device;
            const int train_n = per_device * cfg.channel.num_devices;
            const int test_n = cfg.train.test_samples;
            Rng rng(derive_seed(cfg.seed, {kCorpusStream}));
            Dataset all = synth_regression(train_n + test_n, cfg.train.synth_noise, rng);
            train_set = slice_dataset(all, 0, train_n);
            test_set = slice_dataset(all, train_n, test_n);
        } else {
            ClassificationData data = load_classification_data(cfg);
            train_set = std::move(data.train);
            test_set = std::move(data.test);
        }
    }

    MlpSpec spec;
    if (!is_quad) {
        spec.input = train_set.feature_dim;
        spec.hidden = cfg.train.hidden;
        spec.output = is_reg ? 1 : cfg.train.synth_classes;
        spec.head = is_reg ? HeadKind::linear_mse : HeadKind::softmax_cross_entropy;
        if (cfg.train.problem == "mnist") {
            spec.output = 10;
        }
    }

    const int jobs = static_cast<int>(m_list.size()) * trials;
    parallel_trials(jobs, cfg.workers, [&](int job) {
        const int mi = job / trials;
        const int t = job % trials;
        FlConfig run;
        run.num_retx = m_list[mi];
        run.p_max = cfg.power.p_max;
        run.noise_variance = cfg.channel.noise_variance;
        run.step_size = cfg.train.step_size;
        run.epochs = cfg.train.epochs;
        run.cost = cfg.cost;
        run.normalize_updates = true;
        run.freeze_channel = cfg.channel.freeze;
        run.seed = derive_seed(cfg.seed, {kRunStream, static_cast<std::uint64_t>(t)});

        std::vector<LocalProblem> devices;
        GlobalModel init;
        EvalSpec eval;
        if (is_quad) {
            Rng inst_rng(derive_seed(cfg.seed, {kInstanceStream, static_cast<std::uint64_t>(t)}));
            QuadraticProblem prob = make_quadratic_problem(cfg.channel.num_devices,
                                                           cfg.train.quad_dim,
                                                           cfg.train.quad_spread, inst_rng);
            devices.resize(prob.num_devices);
            for (int k = 0; k < prob.num_devices; ++k) {
                devices[k].kind = ProblemKind::quadratic;
                devices[k].quad_target = prob.targets[k];
                devices[k].epochs = cfg.train.epochs;
                devices[k].step_size = cfg.train.step_size;
                devices[k].device_id = k;
            }
            Rng init_rng(derive_seed(cfg.seed, {kInitStream, static_cast<std::uint64_t>(t)}));
            init.weights.resize(prob.dim);
            for (double& w : init.weights) {
                w = 2.0 * init_rng.normal();
            }
            eval.kind = EvalKind::loss_gap;
            eval.f_star = prob.f_star;
        } else {
            Rng part_rng(derive_seed(cfg.seed, {kPartitionStream, static_cast<std::uint64_t>(t)}));
            std::vector<Shard> shards =
                partition(train_set, cfg.channel.num_devices, PartitionScheme::iid_equal, part_rng);
            devices.resize(shards.size());
            for (std::size_t k = 0; k < shards.size(); ++k) {
                devices[k].kind = ProblemKind::mlp;
                devices[k].spec = spec;
                devices[k].shard = std::move(shards[k]);
                devices[k].epochs = cfg.train.epochs;
                devices[k].step_size = cfg.train.step_size;
                devices[k].device_id = static_cast<int>(k);
            }
            Rng init_rng(derive_seed(cfg.seed, {kInitStream, static_cast<std::uint64_t>(t)}));
            init.weights = init_mlp_weights(spec, init_rng);
            eval.kind = is_reg ? EvalKind::nmse : EvalKind::accuracy;
            eval.test = &test_set;
            eval.spec = spec;
        }
        result.traces[mi][t] = run_airrecomp(devices, init, eval, run);
    });

    CsvBuilder csv;
    csv.comment(csv_preamble(cfg));
    csv.field("round").field("loss").field("metric").field("cum_cost").field("m").field("eta").field("seed");
    csv.end_row();
    for (std::size_t mi = 0; mi < m_list.size(); ++mi) {
        const std::vector<TrainingTrace>& ts = result.traces[mi];
        const std::size_t rounds = ts.front().rows.size();
        for (std::size_t r = 0; r < rounds; ++r) {
            double loss = 0.0, metric = 0.0, eta = 0.0;
            for (const TrainingTrace& tr : ts) {
                loss += tr.rows[r].loss;
                metric += tr.rows[r].metric;
                eta += tr.rows[r].eta;
            }
            csv.field(static_cast<int>(r + 1))
                .field(loss / trials)
                .field(metric / trials)
                .field(ts.front().rows[r].cum_cost)
                .field(m_list[mi])
                .field(eta / trials)
                .field(cfg.seed);
            csv.end_row();
        }
        if (cfg.train.emit_per_seed) {
            for (const TrainingTrace& tr : ts) {
                for (const TraceRow& row : tr.rows) {
                    csv.field(row.round).field(row.loss).field(row.metric).field(row.cum_cost)
                        .field(row.num_retx).field(row.eta).field(row.seed);
                    csv.end_row();
                }
            }
        }
    }
    result.csv = csv.str();
    return result;
}

SelectMResult run_select_m(const ExperimentConfig& cfg) {
    validate_config(cfg);
    SelectConfig sel;
    sel.num_devices = cfg.channel.num_devices;
    sel.p_max = cfg.power.p_max;
    sel.noise_variance = cfg.channel.noise_variance;
    sel.step_size = cfg.train.step_size;
    sel.m_max = cfg.select.m_max;
    sel.candidates = selection_candidates(cfg);
    sel.num_draws = cfg.select.num_draws;
    sel.seed = cfg.seed;

    SelectMResult result;
    CsvBuilder csv;
    csv.comment(csv_preamble(cfg));
    if (cfg.select.objective == "full-bound") {
        Rng chan_rng(derive_seed(cfg.seed, {kFixedChannelStream}));
        BoundParams base;
        base.mu = cfg.bound.mu;
        base.lipschitz = cfg.bound.lipschitz;
        base.beta = cfg.train.step_size;
        base.sigma_bound_sq = std::max(0.0, cfg.bound.sigma_bound_sq);
        base.dim = cfg.bound.dim;
        base.r0_sq = std::max(0.0, cfg.bound.r0_sq);
        base.chan = draw_channel(sel.num_devices, chan_rng, sel.noise_variance);
        const Convexity kind =
            cfg.bound.mu > 0.0 ? Convexity::strongly_convex : Convexity::convex;
        result.selection = select_m_full_bound(cfg.cost, base, kind, sel);

        csv.field("m").field("n").field("c1").field("c2").field("c3")
            .field("diminishing").field("post_convergence").field("total").field("selected");
        csv.end_row();
        for (const auto& [m, value] : result.selection.objectives) {
            BoundParams params = base;
            params.policy = solve_power_control(base.chan, sel.p_max, m);
            const int n = rounds_for(cfg.cost, m);
            const double c1 = compute_c1(params.policy, params.chan);
            const double c2 = kind == Convexity::strongly_convex
                                  ? compute_c2(params)
                                  : std::numeric_limits<double>::quiet_NaN();
            const double c3 = compute_c3(params);
            double dim_term = std::numeric_limits<double>::quiet_NaN();
            double post_term = std::numeric_limits<double>::quiet_NaN();
            if (std::isfinite(value)) {
                const BoundSplit split = loss_gap_bound(params, n, kind);
                dim_term = split.diminishing;
                post_term = split.post_convergence;
            }
            csv.field(m).field(n).field(c1).field(c2).field(c3)
                .field(dim_term).field(post_term).field(value)
                .field(m == result.selection.m_star ? 1 : 0);
            csv.end_row();
        }
    } else if (cfg.select.objective == "diminishing") {
        result.selection = select_m_diminishing(cfg.cost, sel);
        csv.field("m").field("n").field("objective").field("selected");
        csv.end_row();
        for (const auto& [m, value] : result.selection.objectives) {
            csv.field(m).field(rounds_for(cfg.cost, m)).field(value)
                .field(m == result.selection.m_star ? 1 : 0);
            csv.end_row();
        }
    } else {
        throw error(errc::config, "select-m: unknown objective '" + cfg.select.objective + "'");
    }
    result.csv = csv.str();
    return result;
}

SigmaSweepResult run_sigma_sweep(const ExperimentConfig& cfg) {
    validate_config(cfg);
    std::vector<double> grid = cfg.channel.sigma_grid;
    if (grid.empty()) {
        for (int i = 0; i <= 100; ++i) {
            grid.push_back(i / 10.0);
        }
    }
    SelectConfig sel;
    sel.num_devices = cfg.channel.num_devices;
    sel.p_max = cfg.power.p_max;
    sel.step_size = cfg.train.step_size;
    sel.m_max = cfg.select.m_max;
    sel.candidates = selection_candidates(cfg);
    sel.num_draws = cfg.select.num_draws;
    sel.seed = cfg.seed;

    SigmaSweepResult result;
    result.points = sweep_sigma(cfg.cost, sel, grid);

    CsvBuilder csv;
    csv.comment(csv_preamble(cfg));
    csv.field("sigma_z").field("m_star");
    for (const auto& [m, value] : result.points.front().objectives) {
        csv.field("objective_m" + std::to_string(m));
    }
    csv.end_row();
    for (const SigmaSweepPoint& p : result.points) {
        csv.field(p.sigma_z).field(p.m_star);
        for (const auto& [m, value] : p.objectives) {
            csv.field(value);
        }
        csv.end_row();
    }
    result.csv = csv.str();
    return result;
}

BoundValidateResult run_bound_validate(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const int trials = effective_trials(cfg, 200);
    const int rounds = cfg.bound.rounds;
    const int k_devices = cfg.channel.num_devices;
    const int dim = cfg.bound.dim;
    const int m = cfg.power.m_list.empty() ? 1 : cfg.power.m_list.front();

    // One fixed fading realization across all seeds, so the bound constants
    // are the constants of the runs being validated.
    Rng chan_rng(derive_seed(cfg.seed, {kFixedChannelStream}));
    const ChannelRealization chan =
        draw_channel(k_devices, chan_rng, cfg.channel.noise_variance);
    const PowerPolicy policy = solve_power_control(chan, cfg.power.p_max, m);

    BoundParams params;
    params.mu = cfg.bound.mu;
    params.lipschitz = cfg.bound.lipschitz;
    params.dim = dim;
    params.policy = policy;
    params.chan = chan;

    double beta;
    if (cfg.bound.beta == "auto") {
        params.beta = 1.0; // placeholder for the admissibility probes below
        const double sup_strong = check_step_size(params, Convexity::strongly_convex).supremum;
        const double sup_convex = check_step_size(params, Convexity::convex).supremum;
        beta = 0.5 * std::min(sup_strong, sup_convex);
    } else {
        try {
            beta = std::stod(cfg.bound.beta);
        } catch (const std::exception&) {
            throw error(errc::config, "bound.beta must be 'auto' or a number");
        }
    }
    params.beta = beta;

    std::vector<std::vector<double>> gaps(trials); // per trial, rounds+1 entries
    std::vector<double> r0(trials, 0.0);
    // per trial, per round: sum_i mean_k (local - global update)^2
    std::vector<std::vector<double>> dev(trials);

    parallel_trials(trials, cfg.workers, [&](int t) {
        Rng inst_rng(derive_seed(cfg.seed, {kInstanceStream, static_cast<std::uint64_t>(t)}));
        QuadraticProblem prob =
            make_quadratic_problem(k_devices, dim, cfg.train.quad_spread, inst_rng);
        std::vector<LocalProblem> devices(k_devices);
        for (int k = 0; k < k_devices; ++k) {
            devices[k].kind = ProblemKind::quadratic;
            devices[k].quad_target = prob.targets[k];
            devices[k].epochs = 1;
            devices[k].step_size = beta;
            devices[k].device_id = k;
        }
        Rng init_rng(derive_seed(cfg.seed, {kInitStream, static_cast<std::uint64_t>(t)}));
        GlobalModel init;
        init.weights.resize(dim);
        for (double& w : init.weights) {
            w = 2.0 * init_rng.normal();
        }
        double r0_sq = 0.0;
        for (int i = 0; i < dim; ++i) {
            const double d = init.weights[i] - prob.w_star[i];
            r0_sq += d * d;
        }
        r0[t] = r0_sq;

        gaps[t].reserve(rounds + 1);
        dev[t].assign(rounds, 0.0);
        const auto gap_of = [&](std::span<const double> w) {
            double acc = 0.0;
            for (int i = 0; i < dim; ++i) {
                const double d = w[i] - prob.w_star[i];
                acc += d * d;
            }
            return 0.5 * acc; // F(w) - F(W*) for the quadratic family
        };

        FlConfig run;
        run.num_retx = m;
        run.p_max = cfg.power.p_max;
        run.noise_variance = cfg.channel.noise_variance;
        run.step_size = beta;
        run.epochs = 1;
        run.cost = CostModel{0.0, 1.0, 0.0}; // no budget; bounded by max_rounds
        run.max_rounds = rounds;
        run.normalize_updates = false;
        run.channel = &chan;
        run.seed = derive_seed(cfg.seed, {kRunStream, static_cast<std::uint64_t>(t)});

        const RoundObserver observer = [&](const RoundObservation& obs) {
            gaps[t].push_back(gap_of(obs.weights_before));
            // coordinate deviations of local updates around their mean
            double total = 0.0;
            for (int i = 0; i < dim; ++i) {
                double mean = 0.0;
                for (const ModelUpdate& u : obs.local_updates) {
                    mean += u.values[i];
                }
                mean /= k_devices;
                double acc = 0.0;
                for (const ModelUpdate& u : obs.local_updates) {
                    const double d = u.values[i] - mean;
                    acc += d * d;
                }
                total += acc / k_devices;
            }
            dev[t][obs.round] = total;
        };

        TrainingTrace trace = run_airrecomp(devices, init, EvalSpec{}, run, observer);
        gaps[t].push_back(gap_of(trace.final_weights));
    });

    BoundValidateResult result;
    result.beta = beta;
    double r0_mean = 0.0;
    for (double v : r0) {
        r0_mean += v;
    }
    r0_mean /= trials;
    double sigma_sq = 0.0;
    for (int n = 0; n < rounds; ++n) {
        double mean = 0.0;
        for (int t = 0; t < trials; ++t) {
            mean += dev[t][n];
        }
        sigma_sq = std::max(sigma_sq, mean / trials);
    }
    params.r0_sq = cfg.bound.r0_sq >= 0.0 ? cfg.bound.r0_sq : r0_mean;
    params.sigma_bound_sq =
        cfg.bound.sigma_bound_sq >= 0.0 ? cfg.bound.sigma_bound_sq : sigma_sq;
    result.r0_sq = params.r0_sq;
    result.sigma_bound_sq = params.sigma_bound_sq;
    result.c1 = compute_c1(policy, chan);
    result.c2 = compute_c2(params);
    result.c3 = compute_c3(params);

    result.gap_mean.resize(rounds + 1);
    result.gap_stderr.resize(rounds + 1);
    for (int n = 0; n <= rounds; ++n) {
        double mean = 0.0;
        for (int t = 0; t < trials; ++t) {
            mean += gaps[t][n];
        }
        mean /= trials;
        double var = 0.0;
        for (int t = 0; t < trials; ++t) {
            var += (gaps[t][n] - mean) * (gaps[t][n] - mean);
        }
        var = trials > 1 ? var / (trials - 1) : 0.0;
        result.gap_mean[n] = mean;
        result.gap_stderr[n] = std::sqrt(var / trials);
    }
    result.bound_strong.resize(rounds + 1, std::numeric_limits<double>::quiet_NaN());
    result.bound_convex.resize(rounds + 1, std::numeric_limits<double>::quiet_NaN());
    for (int n = 1; n <= rounds; ++n) {
        result.bound_strong[n] = loss_gap_bound(params, n, Convexity::strongly_convex).total();
        result.bound_convex[n] = loss_gap_bound(params, n, Convexity::convex).total();
    }

    CsvBuilder csv;
    csv.comment(csv_preamble(cfg));
    csv.comment("constants: c1=" + format_number(result.c1) + " c2=" + format_number(result.c2) +
                " c3=" + format_number(result.c3) + " beta=" + format_number(beta) +
                " sigma_bound_sq=" + format_number(result.sigma_bound_sq) +
                " r0_sq=" + format_number(result.r0_sq) + " m=" + std::to_string(m));
    csv.field("round").field("gap_mean").field("gap_stderr")
        .field("bound_strongly_convex").field("bound_convex");
    csv.end_row();
    for (int n = 0; n <= rounds; ++n) {
        csv.field(n).field(result.gap_mean[n]).field(result.gap_stderr[n])
            .field(result.bound_strong[n]).field(result.bound_convex[n]);
        csv.end_row();
    }
    result.csv = csv.str();
    return result;
}

std::string run_experiment(const ExperimentConfig& cfg) {
    std::string csv;
    if (cfg.experiment == "mse-sweep") {
        csv = run_mse_sweep(cfg).csv;
    } else if (cfg.experiment == "baseline-compare") {
        csv = run_baseline_compare(cfg).csv;
    } else if (cfg.experiment == "train") {
        csv = run_train(cfg).csv;
    } else if (cfg.experiment == "select-m") {
        csv = run_select_m(cfg).csv;
    } else if (cfg.experiment == "sigma-sweep") {
        csv = run_sigma_sweep(cfg).csv;
    } else if (cfg.experiment == "bound-validate") {
        csv = run_bound_validate(cfg).csv;
    } else {
        throw error(errc::config, "unknown experiment '" + cfg.experiment + "'");
    }
    if (!cfg.out.empty()) {
        std::ofstream out(cfg.out, std::ios::binary);
        if (!out) {
            throw error(errc::io, "cannot write output file " + cfg.out);
        }
        out << csv;
    } else {
        std::cout << csv;
    }
    return csv;
}

} // namespace airrecomp
