#include "airrecomp/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "airrecomp/errors.hpp"

namespace airrecomp {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(std::ifstream& in, const std::string& path, std::size_t offset) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) {
        throw error(errc::format, path + ": truncated header at byte " + std::to_string(offset));
    }
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

void write_be32(std::ofstream& out, std::uint32_t v) {
    unsigned char buf[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                            static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(buf), 4);
}

} // namespace

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) {
        throw error(errc::io, "cannot open images file " + images_path);
    }
    std::uint32_t magic = read_be32(img, images_path, 0);
    if (magic != kImageMagic) {
        throw error(errc::format, images_path + ": bad image magic at byte 0");
    }
    const std::uint32_t count = read_be32(img, images_path, 4);
    const std::uint32_t rows = read_be32(img, images_path, 8);
    const std::uint32_t cols = read_be32(img, images_path, 12);
    const std::size_t pixels_per_image = std::size_t(rows) * cols;

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) {
        throw error(errc::io, "cannot open labels file " + labels_path);
    }
    magic = read_be32(lab, labels_path, 0);
    if (magic != kLabelMagic) {
        throw error(errc::format, labels_path + ": bad label magic at byte 0");
    }
    const std::uint32_t label_count = read_be32(lab, labels_path, 4);
    if (label_count != count) {
        throw error(errc::format, labels_path + ": label count " + std::to_string(label_count) +
                                      " does not match image count " + std::to_string(count));
    }

    Dataset data;
    data.task = TaskKind::classification;
    data.num_samples = static_cast<int>(count);
    data.feature_dim = static_cast<int>(pixels_per_image);
    data.features.resize(std::size_t(count) * pixels_per_image);
    data.labels.resize(count);

    std::vector<unsigned char> buf(pixels_per_image);
    for (std::uint32_t i = 0; i < count; ++i) {
        img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!img) {
            throw error(errc::format, images_path + ": truncated image data at byte " +
                                          std::to_string(16 + std::size_t(i) * pixels_per_image));
        }
        double* out = data.features.data() + std::size_t(i) * pixels_per_image;
        for (std::size_t p = 0; p < pixels_per_image; ++p) {
            out[p] = buf[p] / 255.0;
        }
        unsigned char label = 0;
        lab.read(reinterpret_cast<char*>(&label), 1);
        if (!lab) {
            throw error(errc::format, labels_path + ": truncated label data at byte " +
                                          std::to_string(8 + std::size_t(i)));
        }
        if (label > 9) {
            throw error(errc::format, labels_path + ": label out of range at item " + std::to_string(i));
        }
        data.labels[i] = label;
    }
    return data;
}

void write_idx_images(const std::string& path, const std::vector<std::uint8_t>& pixels,
                      int count, int rows, int cols) {
    if (pixels.size() != std::size_t(count) * rows * cols) {
        throw error(errc::dimension, "write_idx_images: pixel buffer size mismatch");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw error(errc::io, "cannot write " + path);
    }
    write_be32(out, kImageMagic);
    write_be32(out, static_cast<std::uint32_t>(count));
    write_be32(out, static_cast<std::uint32_t>(rows));
    write_be32(out, static_cast<std::uint32_t>(cols));
    out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw error(errc::io, "cannot write " + path);
    }
    write_be32(out, kLabelMagic);
    write_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

Dataset synth_regression(int n, double noise, Rng& rng) {
    if (n < 1) {
        throw error(errc::dimension, "synth_regression: n must be >= 1");
    }
    constexpr int kFeatures = 5;
    Dataset data;
    data.task = TaskKind::regression;
    data.num_samples = n;
    data.feature_dim = kFeatures;
    data.features.resize(std::size_t(n) * kFeatures);
    data.targets.resize(n);
    for (int i = 0; i < n; ++i) {
        double* x = data.features.data() + std::size_t(i) * kFeatures;
        for (int j = 0; j < kFeatures; ++j) {
            x[j] = rng.normal();
        }
        // Smooth nonlinear response in all five standardized features.
        double y = 2.0 * x[0] + std::sin(1.5 * x[1]) + 0.8 * x[2] * x[3] +
                   0.5 * x[4] * x[4] + 0.3 * std::tanh(x[0] * x[2]);
        data.targets[i] = y + noise * rng.normal();
    }
    return data;
}

Dataset synth_classification(int n, int num_classes, int feature_dim, double class_sep,
                             double pixel_noise, Rng& rng) {
    if (n < 1 || num_classes < 2 || feature_dim < 1) {
        throw error(errc::dimension, "synth_classification: bad shape");
    }
    // Byte-quantized prototypes around mid-gray so samples survive an IDX
    // round trip unchanged in distribution.
    std::vector<double> prototypes(std::size_t(num_classes) * feature_dim);
    for (double& v : prototypes) {
        v = 0.5 + class_sep * rng.normal();
    }
    Dataset data;
    data.task = TaskKind::classification;
    data.num_samples = n;
    data.feature_dim = feature_dim;
    data.features.resize(std::size_t(n) * feature_dim);
    data.labels.resize(n);
    for (int i = 0; i < n; ++i) {
        const int c = rng.uniform_int(num_classes);
        data.labels[i] = c;
        const double* proto = prototypes.data() + std::size_t(c) * feature_dim;
        double* x = data.features.data() + std::size_t(i) * feature_dim;
        for (int j = 0; j < feature_dim; ++j) {
            double v = proto[j] + pixel_noise * rng.normal();
            v = std::clamp(v, 0.0, 1.0);
            x[j] = std::round(v * 255.0) / 255.0;
        }
    }
    return data;
}

std::vector<Shard> partition(const Dataset& data, int num_devices, PartitionScheme scheme, Rng& rng) {
    if (num_devices < 1) {
        throw error(errc::dimension, "partition: num_devices must be >= 1");
    }
    if (num_devices > data.num_samples) {
        throw error(errc::dimension, "partition: more devices than samples");
    }
    if (scheme != PartitionScheme::iid_equal) {
        throw error(errc::config, "partition: unknown scheme");
    }
    std::vector<int> order(data.num_samples);
    std::iota(order.begin(), order.end(), 0);
    // Fisher-Yates with the seeded generator.
    for (int i = data.num_samples - 1; i > 0; --i) {
        const int j = rng.uniform_int(i + 1);
        std::swap(order[i], order[j]);
    }
    const int base = data.num_samples / num_devices;
    const int extra = data.num_samples % num_devices;
    std::vector<Shard> shards(num_devices);
    int pos = 0;
    for (int k = 0; k < num_devices; ++k) {
        const int take = base + (k < extra ? 1 : 0);
        shards[k].data = &data;
        shards[k].device_id = k;
        shards[k].indices.assign(order.begin() + pos, order.begin() + pos + take);
        pos += take;
    }
    return shards;
}

QuadraticProblem quadratic_from_targets(std::vector<std::vector<double>> targets) {
    if (targets.empty() || targets.front().empty()) {
        throw error(errc::dimension, "quadratic_from_targets: empty targets");
    }
    QuadraticProblem prob;
    prob.num_devices = static_cast<int>(targets.size());
    prob.dim = static_cast<int>(targets.front().size());
    for (const auto& t : targets) {
        if (static_cast<int>(t.size()) != prob.dim) {
            throw error(errc::dimension, "quadratic_from_targets: ragged targets");
        }
    }
    prob.targets = std::move(targets);
    prob.w_star.assign(prob.dim, 0.0);
    for (const auto& t : prob.targets) {
        for (int i = 0; i < prob.dim; ++i) {
            prob.w_star[i] += t[i];
        }
    }
    for (double& v : prob.w_star) {
        v /= prob.num_devices;
    }
    double total = 0.0;
    for (const auto& t : prob.targets) {
        for (int i = 0; i < prob.dim; ++i) {
            const double d = prob.w_star[i] - t[i];
            total += d * d;
        }
    }
    prob.f_star = total / (2.0 * prob.num_devices);
    return prob;
}

QuadraticProblem make_quadratic_problem(int num_devices, int dim, double spread, Rng& rng) {
    if (num_devices < 1 || dim < 1) {
        throw error(errc::dimension, "make_quadratic_problem: bad shape");
    }
    std::vector<std::vector<double>> targets(num_devices, std::vector<double>(dim));
    for (auto& t : targets) {
        for (double& v : t) {
            v = spread * rng.normal();
        }
    }
    return quadratic_from_targets(std::move(targets));
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) {
        throw error(errc::io, "cannot write " + path);
    }
    for (int j = 0; j < data.feature_dim; ++j) {
        out << "x" << j << ",";
    }
    out << (data.task == TaskKind::regression ? "target" : "label") << "\n";
    char buf[32];
    for (int i = 0; i < data.num_samples; ++i) {
        const double* x = data.row(i);
        for (int j = 0; j < data.feature_dim; ++j) {
            std::snprintf(buf, sizeof(buf), "%.10g", x[j]);
            out << buf << ",";
        }
        if (data.task == TaskKind::regression) {
            std::snprintf(buf, sizeof(buf), "%.10g", data.targets[i]);
            out << buf << "\n";
        } else {
            out << data.labels[i] << "\n";
        }
    }
}

} // namespace airrecomp
