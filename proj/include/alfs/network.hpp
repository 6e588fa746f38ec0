#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "alfs/model.hpp"

namespace alfs {

// Flat labeled image set matching an arch's input geometry.
struct Dataset {
    int resolution = 0;
    int channels = 1;
    std::vector<double> images; // size() * channels * resolution^2, contiguous
    std::vector<int> labels;

    int size() const { return static_cast<int>(labels.size()); }
    int item_values() const { return channels * resolution * resolution; }
    const double* item(int i) const { return images.data() + static_cast<std::size_t>(i) * item_values(); }
    void append(const std::vector<double>& image, int label) {
        images.insert(images.end(), image.begin(), image.end());
        labels.push_back(label);
    }
};

struct ForwardMode {
    bool stochastic = false;
    std::uint64_t seed = 0;

    static ForwardMode deterministic() { return {false, 0}; }
    static ForwardMode with_dropout(std::uint64_t seed) { return {true, seed}; }
};

struct ProbMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
    const double* row(int r) const { return v.data() + static_cast<std::size_t>(r) * cols; }
};

// Class probabilities for a batch of n images laid out like Dataset::images.
// Deterministic mode runs without dropout; stochastic mode applies inverted
// dropout with masks drawn from the seed, one mask per layer shared by all
// items in the call (one sampled subnetwork per pass).
ProbMatrix forward(const ModelParams& params, const double* images, int n, ForwardMode mode);
ProbMatrix forward(const ModelParams& params, const Dataset& data, ForwardMode mode);

struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
};

struct LossGrad {
    double loss = 0.0;
    Gradients grad;
};

// Mean softmax cross-entropy over the batch plus exact reverse-mode gradients
// for every parameter. The dropout seed fixes the stochastic masks, so the
// result is a smooth deterministic function of params.
LossGrad loss_and_gradients(const ModelParams& params, const double* images, int n,
                            const std::vector<int>& labels, std::uint64_t dropout_seed);
LossGrad loss_and_gradients(const ModelParams& params, const Dataset& batch,
                            std::uint64_t dropout_seed);

struct TrainConfig {
    int epochs = 50;
    int batch_size = 128;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;

    bool operator==(const TrainConfig&) const = default;
    void validate() const;
};

struct TrainTrace {
    std::vector<double> epoch_mean_loss;
    long steps = 0;
};

// Adam (0.9, 0.999, eps 1e-8) over epochs * ceil(N/batch_size) steps with a
// seeded reshuffle each epoch. Sequential by contract; same inputs, same
// output bits.
ModelParams train(const ModelParams& params, const Dataset& data, const TrainConfig& cfg,
                  TrainTrace* trace = nullptr);

struct EvalResult {
    double accuracy = 0.0;
    std::vector<std::optional<double>> per_class_accuracy; // nullopt: class absent from test
    std::vector<int> per_class_correct;
    std::vector<int> per_class_total;
};

// Deterministic-mode accuracy; argmax ties go to the lowest class index.
EvalResult evaluate(const ModelParams& params, const Dataset& test);

// Worker threads used for data-parallel forward passes (evaluation and
// pool scoring only; results do not depend on this). 0 = hardware default.
void set_forward_threads(int n);
int forward_threads();

}  // namespace alfs
