#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "alfs/arch.hpp"

namespace alfs {

struct CorruptWeightFile : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct WeightVersionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ArchMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// All trainable state. Layer order: conv blocks, fc layers, head.
// Conv weights are [out][in][k][k] row-major, fc/head weights [out][in].
struct ModelParams {
    ArchSpec arch;
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
    std::uint64_t init_seed = 0;

    bool operator==(const ModelParams&) const = default;

    std::size_t parameter_count() const;
};

// Shape of layer `i` under `arch`: {weight count, bias count, fan-in}.
struct LayerShape {
    std::size_t weight_count;
    std::size_t bias_count;
    int fan_in;
};
std::vector<LayerShape> layer_shapes(const ArchSpec& arch);

// Fan-in-scaled uniform weights (bound sqrt(6/fan_in)), zero biases.
// Deterministic in (arch, seed).
ModelParams init_model(const ArchSpec& arch, std::uint64_t seed);

// Copies everything except the head, which is re-drawn as in init_model.
ModelParams reinit_head(const ModelParams& params, std::uint64_t seed);

// Binary weight file: magic "ALFW", u32 format version, arch, then layer
// arrays in declaration order as little-endian 64-bit floats.
void save_params(const ModelParams& params, const std::string& path);
ModelParams load_params(const std::string& path);
// As above but rejects a file whose arch differs from `expected`.
ModelParams load_params(const std::string& path, const ArchSpec& expected);

}  // namespace alfs
