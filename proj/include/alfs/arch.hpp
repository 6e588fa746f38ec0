#pragma once

#include <string>
#include <vector>

namespace alfs {

struct ConvBlockSpec {
    int filters = 0;
    int kernel = 3;       // odd, >= 1
    double dropout = 0.0; // [0, 1)

    bool operator==(const ConvBlockSpec&) const = default;
};

struct FcLayerSpec {
    int width = 0;
    double dropout = 0.0;

    bool operator==(const FcLayerSpec&) const = default;
};

// Network shape: conv blocks (conv -> relu -> 2x2 maxpool -> dropout),
// fully-connected layers (affine -> relu -> dropout), then a K-way head.
struct ArchSpec {
    int resolution = 28;
    int channels = 1;
    std::vector<ConvBlockSpec> conv_blocks = {{32, 3, 0.25}, {64, 3, 0.25}};
    std::vector<FcLayerSpec> fc_layers = {{128, 0.5}};
    int class_count = 24;

    bool operator==(const ArchSpec&) const = default;

    // Throws std::invalid_argument with a shape diagnostic if inconsistent.
    void validate() const;

    // Spatial side length after `blocks` conv blocks (same-padding conv, then
    // 2x2 stride-2 pool with floor).
    int side_after(int blocks) const;

    // Flattened feature count feeding the first fully-connected layer.
    int flat_features() const;

    // Number of parameter layers: conv blocks + fc layers + head.
    int layer_count() const { return static_cast<int>(conv_blocks.size() + fc_layers.size()) + 1; }

    std::string describe() const;
};

}  // namespace alfs
