#pragma once

#include <vector>

namespace alfs {

// Grayscale raster in row-major [0,1] intensities.
struct GrayImage {
    int height = 0;
    int width = 0;
    std::vector<double> px;
};

double luminance(double r, double g, double b);

// Exact area-average downscale (or upscale) with fractional pixel coverage:
// every target cell integrates the source region it covers.
GrayImage area_resize(const GrayImage& src, int out_h, int out_w);

}  // namespace alfs
