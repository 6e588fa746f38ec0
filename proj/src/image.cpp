#include "alfs/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace alfs {

double luminance(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

GrayImage area_resize(const GrayImage& src, int out_h, int out_w) {
    if (src.height < 1 || src.width < 1) throw std::invalid_argument("area_resize: empty source");
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("area_resize: empty target");
    GrayImage dst;
    dst.height = out_h;
    dst.width = out_w;
    dst.px.assign(static_cast<std::size_t>(out_h) * out_w, 0.0);

    const double sy = static_cast<double>(src.height) / out_h;
    const double sx = static_cast<double>(src.width) / out_w;
    for (int oy = 0; oy < out_h; ++oy) {
        const double y0 = oy * sy, y1 = (oy + 1) * sy;
        const int iy0 = static_cast<int>(y0);
        const int iy1 = std::min(src.height - 1, static_cast<int>(std::ceil(y1)) - 1);
        for (int ox = 0; ox < out_w; ++ox) {
            const double x0 = ox * sx, x1 = (ox + 1) * sx;
            const int ix0 = static_cast<int>(x0);
            const int ix1 = std::min(src.width - 1, static_cast<int>(std::ceil(x1)) - 1);
            double acc = 0.0;
            for (int iy = iy0; iy <= iy1; ++iy) {
                const double wy = std::min<double>(iy + 1, y1) - std::max<double>(iy, y0);
                for (int ix = ix0; ix <= ix1; ++ix) {
                    const double wx = std::min<double>(ix + 1, x1) - std::max<double>(ix, x0);
                    acc += wy * wx * src.px[static_cast<std::size_t>(iy) * src.width + ix];
                }
            }
            dst.px[static_cast<std::size_t>(oy) * out_w + ox] = acc / (sy * sx);
        }
    }
    return dst;
}

}  // namespace alfs
