#include <algorithm>
#include <cmath>

#include "qcia/imageio.hpp"

namespace qcia {

Raster resize_bilinear(const Raster& r, int out_width, int out_height) {
    validate_raster(r);
    if (out_width < 1 || out_height < 1)
        raise(ErrorCode::ZeroDimension, "resize target must be >= 1 in both dimensions");
    if (out_width == r.width && out_height == r.height)
        return r;

    Raster out(out_width, out_height, r.channels);
    const double sx = static_cast<double>(r.width) / out_width;
    const double sy = static_cast<double>(r.height) / out_height;

    for (int oy = 0; oy < out_height; ++oy) {
        // Half-pixel-center sample position, clamped at the borders.
        double fy = (oy + 0.5) * sy - 0.5;
        double y0f = std::floor(fy);
        double wy = fy - y0f;
        int y0 = std::clamp(static_cast<int>(y0f), 0, r.height - 1);
        int y1 = std::clamp(static_cast<int>(y0f) + 1, 0, r.height - 1);
        for (int ox = 0; ox < out_width; ++ox) {
            double fx = (ox + 0.5) * sx - 0.5;
            double x0f = std::floor(fx);
            double wx = fx - x0f;
            int x0 = std::clamp(static_cast<int>(x0f), 0, r.width - 1);
            int x1 = std::clamp(static_cast<int>(x0f) + 1, 0, r.width - 1);
            for (int c = 0; c < r.channels; ++c) {
                double top = (1.0 - wx) * r.at(x0, y0, c) + wx * r.at(x1, y0, c);
                double bottom = (1.0 - wx) * r.at(x0, y1, c) + wx * r.at(x1, y1, c);
                double value = (1.0 - wy) * top + wy * bottom;
                out.at(ox, oy, c) =
                    static_cast<uint8_t>(std::clamp(std::lround(value), 0L, 255L));
            }
        }
    }
    return out;
}

}  // namespace qcia
