#include "core/filters.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace uwe {

ImageBuffer box_filter(const ImageBuffer& img, int radius) {
    if (img.channels() != 1)
        raise(Errc::channel_mismatch, "box_filter expects a single-channel image");
    if (radius < 0)
        raise(Errc::invalid_argument, "box_filter radius must be >= 0");
    if (radius == 0)
        return img;
    const int w = img.width();
    const int h = img.height();

    // Summed-area table with a zero border row/column.
    std::vector<double> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
    const auto sat_at = [&](int x, int y) -> double& {
        return sat[static_cast<std::size_t>(y) * (w + 1) + x];
    };
    for (int y = 0; y < h; ++y) {
        double row = 0.0;
        for (int x = 0; x < w; ++x) {
            row += img.at(x, y);
            sat_at(x + 1, y + 1) = sat_at(x + 1, y) + row;
        }
    }

    ImageBuffer out(w, h, 1);
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - radius);
        const int y1 = std::min(h - 1, y + radius);
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - radius);
            const int x1 = std::min(w - 1, x + radius);
            const double sum = sat_at(x1 + 1, y1 + 1) - sat_at(x0, y1 + 1) -
                               sat_at(x1 + 1, y0) + sat_at(x0, y0);
            out.at(x, y) = sum / ((x1 - x0 + 1) * (y1 - y0 + 1));
        }
    }
    return out;
}

ImageBuffer min_filter(const ImageBuffer& img, int radius) {
    if (img.channels() != 1)
        raise(Errc::channel_mismatch, "min_filter expects a single-channel image");
    if (radius < 0)
        raise(Errc::invalid_argument, "min_filter radius must be >= 0");
    const int w = img.width();
    const int h = img.height();

    // Separable: horizontal pass then vertical pass.
    ImageBuffer rows(w, h, 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - radius);
            const int x1 = std::min(w - 1, x + radius);
            double m = img.at(x0, y);
            for (int xx = x0 + 1; xx <= x1; ++xx)
                m = std::min(m, img.at(xx, y));
            rows.at(x, y) = m;
        }
    }
    ImageBuffer out(w, h, 1);
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - radius);
        const int y1 = std::min(h - 1, y + radius);
        for (int x = 0; x < w; ++x) {
            double m = rows.at(x, y0);
            for (int yy = y0 + 1; yy <= y1; ++yy)
                m = std::min(m, rows.at(x, yy));
            out.at(x, y) = m;
        }
    }
    return out;
}

std::vector<double> gaussian_window(int size, double sigma) {
    if (size < 1 || size % 2 == 0)
        raise(Errc::invalid_argument, "gaussian window size must be odd and positive");
    if (!(sigma > 0.0))
        raise(Errc::invalid_argument, "gaussian sigma must be positive");
    const int r = size / 2;
    std::vector<double> weights(static_cast<std::size_t>(size) * size);
    double total = 0.0;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            weights[static_cast<std::size_t>(dy + r) * size + (dx + r)] = v;
            total += v;
        }
    }
    for (double& v : weights)
        v /= total;
    return weights;
}

ImageBuffer downscale(const ImageBuffer& img, double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale))
        raise(Errc::invalid_argument, "scale must be a positive finite value");
    const int ow = static_cast<int>(img.width() / scale);
    const int oh = static_cast<int>(img.height() / scale);
    if (ow < 1 || oh < 1)
        raise(Errc::too_small, "image too small to downscale");

    ImageBuffer out(ow, oh, img.channels());
    for (int c = 0; c < img.channels(); ++c) {
        for (int oy = 0; oy < oh; ++oy) {
            double sy = (oy + 0.5) * scale - 0.5;
            sy = std::clamp(sy, 0.0, static_cast<double>(img.height() - 1));
            const int y0 = static_cast<int>(sy);
            const int y1 = std::min(y0 + 1, img.height() - 1);
            const double fy = sy - y0;
            for (int ox = 0; ox < ow; ++ox) {
                double sx = (ox + 0.5) * scale - 0.5;
                sx = std::clamp(sx, 0.0, static_cast<double>(img.width() - 1));
                const int x0 = static_cast<int>(sx);
                const int x1 = std::min(x0 + 1, img.width() - 1);
                const double fx = sx - x0;
                const double top =
                    (1.0 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
                const double bottom =
                    (1.0 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
                out.at(ox, oy, c) = (1.0 - fy) * top + fy * bottom;
            }
        }
    }
    return out;
}

} // namespace uwe
