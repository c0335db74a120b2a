#pragma once

#include <vector>

#include "core/image.hpp"

namespace uwe {

/// Windowed mean over the (2r+1)^2 square clipped to the image; edge windows
/// renormalize by the clipped pixel count (no padding).
ImageBuffer box_filter(const ImageBuffer& img, int radius);

/// Windowed minimum over the clipped (2r+1)^2 square.
ImageBuffer min_filter(const ImageBuffer& img, int radius);

/// Normalized 2D Gaussian weight grid, size x size (size odd), sum 1.
std::vector<double> gaussian_window(int size, double sigma);

/// Bilinear resampling to floor(dim/scale); scale > 1 shrinks.
ImageBuffer downscale(const ImageBuffer& img, double scale);

} // namespace uwe
