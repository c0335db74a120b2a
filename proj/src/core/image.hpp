#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace uwe {

/// Planar raster of real-valued samples: one full channel plane after another,
/// row-major inside each plane. Nominal sample range is [0,1]; derived spaces
/// (Lab, HSV) store their native ranges. Samples are always finite.
class ImageBuffer {
public:
    ImageBuffer() = default;
    ImageBuffer(int width, int height, int channels, double fill = 0.0);

    /// Takes ownership of `samples` (length width*height*channels, planar).
    /// Validates shape and finiteness.
    static ImageBuffer from_samples(int width, int height, int channels,
                                    std::vector<double> samples);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    bool empty() const noexcept { return samples_.empty(); }
    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width_) * height_;
    }

    double& at(int x, int y, int c = 0) {
        return samples_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
    }
    double at(int x, int y, int c = 0) const {
        return samples_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
    }

    std::span<double> plane(int c) {
        return {samples_.data() + static_cast<std::size_t>(c) * pixel_count(), pixel_count()};
    }
    std::span<const double> plane(int c) const {
        return {samples_.data() + static_cast<std::size_t>(c) * pixel_count(), pixel_count()};
    }

    std::vector<double>& samples() noexcept { return samples_; }
    const std::vector<double>& samples() const noexcept { return samples_; }

    bool same_shape(const ImageBuffer& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_ &&
               channels_ == other.channels_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<double> samples_;
};

struct PixelColor {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;
};

/// Decodes binary PNM (P6 RGB or P5 gray, maxval 255). Samples become byte/255.
ImageBuffer decode_pnm(const std::uint8_t* bytes, std::size_t size);
ImageBuffer decode_pnm(const std::vector<std::uint8_t>& bytes);

/// Encodes to canonical binary PNM: "P6\n<w> <h>\n255\n" + payload.
/// Quantization is round(sample*255) clamped to [0,255].
std::vector<std::uint8_t> encode_pnm(const ImageBuffer& img);

ImageBuffer read_pnm_file(const std::string& path);
void write_pnm_file(const ImageBuffer& img, const std::string& path);

/// BT.601 luma: Y = 0.299 R + 0.587 G + 0.114 B.
ImageBuffer to_grayscale(const ImageBuffer& rgb);

/// sRGB (D65) to CIE L*a*b*. L in [0,100]; a, b stored as-is.
ImageBuffer rgb_to_lab(const ImageBuffer& rgb);

/// Hexcone HSV: H in degrees [0,360), S and V in [0,1], H = 0 when S = 0.
ImageBuffer rgb_to_hsv(const ImageBuffer& rgb);

} // namespace uwe
