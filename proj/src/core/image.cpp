#include "core/image.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "core/error.hpp"

namespace uwe {

namespace {

void check_shape(int width, int height, int channels) {
    if (width < 1 || height < 1)
        raise(Errc::invalid_argument, "image dimensions must be at least 1x1");
    if (channels != 1 && channels != 3)
        raise(Errc::invalid_argument, "channel count must be 1 or 3");
}

} // namespace

ImageBuffer::ImageBuffer(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
    check_shape(width, height, channels);
    if (!std::isfinite(fill))
        raise(Errc::invalid_argument, "fill value must be finite");
    samples_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

ImageBuffer ImageBuffer::from_samples(int width, int height, int channels,
                                      std::vector<double> samples) {
    check_shape(width, height, channels);
    const std::size_t expected =
        static_cast<std::size_t>(width) * height * channels;
    if (samples.size() != expected)
        raise(Errc::invalid_argument, "sample count does not match dimensions");
    for (double v : samples)
        if (!std::isfinite(v))
            raise(Errc::invalid_argument, "samples must be finite");
    ImageBuffer img;
    img.width_ = width;
    img.height_ = height;
    img.channels_ = channels;
    img.samples_ = std::move(samples);
    return img;
}

namespace {

bool is_pnm_space(std::uint8_t c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
}

// Reads a decimal token after skipping whitespace; advances pos.
long read_pnm_int(const std::uint8_t* bytes, std::size_t size, std::size_t& pos) {
    while (pos < size && is_pnm_space(bytes[pos]))
        ++pos;
    if (pos >= size || !std::isdigit(bytes[pos]))
        raise(Errc::unsupported_format, "malformed PNM header");
    long value = 0;
    while (pos < size && std::isdigit(bytes[pos])) {
        value = value * 10 + (bytes[pos] - '0');
        if (value > 1000000000L)
            raise(Errc::unsupported_format, "PNM header value out of range");
        ++pos;
    }
    return value;
}

} // namespace

ImageBuffer decode_pnm(const std::uint8_t* bytes, std::size_t size) {
    if (bytes == nullptr || size < 2)
        raise(Errc::unsupported_format, "not a PNM stream");
    int channels = 0;
    if (bytes[0] == 'P' && bytes[1] == '6')
        channels = 3;
    else if (bytes[0] == 'P' && bytes[1] == '5')
        channels = 1;
    else
        raise(Errc::unsupported_format, "expected P6 or P5 magic");

    std::size_t pos = 2;
    const long width = read_pnm_int(bytes, size, pos);
    const long height = read_pnm_int(bytes, size, pos);
    const long maxval = read_pnm_int(bytes, size, pos);
    if (width < 1 || height < 1)
        raise(Errc::unsupported_format, "invalid PNM dimensions");
    if (maxval != 255)
        raise(Errc::unsupported_format, "only maxval 255 is supported");
    if (pos >= size || !is_pnm_space(bytes[pos]))
        raise(Errc::unsupported_format, "missing whitespace before payload");
    ++pos; // exactly one whitespace byte separates header and payload

    const std::size_t expected =
        static_cast<std::size_t>(width) * height * channels;
    if (size - pos < expected)
        raise(Errc::truncated_payload, "PNM payload shorter than header promises");
    if (size - pos > expected)
        raise(Errc::unsupported_format, "trailing bytes after PNM payload");

    ImageBuffer img(static_cast<int>(width), static_cast<int>(height), channels);
    const std::uint8_t* payload = bytes + pos;
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const std::size_t base =
                (static_cast<std::size_t>(y) * width + x) * channels;
            for (int c = 0; c < channels; ++c)
                img.at(x, y, c) = payload[base + c] / 255.0;
        }
    }
    return img;
}

ImageBuffer decode_pnm(const std::vector<std::uint8_t>& bytes) {
    return decode_pnm(bytes.data(), bytes.size());
}

std::vector<std::uint8_t> encode_pnm(const ImageBuffer& img) {
    if (img.empty())
        raise(Errc::invalid_argument, "cannot encode empty image");
    char header[64];
    const int n = std::snprintf(header, sizeof(header), "%s\n%d %d\n255\n",
                                img.channels() == 3 ? "P6" : "P5", img.width(),
                                img.height());
    std::vector<std::uint8_t> out(header, header + n);
    out.reserve(out.size() + img.pixel_count() * img.channels());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < img.channels(); ++c) {
                long q = std::lround(img.at(x, y, c) * 255.0);
                if (q < 0) q = 0;
                if (q > 255) q = 255;
                out.push_back(static_cast<std::uint8_t>(q));
            }
        }
    }
    return out;
}

ImageBuffer read_pnm_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(Errc::io, "cannot open '" + path + "' for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad())
        raise(Errc::io, "read failure on '" + path + "'");
    return decode_pnm(bytes);
}

void write_pnm_file(const ImageBuffer& img, const std::string& path) {
    const std::vector<std::uint8_t> bytes = encode_pnm(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        raise(Errc::io, "cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out)
        raise(Errc::io, "write failure on '" + path + "'");
}

ImageBuffer to_grayscale(const ImageBuffer& rgb) {
    if (rgb.channels() != 3)
        raise(Errc::channel_mismatch, "grayscale conversion needs a 3-channel image");
    ImageBuffer out(rgb.width(), rgb.height(), 1);
    for (int y = 0; y < rgb.height(); ++y)
        for (int x = 0; x < rgb.width(); ++x)
            out.at(x, y) = 0.299 * rgb.at(x, y, 0) + 0.587 * rgb.at(x, y, 1) +
                           0.114 * rgb.at(x, y, 2);
    return out;
}

namespace {

// sRGB linearization followed by the sRGB-to-XYZ matrix. The whitepoint is
// taken as the exact matrix row sums so neutral inputs map to a = b = 0.
constexpr double kRgbToXyz[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
};

double srgb_linearize(double u) {
    return u <= 0.04045 ? u / 12.92 : std::pow((u + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
    constexpr double delta = 6.0 / 29.0;
    return t > delta * delta * delta
               ? std::cbrt(t)
               : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

} // namespace

ImageBuffer rgb_to_lab(const ImageBuffer& rgb) {
    if (rgb.channels() != 3)
        raise(Errc::channel_mismatch, "Lab conversion needs a 3-channel image");
    static const double xn = kRgbToXyz[0][0] + kRgbToXyz[0][1] + kRgbToXyz[0][2];
    static const double yn = kRgbToXyz[1][0] + kRgbToXyz[1][1] + kRgbToXyz[1][2];
    static const double zn = kRgbToXyz[2][0] + kRgbToXyz[2][1] + kRgbToXyz[2][2];

    ImageBuffer out(rgb.width(), rgb.height(), 3);
    for (int y = 0; y < rgb.height(); ++y) {
        for (int x = 0; x < rgb.width(); ++x) {
            const double lr = srgb_linearize(rgb.at(x, y, 0));
            const double lg = srgb_linearize(rgb.at(x, y, 1));
            const double lb = srgb_linearize(rgb.at(x, y, 2));
            const double fx = lab_f((kRgbToXyz[0][0] * lr + kRgbToXyz[0][1] * lg +
                                     kRgbToXyz[0][2] * lb) / xn);
            const double fy = lab_f((kRgbToXyz[1][0] * lr + kRgbToXyz[1][1] * lg +
                                     kRgbToXyz[1][2] * lb) / yn);
            const double fz = lab_f((kRgbToXyz[2][0] * lr + kRgbToXyz[2][1] * lg +
                                     kRgbToXyz[2][2] * lb) / zn);
            out.at(x, y, 0) = 116.0 * fy - 16.0;
            out.at(x, y, 1) = 500.0 * (fx - fy);
            out.at(x, y, 2) = 200.0 * (fy - fz);
        }
    }
    return out;
}

ImageBuffer rgb_to_hsv(const ImageBuffer& rgb) {
    if (rgb.channels() != 3)
        raise(Errc::channel_mismatch, "HSV conversion needs a 3-channel image");
    ImageBuffer out(rgb.width(), rgb.height(), 3);
    for (int y = 0; y < rgb.height(); ++y) {
        for (int x = 0; x < rgb.width(); ++x) {
            const double r = rgb.at(x, y, 0);
            const double g = rgb.at(x, y, 1);
            const double b = rgb.at(x, y, 2);
            const double v = std::max({r, g, b});
            const double lo = std::min({r, g, b});
            const double delta = v - lo;
            double h = 0.0;
            double s = 0.0;
            if (delta > 0.0 && v > 0.0) {
                s = delta / v;
                if (v == r)
                    h = 60.0 * ((g - b) / delta);
                else if (v == g)
                    h = 60.0 * ((b - r) / delta + 2.0);
                else
                    h = 60.0 * ((r - g) / delta + 4.0);
                if (h < 0.0) h += 360.0;
                if (h >= 360.0) h -= 360.0;
            }
            out.at(x, y, 0) = h;
            out.at(x, y, 1) = s;
            out.at(x, y, 2) = v;
        }
    }
    return out;
}

} // namespace uwe
