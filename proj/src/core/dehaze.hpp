#pragma once

#include "core/image.hpp"

namespace uwe {

enum class ChannelSet {
    all_rgb,
    green_blue, // underwater variant: red carries almost no signal
};

struct DehazeParams {
    int patch_radius = 7;            // square patch half-width (15x15 default)
    double omega = 0.95;             // haze retention factor
    double t_floor = 0.1;            // transmission lower bound
    double airlight_fraction = 0.001; // top dark-channel fraction scanned for A
    int guided_radius = 40;
    double guided_eps = 1e-3;
    ChannelSet channel_set = ChannelSet::all_rgb;

    void validate() const;
};

/// Per-pixel medium transmission, single channel, values in [floor, 1].
struct TransmissionMap {
    ImageBuffer map;
    double floor = 0.1;
};

/// Patch-min over channel-min: dark(x) = min_{y in patch(x)} min_{c} I^c(y).
ImageBuffer dark_channel(const ImageBuffer& img, const DehazeParams& params);

/// Ambient light: among the ceil(fraction*N) brightest dark-channel pixels,
/// the input color of the one with the highest gray intensity; ties resolve
/// to the lowest row-major index.
PixelColor estimate_airlight(const ImageBuffer& img, const ImageBuffer& dark,
                             const DehazeParams& params);

/// t = clamp(1 - omega * dark(I/A), floor, 1). Channels whose airlight
/// component is zero carry no haze signal and are excluded from the min;
/// it is an error for every channel in the set to be excluded.
TransmissionMap estimate_transmission(const ImageBuffer& img, const PixelColor& airlight,
                                      const DehazeParams& params);

/// Edge-preserving refinement: q = mean(a)*guide + mean(b) with
/// a = cov(guide,src)/(var(guide)+eps), b = mean(src) - a*mean(guide),
/// all means taken with box_filter at the given radius.
ImageBuffer guided_filter(const ImageBuffer& guide, const ImageBuffer& src,
                          int radius, double eps);

/// Inverts the haze model: J = (I - A)/max(t, floor) + A, clamped to [0,1].
ImageBuffer recover_radiance(const ImageBuffer& img, const TransmissionMap& t,
                             const PixelColor& airlight);

/// Forward haze model: I = J*t + A*(1 - t), evaluated exactly.
ImageBuffer synthesize_haze(const ImageBuffer& clear, const TransmissionMap& t,
                            const PixelColor& airlight);

/// Full restoration pipeline with the all-RGB dark channel.
ImageBuffer enhance_dcp(const ImageBuffer& img, const DehazeParams& params);

/// Same pipeline with the green/blue dark channel; recovery still touches
/// all three channels.
ImageBuffer enhance_udcp(const ImageBuffer& img, const DehazeParams& params);

} // namespace uwe
