#include "core/dehaze.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "core/error.hpp"
#include "core/filters.hpp"

namespace uwe {

void DehazeParams::validate() const {
    if (patch_radius < 0)
        raise(Errc::invalid_argument, "patch_radius must be >= 0");
    if (!(omega > 0.0 && omega <= 1.0))
        raise(Errc::invalid_argument, "omega must be in (0,1]");
    if (!(t_floor > 0.0 && t_floor < 1.0))
        raise(Errc::invalid_argument, "t_floor must be in (0,1)");
    if (!(airlight_fraction > 0.0 && airlight_fraction <= 1.0))
        raise(Errc::invalid_argument, "airlight_fraction must be in (0,1]");
    if (guided_radius < 0)
        raise(Errc::invalid_argument, "guided_radius must be >= 0");
    if (!(guided_eps >= 0.0))
        raise(Errc::invalid_argument, "guided_eps must be >= 0");
}

namespace {

int first_channel(ChannelSet set) {
    return set == ChannelSet::green_blue ? 1 : 0;
}

ImageBuffer channel_min(const ImageBuffer& img, ChannelSet set) {
    ImageBuffer out(img.width(), img.height(), 1);
    const int c0 = first_channel(set);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            double m = img.at(x, y, c0);
            for (int c = c0 + 1; c < 3; ++c)
                m = std::min(m, img.at(x, y, c));
            out.at(x, y) = m;
        }
    }
    return out;
}

double gray_intensity(const ImageBuffer& img, int x, int y) {
    return 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
           0.114 * img.at(x, y, 2);
}

void require_rgb(const ImageBuffer& img, const char* what) {
    if (img.channels() != 3)
        raise(Errc::channel_mismatch, std::string(what) + " needs a 3-channel image");
}

} // namespace

ImageBuffer dark_channel(const ImageBuffer& img, const DehazeParams& params) {
    require_rgb(img, "dark_channel");
    params.validate();
    return min_filter(channel_min(img, params.channel_set), params.patch_radius);
}

PixelColor estimate_airlight(const ImageBuffer& img, const ImageBuffer& dark,
                             const DehazeParams& params) {
    require_rgb(img, "estimate_airlight");
    params.validate();
    if (dark.width() != img.width() || dark.height() != img.height() ||
        dark.channels() != 1)
        raise(Errc::dimension_mismatch, "dark channel shape does not match image");

    const std::size_t n = img.pixel_count();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const std::span<const double> dark_plane = dark.plane(0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (dark_plane[a] != dark_plane[b])
            return dark_plane[a] > dark_plane[b];
        return a < b;
    });

    const std::size_t keep = static_cast<std::size_t>(
        std::ceil(params.airlight_fraction * static_cast<double>(n)));
    const std::size_t count = std::min(std::max<std::size_t>(keep, 1), n);

    std::size_t best = order[0];
    double best_gray = -1.0;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t idx = order[i];
        const int x = static_cast<int>(idx % img.width());
        const int y = static_cast<int>(idx / img.width());
        const double gray = gray_intensity(img, x, y);
        if (gray > best_gray || (gray == best_gray && idx < best)) {
            best_gray = gray;
            best = idx;
        }
    }
    const int bx = static_cast<int>(best % img.width());
    const int by = static_cast<int>(best / img.width());
    return {img.at(bx, by, 0), img.at(bx, by, 1), img.at(bx, by, 2)};
}

TransmissionMap estimate_transmission(const ImageBuffer& img, const PixelColor& airlight,
                                      const DehazeParams& params) {
    require_rgb(img, "estimate_transmission");
    params.validate();

    const double a[3] = {airlight.r, airlight.g, airlight.b};
    bool used[3] = {false, false, false};
    bool any = false;
    for (int c = first_channel(params.channel_set); c < 3; ++c) {
        if (a[c] > 0.0) {
            used[c] = true;
            any = true;
        }
    }
    if (!any)
        raise(Errc::degenerate_airlight,
              "ambient light is zero on every channel in the set");

    // Dark channel of the airlight-normalized image over the surviving channels.
    ImageBuffer ratio_min(img.width(), img.height(), 1);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            double m = std::numeric_limits<double>::infinity();
            for (int c = 0; c < 3; ++c)
                if (used[c])
                    m = std::min(m, img.at(x, y, c) / a[c]);
            ratio_min.at(x, y) = m;
        }
    }
    ImageBuffer dark = min_filter(ratio_min, params.patch_radius);

    ImageBuffer t(img.width(), img.height(), 1);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            t.at(x, y) = std::clamp(1.0 - params.omega * dark.at(x, y),
                                    params.t_floor, 1.0);
    return {std::move(t), params.t_floor};
}

ImageBuffer guided_filter(const ImageBuffer& guide, const ImageBuffer& src,
                          int radius, double eps) {
    if (guide.channels() != 1 || src.channels() != 1)
        raise(Errc::channel_mismatch, "guided_filter expects single-channel images");
    if (!guide.same_shape(src))
        raise(Errc::dimension_mismatch, "guide and source dimensions differ");
    if (!(eps >= 0.0))
        raise(Errc::invalid_argument, "guided_filter eps must be >= 0");

    const int w = guide.width();
    const int h = guide.height();
    ImageBuffer gg(w, h, 1);
    ImageBuffer gs(w, h, 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            gg.at(x, y) = guide.at(x, y) * guide.at(x, y);
            gs.at(x, y) = guide.at(x, y) * src.at(x, y);
        }
    }
    const ImageBuffer mean_g = box_filter(guide, radius);
    const ImageBuffer mean_s = box_filter(src, radius);
    const ImageBuffer corr_gg = box_filter(gg, radius);
    const ImageBuffer corr_gs = box_filter(gs, radius);

    ImageBuffer a(w, h, 1);
    ImageBuffer b(w, h, 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double var = corr_gg.at(x, y) - mean_g.at(x, y) * mean_g.at(x, y);
            const double cov = corr_gs.at(x, y) - mean_g.at(x, y) * mean_s.at(x, y);
            const double denom = var + eps;
            const double ai = denom != 0.0 ? cov / denom : 0.0;
            a.at(x, y) = ai;
            b.at(x, y) = mean_s.at(x, y) - ai * mean_g.at(x, y);
        }
    }
    const ImageBuffer mean_a = box_filter(a, radius);
    const ImageBuffer mean_b = box_filter(b, radius);

    ImageBuffer out(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.at(x, y) = mean_a.at(x, y) * guide.at(x, y) + mean_b.at(x, y);
    return out;
}

ImageBuffer recover_radiance(const ImageBuffer& img, const TransmissionMap& t,
                             const PixelColor& airlight) {
    require_rgb(img, "recover_radiance");
    if (t.map.width() != img.width() || t.map.height() != img.height() ||
        t.map.channels() != 1)
        raise(Errc::dimension_mismatch, "transmission shape does not match image");
    if (!(t.floor > 0.0))
        raise(Errc::invalid_argument, "transmission floor must be positive");

    const double a[3] = {airlight.r, airlight.g, airlight.b};
    ImageBuffer out(img.width(), img.height(), 3);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const double tv = std::max(t.map.at(x, y), t.floor);
            for (int c = 0; c < 3; ++c) {
                const double j = (img.at(x, y, c) - a[c]) / tv + a[c];
                out.at(x, y, c) = std::clamp(j, 0.0, 1.0);
            }
        }
    }
    return out;
}

ImageBuffer synthesize_haze(const ImageBuffer& clear, const TransmissionMap& t,
                            const PixelColor& airlight) {
    require_rgb(clear, "synthesize_haze");
    if (t.map.width() != clear.width() || t.map.height() != clear.height() ||
        t.map.channels() != 1)
        raise(Errc::dimension_mismatch, "transmission shape does not match image");

    const double a[3] = {airlight.r, airlight.g, airlight.b};
    ImageBuffer out(clear.width(), clear.height(), 3);
    for (int y = 0; y < clear.height(); ++y) {
        for (int x = 0; x < clear.width(); ++x) {
            const double tv = t.map.at(x, y);
            if (!(tv > 0.0 && tv <= 1.0))
                raise(Errc::invalid_argument, "transmission values must lie in (0,1]");
            for (int c = 0; c < 3; ++c)
                out.at(x, y, c) = clear.at(x, y, c) * tv + a[c] * (1.0 - tv);
        }
    }
    return out;
}

namespace {

ImageBuffer enhance_pipeline(const ImageBuffer& img, DehazeParams params) {
    require_rgb(img, "enhance");
    params.validate();
    const ImageBuffer dark = dark_channel(img, params);
    const PixelColor airlight = estimate_airlight(img, dark, params);
    TransmissionMap t = estimate_transmission(img, airlight, params);

    const ImageBuffer guide = to_grayscale(img);
    ImageBuffer refined =
        guided_filter(guide, t.map, params.guided_radius, params.guided_eps);
    for (double& v : refined.samples())
        v = std::clamp(v, params.t_floor, 1.0);
    t.map = std::move(refined);

    return recover_radiance(img, t, airlight);
}

} // namespace

ImageBuffer enhance_dcp(const ImageBuffer& img, const DehazeParams& params) {
    DehazeParams p = params;
    p.channel_set = ChannelSet::all_rgb;
    return enhance_pipeline(img, p);
}

ImageBuffer enhance_udcp(const ImageBuffer& img, const DehazeParams& params) {
    DehazeParams p = params;
    p.channel_set = ChannelSet::green_blue;
    return enhance_pipeline(img, p);
}

} // namespace uwe
