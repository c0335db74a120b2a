#include "core/quality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <json.hpp>

#include "core/error.hpp"

namespace uwe {

namespace {

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* what) {
    if (!a.same_shape(b))
        raise(Errc::dimension_mismatch,
              std::string(what) + ": image dimensions or channels differ");
}

} // namespace

double mse(const ImageBuffer& a, const ImageBuffer& b) {
    require_same_shape(a, b, "mse");
    const std::vector<double>& sa = a.samples();
    const std::vector<double>& sb = b.samples();
    double sum = 0.0;
    for (std::size_t i = 0; i < sa.size(); ++i) {
        const double d = sa[i] * 255.0 - sb[i] * 255.0;
        sum += d * d;
    }
    return sum / static_cast<double>(sa.size());
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
    const double m = mse(a, b);
    if (m == 0.0)
        return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / m);
}

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kSsimC2 = (0.03 * 255.0) * (0.03 * 255.0);

// Separable Gaussian mean with per-window weight renormalization at borders.
// Row and column renormalization compose to the 2D clipped-window weights
// because the clipped window is a rectangle.
ImageBuffer gaussian_mean(const ImageBuffer& img) {
    const int r = kSsimWindow / 2;
    double w1d[kSsimWindow];
    for (int d = -r; d <= r; ++d)
        w1d[d + r] = std::exp(-(d * d) / (2.0 * kSsimSigma * kSsimSigma));

    const int w = img.width();
    const int h = img.height();
    ImageBuffer rows(w, h, 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - r);
            const int x1 = std::min(w - 1, x + r);
            double acc = 0.0;
            double norm = 0.0;
            for (int xx = x0; xx <= x1; ++xx) {
                const double wt = w1d[xx - x + r];
                acc += wt * img.at(xx, y);
                norm += wt;
            }
            rows.at(x, y) = acc / norm;
        }
    }
    ImageBuffer out(w, h, 1);
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - r);
        const int y1 = std::min(h - 1, y + r);
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            double norm = 0.0;
            for (int yy = y0; yy <= y1; ++yy) {
                const double wt = w1d[yy - y + r];
                acc += wt * rows.at(x, yy);
                norm += wt;
            }
            out.at(x, y) = acc / norm;
        }
    }
    return out;
}

} // namespace

SsimResult ssim(const ImageBuffer& a, const ImageBuffer& b) {
    require_same_shape(a, b, "ssim");
    if (a.channels() != 1)
        raise(Errc::channel_mismatch, "ssim expects single-channel images");

    const int w = a.width();
    const int h = a.height();
    ImageBuffer x(w, h, 1);
    ImageBuffer y(w, h, 1);
    ImageBuffer xx(w, h, 1);
    ImageBuffer yy(w, h, 1);
    ImageBuffer xy(w, h, 1);
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            const double xv = a.at(i, j) * 255.0;
            const double yv = b.at(i, j) * 255.0;
            x.at(i, j) = xv;
            y.at(i, j) = yv;
            xx.at(i, j) = xv * xv;
            yy.at(i, j) = yv * yv;
            xy.at(i, j) = xv * yv;
        }
    }
    const ImageBuffer mu_x = gaussian_mean(x);
    const ImageBuffer mu_y = gaussian_mean(y);
    const ImageBuffer e_xx = gaussian_mean(xx);
    const ImageBuffer e_yy = gaussian_mean(yy);
    const ImageBuffer e_xy = gaussian_mean(xy);

    SsimResult result;
    result.map = ImageBuffer(w, h, 1);
    double total = 0.0;
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            const double mx = mu_x.at(i, j);
            const double my = mu_y.at(i, j);
            const double var_x = e_xx.at(i, j) - mx * mx;
            const double var_y = e_yy.at(i, j) - my * my;
            const double cov = e_xy.at(i, j) - mx * my;
            const double v = ((2.0 * mx * my + kSsimC1) * (2.0 * cov + kSsimC2)) /
                             ((mx * mx + my * my + kSsimC1) *
                              (var_x + var_y + kSsimC2));
            result.map.at(i, j) = v;
            total += v;
        }
    }
    result.mean = total / static_cast<double>(static_cast<std::size_t>(w) * h);
    return result;
}

double ssim_loss(const ImageBuffer& x, const ImageBuffer& gx) {
    require_same_shape(x, gx, "ssim_loss");
    if (x.channels() == 3)
        return 1.0 - ssim(to_grayscale(x), to_grayscale(gx)).mean;
    return 1.0 - ssim(x, gx).mean;
}

double adversarial_loss(std::span<const double> d_real, std::span<const double> d_fake) {
    if (d_real.empty() || d_fake.empty())
        raise(Errc::insufficient_data, "discriminator score lists must be non-empty");
    constexpr double eps = std::numeric_limits<double>::epsilon();
    double real_sum = 0.0;
    for (double v : d_real)
        real_sum += std::log(std::clamp(v, eps, 1.0 - eps));
    double fake_sum = 0.0;
    for (double v : d_fake)
        fake_sum += std::log(1.0 - std::clamp(v, eps, 1.0 - eps));
    return real_sum / static_cast<double>(d_real.size()) +
           fake_sum / static_cast<double>(d_fake.size());
}

double cycle_loss(const ImageBuffer& x, const ImageBuffer& fgx,
                  const ImageBuffer& y, const ImageBuffer& gfy) {
    require_same_shape(x, fgx, "cycle_loss");
    require_same_shape(y, gfy, "cycle_loss");
    double forward = 0.0;
    for (std::size_t i = 0; i < x.samples().size(); ++i)
        forward += std::abs(fgx.samples()[i] - x.samples()[i]);
    double backward = 0.0;
    for (std::size_t i = 0; i < y.samples().size(); ++i)
        backward += std::abs(gfy.samples()[i] - y.samples()[i]);
    return forward / static_cast<double>(x.samples().size()) +
           backward / static_cast<double>(y.samples().size());
}

QualityReport uciqe(const ImageBuffer& img, const UciqeCoefficients& coeffs) {
    if (img.channels() != 3)
        raise(Errc::channel_mismatch, "uciqe needs a 3-channel image");

    const ImageBuffer lab = rgb_to_lab(img);
    const ImageBuffer hsv = rgb_to_hsv(img);
    const std::size_t n = img.pixel_count();

    // Population standard deviation of chroma.
    double chroma_mean = 0.0;
    std::vector<double> chroma(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double av = lab.plane(1)[i];
        const double bv = lab.plane(2)[i];
        chroma[i] = std::sqrt(av * av + bv * bv);
        chroma_mean += chroma[i];
    }
    chroma_mean /= static_cast<double>(n);
    double chroma_var = 0.0;
    for (double c : chroma) {
        const double d = c - chroma_mean;
        chroma_var += d * d;
    }
    chroma_var /= static_cast<double>(n);

    // Luminance contrast: mean of the top 1% minus mean of the bottom 1%.
    std::vector<double> lum(lab.plane(0).begin(), lab.plane(0).end());
    std::sort(lum.begin(), lum.end());
    const std::size_t k = static_cast<std::size_t>(
        std::ceil(0.01 * static_cast<double>(n)));
    double low = 0.0;
    double high = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        low += lum[i];
        high += lum[n - 1 - i];
    }

    double sat_sum = 0.0;
    for (double s : hsv.plane(1))
        sat_sum += s;

    QualityReport report;
    report.sigma_c = std::sqrt(chroma_var);
    report.con_l = (high - low) / static_cast<double>(k);
    report.mu_s = sat_sum / static_cast<double>(n);
    report.uciqe = coeffs.c1 * report.sigma_c + coeffs.c2 * report.con_l +
                   coeffs.c3 * report.mu_s;
    return report;
}

std::string quality_report_json(const QualityReport& report) {
    nlohmann::json j;
    j["sigma_c"] = report.sigma_c;
    j["con_l"] = report.con_l;
    j["mu_s"] = report.mu_s;
    j["uciqe"] = report.uciqe;
    if (report.psnr.has_value())
        j["psnr"] = std::isinf(*report.psnr) ? nlohmann::json("inf")
                                             : nlohmann::json(*report.psnr);
    else
        j["psnr"] = nullptr;
    if (report.ssim.has_value())
        j["ssim"] = *report.ssim;
    else
        j["ssim"] = nullptr;
    return j.dump();
}

} // namespace uwe
