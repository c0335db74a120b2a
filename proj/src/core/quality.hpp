#pragma once

#include <optional>
#include <span>
#include <string>

#include "core/image.hpp"

namespace uwe {

struct UciqeCoefficients {
    double c1 = 0.1654;
    double c2 = 0.0324;
    double c3 = -0.1365;
};

struct QualityReport {
    double sigma_c = 0.0; // population std of Lab chroma
    double con_l = 0.0;   // top-1% minus bottom-1% mean luminance
    double mu_s = 0.0;    // mean HSV saturation
    double uciqe = 0.0;
    std::optional<double> psnr; // +infinity when images are identical
    std::optional<double> ssim;
};

/// Mean squared difference in 8-bit units (samples scaled by 255), averaged
/// over every sample.
double mse(const ImageBuffer& a, const ImageBuffer& b);

/// 10*log10(255^2 / MSE); +infinity when MSE is zero.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

struct SsimResult {
    double mean = 0.0;
    ImageBuffer map;
};

/// Windowed SSIM with an 11x11 sigma=1.5 Gaussian, C1=(0.01*255)^2 and
/// C2=(0.03*255)^2 in 8-bit units; windows shrink at the borders.
SsimResult ssim(const ImageBuffer& a, const ImageBuffer& b);

/// 1 - mean SSIM; 3-channel inputs are reduced to luma first.
double ssim_loss(const ImageBuffer& x, const ImageBuffer& gx);

/// mean(log d_real) + mean(log(1 - d_fake)); scores clamped away from 0 and 1
/// by machine epsilon.
double adversarial_loss(std::span<const double> d_real, std::span<const double> d_fake);

/// Mean per-sample L1 of (fgx - x) plus mean per-sample L1 of (gfy - y).
double cycle_loss(const ImageBuffer& x, const ImageBuffer& fgx,
                  const ImageBuffer& y, const ImageBuffer& gfy);

/// Chroma/contrast/saturation decomposition and the weighted score.
QualityReport uciqe(const ImageBuffer& img, const UciqeCoefficients& coeffs = {});

/// JSON object with keys sigma_c, con_l, mu_s, uciqe, psnr (null, number, or
/// "inf"), ssim (null or number).
std::string quality_report_json(const QualityReport& report);

} // namespace uwe
