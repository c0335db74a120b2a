#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "core/quality.hpp"

namespace uwe {

struct RatingSample {
    double sigma_c = 0.0;
    double con_l = 0.0;
    double mu_s = 0.0;
    double score = 0.0; // mean opinion score, 1..5
};

struct FitResult {
    UciqeCoefficients coeffs;
    double intercept = 0.0;
    bool has_intercept = false;
    double r_squared = 0.0;
    std::vector<double> residuals; // observed minus fitted, in sample order
};

/// Ordinary least squares through the origin (optional intercept), solved via
/// the normal equations with a condition check on the Gram matrix.
FitResult fit_mlr(std::span<const RatingSample> samples, bool with_intercept = false);

double predict(const UciqeCoefficients& coeffs, double sigma_c, double con_l,
               double mu_s);
double predict(const FitResult& fit, const RatingSample& sample);

struct HoldoutResult {
    FitResult fit;                                // trained on the train split
    std::vector<std::pair<double, double>> pairs; // (actual, predicted) per test row
    double r_squared = 0.0;                       // agreement on the test split
};

/// Deterministic seeded shuffle; the first floor(fraction*n) rows become the
/// test split and the rest train the model.
HoldoutResult holdout_eval(std::span<const RatingSample> samples,
                           double split_fraction, std::uint64_t seed,
                           bool with_intercept = false);

/// Loads a ratings CSV. Header is either "path,score" (features computed by
/// scoring each image; repeated paths have their scores averaged) or
/// "sigma_c,con_l,mu_s,score" (precomputed features). Relative image paths
/// resolve against the CSV's directory.
std::vector<RatingSample> load_ratings_csv(const std::string& path);

std::string fit_result_json(const FitResult& fit, const HoldoutResult* holdout);

} // namespace uwe
