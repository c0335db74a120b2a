#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "core/calib.hpp"
#include "core/error.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"

using uwe::FitResult;
using uwe::RatingSample;
using uwe::UciqeCoefficients;

namespace {

// Rows whose noiseless scores follow the default coefficients and stay inside
// the 1..5 opinion scale (rejection sampling keeps it deterministic).
std::vector<RatingSample> synthetic_rows(std::size_t count, std::uint64_t seed,
                                         double noise = 0.0) {
    const UciqeCoefficients coeffs;
    synth::Rng rng{seed};
    std::vector<RatingSample> rows;
    while (rows.size() < count) {
        RatingSample s;
        s.sigma_c = rng.uniform(2.0, 25.0);
        s.con_l = rng.uniform(10.0, 90.0);
        s.mu_s = rng.uniform(0.0, 1.0);
        s.score = uwe::predict(coeffs, s.sigma_c, s.con_l, s.mu_s);
        if (noise > 0.0)
            s.score += rng.uniform(-noise, noise);
        if (s.score >= 1.0 && s.score <= 5.0)
            rows.push_back(s);
    }
    return rows;
}

} // namespace

TEST_CASE("fit_mlr recovers the generating coefficients exactly") {
    const std::vector<RatingSample> rows = synthetic_rows(155, 7001);
    const FitResult fit = uwe::fit_mlr(rows);
    CHECK(std::abs(fit.coeffs.c1 - 0.1654) < 1e-9);
    CHECK(std::abs(fit.coeffs.c2 - 0.0324) < 1e-9);
    CHECK(std::abs(fit.coeffs.c3 - (-0.1365)) < 1e-9);
    CHECK(fit.r_squared > 1.0 - 1e-12);
    CHECK(fit.residuals.size() == rows.size());
    for (double r : fit.residuals)
        CHECK(std::abs(r) < 1e-9);
}

TEST_CASE("fit_mlr error paths") {
    SUBCASE("too few samples") {
        const std::vector<RatingSample> rows = {{1, 2, 0.5, 2.0}, {2, 3, 0.4, 2.5}};
        CHECK_THROWS_AS(uwe::fit_mlr(rows), uwe::Error);
    }
    SUBCASE("identical feature rows are singular") {
        std::vector<RatingSample> rows(10, RatingSample{3.0, 40.0, 0.5, 2.0});
        try {
            uwe::fit_mlr(rows);
            FAIL("expected singular design");
        } catch (const uwe::Error& e) {
            CHECK(e.code() == uwe::Errc::singular_design);
        }
    }
    SUBCASE("collinear columns are singular") {
        synth::Rng rng{7003};
        std::vector<RatingSample> rows;
        for (int i = 0; i < 12; ++i) {
            const double v = rng.uniform(1.0, 10.0);
            rows.push_back({v, 2.0 * v, 0.5 * v, 3.0});
        }
        CHECK_THROWS_AS(uwe::fit_mlr(rows), uwe::Error);
    }
}

TEST_CASE("fit_mlr agrees with the Cramer-rule oracle on noisy data") {
    const std::vector<RatingSample> rows = synthetic_rows(155, 7005, 0.05);
    const FitResult fit = uwe::fit_mlr(rows);

    std::vector<std::array<double, 3>> features;
    std::vector<double> scores;
    for (const RatingSample& s : rows) {
        features.push_back({s.sigma_c, s.con_l, s.mu_s});
        scores.push_back(s.score);
    }
    const std::vector<double> beta = oracles::ols_cramer(features, scores);
    CHECK(std::abs(fit.coeffs.c1 - beta[0]) < 1e-9);
    CHECK(std::abs(fit.coeffs.c2 - beta[1]) < 1e-9);
    CHECK(std::abs(fit.coeffs.c3 - beta[2]) < 1e-9);
}

TEST_CASE("fit properties") {
    const std::vector<RatingSample> rows = synthetic_rows(60, 7007, 0.1);

    SUBCASE("scale equivariance in the response") {
        const FitResult base = uwe::fit_mlr(rows);
        std::vector<RatingSample> scaled = rows;
        // Scores leave [1,5] here; fit_mlr itself does not revalidate ranges.
        for (RatingSample& s : scaled)
            s.score *= 2.0;
        const FitResult doubled = uwe::fit_mlr(scaled);
        CHECK(doubled.coeffs.c1 == doctest::Approx(2.0 * base.coeffs.c1).epsilon(1e-9));
        CHECK(doubled.coeffs.c2 == doctest::Approx(2.0 * base.coeffs.c2).epsilon(1e-9));
        CHECK(doubled.coeffs.c3 == doctest::Approx(2.0 * base.coeffs.c3).epsilon(1e-9));
    }
    SUBCASE("residuals are orthogonal to every feature column") {
        const FitResult fit = uwe::fit_mlr(rows);
        double dot_sigma = 0.0, dot_con = 0.0, dot_mu = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            dot_sigma += fit.residuals[i] * rows[i].sigma_c;
            dot_con += fit.residuals[i] * rows[i].con_l;
            dot_mu += fit.residuals[i] * rows[i].mu_s;
        }
        CHECK(std::abs(dot_sigma) < 1e-8);
        CHECK(std::abs(dot_con) < 1e-8);
        CHECK(std::abs(dot_mu) < 1e-8);
    }
    SUBCASE("predict is linear in the features") {
        const UciqeCoefficients c{0.3, -0.2, 0.7};
        const double f1[3] = {1.0, 2.0, 3.0};
        const double f2[3] = {-2.0, 0.5, 1.0};
        const double alpha = 1.7, beta = -0.4;
        const double combined =
            uwe::predict(c, alpha * f1[0] + beta * f2[0], alpha * f1[1] + beta * f2[1],
                         alpha * f1[2] + beta * f2[2]);
        const double split = alpha * uwe::predict(c, f1[0], f1[1], f1[2]) +
                             beta * uwe::predict(c, f2[0], f2[1], f2[2]);
        CHECK(combined == doctest::Approx(split).epsilon(1e-12));
    }
}

TEST_CASE("predict basics") {
    const UciqeCoefficients coeffs;
    CHECK(uwe::predict(coeffs, 0.0, 0.0, 0.0) == 0.0);
    CHECK(uwe::predict(coeffs, 10.0, 50.0, 0.5) ==
          doctest::Approx(3.20575).epsilon(1e-12));

    const std::vector<RatingSample> rows = synthetic_rows(40, 7011, 0.05);
    const FitResult fit = uwe::fit_mlr(rows);
    for (std::size_t i = 0; i < rows.size(); ++i)
        CHECK(rows[i].score - uwe::predict(fit, rows[i]) ==
              doctest::Approx(fit.residuals[i]).epsilon(1e-12));
}

TEST_CASE("fit_mlr with an intercept recovers an offset model") {
    const UciqeCoefficients truth;
    synth::Rng rng{7031};
    std::vector<RatingSample> rows;
    while (rows.size() < 80) {
        RatingSample s;
        s.sigma_c = rng.uniform(2.0, 20.0);
        s.con_l = rng.uniform(10.0, 60.0);
        s.mu_s = rng.uniform(0.0, 1.0);
        s.score = 0.75 + uwe::predict(truth, s.sigma_c, s.con_l, s.mu_s);
        if (s.score >= 1.0 && s.score <= 5.0)
            rows.push_back(s);
    }
    const FitResult fit = uwe::fit_mlr(rows, true);
    CHECK(fit.has_intercept);
    CHECK(std::abs(fit.intercept - 0.75) < 1e-9);
    CHECK(std::abs(fit.coeffs.c1 - truth.c1) < 1e-9);
    CHECK(std::abs(fit.coeffs.c2 - truth.c2) < 1e-9);
    CHECK(std::abs(fit.coeffs.c3 - truth.c3) < 1e-9);
    CHECK(fit.r_squared > 1.0 - 1e-12);

    // Without the intercept the offset contaminates the coefficients.
    const FitResult flat = uwe::fit_mlr(rows, false);
    CHECK(std::abs(flat.coeffs.c1 - truth.c1) > 1e-6);
}

TEST_CASE("holdout_eval") {
    SUBCASE("noiseless data lands on the identity line") {
        const std::vector<RatingSample> rows = synthetic_rows(155, 7013);
        const uwe::HoldoutResult holdout = uwe::holdout_eval(rows, 0.25, 99);
        CHECK(!holdout.pairs.empty());
        for (const auto& [actual, predicted] : holdout.pairs)
            CHECK(std::abs(actual - predicted) < 1e-9);
        CHECK(holdout.r_squared > 1.0 - 1e-12);
    }
    SUBCASE("same seed twice gives identical splits and pairs") {
        const std::vector<RatingSample> rows = synthetic_rows(80, 7017, 0.2);
        const uwe::HoldoutResult a = uwe::holdout_eval(rows, 0.3, 1234);
        const uwe::HoldoutResult b = uwe::holdout_eval(rows, 0.3, 1234);
        REQUIRE(a.pairs.size() == b.pairs.size());
        for (std::size_t i = 0; i < a.pairs.size(); ++i) {
            CHECK(a.pairs[i].first == b.pairs[i].first);
            CHECK(a.pairs[i].second == b.pairs[i].second);
        }
        const uwe::HoldoutResult c = uwe::holdout_eval(rows, 0.3, 1235);
        bool any_difference = c.pairs.size() != a.pairs.size();
        for (std::size_t i = 0; !any_difference && i < a.pairs.size(); ++i)
            any_difference = a.pairs[i] != c.pairs[i];
        CHECK(any_difference);
    }
    SUBCASE("r_squared matches the independent formula") {
        const std::vector<RatingSample> rows = synthetic_rows(120, 7019, 0.3);
        const uwe::HoldoutResult holdout = uwe::holdout_eval(rows, 0.25, 4321);
        std::vector<double> actual, predicted;
        for (const auto& [a, p] : holdout.pairs) {
            actual.push_back(a);
            predicted.push_back(p);
        }
        CHECK(std::abs(holdout.r_squared -
                       oracles::r_squared_naive(actual, predicted)) < 1e-9);
    }
    SUBCASE("degenerate splits are rejected") {
        const std::vector<RatingSample> rows = synthetic_rows(10, 7023);
        CHECK_THROWS_AS(uwe::holdout_eval(rows, 0.05, 1), uwe::Error);
        CHECK_THROWS_AS(uwe::holdout_eval(rows, 1.5, 1), uwe::Error);
    }
}

TEST_CASE("ratings CSV") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "uwe-calib-test";
    fs::create_directories(dir);

    SUBCASE("feature rows load directly") {
        const fs::path csv = dir / "features.csv";
        std::ofstream(csv) << "sigma_c,con_l,mu_s,score\n"
                              "10.0,50.0,0.5,3.2\n"
                              "5.0,20.0,0.1,1.5\n";
        const std::vector<RatingSample> rows = uwe::load_ratings_csv(csv.string());
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].sigma_c == 10.0);
        CHECK(rows[1].score == 1.5);
    }
    SUBCASE("malformed rows name the line") {
        const fs::path csv = dir / "broken.csv";
        std::ofstream(csv) << "sigma_c,con_l,mu_s,score\n"
                              "10.0,50.0,0.5,3.2\n"
                              "oops,1,2,3\n";
        try {
            uwe::load_ratings_csv(csv.string());
            FAIL("expected parse error");
        } catch (const uwe::Error& e) {
            CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        }
    }
    SUBCASE("scores outside 1..5 are rejected") {
        const fs::path csv = dir / "range.csv";
        std::ofstream(csv) << "sigma_c,con_l,mu_s,score\n"
                              "10.0,50.0,0.5,6.0\n";
        CHECK_THROWS_AS(uwe::load_ratings_csv(csv.string()), uwe::Error);
    }
    SUBCASE("path rows score images and average repeats") {
        const fs::path frame = dir / "frame.pnm";
        uwe::write_pnm_file(synth::textured_card(32, 32, 31415), frame.string());
        const fs::path csv = dir / "paths.csv";
        std::ofstream(csv) << "path,score\n"
                           << "frame.pnm,2.0\n"    // relative to the CSV dir
                           << "frame.pnm,4.0\n";
        const std::vector<RatingSample> rows = uwe::load_ratings_csv(csv.string());
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].score == doctest::Approx(3.0).epsilon(1e-12));
        const uwe::QualityReport expect =
            uwe::uciqe(uwe::read_pnm_file(frame.string()));
        CHECK(rows[0].sigma_c == expect.sigma_c);
        CHECK(rows[0].con_l == expect.con_l);
        CHECK(rows[0].mu_s == expect.mu_s);
    }

    fs::remove_all(dir);
}
