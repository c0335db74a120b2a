#include "core/calib.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "core/error.hpp"

namespace uwe {

namespace {

constexpr double kConditionLimit = 1e12;

// Dense symmetric solve with an explicit inverse so the 1-norm condition
// estimate falls out for free; n is at most 4.
struct SmallSystem {
    int n = 0;
    double a[4][4] = {};
    double rhs[4] = {};

    // Returns the solution, or raises singular_design when the Gram matrix is
    // numerically rank-deficient.
    std::vector<double> solve_checked() const {
        double inv[4][4] = {};
        double work[4][8] = {};
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j)
                work[i][j] = a[i][j];
            work[i][n + i] = 1.0;
        }
        for (int col = 0; col < n; ++col) {
            int pivot = col;
            for (int r = col + 1; r < n; ++r)
                if (std::abs(work[r][col]) > std::abs(work[pivot][col]))
                    pivot = r;
            if (std::abs(work[pivot][col]) == 0.0)
                raise(Errc::singular_design, "design matrix is rank deficient");
            if (pivot != col)
                for (int c = 0; c < 2 * n; ++c)
                    std::swap(work[pivot][c], work[col][c]);
            const double d = work[col][col];
            for (int c = 0; c < 2 * n; ++c)
                work[col][c] /= d;
            for (int r = 0; r < n; ++r) {
                if (r == col)
                    continue;
                const double f = work[r][col];
                for (int c = 0; c < 2 * n; ++c)
                    work[r][c] -= f * work[col][c];
            }
        }
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                inv[i][j] = work[i][n + j];

        double norm_a = 0.0;
        double norm_inv = 0.0;
        for (int j = 0; j < n; ++j) {
            double col_a = 0.0;
            double col_inv = 0.0;
            for (int i = 0; i < n; ++i) {
                col_a += std::abs(a[i][j]);
                col_inv += std::abs(inv[i][j]);
            }
            norm_a = std::max(norm_a, col_a);
            norm_inv = std::max(norm_inv, col_inv);
        }
        if (!(norm_a * norm_inv < kConditionLimit))
            raise(Errc::singular_design, "design matrix is ill-conditioned");

        std::vector<double> x(n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                x[i] += inv[i][j] * rhs[j];
        return x;
    }
};

double r_squared_of(std::span<const double> actual, std::span<const double> predicted) {
    double mean = 0.0;
    for (double v : actual)
        mean += v;
    mean /= static_cast<double>(actual.size());
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double r = actual[i] - predicted[i];
        const double d = actual[i] - mean;
        ss_res += r * r;
        ss_tot += d * d;
    }
    if (ss_tot == 0.0)
        return ss_res == 0.0 ? 1.0 : 0.0;
    return 1.0 - ss_res / ss_tot;
}

struct SplitMix64 {
    std::uint64_t state;

    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

} // namespace

FitResult fit_mlr(std::span<const RatingSample> samples, bool with_intercept) {
    if (samples.size() < 3)
        raise(Errc::insufficient_data, "need at least 3 rating samples");

    const int k = with_intercept ? 4 : 3;
    SmallSystem sys;
    sys.n = k;
    const auto feature = [&](const RatingSample& s, int j) -> double {
        switch (j) {
        case 0: return s.sigma_c;
        case 1: return s.con_l;
        case 2: return s.mu_s;
        default: return 1.0;
        }
    };
    for (const RatingSample& s : samples) {
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j < k; ++j)
                sys.a[i][j] += feature(s, i) * feature(s, j);
            sys.rhs[i] += feature(s, i) * s.score;
        }
    }
    const std::vector<double> beta = sys.solve_checked();

    FitResult result;
    result.coeffs = {beta[0], beta[1], beta[2]};
    result.has_intercept = with_intercept;
    result.intercept = with_intercept ? beta[3] : 0.0;

    std::vector<double> actual(samples.size());
    std::vector<double> fitted(samples.size());
    result.residuals.resize(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        actual[i] = samples[i].score;
        fitted[i] = predict(result, samples[i]);
        result.residuals[i] = actual[i] - fitted[i];
    }
    result.r_squared = r_squared_of(actual, fitted);
    return result;
}

double predict(const UciqeCoefficients& coeffs, double sigma_c, double con_l,
               double mu_s) {
    return coeffs.c1 * sigma_c + coeffs.c2 * con_l + coeffs.c3 * mu_s;
}

double predict(const FitResult& fit, const RatingSample& sample) {
    return predict(fit.coeffs, sample.sigma_c, sample.con_l, sample.mu_s) +
           (fit.has_intercept ? fit.intercept : 0.0);
}

HoldoutResult holdout_eval(std::span<const RatingSample> samples,
                           double split_fraction, std::uint64_t seed,
                           bool with_intercept) {
    if (!(split_fraction > 0.0 && split_fraction < 1.0))
        raise(Errc::invalid_argument, "split fraction must be in (0,1)");

    const std::size_t n = samples.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    SplitMix64 rng{seed};
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng.next() % i;
        std::swap(order[i - 1], order[j]);
    }

    const std::size_t n_test =
        static_cast<std::size_t>(split_fraction * static_cast<double>(n));
    if (n_test == 0 || n_test >= n)
        raise(Errc::empty_split, "holdout split leaves an empty train or test set");

    std::vector<RatingSample> train;
    train.reserve(n - n_test);
    for (std::size_t i = n_test; i < n; ++i)
        train.push_back(samples[order[i]]);

    HoldoutResult result;
    result.fit = fit_mlr(train, with_intercept);

    std::vector<double> actual(n_test);
    std::vector<double> predicted(n_test);
    result.pairs.reserve(n_test);
    for (std::size_t i = 0; i < n_test; ++i) {
        const RatingSample& s = samples[order[i]];
        actual[i] = s.score;
        predicted[i] = predict(result.fit, s);
        result.pairs.emplace_back(actual[i], predicted[i]);
    }
    result.r_squared = r_squared_of(actual, predicted);
    return result;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ','))
        fields.push_back(field);
    if (!line.empty() && line.back() == ',')
        fields.emplace_back();
    return fields;
}

double parse_double(const std::string& text, std::size_t line_no) {
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        raise(Errc::parse, "ratings CSV line " + std::to_string(line_no) +
                               ": '" + text + "' is not a number");
    }
    while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used])))
        ++used;
    if (used != text.size() || !std::isfinite(value))
        raise(Errc::parse, "ratings CSV line " + std::to_string(line_no) +
                               ": '" + text + "' is not a number");
    return value;
}

double checked_score(double value, std::size_t line_no) {
    if (!(value >= 1.0 && value <= 5.0))
        raise(Errc::parse, "ratings CSV line " + std::to_string(line_no) +
                               ": score must be in [1,5]");
    return value;
}

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
        ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
        --e;
    return s.substr(b, e - b);
}

} // namespace

std::vector<RatingSample> load_ratings_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        raise(Errc::io, "cannot open ratings file '" + path + "'");

    std::string line;
    if (!std::getline(in, line))
        raise(Errc::parse, "ratings CSV is empty");
    const std::string header = trim(line);
    const bool by_path = header == "path,score";
    if (!by_path && header != "sigma_c,con_l,mu_s,score")
        raise(Errc::parse,
              "ratings CSV header must be 'path,score' or 'sigma_c,con_l,mu_s,score'");

    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    std::vector<RatingSample> samples;
    // Path rows keep insertion order while scores of repeated paths average.
    std::vector<std::string> path_order;
    std::map<std::string, std::pair<double, std::size_t>> path_scores;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty())
            continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (by_path) {
            if (fields.size() != 2)
                raise(Errc::parse, "ratings CSV line " + std::to_string(line_no) +
                                       ": expected 2 fields");
            const std::string image = trim(fields[0]);
            if (image.empty())
                raise(Errc::parse, "ratings CSV line " + std::to_string(line_no) +
                                       ": empty path");
            const double score = checked_score(parse_double(fields[1], line_no), line_no);
            auto [it, inserted] = path_scores.try_emplace(image, 0.0, 0);
            if (inserted)
                path_order.push_back(image);
            it->second.first += score;
            it->second.second += 1;
        } else {
            if (fields.size() != 4)
                raise(Errc::parse, "ratings CSV line " + std::to_string(line_no) +
                                       ": expected 4 fields");
            RatingSample s;
            s.sigma_c = parse_double(fields[0], line_no);
            s.con_l = parse_double(fields[1], line_no);
            s.mu_s = parse_double(fields[2], line_no);
            s.score = checked_score(parse_double(fields[3], line_no), line_no);
            samples.push_back(s);
        }
    }

    if (by_path) {
        for (const std::string& image : path_order) {
            std::filesystem::path p(image);
            if (p.is_relative())
                p = base / p;
            const ImageBuffer img = read_pnm_file(p.string());
            const QualityReport report = uciqe(img);
            const auto& [sum, count] = path_scores.at(image);
            samples.push_back({report.sigma_c, report.con_l, report.mu_s,
                               sum / static_cast<double>(count)});
        }
    }
    return samples;
}

std::string fit_result_json(const FitResult& fit, const HoldoutResult* holdout) {
    nlohmann::json j;
    j["coefficients"] = {{"c1", fit.coeffs.c1},
                         {"c2", fit.coeffs.c2},
                         {"c3", fit.coeffs.c3}};
    if (fit.has_intercept)
        j["intercept"] = fit.intercept;
    j["r_squared"] = fit.r_squared;
    j["residuals"] = fit.residuals;
    if (holdout != nullptr) {
        nlohmann::json pairs = nlohmann::json::array();
        for (const auto& [actual, predicted] : holdout->pairs)
            pairs.push_back({actual, predicted});
        j["holdout"] = {{"r_squared", holdout->r_squared},
                        {"pairs", std::move(pairs)},
                        {"coefficients",
                         {{"c1", holdout->fit.coeffs.c1},
                          {"c2", holdout->fit.coeffs.c2},
                          {"c3", holdout->fit.coeffs.c3}}}};
    }
    return j.dump();
}

} // namespace uwe
