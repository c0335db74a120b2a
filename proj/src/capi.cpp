#include "uwe.h"

#include <cmath>
#include <cstring>
#include <new>
#include <string>

#include <json.hpp>

#include "core/calib.hpp"
#include "core/dehaze.hpp"
#include "core/error.hpp"
#include "core/features.hpp"
#include "core/gate.hpp"
#include "core/image.hpp"
#include "core/quality.hpp"

struct uwe_image {
    uwe::ImageBuffer buffer;
};

struct uwe_gate_config {
    uwe::GateConfig config;
};

struct uwe_gate_outcome {
    uwe::GateOutcome outcome;
    uwe_image final_image;
};

namespace {

thread_local std::string t_last_error;

uwe_status status_from(uwe::Errc code) {
    switch (code) {
    case uwe::Errc::invalid_argument: return UWE_ERR_INVALID_ARGUMENT;
    case uwe::Errc::io: return UWE_ERR_IO;
    case uwe::Errc::unsupported_format: return UWE_ERR_UNSUPPORTED_FORMAT;
    case uwe::Errc::truncated_payload: return UWE_ERR_TRUNCATED_PAYLOAD;
    case uwe::Errc::channel_mismatch: return UWE_ERR_CHANNEL_MISMATCH;
    case uwe::Errc::dimension_mismatch: return UWE_ERR_DIMENSION_MISMATCH;
    case uwe::Errc::too_small: return UWE_ERR_TOO_SMALL;
    case uwe::Errc::degenerate_airlight: return UWE_ERR_DEGENERATE_AIRLIGHT;
    case uwe::Errc::insufficient_data: return UWE_ERR_INSUFFICIENT_DATA;
    case uwe::Errc::singular_design: return UWE_ERR_SINGULAR_DESIGN;
    case uwe::Errc::empty_split: return UWE_ERR_EMPTY_SPLIT;
    case uwe::Errc::degenerate_labels: return UWE_ERR_DEGENERATE_LABELS;
    case uwe::Errc::enhancer_failed: return UWE_ERR_ENHANCER_FAILED;
    case uwe::Errc::parse: return UWE_ERR_PARSE;
    }
    return UWE_ERR_UNKNOWN;
}

template <typename Fn>
uwe_status guarded(Fn&& fn) {
    try {
        fn();
        t_last_error.clear();
        return UWE_OK;
    } catch (const uwe::Error& e) {
        t_last_error = e.what();
        return status_from(e.code());
    } catch (const std::bad_alloc&) {
        t_last_error = "out of memory";
        return UWE_ERR_UNKNOWN;
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return UWE_ERR_UNKNOWN;
    }
}

uwe_status fail_argument(const char* message) {
    t_last_error = message;
    return UWE_ERR_INVALID_ARGUMENT;
}

char* copy_string(const std::string& text) {
    char* out = new char[text.size() + 1];
    std::memcpy(out, text.c_str(), text.size() + 1);
    return out;
}

uwe::UciqeCoefficients coeffs_from(const uwe_uciqe_coeffs* c) {
    if (c == nullptr)
        return {};
    return {c->c1, c->c2, c->c3};
}

uwe::DehazeParams dehaze_from(const uwe_dehaze_params* p) {
    if (p == nullptr)
        return {};
    uwe::DehazeParams params;
    params.patch_radius = p->patch_radius;
    params.omega = p->omega;
    params.t_floor = p->t_floor;
    params.airlight_fraction = p->airlight_fraction;
    params.guided_radius = p->guided_radius;
    params.guided_eps = p->guided_eps;
    params.channel_set = p->channel_set == UWE_CHANNELS_GREEN_BLUE
                             ? uwe::ChannelSet::green_blue
                             : uwe::ChannelSet::all_rgb;
    return params;
}

uwe::FeatureConfig features_from(const uwe_feature_config* c) {
    if (c == nullptr)
        return {};
    uwe::FeatureConfig config;
    config.n_features = c->n_features;
    config.fast_threshold = c->fast_threshold;
    config.levels = c->levels;
    config.scale_factor = c->scale_factor;
    config.match_ratio = c->match_ratio;
    return config;
}

} // namespace

extern "C" {

const char* uwe_status_name(uwe_status status) {
    switch (status) {
    case UWE_OK: return "ok";
    case UWE_ERR_INVALID_ARGUMENT: return "invalid argument";
    case UWE_ERR_IO: return "i/o failure";
    case UWE_ERR_UNSUPPORTED_FORMAT: return "unsupported format";
    case UWE_ERR_TRUNCATED_PAYLOAD: return "truncated payload";
    case UWE_ERR_CHANNEL_MISMATCH: return "channel mismatch";
    case UWE_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
    case UWE_ERR_TOO_SMALL: return "input too small";
    case UWE_ERR_DEGENERATE_AIRLIGHT: return "degenerate airlight";
    case UWE_ERR_INSUFFICIENT_DATA: return "insufficient data";
    case UWE_ERR_SINGULAR_DESIGN: return "singular design matrix";
    case UWE_ERR_EMPTY_SPLIT: return "empty split";
    case UWE_ERR_DEGENERATE_LABELS: return "degenerate labels";
    case UWE_ERR_ENHANCER_FAILED: return "enhancer failed";
    case UWE_ERR_PARSE: return "parse error";
    case UWE_ERR_UNKNOWN: return "unknown error";
    }
    return "unknown error";
}

const char* uwe_version(void) { return "1.0.0"; }

const char* uwe_last_error(void) { return t_last_error.c_str(); }

uwe_status uwe_image_decode_pnm(const uint8_t* bytes, size_t size, uwe_image** out) {
    if (out == nullptr)
        return fail_argument("out pointer is null");
    *out = nullptr;
    return guarded([&] {
        *out = new uwe_image{uwe::decode_pnm(bytes, size)};
    });
}

uwe_status uwe_image_encode_pnm(const uwe_image* img, uint8_t** out_bytes,
                                size_t* out_size) {
    if (img == nullptr || out_bytes == nullptr || out_size == nullptr)
        return fail_argument("null argument");
    *out_bytes = nullptr;
    *out_size = 0;
    return guarded([&] {
        const std::vector<uint8_t> bytes = uwe::encode_pnm(img->buffer);
        uint8_t* buf = new uint8_t[bytes.size()];
        std::memcpy(buf, bytes.data(), bytes.size());
        *out_bytes = buf;
        *out_size = bytes.size();
    });
}

uwe_status uwe_image_read_file(const char* path, uwe_image** out) {
    if (path == nullptr || out == nullptr)
        return fail_argument("null argument");
    *out = nullptr;
    return guarded([&] {
        *out = new uwe_image{uwe::read_pnm_file(path)};
    });
}

uwe_status uwe_image_write_file(const uwe_image* img, const char* path) {
    if (img == nullptr || path == nullptr)
        return fail_argument("null argument");
    return guarded([&] { uwe::write_pnm_file(img->buffer, path); });
}

uwe_status uwe_image_clone(const uwe_image* img, uwe_image** out) {
    if (img == nullptr || out == nullptr)
        return fail_argument("null argument");
    *out = nullptr;
    return guarded([&] { *out = new uwe_image{img->buffer}; });
}

void uwe_image_free(uwe_image* img) { delete img; }

int uwe_image_width(const uwe_image* img) {
    return img == nullptr ? 0 : img->buffer.width();
}

int uwe_image_height(const uwe_image* img) {
    return img == nullptr ? 0 : img->buffer.height();
}

int uwe_image_channels(const uwe_image* img) {
    return img == nullptr ? 0 : img->buffer.channels();
}

void uwe_bytes_free(uint8_t* bytes) { delete[] bytes; }

void uwe_string_free(char* text) { delete[] text; }

void uwe_dehaze_params_defaults(uwe_dehaze_params* params) {
    if (params == nullptr)
        return;
    const uwe::DehazeParams d;
    params->patch_radius = d.patch_radius;
    params->omega = d.omega;
    params->t_floor = d.t_floor;
    params->airlight_fraction = d.airlight_fraction;
    params->guided_radius = d.guided_radius;
    params->guided_eps = d.guided_eps;
    params->channel_set = UWE_CHANNELS_ALL_RGB;
}

uwe_status uwe_enhance(const uwe_image* img, const uwe_dehaze_params* params,
                       int method, uwe_image** out) {
    if (img == nullptr || out == nullptr)
        return fail_argument("null argument");
    if (method != UWE_METHOD_DCP && method != UWE_METHOD_UDCP)
        return fail_argument("method must be UWE_METHOD_DCP or UWE_METHOD_UDCP");
    *out = nullptr;
    return guarded([&] {
        const uwe::DehazeParams p = dehaze_from(params);
        *out = new uwe_image{method == UWE_METHOD_DCP
                                 ? uwe::enhance_dcp(img->buffer, p)
                                 : uwe::enhance_udcp(img->buffer, p)};
    });
}

void uwe_uciqe_coeffs_defaults(uwe_uciqe_coeffs* coeffs) {
    if (coeffs == nullptr)
        return;
    const uwe::UciqeCoefficients d;
    coeffs->c1 = d.c1;
    coeffs->c2 = d.c2;
    coeffs->c3 = d.c3;
}

uwe_status uwe_score(const uwe_image* img, const uwe_image* ref,
                     const uwe_uciqe_coeffs* coeffs, uwe_quality_report* out) {
    if (img == nullptr || out == nullptr)
        return fail_argument("null argument");
    return guarded([&] {
        uwe::QualityReport report = uwe::uciqe(img->buffer, coeffs_from(coeffs));
        if (ref != nullptr) {
            report.psnr = uwe::psnr(img->buffer, ref->buffer);
            const uwe::ImageBuffer ga = img->buffer.channels() == 3
                                            ? uwe::to_grayscale(img->buffer)
                                            : img->buffer;
            const uwe::ImageBuffer gb = ref->buffer.channels() == 3
                                            ? uwe::to_grayscale(ref->buffer)
                                            : ref->buffer;
            report.ssim = uwe::ssim(ga, gb).mean;
        }
        out->sigma_c = report.sigma_c;
        out->con_l = report.con_l;
        out->mu_s = report.mu_s;
        out->uciqe = report.uciqe;
        out->has_psnr = report.psnr.has_value() ? 1 : 0;
        out->psnr = report.psnr.value_or(0.0);
        out->has_ssim = report.ssim.has_value() ? 1 : 0;
        out->ssim = report.ssim.value_or(0.0);
    });
}

uwe_status uwe_quality_report_json(const uwe_quality_report* report, char** out_json) {
    if (report == nullptr || out_json == nullptr)
        return fail_argument("null argument");
    *out_json = nullptr;
    return guarded([&] {
        uwe::QualityReport r;
        r.sigma_c = report->sigma_c;
        r.con_l = report->con_l;
        r.mu_s = report->mu_s;
        r.uciqe = report->uciqe;
        if (report->has_psnr)
            r.psnr = report->psnr;
        if (report->has_ssim)
            r.ssim = report->ssim;
        *out_json = copy_string(uwe::quality_report_json(r));
    });
}

uwe_status uwe_gate_config_from_json(const char* json_text, uwe_gate_config** out) {
    if (json_text == nullptr || out == nullptr)
        return fail_argument("null argument");
    *out = nullptr;
    return guarded([&] {
        *out = new uwe_gate_config{uwe::gate_config_from_json(json_text)};
    });
}

uwe_status uwe_gate_config_read_file(const char* path, uwe_gate_config** out) {
    if (path == nullptr || out == nullptr)
        return fail_argument("null argument");
    *out = nullptr;
    return guarded([&] {
        *out = new uwe_gate_config{uwe::load_gate_config(path)};
    });
}

void uwe_gate_config_free(uwe_gate_config* config) { delete config; }

uwe_status uwe_run_gate(const uwe_image* img, const uwe_gate_config* config,
                        uwe_gate_outcome** out) {
    if (img == nullptr || config == nullptr || out == nullptr)
        return fail_argument("null argument");
    *out = nullptr;
    return guarded([&] {
        auto* outcome = new uwe_gate_outcome{
            uwe::run_gate(img->buffer, config->config), {}};
        outcome->final_image.buffer = outcome->outcome.final;
        *out = outcome;
    });
}

const uwe_image* uwe_gate_outcome_image(const uwe_gate_outcome* outcome) {
    return outcome == nullptr ? nullptr : &outcome->final_image;
}

uwe_status uwe_gate_outcome_json(const uwe_gate_outcome* outcome, char** out_json) {
    if (outcome == nullptr || out_json == nullptr)
        return fail_argument("null argument");
    *out_json = nullptr;
    return guarded([&] {
        *out_json = copy_string(uwe::gate_outcome_json(outcome->outcome));
    });
}

void uwe_gate_outcome_free(uwe_gate_outcome* outcome) { delete outcome; }

uwe_status uwe_calibrate_tau(const double* scores, const int* is_clear,
                             size_t count, double* out_tau) {
    if (scores == nullptr || is_clear == nullptr || out_tau == nullptr)
        return fail_argument("null argument");
    return guarded([&] {
        std::vector<std::pair<double, bool>> scored(count);
        for (size_t i = 0; i < count; ++i)
            scored[i] = {scores[i], is_clear[i] != 0};
        *out_tau = uwe::calibrate_tau(scored);
    });
}

uwe_status uwe_fit_csv_json(const char* csv_path, double holdout_fraction,
                            uint64_t seed, int with_intercept, char** out_json) {
    if (csv_path == nullptr || out_json == nullptr)
        return fail_argument("null argument");
    *out_json = nullptr;
    return guarded([&] {
        const std::vector<uwe::RatingSample> samples =
            uwe::load_ratings_csv(csv_path);
        const uwe::FitResult fit = uwe::fit_mlr(samples, with_intercept != 0);
        if (holdout_fraction > 0.0) {
            const uwe::HoldoutResult holdout = uwe::holdout_eval(
                samples, holdout_fraction, seed, with_intercept != 0);
            *out_json = copy_string(uwe::fit_result_json(fit, &holdout));
        } else {
            *out_json = copy_string(uwe::fit_result_json(fit, nullptr));
        }
    });
}

void uwe_feature_config_defaults(uwe_feature_config* config) {
    if (config == nullptr)
        return;
    const uwe::FeatureConfig d;
    config->n_features = d.n_features;
    config->fast_threshold = d.fast_threshold;
    config->levels = d.levels;
    config->scale_factor = d.scale_factor;
    config->match_ratio = d.match_ratio;
}

uwe_status uwe_match_report_json(const uwe_image* a, const uwe_image* b,
                                 const uwe_feature_config* config, char** out_json) {
    if (a == nullptr || b == nullptr || out_json == nullptr)
        return fail_argument("null argument");
    *out_json = nullptr;
    return guarded([&] {
        const uwe::MatchReport report =
            uwe::match_count_report(a->buffer, b->buffer, features_from(config));
        *out_json = copy_string(uwe::match_report_json(report));
    });
}

uwe_status uwe_bench_report_json(const double* durations_seconds, size_t count,
                                 const char* method, const char* platform_note,
                                 char** out_json) {
    if (durations_seconds == nullptr && count > 0)
        return fail_argument("durations pointer is null");
    if (out_json == nullptr)
        return fail_argument("out pointer is null");
    *out_json = nullptr;
    return guarded([&] {
        if (count == 0)
            uwe::raise(uwe::Errc::insufficient_data, "no durations recorded");
        double mean = 0.0;
        for (size_t i = 0; i < count; ++i)
            mean += durations_seconds[i];
        mean /= static_cast<double>(count);
        double var = 0.0;
        for (size_t i = 0; i < count; ++i) {
            const double d = durations_seconds[i] - mean;
            var += d * d;
        }
        var /= static_cast<double>(count);

        nlohmann::json j;
        j["method"] = method == nullptr ? "" : method;
        j["platform"] = platform_note == nullptr ? "" : platform_note;
        j["count"] = count;
        j["mean_seconds"] = mean;
        j["std_seconds"] = std::sqrt(var);
        j["durations_seconds"] =
            std::vector<double>(durations_seconds, durations_seconds + count);
        // Published per-frame GAN enhancement times, kept as context only.
        j["reference_context"] = {
            {"note", "per-frame GAN enhancement means reported on other platforms"},
            {"linux_laptop_seconds", 0.031761},
            {"raspberry_pi_seconds", 0.077947},
            {"nvidia_xavier_seconds", 0.04984},
        };
        *out_json = copy_string(j.dump());
    });
}

} // extern "C"
