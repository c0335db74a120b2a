// Command-line front end for the uwe shared library: enhance, score, gate,
// fit, match, bench. JSON goes to stdout, diagnostics to stderr.
// Exit codes: 0 success, 1 computation error, 2 usage or I/O error.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "uwe.h"

namespace fs = std::filesystem;

namespace {

struct CliFailure {
    int exit_code;
    std::string message;
};

int exit_code_for(uwe_status status) {
    switch (status) {
    case UWE_ERR_INVALID_ARGUMENT:
    case UWE_ERR_IO:
    case UWE_ERR_UNSUPPORTED_FORMAT:
    case UWE_ERR_TRUNCATED_PAYLOAD:
    case UWE_ERR_PARSE:
        return 2;
    default:
        return 1;
    }
}

void check(uwe_status status) {
    if (status != UWE_OK)
        throw CliFailure{exit_code_for(status), uwe_last_error()};
}

struct Image {
    uwe_image* ptr = nullptr;

    Image() = default;
    explicit Image(uwe_image* p) : ptr(p) {}
    Image(Image&& other) noexcept : ptr(other.ptr) { other.ptr = nullptr; }
    Image& operator=(Image&& other) noexcept {
        if (this != &other) {
            uwe_image_free(ptr);
            ptr = other.ptr;
            other.ptr = nullptr;
        }
        return *this;
    }
    Image(const Image&) = delete;
    Image& operator=(const Image&) = delete;
    ~Image() { uwe_image_free(ptr); }
};

struct JsonString {
    char* ptr = nullptr;
    ~JsonString() { uwe_string_free(ptr); }

    nlohmann::json parse() const { return nlohmann::json::parse(ptr); }
};

Image read_image(const std::string& path) {
    if (!fs::exists(path))
        throw CliFailure{2, "no such file: " + path};
    Image img;
    check(uwe_image_read_file(path.c_str(), &img.ptr));
    return img;
}

// Frame sequences are directories of PNM files processed in filename order.
std::vector<std::string> list_frames(const std::string& dir) {
    std::vector<std::string> names;
    try {
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file())
                continue;
            const std::string ext = entry.path().extension().string();
            if (ext == ".pnm" || ext == ".ppm" || ext == ".pgm")
                names.push_back(entry.path().filename().string());
        }
    } catch (const fs::filesystem_error& e) {
        throw CliFailure{2, std::string("cannot list ") + dir + ": " + e.what()};
    }
    std::sort(names.begin(), names.end());
    return names;
}

// Runs fn(i) for every frame index, optionally across jobs worker threads.
// Each frame is independent; results land in caller-owned slots so output
// order never depends on scheduling.
void for_each_frame(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    const int n = std::min<int>(jobs, static_cast<int>(count));
    workers.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) {
        workers.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1))
                fn(i);
        });
    }
    for (std::thread& worker : workers)
        worker.join();
}

struct FrameOutcome {
    bool failed = false;
    int exit_code = 0;
    std::string message;
    nlohmann::json payload;
};

void rethrow_first_failure(const std::vector<FrameOutcome>& outcomes,
                           const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < outcomes.size(); ++i)
        if (outcomes[i].failed)
            throw CliFailure{outcomes[i].exit_code,
                             names[i] + ": " + outcomes[i].message};
}

uwe_uciqe_coeffs load_coeffs(const std::string& path) {
    if (!fs::exists(path))
        throw CliFailure{2, "no such file: " + path};
    std::ifstream in(path);
    nlohmann::json j;
    try {
        in >> j;
        uwe_uciqe_coeffs coeffs;
        coeffs.c1 = j.at("c1").get<double>();
        coeffs.c2 = j.at("c2").get<double>();
        coeffs.c3 = j.at("c3").get<double>();
        return coeffs;
    } catch (const nlohmann::json::exception& e) {
        throw CliFailure{2, "coefficients file " + path + ": " + e.what()};
    }
}

// ---- enhance ----------------------------------------------------------------

struct EnhanceOptions {
    std::string in_path;
    std::string out_path;
    std::string method = "dcp";
    uwe_dehaze_params params{};
    int jobs = 1;
};

int method_id(const std::string& name) {
    return name == "udcp" ? UWE_METHOD_UDCP : UWE_METHOD_DCP;
}

void enhance_one(const std::string& in, const std::string& out,
                 const EnhanceOptions& opt) {
    const Image src = read_image(in);
    Image dst;
    check(uwe_enhance(src.ptr, &opt.params, method_id(opt.method), &dst.ptr));
    check(uwe_image_write_file(dst.ptr, out.c_str()));
}

int cmd_enhance(const EnhanceOptions& opt) {
    if (fs::is_directory(opt.in_path)) {
        const std::vector<std::string> names = list_frames(opt.in_path);
        if (names.empty())
            throw CliFailure{2, "no PNM frames in " + opt.in_path};
        fs::create_directories(opt.out_path);
        std::vector<FrameOutcome> outcomes(names.size());
        for_each_frame(names.size(), opt.jobs, [&](std::size_t i) {
            try {
                enhance_one((fs::path(opt.in_path) / names[i]).string(),
                            (fs::path(opt.out_path) / names[i]).string(), opt);
            } catch (const CliFailure& e) {
                outcomes[i] = {true, e.exit_code, e.message, {}};
            } catch (const std::exception& e) {
                outcomes[i] = {true, 1, e.what(), {}};
            }
        });
        rethrow_first_failure(outcomes, names);
    } else {
        enhance_one(opt.in_path, opt.out_path, opt);
    }
    return 0;
}

// ---- score --------------------------------------------------------------------

struct ScoreOptions {
    std::string in_path;
    std::string ref_path;
    std::string coeffs_path;
    int jobs = 1;
};

nlohmann::json score_one(const std::string& in, const ScoreOptions& opt,
                         const uwe_uciqe_coeffs* coeffs) {
    const Image img = read_image(in);
    Image ref;
    if (!opt.ref_path.empty())
        ref = read_image(opt.ref_path);
    uwe_quality_report report{};
    check(uwe_score(img.ptr, ref.ptr, coeffs, &report));
    JsonString json;
    check(uwe_quality_report_json(&report, &json.ptr));
    return json.parse();
}

int cmd_score(const ScoreOptions& opt) {
    uwe_uciqe_coeffs coeffs{};
    const uwe_uciqe_coeffs* coeffs_ptr = nullptr;
    if (!opt.coeffs_path.empty()) {
        coeffs = load_coeffs(opt.coeffs_path);
        coeffs_ptr = &coeffs;
    }
    if (fs::is_directory(opt.in_path)) {
        if (!opt.ref_path.empty())
            throw CliFailure{2, "--ref requires a single-file input"};
        const std::vector<std::string> names = list_frames(opt.in_path);
        if (names.empty())
            throw CliFailure{2, "no PNM frames in " + opt.in_path};
        std::vector<FrameOutcome> outcomes(names.size());
        for_each_frame(names.size(), opt.jobs, [&](std::size_t i) {
            try {
                outcomes[i].payload =
                    score_one((fs::path(opt.in_path) / names[i]).string(), opt,
                              coeffs_ptr);
            } catch (const CliFailure& e) {
                outcomes[i] = {true, e.exit_code, e.message, {}};
            } catch (const std::exception& e) {
                outcomes[i] = {true, 1, e.what(), {}};
            }
        });
        rethrow_first_failure(outcomes, names);
        nlohmann::json out = nlohmann::json::array();
        for (std::size_t i = 0; i < names.size(); ++i)
            out.push_back({{"path", names[i]}, {"report", outcomes[i].payload}});
        std::cout << out.dump() << "\n";
    } else {
        std::cout << score_one(opt.in_path, opt, coeffs_ptr).dump() << "\n";
    }
    return 0;
}

// ---- gate ---------------------------------------------------------------------

struct GateOptions {
    std::string in_path;
    std::string out_path;
    std::string config_path;
    int jobs = 1;
};

nlohmann::json gate_one(const std::string& in, const std::string& out,
                        const uwe_gate_config* config) {
    const Image img = read_image(in);
    uwe_gate_outcome* outcome = nullptr;
    check(uwe_run_gate(img.ptr, config, &outcome));
    JsonString json;
    const uwe_status json_status = uwe_gate_outcome_json(outcome, &json.ptr);
    const uwe_status write_status =
        json_status == UWE_OK
            ? uwe_image_write_file(uwe_gate_outcome_image(outcome), out.c_str())
            : json_status;
    uwe_gate_outcome_free(outcome);
    check(json_status);
    check(write_status);
    return json.parse();
}

int cmd_gate(const GateOptions& opt) {
    if (!fs::exists(opt.config_path))
        throw CliFailure{2, "no such file: " + opt.config_path};
    uwe_gate_config* config = nullptr;
    check(uwe_gate_config_read_file(opt.config_path.c_str(), &config));
    try {
        if (fs::is_directory(opt.in_path)) {
            const std::vector<std::string> names = list_frames(opt.in_path);
            if (names.empty())
                throw CliFailure{2, "no PNM frames in " + opt.in_path};
            fs::create_directories(opt.out_path);
            std::vector<FrameOutcome> outcomes(names.size());
            for_each_frame(names.size(), opt.jobs, [&](std::size_t i) {
                try {
                    outcomes[i].payload =
                        gate_one((fs::path(opt.in_path) / names[i]).string(),
                                 (fs::path(opt.out_path) / names[i]).string(),
                                 config);
                } catch (const CliFailure& e) {
                    outcomes[i] = {true, e.exit_code, e.message, {}};
                } catch (const std::exception& e) {
                    outcomes[i] = {true, 1, e.what(), {}};
                }
            });
            rethrow_first_failure(outcomes, names);
            nlohmann::json out = nlohmann::json::array();
            for (std::size_t i = 0; i < names.size(); ++i)
                out.push_back({{"path", names[i]}, {"outcome", outcomes[i].payload}});
            std::cout << out.dump() << "\n";
        } else {
            std::cout << gate_one(opt.in_path, opt.out_path, config).dump() << "\n";
        }
    } catch (...) {
        uwe_gate_config_free(config);
        throw;
    }
    uwe_gate_config_free(config);
    return 0;
}

// ---- fit -----------------------------------------------------------------------

struct FitOptions {
    std::string csv_path;
    double holdout = 0.0;
    std::uint64_t seed = 0;
    bool intercept = false;
};

int cmd_fit(const FitOptions& opt) {
    if (!fs::exists(opt.csv_path))
        throw CliFailure{2, "no such file: " + opt.csv_path};
    JsonString json;
    check(uwe_fit_csv_json(opt.csv_path.c_str(), opt.holdout, opt.seed,
                           opt.intercept ? 1 : 0, &json.ptr));
    std::cout << json.ptr << "\n";
    return 0;
}

// ---- match ---------------------------------------------------------------------

struct MatchOptions {
    std::string a_path;
    std::string b_path;
    uwe_feature_config config{};
};

int cmd_match(const MatchOptions& opt) {
    const Image a = read_image(opt.a_path);
    const Image b = read_image(opt.b_path);
    JsonString json;
    check(uwe_match_report_json(a.ptr, b.ptr, &opt.config, &json.ptr));
    std::cout << json.ptr << "\n";
    return 0;
}

// ---- bench ---------------------------------------------------------------------

struct BenchOptions {
    std::string frames_dir;
    std::string method = "dcp";
    int repeat = 1;
    bool include_io = false;
    std::string platform_note;
    uwe_dehaze_params params{};
};

int cmd_bench(const BenchOptions& opt) {
    if (!fs::is_directory(opt.frames_dir))
        throw CliFailure{2, "no such directory: " + opt.frames_dir};
    const std::vector<std::string> names = list_frames(opt.frames_dir);
    if (names.empty())
        throw CliFailure{2, "no PNM frames in " + opt.frames_dir};

    // Everything is loaded up front so the timed region excludes I/O unless
    // --include-io asks for decode+enhance+encode timings.
    std::vector<std::vector<std::uint8_t>> raw(names.size());
    std::vector<Image> frames(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
        const fs::path path = fs::path(opt.frames_dir) / names[i];
        std::ifstream in(path, std::ios::binary);
        raw[i].assign((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
        check(uwe_image_decode_pnm(raw[i].data(), raw[i].size(), &frames[i].ptr));
    }

    const int method = method_id(opt.method);
    std::vector<double> durations;
    durations.reserve(names.size() * static_cast<std::size_t>(opt.repeat));
    for (int rep = 0; rep < opt.repeat; ++rep) {
        for (std::size_t i = 0; i < names.size(); ++i) {
            const auto start = std::chrono::steady_clock::now();
            Image decoded;
            const uwe_image* input = frames[i].ptr;
            if (opt.include_io) {
                check(uwe_image_decode_pnm(raw[i].data(), raw[i].size(),
                                           &decoded.ptr));
                input = decoded.ptr;
            }
            Image enhanced;
            check(uwe_enhance(input, &opt.params, method, &enhanced.ptr));
            if (opt.include_io) {
                std::uint8_t* bytes = nullptr;
                std::size_t size = 0;
                check(uwe_image_encode_pnm(enhanced.ptr, &bytes, &size));
                uwe_bytes_free(bytes);
            }
            const auto stop = std::chrono::steady_clock::now();
            durations.push_back(
                std::chrono::duration<double>(stop - start).count());
        }
    }

    JsonString json;
    check(uwe_bench_report_json(durations.data(), durations.size(),
                                opt.method.c_str(), opt.platform_note.c_str(),
                                &json.ptr));
    std::cout << json.ptr << "\n";
    return 0;
}

void add_dehaze_flags(CLI::App* cmd, uwe_dehaze_params& params) {
    cmd->add_option("--patch-radius", params.patch_radius,
                    "Dark-channel patch half-width");
    cmd->add_option("--omega", params.omega, "Haze retention factor");
    cmd->add_option("--t-floor", params.t_floor, "Transmission lower bound");
    cmd->add_option("--airlight-fraction", params.airlight_fraction,
                    "Top dark-channel fraction scanned for the airlight");
    cmd->add_option("--guided-radius", params.guided_radius,
                    "Guided filter radius");
    cmd->add_option("--guided-eps", params.guided_eps,
                    "Guided filter regularization");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Underwater frame enhancement, scoring, gating, and matching"};
    app.require_subcommand(1);

    EnhanceOptions enhance_opt;
    uwe_dehaze_params_defaults(&enhance_opt.params);
    CLI::App* enhance = app.add_subcommand(
        "enhance", "Dehaze a frame (or a directory of frames)");
    enhance->add_option("input", enhance_opt.in_path, "Input PNM file or directory")
        ->required();
    enhance->add_option("output", enhance_opt.out_path, "Output PNM file or directory")
        ->required();
    enhance->add_option("--method", enhance_opt.method, "dcp or udcp")
        ->check(CLI::IsMember({"dcp", "udcp"}));
    enhance->add_option("--jobs", enhance_opt.jobs, "Worker threads for directories")
        ->check(CLI::PositiveNumber);
    add_dehaze_flags(enhance, enhance_opt.params);

    ScoreOptions score_opt;
    CLI::App* score = app.add_subcommand(
        "score", "Emit a quality report (UCIQE, optionally PSNR/SSIM) as JSON");
    score->add_option("input", score_opt.in_path, "Input PNM file or directory")
        ->required();
    score->add_option("--ref", score_opt.ref_path,
                      "Reference frame enabling PSNR and SSIM");
    score->add_option("--coeffs", score_opt.coeffs_path,
                      "JSON file with UCIQE coefficients {c1,c2,c3}");
    score->add_option("--jobs", score_opt.jobs, "Worker threads for directories")
        ->check(CLI::PositiveNumber);

    GateOptions gate_opt;
    CLI::App* gate = app.add_subcommand(
        "gate", "Route a frame through the quality gate");
    gate->add_option("input", gate_opt.in_path, "Input PNM file or directory")
        ->required();
    gate->add_option("output", gate_opt.out_path, "Output PNM file or directory")
        ->required();
    gate->add_option("--config", gate_opt.config_path, "Gate config JSON")
        ->required();
    gate->add_option("--jobs", gate_opt.jobs, "Worker threads for directories")
        ->check(CLI::PositiveNumber);

    FitOptions fit_opt;
    int ignored_jobs = 1;
    CLI::App* fit = app.add_subcommand(
        "fit", "Fit UCIQE coefficients from a ratings CSV");
    fit->add_option("ratings", fit_opt.csv_path, "Ratings CSV path")->required();
    fit->add_option("--holdout", fit_opt.holdout,
                    "Holdout fraction in (0,1) for a train/test evaluation");
    fit->add_option("--seed", fit_opt.seed, "Shuffle seed for the holdout split");
    fit->add_flag("--intercept", fit_opt.intercept, "Add an intercept term");
    fit->add_option("--jobs", ignored_jobs, "Accepted for uniformity; single input")
        ->check(CLI::PositiveNumber);

    MatchOptions match_opt;
    uwe_feature_config_defaults(&match_opt.config);
    CLI::App* match = app.add_subcommand(
        "match", "Detect, describe, and match features between two frames");
    match->add_option("a", match_opt.a_path, "First frame")->required();
    match->add_option("b", match_opt.b_path, "Second frame")->required();
    match->add_option("--n-features", match_opt.config.n_features,
                      "Keypoint budget across levels");
    match->add_option("--fast-threshold", match_opt.config.fast_threshold,
                      "Segment-test threshold in unit scale");
    match->add_option("--levels", match_opt.config.levels, "Pyramid levels");
    match->add_option("--scale-factor", match_opt.config.scale_factor,
                      "Pyramid scale step");
    match->add_option("--ratio", match_opt.config.match_ratio,
                      "Nearest/second-nearest ratio");
    match->add_option("--jobs", ignored_jobs,
                      "Accepted for uniformity; single input pair")
        ->check(CLI::PositiveNumber);

    BenchOptions bench_opt;
    uwe_dehaze_params_defaults(&bench_opt.params);
    CLI::App* bench = app.add_subcommand(
        "bench", "Per-frame enhancement latency over a frame directory");
    bench->add_option("frames", bench_opt.frames_dir, "Directory of PNM frames")
        ->required();
    bench->add_option("--method", bench_opt.method, "dcp or udcp")
        ->check(CLI::IsMember({"dcp", "udcp"}));
    bench->add_option("--repeat", bench_opt.repeat, "Passes over the frame set")
        ->check(CLI::PositiveNumber);
    bench->add_flag("--include-io", bench_opt.include_io,
                    "Time decode and encode along with enhancement");
    bench->add_option("--platform-note", bench_opt.platform_note,
                      "Free-text platform description for the report");
    add_dehaze_flags(bench, bench_opt.params);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (enhance->parsed())
            return cmd_enhance(enhance_opt);
        if (score->parsed())
            return cmd_score(score_opt);
        if (gate->parsed())
            return cmd_gate(gate_opt);
        if (fit->parsed())
            return cmd_fit(fit_opt);
        if (match->parsed())
            return cmd_match(match_opt);
        if (bench->parsed())
            return cmd_bench(bench_opt);
    } catch (const CliFailure& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
