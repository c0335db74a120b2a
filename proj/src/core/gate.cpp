#include "core/gate.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "core/error.hpp"

namespace uwe {

void GateConfig::validate() const {
    if (!std::isfinite(tau))
        raise(Errc::invalid_argument, "tau must be finite");
    if (max_iterations < 1)
        raise(Errc::invalid_argument, "max_iterations must be >= 1");
    if (enhancer == EnhancerKind::external && external_command.empty())
        raise(Errc::invalid_argument,
              "external enhancer requires external_command");
    if (enhancer != EnhancerKind::external && !external_command.empty())
        raise(Errc::invalid_argument,
              "external_command is only valid with the external enhancer");
    dehaze.validate();
}

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;

    explicit TempDir(const char* tag) {
        std::string tpl = (fs::temp_directory_path() /
                           (std::string(tag) + "-XXXXXX")).string();
        if (mkdtemp(tpl.data()) == nullptr)
            raise(Errc::io, "cannot create temporary directory");
        path = tpl;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

std::string substitute_placeholder(std::string text, const std::string& key,
                                   const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(key, pos)) != std::string::npos) {
        text.replace(pos, key.size(), value);
        pos += value.size();
    }
    return text;
}

std::chrono::milliseconds external_timeout() {
    if (const char* env = std::getenv("UWE_EXTERNAL_TIMEOUT_MS")) {
        char* end = nullptr;
        const long ms = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && ms > 0)
            return std::chrono::milliseconds(ms);
    }
    return std::chrono::milliseconds(10000);
}

std::string read_capped(const fs::path& path, std::size_t cap) {
    std::ifstream in(path, std::ios::binary);
    std::string text;
    char buf[512];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        text.append(buf, static_cast<std::size_t>(in.gcount()));
        if (text.size() >= cap) {
            text.resize(cap);
            text += "...";
            break;
        }
    }
    return text;
}

// Runs the command under /bin/sh with stdout/stderr captured to a log file.
// Returns the exit status; raises on timeout.
int run_shell_command(const std::string& command, const fs::path& log_path,
                      std::chrono::milliseconds timeout) {
    const pid_t pid = fork();
    if (pid < 0)
        raise(Errc::enhancer_failed, "fork failed");
    if (pid == 0) {
        const int log_fd = open(log_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
        if (log_fd >= 0) {
            dup2(log_fd, STDOUT_FILENO);
            dup2(log_fd, STDERR_FILENO);
            close(log_fd);
        }
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }

    const auto deadline = std::chrono::steady_clock::now() + timeout;
    int status = 0;
    for (;;) {
        const pid_t done = waitpid(pid, &status, WNOHANG);
        if (done == pid)
            break;
        if (done < 0 && errno != EINTR)
            raise(Errc::enhancer_failed, "waitpid failed");
        if (std::chrono::steady_clock::now() >= deadline) {
            kill(pid, SIGKILL);
            waitpid(pid, &status, 0);
            raise(Errc::enhancer_failed,
                  "external enhancer timed out: " + command);
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    if (WIFEXITED(status))
        return WEXITSTATUS(status);
    if (WIFSIGNALED(status))
        return 128 + WTERMSIG(status);
    return -1;
}

} // namespace

ImageBuffer run_external_enhancer(const ImageBuffer& img,
                                  const std::string& command_template) {
    if (command_template.find("{in}") == std::string::npos ||
        command_template.find("{out}") == std::string::npos)
        raise(Errc::invalid_argument,
              "external command template must contain {in} and {out}");

    TempDir dir("uwe-plugin");
    const fs::path in_path = dir.path / "in.pnm";
    const fs::path out_path = dir.path / "out.pnm";
    const fs::path log_path = dir.path / "plugin.log";
    write_pnm_file(img, in_path.string());

    std::string command = substitute_placeholder(command_template, "{in}",
                                                 in_path.string());
    command = substitute_placeholder(command, "{out}", out_path.string());

    const int exit_code = run_shell_command(command, log_path, external_timeout());
    if (exit_code != 0) {
        std::string log = read_capped(log_path, 4096);
        raise(Errc::enhancer_failed,
              "external enhancer exited with status " + std::to_string(exit_code) +
                  (log.empty() ? "" : ": " + log));
    }
    if (!fs::exists(out_path))
        raise(Errc::enhancer_failed, "external enhancer produced no output file");

    ImageBuffer out;
    try {
        out = read_pnm_file(out_path.string());
    } catch (const Error& e) {
        raise(Errc::enhancer_failed,
              std::string("external enhancer wrote an unreadable frame: ") + e.what());
    }
    if (!out.same_shape(img))
        raise(Errc::enhancer_failed,
              "external enhancer changed the frame dimensions");
    return out;
}

GateOutcome run_gate(const ImageBuffer& img, const GateConfig& config) {
    config.validate();
    if (img.channels() != 3)
        raise(Errc::channel_mismatch, "run_gate needs a 3-channel frame");

    const auto score = [&](const ImageBuffer& frame) {
        return uciqe(frame, config.coeffs).uciqe;
    };
    const auto enhance_once = [&](const ImageBuffer& frame, int iteration) {
        try {
            switch (config.enhancer) {
            case EnhancerKind::dcp:
                return enhance_dcp(frame, config.dehaze);
            case EnhancerKind::udcp:
                return enhance_udcp(frame, config.dehaze);
            case EnhancerKind::external:
                return run_external_enhancer(frame, config.external_command);
            }
            raise(Errc::invalid_argument, "unknown enhancer");
        } catch (const GateError&) {
            throw;
        } catch (const Error& e) {
            throw GateError(iteration, "enhancer failed at iteration " +
                                           std::to_string(iteration) + ": " +
                                           e.what());
        }
    };

    GateOutcome outcome;
    outcome.trace.push_back(score(img));
    if (outcome.trace.front() >= config.tau) {
        outcome.final = img;
        outcome.verdict = GateVerdict::clear_passthrough;
        outcome.iterations_used = 0;
        return outcome;
    }

    ImageBuffer current = img;
    for (int iteration = 1; iteration <= config.max_iterations; ++iteration) {
        current = enhance_once(current, iteration);
        outcome.trace.push_back(score(current));
        outcome.iterations_used = iteration;
        if (outcome.trace.back() >= config.tau) {
            outcome.final = std::move(current);
            outcome.verdict = GateVerdict::enhanced_clear;
            return outcome;
        }
    }
    outcome.final = std::move(current);
    outcome.verdict = GateVerdict::enhanced_gave_up;
    return outcome;
}

double calibrate_tau(std::span<const std::pair<double, bool>> scored) {
    std::size_t clear_n = 0;
    std::size_t blurry_n = 0;
    for (const auto& [value, is_clear] : scored) {
        if (is_clear)
            ++clear_n;
        else
            ++blurry_n;
    }
    if (clear_n == 0 || blurry_n == 0)
        raise(Errc::degenerate_labels,
              "tau calibration needs both clear and blurry examples");

    std::set<double> distinct;
    for (const auto& [value, is_clear] : scored)
        distinct.insert(value);

    std::vector<double> candidates;
    if (distinct.size() == 1) {
        candidates.push_back(*distinct.begin());
    } else {
        double prev = 0.0;
        bool have_prev = false;
        for (double v : distinct) {
            if (have_prev)
                candidates.push_back((prev + v) / 2.0);
            prev = v;
            have_prev = true;
        }
    }

    double best_tau = candidates.front();
    double best_accuracy = -1.0;
    for (double tau : candidates) {
        std::size_t clear_right = 0;
        std::size_t blurry_right = 0;
        for (const auto& [value, is_clear] : scored) {
            if (is_clear && value >= tau)
                ++clear_right;
            if (!is_clear && value < tau)
                ++blurry_right;
        }
        const double accuracy =
            0.5 * (static_cast<double>(clear_right) / clear_n +
                   static_cast<double>(blurry_right) / blurry_n);
        if (accuracy > best_accuracy) {
            best_accuracy = accuracy;
            best_tau = tau;
        }
    }
    return best_tau;
}

GateConfig gate_config_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::parse, std::string("gate config is not valid JSON: ") + e.what());
    }
    if (!j.is_object())
        raise(Errc::parse, "gate config must be a JSON object");

    static const std::set<std::string> known = {
        "tau", "max_iterations", "enhancer", "external_command", "coefficients"};
    for (const auto& [key, value] : j.items())
        if (!known.contains(key))
            raise(Errc::parse, "gate config has unknown key '" + key + "'");

    GateConfig config;
    try {
        if (!j.contains("tau"))
            raise(Errc::parse, "gate config requires 'tau'");
        config.tau = j.at("tau").get<double>();
        if (j.contains("max_iterations"))
            config.max_iterations = j.at("max_iterations").get<int>();
        if (j.contains("enhancer")) {
            const std::string name = j.at("enhancer").get<std::string>();
            if (name == "dcp")
                config.enhancer = EnhancerKind::dcp;
            else if (name == "udcp")
                config.enhancer = EnhancerKind::udcp;
            else if (name == "external")
                config.enhancer = EnhancerKind::external;
            else
                raise(Errc::parse, "enhancer must be dcp, udcp, or external");
        }
        if (j.contains("external_command"))
            config.external_command = j.at("external_command").get<std::string>();
        if (j.contains("coefficients")) {
            const nlohmann::json& c = j.at("coefficients");
            config.coeffs.c1 = c.at("c1").get<double>();
            config.coeffs.c2 = c.at("c2").get<double>();
            config.coeffs.c3 = c.at("c3").get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::parse, std::string("gate config field error: ") + e.what());
    }
    config.validate();
    return config;
}

GateConfig load_gate_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        raise(Errc::io, "cannot open gate config '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return gate_config_from_json(text);
}

const char* gate_verdict_name(GateVerdict verdict) {
    switch (verdict) {
    case GateVerdict::clear_passthrough: return "CLEAR_PASSTHROUGH";
    case GateVerdict::enhanced_clear: return "ENHANCED_CLEAR";
    case GateVerdict::enhanced_gave_up: return "ENHANCED_GAVE_UP";
    }
    return "UNKNOWN";
}

std::string gate_outcome_json(const GateOutcome& outcome) {
    nlohmann::json j;
    j["verdict"] = gate_verdict_name(outcome.verdict);
    j["iterations_used"] = outcome.iterations_used;
    j["trace"] = outcome.trace;
    return j.dump();
}

} // namespace uwe
