#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "core/dehaze.hpp"
#include "core/image.hpp"
#include "core/quality.hpp"

namespace uwe {

enum class EnhancerKind {
    dcp,
    udcp,
    external, // subprocess plugin speaking file-based PNM
};

struct GateConfig {
    double tau = 0.0;
    int max_iterations = 3;
    EnhancerKind enhancer = EnhancerKind::dcp;
    std::string external_command; // template with {in} and {out} placeholders
    UciqeCoefficients coeffs;
    DehazeParams dehaze;

    void validate() const;
};

enum class GateVerdict {
    clear_passthrough,
    enhanced_clear,
    enhanced_gave_up,
};

struct GateOutcome {
    ImageBuffer final;
    int iterations_used = 0;
    std::vector<double> trace; // length iterations_used + 1, input score first
    GateVerdict verdict = GateVerdict::clear_passthrough;
};

/// Scores the frame; passes it through untouched when it clears tau, otherwise
/// re-applies the configured enhancer until it clears or the iteration cap is
/// reached. Enhancer failures raise GateError with the failing iteration.
GateOutcome run_gate(const ImageBuffer& img, const GateConfig& config);

/// Writes the frame as PNM, substitutes {in}/{out} in the command template,
/// runs it through the shell, and reads back a PNM of identical shape.
/// Timeout defaults to 10 s; the UWE_EXTERNAL_TIMEOUT_MS environment variable
/// overrides it.
ImageBuffer run_external_enhancer(const ImageBuffer& img,
                                  const std::string& command_template);

/// Threshold maximizing balanced accuracy over (score, is_clear) labels,
/// swept over midpoints of adjacent distinct scores; ties take the lower tau.
double calibrate_tau(std::span<const std::pair<double, bool>> scored);

/// Parses the gate config JSON {tau, max_iterations, enhancer,
/// external_command, coefficients{c1,c2,c3}}.
GateConfig gate_config_from_json(const std::string& json_text);
GateConfig load_gate_config(const std::string& path);

const char* gate_verdict_name(GateVerdict verdict);
std::string gate_outcome_json(const GateOutcome& outcome);

} // namespace uwe
