#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace uwe {

enum class Errc {
    invalid_argument = 1,
    io = 2,
    unsupported_format = 3,
    truncated_payload = 4,
    channel_mismatch = 5,
    dimension_mismatch = 6,
    too_small = 7,
    degenerate_airlight = 8,
    insufficient_data = 9,
    singular_design = 10,
    empty_split = 11,
    degenerate_labels = 12,
    enhancer_failed = 13,
    parse = 14,
};

class Error : public std::runtime_error {
public:
    Error(Errc code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

/// Enhancer failure inside the gate loop; remembers which iteration broke.
class GateError : public Error {
public:
    GateError(int iteration, std::string message)
        : Error(Errc::enhancer_failed, std::move(message)), iteration_(iteration) {}

    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

[[noreturn]] inline void raise(Errc code, std::string message) {
    throw Error(code, std::move(message));
}

} // namespace uwe
