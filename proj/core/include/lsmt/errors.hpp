// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace lsmt {

enum class ErrorCode {
    dim,          // shape or length mismatch
    range,        // index out of range
    singular,     // numerically singular linear problem
    unstable,     // spectral radius too close to (or beyond) 1
    convergence,  // iterative computation failed to converge
    badnoise,     // noise covariance not symmetric positive definite
    parse,        // malformed input document
};

constexpr const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::dim: return "E_DIM";
        case ErrorCode::range: return "E_RANGE";
        case ErrorCode::singular: return "E_SINGULAR";
        case ErrorCode::unstable: return "E_UNSTABLE";
        case ErrorCode::convergence: return "E_CONVERGENCE";
        case ErrorCode::badnoise: return "E_BADNOISE";
        case ErrorCode::parse: return "E_PARSE";
    }
    return "E_UNKNOWN";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace lsmt
