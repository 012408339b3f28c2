#pragma once

#include <stdexcept>
#include <string>

namespace hemtkit {

// Input/contract violations: bad files, bad metadata, bad arguments.
// The CLI maps these to exit status 1.
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// Numerical/algorithmic failures on valid inputs: no subthreshold region,
// solver not converged, and so on. The CLI maps these to exit status 2.
class NumericError : public std::runtime_error {
public:
    NumericError(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

}  // namespace hemtkit
