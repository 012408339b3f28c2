#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hemtkit::num {

// Local least-squares (Savitzky-Golay style) smoothing parameters.
// window is a sample count, must be odd and >= 3; poly_order in [1, window).
struct SmoothingSpec {
    int window = 7;
    int poly_order = 2;

    void validate() const;
};

// dy/dx on a strictly increasing (possibly non-uniform) grid.
// Interior: 3-point central differences; endpoints: one-sided 3-point
// second-order stencils. Exact for polynomials of degree <= 2.
std::vector<double> derivative(std::span<const double> x, std::span<const double> y);

// Moving-window local polynomial smoothing in the sample-index domain.
// Windows shrink to one-sided fits at the edges (never below poly_order+1
// samples). Reproduces polynomials of degree <= poly_order exactly.
std::vector<double> smooth(std::span<const double> y, const SmoothingSpec& spec);

// Running trapezoid integral; result[0] == 0. Exact for affine integrands.
std::vector<double> cumtrapz(std::span<const double> x, std::span<const double> y);

struct LinFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms_residual = 0.0;
};

// Ordinary least squares over the half-open index range [lo, hi).
LinFit linfit(std::span<const double> x, std::span<const double> y,
              std::size_t lo, std::size_t hi);

struct PeakLocation {
    double x_at_max = 0.0;
    double y_max = 0.0;
    std::size_t index = 0;
};

// Maximum of the smoothed series; ties broken toward smallest x.
PeakLocation argmax_smoothed(std::span<const double> x, std::span<const double> y,
                             const SmoothingSpec& spec);

}  // namespace hemtkit::num
