#include "hemtkit/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

#include "hemtkit/errors.hpp"

namespace hemtkit::num {

void SmoothingSpec::validate() const {
    if (window < 3 || window % 2 == 0)
        throw ValidationError("BadSmoothingSpec", "window must be odd and >= 3");
    if (poly_order < 1 || poly_order >= window)
        throw ValidationError("BadSmoothingSpec", "poly_order must be in [1, window)");
}

namespace {

void require_increasing(std::span<const double> x) {
    for (std::size_t i = 1; i < x.size(); ++i)
        if (!(x[i] > x[i - 1]))
            throw ValidationError("NonMonotonicGrid", "x must be strictly increasing");
}

}  // namespace

std::vector<double> derivative(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n != y.size())
        throw ValidationError("LengthMismatch", "x and y lengths differ");
    if (n < 3)
        throw ValidationError("TooFewPoints", "derivative needs at least 3 samples");
    require_increasing(x);

    std::vector<double> d(n);
    // Left endpoint, forward 3-point.
    {
        const double h1 = x[1] - x[0], h2 = x[2] - x[1];
        d[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * y[0]
             + (h1 + h2) / (h1 * h2) * y[1]
             - h1 / (h2 * (h1 + h2)) * y[2];
    }
    // Interior, central 3-point on non-uniform spacing.
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h1 = x[i] - x[i - 1], h2 = x[i + 1] - x[i];
        d[i] = -h2 / (h1 * (h1 + h2)) * y[i - 1]
             + (h2 - h1) / (h1 * h2) * y[i]
             + h1 / (h2 * (h1 + h2)) * y[i + 1];
    }
    // Right endpoint, backward 3-point.
    {
        const double h1 = x[n - 2] - x[n - 3], h2 = x[n - 1] - x[n - 2];
        d[n - 1] = h2 / (h1 * (h1 + h2)) * y[n - 3]
                 - (h1 + h2) / (h1 * h2) * y[n - 2]
                 + (h1 + 2.0 * h2) / (h2 * (h1 + h2)) * y[n - 1];
    }
    return d;
}

std::vector<double> smooth(std::span<const double> y, const SmoothingSpec& spec) {
    spec.validate();
    const std::size_t n = y.size();
    if (n < static_cast<std::size_t>(spec.window))
        throw ValidationError("SeriesShorterThanWindow", "series shorter than smoothing window");

    const int hw = spec.window / 2;
    const int p = spec.poly_order;
    std::vector<double> out(n);

    for (std::size_t i = 0; i < n; ++i) {
        long lo = static_cast<long>(i) - hw;
        long hi = static_cast<long>(i) + hw;
        if (lo < 0) lo = 0;
        if (hi > static_cast<long>(n) - 1) hi = static_cast<long>(n) - 1;
        // Keep at least p+1 samples so the fit stays determined at the edges.
        while (hi - lo + 1 < p + 1) {
            if (lo > 0) --lo;
            else ++hi;
        }
        const int m = static_cast<int>(hi - lo + 1);

        // Fit a degree-p polynomial in t = (index - i), evaluate at t = 0.
        Eigen::MatrixXd A(m, p + 1);
        Eigen::VectorXd b(m);
        for (int r = 0; r < m; ++r) {
            const double t = static_cast<double>(lo + r) - static_cast<double>(i);
            double tp = 1.0;
            for (int c = 0; c <= p; ++c) {
                A(r, c) = tp;
                tp *= t;
            }
            b(r) = y[static_cast<std::size_t>(lo + r)];
        }
        Eigen::VectorXd coef = (A.transpose() * A).ldlt().solve(A.transpose() * b);
        out[i] = coef(0);
    }
    return out;
}

std::vector<double> cumtrapz(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n != y.size())
        throw ValidationError("LengthMismatch", "x and y lengths differ");
    if (n < 2)
        throw ValidationError("TooFewPoints", "cumtrapz needs at least 2 samples");
    require_increasing(x);

    std::vector<double> acc(n, 0.0);
    for (std::size_t i = 1; i < n; ++i)
        acc[i] = acc[i - 1] + 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    return acc;
}

LinFit linfit(std::span<const double> x, std::span<const double> y,
              std::size_t lo, std::size_t hi) {
    if (x.size() != y.size())
        throw ValidationError("LengthMismatch", "x and y lengths differ");
    if (hi > x.size() || lo >= hi || hi - lo < 2)
        throw ValidationError("BadWindow", "linfit window must hold >= 2 samples");

    const std::size_t m = hi - lo;
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = lo; i < hi; ++i) { sx += x[i]; sy += y[i]; }
    const double mx = sx / static_cast<double>(m);
    const double my = sy / static_cast<double>(m);

    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
        const double dx = x[i] - mx;
        sxx += dx * dx;
        sxy += dx * (y[i] - my);
    }
    if (sxx == 0.0)
        throw NumericError("DegenerateWindow", "all x in window are equal");

    LinFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
        const double r = y[i] - (f.slope * x[i] + f.intercept);
        ss += r * r;
    }
    f.rms_residual = std::sqrt(ss / static_cast<double>(m));
    return f;
}

PeakLocation argmax_smoothed(std::span<const double> x, std::span<const double> y,
                             const SmoothingSpec& spec) {
    if (x.size() != y.size())
        throw ValidationError("LengthMismatch", "x and y lengths differ");
    const std::vector<double> ys = smooth(y, spec);
    double y_max = ys[0];
    for (double v : ys) y_max = std::max(y_max, v);
    // Tie-break toward smallest x, with plateau equality judged at a few ulps
    // (edge fits wobble by ~1e-16 on exactly flat data).
    const double tol = 1e-12 * std::max(std::abs(y_max), 1e-300);
    PeakLocation peak{x[0], ys[0], 0};
    for (std::size_t i = 0; i < ys.size(); ++i) {
        if (ys[i] >= y_max - tol) {
            peak.y_max = ys[i];
            peak.x_at_max = x[i];
            peak.index = i;
            break;
        }
    }
    return peak;
}

}  // namespace hemtkit::num
