#pragma once

#include <span>

namespace tvrate {

/// Ordinary least-squares line y = intercept + slope * x.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;  ///< zero when there are only two points
    int n_points = 0;
};

/// Throws std::invalid_argument for fewer than two points or constant x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace tvrate
