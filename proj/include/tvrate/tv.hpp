#pragma once

#include <optional>
#include <span>
#include <vector>

#include "tvrate/pwpoly.hpp"

namespace tvrate {

/// kth-order total variation of a piecewise polynomial, split into the jumps
/// of f^{(k-1)} at breakpoints and \int |f^{(k)}| over the pieces.
struct TVReport {
    int order = 1;
    double jump_part = 0.0;
    double smooth_part = 0.0;
    double total = 0.0;
    /// Set when f^{(j)}, j < k-1, jumps: the variation is infinite and this
    /// holds the first offending breakpoint.
    std::optional<double> divergent_at;

    bool finite() const { return !divergent_at.has_value(); }
};

/// Jumps smaller than this, relative to the magnitude of the polynomial terms
/// that form the one-sided values (floor 1), are treated as floating-point
/// continuity.
inline constexpr double kJumpTol = 1e-12;

/// P_k(f) = sup over partitions of sum |f^{(k-1)}(x_{m+1}) - f^{(k-1)}(x_m)|,
/// evaluated in closed form.
TVReport tv_continuous(const PiecewisePolynomial& f, int k);

/// n^{k-1} * ||Delta^k theta||_1 with Delta the forward difference.
double tv_discrete(std::span<const double> theta, int k);

/// Piecewise-constant function whose value on each cell equals the cell
/// average of f. `cuts` are the interior cell boundaries (strictly increasing
/// and inside the domain); the outer cells end at the domain boundary.
PiecewisePolynomial piecewise_constant_project(const PiecewisePolynomial& f,
                                               std::span<const double> cuts);

}  // namespace tvrate
