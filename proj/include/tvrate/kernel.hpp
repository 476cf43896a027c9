#pragma once

#include <vector>

#include "tvrate/pwpoly.hpp"

namespace tvrate {

/// Compactly supported kernel of order k on [-1, 1]:
///
///   H_k(u) = (1 - u^2)^q * sum_{m < M} a_m u^{2m},   q = k, M = ceil(k/2),
///
/// with a_m chosen so that H_k integrates to one and its moments of order
/// 1..k-1 vanish. The (1 - u^2)^q factor makes H_k and its first q-1
/// derivatives vanish at the support ends. For k >= 3 the kernel takes
/// negative values.
struct HigherOrderKernel {
    int order = 0;
    int smoothness = 0;  ///< exponent q of the (1 - u^2)^q factor
    Polynomial poly;     ///< the kernel on [-1, 1] as a single even polynomial
    std::vector<double> moments;       ///< \int u^j H_k, j = 0..k
    std::vector<double> deriv_bounds;  ///< sup_{[-1,1]} |H_k^{(l)}|, l = 0..k-1
    double abs_moment = 0.0;           ///< \int |u|^k |H_k(u)| du (diagnostic)

    /// H_k(u), zero outside [-1, 1].
    double operator()(double u) const;
};

/// \int_{-1}^{1} (1 - u^2)^q u^{2m} du via I(q,m) = I(q-1,m) - I(q-1,m+1),
/// I(0,m) = 2/(2m+1).
double bump_moment(int q, int m);

/// Builds H_k for 1 <= k <= 8.
HigherOrderKernel construct_kernel(int k);

/// \int_{-1}^{1} u^j H(u) du, integrated exactly.
double kernel_moment(const HigherOrderKernel& h, int j);

/// sup over [-1,1] of |H^{(l)}|, from the critical points of H^{(l)} and the
/// endpoints. Requires 0 <= l <= order-1.
double derivative_bound(const HigherOrderKernel& h, int l);

/// H_{k,delta}(t) = H_k(t / delta) / delta, supported on [-delta, delta].
class ScaledKernel {
public:
    ScaledKernel(HigherOrderKernel base, double bandwidth);

    const HigherOrderKernel& base() const { return base_; }
    double bandwidth() const { return bandwidth_; }

    double operator()(double t) const;
    /// \int H_{k,delta}; equals the base kernel's zeroth moment.
    double mass() const;

private:
    HigherOrderKernel base_;
    double bandwidth_;
};

/// (f * H_delta)(x) = \int_{-delta}^{delta} f(x - t) H_delta(t) dt, in closed
/// form. Outside its domain f is extended by its first and last pieces.
/// The result has breakpoints at {d - delta, d + delta} for every breakpoint
/// d of f (those falling strictly inside the domain).
PiecewisePolynomial convolve(const PiecewisePolynomial& f, const ScaledKernel& kernel);

}  // namespace tvrate
