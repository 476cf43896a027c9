#include "tvrate/tv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tvrate/solver.hpp"

namespace tvrate {

namespace {

/// Lower-order derivatives of convolution outputs carry rounding noise that
/// grows with 1/delta^j; discontinuity below this relative size is noise.
constexpr double kContinuityTol = 1e-9;

/// Jump of g across breakpoint index b (right value minus left value).
/// `scale` bounds the magnitude of the terms summed to get the two values,
/// so rounding error is a small multiple of eps * scale.
double jump_at(const PiecewisePolynomial& g, std::size_t b, double& scale) {
    const double x = g.breakpoints()[b];
    const double w = x - g.origin(b);
    const Polynomial& p = g.pieces()[b];
    const double left = p(w);
    const double right = g.pieces()[b + 1](0.0);
    double terms = 0.0, wp = 1.0;
    for (double c : p.coeffs()) {
        terms += std::abs(c) * wp;
        wp *= std::abs(w);
    }
    scale = std::max({terms, std::abs(right), 1.0});
    return right - left;
}

}  // namespace

TVReport tv_continuous(const PiecewisePolynomial& f, int k) {
    if (k < 1) throw std::invalid_argument("tv_continuous: order must be >= 1");
    TVReport report;
    report.order = k;

    PiecewisePolynomial g = f;
    for (int j = 0; j < k - 1; ++j) {
        for (std::size_t b = 0; b < g.breakpoints().size(); ++b) {
            double scale = 1.0;
            if (std::abs(jump_at(g, b, scale)) > kContinuityTol * scale) {
                report.divergent_at = g.breakpoints()[b];
                report.total = std::numeric_limits<double>::infinity();
                report.jump_part = report.total;
                return report;
            }
        }
        g = g.derivative();
    }

    for (std::size_t b = 0; b < g.breakpoints().size(); ++b) {
        double scale = 1.0;
        const double jump = jump_at(g, b, scale);
        if (std::abs(jump) > kJumpTol * scale) report.jump_part += std::abs(jump);
    }
    const PiecewisePolynomial d = g.derivative();
    for (std::size_t i = 0; i < d.num_pieces(); ++i) {
        const Interval c = d.cell(i);
        report.smooth_part += integrate_abs(d.pieces()[i], 0.0, c.hi - c.lo);
    }
    report.total = report.jump_part + report.smooth_part;
    return report;
}

double tv_discrete(std::span<const double> theta, int k) {
    const std::vector<double> d = difference_apply(theta, k);
    double s = 0.0;
    for (double v : d) s += std::abs(v);
    return std::pow(static_cast<double>(theta.size()), k - 1) * s;
}

PiecewisePolynomial piecewise_constant_project(const PiecewisePolynomial& f,
                                               std::span<const double> cuts) {
    if (cuts.empty()) throw std::invalid_argument("piecewise_constant_project: empty partition");
    const Interval dom = f.domain();
    std::vector<double> edges{dom.lo};
    for (double c : cuts) {
        if (!(c > edges.back()) || !(c < dom.hi))
            throw std::invalid_argument("piecewise_constant_project: cuts must increase inside the domain");
        edges.push_back(c);
    }
    edges.push_back(dom.hi);
    std::vector<Polynomial> pieces;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
        pieces.push_back(Polynomial::constant(f.integrate(edges[i], edges[i + 1]) / (edges[i + 1] - edges[i])));
    return PiecewisePolynomial(dom, std::vector<double>(cuts.begin(), cuts.end()), std::move(pieces));
}

}  // namespace tvrate
