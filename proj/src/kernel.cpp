#include "tvrate/kernel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace tvrate {

double HigherOrderKernel::operator()(double u) const {
    return (u < -1.0 || u > 1.0) ? 0.0 : poly(u);
}

double bump_moment(int q, int m) {
    if (q < 0 || m < 0) throw std::invalid_argument("bump_moment: negative index");
    // Row I(0, .) then q sweeps of the recurrence.
    std::vector<double> row(static_cast<std::size_t>(m + q) + 1);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = 2.0 / (2.0 * static_cast<double>(j) + 1.0);
    for (int level = 1; level <= q; ++level)
        for (std::size_t j = 0; j + level < row.size(); ++j) row[j] -= row[j + 1];
    return row[static_cast<std::size_t>(m)];
}

double kernel_moment(const HigherOrderKernel& h, int j) {
    if (j < 0) throw std::invalid_argument("kernel_moment: negative order");
    const auto& c = h.poly.coeffs();
    double total = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const std::size_t p = i + static_cast<std::size_t>(j);
        if (p % 2 == 0) total += 2.0 * c[i] / static_cast<double>(p + 1);
    }
    return total;
}

double derivative_bound(const HigherOrderKernel& h, int l) {
    if (l < 0 || l > h.order - 1)
        throw std::invalid_argument("derivative_bound: order " + std::to_string(l) + " outside [0, k-1]");
    const Polynomial d = h.poly.derivative(l);
    double best = std::max(std::abs(d(-1.0)), std::abs(d(1.0)));
    for (double c : sign_change_roots(d.derivative(), -1.0, 1.0)) best = std::max(best, std::abs(d(c)));
    return best;
}

HigherOrderKernel construct_kernel(int k) {
    if (k < 1 || k > 8) throw std::invalid_argument("construct_kernel: order must be in [1, 8]");
    const int q = k;
    const int m_terms = (k + 1) / 2;

    Eigen::MatrixXd a(m_terms, m_terms);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_terms);
    rhs(0) = 1.0;
    for (int j = 0; j < m_terms; ++j)
        for (int m = 0; m < m_terms; ++m) a(j, m) = bump_moment(q, j + m);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (lu.rank() < m_terms) throw std::logic_error("construct_kernel: singular moment system");
    const Eigen::VectorXd coef = lu.solve(rhs);

    // (1 - u^2)^q
    Polynomial bump = Polynomial::constant(1.0);
    const Polynomial one_minus_u2{1.0, 0.0, -1.0};
    for (int i = 0; i < q; ++i) bump = bump * one_minus_u2;
    std::vector<double> even(static_cast<std::size_t>(2 * m_terms - 1), 0.0);
    for (int m = 0; m < m_terms; ++m) even[2 * m] = coef(m);

    HigherOrderKernel h;
    h.order = k;
    h.smoothness = q;
    h.poly = bump * Polynomial(std::move(even));
    for (int j = 0; j <= k; ++j) h.moments.push_back(kernel_moment(h, j));
    for (int l = 0; l < k; ++l) h.deriv_bounds.push_back(derivative_bound(h, l));
    // H is even, so u^k H(u) on [0, 1] has the sign of H.
    h.abs_moment = 2.0 * integrate_abs(Polynomial::monomial(k) * h.poly, 0.0, 1.0);
    return h;
}

ScaledKernel::ScaledKernel(HigherOrderKernel base, double bandwidth)
    : base_(std::move(base)), bandwidth_(bandwidth) {
    if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_))
        throw std::invalid_argument("ScaledKernel: bandwidth must be positive");
}

double ScaledKernel::operator()(double t) const { return base_(t / bandwidth_) / bandwidth_; }

double ScaledKernel::mass() const { return base_.moments.front(); }

PiecewisePolynomial convolve(const PiecewisePolynomial& f, const ScaledKernel& kernel) {
    const double delta = kernel.bandwidth();
    const Interval dom = f.domain();
    constexpr double inf = std::numeric_limits<double>::infinity();

    // G_j(u) = \int_{-1}^{u} v^j H(v) dv
    const int max_deg = std::max(f.max_degree(), 0);
    std::vector<Polynomial> g(static_cast<std::size_t>(max_deg) + 1);
    std::vector<double> g_full(g.size());
    for (int j = 0; j <= max_deg; ++j) {
        const Polynomial anti = (Polynomial::monomial(j) * kernel.base().poly).antiderivative();
        g[j] = anti - Polynomial::constant(anti(-1.0));
        g_full[j] = g[j](1.0);
    }

    std::vector<double> pts;
    for (double d : f.breakpoints())
        for (double e : {d - delta, d + delta})
            if (e > dom.lo && e < dom.hi) pts.push_back(e);
    std::sort(pts.begin(), pts.end());
    std::vector<double> breaks;
    for (double p : pts)
        if (breaks.empty() || p - breaks.back() >= kBreakpointMergeTol) breaks.push_back(p);

    std::vector<Polynomial> pieces;
    pieces.reserve(breaks.size() + 1);
    for (std::size_t c = 0; c <= breaks.size(); ++c) {
        const double c0 = c == 0 ? dom.lo : breaks[c - 1];
        const double c1 = c < breaks.size() ? breaks[c] : dom.hi;
        const double mid = 0.5 * (c0 + c1);
        Polynomial acc;
        for (std::size_t i = 0; i < f.num_pieces(); ++i) {
            const double left = i == 0 ? -inf : f.origin(i);
            const double right = i + 1 < f.num_pieces() ? f.breakpoints()[i] : inf;
            // t ranges over [x - right, x - left] intersected with [-delta, delta].
            if (mid - right >= delta || mid - left <= -delta) continue;
            const bool upper_moves = mid - left < delta;
            const bool lower_moves = mid - right > -delta;

            const Polynomial local = f.piece_at_origin(i, c0);
            Polynomial taylor = local;  // P^{(j)}(h) / j!
            double factor = 1.0;        // (-delta)^j
            for (int j = 0; j <= local.degree(); ++j) {
                // G_j at the limits, in terms of h = x - c0 (u = t / delta).
                Polynomial window;
                if (upper_moves)
                    window = g[j].shifted((c0 - left) / delta).scaled_arg(1.0 / delta);
                else
                    window = Polynomial::constant(g_full[j]);
                if (lower_moves) window -= g[j].shifted((c0 - right) / delta).scaled_arg(1.0 / delta);
                acc += (factor * taylor) * window;
                taylor = taylor.derivative() * (1.0 / static_cast<double>(j + 1));
                factor *= -delta;
            }
        }
        pieces.push_back(std::move(acc));
    }
    return PiecewisePolynomial(dom, std::move(breaks), std::move(pieces));
}

}  // namespace tvrate
