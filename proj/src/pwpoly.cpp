#include "tvrate/pwpoly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tvrate {

// ------- Polynomial ------- //

Polynomial::Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    canonicalize();
}

Polynomial::Polynomial(std::initializer_list<double> coeffs) : coeffs_(coeffs) {
    canonicalize();
}

Polynomial Polynomial::constant(double c) { return Polynomial({c}); }

Polynomial Polynomial::monomial(int degree, double coeff) {
    if (degree < 0) throw std::invalid_argument("monomial: negative degree");
    std::vector<double> c(static_cast<std::size_t>(degree) + 1, 0.0);
    c.back() = coeff;
    return Polynomial(std::move(c));
}

void Polynomial::canonicalize() {
    while (!coeffs_.empty() && coeffs_.back() == 0.0) coeffs_.pop_back();
}

double Polynomial::coeff(int i) const {
    return (i >= 0 && i < static_cast<int>(coeffs_.size())) ? coeffs_[i] : 0.0;
}

double Polynomial::operator()(double x) const {
    double v = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) v = v * x + *it;
    return v;
}

Polynomial Polynomial::derivative() const {
    if (coeffs_.size() <= 1) return {};
    std::vector<double> d(coeffs_.size() - 1);
    for (std::size_t i = 1; i < coeffs_.size(); ++i) d[i - 1] = static_cast<double>(i) * coeffs_[i];
    return Polynomial(std::move(d));
}

Polynomial Polynomial::derivative(int order) const {
    Polynomial p = *this;
    for (int i = 0; i < order && !p.is_zero(); ++i) p = p.derivative();
    return p;
}

Polynomial Polynomial::antiderivative() const {
    if (coeffs_.empty()) return {};
    std::vector<double> a(coeffs_.size() + 1, 0.0);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) a[i + 1] = coeffs_[i] / static_cast<double>(i + 1);
    return Polynomial(std::move(a));
}

double Polynomial::integrate(double a, double b) const {
    const Polynomial anti = antiderivative();
    return anti(b) - anti(a);
}

Polynomial Polynomial::shifted(double h) const {
    if (h == 0.0 || coeffs_.size() <= 1) return *this;
    // Repeated synthetic division (Taylor shift).
    std::vector<double> c = coeffs_;
    const std::size_t n = c.size();
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = n - 1; j > i; --j) c[j - 1] += h * c[j];
    return Polynomial(std::move(c));
}

Polynomial Polynomial::scaled_arg(double s) const {
    std::vector<double> c = coeffs_;
    double f = 1.0;
    for (double& ci : c) {
        ci *= f;
        f *= s;
    }
    return Polynomial(std::move(c));
}

Polynomial Polynomial::trimmed(double rel_tol) const {
    double scale = 0.0;
    for (double c : coeffs_) scale = std::max(scale, std::abs(c));
    std::vector<double> c = coeffs_;
    while (!c.empty() && std::abs(c.back()) <= rel_tol * scale) c.pop_back();
    return Polynomial(std::move(c));
}

Polynomial& Polynomial::operator+=(const Polynomial& rhs) {
    if (rhs.coeffs_.size() > coeffs_.size()) coeffs_.resize(rhs.coeffs_.size(), 0.0);
    for (std::size_t i = 0; i < rhs.coeffs_.size(); ++i) coeffs_[i] += rhs.coeffs_[i];
    canonicalize();
    return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& rhs) {
    if (rhs.coeffs_.size() > coeffs_.size()) coeffs_.resize(rhs.coeffs_.size(), 0.0);
    for (std::size_t i = 0; i < rhs.coeffs_.size(); ++i) coeffs_[i] -= rhs.coeffs_[i];
    canonicalize();
    return *this;
}

Polynomial& Polynomial::operator*=(double s) {
    for (double& c : coeffs_) c *= s;
    canonicalize();
    return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<double> c(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
        for (std::size_t j = 0; j < b.coeffs_.size(); ++j) c[i + j] += a.coeffs_[i] * b.coeffs_[j];
    return Polynomial(std::move(c));
}

// ------- root isolation ------- //

namespace {

constexpr double kRootWidth = 1e-13;

double bisect(const Polynomial& p, double lo, double hi, double flo) {
    while (hi - lo > kRootWidth) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = p(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

std::vector<double> sign_change_roots(const Polynomial& p, double a, double b) {
    std::vector<double> roots;
    if (p.degree() <= 0 || !(a < b)) return roots;
    if (p.degree() == 1) {
        const double r = -p.coeff(0) / p.coeff(1);
        if (r > a && r < b) roots.push_back(r);
        return roots;
    }
    // Between consecutive critical points p is monotone, so each such
    // interval holds at most one sign change.
    std::vector<double> pts{a};
    for (double c : sign_change_roots(p.derivative(), a, b)) pts.push_back(c);
    pts.push_back(b);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double l = pts[i], r = pts[i + 1];
        const double fl = p(l), fr = p(r);
        if (fl == 0.0 || fr == 0.0) continue;
        if ((fl < 0.0) != (fr < 0.0)) roots.push_back(bisect(p, l, r, fl));
    }
    return roots;
}

double integrate_abs(const Polynomial& p, double a, double b) {
    if (a == b || p.is_zero()) return 0.0;
    if (a > b) throw std::invalid_argument("integrate_abs: requires a < b");
    const Polynomial anti = p.antiderivative();
    double total = 0.0;
    double f_left = anti(a);
    for (double r : sign_change_roots(p, a, b)) {
        const double f_r = anti(r);
        total += std::abs(f_r - f_left);
        f_left = f_r;
    }
    return total + std::abs(anti(b) - f_left);
}

// ------- PiecewisePolynomial ------- //

PiecewisePolynomial::PiecewisePolynomial(Interval domain, std::vector<double> breakpoints,
                                         std::vector<Polynomial> local_pieces)
    : domain_(domain), breaks_(std::move(breakpoints)), pieces_(std::move(local_pieces)) {
    if (!(domain_.lo < domain_.hi)) throw std::invalid_argument("PiecewisePolynomial: empty domain");
    if (pieces_.size() != breaks_.size() + 1)
        throw std::invalid_argument("PiecewisePolynomial: need one more piece than breakpoints");
    for (std::size_t i = 0; i < breaks_.size(); ++i) {
        if (!(breaks_[i] > domain_.lo && breaks_[i] < domain_.hi))
            throw std::invalid_argument("PiecewisePolynomial: breakpoint outside open domain");
        if (i > 0 && !(breaks_[i] > breaks_[i - 1]))
            throw std::invalid_argument("PiecewisePolynomial: breakpoints not strictly increasing");
    }
}

PiecewisePolynomial PiecewisePolynomial::from_global(Interval domain, const Polynomial& p) {
    return PiecewisePolynomial(domain, {}, {p.shifted(domain.lo)});
}

PiecewisePolynomial PiecewisePolynomial::zero(Interval domain) {
    return PiecewisePolynomial(domain, {}, {Polynomial{}});
}

Interval PiecewisePolynomial::cell(std::size_t i) const {
    return {origin(i), i < breaks_.size() ? breaks_[i] : domain_.hi};
}

std::size_t PiecewisePolynomial::locate(double x) const {
    return static_cast<std::size_t>(std::upper_bound(breaks_.begin(), breaks_.end(), x) - breaks_.begin());
}

Polynomial PiecewisePolynomial::piece_at_origin(std::size_t i, double new_origin) const {
    return pieces_[i].shifted(new_origin - origin(i));
}

double PiecewisePolynomial::operator()(double x) const {
    if (!domain_.contains(x))
        throw std::domain_error("evaluate: x = " + std::to_string(x) + " outside domain");
    return evaluate_extended(x);
}

double PiecewisePolynomial::evaluate_extended(double x) const {
    const std::size_t i = locate(x);
    return pieces_[i](x - origin(i));
}

PiecewisePolynomial PiecewisePolynomial::derivative() const {
    std::vector<Polynomial> d;
    d.reserve(pieces_.size());
    for (const auto& p : pieces_) d.push_back(p.derivative());
    return PiecewisePolynomial(domain_, breaks_, std::move(d));
}

PiecewisePolynomial PiecewisePolynomial::derivative(int order) const {
    PiecewisePolynomial f = *this;
    for (int i = 0; i < order; ++i) f = f.derivative();
    return f;
}

double PiecewisePolynomial::integrate(double a, double b) const {
    if (a > b) throw std::invalid_argument("integrate: requires a <= b");
    if (!domain_.contains(a) || !domain_.contains(b)) throw std::domain_error("integrate: outside domain");
    double total = 0.0;
    for (std::size_t i = locate(a); i < pieces_.size(); ++i) {
        const Interval c = cell(i);
        const double lo = std::max(a, c.lo), hi = std::min(b, c.hi);
        if (lo >= b) break;
        if (hi > lo) total += pieces_[i].integrate(lo - c.lo, hi - c.lo);
    }
    return total;
}

int PiecewisePolynomial::max_degree() const {
    int d = -1;
    for (const auto& p : pieces_) d = std::max(d, p.degree());
    return d;
}

PiecewisePolynomial PiecewisePolynomial::simplified(double rel_tol) const {
    std::vector<double> breaks;
    std::vector<Polynomial> pieces{pieces_.front()};
    std::vector<double> origins{domain_.lo};
    for (std::size_t i = 1; i < pieces_.size(); ++i) {
        const Polynomial left = pieces.back().shifted(breaks_[i - 1] - origins.back());
        const Polynomial& right = pieces_[i];
        double scale = 0.0, diff = 0.0;
        const int deg = std::max(left.degree(), right.degree());
        for (int j = 0; j <= deg; ++j) {
            scale = std::max({scale, std::abs(left.coeff(j)), std::abs(right.coeff(j))});
            diff = std::max(diff, std::abs(left.coeff(j) - right.coeff(j)));
        }
        if (diff <= rel_tol * std::max(scale, 1.0)) continue;
        breaks.push_back(breaks_[i - 1]);
        origins.push_back(breaks_[i - 1]);
        pieces.push_back(right);
    }
    return PiecewisePolynomial(domain_, std::move(breaks), std::move(pieces));
}

// ------- free functions ------- //

double evaluate(const PiecewisePolynomial& f, double x) { return f(x); }

PiecewisePolynomial derivative(const PiecewisePolynomial& f) { return f.derivative(); }

namespace {

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

/// Sorted copy with points closer than kBreakpointMergeTol collapsed onto the
/// leftmost member of each cluster.
std::vector<double> merge_sorted(std::vector<double> pts) {
    std::sort(pts.begin(), pts.end());
    std::vector<double> out;
    for (double p : pts)
        if (out.empty() || p - out.back() >= kBreakpointMergeTol) out.push_back(p);
    return out;
}

bool same_domain(const Interval& a, const Interval& b) {
    return std::abs(a.lo - b.lo) <= kBreakpointMergeTol && std::abs(a.hi - b.hi) <= kBreakpointMergeTol;
}

}  // namespace

PiecewisePolynomial from_truncated_powers(Interval domain, const Polynomial& base,
                                          std::span<const TruncatedPowerTerm> terms) {
    std::vector<double> knots;
    for (const auto& t : terms) {
        if (t.degree < 0) throw std::invalid_argument("from_truncated_powers: negative degree");
        if (!(t.knot >= domain.lo && t.knot < domain.hi))
            throw std::domain_error("from_truncated_powers: knot " + std::to_string(t.knot) +
                                    " outside domain");
        if (t.knot - domain.lo >= kBreakpointMergeTol) knots.push_back(t.knot);
    }
    std::vector<double> breaks = merge_sorted(std::move(knots));
    std::vector<Polynomial> pieces;
    pieces.reserve(breaks.size() + 1);
    for (std::size_t i = 0; i <= breaks.size(); ++i) {
        const double o = i == 0 ? domain.lo : breaks[i - 1];
        Polynomial piece = base.shifted(o);
        for (const auto& t : terms) {
            if (t.knot > o + kBreakpointMergeTol) continue;
            // (h + (o - d))^m expanded in h.
            const double off = o - t.knot;
            std::vector<double> c(static_cast<std::size_t>(t.degree) + 1);
            for (int j = 0; j <= t.degree; ++j)
                c[j] = t.weight * binomial(t.degree, j) * std::pow(off, t.degree - j);
            piece += Polynomial(std::move(c));
        }
        pieces.push_back(std::move(piece));
    }
    return PiecewisePolynomial(domain, std::move(breaks), std::move(pieces));
}

PiecewisePolynomial linear_combine(
    Interval domain, std::span<const std::pair<double, PiecewisePolynomial>> terms) {
    std::vector<double> all;
    for (const auto& [w, f] : terms) {
        if (!same_domain(f.domain(), domain)) throw std::domain_error("linear_combine: mismatched domains");
        all.insert(all.end(), f.breakpoints().begin(), f.breakpoints().end());
    }
    std::vector<double> breaks = merge_sorted(std::move(all));
    std::vector<Polynomial> pieces;
    pieces.reserve(breaks.size() + 1);
    for (std::size_t i = 0; i <= breaks.size(); ++i) {
        const double lo = i == 0 ? domain.lo : breaks[i - 1];
        const double hi = i < breaks.size() ? breaks[i] : domain.hi;
        const double mid = 0.5 * (lo + hi);
        Polynomial acc;
        for (const auto& [w, f] : terms) {
            if (w == 0.0) continue;
            acc += w * f.piece_at_origin(f.locate(mid), lo);
        }
        pieces.push_back(std::move(acc));
    }
    return PiecewisePolynomial(domain, std::move(breaks), std::move(pieces));
}

}  // namespace tvrate
