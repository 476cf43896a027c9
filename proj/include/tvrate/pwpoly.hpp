#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace tvrate {

/// Dense univariate polynomial, coefficients in ascending degree.
///
/// The zero polynomial has an empty coefficient list and degree -1.
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(std::vector<double> coeffs);
    Polynomial(std::initializer_list<double> coeffs);

    static Polynomial constant(double c);
    static Polynomial monomial(int degree, double coeff = 1.0);

    const std::vector<double>& coeffs() const { return coeffs_; }
    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    bool is_zero() const { return coeffs_.empty(); }
    double coeff(int i) const;

    double operator()(double x) const;

    Polynomial derivative() const;
    Polynomial derivative(int order) const;
    /// Antiderivative that vanishes at 0.
    Polynomial antiderivative() const;
    double integrate(double a, double b) const;

    /// q(x) = p(x + h)
    Polynomial shifted(double h) const;
    /// q(x) = p(s * x)
    Polynomial scaled_arg(double s) const;

    /// Drops trailing coefficients with |c| <= tol * max|c|.
    Polynomial trimmed(double rel_tol) const;

    Polynomial& operator+=(const Polynomial& rhs);
    Polynomial& operator-=(const Polynomial& rhs);
    Polynomial& operator*=(double s);

    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
    friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
    friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
    friend bool operator==(const Polynomial&, const Polynomial&) = default;

private:
    void canonicalize();
    std::vector<double> coeffs_;
};

/// Real roots of p in the open interval (a, b) at which p changes sign,
/// sorted ascending. Each root is bracketed to width 1e-13 by bisection on
/// intervals where p is monotone (located from the roots of p').
std::vector<double> sign_change_roots(const Polynomial& p, double a, double b);

/// Exact  \int_a^b |p(t)| dt  up to root-isolation tolerance.
double integrate_abs(const Polynomial& p, double a, double b);

/// Closed real interval.
struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    double width() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// beta * (x - knot)^degree * 1(x >= knot)
struct TruncatedPowerTerm {
    double knot = 0.0;
    int degree = 0;
    double weight = 1.0;
};

/// Piecewise polynomial on a closed interval.
///
/// Cell i spans [origin(i), next breakpoint) and carries a polynomial in the
/// local coordinate h = x - origin(i), where origin(0) is the domain's lower
/// end and origin(i) = breakpoints()[i-1] otherwise. Evaluation is
/// right-continuous at breakpoints; the last cell is closed at the domain's
/// upper end.
class PiecewisePolynomial {
public:
    PiecewisePolynomial() = default;
    PiecewisePolynomial(Interval domain, std::vector<double> breakpoints,
                        std::vector<Polynomial> local_pieces);

    /// Single global polynomial (given in the global coordinate x).
    static PiecewisePolynomial from_global(Interval domain, const Polynomial& p);
    static PiecewisePolynomial zero(Interval domain);

    const Interval& domain() const { return domain_; }
    const std::vector<double>& breakpoints() const { return breaks_; }
    const std::vector<Polynomial>& pieces() const { return pieces_; }
    std::size_t num_pieces() const { return pieces_.size(); }

    double origin(std::size_t i) const { return i == 0 ? domain_.lo : breaks_[i - 1]; }
    Interval cell(std::size_t i) const;
    /// Index of the cell containing x; cells outside the domain extend the
    /// boundary cells.
    std::size_t locate(double x) const;
    /// Piece i re-expressed in local coordinate x - new_origin.
    Polynomial piece_at_origin(std::size_t i, double new_origin) const;

    /// Value at x; throws std::domain_error outside the domain.
    double operator()(double x) const;
    /// Value at any real x, extending the first and last pieces' polynomials
    /// beyond the domain.
    double evaluate_extended(double x) const;

    PiecewisePolynomial derivative() const;
    PiecewisePolynomial derivative(int order) const;

    /// \int_a^b f, for a <= b inside the domain.
    double integrate(double a, double b) const;

    int max_degree() const;

    /// Removes breakpoints across which adjacent pieces agree to within
    /// rel_tol (coefficientwise, after re-anchoring).
    PiecewisePolynomial simplified(double rel_tol = 1e-12) const;

private:
    Interval domain_;
    std::vector<double> breaks_;
    std::vector<Polynomial> pieces_;
};

/// Breakpoints merged when closer than this.
inline constexpr double kBreakpointMergeTol = 1e-12;

/// Value at x of the piecewise polynomial; throws std::domain_error outside
/// its domain.
double evaluate(const PiecewisePolynomial& f, double x);

PiecewisePolynomial derivative(const PiecewisePolynomial& f);

/// base(x) + sum_j weight_j (x - knot_j)^degree_j 1(x >= knot_j).
/// Knots must lie in [domain.lo, domain.hi); a knot equal to domain.lo acts
/// on the whole domain and produces no breakpoint.
PiecewisePolynomial from_truncated_powers(Interval domain, const Polynomial& base,
                                          std::span<const TruncatedPowerTerm> terms);

/// sum_j w_j f_j on the union of breakpoints. All f_j must share `domain`.
PiecewisePolynomial linear_combine(
    Interval domain, std::span<const std::pair<double, PiecewisePolynomial>> terms);

}  // namespace tvrate
