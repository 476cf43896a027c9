#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "support.hpp"
#include "tvrate/kernel.hpp"

using namespace tvrate;

namespace {

const Interval kUnit{0.0, 1.0};

PiecewisePolynomial step(double weight, int degree = 0) {
    const TruncatedPowerTerm t{0.5, degree, weight};
    return from_truncated_powers(kUnit, Polynomial{}, std::span(&t, 1));
}

// (f * H_delta)(x) by quadrature, split at the kernel's own breakpoints and
// at the breakpoints of f.
double convolve_by_quadrature(const PiecewisePolynomial& f, const ScaledKernel& h, double x) {
    const double d = h.bandwidth();
    std::vector<double> cuts{-d};
    for (double b : f.breakpoints())
        if (x - b > -d && x - b < d) cuts.push_back(x - b);
    cuts.push_back(d);
    std::sort(cuts.begin(), cuts.end());
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        s += testing_support::integrate([&](double t) { return f.evaluate_extended(x - t) * h(t); }, cuts[i],
                                        cuts[i + 1], 1e-14);
    return s;
}

}  // namespace

TEST_CASE("bump moments") {
    // \int (1-u^2) du = 4/3, \int (1-u^2)^2 u^2 du = 16/105
    CHECK(bump_moment(1, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
    CHECK(bump_moment(2, 1) == doctest::Approx(16.0 / 105.0).epsilon(1e-14));
    for (int q = 0; q <= 6; ++q)
        for (int m = 0; m <= 4; ++m) {
            const double oracle = testing_support::integrate(
                [&](double u) { return std::pow(1 - u * u, q) * std::pow(u, 2 * m); }, -1.0, 1.0);
            CHECK(bump_moment(q, m) == doctest::Approx(oracle).epsilon(1e-11));
        }
}

TEST_CASE("known kernels") {
    const HigherOrderKernel h2 = construct_kernel(2);
    for (double u : {-0.9, -0.3, 0.0, 0.4, 0.8})
        CHECK(h2(u) == doctest::Approx(15.0 / 16.0 * std::pow(1 - u * u, 2)).epsilon(1e-14));
    CHECK(h2(0.0) == doctest::Approx(0.9375).epsilon(1e-15));

    const HigherOrderKernel h3 = construct_kernel(3);
    for (double u : {-0.9, -0.3, 0.0, 0.4, 0.8})
        CHECK(h3(u) == doctest::Approx(std::pow(1 - u * u, 3) * (945.0 - 3465.0 * u * u) / 512.0).epsilon(1e-13));
    CHECK(h3(0.0) == doctest::Approx(945.0 / 512.0).epsilon(1e-14));
    CHECK(h3(0.8) < 0.0);
    CHECK(h3(1.5) == 0.0);
}

TEST_CASE("construct_kernel range") {
    CHECK_THROWS_AS(construct_kernel(0), std::invalid_argument);
    CHECK_THROWS_AS(construct_kernel(9), std::invalid_argument);
    CHECK_NOTHROW(construct_kernel(1));
    CHECK_NOTHROW(construct_kernel(8));
}

TEST_CASE("kernel invariants") {
    for (int k = 1; k <= 8; ++k) {
        CAPTURE(k);
        const HigherOrderKernel h = construct_kernel(k);
        CHECK(h.smoothness == k);
        const auto& c = h.poly.coeffs();
        for (std::size_t i = 1; i < c.size(); i += 2) CHECK(c[i] == 0.0);
        CHECK(std::abs(h.moments[0] - 1.0) <= 1e-10);
        for (int j = 1; j < k; ++j) CHECK(std::abs(h.moments[static_cast<std::size_t>(j)]) <= 1e-10);
        for (int j = 0; j < k; ++j) {
            // Relative to the coefficient scale: high derivatives cancel heavily at +-1.
            const Polynomial d = h.poly.derivative(j);
            double scale = 0.0;
            for (double v : d.coeffs()) scale += std::abs(v);
            CHECK(std::abs(d(1.0)) <= 1e-13 * scale);
            CHECK(std::abs(d(-1.0)) <= 1e-13 * scale);
        }
        REQUIRE(h.deriv_bounds.size() == static_cast<std::size_t>(k));
        for (double b : h.deriv_bounds) CHECK((std::isfinite(b) && b > 0.0));
    }
}

TEST_CASE("moments against quadrature") {
    for (int k = 2; k <= 6; ++k) {
        const HigherOrderKernel h = construct_kernel(k);
        for (int j = 0; j <= k; ++j) {
            const double q = testing_support::integrate([&](double u) { return std::pow(u, j) * h(u); }, -1.0, 1.0);
            CHECK(kernel_moment(h, j) == doctest::Approx(q).epsilon(1e-10));
        }
    }
    const HigherOrderKernel h2 = construct_kernel(2), h3 = construct_kernel(3);
    CHECK(kernel_moment(h2, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(kernel_moment(h2, 1)) <= 1e-15);
    CHECK(std::abs(kernel_moment(h3, 2)) <= 1e-12);
}

TEST_CASE("derivative_bound") {
    const HigherOrderKernel h2 = construct_kernel(2), h3 = construct_kernel(3);
    CHECK(derivative_bound(h2, 0) == doctest::Approx(0.9375).epsilon(1e-13));
    CHECK(derivative_bound(h3, 0) == doctest::Approx(945.0 / 512.0).epsilon(1e-13));
    CHECK_THROWS_AS(derivative_bound(h2, 2), std::invalid_argument);
    CHECK_THROWS_AS(derivative_bound(h2, -1), std::invalid_argument);
    // Dense grid oracle.
    for (int k = 2; k <= 6; ++k) {
        const HigherOrderKernel h = construct_kernel(k);
        for (int l = 0; l < k; ++l) {
            const Polynomial d = h.poly.derivative(l);
            double grid = 0.0;
            for (int i = 0; i <= 200000; ++i) grid = std::max(grid, std::abs(d(-1.0 + i * 1e-5)));
            const double b = derivative_bound(h, l);
            CHECK(b >= grid * (1 - 1e-12));
            CHECK(b <= grid * (1 + 1e-8));
            CHECK(b >= std::abs(d(0.0)));
        }
    }
}

TEST_CASE("scaled kernel") {
    const HigherOrderKernel h3 = construct_kernel(3);
    CHECK_THROWS_AS(ScaledKernel(h3, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ScaledKernel(h3, -0.1), std::invalid_argument);
    for (double d : {1e-3, 0.05, 0.1, 0.5}) {
        const ScaledKernel s(h3, d);
        CHECK(std::abs(s.mass() - 1.0) <= 1e-12);
        CHECK(s(0.3 * d) == doctest::Approx(h3(0.3) / d));
        CHECK(s(1.01 * d) == 0.0);
        const double q = testing_support::integrate([&](double t) { return s(t); }, -d, d);
        CHECK(q == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("convolution leaves low-degree polynomials unchanged") {
    for (int k = 2; k <= 6; ++k) {
        const HigherOrderKernel h = construct_kernel(k);
        for (int m = 0; m < k; ++m) {
            const PiecewisePolynomial f = PiecewisePolynomial::from_global(kUnit, Polynomial::monomial(m));
            for (double d : {0.05, 0.1, 0.2}) {
                const PiecewisePolynomial g = convolve(f, ScaledKernel(h, d));
                double worst = 0.0;
                for (int i = 0; i < 500; ++i) {
                    const double x = (i + 0.5) / 500.0;
                    worst = std::max(worst, std::abs(evaluate(g, x) - std::pow(x, m)));
                }
                CHECK(worst <= 1e-9);
            }
        }
    }
}

TEST_CASE("convolution of a step") {
    const ScaledKernel s(construct_kernel(2), 0.1);
    const PiecewisePolynomial g = convolve(step(3.0), s);
    CHECK(evaluate(g, 0.5) == doctest::Approx(1.5).epsilon(1e-13));
    for (double x : {0.0, 0.2, 0.4}) CHECK(std::abs(evaluate(g, x)) <= 1e-13);
    for (double x : {0.6, 0.8, 1.0}) CHECK(std::abs(evaluate(g, x) - 3.0) <= 1e-13);
    CHECK(g.breakpoints().size() == 2);
    CHECK(g.breakpoints()[0] == doctest::Approx(0.4));
    CHECK(g.breakpoints()[1] == doctest::Approx(0.6));

    for (int k = 1; k <= 6; ++k) {
        const PiecewisePolynomial u = convolve(step(1.0), ScaledKernel(construct_kernel(k), 0.07));
        CAPTURE(k);
        CHECK(std::abs(evaluate(u, 0.5) - 0.5) <= 1e-11);
    }
}

TEST_CASE("convolution locality") {
    const std::vector<TruncatedPowerTerm> terms{{0.3, 1, 2.0}, {0.62, 0, -1.0}, {0.62, 2, 4.0}};
    const PiecewisePolynomial f = from_truncated_powers(kUnit, Polynomial{0.5, -1.0, 0.25}, terms);
    const double d = 0.04;
    const PiecewisePolynomial g = convolve(f, ScaledKernel(construct_kernel(3), d));
    for (std::size_t i = 0; i < g.num_pieces(); ++i) {
        const Interval c = g.cell(i);
        bool far = true;
        for (double b : f.breakpoints()) far = far && (c.lo >= b + d - 1e-12 || c.hi <= b - d + 1e-12);
        if (!far) continue;
        // f has degree 2 < k on these cells.
        const std::size_t j = f.locate(0.5 * (c.lo + c.hi));
        const Polynomial a = g.piece_at_origin(i, c.lo), b = f.piece_at_origin(j, c.lo);
        for (int q = 0; q <= 3; ++q) CHECK(std::abs(a.coeff(q) - b.coeff(q)) <= 1e-10);
    }
}

TEST_CASE("convolution against quadrature") {
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const std::vector<TruncatedPowerTerm> terms{{0.25, 0, 1.5}, {0.5, 1, 3.0}, {0.52, 3, -7.0}, {0.8, 2, 2.0}};
    const PiecewisePolynomial f = from_truncated_powers(kUnit, Polynomial{0.2, 1.0}, terms);
    for (int k : {2, 3, 5}) {
        for (double d : {0.01, 0.1}) {
            const ScaledKernel s(construct_kernel(k), d);
            const PiecewisePolynomial g = convolve(f, s);
            for (int i = 0; i < 50; ++i) {
                const double x = unif(gen);
                CHECK(std::abs(evaluate(g, x) - convolve_by_quadrature(f, s, x)) <= 1e-8);
            }
        }
    }
}
