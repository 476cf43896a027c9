#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "tvrate/experiments.hpp"
#include "tvrate/oracle.hpp"
#include "tvrate/regression.hpp"
#include "tvrate/tv.hpp"

using namespace tvrate;

namespace {

const Interval kUnit{0.0, 1.0};

// sup |H_k^{(l)}| on a dense grid, independent of the critical-point search.
double grid_derivative_sup(int k, int l) {
    Polynomial p = construct_kernel(k).poly;
    for (int j = 0; j < l; ++j) p = p.derivative();
    double best = 0.0;
    for (int i = 0; i <= 200000; ++i) best = std::max(best, std::abs(p(-1.0 + 2.0 * i / 200000.0)));
    return best;
}

}  // namespace

TEST_CASE("fit_line recovers an exact line and its standard error") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    const std::vector<double> y{3, 5, 7, 9, 11};
    const LineFit f = fit_line(x, y);
    CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(f.intercept == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(f.slope_se == doctest::Approx(0.0).epsilon(1e-12));

    // y = x + e with e = (1, -1, 0, 1, -1): rss computed by hand.
    const std::vector<double> y2{2, 1, 3, 5, 4};
    const LineFit g = fit_line(x, y2);
    const double sxx = 10.0;
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y2[i] - (g.intercept + g.slope * x[i]);
        rss += r * r;
    }
    CHECK(g.slope == doctest::Approx(0.8));
    CHECK(g.slope_se == doctest::Approx(std::sqrt(rss / 3.0 / sxx)));
    CHECK_THROWS_AS(fit_line(std::vector<double>{1.0}, std::vector<double>{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_line(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), std::invalid_argument);
}

TEST_CASE("rate table values") {
    CHECK(std::abs(theoretical_rate(RateMethod::kThisPaper, 2, 1).exponent + 0.571) < 5e-4);
    CHECK(std::abs(theoretical_rate(RateMethod::kThisPaper, 2, 1).exponent + 4.0 / 7.0) < 1e-15);
    CHECK(std::abs(theoretical_rate(RateMethod::kThisPaper, 3, 2).exponent + 18.0 / 23.0) < 1e-15);
    CHECK(std::abs(theoretical_rate(RateMethod::kThisPaper, 3, 2).exponent + 0.783) < 5e-4);
    CHECK(std::abs(theoretical_rate(RateMethod::kSimon2021, 3, 2).exponent + 0.750) < 1e-15);
    // -6/11 = -0.54545...; the published table prints -0.546.
    CHECK(std::abs(theoretical_rate(RateMethod::kThisPaper, 3, 1).exponent + 6.0 / 11.0) < 1e-15);
    CHECK(std::abs(theoretical_rate(RateMethod::kThisPaper, 3, 1).exponent + 0.546) < 1e-3);
    CHECK(std::abs(theoretical_rate(RateMethod::kCorrectSpec, 2, 2).exponent + 0.8) < 1e-15);
}

TEST_CASE("rate formulas agree at ell = 1 and improve for ell > 1") {
    for (int k = 2; k <= 8; ++k)
        CHECK(theoretical_rate(RateMethod::kThisPaper, k, 1).exponent ==
              doctest::Approx(theoretical_rate(RateMethod::kSimon2021, k, 1).exponent).epsilon(1e-15));
    for (int k = 3; k <= 8; ++k)
        for (int ell = 2; ell < k; ++ell)
            CHECK(std::abs(theoretical_rate(RateMethod::kThisPaper, k, ell).exponent) >
                  std::abs(theoretical_rate(RateMethod::kSimon2021, k, ell).exponent));
}

TEST_CASE("rate formulas reject the wrong regime") {
    CHECK_THROWS_AS(theoretical_rate(RateMethod::kThisPaper, 2, 2), std::invalid_argument);
    CHECK_THROWS_AS(theoretical_rate(RateMethod::kSimon2021, 1, 2), std::invalid_argument);
    CHECK_THROWS_AS(theoretical_rate(RateMethod::kCorrectSpec, 3, 2), std::invalid_argument);
    CHECK(to_string(RateMethod::kThisPaper) == "this_paper");
    CHECK(to_string(RateMethod::kSimon2021) == "simon2021");
}

TEST_CASE("delta schedule") {
    CHECK(delta_schedule(10000, 2, 1) == doctest::Approx(std::pow(10.0, -16.0 / 7.0)).epsilon(1e-14));
    CHECK(delta_schedule(10000, 2, 1) == doctest::Approx(5.18e-3).epsilon(1e-3));
    const double ratio = delta_schedule(2048, 3, 2) / delta_schedule(1024, 3, 2);
    CHECK(std::log2(ratio) == doctest::Approx(-6.0 / 23.0).epsilon(1e-12));
    CHECK_THROWS_AS(delta_schedule(1, 2, 1), std::invalid_argument);
    CHECK_THROWS_AS(delta_schedule(100, 2, 2), std::invalid_argument);
}

TEST_CASE("lambda schedule exponents") {
    const double r = lambda_schedule(2048, 3, 2, 3.0, 1.0) / lambda_schedule(1024, 3, 2, 3.0, 1.0);
    CHECK(std::log2(r) == doctest::Approx(-24.0 / 23.0).epsilon(1e-12));
    const double p = lambda_schedule(1000, 3, 2, 6.0, 1.0) / lambda_schedule(1000, 3, 2, 3.0, 1.0);
    CHECK(std::log2(p) == doctest::Approx(-5.0 / 7.0).epsilon(1e-12));
    const double c = lambda_schedule(1000, 2, 1, 3.0, 2.0) / lambda_schedule(1000, 2, 1, 3.0, 1.0);
    CHECK(std::log2(c) == doctest::Approx((0.5 - 2.0) / (0.5 + 2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(lambda_schedule(1000, 3, 2, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(lambda_schedule(1000, 3, 2, 3.0, -1.0), std::invalid_argument);
}

TEST_CASE("schedule balances the two terms of the risk bound") {
    for (int e = 8; e <= 16; ++e) {
        const std::size_t n = std::size_t{1} << e;
        for (auto [k, ell] : {std::pair{2, 1}, std::pair{3, 1}, std::pair{3, 2}}) {
            const double d = delta_schedule(n, k, ell);
            const double approx = std::pow(d, 2.0 * ell - 1.0);
            const double est = std::pow(d, -2.0 * (k - ell) / (2.0 * k + 1.0)) *
                               std::pow(static_cast<double>(n), -2.0 * k / (2.0 * k + 1.0));
            const double ratio = approx / est;
            CHECK(ratio <= 4.0);
            CHECK(ratio >= 0.25);
        }
    }
}

TEST_CASE("oracle of the step is exact outside the bandwidth") {
    const Truth step = make_truth("step3");
    const PiecewisePolynomial f = build_oracle({step.f, 1, 2, 0.1});
    for (double x : {0.0, 0.1, 0.39, 0.4}) CHECK(std::abs(f(x)) <= 1e-12);
    for (double x : {0.6, 0.61, 0.9, 1.0}) CHECK(f(x) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(f(0.5) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(f(0.45) < f(0.55));
}

TEST_CASE("oracle leaves a linear truth unchanged") {
    const PiecewisePolynomial line(kUnit, {}, {Polynomial{{0.5, -2.0}}});
    for (double d : {0.05, 0.1, 0.2}) {
        const PiecewisePolynomial f = build_oracle({line, 2, 2, d});
        for (int i = 0; i <= 100; ++i) {
            const double x = i / 100.0;
            CHECK(std::abs(f(x) - line(x)) <= 1e-12);
        }
    }
}

TEST_CASE("oracle of the ramp has finite third-order variation") {
    const Truth ramp = make_truth("ramp3");
    const PiecewisePolynomial f = build_oracle({ramp.f, 2, 3, 0.05});
    const TVReport tv = tv_continuous(f, 3);
    CHECK(tv.finite());
    CHECK(std::isfinite(tv.total));
    CHECK(tv.total > 0.0);
}

TEST_CASE("oracle variation stays finite at small bandwidths") {
    // Pieces of width ~delta carry degree-2k-ish polynomials with large local
    // coefficients; rounding must not read as a discontinuity.
    const Truth step = make_truth("step3");
    double previous = 0.0;
    for (double d : {0.02, 0.01, 0.0073354, 0.005, 0.003}) {
        CAPTURE(d);
        const TVReport tv = tv_continuous(build_oracle({step.f, 1, 3, d}), 3);
        REQUIRE(tv.finite());
        if (previous > 0.0) CHECK(tv.total > previous);
        previous = tv.total;
    }
    const Truth ramp = make_truth("ramp3");
    for (double d : {0.005, 0.003}) CHECK(tv_continuous(build_oracle({ramp.f, 2, 3, d}), 3).finite());
}

TEST_CASE("oracle spec validation") {
    const Truth step = make_truth("step3");
    CHECK_THROWS_AS(build_oracle({step.f, 1, 2, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(build_oracle({step.f, 1, 9, 0.1}), std::invalid_argument);
    // The step has infinite second-order variation.
    CHECK_THROWS_AS(build_oracle({step.f, 2, 3, 0.1}), std::invalid_argument);
}

TEST_CASE("approximation error") {
    const Truth step = make_truth("step3");
    CHECK(approx_error_sq(step.f, step.f, 1000) == 0.0);
    for (double d : {0.2, 0.1, 0.05}) {
        const PiecewisePolynomial f = build_oracle({step.f, 1, 2, d});
        const std::size_t n = 4000;
        double sup = 0.0;
        int inside = 0;
        for (std::size_t i = 1; i <= n; ++i) {
            const double x = static_cast<double>(i) / n;
            sup = std::max(sup, std::abs(step.f(x) - f(x)));
            if (std::abs(x - 0.5) <= d) ++inside;
        }
        CHECK(sup <= 3.0 + 1e-12);
        CHECK(approx_error_sq(step.f, f, n) <= static_cast<double>(inside) / n * sup * sup);
        CHECK(approx_error_sq(step.f, f, n) <= 2.0 * d * 9.0 + 1e-3);
    }
    CHECK_THROWS_AS(approx_error_sq(step.f, step.f, 0), std::invalid_argument);
}

TEST_CASE("penalty bound") {
    const Truth ramp = make_truth("ramp3");
    const double c31 = grid_derivative_sup(3, 1);
    CHECK(penalty_constant(3, 2) == doctest::Approx(2.0 * c31).epsilon(1e-8));
    CHECK(penalty_bound({ramp.f, 2, 3, 0.1}) == doctest::Approx(60.0 * c31).epsilon(1e-8));
    CHECK(penalty_bound({ramp.f, 2, 3, 0.05}) == doctest::Approx(2.0 * penalty_bound({ramp.f, 2, 3, 0.1})));
    const Truth step = make_truth("step3");
    CHECK(penalty_bound({step.f, 1, 3, 0.05}) == doctest::Approx(4.0 * penalty_bound({step.f, 1, 3, 0.1})));
    CHECK(penalty_bound({ramp.f, 2, 3, 0.1}, 1.0) == doctest::Approx(30.0));
    CHECK_THROWS_AS(penalty_bound({ramp.f, 2, 2, 0.1}), std::invalid_argument);
    // A jump makes P_2 infinite.
    CHECK(std::isinf(penalty_bound({step.f, 2, 3, 0.1})));
}

TEST_CASE("lemma scaling on the step and ramp truths") {
    const std::vector<double> deltas{0.2, 0.1, 0.05, 0.025, 0.0125};
    struct Case {
        const char* truth;
        int ell, k;
    };
    for (const Case c : {Case{"step3", 1, 2}, Case{"step3", 1, 3}, Case{"ramp3", 2, 3}}) {
        CAPTURE(c.truth);
        CAPTURE(c.k);
        const LemmaSweep s = lemma_sweep(make_truth(c.truth).f, c.ell, c.k, deltas, 65536);
        CHECK(std::abs(s.approx_fit.slope - (2.0 * c.ell - 1.0)) <= 0.15);
        CHECK(std::abs(s.penalty_fit.slope + (c.k - c.ell)) <= 0.05);
        CHECK(s.bound_holds);
        for (const auto& row : s.rows) CHECK(row.penalty <= row.bound);
    }
}
