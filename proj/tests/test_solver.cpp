#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "tvrate/solver.hpp"

using namespace tvrate;

namespace {

double rms_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s / static_cast<double>(a.size()));
}

// Dual projected gradient for 0.5||y - b||^2 + lambda ||Delta b||_1:
// minimize 0.5 ||y - D^T u||^2 over |u| <= lambda, b = y - D^T u.
std::vector<double> tv_denoise_dual(const std::vector<double>& y, double lambda, int iters) {
    const std::size_t n = y.size();
    std::vector<double> u(n - 1, 0.0), b(n);
    for (int it = 0; it < iters; ++it) {
        b = difference_adjoint(u, 1, n);
        for (std::size_t i = 0; i < n; ++i) b[i] = y[i] - b[i];
        const std::vector<double> g = difference_apply(b, 1);
        for (std::size_t i = 0; i + 1 < n; ++i) u[i] = std::clamp(u[i] + 0.25 * g[i], -lambda, lambda);
    }
    b = difference_adjoint(u, 1, n);
    for (std::size_t i = 0; i < n; ++i) b[i] = y[i] - b[i];
    return b;
}

std::vector<double> noisy_signal(std::mt19937_64& gen, std::size_t n, int kind) {
    std::normal_distribution<double> z;
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i + 1) / static_cast<double>(n);
        double f = 0.0;
        if (kind == 0) f = x >= 0.5 ? 3.0 : 0.0;
        if (kind == 1) f = std::max(0.0, 3.0 * (x - 0.5));
        if (kind == 2) f = std::sin(6.0 * x);
        y[i] = f + 0.5 * z(gen);
    }
    return y;
}

}  // namespace

TEST_CASE("difference operators") {
    const std::vector<double> ones{1, 1, 1}, sq{0, 1, 4, 9};
    CHECK(difference_apply(ones, 1) == std::vector<double>{0, 0});
    CHECK(difference_apply(sq, 2) == std::vector<double>{2, 2});
    CHECK_THROWS_AS(difference_apply(ones, 3), std::invalid_argument);
    std::vector<double> cubic(10);
    for (std::size_t i = 0; i < cubic.size(); ++i) cubic[i] = std::pow(static_cast<double>(i), 3) - 2.0 * i;
    for (double v : difference_apply(cubic, 4)) CHECK(v == 0.0);

    // <D x, v> = <x, D^T v>
    std::mt19937_64 gen(1);
    std::normal_distribution<double> z;
    for (int k = 1; k <= 4; ++k) {
        std::vector<double> x(12), v(12 - static_cast<std::size_t>(k));
        for (double& a : x) a = z(gen);
        for (double& a : v) a = z(gen);
        const auto dx = difference_apply(x, k);
        const auto dtv = difference_adjoint(v, k, x.size());
        CHECK(std::inner_product(dx.begin(), dx.end(), v.begin(), 0.0) ==
              doctest::Approx(std::inner_product(x.begin(), x.end(), dtv.begin(), 0.0)).epsilon(1e-12));
    }
}

TEST_CASE("problem validation") {
    CHECK_THROWS_AS(solve({{1.0, 2.0}, 1, 0.1}), std::invalid_argument);
    CHECK_THROWS_AS(solve({{1.0, 2.0, 3.0, 4.0}, 1, -0.1}), std::invalid_argument);
    CHECK_THROWS_AS(solve({{1.0, 2.0, NAN, 4.0}, 1, 0.1}), std::invalid_argument);
    CHECK_THROWS_AS(solve({{1.0, 2.0, 3.0, 4.0}, 0, 0.1}), std::invalid_argument);
    SolverOptions bad;
    bad.tol = 0.0;
    CHECK_THROWS_AS(solve({{1.0, 2.0, 3.0, 4.0}, 1, 0.1}, bad), std::invalid_argument);
    std::vector<double> big(201, 1.0);
    CHECK_THROWS_AS(solve_reference({big, 1, 0.1}), std::invalid_argument);
}

TEST_CASE("tv_denoise against dual projected gradient") {
    std::mt19937_64 gen(7);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 5 + static_cast<std::size_t>(trial) * 3;
        const std::vector<double> y = noisy_signal(gen, n, trial % 3);
        for (double lambda : {0.01, 0.3, 2.0, 50.0}) {
            std::vector<double> out(n);
            tv_denoise(y, lambda, out);
            const std::vector<double> oracle = tv_denoise_dual(y, lambda, 200000);
            CHECK(rms_diff(out, oracle) <= 1e-6);
        }
    }
    std::vector<double> one{2.0}, out1(1);
    tv_denoise(one, 1.0, out1);
    CHECK(out1[0] == 2.0);
    const std::vector<double> y{1.0, 5.0, 2.0, 8.0};
    std::vector<double> out(4);
    tv_denoise(y, 100.0, out);
    for (double v : out) CHECK(v == doctest::Approx(4.0));
}

TEST_CASE("lambda zero returns the data") {
    std::mt19937_64 gen(2);
    const std::vector<double> y = noisy_signal(gen, 40, 2);
    for (int k = 1; k <= 3; ++k) {
        const TrendFilterFit a = solve({y, k, 0.0}), b = solve_reference({y, k, 0.0});
        CHECK(a.theta == y);
        CHECK(b.theta == y);
        CHECK(a.kkt_gap == 0.0);
        CHECK(kkt_gap({y, k, 0.0}, y) == 0.0);
    }
}

TEST_CASE("large lambda gives the polynomial fit") {
    std::mt19937_64 gen(4);
    const std::vector<double> y = noisy_signal(gen, 60, 2);
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / 60.0;
    const TrendFilterFit c = solve({y, 1, 1e3});
    for (double v : c.theta) CHECK(v == doctest::Approx(mean).epsilon(1e-8));
    for (int k = 2; k <= 3; ++k) {
        const TrendFilterFit f = solve({y, k, 1e3});
        const std::vector<double> p = polynomial_fit(y, k);
        CHECK(rms_diff(f.theta, p) <= 1e-7);
    }
}

TEST_CASE("polynomial data is a fixed point") {
    for (int k = 1; k <= 3; ++k) {
        std::vector<double> y(30);
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double x = static_cast<double>(i + 1) / 30.0;
            y[i] = 1.0 + (k >= 2 ? -2.0 * x : 0.0) + (k >= 3 ? 0.7 * x * x : 0.0);
        }
        for (double lambda : {1e-4, 1e-2, 1.0}) {
            const TrendFilterFit r = solve_reference({y, k, lambda});
            CHECK(rms_diff(r.theta, y) <= 1e-10);
            const TrendFilterFit s = solve({y, k, lambda});
            CHECK(rms_diff(s.theta, y) <= 1e-8);
        }
    }
}

TEST_CASE("kkt_gap detects suboptimal points") {
    std::mt19937_64 gen(6);
    const std::vector<double> y = noisy_signal(gen, 50, 0);
    for (int k = 1; k <= 3; ++k) {
        CHECK(kkt_gap({y, k, 0.01}, y) > 1e-6);
        const TrendFilterFit r = solve_reference({y, k, 0.01});
        CHECK(r.kkt_gap <= 1e-11);
        CHECK(kkt_gap({y, k, 0.01}, r.theta) <= 1e-11);
    }
}

TEST_CASE("solver agrees with the reference") {
    std::mt19937_64 gen(12);
    std::uniform_real_distribution<double> loglam(-6.0, 0.0);
    for (int trial = 0; trial < 30; ++trial) {
        const int k = 1 + trial % 3;
        const std::vector<double> y = noisy_signal(gen, 50, trial % 3);
        const TrendFilterProblem p{y, k, std::pow(10.0, loglam(gen))};
        CAPTURE(k);
        CAPTURE(p.lambda);
        SolverOptions opts;
        opts.tol = 1e-10;
        const TrendFilterFit a = solve(p, opts), b = solve_reference(p);
        CHECK(a.kkt_gap <= 1e-8);
        CHECK(std::abs(a.objective - b.objective) <= 1e-8);
        CHECK(rms_diff(a.theta, b.theta) <= 1e-4);
        CHECK(a.objective == doctest::Approx(objective(p, a.theta)).epsilon(1e-12));
    }
}

TEST_CASE("fused splitting agrees with the difference splitting") {
    std::mt19937_64 gen(13);
    for (int k = 1; k <= 3; ++k) {
        const std::vector<double> y = noisy_signal(gen, 300, k - 1);
        for (double lambda : {1e-6, 1e-4, 1e-2}) {
            const TrendFilterProblem p{y, k, lambda};
            SolverOptions opts;
            opts.tol = 1e-10;
            const TrendFilterFit a = solve(p, opts);
            opts.splitting = Splitting::kFusedDifference;
            const TrendFilterFit b = solve(p, opts);
            CAPTURE(k);
            CAPTURE(lambda);
            CHECK(std::abs(a.objective - b.objective) <= 1e-8 * std::max(1.0, a.objective));
            CHECK(rms_diff(a.theta, b.theta) <= 1e-4);
        }
    }
}

TEST_CASE("warm start reaches the same solution") {
    std::mt19937_64 gen(14);
    const std::vector<double> y = noisy_signal(gen, 400, 1);
    for (Splitting s : {Splitting::kDifference, Splitting::kFusedDifference}) {
        SolverOptions opts;
        opts.splitting = s;
        opts.tol = 1e-10;
        const TrendFilterFit first = solve({y, 2, 1e-4}, opts);
        const TrendFilterFit warm = solve({y, 2, 5e-5}, opts, &first);
        const TrendFilterFit cold = solve({y, 2, 5e-5}, opts);
        CHECK(std::abs(warm.objective - cold.objective) <= 1e-9);
    }
}

TEST_CASE("objective bounds and sparsity path") {
    std::mt19937_64 gen(15);
    const std::vector<double> y = noisy_signal(gen, 120, 1);
    for (int k = 1; k <= 3; ++k) {
        int prev_nnz = 1 << 30;
        int increases = 0;
        for (int j = 0; j < 10; ++j) {
            const double lambda = std::pow(10.0, -6.0 + 0.5 * j);
            const TrendFilterProblem p{y, k, lambda};
            const TrendFilterFit f = solve(p);
            CHECK(f.objective <= objective(p, y) + 1e-12);
            CHECK(f.objective <= objective(p, polynomial_fit(y, k)) + 1e-12);
            int nnz = 0;
            for (double d : difference_apply(f.theta, k)) nnz += std::abs(d) > 1e-9;
            if (nnz > prev_nnz) ++increases;
            prev_nnz = nnz;
        }
        CHECK(increases <= 1);
    }
}

TEST_CASE("solution is nonexpansive in the data") {
    std::mt19937_64 gen(16);
    std::normal_distribution<double> z;
    for (int k = 1; k <= 3; ++k) {
        const std::vector<double> y = noisy_signal(gen, 50, 1);
        std::vector<double> y2 = y;
        for (double& v : y2) v += 1e-6 * z(gen);
        const TrendFilterFit a = solve_reference({y, k, 1e-3}), b = solve_reference({y2, k, 1e-3});
        CHECK(rms_diff(a.theta, b.theta) <= rms_diff(y, y2) * (1 + 1e-6) + 1e-12);
    }
}
