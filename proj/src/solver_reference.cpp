#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "banded.hpp"
#include "tvrate/solver.hpp"

namespace tvrate {

namespace {

constexpr std::size_t kReferenceMaxSize = 200;
constexpr double kReferenceGap = 1e-11;
constexpr int kMaxSweeps = 200000;

/// Columns h_j with Delta^k h_j = e_j and h_j[0..k-1] = 0: the discrete
/// truncated-power (falling-difference) basis.
Eigen::MatrixXd truncated_power_basis(std::size_t n, int k) {
    const std::vector<double> c = detail::difference_stencil(k);
    const std::size_t m = n - static_cast<std::size_t>(k);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < m; ++i) {
            double v = (i == j) ? 1.0 : 0.0;
            for (int q = 0; q < k; ++q) v -= c[q] * h(static_cast<Eigen::Index>(i + q), static_cast<Eigen::Index>(j));
            h(static_cast<Eigen::Index>(i + k), static_cast<Eigen::Index>(j)) = v;
        }
    }
    return h;
}

double soft(double z, double t) {
    const double a = std::abs(z) - t;
    return a > 0.0 ? std::copysign(a, z) : 0.0;
}

}  // namespace

TrendFilterFit solve_reference(const TrendFilterProblem& problem) {
    problem.validate();
    const std::size_t n = problem.size();
    if (n > kReferenceMaxSize) throw std::invalid_argument("solve_reference: n must be <= 200");
    const int k = problem.order;
    const auto ni = static_cast<Eigen::Index>(n);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(problem.y.data(), ni);

    TrendFilterFit fit;
    if (problem.lambda == 0.0) {
        fit.theta = problem.y;
        fit.objective = objective(problem, fit.theta);
        fit.converged = true;
        return fit;
    }
    const double gamma = problem.lambda * std::pow(static_cast<double>(n), k);

    // Unpenalized polynomial part projected out.
    Eigen::MatrixXd poly(ni, k);
    for (Eigen::Index i = 0; i < ni; ++i) {
        const double t = 2.0 * static_cast<double>(i + 1) / static_cast<double>(n) - 1.0;
        double p = 1.0;
        for (int j = 0; j < k; ++j, p *= t) poly(i, j) = p;
    }
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(poly).householderQ() *
                              Eigen::MatrixXd::Identity(ni, k);
    const Eigen::MatrixXd h = truncated_power_basis(n, k);
    const Eigen::MatrixXd x = h - q * (q.transpose() * h);
    const Eigen::VectorXd y_perp = y - q * (q.transpose() * y);
    const Eigen::Index m = x.cols();
    const Eigen::VectorXd col_sq = x.colwise().squaredNorm().transpose();

    auto theta_of = [&](const Eigen::VectorXd& beta) -> std::vector<double> {
        const Eigen::VectorXd hb = h * beta;
        const Eigen::VectorXd t = hb + q * (q.transpose() * (y - hb));
        return {t.data(), t.data() + t.size()};
    };

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd r = y_perp;
    auto sweep = [&](bool active_only) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            if (active_only && beta(j) == 0.0) continue;
            const double z = x.col(j).dot(r) + col_sq(j) * beta(j);
            const double b = soft(z, gamma) / col_sq(j);
            const double delta = b - beta(j);
            if (delta != 0.0) {
                r.noalias() -= delta * x.col(j);
                beta(j) = b;
                max_change = std::max(max_change, std::abs(delta) * std::sqrt(col_sq(j)));
            }
        }
        return max_change;
    };

    int sweeps = 0;
    double best_gap = std::numeric_limits<double>::infinity();
    std::vector<double> best_theta = theta_of(beta);
    while (sweeps < kMaxSweeps) {
        // Full sweep, then iterate on the active set to convergence.
        double change = sweep(false);
        ++sweeps;
        for (int inner = 0; inner < 1000 && change > 1e-13; ++inner, ++sweeps) change = sweep(true);

        // Exact refinement on the current support with its signs.
        std::vector<Eigen::Index> active;
        for (Eigen::Index j = 0; j < m; ++j)
            if (beta(j) != 0.0) active.push_back(j);
        Eigen::VectorXd refined = beta;
        if (!active.empty()) {
            const auto na = static_cast<Eigen::Index>(active.size());
            Eigen::MatrixXd xa(ni, na);
            Eigen::VectorXd sa(na);
            for (Eigen::Index p = 0; p < na; ++p) {
                xa.col(p) = x.col(active[p]);
                sa(p) = beta(active[p]) > 0.0 ? 1.0 : -1.0;
            }
            const Eigen::VectorXd rhs = xa.transpose() * y_perp - gamma * sa;
            const Eigen::VectorXd ba = (xa.transpose() * xa).ldlt().solve(rhs);
            bool consistent = true;
            for (Eigen::Index p = 0; p < na; ++p) consistent = consistent && ba(p) * sa(p) > 0.0;
            if (consistent) {
                refined.setZero();
                for (Eigen::Index p = 0; p < na; ++p) refined(active[p]) = ba(p);
            }
        }
        for (const Eigen::VectorXd* candidate : {&beta, &refined}) {
            std::vector<double> theta = theta_of(*candidate);
            const double gap = kkt_gap(problem, theta);
            if (gap < best_gap) {
                best_gap = gap;
                best_theta = std::move(theta);
            }
        }
        if (best_gap <= kReferenceGap) break;
        // A stalled full sweep means further sweeps cannot help.
        if (change == 0.0 && sweep(false) == 0.0) break;
    }

    fit.theta = std::move(best_theta);
    fit.objective = objective(problem, fit.theta);
    fit.iterations = sweeps;
    fit.kkt_gap = best_gap;
    fit.converged = best_gap <= kReferenceGap;
    return fit;
}

}  // namespace tvrate
