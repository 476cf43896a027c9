#pragma once

#include <span>
#include <vector>

namespace tvrate {

/// Discrete trend filtering instance on the equispaced design x_i = i/n:
///
///   minimize_theta  (1/2n) ||y - theta||^2 + lambda * n^{k-1} ||Delta^k theta||_1
struct TrendFilterProblem {
    std::vector<double> y;
    int order = 1;
    double lambda = 0.0;

    std::size_t size() const { return y.size(); }
    /// Throws std::invalid_argument unless n > k + 1, lambda >= 0 and y finite.
    void validate() const;
};

struct TrendFilterFit {
    std::vector<double> theta;
    double objective = 0.0;
    int iterations = 0;
    double primal_residual = 0.0;  ///< RMS of the splitting constraint violation
    double dual_residual = 0.0;    ///< RMS of the dual residual
    double kkt_gap = 0.0;
    bool converged = false;
    bool polished = false;  ///< theta came from the support-restricted exact solve

    // Splitting state, reusable as a warm start for a nearby lambda.
    std::vector<double> aux;
    std::vector<double> dual;  ///< unscaled dual (rho * u)
};

enum class Splitting {
    /// z = Delta^k theta, z-step by soft thresholding.
    kDifference,
    /// alpha = Delta^{k-1} theta, alpha-step by exact 1-D total-variation
    /// denoising. Converges in far fewer iterations for large n.
    kFusedDifference,
};

struct SolverOptions {
    double rho = 0.0;  ///< initial penalty parameter; 0 selects lambda * n^k
    int max_iter = 20000;
    /// Relative primal/dual residual; also the acceptance gap for polishing.
    double tol = 1e-8;
    Splitting splitting = Splitting::kDifference;
    bool polish = true;
    /// Skip the KKT certificate (kkt_gap is then left at +infinity unless the
    /// fit was polished).
    bool certify = true;
};

/// Forward differences applied k times; length n - k.
std::vector<double> difference_apply(std::span<const double> theta, int k);
/// Adjoint of difference_apply: maps a length n-k vector to length n.
std::vector<double> difference_adjoint(std::span<const double> v, int k, std::size_t n);

double objective(const TrendFilterProblem& problem, std::span<const double> theta);

/// Operator-splitting solver with residual balancing and support polishing.
/// On non-convergence the best iterate is returned with converged = false.
TrendFilterFit solve(const TrendFilterProblem& problem, const SolverOptions& opts = {},
                     const TrendFilterFit* warm_start = nullptr);

/// Slow reference: coordinate descent on the equivalent lasso in the
/// truncated-power basis, followed by exact sign-restricted refinement.
/// Requires n <= 200.
TrendFilterFit solve_reference(const TrendFilterProblem& problem);

/// Smallest Euclidean norm of (theta - y)/n + lambda n^{k-1} Delta^{kT} s over
/// subgradients s: s_i = sign(Delta^k theta)_i where |Delta^k theta|_i > 1e-9,
/// s_i in [-1, 1] otherwise. Zero iff theta is optimal. Always evaluated at a
/// feasible s, so the returned value never underestimates the minimum.
double kkt_gap(const TrendFilterProblem& problem, std::span<const double> theta);

/// Least-squares fit of y by a polynomial of degree < k on the design grid;
/// the solution of the problem as lambda grows without bound.
std::vector<double> polynomial_fit(std::span<const double> y, int k);

/// Minimizes 0.5 ||y - beta||^2 + lambda sum |beta_{i+1} - beta_i| exactly
/// by dynamic programming over the piecewise-linear derivative of the
/// forward messages.
void tv_denoise(std::span<const double> y, double lambda, std::span<double> out);

}  // namespace tvrate
