#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "tvrate/kernel.hpp"
#include "tvrate/pwpoly.hpp"
#include "tvrate/regression.hpp"

namespace tvrate {

/// A truth f* of smoothness ell approximated inside F_k by convolution with
/// the order-k kernel at bandwidth delta.
struct OracleSpec {
    PiecewisePolynomial truth;
    int true_order = 1;     ///< ell
    int penalty_order = 2;  ///< k
    double bandwidth = 0.1; ///< delta

    /// Throws std::invalid_argument unless 1 <= ell, 1 <= k <= 8, delta > 0
    /// and P_ell(truth) is finite.
    void validate() const;
};

/// f_{delta,k} = f* convolved with H_{k,delta}.
PiecewisePolynomial build_oracle(const OracleSpec& spec);

/// n^{-1} sum_{i=1..n} (truth(i/n) - oracle(i/n))^2.
double approx_error_sq(const PiecewisePolynomial& truth, const PiecewisePolynomial& oracle, std::size_t n);

/// 2 C_{k,k-ell} P_ell(f*) / delta^{k-ell}. A positive `constant` replaces
/// 2 C_{k,k-ell}. Requires k > ell; infinite P_ell gives infinity.
double penalty_bound(const OracleSpec& spec, double constant = 0.0);

/// 2 C_{k,k-ell}: the constant of the penalty bound.
double penalty_constant(int k, int ell);

/// delta(n) = n^{-2k/(4k ell - 1)}. Requires n >= 2 and k > ell >= 1.
double delta_schedule(std::size_t n, int k, int ell);

/// lambda_n = n^{-2k(k+ell-1)/(4k ell-1)} (C P_ell)^{(1/k-2)/(1/k+2)}.
double lambda_schedule(std::size_t n, int k, int ell, double p_ell, double c);

enum class RateMethod { kCorrectSpec, kSimon2021, kThisPaper };

std::string_view to_string(RateMethod m);

struct RateFormulaResult {
    RateMethod method = RateMethod::kThisPaper;
    double exponent = 0.0;  ///< MSE ~ n^exponent
};

/// Convergence-rate exponents:
///   correct        -2k/(2k+1)                        (requires k <= ell)
///   simon2021      -2k/(4k-1) if ell = 1, else -2k/(3k-ell+1)   (k > ell)
///   this_paper     -2k(2ell-1)/(4k ell-1)            (k > ell)
RateFormulaResult theoretical_rate(RateMethod method, int k, int ell);

/// One bandwidth of a lemma sweep.
struct LemmaSweepRow {
    double delta = 0.0;
    double approx_error = 0.0;  ///< ||f* - f_{delta,k}||_n^2
    double penalty = 0.0;       ///< P_k(f_{delta,k})
    double bound = 0.0;         ///< penalty_bound at delta
};

/// Log-log scaling of the approximation error and of the oracle penalty over
/// a bandwidth sweep.
struct LemmaSweep {
    std::vector<LemmaSweepRow> rows;
    LineFit approx_fit;   ///< log error vs log delta; expected slope 2 ell - 1
    LineFit penalty_fit;  ///< log P_k vs log delta; expected slope -(k - ell)
    double approx_expected = 0.0;
    double penalty_expected = 0.0;
    bool bound_holds = true;  ///< P_k <= penalty_bound at every delta
};

LemmaSweep lemma_sweep(const PiecewisePolynomial& truth, int ell, int k, std::span<const double> deltas,
                       std::size_t n);

}  // namespace tvrate
