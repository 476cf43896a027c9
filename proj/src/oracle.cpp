#include "tvrate/oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "tvrate/tv.hpp"

namespace tvrate {

void OracleSpec::validate() const {
    if (true_order < 1) throw std::invalid_argument("OracleSpec: ell must be >= 1");
    if (penalty_order < 1 || penalty_order > 8) throw std::invalid_argument("OracleSpec: k must be in [1, 8]");
    if (!(bandwidth > 0.0)) throw std::invalid_argument("OracleSpec: bandwidth must be positive");
    const TVReport tv = tv_continuous(truth, true_order);
    if (!tv.finite() || !std::isfinite(tv.total))
        throw std::invalid_argument("OracleSpec: truth has infinite variation of order " + std::to_string(true_order));
}

PiecewisePolynomial build_oracle(const OracleSpec& spec) {
    spec.validate();
    return convolve(spec.truth, ScaledKernel(construct_kernel(spec.penalty_order), spec.bandwidth));
}

double approx_error_sq(const PiecewisePolynomial& truth, const PiecewisePolynomial& oracle, std::size_t n) {
    if (n == 0) throw std::invalid_argument("approx_error_sq: n must be >= 1");
    const double nd = static_cast<double>(n);
    double s = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        const double x = static_cast<double>(i) / nd;
        const double r = truth(x) - oracle(x);
        s += r * r;
    }
    return s / nd;
}

double penalty_constant(int k, int ell) {
    if (!(k > ell && ell >= 1)) throw std::invalid_argument("penalty_constant: requires k > ell >= 1");
    return 2.0 * derivative_bound(construct_kernel(k), k - ell);
}

double penalty_bound(const OracleSpec& spec, double constant) {
    const int k = spec.penalty_order, ell = spec.true_order;
    if (!(k > ell && ell >= 1)) throw std::invalid_argument("penalty_bound: requires k > ell >= 1");
    if (!(spec.bandwidth > 0.0)) throw std::invalid_argument("penalty_bound: bandwidth must be positive");
    const TVReport tv = tv_continuous(spec.truth, ell);
    if (!tv.finite()) return std::numeric_limits<double>::infinity();
    const double c = constant > 0.0 ? constant : penalty_constant(k, ell);
    return c * tv.total / std::pow(spec.bandwidth, k - ell);
}

double delta_schedule(std::size_t n, int k, int ell) {
    if (n < 2) throw std::invalid_argument("delta_schedule: n must be >= 2");
    if (!(k > ell && ell >= 1)) throw std::invalid_argument("delta_schedule: requires k > ell >= 1");
    return std::pow(static_cast<double>(n), -2.0 * k / (4.0 * k * ell - 1.0));
}

double lambda_schedule(std::size_t n, int k, int ell, double p_ell, double c) {
    if (n < 2) throw std::invalid_argument("lambda_schedule: n must be >= 2");
    if (!(k > ell && ell >= 1)) throw std::invalid_argument("lambda_schedule: requires k > ell >= 1");
    if (!(p_ell > 0.0) || !(c > 0.0)) throw std::invalid_argument("lambda_schedule: P_ell and C must be positive");
    const double kd = k, ld = ell;
    const double n_exp = -2.0 * kd * (kd + ld - 1.0) / (4.0 * kd * ld - 1.0);
    const double p_exp = (1.0 / kd - 2.0) / (1.0 / kd + 2.0);
    return std::pow(static_cast<double>(n), n_exp) * std::pow(c * p_ell, p_exp);
}

std::string_view to_string(RateMethod m) {
    switch (m) {
        case RateMethod::kCorrectSpec: return "correct_spec";
        case RateMethod::kSimon2021: return "simon2021";
        case RateMethod::kThisPaper: return "this_paper";
    }
    return "unknown";
}

RateFormulaResult theoretical_rate(RateMethod method, int k, int ell) {
    if (k < 1 || ell < 1) throw std::invalid_argument("theoretical_rate: orders must be >= 1");
    const double kd = k, ld = ell;
    RateFormulaResult r;
    r.method = method;
    switch (method) {
        case RateMethod::kCorrectSpec:
            if (k > ell) throw std::invalid_argument("theoretical_rate: correct_spec requires k <= ell");
            r.exponent = -2.0 * kd / (2.0 * kd + 1.0);
            break;
        case RateMethod::kSimon2021:
            if (k <= ell) throw std::invalid_argument("theoretical_rate: simon2021 requires k > ell");
            r.exponent = ell == 1 ? -2.0 * kd / (4.0 * kd - 1.0) : -2.0 * kd / (3.0 * kd - ld + 1.0);
            break;
        case RateMethod::kThisPaper:
            if (k <= ell) throw std::invalid_argument("theoretical_rate: this_paper requires k > ell");
            r.exponent = -2.0 * kd * (2.0 * ld - 1.0) / (4.0 * kd * ld - 1.0);
            break;
    }
    return r;
}

LemmaSweep lemma_sweep(const PiecewisePolynomial& truth, int ell, int k, std::span<const double> deltas,
                       std::size_t n) {
    if (deltas.size() < 2) throw std::invalid_argument("lemma_sweep: need at least two bandwidths");
    LemmaSweep sweep;
    sweep.approx_expected = 2.0 * ell - 1.0;
    sweep.penalty_expected = -static_cast<double>(k - ell);
    std::vector<double> ld, le, lp;
    for (double d : deltas) {
        const OracleSpec spec{truth, ell, k, d};
        const PiecewisePolynomial f = build_oracle(spec);
        LemmaSweepRow row;
        row.delta = d;
        row.approx_error = approx_error_sq(truth, f, n);
        row.penalty = tv_continuous(f, k).total;
        row.bound = penalty_bound(spec);
        sweep.bound_holds = sweep.bound_holds && row.penalty <= row.bound;
        ld.push_back(std::log(d));
        le.push_back(std::log(row.approx_error));
        lp.push_back(std::log(row.penalty));
        sweep.rows.push_back(row);
    }
    sweep.approx_fit = fit_line(ld, le);
    sweep.penalty_fit = fit_line(ld, lp);
    return sweep;
}

}  // namespace tvrate
