#include "tvrate/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "banded.hpp"

namespace tvrate {

using detail::BandedCholesky;

void TrendFilterProblem::validate() const {
    if (order < 1) throw std::invalid_argument("TrendFilterProblem: order must be >= 1");
    if (y.size() <= static_cast<std::size_t>(order) + 1)
        throw std::invalid_argument("TrendFilterProblem: need n > k + 1 (n = " + std::to_string(y.size()) + ")");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("TrendFilterProblem: lambda must be finite and >= 0");
    for (double v : y)
        if (!std::isfinite(v)) throw std::invalid_argument("TrendFilterProblem: non-finite response");
}

std::vector<double> difference_apply(std::span<const double> theta, int k) {
    if (k < 0 || theta.size() <= static_cast<std::size_t>(k))
        throw std::invalid_argument("difference_apply: need len(theta) > k");
    std::vector<double> d(theta.begin(), theta.end());
    for (int j = 0; j < k; ++j) {
        for (std::size_t i = 0; i + 1 < d.size(); ++i) d[i] = d[i + 1] - d[i];
        d.pop_back();
    }
    return d;
}

std::vector<double> difference_adjoint(std::span<const double> v, int k, std::size_t n) {
    if (v.size() + static_cast<std::size_t>(k) != n)
        throw std::invalid_argument("difference_adjoint: size mismatch");
    std::vector<double> w(v.begin(), v.end());
    for (int j = 0; j < k; ++j) {
        // Adjoint of one forward difference: length m -> m + 1.
        std::vector<double> next(w.size() + 1, 0.0);
        for (std::size_t i = 0; i < w.size(); ++i) {
            next[i] -= w[i];
            next[i + 1] += w[i];
        }
        w = std::move(next);
    }
    return w;
}

double objective(const TrendFilterProblem& problem, std::span<const double> theta) {
    const std::size_t n = problem.size();
    if (theta.size() != n) throw std::invalid_argument("objective: size mismatch");
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) rss += (problem.y[i] - theta[i]) * (problem.y[i] - theta[i]);
    const std::vector<double> d = difference_apply(theta, problem.order);
    double l1 = 0.0;
    for (double v : d) l1 += std::abs(v);
    const double nd = static_cast<double>(n);
    return 0.5 * rss / nd + problem.lambda * std::pow(nd, problem.order - 1) * l1;
}

namespace {

double rms(std::span<const double> v, std::size_t n) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s / static_cast<double>(n));
}

/// Band of I + rho * D^T D with D = Delta^k on n points.
std::vector<double> normal_band(std::size_t n, int k, double rho) {
    const std::vector<double> c = detail::difference_stencil(k);
    const std::size_t bw = static_cast<std::size_t>(k);
    std::vector<double> band(n * (bw + 1), 0.0);
    for (std::size_t i = 0; i < n; ++i) band[i * (bw + 1)] = 1.0;
    for (std::size_t row = 0; row + bw < n; ++row)
        for (std::size_t p = 0; p <= bw; ++p)
            for (std::size_t q = 0; q <= p; ++q) band[(row + p) * (bw + 1) + (p - q)] += rho * c[p] * c[q];
    return band;
}

// ------- support-restricted exact solve ------- //

/// Normal matrix D_S D_S^T for a sorted subset S of difference rows, banded
/// with k sub-diagonals in subset positions.
std::vector<long double> subset_gram_band(const std::vector<std::size_t>& rows, const std::vector<double>& autocorr,
                                          std::size_t bw) {
    std::vector<long double> band(rows.size() * (bw + 1), 0.0L);
    for (std::size_t p = 0; p < rows.size(); ++p)
        for (std::size_t d = 0; d <= bw && d <= p; ++d) {
            const std::size_t gap = rows[p] - rows[p - d];
            if (gap < autocorr.size()) band[p * (bw + 1) + d] = autocorr[gap];
        }
    return band;
}

std::vector<long double> apply_diff_ld(std::span<const long double> v, const std::vector<double>& c) {
    const std::size_t m = v.size() + 1 - c.size();
    std::vector<long double> out(m, 0.0L);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < c.size(); ++j) out[i] += c[j] * v[i + j];
    return out;
}

std::vector<long double> apply_adjoint_ld(std::span<const long double> w, const std::vector<double>& c) {
    std::vector<long double> out(w.size() + c.size() - 1, 0.0L);
    for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t j = 0; j < c.size(); ++j) out[i + j] += c[j] * w[i];
    return out;
}

struct Polished {
    std::vector<double> theta;
    double gap = 0.0;
};

/// Solves the problem exactly under the hypothesis that sign(Delta^k theta)
/// equals `signs` (entries -1, 0, +1): minimize the smooth loss plus
/// gamma s_A^T D_A theta subject to D_F theta = 0. Returns nothing when the
/// hypothesis is inconsistent with the resulting solution; otherwise the
/// multipliers of D_F theta = 0 form a feasible subgradient and `gap` is the
/// stationarity residual it certifies.
std::optional<Polished> polish(const TrendFilterProblem& problem, const std::vector<int>& signs) {
    const std::size_t n = problem.size();
    const int k = problem.order;
    const std::vector<double> c = detail::difference_stencil(k);
    const long double gamma = static_cast<long double>(problem.lambda) * std::pow(static_cast<long double>(n), k);

    std::vector<long double> s(signs.size());
    std::vector<std::size_t> free_rows;
    for (std::size_t i = 0; i < signs.size(); ++i) {
        s[i] = signs[i];
        if (signs[i] == 0) free_rows.push_back(i);
    }
    std::vector<long double> base = apply_adjoint_ld(s, c);
    for (std::size_t i = 0; i < n; ++i) base[i] = problem.y[i] - gamma * base[i];

    if (!free_rows.empty()) {
        const std::vector<long double> db = apply_diff_ld(base, c);
        std::vector<long double> nu(free_rows.size());
        for (std::size_t p = 0; p < free_rows.size(); ++p) nu[p] = db[free_rows[p]];
        try {
            BandedCholesky<long double> chol(free_rows.size(), static_cast<std::size_t>(k),
                                             subset_gram_band(free_rows, detail::stencil_autocorrelation(c),
                                                              static_cast<std::size_t>(k)));
            chol.solve_in_place(std::span<long double>(nu));
        } catch (const std::runtime_error&) {
            return std::nullopt;
        }
        std::vector<long double> full(signs.size(), 0.0L);
        for (std::size_t p = 0; p < free_rows.size(); ++p) {
            s[free_rows[p]] = nu[p] / gamma;
            if (std::abs(s[free_rows[p]]) > 1.0L) return std::nullopt;
            full[free_rows[p]] = nu[p];
        }
        const std::vector<long double> adj = apply_adjoint_ld(full, c);
        for (std::size_t i = 0; i < n; ++i) base[i] -= adj[i];
    }
    Polished out;
    out.theta.assign(base.begin(), base.end());
    const std::vector<double> d = difference_apply(out.theta, k);
    for (std::size_t i = 0; i < signs.size(); ++i) {
        if (signs[i] != 0 && !(d[i] * signs[i] > 0.0)) return std::nullopt;
        if (signs[i] == 0 && std::abs(d[i]) > 1e-9) return std::nullopt;
    }
    const std::vector<long double> ds = apply_adjoint_ld(s, c);
    long double ss = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        const long double r = (static_cast<long double>(out.theta[i]) - problem.y[i]) + gamma * ds[i];
        ss += r * r;
    }
    out.gap = static_cast<double>(std::sqrt(ss) / static_cast<long double>(n));
    return out;
}


// ------- bounded-variable least squares for the KKT certificate ------- //

/// minimize ||D_V^T x - b|| over x in [-1, 1]^V for the difference rows V.
/// Active-set iterations (Stark & Parker); x stays feasible throughout.
std::vector<long double> box_least_squares(const std::vector<std::size_t>& vars, std::span<const long double> b,
                                           const std::vector<double>& c, std::size_t m_rows) {
    const std::size_t nv = vars.size();
    const std::size_t bw = c.size() - 1;
    const std::vector<double> autocorr = detail::stencil_autocorrelation(c);
    std::vector<long double> x(nv, 0.0L);
    std::vector<int> bound(nv, 0);  // 0 free, -1 / +1 at that bound

    auto residual = [&]() {
        std::vector<long double> full(m_rows, 0.0L);
        for (std::size_t p = 0; p < nv; ++p) full[vars[p]] = x[p];
        std::vector<long double> r = apply_adjoint_ld(full, c);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
        return r;
    };
    // Negative gradient D_V r.
    auto neg_gradient = [&](const std::vector<long double>& r) {
        const std::vector<long double> dr = apply_diff_ld(r, c);
        std::vector<long double> w(nv);
        for (std::size_t p = 0; p < nv; ++p) w[p] = dr[vars[p]];
        return w;
    };

    const std::size_t max_outer = 3 * nv + 50;
    for (std::size_t outer = 0; outer < max_outer; ++outer) {
        for (std::size_t inner = 0; inner <= nv; ++inner) {
            std::vector<std::size_t> free_pos, free_rows;
            for (std::size_t p = 0; p < nv; ++p)
                if (bound[p] == 0) {
                    free_pos.push_back(p);
                    free_rows.push_back(vars[p]);
                }
            if (free_pos.empty()) break;
            // Newton step for the free variables: D_P D_P^T dz = D_P r.
            const std::vector<long double> w = neg_gradient(residual());
            std::vector<long double> step(free_pos.size());
            for (std::size_t q = 0; q < free_pos.size(); ++q) step[q] = w[free_pos[q]];
            try {
                BandedCholesky<long double> chol(free_rows.size(), bw, subset_gram_band(free_rows, autocorr, bw));
                chol.solve_in_place(std::span<long double>(step));
            } catch (const std::runtime_error&) {
                return x;
            }
            long double alpha = 1.0L;
            std::size_t hit = nv;
            for (std::size_t q = 0; q < free_pos.size(); ++q) {
                const long double target = x[free_pos[q]] + step[q];
                if (target > 1.0L || target < -1.0L) {
                    const long double edge = target > 1.0L ? 1.0L : -1.0L;
                    const long double a = (edge - x[free_pos[q]]) / step[q];
                    if (a < alpha) {
                        alpha = a;
                        hit = free_pos[q];
                    }
                }
            }
            for (std::size_t q = 0; q < free_pos.size(); ++q)
                x[free_pos[q]] = std::clamp(x[free_pos[q]] + alpha * step[q], -1.0L, 1.0L);
            if (hit == nv) break;
            for (std::size_t q = 0; q < free_pos.size(); ++q) {
                const std::size_t p = free_pos[q];
                if (p == hit || std::abs(std::abs(x[p]) - 1.0L) <= 1e-15L) {
                    x[p] = x[p] > 0 ? 1.0L : -1.0L;
                    bound[p] = x[p] > 0 ? 1 : -1;
                }
            }
        }
        // Release the bound variable whose gradient points most strongly inward.
        const std::vector<long double> w = neg_gradient(residual());
        long double best = 0.0L;
        std::size_t release = nv;
        for (std::size_t p = 0; p < nv; ++p) {
            const long double inward = bound[p] == 1 ? -w[p] : bound[p] == -1 ? w[p] : 0.0L;
            if (inward > best) {
                best = inward;
                release = p;
            }
        }
        long double scale = 0.0L;
        for (long double bi : b) scale = std::max(scale, std::abs(bi));
        if (release == nv || best <= 1e-15L * std::max(scale, 1.0L)) break;
        bound[release] = 0;
    }
    return x;
}

// ------- ADMM ------- //

void soft_threshold(std::span<double> v, double t) {
    for (double& x : v) {
        const double a = std::abs(x) - t;
        x = a > 0.0 ? std::copysign(a, x) : 0.0;
    }
}

std::vector<int> signs_of(std::span<const double> v) {
    std::vector<int> s(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) s[i] = v[i] > 0.0 ? 1 : (v[i] < 0.0 ? -1 : 0);
    return s;
}

struct AdmmTrace {
    std::vector<double> best_theta;
    double best_objective = std::numeric_limits<double>::infinity();
};

TrendFilterFit finalize(const TrendFilterProblem& problem, std::vector<double> theta, const SolverOptions& opts) {
    TrendFilterFit fit;
    fit.theta = std::move(theta);
    fit.objective = objective(problem, fit.theta);
    fit.kkt_gap = opts.certify ? kkt_gap(problem, fit.theta) : std::numeric_limits<double>::infinity();
    return fit;
}

// In-place variants for the iteration loop. `buf` has room for n entries.
void difference_in_place(std::vector<double>& buf, std::size_t n, int k) {
    for (int j = 0; j < k; ++j) {
        const std::size_t len = n - static_cast<std::size_t>(j);
        for (std::size_t i = 0; i + 1 < len; ++i) buf[i] = buf[i + 1] - buf[i];
    }
}

// buf holds a length n - k vector on entry and the length n adjoint on exit.
void adjoint_in_place(std::vector<double>& buf, std::size_t n, int k) {
    for (int j = k; j > 0; --j) {
        const std::size_t len = n - static_cast<std::size_t>(j);  // length before this pass
        buf[len] = buf[len - 1];
        for (std::size_t i = len - 1; i > 0; --i) buf[i] = buf[i - 1] - buf[i];
        buf[0] = -buf[0];
    }
}

TrendFilterFit run_admm(const TrendFilterProblem& problem, const SolverOptions& opts, const TrendFilterFit* warm) {
    const std::size_t n = problem.size();
    const int k = problem.order;
    const bool fused = opts.splitting == Splitting::kFusedDifference;
    const int split_order = fused ? k - 1 : k;  // D in the constraint D theta = aux
    const std::size_t m = n - static_cast<std::size_t>(split_order);
    const double gamma = problem.lambda * std::pow(static_cast<double>(n), k);

    double rho = opts.rho > 0.0 ? opts.rho : gamma;
    std::vector<double> theta = (warm && warm->theta.size() == n) ? warm->theta : problem.y;
    std::vector<double> aux, u(m, 0.0);
    if (warm && warm->aux.size() == m && warm->dual.size() == m) {
        aux = warm->aux;
        for (std::size_t i = 0; i < m; ++i) u[i] = warm->dual[i] / rho;
    } else {
        aux = difference_apply(theta, split_order);
        if (!fused) soft_threshold(aux, 0.0);
    }

    auto factor = [&](double r) {
        return BandedCholesky<double>(n, static_cast<std::size_t>(split_order), normal_band(n, split_order, r));
    };
    BandedCholesky<double> chol = factor(rho);

    AdmmTrace trace;
    std::vector<int> last_support;
    constexpr int kPolishEvery = 20;
    constexpr int kBalanceEvery = 10;

    TrendFilterFit fit;
    std::vector<double> aux_old(m), d_theta(n), diff(n), dual_buf(n), v(m);
    constexpr int kObjectiveEvery = 10;
    int it = 0;
    double r_primal = 0.0, r_dual = 0.0;
    for (it = 1; it <= opts.max_iter; ++it) {
        for (std::size_t i = 0; i < m; ++i) theta[i] = aux[i] - u[i];
        adjoint_in_place(theta, n, split_order);
        for (std::size_t i = 0; i < n; ++i) theta[i] = problem.y[i] + rho * theta[i];
        chol.solve_in_place(std::span<double>(theta));

        std::copy(theta.begin(), theta.end(), d_theta.begin());
        difference_in_place(d_theta, n, split_order);
        std::copy(aux.begin(), aux.end(), aux_old.begin());
        for (std::size_t i = 0; i < m; ++i) aux[i] = d_theta[i] + u[i];
        if (fused) {
            std::copy(aux.begin(), aux.end(), v.begin());
            tv_denoise(v, gamma / rho, aux);
        } else {
            soft_threshold(aux, gamma / rho);
        }
        double pp = 0.0, sd = 0.0, sa = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double r = d_theta[i] - aux[i];
            u[i] += r;
            pp += r * r;
            sd += d_theta[i] * d_theta[i];
            sa += aux[i] * aux[i];
            diff[i] = aux[i] - aux_old[i];
            dual_buf[i] = u[i];
        }
        const double nd = static_cast<double>(n);
        r_primal = std::sqrt(pp / nd);
        adjoint_in_place(diff, n, split_order);
        r_dual = rho * rms(std::span<const double>(diff.data(), n), n);
        // Relative scales: the constrained quantities are O(n^-k) for smooth
        // signals, so absolute residuals say little about optimality.
        const double primal_scale = std::sqrt(std::max(sd, sa) / nd);
        adjoint_in_place(dual_buf, n, split_order);
        const double dual_scale = rho * rms(std::span<const double>(dual_buf.data(), n), n);

        if (it % kObjectiveEvery == 0) {
            const double obj = objective(problem, theta);
            if (obj < trace.best_objective) {
                trace.best_objective = obj;
                trace.best_theta = theta;
            }
        }

        if (r_primal <= opts.tol * primal_scale && r_dual <= opts.tol * dual_scale) {
            fit.converged = true;
            break;
        }

        if (opts.polish && it % kPolishEvery == 0) {
            std::vector<int> support = fused ? signs_of(difference_apply(aux, 1)) : signs_of(aux);
            if (support == last_support) {
                if (auto polished = polish(problem, support); polished && polished->gap <= opts.tol) {
                    fit = finalize(problem, std::move(polished->theta), opts);
                    fit.kkt_gap = std::min(fit.kkt_gap, polished->gap);
                    fit.polished = true;
                    fit.converged = true;
                    fit.iterations = it;
                    fit.primal_residual = r_primal;
                    fit.dual_residual = r_dual;
                    fit.aux = aux;
                    fit.dual.resize(m);
                    for (std::size_t i = 0; i < m; ++i) fit.dual[i] = rho * u[i];
                    return fit;
                }
            } else {
                last_support = std::move(support);
            }
        }

        if (opts.rho <= 0.0 && it % kBalanceEvery == 0) {
            double scale = 0.0;
            const double rp = r_primal / std::max(primal_scale, 1e-300);
            const double rd = r_dual / std::max(dual_scale, 1e-300);
            if (rp > 10.0 * rd) scale = 2.0;
            if (rd > 10.0 * rp) scale = 0.5;
            if (scale != 0.0) {
                rho *= scale;
                for (double& ui : u) ui /= scale;
                chol = factor(rho);
            }
        }
    }

    const bool converged = fit.converged;
    std::vector<double> out = (converged || objective(problem, theta) <= trace.best_objective) ? theta : trace.best_theta;
    fit = finalize(problem, std::move(out), opts);
    fit.converged = converged;
    fit.iterations = std::min(it, opts.max_iter);
    fit.primal_residual = r_primal;
    fit.dual_residual = r_dual;

    if (opts.polish && fit.kkt_gap > opts.tol) {
        const std::vector<int> support = fused ? signs_of(difference_apply(aux, 1)) : signs_of(aux);
        if (auto polished = polish(problem, support)) {
            const double gap =
                opts.certify ? std::min(polished->gap, kkt_gap(problem, polished->theta)) : polished->gap;
            if (gap < fit.kkt_gap) {
                fit.theta = std::move(polished->theta);
                fit.objective = objective(problem, fit.theta);
                fit.kkt_gap = gap;
                fit.polished = true;
            }
        }
    }
    fit.aux = aux;
    fit.dual.resize(m);
    for (std::size_t i = 0; i < m; ++i) fit.dual[i] = rho * u[i];
    return fit;
}

}  // namespace

TrendFilterFit solve(const TrendFilterProblem& problem, const SolverOptions& opts, const TrendFilterFit* warm_start) {
    problem.validate();
    if (!(opts.tol > 0.0)) throw std::invalid_argument("solve: tol must be positive");
    if (problem.lambda == 0.0) {
        TrendFilterFit fit = finalize(problem, problem.y, opts);
        fit.kkt_gap = 0.0;
        fit.converged = true;
        return fit;
    }
    if (opts.splitting == Splitting::kFusedDifference && problem.order == 1) {
        const double gamma = problem.lambda * static_cast<double>(problem.size());
        std::vector<double> theta(problem.size());
        tv_denoise(problem.y, gamma, theta);
        TrendFilterFit fit = finalize(problem, std::move(theta), opts);
        fit.converged = true;
        fit.iterations = 1;
        return fit;
    }
    return run_admm(problem, opts, warm_start);
}

double kkt_gap(const TrendFilterProblem& problem, std::span<const double> theta) {
    const std::size_t n = problem.size();
    if (theta.size() != n) throw std::invalid_argument("kkt_gap: size mismatch");
    const int k = problem.order;
    const long double nd = static_cast<long double>(n);
    if (problem.lambda == 0.0) {
        long double s = 0.0L;
        for (std::size_t i = 0; i < n; ++i) s += (theta[i] - problem.y[i]) * static_cast<long double>(theta[i] - problem.y[i]);
        return static_cast<double>(std::sqrt(s) / nd);
    }
    const std::vector<double> c = detail::difference_stencil(k);
    const long double gamma = static_cast<long double>(problem.lambda) * std::pow(nd, k);
    const std::vector<double> d = difference_apply(theta, k);
    const std::size_t m = d.size();

    // b = -((theta - y)/gamma + D_A^T s_A)
    std::vector<long double> s_active(m, 0.0L);
    std::vector<std::size_t> free_rows;
    for (std::size_t i = 0; i < m; ++i) {
        if (std::abs(d[i]) > 1e-9)
            s_active[i] = d[i] > 0.0 ? 1.0L : -1.0L;
        else
            free_rows.push_back(i);
    }
    std::vector<long double> b = apply_adjoint_ld(s_active, c);
    for (std::size_t i = 0; i < n; ++i)
        b[i] = -((static_cast<long double>(theta[i]) - problem.y[i]) / gamma + b[i]);

    std::vector<long double> full(m, 0.0L);
    if (!free_rows.empty()) {
        const std::vector<long double> x = box_least_squares(free_rows, b, c, m);
        for (std::size_t p = 0; p < free_rows.size(); ++p) full[free_rows[p]] = x[p];
    }
    const std::vector<long double> dx = apply_adjoint_ld(full, c);
    long double ss = 0.0L;
    for (std::size_t i = 0; i < n; ++i) ss += (dx[i] - b[i]) * (dx[i] - b[i]);
    return static_cast<double>(gamma / nd * std::sqrt(ss));
}

std::vector<double> polynomial_fit(std::span<const double> y, int k) {
    const std::size_t n = y.size();
    if (k < 1 || n < static_cast<std::size_t>(k)) throw std::invalid_argument("polynomial_fit: need n >= k >= 1");
    Eigen::MatrixXd x(n, k);
    Eigen::VectorXd rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = 2.0 * (static_cast<double>(i + 1) / static_cast<double>(n)) - 1.0;
        double p = 1.0;
        for (int j = 0; j < k; ++j) {
            x(static_cast<Eigen::Index>(i), j) = p;
            p *= t;
        }
        rhs(static_cast<Eigen::Index>(i)) = y[i];
    }
    const Eigen::VectorXd coef = x.colPivHouseholderQr().solve(rhs);
    const Eigen::VectorXd fitted = x * coef;
    return {fitted.data(), fitted.data() + fitted.size()};
}

}  // namespace tvrate
