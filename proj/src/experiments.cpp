#include "tvrate/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "tvrate/oracle.hpp"
#include "tvrate/rng.hpp"
#include "tvrate/tv.hpp"

namespace tvrate {

namespace {

const Interval kUnit{0.0, 1.0};

PiecewisePolynomial single_term(double knot, int degree, double weight) {
    const TruncatedPowerTerm t{knot, degree, weight};
    return from_truncated_powers(kUnit, Polynomial{}, std::span(&t, 1));
}

}  // namespace

Truth make_truth(const std::string& name) {
    if (name == "step3") return {name, single_term(0.5, 0, 3.0), 1};
    if (name == "ramp3") return {name, single_term(0.5, 1, 3.0), 2};
    throw std::invalid_argument("make_truth: unknown truth '" + name + "' (expected step3 or ramp3)");
}

std::vector<double> sample_truth(const PiecewisePolynomial& truth, std::size_t n) {
    std::vector<double> v(n);
    const double nd = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = truth(static_cast<double>(i + 1) / nd);
    return v;
}

std::vector<double> generate_data(const PiecewisePolynomial& truth, std::size_t n, double sigma, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("generate_data: n must be >= 1");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("generate_data: sigma must be >= 0");
    std::vector<double> y = sample_truth(truth, n);
    NormalStream z(seed);
    for (double& v : y) v += sigma * z.next();
    return y;
}

SolverOptions experiment_solver_options() {
    SolverOptions o;
    o.splitting = Splitting::kFusedDifference;
    o.tol = 1e-6;
    o.max_iter = 5000;
    o.certify = false;
    return o;
}

OracleLambdaFit fit_oracle_lambda(std::span<const double> y, std::span<const double> truth_values, int k,
                                  std::span<const double> lambda_grid, const SolverOptions& opts) {
    if (lambda_grid.empty()) throw std::invalid_argument("fit_oracle_lambda: empty lambda grid");
    if (truth_values.size() != y.size()) throw std::invalid_argument("fit_oracle_lambda: size mismatch");
    std::vector<double> grid(lambda_grid.begin(), lambda_grid.end());
    std::sort(grid.begin(), grid.end(), std::greater<>());

    OracleLambdaFit best;
    best.mse = std::numeric_limits<double>::infinity();
    TrendFilterProblem problem{std::vector<double>(y.begin(), y.end()), k, 0.0};
    TrendFilterFit previous;
    bool have_previous = false;
    const double nd = static_cast<double>(y.size());
    for (double lambda : grid) {
        problem.lambda = lambda;
        TrendFilterFit fit = solve(problem, opts, have_previous ? &previous : nullptr);
        if (!fit.converged) {
            ++best.failures;
            continue;
        }
        double mse = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) mse += (fit.theta[i] - truth_values[i]) * (fit.theta[i] - truth_values[i]);
        mse /= nd;
        // Strict comparison keeps the largest lambda among ties.
        if (mse < best.mse) {
            best.mse = mse;
            best.lambda = lambda;
            best.theta = fit.theta;
        }
        previous = std::move(fit);
        have_previous = true;
    }
    if (!std::isfinite(best.mse)) throw std::runtime_error("fit_oracle_lambda: solver failed at every lambda");
    return best;
}

void ExperimentConfig::validate() const {
    if (truth.f.num_pieces() == 0) throw std::invalid_argument("config: truth is not set");
    if (truth.order < 1) throw std::invalid_argument("config: truth order must be >= 1");
    if (penalty_order < 1 || penalty_order > 8) throw std::invalid_argument("config: k must be in [1, 8]");
    if (penalty_order <= truth.order)
        throw std::invalid_argument("config: k must exceed the truth's order (misspecified regime)");
    if (n_grid.empty()) throw std::invalid_argument("config: n_grid is empty");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        if (n_grid[i] <= static_cast<std::size_t>(penalty_order) + 1)
            throw std::invalid_argument("config: every n must exceed k + 1");
        if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw std::invalid_argument("config: n_grid must increase strictly");
    }
    if (replicates < 1) throw std::invalid_argument("config: replicates must be >= 1");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("config: sigma must be >= 0");
    for (double l : lambda_grid)
        if (!(l > 0.0) || !std::isfinite(l)) throw std::invalid_argument("config: lambda values must be positive");
    if (lambda_points < 1) throw std::invalid_argument("config: lambda_points must be >= 1");
    if (!(lambda_span >= 1.0)) throw std::invalid_argument("config: lambda_span must be >= 1");
    if (max_iter < 1) throw std::invalid_argument("config: max_iter must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("config: tol must be positive");
    const TVReport tv = tv_continuous(truth.f, truth.order);
    if (!tv.finite() || !(tv.total > 0.0))
        throw std::invalid_argument("config: truth must have finite, positive variation of its order");
}

namespace {

template <typename T>
T parse_number(const KeyValueFile& f, const std::string& key, const std::string& text) {
    T v{};
    const char* b = text.data();
    const char* e = b + text.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e)
        throw ConfigError(f.source(), f.line_of(key), "'" + key + "': cannot parse '" + text + "' as a number");
    return v;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::string with_extension(const std::string& path, const std::string& ext) {
    const auto slash = path.find_last_of('/');
    const auto dot = path.find_last_of('.');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) return path.substr(0, dot) + ext;
    return path + ext;
}

Truth parse_custom_truth(const KeyValueFile& f) {
    Truth t;
    t.name = "custom";
    const auto order = f.get("truth.order");
    if (!order) throw ConfigError(f.source(), 0, "custom truth needs truth.order");
    t.order = parse_number<int>(f, "truth.order", *order);
    std::vector<double> base;
    if (const auto b = f.get("truth.base"))
        for (const auto& tok : split_list(*b)) base.push_back(parse_number<double>(f, "truth.base", tok));
    std::vector<TruncatedPowerTerm> terms;
    if (const auto ts = f.get("truth.terms")) {
        for (const auto& tok : split_list(*ts)) {
            // knot:degree:weight
            const auto a = tok.find(':');
            const auto b = a == std::string::npos ? a : tok.find(':', a + 1);
            if (b == std::string::npos)
                throw ConfigError(f.source(), f.line_of("truth.terms"), "term '" + tok + "' is not knot:degree:weight");
            TruncatedPowerTerm term;
            term.knot = parse_number<double>(f, "truth.terms", tok.substr(0, a));
            term.degree = parse_number<int>(f, "truth.terms", tok.substr(a + 1, b - a - 1));
            term.weight = parse_number<double>(f, "truth.terms", tok.substr(b + 1));
            if (term.degree < 0) throw ConfigError(f.source(), f.line_of("truth.terms"), "negative term degree");
            terms.push_back(term);
        }
    }
    try {
        t.f = from_truncated_powers(kUnit, Polynomial(base), terms);
    } catch (const std::exception& e) {
        throw ConfigError(f.source(), f.line_of("truth.terms"), e.what());
    }
    return t;
}

}  // namespace

ExperimentConfig parse_experiment_config(const KeyValueFile& f) {
    ExperimentConfig c;
    auto str = [&](const std::string& key, std::string& out) {
        if (const auto v = f.get(key)) out = *v;
    };
    auto num = [&](const std::string& key, auto& out) {
        if (const auto v = f.get(key)) out = parse_number<std::decay_t<decltype(out)>>(f, key, *v);
    };

    str("experiment.truth", c.truth_name);
    if (c.truth_name == "custom") {
        c.truth = parse_custom_truth(f);
    } else {
        try {
            c.truth = make_truth(c.truth_name);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(f.source(), f.line_of("experiment.truth"), e.what());
        }
    }
    num("experiment.k", c.penalty_order);
    if (const auto v = f.get("experiment.n_grid")) {
        c.n_grid.clear();
        for (const auto& tok : split_list(*v)) c.n_grid.push_back(parse_number<std::size_t>(f, "experiment.n_grid", tok));
    }
    num("experiment.replicates", c.replicates);
    num("experiment.sigma", c.sigma);
    num("experiment.seed", c.base_seed);
    if (const auto v = f.get("experiment.lambda_grid"); v && *v != "schedule") {
        for (const auto& tok : split_list(*v))
            c.lambda_grid.push_back(parse_number<double>(f, "experiment.lambda_grid", tok));
    }
    num("experiment.lambda_points", c.lambda_points);
    num("experiment.lambda_span", c.lambda_span);
    num("solver.max_iter", c.max_iter);
    num("solver.tol", c.tol);
    str("output.csv", c.output_path);
    str("output.summary", c.summary_path);
    str("output.plot", c.plot_path);
    if (c.summary_path.empty()) c.summary_path = with_extension(c.output_path, ".json");
    if (c.plot_path.empty()) c.plot_path = with_extension(c.output_path, ".svg");

    if (const auto unused = f.unused_keys(); !unused.empty())
        throw ConfigError(f.source(), f.line_of(unused.front()), "unknown key '" + unused.front() + "'");
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(f.source(), 0, e.what());
    }
    return c;
}

std::vector<double> lambda_grid_for(const ExperimentConfig& config, std::size_t n) {
    if (!config.lambda_grid.empty()) return config.lambda_grid;
    const int k = config.penalty_order, ell = config.truth.order;
    const double p_ell = tv_continuous(config.truth.f, ell).total;
    const double center = lambda_schedule(n, k, ell, p_ell, 1.0);
    const int m = config.lambda_points;
    std::vector<double> grid(static_cast<std::size_t>(m));
    const double lo = std::log(center / config.lambda_span), hi = std::log(center * config.lambda_span);
    for (int j = 0; j < m; ++j) grid[static_cast<std::size_t>(j)] = m == 1 ? center : std::exp(lo + (hi - lo) * j / (m - 1));
    return grid;
}

double oracle_bound(const Truth& truth, int k, std::size_t n) {
    const int ell = truth.order;
    const double delta = delta_schedule(n, k, ell);
    const OracleSpec spec{truth.f, ell, k, delta};
    const PiecewisePolynomial f = build_oracle(spec);
    const double p_ell = tv_continuous(truth.f, ell).total;
    const double lambda_n = lambda_schedule(n, k, ell, p_ell, penalty_constant(k, ell));
    return approx_error_sq(truth.f, f, n) + lambda_n * tv_continuous(f, k).total;
}

unsigned worker_count() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("TVRATE_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return hw;
}

ExperimentRun run_experiment(const ExperimentConfig& config) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    const int k = config.penalty_order;

    struct Cell {
        std::size_t n;
        int r;
    };
    std::vector<Cell> cells;
    std::map<std::size_t, double> bounds;
    std::map<std::size_t, std::vector<double>> grids, truths;
    for (std::size_t n : config.n_grid) {
        bounds[n] = oracle_bound(config.truth, k, n);
        grids[n] = lambda_grid_for(config, n);
        truths[n] = sample_truth(config.truth.f, n);
        for (int r = 0; r < config.replicates; ++r) cells.push_back({n, r});
    }

    SolverOptions opts = experiment_solver_options();
    opts.max_iter = config.max_iter;
    opts.tol = config.tol;

    std::vector<ReplicateResult> results(cells.size());
    std::vector<char> ok(cells.size(), 0);
    std::vector<int> solver_failures(cells.size(), 0);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            const Cell c = cells[i];
            ReplicateResult& out = results[i];
            out.n = c.n;
            out.replicate = c.r;
            out.seed = cell_seed(config.base_seed, c.n, static_cast<std::uint64_t>(c.r));
            out.oracle_bound = bounds.at(c.n);
            try {
                const std::vector<double> y = generate_data(config.truth.f, c.n, config.sigma, out.seed);
                const OracleLambdaFit fit = fit_oracle_lambda(y, truths.at(c.n), k, grids.at(c.n), opts);
                out.lambda = fit.lambda;
                out.mse = fit.mse;
                solver_failures[i] = fit.failures;
                ok[i] = 1;
            } catch (const std::exception&) {
                ok[i] = 0;
            }
        }
    };
    const unsigned workers = std::min<unsigned>(worker_count(), static_cast<unsigned>(cells.size()));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    ExperimentRun run;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        run.solver_failures += solver_failures[i];
        if (ok[i])
            run.results.push_back(results[i]);
        else
            ++run.failures;
    }
    std::sort(run.results.begin(), run.results.end(), [](const ReplicateResult& a, const ReplicateResult& b) {
        return a.n != b.n ? a.n < b.n : a.replicate < b.replicate;
    });
    run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return run;
}

RateEstimate estimate_rate(std::span<const ReplicateResult> results) {
    std::map<std::size_t, std::pair<double, int>> by_n;
    for (const auto& r : results) {
        auto& [sum, count] = by_n[r.n];
        sum += r.mse;
        ++count;
    }
    if (by_n.size() < 3) throw std::invalid_argument("estimate_rate: need at least 3 distinct n");
    std::vector<double> x, y;
    for (const auto& [n, sc] : by_n) {
        const double mean = sc.first / sc.second;
        if (!(mean > 0.0)) throw std::invalid_argument("estimate_rate: mean MSE must be positive");
        x.push_back(std::log(static_cast<double>(n)));
        y.push_back(std::log(mean));
    }
    RateEstimate est;
    static_cast<LineFit&>(est) = fit_line(x, y);
    return est;
}

std::string format_double(double v) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

void write_results_csv(std::ostream& out, const ExperimentConfig& config, std::span<const ReplicateResult> results) {
    out << "truth,k,ell,n,replicate,seed,lambda,mse,oracle_bound\n";
    for (const auto& r : results) {
        out << config.truth_name << ',' << config.penalty_order << ',' << config.truth.order << ',' << r.n << ','
            << r.replicate << ',' << r.seed << ',' << format_double(r.lambda) << ',' << format_double(r.mse) << ','
            << format_double(r.oracle_bound) << '\n';
    }
}

}  // namespace tvrate
