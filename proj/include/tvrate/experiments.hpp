#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tvrate/config.hpp"
#include "tvrate/pwpoly.hpp"
#include "tvrate/regression.hpp"
#include "tvrate/solver.hpp"

namespace tvrate {

struct Truth {
    std::string name;
    PiecewisePolynomial f;
    int order = 1;  ///< ell: f is in F_ell
};

/// "step3": 3 * 1(x >= 0.5), ell = 1. "ramp3": 3 (x - 0.5)_+, ell = 2.
/// Both on [0, 1]. Throws std::invalid_argument for other names.
Truth make_truth(const std::string& name);

/// y_i = truth(i/n) + sigma z_i, z from NormalStream(seed). sigma = 0 gives
/// the noiseless samples.
std::vector<double> generate_data(const PiecewisePolynomial& truth, std::size_t n, double sigma, std::uint64_t seed);

/// truth(i/n), i = 1..n.
std::vector<double> sample_truth(const PiecewisePolynomial& truth, std::size_t n);

struct OracleLambdaFit {
    double lambda = 0.0;
    double mse = 0.0;
    std::vector<double> theta;
    int failures = 0;  ///< grid points where the solver did not converge
};

/// Solver settings used by the Monte Carlo runs.
SolverOptions experiment_solver_options();

/// Solves at every lambda in the grid (largest first, warm-started) and
/// returns the lambda minimizing ||theta - truth||_n^2. Grid points where the
/// solver does not converge are skipped; throws std::runtime_error if none
/// converges.
OracleLambdaFit fit_oracle_lambda(std::span<const double> y, std::span<const double> truth_values, int k,
                                  std::span<const double> lambda_grid,
                                  const SolverOptions& opts = experiment_solver_options());

struct ExperimentConfig {
    std::string truth_name = "step3";
    Truth truth = make_truth("step3");
    int penalty_order = 2;
    std::vector<std::size_t> n_grid{256, 512, 1024, 2048, 4096, 8192};
    int replicates = 40;
    double sigma = 1.0;
    std::uint64_t base_seed = 20240601;
    /// Empty: a log-spaced grid around lambda_schedule(C = 1) for each n.
    std::vector<double> lambda_grid;
    int lambda_points = 30;
    double lambda_span = 100.0;  ///< grid covers [sched / span, sched * span]
    int max_iter = 5000;
    double tol = 1e-6;
    std::string output_path = "results.csv";
    std::string summary_path;  ///< default: output_path with .json
    std::string plot_path;     ///< default: output_path with .svg

    /// Throws std::invalid_argument describing the first violated constraint.
    void validate() const;
};

/// Reads an experiment config (see README for keys). Throws ConfigError with
/// the offending line for malformed values and unknown keys.
ExperimentConfig parse_experiment_config(const KeyValueFile& file);

/// The lambda grid of cell size n.
std::vector<double> lambda_grid_for(const ExperimentConfig& config, std::size_t n);

struct ReplicateResult {
    std::size_t n = 0;
    int replicate = 0;
    std::uint64_t seed = 0;
    double lambda = 0.0;
    double mse = 0.0;
    double oracle_bound = 0.0;  ///< ||f* - f_{delta,k}||_n^2 + lambda_n P_k(f_{delta,k})
};

struct ExperimentRun {
    std::vector<ReplicateResult> results;  ///< sorted by (n, replicate)
    int failures = 0;                      ///< cells that raised and were skipped
    int solver_failures = 0;               ///< non-converged grid points over all cells
    double wall_seconds = 0.0;
};

/// Worker count from TVRATE_THREADS (0 or unset: hardware concurrency).
unsigned worker_count();

/// Runs every (n, r) cell, concurrently when more than one worker is
/// available. Results do not depend on the execution order.
ExperimentRun run_experiment(const ExperimentConfig& config);

/// Oracle-inequality bound at the scheduled delta and lambda for size n.
double oracle_bound(const Truth& truth, int k, std::size_t n);

struct RateEstimate : LineFit {};

/// OLS of log(mean MSE at n) on log n. Needs at least 3 distinct n.
RateEstimate estimate_rate(std::span<const ReplicateResult> results);

/// CSV with header truth,k,ell,n,replicate,seed,lambda,mse,oracle_bound and
/// shortest round-trip number formatting.
void write_results_csv(std::ostream& out, const ExperimentConfig& config, std::span<const ReplicateResult> results);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

}  // namespace tvrate
