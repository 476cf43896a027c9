// tvrate: command-line front end for the trend-filtering rate library.
//
// Exit codes: 0 success, 1 verification failure, 2 usage or configuration
// error, 3 numerical failure.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "svg.hpp"
#include "tvrate/config.hpp"
#include "tvrate/experiments.hpp"
#include "tvrate/kernel.hpp"
#include "tvrate/oracle.hpp"
#include "tvrate/rng.hpp"
#include "tvrate/solver.hpp"
#include "tvrate/tv.hpp"

namespace {

using namespace tvrate;
using tvrate::cli::SvgPlot;

enum ExitCode { kOk = 0, kVerificationFailed = 1, kUsage = 2, kNumerical = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6e", v);
    return buf;
}

void write_file(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    std::error_code ec;
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw UsageError("cannot open '" + path + "' for writing");
    out << content;
    if (!out.flush()) throw UsageError("write to '" + path + "' failed");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

bool parse_double(const std::string& s, double& v) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, v);
    return ec == std::errc() && p == e;
}

// ---------------------------------------------------------------- kernel

struct KernelArgs {
    int k = 2;
    double delta = 0.1;
    std::string out;
    std::string truth;
};

int cmd_kernel(const KernelArgs& a) {
    const HigherOrderKernel h = construct_kernel(a.k);
    const ScaledKernel hd(h, a.delta);
    const std::string prefix = a.out.empty() ? "kernel_k" + std::to_string(a.k) : a.out;

    std::string csv = "u,H(u)\n";
    for (int i = 0; i <= 1000; ++i) {
        const double u = -1.0 + 2.0 * i / 1000.0;
        csv += format_double(u) + "," + format_double(h(u)) + "\n";
    }
    write_file(prefix + ".csv", csv);

    std::string moments = "j,moment,expected\n";
    std::cout << "kernel H_" << a.k << " on [-1,1], smoothness q = " << h.smoothness << "\n";
    std::cout << "  j   moment                 expected\n";
    for (int j = 0; j < a.k; ++j) {
        const double m = kernel_moment(h, j);
        const int expected = j == 0 ? 1 : 0;
        moments += std::to_string(j) + "," + format_double(m) + "," + std::to_string(expected) + "\n";
        std::printf("  %-3d %-22s %d\n", j, sci(m).c_str(), expected);
    }
    write_file(prefix + "_moments.csv", moments);
    std::cout << "  max |H_" << a.k << "| = " << fixed(derivative_bound(h, 0), 6) << "\n";
    for (int l = 1; l < a.k; ++l)
        std::cout << "  max |H_" << a.k << "^(" << l << ")| = " << fixed(derivative_bound(h, l), 6) << "\n";
    std::cout << "  int |u|^k |H| = " << fixed(h.abs_moment, 6) << "\n";

    SvgPlot plot("Kernel H_{" + std::to_string(a.k) + ",delta}, delta = " + format_double(a.delta), "t", "H(t)");
    SvgPlot::Series s{"H_{k,delta}", "#1f77b4", {}, {}};
    for (int i = 0; i <= 400; ++i) {
        const double t = -a.delta + 2.0 * a.delta * i / 400.0;
        s.x.push_back(t);
        s.y.push_back(hd(t));
    }
    plot.add(std::move(s));
    SvgPlot::Series zero{"", "#bbbbbb", {-a.delta, a.delta}, {0.0, 0.0}};
    zero.dashed = true;
    plot.add(std::move(zero));
    write_file(prefix + ".svg", plot.render());
    std::vector<std::string> written{prefix + ".csv", prefix + "_moments.csv", prefix + ".svg"};

    if (!a.truth.empty()) {
        const Truth t = make_truth(a.truth);
        const PiecewisePolynomial f = convolve(t.f, hd);
        std::string oc = "x,truth,oracle\n";
        SvgPlot op("f* and f_{delta,k}: " + a.truth + ", k = " + std::to_string(a.k) +
                       ", delta = " + format_double(a.delta),
                   "x", "f(x)");
        SvgPlot::Series st{"f*", "#333333", {}, {}}, so{"f_{delta,k}", "#d62728", {}, {}};
        st.dashed = true;
        for (int i = 0; i <= 1000; ++i) {
            const double x = i / 1000.0;
            oc += format_double(x) + "," + format_double(t.f(x)) + "," + format_double(f(x)) + "\n";
            st.x.push_back(x);
            st.y.push_back(t.f(x));
            so.x.push_back(x);
            so.y.push_back(f(x));
        }
        op.add(std::move(st));
        op.add(std::move(so));
        for (double b : t.f.breakpoints()) {
            op.add_vertical_marker(b - a.delta);
            op.add_vertical_marker(b + a.delta);
        }
        write_file(prefix + "_oracle.csv", oc);
        write_file(prefix + "_oracle.svg", op.render());
        written.push_back(prefix + "_oracle.csv");
        written.push_back(prefix + "_oracle.svg");
    }
    for (const auto& w : written) std::cout << "wrote " << w << "\n";
    return kOk;
}

// --------------------------------------------------------- verify-lemmas

struct LemmaArgs {
    std::string truth = "ramp3";
    int k = 3;
    std::size_t n = 65536;
    std::vector<double> deltas{0.2, 0.1, 0.05, 0.025, 0.0125};
    std::string out;
    double approx_tol = 0.15;
    double penalty_tol = 0.05;
};

int cmd_verify_lemmas(const LemmaArgs& a) {
    const Truth t = make_truth(a.truth);
    if (a.k <= t.order)
        throw UsageError("verify-lemmas: k must exceed the truth's order " + std::to_string(t.order));
    const LemmaSweep s = lemma_sweep(t.f, t.order, a.k, a.deltas, a.n);

    std::string csv = "delta,approx_error,penalty,penalty_bound\n";
    std::cout << "truth " << a.truth << " (ell = " << t.order << "), k = " << a.k << ", n = " << a.n << "\n";
    std::cout << "  delta        approx_error   P_k(oracle)    bound\n";
    for (const auto& r : s.rows) {
        csv += format_double(r.delta) + "," + format_double(r.approx_error) + "," + format_double(r.penalty) + "," +
               format_double(r.bound) + "\n";
        std::printf("  %-12s %-14s %-14s %s\n", format_double(r.delta).c_str(), sci(r.approx_error).c_str(),
                    sci(r.penalty).c_str(), sci(r.bound).c_str());
    }
    const bool approx_ok = std::abs(s.approx_fit.slope - s.approx_expected) <= a.approx_tol;
    const bool penalty_ok = std::abs(s.penalty_fit.slope - s.penalty_expected) <= a.penalty_tol;
    auto line = [](bool ok, const std::string& what) {
        std::cout << (ok ? "PASS " : "FAIL ") << what << "\n";
    };
    line(approx_ok, "approximation error slope " + fixed(s.approx_fit.slope, 4) + " (expected " +
                        fixed(s.approx_expected, 0) + " +/- " + fixed(a.approx_tol, 2) + ")");
    line(penalty_ok, "penalty slope " + fixed(s.penalty_fit.slope, 4) + " (expected " + fixed(s.penalty_expected, 0) +
                         " +/- " + fixed(a.penalty_tol, 2) + ")");
    line(s.bound_holds, "penalty within analytic bound at every delta");

    if (!a.out.empty()) {
        csv += "# approx_slope," + format_double(s.approx_fit.slope) + "\n";
        csv += "# penalty_slope," + format_double(s.penalty_fit.slope) + "\n";
        write_file(a.out, csv);
        std::cout << "wrote " << a.out << "\n";
    }
    return approx_ok && penalty_ok && s.bound_holds ? kOk : kVerificationFailed;
}

// ------------------------------------------------------------------ solve

struct SolveArgs {
    std::string input;
    std::string output = "-";
    int k = 2;
    double lambda = 0.0;
    std::string splitting = "fused";
    double tol = 1e-8;
    int max_iter = 20000;
};

std::vector<double> read_column(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<double> y;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = trim(raw);
        if (s.empty() || s[0] == '#') continue;
        double v = 0.0;
        if (!parse_double(s, v)) {
            if (y.empty() && line == 1) continue;  // header
            throw UsageError(path + ":" + std::to_string(line) + ": expected one number, got '" + s + "'");
        }
        y.push_back(v);
    }
    return y;
}

int cmd_solve(const SolveArgs& a) {
    TrendFilterProblem problem{read_column(a.input), a.k, a.lambda};
    problem.validate();
    SolverOptions opts;
    opts.splitting = a.splitting == "difference" ? Splitting::kDifference : Splitting::kFusedDifference;
    opts.tol = a.tol;
    opts.max_iter = a.max_iter;
    const TrendFilterFit fit = solve(problem, opts);

    std::string csv = "theta\n";
    for (double v : fit.theta) csv += format_double(v) + "\n";
    if (a.output == "-")
        std::cout << csv;
    else
        write_file(a.output, csv);
    std::cerr << "n = " << problem.size() << ", k = " << a.k << ", lambda = " << format_double(a.lambda)
              << "\niterations = " << fit.iterations << ", converged = " << (fit.converged ? "yes" : "no")
              << ", polished = " << (fit.polished ? "yes" : "no") << "\nobjective = " << format_double(fit.objective)
              << ", kkt_gap = " << sci(fit.kkt_gap) << "\n";
    if (!fit.converged && !(fit.kkt_gap <= a.tol)) {
        std::cerr << "error: solver did not converge\n";
        return kNumerical;
    }
    return kOk;
}

// ------------------------------------------------------ experiment, plot

struct RateSummary {
    std::map<std::size_t, std::pair<double, double>> means;  // n -> (mse, bound)
    RateEstimate rate;
    bool have_rate = false;
};

RateSummary summarize(const std::vector<ReplicateResult>& results) {
    RateSummary s;
    std::map<std::size_t, int> count;
    for (const auto& r : results) {
        auto& [m, b] = s.means[r.n];
        m += r.mse;
        b += r.oracle_bound;
        ++count[r.n];
    }
    for (auto& [n, mb] : s.means) {
        mb.first /= count[n];
        mb.second /= count[n];
    }
    if (s.means.size() >= 3) {
        s.rate = estimate_rate(results);
        s.have_rate = true;
    }
    return s;
}

std::string rate_plot(const std::vector<ReplicateResult>& results, const std::string& truth, int k, int ell,
                      bool deterministic) {
    const RateSummary s = summarize(results);
    SvgPlot plot("Empirical MSE: " + truth + ", k = " + std::to_string(k), "n", "MSE");
    plot.set_log_axes(true, true);
    SvgPlot::Series cells{"replicates", "#c7c7c7", {}, {}}, mean{"mean MSE", "#1f77b4", {}, {}};
    cells.markers = mean.markers = true;
    for (const auto& r : results) {
        cells.x.push_back(static_cast<double>(r.n));
        cells.y.push_back(r.mse);
    }
    SvgPlot::Series bound{"oracle bound", "#2ca02c", {}, {}};
    bound.dashed = true;
    for (const auto& [n, mb] : s.means) {
        mean.x.push_back(static_cast<double>(n));
        mean.y.push_back(mb.first);
        bound.x.push_back(static_cast<double>(n));
        bound.y.push_back(mb.second);
    }
    plot.add(std::move(cells));
    plot.add(std::move(mean));
    plot.add(std::move(bound));
    if (s.have_rate) {
        SvgPlot::Series fitl{"fitted line", "#d62728", {}, {}};
        for (const auto& [n, mb] : s.means) {
            fitl.x.push_back(static_cast<double>(n));
            fitl.y.push_back(std::exp(s.rate.intercept + s.rate.slope * std::log(static_cast<double>(n))));
        }
        plot.add(std::move(fitl));
        plot.add_note("slope = " + fixed(s.rate.slope, 4) + " (SE " + fixed(s.rate.slope_se, 4) + ")");
    }
    if (k > ell && ell >= 1) {
        plot.add_note("this_paper: " + fixed(theoretical_rate(RateMethod::kThisPaper, k, ell).exponent, 4) +
                      ", simon2021: " + fixed(theoretical_rate(RateMethod::kSimon2021, k, ell).exponent, 4));
    }
    if (deterministic) plot.add_note("deterministic (sigma = 0)");
    return plot.render();
}

struct ExperimentArgs {
    std::string config;
    int threads = -1;
};

int cmd_experiment(const ExperimentArgs& a) {
    if (!std::filesystem::exists(a.config)) throw UsageError("config file '" + a.config + "' not found");
    const ExperimentConfig c = parse_experiment_config(KeyValueFile::load(a.config));
    if (a.threads >= 0) setenv("TVRATE_THREADS", std::to_string(a.threads).c_str(), 1);

    const ExperimentRun run = run_experiment(c);
    std::ostringstream csv;
    write_results_csv(csv, c, run.results);
    write_file(c.output_path, csv.str());

    const bool deterministic = c.sigma == 0.0;
    const RateSummary s = summarize(run.results);
    int within = 0;
    for (const auto& r : run.results) within += r.mse <= 10.0 * r.oracle_bound;

    nlohmann::ordered_json j;
    j["config"] = {
        {"source", a.config},
        {"truth", c.truth_name},
        {"ell", c.truth.order},
        {"k", c.penalty_order},
        {"n_grid", c.n_grid},
        {"replicates", c.replicates},
        {"sigma", c.sigma},
        {"seed", c.base_seed},
        {"lambda_grid", c.lambda_grid.empty() ? nlohmann::ordered_json("schedule") : nlohmann::ordered_json(c.lambda_grid)},
        {"lambda_points", c.lambda_points},
        {"lambda_span", c.lambda_span},
        {"max_iter", c.max_iter},
        {"tol", c.tol},
    };
    j["generator"] = std::string(NormalStream::kAlgorithm);
    j["cells"] = run.results.size();
    j["failures"] = run.failures;
    j["solver_failures"] = run.solver_failures;
    j["deterministic"] = deterministic;
    if (s.have_rate)
        j["rate"] = {{"slope", s.rate.slope},
                     {"slope_se", s.rate.slope_se},
                     {"intercept", s.rate.intercept},
                     {"n_points", s.rate.n_points}};
    else
        j["rate"] = nullptr;
    j["theory"] = {{"this_paper", theoretical_rate(RateMethod::kThisPaper, c.penalty_order, c.truth.order).exponent},
                   {"simon2021", theoretical_rate(RateMethod::kSimon2021, c.penalty_order, c.truth.order).exponent}};
    auto& by_n = j["by_n"] = nlohmann::ordered_json::array();
    for (const auto& [n, mb] : s.means) by_n.push_back({{"n", n}, {"mean_mse", mb.first}, {"mean_oracle_bound", mb.second}});
    j["oracle_inequality_fraction"] = run.results.empty() ? 0.0 : static_cast<double>(within) / run.results.size();
    j["outputs"] = {{"csv", c.output_path}, {"plot", c.plot_path}};
    j["wall_seconds"] = run.wall_seconds;
    write_file(c.summary_path, j.dump(2) + "\n");
    write_file(c.plot_path, rate_plot(run.results, c.truth_name, c.penalty_order, c.truth.order, deterministic));

    std::cout << c.truth_name << ", k = " << c.penalty_order << ": " << run.results.size() << " cells, "
              << run.failures << " failed, " << fixed(run.wall_seconds, 1) << " s\n";
    for (const auto& [n, mb] : s.means)
        std::printf("  n = %-6zu mean mse = %s  oracle bound = %s\n", n, sci(mb.first).c_str(), sci(mb.second).c_str());
    if (s.have_rate)
        std::cout << "slope " << fixed(s.rate.slope, 4) << " (SE " << fixed(s.rate.slope_se, 4) << ")"
                  << (deterministic ? " [deterministic]" : "") << "\n";
    std::cout << "wrote " << c.output_path << ", " << c.summary_path << ", " << c.plot_path << "\n";
    if (run.results.empty()) {
        std::cerr << "error: every cell failed\n";
        return kNumerical;
    }
    return kOk;
}

struct PlotArgs {
    std::string input;
    std::string output;
};

int cmd_plot(const PlotArgs& a) {
    std::istringstream in(read_file(a.input));
    std::string line;
    if (!std::getline(in, line) || trim(line) != "truth,k,ell,n,replicate,seed,lambda,mse,oracle_bound")
        throw UsageError(a.input + ": not a results CSV");
    std::vector<ReplicateResult> results;
    std::string truth;
    int k = 0, ell = 0, lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        for (std::string tok; std::getline(ls, tok, ',');) f.push_back(trim(tok));
        if (f.size() != 9) throw UsageError(a.input + ":" + std::to_string(lineno) + ": expected 9 fields");
        try {
            truth = f[0];
            k = std::stoi(f[1]);
            ell = std::stoi(f[2]);
            ReplicateResult r;
            r.n = std::stoull(f[3]);
            r.replicate = std::stoi(f[4]);
            r.seed = std::stoull(f[5]);
            if (!parse_double(f[6], r.lambda) || !parse_double(f[7], r.mse) || !parse_double(f[8], r.oracle_bound))
                throw std::invalid_argument("number");
            results.push_back(r);
        } catch (const std::logic_error&) {
            throw UsageError(a.input + ":" + std::to_string(lineno) + ": malformed field");
        }
    }
    if (results.empty()) throw UsageError(a.input + ": no rows");
    const std::string out = a.output.empty() ? std::filesystem::path(a.input).replace_extension(".svg").string() : a.output;
    write_file(out, rate_plot(results, truth, k, ell, false));
    const RateSummary s = summarize(results);
    if (s.have_rate) std::cout << "slope " << fixed(s.rate.slope, 4) << " (SE " << fixed(s.rate.slope_se, 4) << ")\n";
    std::cout << "wrote " << out << "\n";
    return kOk;
}

// ------------------------------------------------------------------ rates

int cmd_rates(int k_max) {
    std::cout << "MSE ~ n^r. correct: well-specified rate of order k.\n";
    std::cout << "  k  ell  correct   simon2021  this_paper  improved\n";
    for (int k = 2; k <= k_max; ++k) {
        const double correct = theoretical_rate(RateMethod::kCorrectSpec, k, k).exponent;
        for (int ell = 1; ell < k; ++ell) {
            const double prior = theoretical_rate(RateMethod::kSimon2021, k, ell).exponent;
            const double ours = theoretical_rate(RateMethod::kThisPaper, k, ell).exponent;
            std::printf("  %-2d %-4d %-9s %-10s %-11s %s\n", k, ell, fixed(correct, 4).c_str(), fixed(prior, 4).c_str(),
                        fixed(ours, 4).c_str(), ours < prior - 1e-12 ? "yes" : "no");
        }
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trend filtering under misspecified smoothness: kernels, oracle bounds, fits and rate experiments"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    KernelArgs ka;
    auto* kernel = app.add_subcommand("kernel", "Tabulate and plot the order-k kernel");
    kernel->add_option("--k", ka.k, "Kernel order")->required()->check(CLI::Range(1, 8));
    kernel->add_option("--delta", ka.delta, "Bandwidth of the scaled kernel")->check(CLI::PositiveNumber);
    kernel->add_option("--out", ka.out, "Output prefix (default kernel_k<K>)");
    kernel->add_option("--truth", ka.truth, "Overlay f* and its oracle for a named truth")
        ->check(CLI::IsMember({"step3", "ramp3"}));

    LemmaArgs la;
    auto* lemmas = app.add_subcommand("verify-lemmas", "Check approximation-error and penalty scaling over a bandwidth sweep");
    lemmas->add_option("--truth", la.truth, "Truth")->check(CLI::IsMember({"step3", "ramp3"}));
    lemmas->add_option("--k", la.k, "Penalty order")->check(CLI::Range(2, 8));
    lemmas->add_option("--n", la.n, "Design size for the empirical norm")->check(CLI::Range(2, 1 << 24));
    lemmas->add_option("--deltas", la.deltas, "Bandwidths")->delimiter(',')->check(CLI::PositiveNumber);
    lemmas->add_option("--out", la.out, "Report CSV");

    SolveArgs sa;
    auto* solve_cmd = app.add_subcommand("solve", "Fit trend filtering to a single-column CSV");
    solve_cmd->add_option("--input", sa.input, "Responses, one per line")->required();
    solve_cmd->add_option("--output", sa.output, "Fitted values ('-' for stdout)");
    solve_cmd->add_option("--k", sa.k, "Penalty order")->check(CLI::Range(1, 8));
    solve_cmd->add_option("--lambda", sa.lambda, "Penalty weight")->required()->check(CLI::NonNegativeNumber);
    solve_cmd->add_option("--splitting", sa.splitting, "Splitting scheme")->check(CLI::IsMember({"fused", "difference"}));
    solve_cmd->add_option("--tol", sa.tol, "Convergence tolerance")->check(CLI::PositiveNumber);
    solve_cmd->add_option("--max-iter", sa.max_iter, "Iteration limit")->check(CLI::PositiveNumber);

    ExperimentArgs ea;
    auto* exp = app.add_subcommand("experiment", "Run a Monte Carlo rate experiment from a config file");
    exp->add_option("--config", ea.config, "Config file")->required();
    exp->add_option("--threads", ea.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

    int k_max = 4;
    auto* rates = app.add_subcommand("rates", "Print the convergence-rate table");
    rates->add_option("--k-max", k_max, "Largest penalty order")->check(CLI::Range(2, 8));

    PlotArgs pa;
    auto* plot = app.add_subcommand("plot", "Log-log MSE plot from a results CSV");
    plot->add_option("--input", pa.input, "Results CSV")->required();
    plot->add_option("--output", pa.output, "SVG path (default: input with .svg)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*kernel) return cmd_kernel(ka);
        if (*lemmas) return cmd_verify_lemmas(la);
        if (*solve_cmd) return cmd_solve(sa);
        if (*exp) return cmd_experiment(ea);
        if (*rates) return cmd_rates(k_max);
        if (*plot) return cmd_plot(pa);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    }
    return kUsage;
}
