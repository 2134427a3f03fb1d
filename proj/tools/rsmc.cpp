// rsmc: simulate observed paths, run one-shot tests, run level/power studies.
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "rsmc/experiments.hpp"
#include "rsmc/hyptest.hpp"
#include "rsmc/io.hpp"
#include "rsmc/specs.hpp"

namespace {

using namespace rsmc;

StochasticMatrix load_p(const std::string& spec, Index n) {
    return spec == "builtin" ? specs::reflected_walk(n) : StochasticMatrix(specs::square_matrix_file(spec, n));
}

Index infer_states(const std::vector<int>& path, Index given) {
    Index top = 0;
    for (int s : path) top = std::max<Index>(top, s + 1);
    if (given == 0) return top;
    if (top > given) throw io::IoError("path contains state " + std::to_string(top) + " > --states");
    return given;
}

struct OneShot {
    std::string path;
    Index states = 0;
    std::string model = "stochastic";
    double alpha = 0.05;
    Index mc_draws = 50000;
    std::uint64_t seed = 1;
    std::string out;
    std::string estimates_dir;
    int a2_probes = 8;

    void add_common(CLI::App* app) {
        app->add_option("--path", path, "observed path, one 1-based state per line")->required();
        app->add_option("--states", states, "number of states N (default: largest state in the path)");
        app->add_option("--model", model, "model constraints, e.g. support-p0 or symmetric,zero-diagonal")
            ->capture_default_str();
        app->add_option("--alpha", alpha, "level")->capture_default_str()->check(CLI::Range(0.0, 1.0));
        app->add_option("--mc-draws", mc_draws, "Monte Carlo draws for the quantile")->capture_default_str();
        app->add_option("--seed", seed, "seed for the quantile draws")->capture_default_str();
        app->add_option("--out", out, "write the report as CSV");
        app->add_option("--estimates-dir", estimates_dir, "write pi_hat.csv, q_hat.csv, sigma.csv here");
    }

    TestConfig test_config() const {
        TestConfig c;
        c.alpha = alpha;
        c.mc_draws = mc_draws;
        c.mc_seed = substream_seed(seed, {hash_label("quantile")});
        c.a2_perturbations = a2_probes;
        c.a2_seed = substream_seed(seed, {hash_label("a2")});
        return c;
    }

    EmpiricalEstimates estimates() {
        const auto observed = io::read_path(path);
        states = infer_states(observed, states);
        EmpiricalEstimates est = estimate_pi_Q(observed, states);
        if (!estimates_dir.empty()) {
            std::filesystem::create_directories(estimates_dir);
            const CovarianceEstimate sigma = estimate_sigma(est);
            io::write_estimates(estimates_dir, est, &sigma);
        }
        return est;
    }
};

template <class Report>
void finish(const OneShot& o, const Report& rep) {
    io::write_summary(std::cout, rep);
    if (!o.out.empty()) {
        auto out = io::open_out(o.out);
        io::write_report_csv(out, rep);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tests for Markov chains observed at random times"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "simulate an observed path");
    Index sim_states = 10, sim_n = 1000;
    std::string sim_p = "builtin", sim_mu = "poisson:1", sim_out, sim_initial = "stationary", sim_hidden;
    std::uint64_t sim_seed = 1;
    sim->add_option("--states", sim_states, "number of states N")->capture_default_str();
    sim->add_option("--p", sim_p, "transition matrix file, or builtin (reflected walk)")->capture_default_str();
    sim->add_option("--mu", sim_mu, "gap law: poisson:L | point:J | table:FILE")->capture_default_str();
    sim->add_option("--n", sim_n, "number of observations")->capture_default_str();
    sim->add_option("--seed", sim_seed, "seed")->capture_default_str();
    sim->add_option("--initial", sim_initial, "stationary | uniform")->capture_default_str();
    sim->add_option("--out", sim_out, "path file (default stdout)");
    sim->add_option("--hidden-out", sim_hidden, "also write the hidden path");

    // test-p
    auto* tp = app.add_subcommand("test-p", "affine constraint test on P");
    OneShot tp_opts;
    std::string hypothesis;
    tp_opts.add_common(tp);
    tp->add_option("--hypothesis", hypothesis, "H0 constraints, e.g. support-p0, point-p0, point:FILE")
        ->required();
    tp->add_option("--a2-probes", tp_opts.a2_probes, "rank-stability probes (0 disables)")->capture_default_str();

    // test-mu
    auto* tm = app.add_subcommand("test-mu", "goodness-of-fit test on the gap distribution");
    OneShot tm_opts;
    std::string mu0 = "poisson:1";
    tm_opts.a2_probes = 0;
    tm_opts.add_common(tm);
    tm->add_option("--mu0", mu0, "null gap law")->capture_default_str();

    // experiment
    auto* ex = app.add_subcommand("experiment", "level and power studies");
    experiments::ExperimentConfig cfg;
    std::string ex_out = "results", mode = "both";
    bool full_scale = false, emit_plots = false;
    // the config file belongs to the top-level app so its [experiment] section reaches the subcommand
    app.set_config("--config", "", "structured config file with an [experiment] section");
    ex->fallthrough();
    ex->add_option("--scenario", cfg.scenario, "test1 | test2 | test3 | custom")
        ->capture_default_str()
        ->check(CLI::IsMember({"test1", "test2", "test3", "custom"}));
    ex->add_option("--states", cfg.n_states, "number of states N")->capture_default_str();
    ex->add_option("--p0", cfg.p0, "null transition matrix file, or builtin")->capture_default_str();
    ex->add_option("--mu", cfg.mu, "gap law under H0")->capture_default_str();
    ex->add_option("--kind", cfg.kind, "custom scenarios: affine | gaps")->capture_default_str();
    ex->add_option("--model", cfg.model, "custom scenarios: model constraints");
    ex->add_option("--hypothesis", cfg.hypothesis, "custom affine scenarios: H0 constraints");
    ex->add_option("--n", cfg.sample_sizes, "sample sizes")->delimiter(',')->capture_default_str();
    auto* reps_opt = ex->add_option("--reps", cfg.reps, "replications per cell")->capture_default_str();
    ex->add_option("--alpha", cfg.alpha, "level")->capture_default_str();
    ex->add_option("--grid", cfg.grid, "alternative grid (t or lambda values)")->delimiter(',');
    ex->add_option("--seed", cfg.seed, "master seed")->capture_default_str();
    auto* mc_opt = ex->add_option("--mc-draws", cfg.mc_draws, "Monte Carlo quantile draws")->capture_default_str();
    ex->add_option("--threads", cfg.threads, "worker threads (0: all cores)")->capture_default_str();
    ex->add_option("--initial", cfg.initial, "stationary | uniform")->capture_default_str();
    ex->add_option("--mode", mode, "level | power | both")
        ->capture_default_str()
        ->check(CLI::IsMember({"level", "power", "both"}));
    ex->add_option("--out", ex_out, "output directory")->capture_default_str();
    ex->add_flag("--keep-statistics", cfg.keep_statistics, "retain per-replication statistics and histograms");
    ex->add_flag("--paper-scale", full_scale, "R = 10000, M = 100000 unless given explicitly");
    ex->add_flag("--emit-plots", emit_plots, "render SVG plots");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*sim) {
            const StochasticMatrix p = load_p(sim_p, sim_states);
            const GapDistribution mu = specs::parse_gaps(sim_mu);
            const Vector init = sim_initial == "uniform"
                                    ? Vector(Vector::Constant(sim_states, 1.0 / static_cast<double>(sim_states)))
                                    : stationary_distribution(p);
            const PathSample path = simulate_observed(p, mu, sim_n, init, sim_seed, !sim_hidden.empty());
            if (sim_out.empty()) {
                io::write_path(std::cout, path.observed);
            } else {
                auto out = io::open_out(sim_out);
                io::write_path(out, path.observed);
            }
            if (!sim_hidden.empty()) {
                auto out = io::open_out(sim_hidden);
                io::write_path(out, path.hidden);
            }
        } else if (*tp) {
            const EmpiricalEstimates est = tp_opts.estimates();
            const AffineModel model = specs::parse_model(tp_opts.model, tp_opts.states);
            const HypothesisSpec hyp = specs::parse_hypothesis(hypothesis, model);
            finish(tp_opts, test_P(PTestPlan::make(model, hyp), est, tp_opts.test_config()));
        } else if (*tm) {
            const EmpiricalEstimates est = tm_opts.estimates();
            const AffineModel model = specs::parse_model(tm_opts.model, tm_opts.states);
            finish(tm_opts, test_mu(model, specs::parse_gaps(mu0), est, tm_opts.test_config()));
        } else if (*ex) {
            if (full_scale) {
                if (reps_opt->count() == 0) cfg.reps = 10000;
                if (mc_opt->count() == 0) cfg.mc_draws = 100000;
            }
            experiments::ExperimentResult res;
            if (mode != "power") res = experiments::run_level_experiment(cfg);
            if (mode != "level") {
                auto pw = experiments::run_power_experiment(cfg);
                res.config = pw.config;
                res.grid_name = pw.grid_name;
                res.null_value = pw.null_value;
                res.threads_used = pw.threads_used;
                res.power = std::move(pw.power);
                res.runtime_seconds += pw.runtime_seconds;
            }
            experiments::EmitOptions opts;
            opts.emit_plots = emit_plots;
            const auto files = experiments::emit_outputs(res, ex_out, opts);
            for (const auto& c : res.level) {
                std::cout << cfg.scenario << " level n=" << c.n << ": " << io::format_double(c.frequency()) << " ("
                          << io::format_double(c.se()) << "), failures " << c.failures() << "\n";
            }
            for (const auto& f : files) std::cout << "wrote " << f << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
