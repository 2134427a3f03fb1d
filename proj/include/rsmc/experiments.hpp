#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "rsmc/gchisq.hpp"
#include "rsmc/hyptest.hpp"
#include "rsmc/io.hpp"
#include "rsmc/rng.hpp"
#include "rsmc/sampling.hpp"
#include "rsmc/specs.hpp"
#include "rsmc/svg.hpp"

// Monte Carlo level and power studies over the three reference tests
//   test1  H0: supp(P) within supp(P0), model = all stochastic matrices
//   test2  H0: P = P0, model = matrices supported on supp(P0)
//   test3  H0: mu = mu0, model = matrices supported on supp(P0)
// plus a custom scenario assembled from spec strings.
namespace rsmc::experiments {

inline StochasticMatrix builtin_P0(Index n) { return specs::reflected_walk(n); }

// Full-support stochastic matrix, rows iid U(0,1) normalized.
inline StochasticMatrix random_full_support(Index n, std::uint64_t seed) {
    Engine rng = make_engine(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix c(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) c(i, j) = u(rng);
        c.row(i) /= c.row(i).sum();
    }
    return StochasticMatrix(std::move(c));
}

struct ExperimentConfig {
    std::string scenario = "test1";  // test1 | test2 | test3 | custom
    Index n_states = 10;
    std::string p0 = "builtin";      // builtin reflected walk, or a matrix file
    std::string mu = "poisson:1";    // gaps under H0 (mu0 for gap tests)
    std::string kind = "affine";     // custom only: affine | gaps
    std::string model;               // custom only
    std::string hypothesis;          // custom affine only
    std::vector<Index> sample_sizes{200, 500, 1000, 2000};
    Index reps = 1000;
    double alpha = 0.05;
    std::vector<double> grid;        // empty: scenario default
    std::uint64_t seed = 20160601;
    Index mc_draws = 50000;
    unsigned threads = 0;            // 0: hardware concurrency
    bool keep_statistics = false;
    std::string initial = "stationary";  // stationary | uniform

    void use_full_scale() {
        reps = 10000;
        mc_draws = 100000;
    }

    void validate() const {
        if (reps < 1) throw Error("reps must be >= 1");
        if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0,1)");
        if (mc_draws < 1) throw Error("mc-draws must be >= 1");
        if (sample_sizes.empty()) throw Error("no sample sizes given");
        for (Index n : sample_sizes) {
            if (n < 2) throw Error("sample sizes must be >= 2");
        }
        if (initial != "stationary" && initial != "uniform") throw Error("initial must be stationary or uniform");
    }
};

enum class Outcome : unsigned char { accept, reject, partial, not_identifiable, disagreement, degenerate, failed };

inline const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::accept: return "accept";
        case Outcome::reject: return "reject";
        case Outcome::partial: return "partial";
        case Outcome::not_identifiable: return "not_identifiable";
        case Outcome::disagreement: return "form_disagreement";
        case Outcome::degenerate: return "degenerate";
        case Outcome::failed: return "failed";
    }
    return "?";
}

struct Replication {
    Outcome outcome = Outcome::failed;
    double statistic = std::nan("");
    bool valid() const { return outcome == Outcome::accept || outcome == Outcome::reject; }
};

// Everything a replication needs besides its seeds.
class Scenario {
public:
    static Scenario resolve(const ExperimentConfig& cfg) {
        cfg.validate();
        Scenario s;
        s.name_ = cfg.scenario;
        const Index n = cfg.n_states;
        s.p0_ = cfg.p0 == "builtin" ? builtin_P0(n) : StochasticMatrix(specs::square_matrix_file(cfg.p0, n));
        s.mu_ = specs::parse_gaps(cfg.mu);
        s.c_ = random_full_support(n, substream_seed(cfg.seed, {hash_label("C")}));
        const auto support = specs::support_of(s.p0_.matrix());

        if (cfg.scenario == "test1") {
            s.kind_ = "affine";
            s.model_ = AffineModel::compose(n, {});
            s.plan_ = PTestPlan::make(s.model_, HypothesisSpec::make(s.model_, {builders::support_model(n, support)}));
        } else if (cfg.scenario == "test2") {
            s.kind_ = "affine";
            s.model_ = AffineModel::compose(n, {builders::support_model(n, support)});
            s.plan_ = PTestPlan::make(s.model_, HypothesisSpec::point(s.model_, vec(s.p0_.matrix())));
        } else if (cfg.scenario == "test3") {
            s.kind_ = "gaps";
            s.model_ = AffineModel::compose(n, {builders::support_model(n, support)});
        } else if (cfg.scenario == "custom") {
            s.kind_ = cfg.kind;
            s.model_ = specs::parse_model(cfg.model, n);
            if (!s.model_.contains(vec(s.p0_.matrix()))) throw Error("custom: P0 is not in the model");
            if (s.kind_ == "affine") {
                s.plan_ = PTestPlan::make(s.model_, specs::parse_hypothesis(cfg.hypothesis, s.model_));
            } else if (s.kind_ != "gaps") {
                throw Error("custom: kind must be affine or gaps");
            }
        } else {
            throw Error("unknown scenario '" + cfg.scenario + "'");
        }

        if (s.kind_ == "affine") {
            s.grid_name_ = "t";
            s.null_value_ = 1.0;
            for (int i = 1; i <= 10; ++i) s.default_grid_.push_back(i / 10.0);
        } else {
            s.grid_name_ = "lambda";
            s.null_value_ = s.mu_.family() == GapFamily::poisson ? s.mu_.parameter() : std::nan("");
            for (int i = 5; i <= 15; ++i) s.default_grid_.push_back(i / 10.0);
        }
        for (double g : cfg.grid) {
            const bool ok = s.kind_ == "affine" ? (g >= 0.0 && g <= 1.0) : (g > 0.0 && std::isfinite(g));
            if (!ok) throw Error("grid value " + io::format_double(g) + " outside the range for " + s.grid_name_);
        }
        s.initial_uniform_ = cfg.initial == "uniform";
        return s;
    }

    const std::string& name() const { return name_; }
    const std::string& kind() const { return kind_; }
    const std::string& grid_name() const { return grid_name_; }
    double null_value() const { return null_value_; }
    const std::vector<double>& default_grid() const { return default_grid_; }
    const StochasticMatrix& p0() const { return p0_; }
    const StochasticMatrix& c() const { return c_; }
    const GapDistribution& mu() const { return mu_; }
    const AffineModel& model() const { return model_; }

    // Data-generating law at a grid value: P_t = t P0 + (1 - t) C for affine tests,
    // Poisson(lambda) gaps for gap tests.
    struct Truth {
        StochasticMatrix p;
        GapDistribution mu;
        Vector initial;
    };

    Truth truth(double g) const {
        Truth t;
        if (kind_ == "affine") {
            t.p = g == 1.0 ? p0_ : StochasticMatrix(g * p0_.matrix() + (1.0 - g) * c_.matrix());
            t.mu = mu_;
        } else {
            if (mu_.family() != GapFamily::poisson && g != null_value_) {
                throw Error("lambda grid requires a Poisson null distribution");
            }
            t.p = p0_;
            t.mu = g == null_value_ ? mu_ : GapDistribution::poisson(g);
        }
        const Index n = t.p.n_states();
        t.initial = initial_uniform_ ? Vector(Vector::Constant(n, 1.0 / static_cast<double>(n)))
                                     : stationary_distribution(t.p);
        return t;
    }

    // One test on one simulated path. Exceptions become failure outcomes.
    Replication run(const Truth& truth, Index n, std::uint64_t data_seed, const TestConfig& tcfg,
                    QuadFormLaw* law_out = nullptr) const {
        Replication r;
        try {
            const PathSample path = simulate_observed(truth.p, truth.mu, n, truth.initial, data_seed);
            const EmpiricalEstimates est = estimate_pi_Q(path);
            if (est.partial()) {
                r.outcome = Outcome::partial;
                return r;
            }
            Decision d = Decision::unusable;
            if (kind_ == "affine") {
                const auto rep = test_P(*plan_, est, tcfg);
                r.statistic = rep.statistic;
                d = rep.decision;
                if (law_out) *law_out = rep.law;
            } else {
                const auto rep = test_mu(model_, mu_, est, tcfg);
                r.statistic = rep.statistic;
                d = rep.decision;
                if (law_out) *law_out = rep.law;
            }
            r.outcome = d == Decision::reject   ? Outcome::reject
                        : d == Decision::accept ? Outcome::accept
                                                : Outcome::degenerate;
        } catch (const PartialEstimate&) {
            r.outcome = Outcome::partial;
        } catch (const NotIdentifiable&) {
            r.outcome = Outcome::not_identifiable;
        } catch (const FormDisagreement&) {
            r.outcome = Outcome::disagreement;
        } catch (const Error&) {
            r.outcome = Outcome::failed;
        }
        return r;
    }

private:
    std::string name_;
    std::string kind_;
    std::string grid_name_;
    double null_value_ = 1.0;
    std::vector<double> default_grid_;
    StochasticMatrix p0_;
    StochasticMatrix c_;
    GapDistribution mu_;
    AffineModel model_;
    std::optional<PTestPlan> plan_;
    bool initial_uniform_ = false;
};

inline std::uint64_t data_seed(std::uint64_t master, Index n, Index rep) {
    return substream_seed(master, {hash_label("data"), static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep)});
}

inline std::uint64_t quantile_seed(std::uint64_t master, Index n, Index rep) {
    return substream_seed(master, {hash_label("quantile"), static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep)});
}

struct Cell {
    Index n = 0;
    double grid_value = 1.0;
    std::vector<Replication> reps;

    Index rejections() const {
        return static_cast<Index>(std::count_if(reps.begin(), reps.end(),
                                                [](const Replication& r) { return r.outcome == Outcome::reject; }));
    }
    Index valid() const {
        return static_cast<Index>(std::count_if(reps.begin(), reps.end(), [](const Replication& r) { return r.valid(); }));
    }
    Index failures() const { return static_cast<Index>(reps.size()) - valid(); }
    double frequency() const { return valid() ? static_cast<double>(rejections()) / static_cast<double>(valid()) : std::nan(""); }
    // binomial standard error sqrt(f (1 - f) / R) over valid replications
    double se() const {
        const double f = frequency();
        return valid() ? std::sqrt(f * (1.0 - f) / static_cast<double>(valid())) : std::nan("");
    }
    std::map<std::string, Index> failure_breakdown() const {
        std::map<std::string, Index> out;
        for (const auto& r : reps) {
            if (!r.valid()) ++out[to_string(r.outcome)];
        }
        return out;
    }
};

struct ExperimentResult {
    ExperimentConfig config;
    std::string grid_name;
    double null_value = 1.0;
    std::vector<Cell> level;
    std::vector<Cell> power;
    double runtime_seconds = 0.0;
    unsigned threads_used = 1;
};

inline unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Runs reps replications for each (n, grid value) cell on a worker pool. Each task
// derives its seeds from (master seed, n, replication index) alone, so results do not
// depend on thread count, and cells sharing n share random numbers.
inline std::vector<Cell> run_cells(const Scenario& scn, const ExperimentConfig& cfg,
                                   const std::vector<std::pair<Index, double>>& cells, unsigned threads) {
    std::vector<Cell> out(cells.size());
    std::vector<Scenario::Truth> truths;
    truths.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        out[c].n = cells[c].first;
        out[c].grid_value = cells[c].second;
        out[c].reps.resize(static_cast<std::size_t>(cfg.reps));
        truths.push_back(scn.truth(cells[c].second));
    }
    const std::size_t total = cells.size() * static_cast<std::size_t>(cfg.reps);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        TestConfig tcfg;
        tcfg.alpha = cfg.alpha;
        tcfg.mc_draws = cfg.mc_draws;
        for (std::size_t task = next++; task < total; task = next++) {
            const std::size_t c = task / static_cast<std::size_t>(cfg.reps);
            const auto rep = static_cast<Index>(task % static_cast<std::size_t>(cfg.reps));
            const Index n = out[c].n;
            tcfg.mc_seed = quantile_seed(cfg.seed, n, rep);
            out[c].reps[static_cast<std::size_t>(rep)] = scn.run(truths[c], n, data_seed(cfg.seed, n, rep), tcfg);
        }
    };
    const unsigned nthreads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(total)));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    }
    return out;
}

inline ExperimentResult run_level_experiment(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    const Scenario scn = Scenario::resolve(cfg);
    ExperimentResult res;
    res.config = cfg;
    res.grid_name = scn.grid_name();
    res.null_value = scn.null_value();
    res.threads_used = resolve_threads(cfg.threads);
    std::vector<std::pair<Index, double>> cells;
    for (Index n : cfg.sample_sizes) cells.emplace_back(n, scn.null_value());
    res.level = run_cells(scn, cfg, cells, res.threads_used);
    res.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

inline ExperimentResult run_power_experiment(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    const Scenario scn = Scenario::resolve(cfg);
    ExperimentResult res;
    res.config = cfg;
    res.grid_name = scn.grid_name();
    res.null_value = scn.null_value();
    res.threads_used = resolve_threads(cfg.threads);
    const auto& grid = cfg.grid.empty() ? scn.default_grid() : cfg.grid;
    std::vector<std::pair<Index, double>> cells;
    for (Index n : cfg.sample_sizes) {
        for (double g : grid) cells.emplace_back(n, g);
    }
    res.power = run_cells(scn, cfg, cells, res.threads_used);
    res.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

// Limit law estimated from a single null path of length n.
inline QuadFormLaw reference_law(const ExperimentConfig& cfg, Index n) {
    const Scenario scn = Scenario::resolve(cfg);
    TestConfig tcfg;
    tcfg.alpha = cfg.alpha;
    tcfg.mc_draws = 1;
    QuadFormLaw law;
    const auto r = scn.run(scn.truth(scn.null_value()), n, substream_seed(cfg.seed, {hash_label("reference"),
                                                                                   static_cast<std::uint64_t>(n)}),
                           tcfg, &law);
    if (r.outcome == Outcome::partial || r.outcome == Outcome::failed || r.outcome == Outcome::not_identifiable ||
        r.outcome == Outcome::disagreement) {
        throw Error(std::string("reference_law: reference run failed (") + to_string(r.outcome) + ")");
    }
    return law;
}

struct EmitOptions {
    bool emit_plots = false;
    int histogram_bins = 40;
    Index reference_draws = 100000;
};

namespace detail {

inline std::string cell_row(const std::string& scenario, const Cell& c, std::uint64_t seed) {
    return scenario + "," + std::to_string(c.n) + "," + io::format_double(c.grid_value) + "," +
           io::format_double(c.frequency()) + "," + io::format_double(c.se()) + "," +
           std::to_string(c.failures()) + "," + std::to_string(seed) + "\n";
}

inline constexpr const char* kCellHeader = "scenario,n,grid_value,frequency,se,failures,seed\n";

}  // namespace detail

// CSV tables, per-n plot series, optional statistic histograms and SVG plots.
// Every CSV is a pure function of the config; runtime data goes to run_info.json.
inline std::vector<std::string> emit_outputs(const ExperimentResult& res, const std::string& dir,
                                             const EmitOptions& opts = {}) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io::IoError("cannot create output directory '" + dir + "': " + ec.message());
    std::vector<std::string> written;
    auto open = [&](const std::string& name) {
        written.push_back((fs::path(dir) / name).string());
        return io::open_out(written.back());
    };
    const auto& cfg = res.config;

    if (!res.level.empty()) {
        auto out = open("levels.csv");
        out << detail::kCellHeader;
        for (const auto& c : res.level) out << detail::cell_row(cfg.scenario, c, cfg.seed);
    }
    std::map<Index, std::vector<const Cell*>> by_n;
    if (!res.power.empty()) {
        auto out = open("power.csv");
        out << detail::kCellHeader;
        for (const auto& c : res.power) {
            out << detail::cell_row(cfg.scenario, c, cfg.seed);
            by_n[c.n].push_back(&c);
        }
        for (const auto& [n, cells] : by_n) {
            auto series = open("power_curve_n" + std::to_string(n) + ".csv");
            series << res.grid_name << ",frequency,se\n";
            for (const Cell* c : cells) {
                series << io::format_double(c->grid_value) << "," << io::format_double(c->frequency()) << ","
                       << io::format_double(c->se()) << "\n";
            }
        }
    }

    struct Histogram {
        Index n;
        std::vector<double> centers, density, reference;
    };
    std::vector<Histogram> histograms;
    if (cfg.keep_statistics && !res.level.empty()) {
        const Index n_max = *std::max_element(cfg.sample_sizes.begin(), cfg.sample_sizes.end());
        const QuadFormSample ref(reference_law(cfg, n_max), opts.reference_draws,
                                 substream_seed(cfg.seed, {hash_label("reference-draws")}));
        for (const auto& c : res.level) {
            {
                auto out = open("statistics_n" + std::to_string(c.n) + ".csv");
                out << "replication,outcome,statistic\n";
                for (std::size_t r = 0; r < c.reps.size(); ++r) {
                    out << r << "," << to_string(c.reps[r].outcome) << "," << io::format_double(c.reps[r].statistic)
                        << "\n";
                }
            }
            std::vector<double> s;
            for (const auto& r : c.reps) {
                if (r.valid()) s.push_back(r.statistic);
            }
            if (s.empty()) continue;
            std::sort(s.begin(), s.end());
            const double top = std::max(s[static_cast<std::size_t>(0.99 * static_cast<double>(s.size() - 1))],
                                        ref.degenerate() ? 0.0 : ref.quantile(0.99).value);
            const int bins = opts.histogram_bins;
            const double width = top > 0.0 ? top / bins : 1.0;
            Histogram h{c.n, {}, std::vector<double>(static_cast<std::size_t>(bins), 0.0),
                        std::vector<double>(static_cast<std::size_t>(bins), 0.0)};
            for (int b = 0; b < bins; ++b) h.centers.push_back((b + 0.5) * width);
            auto bin_into = [&](const std::vector<double>& xs, std::vector<double>& dens) {
                for (double x : xs) {
                    const auto b = static_cast<long>(x / width);
                    if (b >= 0 && b < bins) dens[static_cast<std::size_t>(b)] += 1.0;
                }
                for (double& d : dens) d /= static_cast<double>(xs.size()) * width;
            };
            bin_into(s, h.density);
            bin_into(ref.sorted_draws(), h.reference);
            auto out = open("histogram_n" + std::to_string(c.n) + ".csv");
            out << "bin_center,density,reference_density\n";
            for (int b = 0; b < bins; ++b) {
                const auto i = static_cast<std::size_t>(b);
                out << io::format_double(h.centers[i]) << "," << io::format_double(h.density[i]) << ","
                    << io::format_double(h.reference[i]) << "\n";
            }
            histograms.push_back(std::move(h));
        }
    }

    if (opts.emit_plots) {
        if (!res.level.empty()) {
            svg::Series s{"rejection frequency", {}, {}};
            svg::Series a{"alpha", {}, {}};
            for (const auto& c : res.level) {
                s.x.push_back(static_cast<double>(c.n));
                s.y.push_back(c.frequency());
                a.x.push_back(static_cast<double>(c.n));
                a.y.push_back(cfg.alpha);
            }
            auto out = open("levels.svg");
            svg::chart(out, cfg.scenario + ": estimated level", "n", "rejection frequency", {s, a}, 0.0,
                       std::max(0.2, *std::max_element(s.y.begin(), s.y.end()) * 1.1));
        }
        for (const auto& [n, cells] : by_n) {
            svg::Series s{"n = " + std::to_string(n), {}, {}};
            for (const Cell* c : cells) {
                s.x.push_back(c->grid_value);
                s.y.push_back(c->frequency());
            }
            auto out = open("power_curve_n" + std::to_string(n) + ".svg");
            svg::chart(out, cfg.scenario + ": estimated power", res.grid_name, "rejection frequency", {s}, 0.0, 1.0);
        }
        for (const auto& h : histograms) {
            auto out = open("histogram_n" + std::to_string(h.n) + ".svg");
            svg::chart(out, cfg.scenario + ": statistic, n = " + std::to_string(h.n), "statistic", "density",
                       {{"replications", h.centers, h.density, true}, {"limit law", h.centers, h.reference, false}});
        }
    }

    nlohmann::json info;
    info["scenario"] = cfg.scenario;
    info["config"] = {{"n_states", cfg.n_states}, {"p0", cfg.p0},   {"mu", cfg.mu},
                      {"kind", cfg.kind},         {"model", cfg.model}, {"hypothesis", cfg.hypothesis},
                      {"sample_sizes", cfg.sample_sizes}, {"reps", cfg.reps}, {"alpha", cfg.alpha},
                      {"grid", cfg.grid},         {"seed", cfg.seed}, {"mc_draws", cfg.mc_draws},
                      {"initial", cfg.initial},   {"keep_statistics", cfg.keep_statistics}};
    info["grid_name"] = res.grid_name;
    info["runtime_seconds"] = res.runtime_seconds;
    info["threads"] = res.threads_used;
    auto failures = nlohmann::json::array();
    for (const auto* cells : {&res.level, &res.power}) {
        for (const auto& c : *cells) {
            failures.push_back({{"n", c.n}, {"grid_value", c.grid_value}, {"breakdown", c.failure_breakdown()}});
        }
    }
    info["failures"] = failures;
    auto out = open("run_info.json");
    out << info.dump(2) << "\n";
    return written;
}

}  // namespace rsmc::experiments
