#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "rsmc/estimation.hpp"
#include "rsmc/gchisq.hpp"
#include "rsmc/models.hpp"
#include "rsmc/sampling.hpp"

namespace rsmc {

struct TestConfig {
    double alpha = 0.05;
    Index mc_draws = 50000;
    std::uint64_t mc_seed = 0x5eed;
    double rank_tol = kRankTolerance;
    double eig_tol = 1e-8;
    // lambda_max(W_hat) below this makes the report abstain
    double degeneracy_tol = 1e-10;
    double form_tol = 1e-6;
    // A2 rank-stability probes of Delta(Q_hat) Phi; 0 disables.
    int a2_perturbations = 0;
    std::uint64_t a2_seed = 0xa2;
};

enum class Decision { accept, reject, unusable };

inline const char* to_string(Decision d) {
    switch (d) {
        case Decision::accept: return "accept";
        case Decision::reject: return "reject";
        case Decision::unusable: return "unusable";
    }
    return "?";
}

struct StatisticS {
    double value = 0.0;  // projector route, the reference
    double least_squares = 0.0;
    double inf_m0 = 0.0;  // min over M0 of ||Delta m||^2 (unscaled)
    double inf_m = 0.0;
    Matrix proj_f;
    Index rank_e = 0;
    Index rank_e0 = 0;
};

// S = n (min_{M0} ||D m||^2 - min_{M} ||D m||^2), D a commutation operator. Both
// the difference of affine least-squares minima and n ||(Pi_E - Pi_E0) D p0||^2
// are computed; disagreement beyond tolerance throws FormDisagreement.
inline StatisticS statistic_S_from_operator(const NestedBases& bases, const Vector& anchor,
                                            const Matrix& delta, Index n,
                                            double tol = kRankTolerance, double form_tol = 1e-6) {
    const double scale = static_cast<double>(n);
    const Vector dp0 = delta * anchor;
    const Matrix dphi = delta * bases.phi.columns();
    const Matrix dphi0 = delta * bases.phi0.columns();

    auto residual_sq = [&](const Matrix& a) {
        if (a.cols() == 0) return dp0.squaredNorm();
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
        cod.setThreshold(tol);
        const Vector gamma = cod.solve(-dp0);
        return (dp0 + a * gamma).squaredNorm();
    };

    StatisticS out;
    out.inf_m0 = residual_sq(dphi0);
    out.inf_m = residual_sq(dphi);
    out.least_squares = scale * (out.inf_m0 - out.inf_m);

    const SubspaceBasis e = range_basis(dphi, tol);
    const SubspaceBasis e0 = range_basis(dphi0, tol);
    out.rank_e = e.dim();
    out.rank_e0 = e0.dim();
    out.proj_f = e.projector() - e0.projector();
    out.value = scale * (out.proj_f * dp0).squaredNorm();

    const double gap = std::abs(out.value - out.least_squares);
    const double allowed = form_tol * std::max(std::abs(out.value), std::abs(out.least_squares)) +
                           1e-10 * scale * dp0.squaredNorm();
    if (gap > allowed) {
        throw FormDisagreement("statistic_S: projector form " + std::to_string(out.value) +
                               " vs least-squares form " + std::to_string(out.least_squares) +
                               " (rank E = " + std::to_string(out.rank_e) +
                               ", rank E0 = " + std::to_string(out.rank_e0) + ")");
    }
    if (out.least_squares < 0.0) {
        if (out.least_squares < -1e-10 - 1e-10 * scale * dp0.squaredNorm()) {
            throw FormDisagreement("statistic_S: negative least-squares difference " +
                                   std::to_string(out.least_squares));
        }
        out.least_squares = 0.0;
    }
    return out;
}

inline StatisticS statistic_S(const NestedBases& bases, const Vector& anchor, const Matrix& q_hat,
                              Index n, double tol = kRankTolerance, double form_tol = 1e-6) {
    return statistic_S_from_operator(bases, anchor, commutation_operator(q_hat), n, tol, form_tol);
}

// W_hat = Pi_F D(P_hat) Sigma_hat D(P_hat)^T Pi_F, symmetrized.
inline Matrix w_hat(const Matrix& proj_f, const Matrix& p_hat, const Matrix& sigma) {
    const Matrix left = proj_f * commutation_operator(p_hat);
    const Matrix w = left * sigma * left.transpose();
    return 0.5 * (w + w.transpose());
}

// Data-independent part of the affine test, built once per (model, hypothesis).
struct PTestPlan {
    AffineModel model;
    HypothesisSpec hypothesis;
    NestedBases bases;
    Vector anchor;  // in M0

    static PTestPlan make(AffineModel model, HypothesisSpec hyp, double tol = kRankTolerance) {
        PTestPlan plan{std::move(model), std::move(hyp), {}, {}};
        plan.bases = nested_bases(plan.model, plan.hypothesis, tol);
        plan.anchor = anchor_in_H0(plan.model, plan.hypothesis, tol);
        return plan;
    }
};

struct PTestDiagnostics {
    Index dim_model = 0;    // d
    Index dim_null = 0;     // d - k
    Index rank_e = 0;       // rank Delta(Q_hat) Phi
    Index rank_e0 = 0;      // rank Delta(Q_hat) Phi0
    double condition_e0 = 1.0;
    double lambda_max_w = 0.0;
    bool degenerate = false;
    // A2 probes: highest rank seen among perturbed Q_hat with the same support
    Index a2_max_rank = 0;
    bool a2_stable = true;
    std::vector<int> high_variance_states;  // one-based
    Vector anchor;
    Vector p_hat;
};

struct TestReportP {
    double statistic = 0.0;
    double statistic_least_squares = 0.0;
    Matrix w_hat;
    QuadFormLaw law;
    QuantileEstimate quantile;
    double p_value = 1.0;
    Decision decision = Decision::unusable;
    double alpha = 0.05;
    Index n = 0;
    PTestDiagnostics diagnostics;
};

struct MuTestDiagnostics {
    Index dim_model = 0;
    Index rank = 0;
    double condition = 1.0;
    double lambda_max_cov = 0.0;
    bool degenerate = false;
    std::vector<int> high_variance_states;
    Vector p_hat;
};

struct TestReportMu {
    double statistic = 0.0;
    Matrix covariance;
    QuadFormLaw law;
    QuantileEstimate quantile;
    double p_value = 1.0;
    Decision decision = Decision::unusable;
    double alpha = 0.05;
    Index n = 0;
    std::string mu0;
    MuTestDiagnostics diagnostics;
};

namespace detail {

inline std::vector<int> flagged_states(const EmpiricalEstimates& est) {
    std::vector<int> out;
    for (std::size_t i = 0; i < est.high_variance.size(); ++i) {
        if (est.high_variance[i]) out.push_back(static_cast<int>(i) + 1);
    }
    return out;
}

// Max rank of Delta(Q') Phi over row-stochastic Q' near Q_hat on its support.
inline Index a2_probe(const Matrix& q_hat, const Matrix& phi, int probes, std::uint64_t seed,
                      double tol) {
    Engine rng = make_engine(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Index best = 0;
    for (int r = 0; r < probes; ++r) {
        Matrix q = q_hat;
        for (Index i = 0; i < q.rows(); ++i) {
            for (Index j = 0; j < q.cols(); ++j) {
                if (q(i, j) > 0.0) q(i, j) *= 1.0 + 1e-6 * u(rng);
            }
            q.row(i) /= q.row(i).sum();
        }
        best = std::max(best, numerical_rank(commutation_operator(q) * phi, tol));
    }
    return best;
}

inline void decide(const QuadFormLaw& law, double statistic, const TestConfig& cfg,
                   QuantileEstimate& quant, double& pval, Decision& decision) {
    if (law.degenerate()) {
        quant = QuantileEstimate{0.0, 0.0, 0.0, true};
        pval = std::numeric_limits<double>::quiet_NaN();
        decision = Decision::unusable;
        return;
    }
    const QuadFormSample draws(law, cfg.mc_draws, cfg.mc_seed);
    quant = draws.quantile(1.0 - cfg.alpha);
    pval = draws.p_value(statistic);
    decision = statistic > quant.value ? Decision::reject : Decision::accept;
}

}  // namespace detail

inline TestReportP test_P(const PTestPlan& plan, const EmpiricalEstimates& est, const TestConfig& cfg = {}) {
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw Error("test_P: alpha must lie in (0,1)");
    require_complete(est, "test_P");
    TestReportP rep;
    rep.alpha = cfg.alpha;
    rep.n = est.n;
    auto& diag = rep.diagnostics;
    diag.dim_model = plan.bases.phi.dim();
    diag.dim_null = plan.bases.phi0.dim();
    diag.anchor = plan.anchor;
    diag.high_variance_states = detail::flagged_states(est);

    const CovarianceEstimate sigma = estimate_sigma(est);
    const Matrix delta = commutation_operator(est.q_hat);
    const StatisticS s = statistic_S_from_operator(plan.bases, plan.anchor, delta, est.n,
                                                   cfg.rank_tol, cfg.form_tol);
    rep.statistic = s.value;
    rep.statistic_least_squares = s.least_squares;
    diag.rank_e = s.rank_e;
    diag.rank_e0 = s.rank_e0;

    // identifiability under H0
    const PEstimate p_hat = estimate_p(plan.bases.phi0, plan.anchor, est.q_hat, cfg.rank_tol);
    diag.condition_e0 = p_hat.condition;
    diag.p_hat = p_hat.p;

    if (cfg.a2_perturbations > 0) {
        diag.a2_max_rank = detail::a2_probe(est.q_hat, plan.bases.phi.columns(),
                                            cfg.a2_perturbations, cfg.a2_seed, cfg.rank_tol);
        diag.a2_stable = diag.a2_max_rank <= s.rank_e;
    } else {
        diag.a2_max_rank = s.rank_e;
    }

    rep.w_hat = w_hat(s.proj_f, unvec(p_hat.p), sigma.sigma);
    rep.law = law_from_matrix(rep.w_hat, cfg.eig_tol, cfg.degeneracy_tol);
    diag.lambda_max_w = rep.law.lambda_max;
    diag.degenerate = rep.law.degenerate();
    detail::decide(rep.law, rep.statistic, cfg, rep.quantile, rep.p_value, rep.decision);
    return rep;
}

inline TestReportP test_P(const AffineModel& model, const HypothesisSpec& hyp, const PathSample& path,
                          const TestConfig& cfg = {}) {
    return test_P(PTestPlan::make(model, hyp, cfg.rank_tol), estimate_pi_Q(path), cfg);
}

// Goodness of fit of mu0 through T = n ||q_hat - g_mu0(P_hat)||^2.
inline TestReportMu test_mu(const AffineModel& model, const GapDistribution& mu0,
                            const EmpiricalEstimates& est, const TestConfig& cfg = {}) {
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw Error("test_mu: alpha must lie in (0,1)");
    if (!std::isfinite(mu0.mean())) throw Error("test_mu: mu0 must have a finite mean");
    require_complete(est, "test_mu");
    TestReportMu rep;
    rep.alpha = cfg.alpha;
    rep.n = est.n;
    rep.mu0 = mu0.describe();
    auto& diag = rep.diagnostics;
    diag.dim_model = model.dim();
    diag.high_variance_states = detail::flagged_states(est);

    const PEstimate p_hat = estimate_p(model.basis(), model.anchor(), est.q_hat, cfg.rank_tol);
    diag.rank = p_hat.rank;
    diag.condition = p_hat.condition;
    diag.p_hat = p_hat.p;
    const Matrix p_mat = unvec(p_hat.p);

    const Vector resid = vec(est.q_hat) - vec(g_mu(p_mat, mu0));
    rep.statistic = static_cast<double>(est.n) * resid.squaredNorm();

    const CovarianceEstimate sigma = estimate_sigma(est);
    const Matrix gamma = gamma_matrix(p_mat, mu0);
    const Matrix b = b_matrix(model.basis(), p_mat, est.q_hat, cfg.rank_tol);
    const Index m = gamma.rows();
    const Matrix lin = Matrix::Identity(m, m) - gamma * b;
    rep.covariance = lin * sigma.sigma * lin.transpose();
    rep.covariance = 0.5 * (rep.covariance + rep.covariance.transpose()).eval();
    rep.law = law_from_matrix(rep.covariance, cfg.eig_tol, cfg.degeneracy_tol);
    diag.lambda_max_cov = rep.law.lambda_max;
    diag.degenerate = rep.law.degenerate();
    detail::decide(rep.law, rep.statistic, cfg, rep.quantile, rep.p_value, rep.decision);
    return rep;
}

inline TestReportMu test_mu(const AffineModel& model, const GapDistribution& mu0, const PathSample& path,
                            const TestConfig& cfg = {}) {
    return test_mu(model, mu0, estimate_pi_Q(path), cfg);
}

}  // namespace rsmc
