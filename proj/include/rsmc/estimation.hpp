#pragma once

#include <span>
#include <string>
#include <vector>

#include "rsmc/linalg.hpp"
#include "rsmc/sampling.hpp"

namespace rsmc {

struct EmpiricalEstimates {
    Vector pi_hat;
    // Rows of states never left within the first n - 1 observations are zero
    // and flagged undefined.
    Matrix q_hat;
    Matrix counts;
    Index n = 0;
    std::vector<bool> row_defined;
    // States whose row rests on a single transition.
    std::vector<bool> high_variance;

    Index n_states() const { return q_hat.rows(); }
    bool partial() const {
        for (bool d : row_defined) {
            if (!d) return true;
        }
        return false;
    }
};

inline EmpiricalEstimates estimate_pi_Q(std::span<const int> observed, Index n_states) {
    const auto n = static_cast<Index>(observed.size());
    if (n < 2) throw Error("estimate_pi_Q: need at least two observations");
    EmpiricalEstimates est;
    est.n = n;
    est.pi_hat = Vector::Zero(n_states);
    est.counts = Matrix::Zero(n_states, n_states);
    for (const int s : observed) {
        if (s < 0 || s >= n_states) {
            throw DimensionError("estimate_pi_Q: state " + std::to_string(s + 1) + " out of range");
        }
    }
    for (Index k = 0; k < n; ++k) {
        const int s = observed[static_cast<std::size_t>(k)];
        est.pi_hat(s) += 1.0;
        if (k + 1 < n) est.counts(s, observed[static_cast<std::size_t>(k + 1)]) += 1.0;
    }
    est.pi_hat /= static_cast<double>(n);
    est.q_hat = Matrix::Zero(n_states, n_states);
    est.row_defined.assign(static_cast<std::size_t>(n_states), false);
    est.high_variance.assign(static_cast<std::size_t>(n_states), false);
    for (Index i = 0; i < n_states; ++i) {
        const double visits = est.counts.row(i).sum();
        if (visits > 0.0) {
            est.q_hat.row(i) = est.counts.row(i) / visits;
            est.row_defined[static_cast<std::size_t>(i)] = true;
            est.high_variance[static_cast<std::size_t>(i)] = visits < 2.0;
        }
    }
    return est;
}

inline EmpiricalEstimates estimate_pi_Q(const PathSample& path) {
    return estimate_pi_Q(path.observed, path.n_states);
}

inline void require_complete(const EmpiricalEstimates& est, const char* where) {
    if (!est.partial()) return;
    std::string missing;
    for (std::size_t i = 0; i < est.row_defined.size(); ++i) {
        if (!est.row_defined[i]) missing += (missing.empty() ? "" : ",") + std::to_string(i + 1);
    }
    throw PartialEstimate(std::string(where) + ": no observed transition out of state(s) " + missing);
}

// Plug-in asymptotic covariance of sqrt(n) vec(Q_hat): block diagonal over rows i,
// each block the multinomial covariance of row i scaled by 1 / pi_i.
struct CovarianceEstimate {
    Matrix sigma;
};

inline CovarianceEstimate estimate_sigma(const EmpiricalEstimates& est) {
    require_complete(est, "estimate_sigma");
    const Index n = est.n_states();
    const VecIndex idx{n};
    CovarianceEstimate out{Matrix::Zero(idx.size(), idx.size())};
    for (Index i = 0; i < n; ++i) {
        const double inv_pi = 1.0 / est.pi_hat(i);
        for (Index j = 0; j < n; ++j) {
            const double qij = est.q_hat(i, j);
            for (Index l = 0; l < n; ++l) {
                const double qil = est.q_hat(i, l);
                out.sigma(idx(i, j), idx(i, l)) = (j == l ? qij * (1.0 - qij) : -qij * qil) * inv_pi;
            }
        }
    }
    return out;
}

struct PEstimate {
    Vector p;
    Index rank = 0;
    // of Delta(Q_hat) * basis; the Gram matrix condition number is its square
    double condition = 1.0;
};

namespace detail {

inline void check_identifiable(const Eigen::BDCSVD<Matrix>& svd, Index columns, double tol,
                               const char* where, Index& rank, double& cond) {
    const Vector& s = svd.singularValues();
    rank = rank_from_singular_values(s, tol);
    if (rank < columns) {
        throw NotIdentifiable(std::string(where) + ": Delta(Q_hat) * basis has rank " +
                                  std::to_string(rank) + " < " + std::to_string(columns),
                              static_cast<long>(rank), static_cast<long>(columns));
    }
    cond = columns == 0 ? 1.0 : s(0) / s(columns - 1);
}

}  // namespace detail

// p_hat = p0 + Phi gamma_hat, gamma_hat = argmin || Delta(Q_hat) (p0 + Phi gamma) ||.
inline PEstimate estimate_p(const SubspaceBasis& basis, const Vector& anchor, const Matrix& q_hat,
                            double tol = kRankTolerance) {
    PEstimate out;
    if (basis.is_empty()) {
        out.p = anchor;
        return out;
    }
    const Matrix delta = commutation_operator(q_hat);
    const Matrix dphi = delta * basis.columns();
    Eigen::BDCSVD<Matrix> svd(dphi, Eigen::ComputeThinU | Eigen::ComputeThinV);
    detail::check_identifiable(svd, basis.dim(), tol, "estimate_p", out.rank, out.condition);
    const Vector gamma = svd.solve(-(delta * anchor));
    out.p = anchor + basis.columns() * gamma;
    return out;
}

// The closed form (I - Phi (Phi^T D^T D Phi)^{-1} Phi^T D^T D) p0 through a
// Cholesky solve of the Gram system. Second route for cross-checking.
inline Vector estimate_p_normal_equations(const SubspaceBasis& basis, const Vector& anchor,
                                          const Matrix& q_hat) {
    if (basis.is_empty()) return anchor;
    const Matrix delta = commutation_operator(q_hat);
    const Matrix dtd = delta.transpose() * delta;
    const Matrix& phi = basis.columns();
    const Matrix gram = phi.transpose() * dtd * phi;
    Eigen::LDLT<Matrix> ldlt(gram);
    return anchor - phi * ldlt.solve(phi.transpose() * dtd * anchor);
}

// B_hat = Phi [Phi^T D(Q)^T D(Q) Phi]^{-1} Phi^T D(Q)^T D(P).
inline Matrix b_matrix(const SubspaceBasis& basis, const Matrix& p_hat, const Matrix& q_hat,
                       double tol = kRankTolerance) {
    const Index m = q_hat.rows() * q_hat.rows();
    if (basis.is_empty()) return Matrix::Zero(m, m);
    const Matrix dq = commutation_operator(q_hat);
    const Matrix dphi = dq * basis.columns();
    Eigen::BDCSVD<Matrix> svd(dphi, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Index rank = 0;
    double cond = 1.0;
    detail::check_identifiable(svd, basis.dim(), tol, "b_matrix", rank, cond);
    // (dphi^T dphi)^{-1} dphi^T = pinv(dphi)
    return basis.columns() * svd.solve(commutation_operator(p_hat));
}

}  // namespace rsmc
