#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rsmc/error.hpp"

namespace rsmc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Singular values below rank_tolerance * sigma_max count as zero.
inline constexpr double kRankTolerance = 1e-8;
// Entries below this are structural zeros of a stochastic matrix.
inline constexpr double kSupportThreshold = 1e-12;

// Column-stacking index map between N x N matrices and R^{N^2}.
// Zero-based: (i, j) -> j * N + i.
struct VecIndex {
    Index n_states;

    constexpr Index operator()(Index i, Index j) const { return j * n_states + i; }
    constexpr Index row_of(Index k) const { return k % n_states; }
    constexpr Index col_of(Index k) const { return k / n_states; }
    constexpr Index size() const { return n_states * n_states; }
};

inline Vector vec(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw DimensionError("vec: matrix is " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()) + ", expected square");
    }
    const VecIndex idx{m.rows()};
    Vector v(idx.size());
    for (Index j = 0; j < m.cols(); ++j) {
        for (Index i = 0; i < m.rows(); ++i) v(idx(i, j)) = m(i, j);
    }
    return v;
}

inline Matrix unvec(const Vector& v) {
    const auto n = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
    if (n * n != v.size()) {
        throw DimensionError("unvec: length " + std::to_string(v.size()) + " is not a square");
    }
    const VecIndex idx{n};
    Matrix m(n, n);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) m(i, j) = v(idx(i, j));
    }
    return m;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

// Delta(Q) with Delta(Q) vec(M) = vec(MQ - QM), i.e. Q^T (x) I - I (x) Q.
// Works for any square Q; estimators feed it non-stochastic matrices.
inline Matrix commutation_operator(const Matrix& q) {
    if (q.rows() != q.cols()) throw DimensionError("commutation_operator: Q must be square");
    const Index n = q.rows();
    const VecIndex idx{n};
    Matrix delta = Matrix::Zero(n * n, n * n);
    // vec(MQ)_{(i,j)} = sum_l M_il Q_lj ; vec(QM)_{(i,j)} = sum_l Q_il M_lj
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            const Index row = idx(i, j);
            for (Index l = 0; l < n; ++l) {
                delta(row, idx(i, l)) += q(l, j);
                delta(row, idx(l, j)) -= q(i, l);
            }
        }
    }
    return delta;
}

// Orthonormal basis of a linear subspace of R^ambient_dim.
class SubspaceBasis {
public:
    SubspaceBasis() = default;

    SubspaceBasis(Matrix columns, double rank_tolerance)
        : columns_(std::move(columns)), rank_tolerance_(rank_tolerance) {
        if (columns_.cols() > 0) {
            const Matrix gram = columns_.transpose() * columns_;
            const double err =
                (gram - Matrix::Identity(columns_.cols(), columns_.cols())).cwiseAbs().maxCoeff();
            if (err > 1e-10) {
                throw Error("SubspaceBasis: columns not orthonormal (|B^T B - I| = " +
                            std::to_string(err) + ")");
            }
        }
    }

    static SubspaceBasis empty(Index ambient_dim, double rank_tolerance = kRankTolerance) {
        return SubspaceBasis(Matrix(ambient_dim, 0), rank_tolerance);
    }

    const Matrix& columns() const { return columns_; }
    Index dim() const { return columns_.cols(); }
    Index ambient_dim() const { return columns_.rows(); }
    double rank_tolerance() const { return rank_tolerance_; }
    bool is_empty() const { return columns_.cols() == 0; }

    Matrix projector() const { return columns_ * columns_.transpose(); }

private:
    Matrix columns_;
    double rank_tolerance_ = kRankTolerance;
};

inline Index rank_from_singular_values(const Vector& singular_values, double tol) {
    if (singular_values.size() == 0) return 0;
    const double smax = singular_values(0);
    if (!(smax > 0.0)) return 0;
    Index r = 0;
    while (r < singular_values.size() && singular_values(r) > tol * smax) ++r;
    return r;
}

inline Index numerical_rank(const Matrix& a, double tol = kRankTolerance) {
    if (a.size() == 0) return 0;
    Eigen::BDCSVD<Matrix> svd(a);
    return rank_from_singular_values(svd.singularValues(), tol);
}

// Orthonormal basis of {x : A x = 0}.
inline SubspaceBasis null_space_basis(const Matrix& a, double tol = kRankTolerance) {
    const Index m = a.cols();
    if (a.rows() == 0) return SubspaceBasis(Matrix::Identity(m, m), tol);
    if (m == 0) return SubspaceBasis::empty(0, tol);
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeFullV);
    const Index r = rank_from_singular_values(svd.singularValues(), tol);
    return SubspaceBasis(svd.matrixV().rightCols(m - r), tol);
}

// Orthonormal basis of Im(B).
inline SubspaceBasis range_basis(const Matrix& b, double tol = kRankTolerance) {
    if (b.cols() == 0 || b.rows() == 0) return SubspaceBasis::empty(b.rows(), tol);
    Eigen::BDCSVD<Matrix> svd(b, Eigen::ComputeThinU);
    const Index r = rank_from_singular_values(svd.singularValues(), tol);
    return SubspaceBasis(svd.matrixU().leftCols(r), tol);
}

inline Matrix column_space_projector(const Matrix& b, double tol = kRankTolerance) {
    return range_basis(b, tol).projector();
}

// Ratio of extreme nonzero singular values; infinity when rank-deficient.
inline double condition_number(const Matrix& a, double tol = kRankTolerance) {
    if (a.size() == 0) return 1.0;
    Eigen::BDCSVD<Matrix> svd(a);
    const Vector& s = svd.singularValues();
    if (rank_from_singular_values(s, tol) < s.size()) return INFINITY;
    return s(0) / s(s.size() - 1);
}

class StochasticMatrix {
public:
    StochasticMatrix() = default;

    explicit StochasticMatrix(Matrix entries) : entries_(std::move(entries)) {
        if (entries_.rows() != entries_.cols()) {
            throw DimensionError("StochasticMatrix: not square");
        }
        for (Index i = 0; i < entries_.rows(); ++i) {
            for (Index j = 0; j < entries_.cols(); ++j) {
                const double e = entries_(i, j);
                if (!(e >= -1e-12 && e <= 1.0 + 1e-12)) {
                    throw NotStochastic("StochasticMatrix: entry (" + std::to_string(i + 1) + "," +
                                        std::to_string(j + 1) + ") = " + std::to_string(e) +
                                        " outside [0,1]");
                }
            }
            const double s = entries_.row(i).sum();
            if (std::abs(s - 1.0) > 1e-10) {
                throw NotStochastic("StochasticMatrix: row " + std::to_string(i + 1) +
                                    " sums to " + std::to_string(s));
            }
        }
    }

    Index n_states() const { return entries_.rows(); }
    const Matrix& matrix() const { return entries_; }
    double operator()(Index i, Index j) const { return entries_(i, j); }

    bool in_support(Index i, Index j) const { return entries_(i, j) > kSupportThreshold; }

    std::vector<std::pair<Index, Index>> support() const {
        std::vector<std::pair<Index, Index>> out;
        for (Index j = 0; j < n_states(); ++j) {
            for (Index i = 0; i < n_states(); ++i) {
                if (in_support(i, j)) out.emplace_back(i, j);
            }
        }
        return out;
    }

private:
    Matrix entries_;
};

// Unique invariant distribution pi^T P = pi^T. Solved directly rather than by
// power iteration so periodic kernels (the reflected walk) are handled.
inline Vector stationary_distribution(const Matrix& p, double tol = 1e-10) {
    const Index n = p.rows();
    if (p.cols() != n) throw DimensionError("stationary_distribution: P must be square");
    Matrix system(n + 1, n);
    system.topRows(n) = (Matrix::Identity(n, n) - p).transpose();
    system.row(n).setOnes();
    Vector rhs = Vector::Zero(n + 1);
    rhs(n) = 1.0;

    Eigen::ColPivHouseholderQR<Matrix> qr(system);
    qr.setThreshold(kRankTolerance);
    if (qr.rank() < n) {
        throw NotIrreducible("stationary_distribution: invariant distribution not unique (rank " +
                             std::to_string(qr.rank()) + " < " + std::to_string(n) + ")");
    }
    Vector pi = qr.solve(rhs);
    const double residual = (p.transpose() * pi - pi).cwiseAbs().maxCoeff();
    if (residual > tol || pi.minCoeff() <= 0.0) {
        throw NotIrreducible("stationary_distribution: no positive invariant distribution");
    }
    return pi / pi.sum();
}

inline Vector stationary_distribution(const StochasticMatrix& p, double tol = 1e-10) {
    return stationary_distribution(p.matrix(), tol);
}

}  // namespace rsmc
