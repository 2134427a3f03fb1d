#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rsmc/linalg.hpp"

namespace rsmc {

// Rows of affine constraints A vec(P) = b.
struct ConstraintBlock {
    Matrix a;
    Vector b;
    std::string label;

    Index rows() const { return a.rows(); }
};

inline ConstraintBlock stack(const std::vector<ConstraintBlock>& blocks, Index ambient_dim) {
    Index rows = 0;
    for (const auto& blk : blocks) {
        if (blk.a.cols() != ambient_dim || blk.b.size() != blk.a.rows()) {
            throw DimensionError("stack: block '" + blk.label + "' has inconsistent dimensions");
        }
        rows += blk.rows();
    }
    ConstraintBlock out{Matrix(rows, ambient_dim), Vector(rows), "stacked"};
    Index at = 0;
    for (const auto& blk : blocks) {
        out.a.middleRows(at, blk.rows()) = blk.a;
        out.b.segment(at, blk.rows()) = blk.b;
        at += blk.rows();
    }
    return out;
}

namespace builders {

// (1^T (x) I) vec(P) = 1
inline ConstraintBlock row_stochastic(Index n) {
    const VecIndex idx{n};
    ConstraintBlock blk{Matrix::Zero(n, idx.size()), Vector::Ones(n), "row_stochastic"};
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) blk.a(i, idx(i, j)) = 1.0;
    }
    return blk;
}

// P_ij = 0 for every (i, j) outside the allowed support.
inline ConstraintBlock support_model(Index n, const std::vector<std::pair<Index, Index>>& allowed) {
    const VecIndex idx{n};
    std::vector<bool> keep(idx.size(), false);
    for (auto [i, j] : allowed) {
        if (i < 0 || j < 0 || i >= n || j >= n) throw DimensionError("support_model: index out of range");
        keep[idx(i, j)] = true;
    }
    Index zeros = 0;
    for (bool k : keep) zeros += k ? 0 : 1;
    ConstraintBlock blk{Matrix::Zero(zeros, idx.size()), Vector::Zero(zeros), "support"};
    Index r = 0;
    for (Index k = 0; k < idx.size(); ++k) {
        if (!keep[k]) blk.a(r++, k) = 1.0;
    }
    return blk;
}

// P_ij - P_ji = 0, i < j.
inline ConstraintBlock symmetric_model(Index n) {
    const VecIndex idx{n};
    const Index rows = n * (n - 1) / 2;
    ConstraintBlock blk{Matrix::Zero(rows, idx.size()), Vector::Zero(rows), "symmetric"};
    Index r = 0;
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            blk.a(r, idx(i, j)) = 1.0;
            blk.a(r, idx(j, i)) = -1.0;
            ++r;
        }
    }
    return blk;
}

// Column sums of the first N - 1 columns; the last one follows from row sums.
inline ConstraintBlock doubly_stochastic(Index n) {
    const VecIndex idx{n};
    ConstraintBlock blk{Matrix::Zero(n - 1, idx.size()), Vector::Ones(n - 1), "doubly_stochastic"};
    for (Index j = 0; j + 1 < n; ++j) {
        for (Index i = 0; i < n; ++i) blk.a(j, idx(i, j)) = 1.0;
    }
    return blk;
}

inline ConstraintBlock zero_diagonal(Index n) {
    const VecIndex idx{n};
    ConstraintBlock blk{Matrix::Zero(n, idx.size()), Vector::Zero(n), "zero_diagonal"};
    for (Index i = 0; i < n; ++i) blk.a(i, idx(i, i)) = 1.0;
    return blk;
}

// Upper triangular: P_ij = 0 for i > j. Lower when upper == false.
inline ConstraintBlock triangular(Index n, bool upper = true) {
    const VecIndex idx{n};
    const Index rows = n * (n - 1) / 2;
    ConstraintBlock blk{Matrix::Zero(rows, idx.size()), Vector::Zero(rows),
                        upper ? "upper_triangular" : "lower_triangular"};
    Index r = 0;
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            if ((upper && i > j) || (!upper && i < j)) blk.a(r++, idx(i, j)) = 1.0;
        }
    }
    return blk;
}

struct FixedEntry {
    Index row;
    Index col;
    double value;
};

inline ConstraintBlock fixed_entries(Index n, const std::vector<FixedEntry>& entries) {
    const VecIndex idx{n};
    const auto rows = static_cast<Index>(entries.size());
    ConstraintBlock blk{Matrix::Zero(rows, idx.size()), Vector(rows), "fixed_entries"};
    for (Index r = 0; r < rows; ++r) {
        const auto& e = entries[static_cast<std::size_t>(r)];
        if (e.row < 0 || e.col < 0 || e.row >= n || e.col >= n) {
            throw DimensionError("fixed_entries: index out of range");
        }
        if (e.value < 0.0 || e.value > 1.0) throw Error("fixed_entries: value outside [0,1]");
        blk.a(r, idx(e.row, e.col)) = 1.0;
        blk.b(r) = e.value;
    }
    return blk;
}

}  // namespace builders

namespace detail {

struct ReducedSystem {
    Matrix a;
    Vector b;
    Vector min_norm_solution;
    Matrix kernel;
    Index rank;
    double residual;
};

// SVD reduction of A m = b: full-row-rank rows U_r^T A, kernel, min-norm solution.
inline ReducedSystem reduce(const Matrix& a, const Vector& b, double tol) {
    const Index m = a.cols();
    if (a.rows() == 0) {
        return {Matrix(0, m), Vector(0), Vector::Zero(m), Matrix::Identity(m, m), 0, 0.0};
    }
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Index r = rank_from_singular_values(svd.singularValues(), tol);
    const Matrix ur = svd.matrixU().leftCols(r);
    const Matrix vr = svd.matrixV().leftCols(r);
    const Vector sr = svd.singularValues().head(r);
    Vector x = vr * (ur.transpose() * b).cwiseQuotient(sr);
    ReducedSystem out;
    out.a = ur.transpose() * a;
    out.b = ur.transpose() * b;
    out.min_norm_solution = x;
    out.kernel = svd.matrixV().rightCols(m - r);
    out.rank = r;
    out.residual = (a * x - b).norm();
    return out;
}

}  // namespace detail

// M = { m in R^{N^2} : A m = b }, stored with A at full row rank.
class AffineModel {
public:
    AffineModel() = default;

    // A reduced to full row rank, anchor = min-norm solution, basis = ker(A).
    static AffineModel build(Index n_states, const Matrix& a, const Vector& b,
                             double tol = kRankTolerance) {
        const VecIndex idx{n_states};
        if (a.cols() != idx.size() || b.size() != a.rows()) {
            throw DimensionError("AffineModel::build: A must be r x N^2 with matching b");
        }
        auto red = detail::reduce(a, b, tol);
        if (red.residual > 1e-8 * std::max(1.0, b.norm())) {
            throw InfeasibleModel("AffineModel::build: constraints are inconsistent (residual " +
                                  std::to_string(red.residual) + ")");
        }
        AffineModel m;
        m.n_states_ = n_states;
        m.a_ = std::move(red.a);
        m.b_ = std::move(red.b);
        m.anchor_ = std::move(red.min_norm_solution);
        m.basis_ = SubspaceBasis(std::move(red.kernel), tol);
        return m;
    }

    // Stacks the row-stochastic block in front of the given blocks.
    static AffineModel compose(Index n_states, const std::vector<ConstraintBlock>& blocks,
                               double tol = kRankTolerance) {
        std::vector<ConstraintBlock> all;
        all.reserve(blocks.size() + 1);
        all.push_back(builders::row_stochastic(n_states));
        all.insert(all.end(), blocks.begin(), blocks.end());
        const auto st = stack(all, n_states * n_states);
        return build(n_states, st.a, st.b, tol);
    }

    Index n_states() const { return n_states_; }
    const Matrix& a() const { return a_; }
    const Vector& b() const { return b_; }
    const Vector& anchor() const { return anchor_; }
    const SubspaceBasis& basis() const { return basis_; }
    Index dim() const { return basis_.dim(); }
    Index constraint_rank() const { return a_.rows(); }

    double residual(const Vector& m) const { return (a_ * m - b_).cwiseAbs().maxCoeff(); }
    bool contains(const Vector& m, double tol = 1e-8) const {
        return a_.rows() == 0 || residual(m) <= tol;
    }

private:
    Index n_states_ = 0;
    Matrix a_;
    Vector b_;
    Vector anchor_;
    SubspaceBasis basis_;
};

inline AffineModel build_model(Index n_states, const Matrix& a, const Vector& b,
                               double tol = kRankTolerance) {
    return AffineModel::build(n_states, a, b, tol);
}

// H0: A0 p = b0 with k non-redundant rows relative to a parent model.
class HypothesisSpec {
public:
    HypothesisSpec() = default;

    static HypothesisSpec make(const AffineModel& model, Matrix a0, Vector b0,
                               double tol = kRankTolerance) {
        const Index m = model.n_states() * model.n_states();
        if (a0.cols() != m || b0.size() != a0.rows()) {
            throw DimensionError("HypothesisSpec: A0 must be k x N^2 with matching b0");
        }
        HypothesisSpec h;
        h.a0_ = std::move(a0);
        h.b0_ = std::move(b0);
        if (h.k() == 0) return h;

        Matrix stacked(model.a().rows() + h.k(), m);
        stacked << model.a(), h.a0_;
        Vector rhs(stacked.rows());
        rhs << model.b(), h.b0_;
        const auto red = detail::reduce(stacked, rhs, tol);
        const Index expected = model.constraint_rank() + h.k();
        if (red.rank != expected) {
            throw IllPosedHypothesis("HypothesisSpec: constraints are redundant (rank " +
                                         std::to_string(red.rank) + ", expected " +
                                         std::to_string(expected) + ")",
                                     static_cast<long>(expected - red.rank));
        }
        if (red.residual > 1e-8 * std::max(1.0, rhs.norm())) {
            throw IllPosedHypothesis("HypothesisSpec: incompatible with the model (residual " +
                                         std::to_string(red.residual) + ")",
                                     0);
        }
        return h;
    }

    static HypothesisSpec make(const AffineModel& model, const std::vector<ConstraintBlock>& blocks,
                               double tol = kRankTolerance) {
        const auto st = stack(blocks, model.n_states() * model.n_states());
        return make(model, st.a, st.b, tol);
    }

    // Pins every free coordinate of the model: P = given point.
    static HypothesisSpec point(const AffineModel& model, const Vector& p,
                                double tol = kRankTolerance) {
        if (!model.contains(p)) throw IllPosedHypothesis("point hypothesis outside the model", 0);
        const Matrix& phi = model.basis().columns();
        return make(model, phi.transpose(), phi.transpose() * p, tol);
    }

    const Matrix& a0() const { return a0_; }
    const Vector& b0() const { return b0_; }
    Index k() const { return a0_.rows(); }

private:
    Matrix a0_;
    Vector b0_;
};

// Phi0 spans ker(A) cap ker(A0); Phi = [Phi0 | complement] spans ker(A).
struct NestedBases {
    SubspaceBasis phi0;
    SubspaceBasis phi;

    Index d() const { return phi.dim(); }
    Index k() const { return phi.dim() - phi0.dim(); }
};

inline NestedBases nested_bases(const AffineModel& model, const HypothesisSpec& hyp,
                                double tol = kRankTolerance) {
    const Index m = model.n_states() * model.n_states();
    const Index d = model.dim();
    if (hyp.k() == 0) return {model.basis(), model.basis()};

    Matrix stacked(model.a().rows() + hyp.k(), m);
    stacked << model.a(), hyp.a0();
    SubspaceBasis phi0 = null_space_basis(stacked, tol);
    if (phi0.dim() != d - hyp.k()) {
        throw IllPosedHypothesis("nested_bases: dim(ker A cap ker A0) = " +
                                     std::to_string(phi0.dim()) + ", expected " +
                                     std::to_string(d - hyp.k()),
                                 static_cast<long>(phi0.dim() - (d - hyp.k())));
    }
    Matrix ext(model.a().rows() + phi0.dim(), m);
    ext << model.a(), phi0.columns().transpose();
    const SubspaceBasis complement = null_space_basis(ext, tol);
    if (complement.dim() != hyp.k()) {
        throw IllPosedHypothesis("nested_bases: complement has dimension " +
                                     std::to_string(complement.dim()),
                                 static_cast<long>(complement.dim() - hyp.k()));
    }
    Matrix full(m, d);
    full << phi0.columns(), complement.columns();
    return {std::move(phi0), SubspaceBasis(std::move(full), tol)};
}

// Min-norm member of M0.
inline Vector anchor_in_H0(const AffineModel& model, const HypothesisSpec& hyp,
                           double tol = kRankTolerance) {
    if (hyp.k() == 0) return model.anchor();
    const Index m = model.n_states() * model.n_states();
    Matrix stacked(model.a().rows() + hyp.k(), m);
    stacked << model.a(), hyp.a0();
    Vector rhs(stacked.rows());
    rhs << model.b(), hyp.b0();
    const auto red = detail::reduce(stacked, rhs, tol);
    if (red.residual > 1e-8 * std::max(1.0, rhs.norm())) {
        throw InfeasibleModel("anchor_in_H0: M0 is empty");
    }
    return red.min_norm_solution;
}

}  // namespace rsmc
