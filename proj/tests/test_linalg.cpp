#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rsmc/estimation.hpp"
#include "rsmc/linalg.hpp"
#include "rsmc/models.hpp"
#include "rsmc/sampling.hpp"
#include "rsmc/specs.hpp"

using namespace rsmc;

namespace {

double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST(VecIndex, BijectionAndColumnStacking) {
    const VecIndex idx{4};
    std::vector<int> seen(16, 0);
    for (Index i = 0; i < 4; ++i) {
        for (Index j = 0; j < 4; ++j) {
            const Index k = idx(i, j);
            ++seen[static_cast<std::size_t>(k)];
            EXPECT_EQ(idx.row_of(k), i);
            EXPECT_EQ(idx.col_of(k), j);
        }
    }
    for (int c : seen) EXPECT_EQ(c, 1);
    EXPECT_EQ(idx.size(), 16);
}

TEST(Vec, TwoByTwoOrdering) {
    Matrix m(2, 2);
    m << 1, 3, 2, 4;  // rows (a, c), (b, d)
    const Vector v = vec(m);
    EXPECT_EQ(v(0), 1);
    EXPECT_EQ(v(1), 2);
    EXPECT_EQ(v(2), 3);
    EXPECT_EQ(v(3), 4);
}

TEST(Vec, RoundTripRandom) {
    std::mt19937_64 rng(1);
    for (int r = 0; r < 20; ++r) {
        const Matrix m = oracle::random_matrix(5, 5, rng);
        EXPECT_EQ(unvec(vec(m)), m);
        EXPECT_EQ(vec(m), oracle::vec(m));
    }
}

TEST(Vec, UnvecRejectsNonSquareLength) {
    EXPECT_THROW(unvec(Vector::Zero(5)), DimensionError);
}

TEST(Vec, ReflectedWalkHas18Nonzeros) {
    const Vector p = vec(specs::reflected_walk(10).matrix());
    EXPECT_EQ((p.array() != 0.0).count(), 18);
}

TEST(Kron, IdentityAndDefiningIdentity) {
    EXPECT_EQ(kron(Matrix::Identity(2, 2), Matrix::Identity(2, 2)), Matrix::Identity(4, 4));
    std::mt19937_64 rng(2);
    for (int r = 0; r < 10; ++r) {
        const Matrix a = oracle::random_matrix(3, 3, rng), x = oracle::random_matrix(3, 3, rng),
                     b = oracle::random_matrix(3, 3, rng);
        EXPECT_LT((vec(a * x * b) - kron(b.transpose(), a) * vec(x)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Kron, RowSumsOperator) {
    std::mt19937_64 rng(3);
    const Matrix p = oracle::random_stochastic(6, rng);
    const Matrix a = kron(Matrix::Ones(1, 6), Matrix::Identity(6, 6));
    EXPECT_LT((a * vec(p) - p.rowwise().sum()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(CommutationOperator, MatchesHandAssembledOracle) {
    std::mt19937_64 rng(4);
    for (int r = 0; r < 10; ++r) {
        const Matrix q = oracle::random_stochastic(3, rng);
        const Matrix m = oracle::random_matrix(3, 3, rng);
        const Matrix d = commutation_operator(q);
        EXPECT_LT(max_abs(d - oracle::delta(q)), 1e-14);
        EXPECT_LT((d * vec(m) - vec(m * q - q * m)).cwiseAbs().maxCoeff(), 1e-13);
    }
}

TEST(CommutationOperator, IdentityGivesZero) {
    EXPECT_EQ(max_abs(commutation_operator(Matrix::Identity(4, 4))), 0.0);
}

TEST(CommutationOperator, PowersAndPolynomialsInKernel) {
    std::mt19937_64 rng(5);
    for (int r = 0; r < 10; ++r) {
        const Matrix q = oracle::random_stochastic(5, rng);
        const Matrix d = commutation_operator(q);
        EXPECT_LT((d * vec(q)).norm(), 1e-12);
        EXPECT_LT((d * vec(q * q)).norm(), 1e-12);
        // Q = G_mu(P) commutes with P
        const Matrix p = oracle::random_stochastic(5, rng);
        const Matrix g = g_mu(p, GapDistribution::poisson(1.3));
        EXPECT_LT((commutation_operator(g) * vec(p)).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(CommutationOperator, Linear) {
    std::mt19937_64 rng(6);
    const Matrix q = oracle::random_stochastic(4, rng);
    const Matrix d = commutation_operator(q);
    const Vector u = oracle::random_matrix(16, 1, rng), v = oracle::random_matrix(16, 1, rng);
    EXPECT_LT((d * (2.5 * u - 0.7 * v) - (2.5 * (d * u) - 0.7 * (d * v))).norm(), 1e-12);
}

TEST(NullSpace, RowSumConstraints) {
    const Matrix a = kron(Matrix::Ones(1, 3), Matrix::Identity(3, 3));
    const SubspaceBasis b = null_space_basis(a);
    EXPECT_EQ(b.dim(), 6);
    EXPECT_LT(max_abs(a * b.columns()), 1e-12);
    EXPECT_TRUE(null_space_basis(Matrix::Identity(5, 5)).is_empty());
}

TEST(NullSpace, Test1SupportKernelIsEight) {
    const Index n = 10;
    const auto p0 = specs::reflected_walk(n);
    const auto st = stack({builders::row_stochastic(n), builders::support_model(n, p0.support())}, n * n);
    EXPECT_EQ(st.a.rows(), 92);
    const SubspaceBasis b = null_space_basis(st.a);
    EXPECT_EQ(b.dim(), 8);
    EXPECT_EQ(numerical_rank(st.a), 92);
}

TEST(NullSpace, PropertyResidualAndOrthonormality) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> dim(1, 12);
    for (int r = 0; r < 50; ++r) {
        const int rows = dim(rng), rank = std::min(rows, dim(rng)), cols = 12;
        const Matrix a = oracle::random_matrix(rows, rank, rng) * oracle::random_matrix(rank, cols, rng);
        const SubspaceBasis b = null_space_basis(a);
        EXPECT_EQ(b.dim(), cols - rank);
        if (b.dim() == 0) continue;
        const double an = a.norm();
        for (Index c = 0; c < b.dim(); ++c) EXPECT_LE((a * b.columns().col(c)).norm(), 1e-8 * an);
        EXPECT_LT(max_abs(b.columns().transpose() * b.columns() - Matrix::Identity(b.dim(), b.dim())), 1e-10);
    }
}

TEST(SubspaceBasis, RejectsNonOrthonormal) {
    Matrix m(3, 2);
    m << 1, 1, 0, 1, 0, 0;
    EXPECT_THROW(SubspaceBasis(m, kRankTolerance), Error);
}

TEST(Projector, Examples) {
    EXPECT_LT(max_abs(column_space_projector(Matrix::Identity(4, 4)) - Matrix::Identity(4, 4)), 1e-12);
    Matrix e1 = Matrix::Zero(4, 1);
    e1(0) = 1.0;
    EXPECT_LT(max_abs(column_space_projector(e1) - e1 * e1.transpose()), 1e-12);
}

TEST(Projector, PropertyIdempotentSymmetricFixesRange) {
    std::mt19937_64 rng(8);
    for (int r = 0; r < 30; ++r) {
        const Matrix b = oracle::random_matrix(10, 4, rng);
        const Matrix pi = column_space_projector(b);
        EXPECT_LT(max_abs(pi * pi - pi), 1e-8);
        EXPECT_LT(max_abs(pi - pi.transpose()), 1e-8);
        EXPECT_LT(max_abs(pi * b - b), 1e-8 * max_abs(b));
    }
}

TEST(Projector, BasisInvariance) {
    std::mt19937_64 rng(9);
    for (int r = 0; r < 20; ++r) {
        const Matrix b = oracle::random_matrix(8, 3, rng);
        const Matrix mix = oracle::random_matrix(3, 3, rng);  // invertible almost surely
        EXPECT_LT(max_abs(column_space_projector(b) - column_space_projector(b * mix)), 1e-8);
        // kernel of the same matrix through an independent SVD
        const Matrix a = oracle::random_matrix(5, 8, rng);
        const Matrix k = oracle::kernel(a);
        EXPECT_LT(max_abs(null_space_basis(a).projector() - k * k.transpose()), 1e-8);
    }
}

TEST(Projector, RankDeficientInput) {
    std::mt19937_64 rng(10);
    const Matrix b = oracle::random_matrix(9, 2, rng) * oracle::random_matrix(2, 5, rng);
    EXPECT_EQ(range_basis(b).dim(), 2);
    const Matrix pi = column_space_projector(b);
    EXPECT_NEAR(pi.trace(), 2.0, 1e-10);
}

TEST(StochasticMatrixType, Validation) {
    Matrix bad(3, 3);
    bad << 0.5, 0.5, 0, 0, 1, 0, 0.2, 0.2, 0.5;
    EXPECT_THROW(StochasticMatrix{bad}, NotStochastic);
    Matrix neg(2, 2);
    neg << 1.1, -0.1, 0.5, 0.5;
    EXPECT_THROW(StochasticMatrix{neg}, NotStochastic);
    EXPECT_THROW(StochasticMatrix{Matrix::Ones(2, 3)}, DimensionError);
    Matrix ok(2, 2);
    ok << 1e-13, 1.0 - 1e-13, 0.5, 0.5;
    const StochasticMatrix s(ok);
    EXPECT_FALSE(s.in_support(0, 0));
    EXPECT_EQ(s.support().size(), 3u);
}

TEST(StochasticMatrixType, ReflectedWalkRows) {
    const Matrix p = specs::reflected_walk(3).matrix();
    Matrix expect(3, 3);
    expect << 0, 1, 0, 0.5, 0, 0.5, 0, 1, 0;
    EXPECT_EQ(p, expect);
    EXPECT_THROW(specs::reflected_walk(2), Error);
}

TEST(Stationary, DoublyStochasticIsUniform) {
    Matrix p(3, 3);
    p << 0.2, 0.3, 0.5, 0.5, 0.2, 0.3, 0.3, 0.5, 0.2;
    const Vector pi = stationary_distribution(p);
    for (Index i = 0; i < 3; ++i) EXPECT_NEAR(pi(i), 1.0 / 3.0, 1e-12);
}

TEST(Stationary, ReflectedWalk) {
    const Vector pi = stationary_distribution(specs::reflected_walk(10));
    for (Index i = 0; i < 10; ++i) EXPECT_NEAR(pi(i), (i == 0 || i == 9 ? 1.0 : 2.0) / 18.0, 1e-12);
}

TEST(Stationary, PropertyInvariance) {
    std::mt19937_64 rng(11);
    for (int r = 0; r < 30; ++r) {
        const Matrix p = oracle::random_stochastic(7, rng, 0.4);
        const Vector pi = stationary_distribution(p);
        EXPECT_NEAR(pi.sum(), 1.0, 1e-12);
        EXPECT_GT(pi.minCoeff(), 0.0);
        EXPECT_LT((p.transpose() * pi - pi).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Stationary, ReducibleChainRejected) {
    Matrix p = Matrix::Identity(3, 3);
    EXPECT_THROW(stationary_distribution(p), NotIrreducible);
}

TEST(Stationary, LongPathFrequencies) {
    const auto p0 = specs::reflected_walk(10);
    const auto path = simulate_observed(p0, GapDistribution::poisson(1.0), 1000000, 12);
    const auto est = estimate_pi_Q(path);
    const Vector pi = stationary_distribution(p0);
    EXPECT_LT((est.pi_hat - pi).cwiseAbs().maxCoeff(), 1e-2);
}
