#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rsmc/models.hpp"
#include "rsmc/specs.hpp"

using namespace rsmc;

namespace {

double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

const std::vector<std::pair<Index, Index>>& p0_support() {
    static const auto s = specs::reflected_walk(10).support();
    return s;
}

}  // namespace

TEST(Builders, ConstraintCounts) {
    EXPECT_EQ(builders::row_stochastic(10).a.rows(), 10);
    EXPECT_EQ(builders::symmetric_model(10).a.rows(), 45);
    EXPECT_EQ(builders::zero_diagonal(10).a.rows(), 10);
    EXPECT_EQ(builders::support_model(10, p0_support()).a.rows(), 82);
    EXPECT_EQ(builders::doubly_stochastic(5).a.rows(), 4);
    EXPECT_EQ(builders::triangular(4, true).a.rows(), 6);
    EXPECT_EQ(builders::fixed_entries(4, {{0, 1, 0.3}, {2, 2, 0.0}}).a.rows(), 2);
}

TEST(Builders, RangeChecks) {
    EXPECT_THROW(builders::support_model(3, {{0, 3}}), Error);
    EXPECT_THROW(builders::fixed_entries(3, {{0, 0, 1.5}}), Error);
}

TEST(Models, FullStochasticDimension) {
    const auto m = AffineModel::compose(10, {});
    EXPECT_EQ(m.dim(), 90);
    EXPECT_EQ(m.constraint_rank(), 10);
}

TEST(Models, SupportModelDimension) {
    const auto m = AffineModel::compose(10, {builders::support_model(10, p0_support())});
    EXPECT_EQ(m.dim(), 8);
    EXPECT_TRUE(m.contains(vec(specs::reflected_walk(10).matrix())));
}

TEST(Models, Infeasible) {
    EXPECT_THROW(AffineModel::compose(3, {builders::fixed_entries(3, {{0, 0, 0.0}}),
                                          builders::fixed_entries(3, {{0, 0, 1.0}})}),
                 InfeasibleModel);
}

TEST(Models, RedundantRowsToleratedInModels) {
    const auto once = AffineModel::compose(4, {builders::zero_diagonal(4)});
    const auto twice = AffineModel::compose(4, {builders::zero_diagonal(4), builders::zero_diagonal(4)});
    EXPECT_EQ(once.dim(), twice.dim());
    EXPECT_LT(max_abs(once.basis().projector() - twice.basis().projector()), 1e-10);
}

TEST(Models, AnchorIsMinNorm) {
    // full stochastic model: min-norm solution of row sums is the uniform matrix
    const auto m = AffineModel::compose(4, {});
    EXPECT_LT((m.anchor() - Vector::Constant(16, 0.25)).cwiseAbs().maxCoeff(), 1e-12);
}

// Every builder, alone and combined: anchor + Phi x satisfies every declared row.
TEST(Models, PropertyMembersSatisfyConstraints) {
    std::mt19937_64 rng(21);
    const Index n = 5;
    const std::vector<ConstraintBlock> pool = {
        builders::symmetric_model(n), builders::doubly_stochastic(n), builders::zero_diagonal(n),
        builders::triangular(n, true), builders::triangular(n, false),
        builders::fixed_entries(n, {{0, 1, 0.2}}),
        builders::support_model(n, {{0, 0}, {0, 1}, {1, 0}, {1, 2}, {2, 1}, {2, 3}, {3, 4}, {3, 2}, {4, 3}, {4, 0}})};
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (int r = 0; r < 60; ++r) {
        std::vector<ConstraintBlock> blocks{pool[pick(rng)]};
        if (r % 2) blocks.push_back(pool[pick(rng)]);
        AffineModel m;
        try {
            m = AffineModel::compose(n, blocks);
        } catch (const InfeasibleModel&) {
            continue;
        }
        const auto all = stack([&] {
            auto b = blocks;
            b.push_back(builders::row_stochastic(n));
            return b;
        }(), n * n);
        EXPECT_LT((all.a * m.anchor() - all.b).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_LT(max_abs(all.a * m.basis().columns()), 1e-8);
        EXPECT_EQ(m.dim(), n * n - numerical_rank(all.a));
        if (m.dim() == 0) continue;
        const Vector x = m.anchor() + m.basis().columns() * oracle::random_matrix(m.dim(), 1, rng);
        EXPECT_LT((all.a * x - all.b).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(Hypothesis, RedundantRejected) {
    const auto m = AffineModel::compose(4, {builders::zero_diagonal(4)});
    try {
        HypothesisSpec::make(m, {builders::fixed_entries(4, {{1, 1, 0.0}})});
        FAIL() << "expected IllPosedHypothesis";
    } catch (const IllPosedHypothesis& e) {
        EXPECT_EQ(e.rank_deficit(), 1);
    }
}

TEST(Hypothesis, IncompatibleRejected) {
    // a full-row-rank stacked system is always solvable, so a contradiction shows up as a rank deficit
    const auto m = AffineModel::compose(4, {builders::fixed_entries(4, {{0, 0, 0.5}})});
    EXPECT_THROW(HypothesisSpec::make(m, {builders::fixed_entries(4, {{0, 0, 0.7}})}), IllPosedHypothesis);
    EXPECT_NO_THROW(HypothesisSpec::make(m, {builders::fixed_entries(4, {{0, 1, 0.2}})}));
    EXPECT_THROW(HypothesisSpec::point(m, vec(Matrix::Constant(4, 4, 0.25))), IllPosedHypothesis);
}

TEST(NestedBases, PointHypothesisInSupportModel) {
    const auto m = AffineModel::compose(10, {builders::support_model(10, p0_support())});
    const auto h = HypothesisSpec::point(m, vec(specs::reflected_walk(10).matrix()));
    EXPECT_EQ(h.k(), 8);
    const auto nb = nested_bases(m, h);
    EXPECT_EQ(nb.phi0.dim(), 0);
    EXPECT_EQ(nb.phi.dim(), 8);
    EXPECT_LT((anchor_in_H0(m, h) - vec(specs::reflected_walk(10).matrix())).norm(), 1e-10);
}

TEST(NestedBases, Test1SupportHypothesis) {
    const auto m = AffineModel::compose(10, {});
    const auto h = HypothesisSpec::make(m, {builders::support_model(10, p0_support())});
    EXPECT_EQ(h.k(), 82);
    const auto nb = nested_bases(m, h);
    EXPECT_EQ(nb.phi0.dim(), 8);
    EXPECT_EQ(nb.phi.dim(), 90);
    EXPECT_LT(max_abs(nb.phi.columns().leftCols(8) - nb.phi0.columns()), 0.0 + 1e-15);
    const Vector anchor = anchor_in_H0(m, h);
    const auto p0 = specs::reflected_walk(10);
    const VecIndex idx{10};
    for (Index i = 0; i < 10; ++i) {
        for (Index j = 0; j < 10; ++j) {
            if (!p0.in_support(i, j)) EXPECT_NEAR(anchor(idx(i, j)), 0.0, 1e-12);
        }
        double s = 0.0;
        for (Index j = 0; j < 10; ++j) s += anchor(idx(i, j));
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(NestedBases, KZero) {
    const auto m = AffineModel::compose(4, {builders::symmetric_model(4)});
    const auto h = HypothesisSpec::make(m, Matrix(0, 16), Vector(0));
    const auto nb = nested_bases(m, h);
    EXPECT_EQ(nb.phi0.dim(), nb.phi.dim());
    EXPECT_LT(max_abs(nb.phi0.projector() - nb.phi.projector()), 1e-14);
}

TEST(NestedBases, PropertyNestingAndDimensions) {
    std::mt19937_64 rng(22);
    const Index n = 4;
    for (int r = 0; r < 40; ++r) {
        const auto m = AffineModel::compose(n, r % 2 ? std::vector<ConstraintBlock>{builders::zero_diagonal(n)}
                                                     : std::vector<ConstraintBlock>{});
        std::uniform_int_distribution<Index> kd(1, m.dim() - 1);
        const Index k = kd(rng);
        // random rows inside ker(A) directions, so never redundant with A
        const Matrix a0 = oracle::random_matrix(k, m.dim(), rng) * m.basis().columns().transpose();
        const Vector b0 = a0 * m.anchor();
        const auto h = HypothesisSpec::make(m, a0, b0);
        const auto nb = nested_bases(m, h);
        EXPECT_EQ(nb.phi0.dim(), m.dim() - k);
        EXPECT_EQ(nb.phi.dim(), m.dim());
        EXPECT_LT(max_abs(m.a() * nb.phi.columns()), 1e-8);
        EXPECT_LT(max_abs(a0 * nb.phi0.columns()), 1e-8);
        const Matrix p = nb.phi.projector();
        EXPECT_LT(max_abs(p * nb.phi0.columns() - nb.phi0.columns()), 1e-8);
        const Vector anchor = anchor_in_H0(m, h);
        EXPECT_TRUE(m.contains(anchor));
        EXPECT_LT((a0 * anchor - b0).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(Specs, ParseModelAndHypothesis) {
    const auto m = specs::parse_model("support-p0", 10);
    EXPECT_EQ(m.dim(), 8);
    EXPECT_EQ(specs::parse_hypothesis("point-p0", m).k(), 8);
    const auto full = specs::parse_model("stochastic", 10);
    EXPECT_EQ(specs::parse_hypothesis("support-p0", full).k(), 82);
    EXPECT_EQ(specs::parse_model("symmetric,zero-diagonal", 4).dim(), 2);
    EXPECT_THROW(specs::parse_model("nonsense", 4), Error);
    EXPECT_THROW(specs::parse_hypothesis("point-p0,symmetric", m), Error);
}
