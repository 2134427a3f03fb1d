#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rsmc/gchisq.hpp"

using namespace rsmc;

TEST(LawFromMatrix, RankOneIsChiSquareOne) {
    Matrix w = Matrix::Zero(4, 4);
    w(0, 0) = 1.0;
    const auto law = law_from_matrix(w);
    ASSERT_EQ(law.weights.size(), 1u);
    EXPECT_NEAR(law.weights[0], 1.0, 1e-14);
    EXPECT_EQ(law.dim, 4);
}

TEST(LawFromMatrix, ZeroIsDegenerate) {
    const auto law = law_from_matrix(Matrix::Zero(5, 5));
    EXPECT_TRUE(law.degenerate());
    const QuadFormSample s(law, 100, 1);
    EXPECT_TRUE(s.quantile(0.95).degenerate);
    EXPECT_EQ(s.quantile(0.95).value, 0.0);
}

TEST(LawFromMatrix, IndefiniteRejected) {
    Matrix w = Matrix::Identity(3, 3);
    w(2, 2) = -0.5;
    EXPECT_THROW(law_from_matrix(w), IndefiniteMatrix);
    // tiny negativity is rounding
    w(2, 2) = -1e-9;
    EXPECT_EQ(law_from_matrix(w).weights.size(), 2u);
}

TEST(LawFromMatrix, PropertyTraceAndOrdering) {
    std::mt19937_64 rng(51);
    for (int r = 0; r < 30; ++r) {
        const Matrix a = oracle::random_matrix(8, 3 + r % 5, rng);
        const Matrix w = a * a.transpose();
        const auto law = law_from_matrix(w);
        EXPECT_NEAR(law.trace(), w.trace(), 1e-8 * std::max(1.0, w.trace()));
        EXPECT_EQ(static_cast<int>(law.weights.size()), 3 + r % 5);
        for (std::size_t i = 1; i < law.weights.size(); ++i) EXPECT_GE(law.weights[i - 1], law.weights[i]);
        for (double x : law.weights) EXPECT_GT(x, 0.0);
    }
}

TEST(Quantile, ChiSquareOne) {
    const auto law = law_from_weights({1.0});
    const auto q = quantile(law, 0.95, 100000, 7);
    EXPECT_NEAR(q.value, oracle::kChi2_1_95, 0.06);
    EXPECT_LE(q.lower, q.value);
    EXPECT_GE(q.upper, q.value);
    EXPECT_LT(q.lower, oracle::kChi2_1_95);
    EXPECT_GT(q.upper, oracle::kChi2_1_95);
}

TEST(Quantile, EqualWeightsScaleChiSquare) {
    // chi2_4 95% point 9.487729
    const auto q = quantile(law_from_weights({2.5, 2.5, 2.5, 2.5}), 0.95, 100000, 8);
    EXPECT_NEAR(q.value, 2.5 * 9.487729036781154, 2.5 * 0.15);
}

TEST(Quantile, BruteForceQuadraticForm) {
    Matrix w = Matrix::Zero(4, 4);
    w(0, 0) = 2.0;
    w(1, 1) = 1.0;
    const QuadFormSample s(law_from_matrix(w), 100000, 9);
    // direct eps^T W eps with an unrelated generator
    std::mt19937_64 rng(10);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> direct(100000);
    for (double& d : direct) {
        Vector e(4);
        for (Index i = 0; i < 4; ++i) e(i) = z(rng);
        d = e.dot(w * e);
    }
    std::sort(direct.begin(), direct.end());
    for (double level : {0.5, 0.9, 0.95, 0.99}) {
        const double ref = direct[static_cast<std::size_t>(level * 100000) - 1];
        const auto q = s.quantile(level);
        EXPECT_NEAR(q.value, ref, 3.0 * (q.upper - q.lower) + 1e-3) << level;
    }
    EXPECT_GT(oracle::ks_two_sample(s.sorted_draws(), direct).p_value, 0.001);
}

TEST(Quantile, MonotoneAndScaleEquivariant) {
    const auto law = law_from_weights({3.0, 1.0, 0.5});
    const QuadFormSample s(law, 20000, 11);
    double prev = -1.0;
    for (double level : {0.1, 0.3, 0.5, 0.7, 0.9, 0.95, 0.99}) {
        const double v = s.quantile(level).value;
        EXPECT_GE(v, prev);
        prev = v;
    }
    const QuadFormSample scaled(law_from_weights({6.0, 2.0, 1.0}), 20000, 11);
    for (double level : {0.5, 0.95}) EXPECT_NEAR(scaled.quantile(level).value, 2.0 * s.quantile(level).value, 1e-9);
}

TEST(Quantile, DeterministicUnderSeed) {
    const auto law = law_from_weights({1.0, 0.3});
    EXPECT_EQ(quantile(law, 0.95, 10000, 3).value, quantile(law, 0.95, 10000, 3).value);
    EXPECT_NE(quantile(law, 0.95, 10000, 3).value, quantile(law, 0.95, 10000, 4).value);
    EXPECT_THROW(QuadFormSample(law, 100, 1).quantile(1.0), Error);
}

TEST(PValue, Examples) {
    const auto law = law_from_weights({1.0});
    const QuadFormSample s(law, 100000, 12);
    EXPECT_EQ(s.p_value(0.0), 1.0);
    EXPECT_EQ(s.p_value(1e6), 0.0);
    EXPECT_NEAR(s.p_value(oracle::kChi2_1_95), 0.05, 3.0 * std::sqrt(0.05 * 0.95 / 1e5));
    double prev = 1.0;
    for (double x = 0.0; x < 10.0; x += 0.25) {
        const double p = s.p_value(x);
        EXPECT_LE(p, prev);
        prev = p;
    }
}

TEST(PValue, ConsistentWithQuantile) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.05, 3.0);
    for (int r = 0; r < 20; ++r) {
        std::vector<double> w(static_cast<std::size_t>(1 + r % 6));
        for (double& x : w) x = u(rng);
        const QuadFormSample s(law_from_weights(w), 50000, 100 + r);
        for (double alpha : {0.01, 0.05, 0.1}) {
            const double p = s.p_value(s.quantile(1.0 - alpha).value);
            EXPECT_NEAR(p, alpha, 3.0 * std::sqrt(alpha * (1 - alpha) / 50000) + 1.0 / 50000);
        }
    }
}
