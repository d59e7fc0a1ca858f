#include <gtest/gtest.h>

#include "chfsi/filter.hpp"
#include "chfsi/linalg.hpp"
#include "oracles.hpp"

using namespace chfsi;

TEST(ChebyshevValue, SmallCases) {
    EXPECT_EQ(chebyshev_value(0, 0.37), 1.0);
    EXPECT_EQ(chebyshev_value(0, -12.0), 1.0);
    EXPECT_DOUBLE_EQ(chebyshev_value(2, 0.5), -0.5);
    EXPECT_DOUBLE_EQ(chebyshev_value(3, 2.0), 26.0);
    EXPECT_THROW(chebyshev_value(-1, 0.0), ContractViolation);
}

TEST(ChebyshevValue, MatchesTrigonometricFormInside) {
    for (int m = 0; m <= 60; ++m)
        for (double t = -1.0; t <= 1.0; t += 0.0625) EXPECT_NEAR(chebyshev_value(m, t), oracle::chebyshev(m, t), 1e-12);
}

TEST(ChebyshevValue, MatchesHyperbolicFormOutside) {
    for (int m = 0; m <= 30; ++m)
        for (double t : {-3.0, -1.5, 1.2, 2.5}) {
            const double want = oracle::chebyshev(m, t);
            EXPECT_NEAR(chebyshev_value(m, t), want, 1e-12 * std::abs(want));
        }
}

TEST(PlanDegrees, EqualDegreesSingleBatch) {
    const auto plan = plan_degrees({5, 5, 5});
    EXPECT_EQ(plan.degrees, (std::vector<int>{5, 5, 5}));
    EXPECT_EQ(plan.permutation, (std::vector<Index>{0, 1, 2}));
    EXPECT_EQ(plan.step_widths(), (std::vector<Index>(5, 3)));
    EXPECT_EQ(plan.total(), 15);
}

TEST(PlanDegrees, SortsWithPermutation) {
    const auto plan = plan_degrees({3, 1, 2});
    EXPECT_EQ(plan.degrees, (std::vector<int>{1, 2, 3}));
    // 0-based counterpart of (2, 3, 1)
    EXPECT_EQ(plan.permutation, (std::vector<Index>{1, 2, 0}));
    EXPECT_EQ(plan.step_widths(), (std::vector<Index>{3, 2, 1}));
}

TEST(PlanDegrees, EmptyAndInvalid) {
    const auto plan = plan_degrees({});
    EXPECT_TRUE(plan.degrees.empty());
    EXPECT_TRUE(plan.step_widths().empty());
    EXPECT_THROW(plan_degrees({2, 0}), ContractViolation);
    EXPECT_THROW(plan_degrees({-3}), ContractViolation);
}

TEST(FilterInterval, Validation) {
    EXPECT_THROW(FilterInterval::make(1.0, 1.0, 0.0), ContractViolation);
    EXPECT_THROW(FilterInterval::make(1.0, 3.0, 1.5), ContractViolation);
    const auto iv = FilterInterval::make(1.0, 3.0, 0.0);
    EXPECT_DOUBLE_EQ(iv.center(), 2.0);
    EXPECT_DOUBLE_EQ(iv.halfwidth(), 1.0);
}

TEST(FilterAmplification, Checkpoints) {
    const auto iv = FilterInterval::make(-1.0, 1.0, -2.0);
    for (int m : {1, 4, 17}) EXPECT_DOUBLE_EQ(filter_amplification(-2.0, m, iv), 1.0);
    // C4(t) = 8t^4 - 8t^2 + 1
    const double c4_half = 8 * 0.0625 - 8 * 0.25 + 1;
    const double c4_m2 = 8 * 16.0 - 8 * 4.0 + 1;
    EXPECT_NEAR(filter_amplification(0.5, 4, iv), c4_half / c4_m2, 1e-15);
    EXPECT_NEAR(filter_amplification(0.5, 4, iv), -0.005155, 1e-6);
    for (int m : {2, 4, 6}) EXPECT_LE(std::abs(filter_amplification(0.0, m, iv)), 1.0 / std::abs(oracle::chebyshev(m, -2.0)) + 1e-15);
}

TEST(FilterAmplification, SuppressionGrowsWithDegree) {
    // Pointwise ratios oscillate with the zeros of C_m inside [alpha, beta];
    // the monotone quantity is the ratio against the window's sup norm.
    const auto iv = FilterInterval::make(0.0, 4.0, -1.0);
    std::vector<double> window;
    for (int i = 0; i <= 400; ++i) window.push_back(0.01 * i);
    for (double out : {-0.9, -0.4, -0.05, -1e-3}) {
        double prev = 0.0;
        for (int m = 1; m <= 40; ++m) {
            double sup = 0.0;
            for (double in : window) sup = std::max(sup, std::abs(filter_amplification(in, m, iv)));
            const double ratio = std::abs(filter_amplification(out, m, iv)) / sup;
            EXPECT_GE(ratio, prev * (1 - 1e-12)) << "out=" << out << " m=" << m;
            EXPECT_GT(ratio, 1.0);
            prev = ratio;
        }
    }
}

TEST(ApplyFilter, OneStepByHand) {
    Matrix<double> h = Matrix<double>::Zero(4, 4);
    h.diagonal() << 0, 1, 2, 3;
    Matrix<double> y = Matrix<double>::Zero(4, 1);
    y(0, 0) = 1.0;
    const auto iv = FilterInterval::make(1.0, 3.0, 0.0);
    const Matrix<double> out = apply_filter(h, y, plan_degrees({1}), iv);
    EXPECT_NEAR(out(0, 0), 1.0, 1e-15);
    EXPECT_LE(out.bottomRows(3).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ApplyFilter, EigenbasisScalesByClosedForm) {
    const Index n = 8;
    Matrix<double> h = Matrix<double>::Zero(n, n);
    for (Index i = 0; i < n; ++i) h(i, i) = -1.0 + 0.5 * static_cast<double>(i);
    const auto iv = FilterInterval::make(0.25, 2.6, -1.0);
    for (int m : {3, 8, 15}) {
        const Matrix<double> out = apply_filter(h, Matrix<double>(Matrix<double>::Identity(n, n)), plan_degrees(std::vector<int>(n, m)), iv);
        for (Index i = 0; i < n; ++i) {
            const double lam = h(i, i);
            const double want = oracle::chebyshev(m, (lam - iv.center()) / iv.halfwidth()) /
                                oracle::chebyshev(m, (iv.gamma - iv.center()) / iv.halfwidth());
            EXPECT_NEAR(out(i, i), want, 1e-12 * std::max(1.0, std::abs(want)));
        }
    }
}

TEST(ApplyFilter, MatvecCostIsSumOfDegrees) {
    const Matrix<complex> h = oracle::hermitian<complex>(20, 3);
    const Matrix<complex> y = oracle::gaussian<complex>(20, 5, 4);
    const auto plan = plan_degrees({1, 3, 3, 7, 12});
    const auto iv = FilterInterval::make(0.0, 10.0, -8.0);
    reset_matvec_count();
    apply_filter(h, y, plan, iv);
    EXPECT_EQ(matvec_count(), 26u);
}

TEST(ApplyFilter, MixedDegreesMatchIndividualRuns) {
    const Matrix<complex> h = oracle::hermitian<complex>(25, 5);
    const Matrix<complex> y = oracle::gaussian<complex>(25, 4, 6);
    const auto iv = FilterInterval::make(-2.0, 8.0, -9.0);
    const auto plan = plan_degrees({2, 5, 5, 9});
    const Matrix<complex> batched = apply_filter(h, y, plan, iv);
    for (Index j = 0; j < 4; ++j) {
        const Matrix<complex> single = apply_filter(h, Matrix<complex>(y.col(j)), plan_degrees({plan.degrees[static_cast<std::size_t>(j)]}), iv);
        EXPECT_LE((batched.col(j) - single.col(0)).norm(), 1e-12 * single.norm());
    }
}

TEST(ApplyFilter, DirectionMatchesSpectralOracle) {
    const Index n = 30;
    const Matrix<complex> h = oracle::hermitian<complex>(n, 11);
    const auto eg = oracle::eig(h);
    const auto iv = FilterInterval::make(eg.values(6), eg.values(n - 1) + 0.1, eg.values(0));
    const Matrix<complex> y = oracle::gaussian<complex>(n, 3, 12);
    for (int m : {1, 5, 20, 40}) {
        const Matrix<complex> out = apply_filter(h, y, plan_degrees({m, m, m}), iv);
        for (Index j = 0; j < 3; ++j) {
            Eigen::VectorXcd s = eg.vectors.adjoint() * y.col(j);
            for (Index i = 0; i < n; ++i) s(i) *= oracle::chebyshev(m, iv.mapped(eg.values(i)));
            const Eigen::VectorXcd want = eg.vectors * s;
            const complex scale = want.dot(out.col(j)) / want.squaredNorm();
            EXPECT_LE((out.col(j) - scale * want).norm(), 1e-9 * out.col(j).norm()) << "m=" << m;
        }
    }
}

TEST(ApplyFilter, StaysBoundedUnderScaling) {
    Matrix<double> h = Matrix<double>::Zero(10, 10);
    for (Index i = 0; i < 10; ++i) h(i, i) = -9.0 + 2.0 * static_cast<double>(i);
    const auto iv = FilterInterval::make(0.0, 2.0, -9.0);  // |mapped| <= 10
    const Matrix<double> y = oracle::gaussian<double>(10, 2, 3);
    const Matrix<double> out = apply_filter(h, y, plan_degrees({60, 60}), iv);
    EXPECT_TRUE(out.allFinite());
    EXPECT_LE(out.cwiseAbs().maxCoeff(), 1e12 * y.cwiseAbs().maxCoeff());
}

TEST(ApplyFilter, UnrolledDegreeOneSteps) {
    // One degree-m pass with gamma fixed equals the recurrence evaluated by
    // hand through the unscaled three-term relation, normalised at gamma.
    const Matrix<double> h = oracle::hermitian<double>(12, 8);
    const Matrix<double> y = oracle::gaussian<double>(12, 1, 9);
    const auto iv = FilterInterval::make(-1.0, 6.0, -6.0);
    const int m = 9;
    const double c = iv.center(), e = iv.halfwidth();
    Matrix<double> prev = y, cur = (h * y - c * y) / e;
    for (int i = 1; i < m; ++i) {
        Matrix<double> next = 2.0 * (h * cur - c * cur) / e - prev;
        prev = cur;
        cur = next;
    }
    cur /= oracle::chebyshev(m, iv.mapped(iv.gamma));
    const Matrix<double> got = apply_filter(h, y, plan_degrees({m}), iv);
    EXPECT_LE((got - cur).norm(), 1e-12 * cur.norm());
}

TEST(ApplyFilter, Rejections) {
    const Matrix<double> h = Matrix<double>::Identity(3, 3);
    const Matrix<double> y = Matrix<double>::Ones(3, 2);
    const auto iv = FilterInterval::make(0.0, 2.0, -1.0);
    EXPECT_THROW(apply_filter(h, y, plan_degrees({1}), iv), ContractViolation);
    FilterInterval flat{1.0, 1.0, 0.0};
    EXPECT_THROW(apply_filter(h, y, plan_degrees({1, 1}), flat), ContractViolation);
}

TEST(ApplyFilter, OverflowNamesStep) {
    Matrix<double> h = Matrix<double>::Zero(2, 2);
    h.diagonal() << -1e300, 1.0;
    const auto iv = FilterInterval::make(0.0, 2.0, -0.5);
    try {
        apply_filter(h, Matrix<double>(Matrix<double>::Ones(2, 1)), plan_degrees({30}), iv);
        FAIL() << "expected FilterOverflow";
    } catch (const FilterOverflow& e) {
        EXPECT_GE(e.step(), 1);
        EXPECT_LE(e.step(), 30);
    }
}
