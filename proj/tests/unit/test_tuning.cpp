#include <cmath>

#include <gtest/gtest.h>

#include "criteria.hpp"
#include "cwlssvm/data.hpp"
#include "cwlssvm/error.hpp"
#include "cwlssvm/tuning.hpp"

using namespace cwlssvm;
using namespace cwlssvm::testing;

TEST(HeldoutScore, RegressionAndClassification) {
    Vector a(4), y(4);
    a << 1, 2, 3, 4;
    y << 1, 1, 1, 1;
    EXPECT_DOUBLE_EQ(heldout_score(Task::Regression, a, y), (0 + 1 + 4 + 9) / 4.0);
    a << 0.5, -0.1, 0.0, -2;
    y << 1, 1, -1, -1;
    // sign(0) counts as +1
    EXPECT_DOUBLE_EQ(heldout_score(Task::Classification, a, y), 0.5);
    EXPECT_THROW(heldout_score(Task::Regression, a, Vector::Zero(2)), InvalidArgument);
}

TEST(CvTuneLssvm, MatchesFoldByFoldRetraining) {
    const auto s = generate_vapnik(40, 3, 1.0, 4);
    const auto plan = CvPlan::make(40, 5, 11);
    const std::vector<double> sigmas{1.0, 2.0}, gammas{1.0, 30.0};
    const auto t = cv_tune_lssvm(s.data, plan, KernelSpec::uniform_rbf(4, 1.0), sigmas, gammas);
    ASSERT_EQ(t.grid.size(), 4u);
    for (std::size_t g = 0; g < t.grid.size(); ++g) {
        const auto spec = KernelSpec::uniform_rbf(4, t.grid[g].sigma);
        double total = 0.0;
        for (Index f = 0; f < 5; ++f) {
            const auto tr = s.data.subset(plan.train_indices(f));
            const auto te = s.data.subset(plan.test_indices(f));
            const auto m = train_regressor(tr.x, tr.y, spec, t.grid[g].gamma);
            total += (predict(m, te.x) - te.y).squaredNorm() / static_cast<double>(te.points());
        }
        EXPECT_NEAR(t.cv.table[g].score, total / 5.0, 1e-9 * (1 + total));
    }
    EXPECT_EQ(t.chosen, t.cv.best);
    EXPECT_EQ(t.params.gamma, t.grid[t.chosen].gamma);
    EXPECT_EQ(t.model.alpha.size(), 40);
}

TEST(CvTuneLssvm, ClassificationScoresMisclassification) {
    Rng rng(4);
    Dataset ds{uniform_matrix(rng, 2, 30, -1, 1), Vector::Zero(30)};
    ds.task = Task::Classification;
    for (Index k = 0; k < 30; ++k) {
        ds.y[k] = ds.x(0, k) >= 0 ? 1.0 : -1.0;
    }
    const auto t = cv_tune_lssvm(ds, CvPlan::make(30, 3, 1), KernelSpec::uniform_linear(2), {1.0}, {1.0, 10.0});
    EXPECT_EQ(t.model.task, Task::Classification);
    for (const auto& e : t.cv.table) {
        EXPECT_GE(e.score, 0.0);
        EXPECT_LE(e.score, 1.0);
    }
}

TEST(CvTuneL1, OneStandardErrorPrefersSmallXi) {
    const auto s = generate_vapnik(60, 5, 1.0, 6);
    const auto plan = CvPlan::make(60, 5, 2);
    const std::vector<double> xis{0.5, 1.0, 2.0};
    const auto tmin = cv_tune_l1(s.data, plan, KernelSpec::uniform_rbf(6, 1.0), {2.0}, xis, {10, 100},
                                 SelectionRule::Minimum);
    const auto t1se = cv_tune_l1(s.data, plan, KernelSpec::uniform_rbf(6, 1.0), {2.0}, xis, {10, 100});
    EXPECT_EQ(tmin.chosen, tmin.cv.best);
    EXPECT_LE(t1se.grid[t1se.chosen].xi, tmin.grid[tmin.chosen].xi);
    const auto& best = t1se.cv.table[t1se.cv.best];
    EXPECT_LE(t1se.cv.table[t1se.chosen].score, best.score + best.se + 1e-12);
    ASSERT_TRUE(t1se.fit.has_value());
    EXPECT_EQ(t1se.model.retained, t1se.fit->sparsity.retained);
}

TEST(CvTuneStp, GridLayoutAndRefit) {
    const auto s = generate_vapnik(40, 6, 1.0, 5);
    const auto t = cv_tune_stp(s.data, CvPlan::make(40, 4, 3), KernelSpec::uniform_rbf(5, 1.0), {2.0},
                               {5.0, 20.0}, {0.3});
    EXPECT_EQ(t.grid.size(), 2u);
    EXPECT_EQ(t.params.a, 0.3);
    ASSERT_TRUE(t.fit.has_value());
    EXPECT_EQ(t.model.retained, t.fit->sparsity.retained);
}

TEST(FullRbf, OneInputEqualsComponentwise) {
    const auto s = generate_vapnik(30, 9, 1.0, 4);
    const Matrix x = s.data.x.topRows(1);
    const auto full = train_full_rbf(x, s.data.y, 0.7, 20.0);
    const auto cw = train_regressor(x, s.data.y, KernelSpec::uniform_rbf(1, 0.7), 20.0);
    const Matrix xt = generate_vapnik(10, 10, 1.0, 4).data.x.topRows(1);
    EXPECT_LE((full.predict(xt) - predict(cw, xt)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FullRbf, CvPicksFromGrid) {
    const auto s = generate_vapnik(30, 10, 1.0, 4);
    const auto t = cv_tune_full_rbf(s.data, CvPlan::make(30, 3, 1), {0.5, 2.0}, {1.0, 100.0});
    EXPECT_EQ(t.grid.size(), 4u);
    EXPECT_EQ(t.params.sigma, t.grid[t.cv.best].sigma);
    EXPECT_EQ(t.model.sigma, t.params.sigma);
}

TEST(Tuning, RejectsEmptyGrids) {
    const auto s = generate_vapnik(20, 11, 1.0, 4);
    const auto plan = CvPlan::make(20, 2, 1);
    EXPECT_THROW(cv_tune_lssvm(s.data, plan, KernelSpec::uniform_rbf(4, 1), {}, {1.0}), InvalidArgument);
    EXPECT_THROW(cv_tune_lssvm(s.data, plan, KernelSpec::uniform_rbf(4, 1), {1.0}, {}), InvalidArgument);
    EXPECT_THROW(cv_tune_l1(s.data, plan, KernelSpec::uniform_rbf(4, 1), {1.0}, {-1.0}, {1.0}), InvalidArgument);
}
