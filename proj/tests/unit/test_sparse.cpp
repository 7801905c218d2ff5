#include <cmath>

#include <gtest/gtest.h>

#include "criteria.hpp"
#include "cwlssvm/data.hpp"
#include "cwlssvm/error.hpp"
#include "cwlssvm/sparse.hpp"

using namespace cwlssvm;
using namespace cwlssvm::testing;

namespace {

void expect_constraints(const ComponentGrams& g, const Vector& y, const ComponentFit& fit, double tol) {
    EXPECT_LE(std::abs(fit.alpha.sum()), tol * (1 + fit.alpha.lpNorm<1>()));
    const Vector e = y - g.train_sum * fit.alpha - Vector::Constant(y.size(), fit.bias);
    EXPECT_LE((e - fit.residual).cwiseAbs().maxCoeff(), tol);
    for (std::size_t d = 0; d < g.train.size(); ++d) {
        EXPECT_LE((g.train[d] * fit.alpha - fit.outputs.train[d]).cwiseAbs().maxCoeff(), tol);
    }
}

} // namespace

TEST(AregSubstrate, ZeroCIsTikhonovWithUnitGamma) {
    Rng rng(1);
    const Matrix x = uniform_matrix(rng, 3, 15);
    const Vector y = normal_vector(rng, 15);
    const KernelSpec spec = KernelSpec::uniform_rbf(3, 0.8);
    const auto ar = solve_areg_substrate(build_grams(x, std::nullopt, spec).train_sum, y, Vector::Zero(15));
    const auto m = train_regressor(x, y, spec, 1.0);
    EXPECT_LE((ar.alpha - m.alpha).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(ar.bias, m.bias, 1e-12);
    EXPECT_LE((ar.residual - ar.alpha).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(AregSubstrate, EmulatesTikhonovAndEtaModels) {
    const auto a = audit_emulation(20, 808);
    EXPECT_LE(a.areg, 1e-10);
    EXPECT_LE(a.eta, 1e-8);
}

TEST(AregSubstrate, ZeroData) {
    const auto ar = solve_areg_substrate(Matrix::Identity(5, 5), Vector::Zero(5), Vector::Zero(5));
    EXPECT_EQ(ar.alpha.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(ar.bias, 0.0);
}

TEST(FitL1, ZeroTargets) {
    Rng rng(2);
    const auto g = build_grams(uniform_matrix(rng, 3, 10), std::nullopt, KernelSpec::uniform_rbf(3, 1));
    const auto fit = fit_l1_components(g, Vector::Zero(10), 1.0);
    EXPECT_LE(fit.alpha.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(std::abs(fit.bias), 1e-12);
    EXPECT_TRUE(fit.sparsity.retained.empty());
    EXPECT_LE(fit.objective, 1e-12);
}

TEST(FitL1, LargeXiFitsNoiselessData) {
    const auto s = generate_vapnik(40, 3, 0.0, 4);
    const auto g = build_grams(s.data.x, std::nullopt, KernelSpec::uniform_rbf(4, 1.0));
    const auto fit = fit_l1_components(g, s.data.y, 1e8);
    EXPECT_LE(fit.residual.cwiseAbs().maxCoeff(), 1e-3);
    EXPECT_EQ(fit.sparsity.retained.size(), 4u);
    expect_constraints(g, s.data.y, fit, 1e-8);
}

TEST(FitL1, ConstraintsHoldOnRandomInstances) {
    Rng rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        const Index n = 5 + static_cast<Index>(rng.below(25));
        const Index d = 1 + static_cast<Index>(rng.below(5));
        const auto g = build_grams(uniform_matrix(rng, d, n), std::nullopt, random_spec(rng, d));
        const Vector y = normal_vector(rng, n);
        const auto fit = fit_l1_components(g, y, log_uniform(rng, 0.1, 10));
        expect_constraints(g, y, fit, 1e-8);
    }
}

TEST(FitL1, OracleEquivalenceOnTinyInstances) {
    OracleConfig cfg;
    cfg.iterations = 200000;
    const auto a = audit_oracle(6, 4242, cfg);
    EXPECT_EQ(a.instances, 6);
    EXPECT_LE(a.worst_gap, 1e-4);
}

TEST(FitL1, RecoversVapnikStructure) {
    const auto s = generate_vapnik(100, 7);
    const auto g = build_grams(s.data.x, std::nullopt, KernelSpec::uniform_rbf(10, 2.0));
    const auto fit = fit_l1_components(g, s.data.y, 1.0);
    EXPECT_EQ(fit.sparsity.retained, (std::vector<Index>{0, 1, 2, 3}));
}

TEST(FitL1, RetainedCountRoughlyMonotoneInXi) {
    const auto s = generate_vapnik(100, 12);
    const auto sys = ComponentSystem::from_grams(build_grams(s.data.x, std::nullopt, KernelSpec::uniform_rbf(10, 2.0)),
                                                 s.data.y);
    std::vector<std::size_t> counts;
    for (double xi : {0.1, 0.3, 1.0, 3.0, 10.0}) {
        counts.push_back(fit_l1_components(sys, xi).sparsity.retained.size());
    }
    int inversions = 0;
    for (std::size_t i = 1; i < counts.size(); ++i) {
        inversions += counts[i] < counts[i - 1];
    }
    EXPECT_LE(inversions, 1);
    EXPECT_LE(counts.front(), counts.back());
}

TEST(FitL1, RejectsBadXi) {
    Rng rng(4);
    const auto g = build_grams(uniform_matrix(rng, 2, 6), std::nullopt, KernelSpec::uniform_rbf(2, 1));
    EXPECT_THROW(fit_l1_components(g, Vector::Zero(6), 0.0), InvalidArgument);
    EXPECT_THROW(fit_l1_components(g, Vector::Zero(5), 1.0), InvalidArgument);
}

TEST(StpPenalty, Examples) {
    EXPECT_EQ(stp_penalty(0.0, 2.0, 3.7), 0.0);
    EXPECT_NEAR(stp_penalty(1.0, 1.0, 3.7), 3.7 / 4.7, 1e-15);
    EXPECT_NEAR(stp_penalty(1e12, 2.5, 3.7), 2.5, 1e-10);
    EXPECT_LT(stp_penalty(1e12, 2.5, 3.7), 2.5);
}

TEST(StpPenalty, BoundsAndMonotone) {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double lambda = log_uniform(rng, 1e-3, 1e3);
        const double a = log_uniform(rng, 1e-2, 1e2);
        const double v = log_uniform(rng, 1e-6, 1e6);
        const double l = stp_penalty(v, lambda, a);
        EXPECT_GE(l, 0.0);
        EXPECT_LT(l, lambda);
        EXPECT_GT(stp_penalty(v * 1.01, lambda, a), l);
    }
}

TEST(FitStp, ObjectiveNotAboveWarmStart) {
    Rng rng(6);
    for (int rep = 0; rep < 5; ++rep) {
        const Index n = 10 + static_cast<Index>(rng.below(20));
        const auto g = build_grams(uniform_matrix(rng, 3, n), std::nullopt, KernelSpec::uniform_rbf(3, 1.0));
        const Vector y = normal_vector(rng, n);
        const double lambda = log_uniform(rng, 0.1, 10);
        const auto sys = ComponentSystem::from_grams(g, y);
        const ComponentLeastSquares problem(sys, 0.5);
        StpOptions o;
        const auto r = wgnc_minimize(problem, PenaltyFn::stp(lambda, o.a).scaled(0.5), o.schedule, o.wgnc);
        EXPECT_LE(r.objective, r.warm_start_objective + 1e-12);
        const auto fit = fit_stp_components(sys, lambda, o);
        EXPECT_DOUBLE_EQ(fit.objective, r.objective);
        EXPECT_NEAR(stp_objective(g, y, r.state.alpha, r.state.bias, lambda, o.a), r.objective,
                    1e-8 * (1 + r.objective));
        expect_constraints(g, y, fit, 1e-8);
    }
}

TEST(FitStp, ZeroLambdaIsLeastSquares) {
    Rng rng(7);
    const Index n = 12;
    const auto g = build_grams(uniform_matrix(rng, 2, n), std::nullopt, KernelSpec::uniform_linear(2));
    const Vector y = normal_vector(rng, n);
    const auto fit = fit_stp_components(g, y, 0.0);
    // least squares over alpha with sum(alpha) = 0 and free bias
    Matrix a(n, n + 1);
    a.leftCols(n) = g.train_sum;
    a.col(n).setOnes();
    const Vector sol = a.completeOrthogonalDecomposition().solve(y);
    const double ls = 0.5 * (y - a * sol).squaredNorm();
    EXPECT_NEAR(0.5 * fit.residual.squaredNorm(), ls, 1e-6 * (1 + ls));
}

TEST(FitStp, TinyInstanceBeatsRandomSearch) {
    Rng rng(8);
    const Index n = 6;
    const auto g = build_grams(uniform_matrix(rng, 2, n), std::nullopt, KernelSpec::uniform_rbf(2, 0.7));
    const Vector y = normal_vector(rng, n);
    const double lambda = 1.0, a = 3.7;
    const auto fit = fit_stp_components(g, y, lambda);
    double best = INFINITY;
    for (int i = 0; i < 10000; ++i) {
        Vector alpha = normal_vector(rng, n, log_uniform(rng, 1e-3, 10));
        alpha.array() -= alpha.mean();
        const double b = (y - g.train_sum * alpha).mean();
        best = std::min(best, stp_objective(g, y, alpha, b, lambda, a));
    }
    EXPECT_LE(fit.objective, best + 1e-4);
}

TEST(FitStp, RecoversVapnikStructure) {
    const auto s = generate_vapnik(100, 2);
    const auto g = build_grams(s.data.x, std::nullopt, KernelSpec::uniform_rbf(10, 3.0));
    StpOptions o;
    o.a = 0.3;
    const auto fit = fit_stp_components(g, s.data.y, 20.0, o);
    EXPECT_EQ(fit.sparsity.retained, (std::vector<Index>{0, 1, 2, 3}));
}

TEST(Prune, AllZeroAndExactZeros) {
    ComponentOutputs out;
    out.train = {Vector::Zero(5), Vector::Zero(5)};
    EXPECT_TRUE(prune_components(out, 0.0).retained.empty());
    out.train[1][2] = 1e-9;
    EXPECT_EQ(prune_components(out, 0.0).retained, std::vector<Index>{1});
    EXPECT_THROW(prune_components(out, -1.0), InvalidArgument);
}

TEST(Prune, EmptyModelPredictsBias) {
    Rng rng(9);
    const Matrix x = uniform_matrix(rng, 3, 10);
    const auto g = build_grams(x, std::nullopt, KernelSpec::uniform_rbf(3, 1));
    const auto fit = fit_l1_components(g, Vector::Constant(10, 4.0), 1.0);
    ASSERT_TRUE(fit.sparsity.retained.empty());
    const auto m = to_model(fit, Task::Regression, KernelSpec::uniform_rbf(3, 1), x, Vector::Constant(10, 4.0));
    const Vector p = predict(m, uniform_matrix(rng, 3, 4));
    EXPECT_LE((p.array() - 4.0).abs().maxCoeff(), 1e-12);
}

TEST(Prune, RefitOnEmptySetIsMean) {
    Rng rng(10);
    const Vector y = normal_vector(rng, 8);
    const auto g = build_grams(uniform_matrix(rng, 2, 8), std::nullopt, KernelSpec::uniform_rbf(2, 1));
    const auto d = refit_dual(g, y, {}, 10.0);
    EXPECT_DOUBLE_EQ(d.bias, y.mean());
    EXPECT_EQ(d.alpha.cwiseAbs().maxCoeff(), 0.0);
}
