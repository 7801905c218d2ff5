#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "criteria.hpp"
#include "cwlssvm/data.hpp"
#include "cwlssvm/error.hpp"
#include "cwlssvm/fusion.hpp"

using namespace cwlssvm;
using namespace cwlssvm::testing;

namespace {

struct Problem {
    Matrix x;
    Vector y;
    ValidationSplit split;
};

Problem vapnik_problem(Index n, std::uint64_t seed, Index d = 5) {
    const auto tr = generate_vapnik(n, seed, 1.0, d);
    const auto va = generate_vapnik(n, seed + 1000, 1.0, d);
    return {tr.data.x, tr.data.y, {va.data.x, va.data.y}};
}

} // namespace

TEST(LogGrid, EndpointsAndSpacing) {
    const auto g = log_grid(0.1, 1e4, 11);
    ASSERT_EQ(g.size(), 11u);
    EXPECT_EQ(g.front(), 0.1);
    EXPECT_NEAR(g[1], std::sqrt(0.1), 1e-15);
    EXPECT_EQ(g[2], 1.0);
    EXPECT_EQ(g.back(), 1e4);
    EXPECT_EQ(log_grid(2.0, 2.0, 1), std::vector<double>{2.0});
    EXPECT_THROW(log_grid(0.0, 1.0, 3), InvalidArgument);
}

TEST(TuneGamma, SinglePoint) {
    const auto p = vapnik_problem(30, 1);
    const auto t = tune_gamma_grid(p.x, p.y, p.split, KernelSpec::uniform_rbf(5, 2.0), {7.0});
    EXPECT_EQ(t.gamma, 7.0);
    EXPECT_EQ(t.scores.size(), 1u);
    EXPECT_NEAR(t.scores[0], validation_mse(t.model, p.split), 1e-10);
}

TEST(TuneGamma, InterpolationPrefersLargestGamma) {
    Rng rng(2);
    const Matrix x = uniform_matrix(rng, 2, 15);
    const Vector y = normal_vector(rng, 15);
    const ValidationSplit split{x, y};
    const auto t = tune_gamma_grid(x, y, split, KernelSpec::uniform_rbf(2, 0.3), log_grid(0.1, 1e6, 8));
    EXPECT_EQ(t.gamma, 1e6);
    for (std::size_t i = 1; i < t.scores.size(); ++i) {
        EXPECT_LE(t.scores[i], t.scores[i - 1] + 1e-12);
    }
}

TEST(TuneGamma, TiesGoToSmallestGamma) {
    Rng rng(3);
    const Matrix x = uniform_matrix(rng, 2, 10);
    const ValidationSplit split{uniform_matrix(rng, 2, 5), Vector::Constant(5, 3.0)};
    // constant targets: every gamma gives alpha = 0, b = 3 and the same score
    const auto t = tune_gamma_grid(x, Vector::Constant(10, 3.0), split, KernelSpec::uniform_rbf(2, 1), {10, 1, 100});
    EXPECT_EQ(t.gamma, 1.0);
}

TEST(TuneGamma, RejectsBadGrid) {
    const auto p = vapnik_problem(20, 4);
    EXPECT_THROW(tune_gamma_grid(p.x, p.y, p.split, KernelSpec::uniform_rbf(5, 1), {}), InvalidArgument);
    EXPECT_THROW(tune_gamma_grid(p.x, p.y, p.split, KernelSpec::uniform_rbf(5, 1), {1.0, -1.0}), InvalidArgument);
    EXPECT_THROW(tune_gamma_grid(p.x, p.y, ValidationSplit{}, KernelSpec::uniform_rbf(5, 1), {1.0}),
                 InvalidArgument);
}

TEST(AregSelect, EmptyValidationIsPlainL1) {
    const auto p = vapnik_problem(40, 5);
    const auto g = build_grams(p.x, std::nullopt, KernelSpec::uniform_rbf(5, 2.0));
    const auto f = fuse_areg_select(g, p.y, Vector{}, 1.0);
    const auto l1 = fit_l1_components(g, p.y, 1.0);
    EXPECT_LE((f.fit.alpha - l1.alpha).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(f.fit.sparsity.retained, l1.sparsity.retained);
    EXPECT_LE((f.c - (f.fit.residual - f.fit.alpha)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(AregSelect, ZeroTargetsGiveZeroModel) {
    const auto p = vapnik_problem(30, 6);
    const auto g = build_grams(p.x, p.split.x, KernelSpec::uniform_rbf(5, 1.0));
    const auto f = fuse_areg_select(g, Vector::Zero(30), Vector::Zero(30), 1.0);
    EXPECT_LE(f.fit.alpha.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_TRUE(f.fit.sparsity.retained.empty());
    EXPECT_LE(f.validation_mse, 1e-20);
}

TEST(AregSelect, ConstraintsAndValidationScore) {
    const auto p = vapnik_problem(40, 7);
    const auto g = build_grams(p.x, p.split.x, KernelSpec::uniform_rbf(5, 2.0));
    const auto f = fuse_areg_select(g, p.y, p.split.y, 1.0);
    EXPECT_LE(std::abs(f.fit.alpha.sum()), 1e-8);
    const Vector e = p.y - g.train_sum * f.fit.alpha - Vector::Constant(40, f.fit.bias);
    EXPECT_LE((e - f.fit.residual).cwiseAbs().maxCoeff(), 1e-8);
    ASSERT_EQ(f.fit.outputs.val.size(), 5u);
    for (std::size_t d = 0; d < 5; ++d) {
        EXPECT_LE((g.val[d] * f.fit.alpha - f.fit.outputs.val[d]).cwiseAbs().maxCoeff(), 1e-8);
    }
    Vector pred = Vector::Constant(40, f.fit.bias);
    for (Index d : f.fit.sparsity.retained) {
        pred += g.val[static_cast<std::size_t>(d)] * f.fit.alpha;
    }
    EXPECT_NEAR(f.validation_mse, (pred - p.split.y).squaredNorm() / 40.0, 1e-10);
}

TEST(AregTuned, ScoresEveryXiAndRefits) {
    const auto p = vapnik_problem(50, 8);
    const auto t = fuse_areg_tuned(p.x, p.y, p.split, KernelSpec::uniform_rbf(5, 2.0), {0.5, 1.0, 2.0},
                                   log_grid(1, 1e3, 4));
    EXPECT_EQ(t.scores.size(), 3u);
    EXPECT_EQ(t.selections.size(), 3u);
    double best = INFINITY;
    for (double s : t.scores) {
        best = std::min(best, s);
    }
    EXPECT_NEAR(validation_mse(t.model, p.split), best, 1e-10 * (1 + best));
    EXPECT_EQ(t.model.retained, t.fusion.fit.sparsity.retained);
}

TEST(EtaModel, UniformEtaIsTikhonov) {
    Rng rng(9);
    for (int rep = 0; rep < 10; ++rep) {
        const Index n = 5 + static_cast<Index>(rng.below(20));
        const Index d = 1 + static_cast<Index>(rng.below(4));
        const Matrix x = uniform_matrix(rng, d, n);
        const Vector y = normal_vector(rng, n);
        const KernelSpec spec = random_spec(rng, d);
        const double gamma = log_uniform(rng, 0.1, 100);
        const auto em = train_eta_model(x, y, spec, Vector::Constant(d, gamma));
        const auto tm = train_regressor(x, y, spec, gamma);
        const Matrix xt = uniform_matrix(rng, d, 7);
        EXPECT_LE((predict(em, xt) - predict(tm, xt)).cwiseAbs().maxCoeff(), 1e-8);
        ASSERT_TRUE(em.eta.has_value());
    }
}

TEST(EtaModel, FloorEtaSilencesComponent) {
    Rng rng(10);
    const Matrix x = uniform_matrix(rng, 3, 20);
    const Vector y = normal_vector(rng, 20);
    Vector eta(3);
    eta << 5.0, kEtaFloor, 5.0;
    const auto m = train_eta_model(x, y, KernelSpec::uniform_rbf(3, 1.0), eta);
    const Matrix out = training_component_outputs(m);
    EXPECT_LE(out.col(1).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_GT(out.col(0).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(EtaModel, ConstantTargets) {
    Rng rng(11);
    const Matrix x = uniform_matrix(rng, 2, 12);
    Vector eta(2);
    eta << 0.3, 40.0;
    const auto m = train_eta_model(x, Vector::Constant(12, -1.5), KernelSpec::uniform_rbf(2, 1.0), eta);
    EXPECT_LE(m.alpha.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(m.bias, -1.5, 1e-12);
}

TEST(EtaModel, OptimalityConditions) {
    const auto a = audit_kkt(50, 313);
    EXPECT_LE(a.optimality, 1e-8);
    EXPECT_LE(a.balance, 1e-10);
}

TEST(EtaModel, ValidateEta) {
    EXPECT_NO_THROW(validate_eta(Vector::Ones(3), 3));
    EXPECT_THROW(validate_eta(Vector::Ones(2), 3), InvalidArgument);
    Vector e = Vector::Ones(3);
    e[1] = 0.0;
    EXPECT_THROW(validate_eta(e, 3), InvalidArgument);
    e[1] = NAN;
    EXPECT_THROW(validate_eta(e, 3), InvalidArgument);
    e[1] = INFINITY;
    EXPECT_THROW(validate_eta(e, 3), InvalidArgument);
}

TEST(EtaModel, Selection) {
    Vector e(4);
    e << 10.0, 0.01, 0.005, kEtaFloor;
    EXPECT_EQ(eta_selection(e), (std::vector<Index>{0, 1}));
}

TEST(EtaAls, SingleComponentMatchesDenseGrid) {
    const auto tr = generate_vapnik(40, 12, 1.0, 4);
    const auto va = generate_vapnik(40, 13, 1.0, 4);
    // x1 only
    const Matrix x = tr.data.x.topRows(1);
    const ValidationSplit split{va.data.x.topRows(1), va.data.y};
    const KernelSpec spec = KernelSpec::uniform_rbf(1, 0.5);
    EtaAlsOptions o;
    o.max_outer = 500;
    o.tol = 1e-12;
    const auto f = fuse_eta_als(x, tr.data.y, split, spec, Vector::Constant(1, 1.0), o);
    double best = INFINITY;
    for (double g : log_grid(1e-3, 1e4, 50)) {
        best = std::min(best, validation_mse(train_regressor(x, tr.data.y, spec, g), split));
    }
    EXPECT_LE(f.validation_mse, best * (1 + 1e-3));
}

TEST(EtaAls, MonotoneTraceAndNoWorseThanStart) {
    for (std::uint64_t seed : {21u, 22u, 23u}) {
        const auto p = vapnik_problem(50, seed);
        const KernelSpec spec = KernelSpec::uniform_rbf(5, 2.0);
        const auto f = fuse_eta_als(p.x, p.y, p.split, spec, Vector::Constant(5, 10.0));
        ASSERT_FALSE(f.trace.empty());
        EXPECT_LE(f.validation_mse, f.trace.front().validation_mse);
        for (std::size_t k = 1; k < f.trace.size(); ++k) {
            EXPECT_LE(f.trace[k].validation_mse, f.trace[k - 1].validation_mse);
        }
        EXPECT_NEAR(f.validation_mse, validation_mse(f.model, p.split), 1e-8 * (1 + f.validation_mse));
        EXPECT_EQ(f.selected, eta_selection(f.eta));
        EXPECT_GE(f.eta.minCoeff(), kEtaFloor);
    }
}

TEST(EtaAls, TraceCsv) {
    const auto p = vapnik_problem(30, 30, 4);
    const auto f = fuse_eta_als(p.x, p.y, p.split, KernelSpec::uniform_rbf(4, 2.0), Vector::Ones(4));
    std::ostringstream os;
    write_eta_trace_csv(os, f.trace);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "iteration,validation_mse,step,eta_1,eta_2,eta_3,eta_4");
}

TEST(EtaGrid, NotWorseThanUniformStart) {
    const auto p = vapnik_problem(40, 31, 4);
    const KernelSpec spec = KernelSpec::uniform_rbf(4, 2.0);
    const auto grid = log_grid(1e-2, 1e3, 6);
    const auto f = fuse_eta_grid(p.x, p.y, p.split, spec, grid);
    double uniform_best = INFINITY;
    for (double g : grid) {
        uniform_best = std::min(uniform_best, validation_mse(train_regressor(p.x, p.y, spec, g), p.split));
    }
    EXPECT_LE(f.validation_mse, uniform_best + 1e-10);
}
