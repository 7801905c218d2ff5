#pragma once

#include <optional>
#include <vector>

#include "cwlssvm/data.hpp"
#include "cwlssvm/kernels.hpp"
#include "cwlssvm/lssvm.hpp"
#include "cwlssvm/sparse.hpp"

namespace cwlssvm {

// k-fold cross-validation protocols shared by the command-line tool and the
// benchmark runs. Every protocol builds the component Grams once per (fold,
// sigma) and scores the remaining grid axes against that factorization.

enum class SelectionRule {
    Minimum,          ///< argmin of the mean held-out score
    OneStandardError, ///< sparsest point within one standard error of the minimum
};

/// One point of a tuning grid; axes a protocol does not use stay NaN.
struct GridPoint {
    double sigma;
    double gamma;
    double xi;
    double lambda;
    double a;
};

struct Tuning {
    CvResult cv;
    std::vector<GridPoint> grid;
    std::size_t chosen = 0;
    GridPoint params{};
    TrainedModel model;              ///< refit on the whole dataset at `params`
    std::optional<ComponentFit> fit; ///< sparse methods only
};

/// Held-out score: MSE for regression, misclassification rate of the sign of
/// the latent value for classification.
double heldout_score(Task task, const Vector& latent, const Vector& y);

/// RBF bandwidths are replaced by each sigma; a spec without RBF components
/// uses only the first sigma.
Tuning cv_tune_lssvm(const Dataset& ds, const CvPlan& plan, const KernelSpec& base, const std::vector<double>& sigmas,
                     const std::vector<double>& gammas);

/// Each (sigma, xi) L1 fit is scored by refitting a componentwise LS-SVM on
/// its retained set for every gamma; the rule prefers the smallest xi.
Tuning cv_tune_l1(const Dataset& ds, const CvPlan& plan, const KernelSpec& base, const std::vector<double>& sigmas,
                  const std::vector<double>& xis, const std::vector<double>& gammas,
                  SelectionRule rule = SelectionRule::OneStandardError, const L1Options& options = {});

/// Each (sigma, a, lambda) STP fit is scored on its own held-out predictions;
/// the rule prefers the largest lambda.
Tuning cv_tune_stp(const Dataset& ds, const CvPlan& plan, const KernelSpec& base, const std::vector<double>& sigmas,
                   const std::vector<double>& lambdas, const std::vector<double>& as,
                   SelectionRule rule = SelectionRule::OneStandardError, const StpOptions& options = {});

/// LS-SVM with one RBF kernel over all inputs, exp(-||x - z||^2 / sigma^2).
struct FullRbfModel {
    Matrix inputs;
    Vector alpha;
    double bias = 0.0;
    double sigma = 1.0;

    Vector predict(const Matrix& x) const;
};

FullRbfModel train_full_rbf(const Matrix& x, const Vector& y, double sigma, double gamma);

struct FullRbfTuning {
    CvResult cv;
    std::vector<GridPoint> grid;
    GridPoint params{};
    FullRbfModel model;
};

FullRbfTuning cv_tune_full_rbf(const Dataset& ds, const CvPlan& plan, const std::vector<double>& sigmas,
                               const std::vector<double>& gammas);

} // namespace cwlssvm
