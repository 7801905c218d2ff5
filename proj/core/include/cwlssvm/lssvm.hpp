#pragma once

#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "cwlssvm/kernels.hpp"
#include "cwlssvm/linalg.hpp"

namespace cwlssvm {

enum class Task { Regression, Classification };

std::string_view to_string(Task task);
Task task_from_string(std::string_view name);

/// Dual representation of a trained additive kernel model.
///
/// Regression:      f(x) = sum_k alpha_k sum_{d in S} eta_d K^d(x_k, x) + b
/// Classification:  sign(sum_k alpha_k y_k sum_{d in S} eta_d K^d(x_k, x) + b)
///
/// eta_d is 1 unless the model was trained with per-component trade-offs.
struct TrainedModel {
    Task task = Task::Regression;
    Vector alpha;
    double bias = 0.0;
    KernelSpec kernel;
    Matrix inputs;                ///< training inputs, one point per column (P x N)
    Vector labels;                ///< training labels, classification only
    std::vector<Index> retained;  ///< S_D, zero-based component indices, ascending
    std::optional<Vector> eta;
    Vector component_norms;       ///< mean |training output| per component (diagnostic, may be empty)

    Index components() const { return kernel.size(); }
    Index points() const { return inputs.cols(); }
    bool is_retained(Index d) const;
    double component_weight(Index d) const { return eta ? (*eta)[d] : 1.0; }
};

/// Regularization schemes understood by the training front ends.
namespace reg {
struct Tikhonov {
    double gamma;
};
struct AReg {
    Vector c;
};
struct L1Component {
    double xi;
};
struct Stp {
    double lambda;
    double a = 3.7;
};
struct PerComponent {
    Vector eta;
};
} // namespace reg

using RegularizerConfig = std::variant<reg::Tikhonov, reg::AReg, reg::L1Component, reg::Stp, reg::PerComponent>;

/// Throws InvalidArgument when a parameter violates its positivity constraint.
void validate(const RegularizerConfig& config);

/// (b, alpha) of the bordered regression system with M = omega + I/gamma.
struct DualSolution {
    double bias = 0.0;
    Vector alpha;
};

DualSolution solve_regression_dual(const Matrix& omega, const Vector& y, double gamma);

/// Componentwise LS-SVM regressor. All components are retained.
TrainedModel train_regressor(const Matrix& x, const Vector& y, const KernelSpec& spec, double gamma);

/// Same as train_regressor but with the intercept removed: alpha = (Omega + I/gamma)^-1 Y, b = 0.
TrainedModel train_regressor_without_bias(const Matrix& x, const Vector& y, const KernelSpec& spec, double gamma);

/// Componentwise LS-SVM classifier, labels in {-1, +1} with both classes present.
TrainedModel train_classifier(const Matrix& x, const Vector& y, const KernelSpec& spec, double gamma);

/// Model with all components retained, built from an already-solved dual.
TrainedModel make_model(Task task, Vector alpha, double bias, KernelSpec spec, Matrix inputs, Vector labels = {});

/// Latent score (before the sign for classifiers).
double decision_value(const TrainedModel& model, const Eigen::Ref<const Vector>& x);

/// Regression value or +-1 class; a zero score is assigned to +1.
double predict(const TrainedModel& model, const Eigen::Ref<const Vector>& x);

/// Batch versions over columns of x (P x m).
Vector decision_values(const TrainedModel& model, const Matrix& x);
Vector predict(const TrainedModel& model, const Matrix& x);

/// Contribution of component d (zero-based) at scalar input u. The intercept
/// belongs to the global model and is not shared out. Pruned components
/// return 0.
double predict_component(const TrainedModel& model, Index d, double u);

/// Component outputs on the training points, one column per component (N x D).
Matrix training_component_outputs(const TrainedModel& model);

/// S_gamma = Omega (Omega + I/gamma)^-1, the bias-free linear smoother.
Matrix smoother_matrix(const Matrix& omega, double gamma);

} // namespace cwlssvm
