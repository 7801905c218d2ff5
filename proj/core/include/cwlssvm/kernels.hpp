#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cwlssvm/linalg.hpp"

namespace cwlssvm {

enum class KernelFamily { Rbf, Linear };

std::string_view to_string(KernelFamily family);
KernelFamily kernel_family_from_string(std::string_view name);

/// Scalar kernel acting on one input coordinate.
///
/// RBF:    K(u, v) = exp(-(u - v)^2 / sigma^2)
/// Linear: K(u, v) = u * v
///
/// Some references write the RBF with 2 sigma^2 in the denominator; a
/// bandwidth taken from such a source has to be scaled by sqrt(2).
struct ComponentKernel {
    KernelFamily family = KernelFamily::Rbf;
    double sigma = 1.0; ///< bandwidth, RBF only
    Index input = 0;    ///< column of the input matrix this component reads

    static ComponentKernel rbf(double sigma, Index input) { return {KernelFamily::Rbf, sigma, input}; }
    static ComponentKernel linear(Index input) { return {KernelFamily::Linear, 1.0, input}; }

    double operator()(double u, double v) const;

    std::string label() const;
};

/// Evaluate one scalar kernel; rejects non-finite arguments.
double eval_kernel(const ComponentKernel& kernel, double u, double v);

/// One scalar kernel per additive component.
///
/// Usually component d reads input d, but a component library may offer the
/// same input several times with different kernels.
class KernelSpec {
public:
    KernelSpec() = default;
    explicit KernelSpec(std::vector<ComponentKernel> components);

    /// RBF with a shared bandwidth on each of `inputs` inputs.
    static KernelSpec uniform_rbf(Index inputs, double sigma);
    static KernelSpec uniform_linear(Index inputs);
    /// 2 * inputs components: RBF on every input followed by linear on every input.
    static KernelSpec rbf_linear_library(Index inputs, double sigma);

    Index size() const { return static_cast<Index>(components_.size()); }
    const ComponentKernel& operator[](Index d) const { return components_[static_cast<std::size_t>(d)]; }
    const std::vector<ComponentKernel>& components() const { return components_; }

    /// Number of input columns the spec reads (1 + largest input index).
    Index required_inputs() const;

    /// Same spec with every RBF bandwidth replaced.
    KernelSpec with_sigma(double sigma) const;

    /// Components at the given zero-based indices, in that order.
    KernelSpec subset(const std::vector<Index>& indices) const;

private:
    std::vector<ComponentKernel> components_;
};

/// Per-component Gram matrices over training points and, optionally,
/// validation-vs-training cross blocks.
struct ComponentGrams {
    std::vector<Matrix> train; ///< Omega^d, N x N
    Matrix train_sum;          ///< Omega = sum_d Omega^d
    std::vector<Matrix> val;   ///< Omega^(v)d, n x N (empty without validation)
    Matrix val_sum;            ///< Omega^(v)

    Index components() const { return static_cast<Index>(train.size()); }
    Index points() const { return train_sum.rows(); }
    bool has_validation() const { return !val.empty(); }
};

/// Inputs are stored one point per column: x_train is P x N, x_val is P x n.
ComponentGrams build_grams(const Matrix& x_train, const std::optional<Matrix>& x_val, const KernelSpec& spec);

/// Cross Gram of one component: rows index `rows`, columns index `cols` (both P x m).
Matrix component_gram(const ComponentKernel& kernel, const Matrix& rows, const Matrix& cols);

/// Full multivariate RBF exp(-||x - z||^2 / sigma^2) over all inputs.
/// Baseline for comparing against the additive model.
Matrix joint_rbf_gram(const Matrix& rows, const Matrix& cols, double sigma);

} // namespace cwlssvm
