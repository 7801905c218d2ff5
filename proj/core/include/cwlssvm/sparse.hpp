#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "cwlssvm/kernels.hpp"
#include "cwlssvm/linalg.hpp"
#include "cwlssvm/lssvm.hpp"
#include "cwlssvm/solvers.hpp"
#include "cwlssvm/wgnc.hpp"

namespace cwlssvm {

// ---------------------------------------------------------------------------
// Additive regularization substrate

struct AregSolution {
    Vector alpha;
    double bias = 0.0;
    Vector residual; ///< e = alpha + c
};

/// Solves [0 1^T; 1 Omega + I] [b; alpha] = [0; Y - c].
AregSolution solve_areg_substrate(const Matrix& omega, const Vector& y, const Vector& c);

// ---------------------------------------------------------------------------
// Component outputs and pruning

struct ComponentOutputs {
    std::vector<Vector> train; ///< Yhat^d = Omega^d alpha
    std::vector<Vector> val;   ///< Yhat^(v)d = Omega^(v)d alpha (may be empty)
};

struct SparsityResult {
    std::vector<Index> retained; ///< zero-based, ascending
    Vector l1_norms;             ///< ||Yhat^d||_1 on training points
    Vector mean_abs;             ///< ||Yhat^d||_1 / N
    Vector energies;             ///< alpha^T Omega^d alpha (diagnostic)
    double threshold = 0.0;
};

/// Mean absolute output below this fraction of std(Y) counts as a sparse component.
inline constexpr double kPruneFraction = 1e-4;

double default_prune_threshold(const Vector& y);

/// S_D = { d : ||Yhat^d||_1 / N > tau }.
SparsityResult prune_components(const ComponentOutputs& outputs, double tau);

ComponentOutputs component_outputs(const ComponentGrams& grams, const Vector& alpha);

// ---------------------------------------------------------------------------
// Weighted component least squares

/// Precomputed factors for
///
///   min_{alpha, b}  sum_d sum_k w_dk (G_d alpha)_k^2 + s ||y - Omega alpha - 1 b||^2
///   s.t. 1^T alpha = 0
///
/// where Omega is the sum of the training blocks. Each block is replaced by a
/// truncated factorization G_d = L_d C_d Z^T on the sum-zero subspace, and the
/// stacked C is reduced to its numerical range, so a weighted solve is one
/// full-rank QR whose size does not depend on the number of weights that
/// collapse to the floor. The factorization does not depend on w or s.
class ComponentSystem {
public:
    /// The first `train_blocks` blocks are training component Grams (all of
    /// them when negative); any further blocks are validation cross blocks.
    ComponentSystem(std::vector<Matrix> blocks, Vector targets, Index train_blocks = -1,
                    double truncation = 1e-13, double range_truncation = 1e-8);

    /// Training Grams, followed by the validation blocks when `with_validation`.
    static std::shared_ptr<const ComponentSystem> from_grams(const ComponentGrams& grams, const Vector& y,
                                                             bool with_validation = false);

    Index points() const { return fit_gram_.rows(); }
    Index train_blocks() const { return train_blocks_; }
    Index penalized_size() const { return penalized_size_; }
    Index rank() const { return coords_.cols(); }
    const std::vector<Matrix>& blocks() const { return blocks_; }
    const Matrix& fit_gram() const { return fit_gram_; }
    const Vector& targets() const { return targets_; }
    std::vector<Index> groups() const;

    struct Solution {
        Vector alpha;
        double bias = 0.0;
        Vector penalized; ///< stacked G_d alpha
        Vector residual;  ///< y - Omega alpha - b
    };

    Solution solve(const Vector& weights, double data_scale) const;
    Solution evaluate(Vector alpha, double bias) const;

private:
    struct Factor {
        Matrix left;    ///< m x r orthonormal columns
        Matrix reduced; ///< r x R: block output = left * reduced * gamma
    };

    std::vector<Matrix> blocks_;
    Matrix fit_gram_;
    Vector targets_;
    Matrix coords_;    ///< N x R map gamma -> alpha (columns sum to zero)
    Matrix data_rows_; ///< centered Omega * coords_
    Vector data_rhs_;  ///< centered y
    std::vector<Factor> factors_;
    Index penalized_size_ = 0;
    Index train_blocks_ = 0;
};

/// Adapter exposing a ComponentSystem with a fixed data weight to the IRLS
/// and WGNC engines.
class ComponentLeastSquares {
public:
    using State = ComponentSystem::Solution;

    ComponentLeastSquares(std::shared_ptr<const ComponentSystem> system, double data_scale)
        : system_(std::move(system)), data_scale_(data_scale) {}

    State solve(const Vector& weights) const { return system_->solve(weights, data_scale_); }
    Vector penalized(const State& s) const { return s.penalized; }
    double data_objective(const State& s) const { return data_scale_ * s.residual.squaredNorm(); }
    std::vector<Index> groups() const { return system_->groups(); }
    Index penalized_size() const { return system_->penalized_size(); }
    double objective(const State& s) const; ///< 1/2 ||r||_1 + data term (L1 scheme)

private:
    std::shared_ptr<const ComponentSystem> system_;
    double data_scale_;
};

// ---------------------------------------------------------------------------
// Sparse component fits

struct ComponentFit {
    Vector alpha;
    double bias = 0.0;
    Vector residual;
    ComponentOutputs outputs;
    SparsityResult sparsity;
    Vector penalized;            ///< stacked block outputs before thresholding
    double objective = 0.0;
    int iterations = 0;
    bool converged = true;
    std::vector<WgncStep> trace; ///< STP only
};

struct L1Options {
    IrlsOptions irls{1e-9, 1000};
    /// Continuation: the residual clamp starts at `clamp_start` * max |output|
    /// of the first solve and shrinks by `clamp_ratio` per step down to the floor.
    double clamp_start = 0.1;
    double clamp_ratio = 0.7;
    std::optional<double> prune_threshold; ///< default: 1e-4 * std(Y)
    Vector initial_weights;                ///< empty: 1/2 everywhere (first solve is ridge-like)
};

/// IRLS weights majorizing |v|/2 at the given outputs; warm start for a nearby fit.
Vector l1_weights(const Vector& outputs);

/// Minimizes 1/2 sum_d ||Yhat^d||_1 + xi/2 ||e||^2 subject to the substrate
/// optimality conditions, by IRLS on |.| with the residual floor.
ComponentFit fit_l1_components(const ComponentGrams& grams, const Vector& y, double xi, const L1Options& options = {});

/// Same, over an existing factorization (blocks may include validation rows).
ComponentFit fit_l1_components(std::shared_ptr<const ComponentSystem> system, double xi,
                               const L1Options& options = {});

struct StpOptions {
    double a = 3.7;
    RelaxationSchedule schedule = RelaxationSchedule::geometric();
    WgncOptions wgnc{1e-8, 50, 1000, 0.5};
    std::optional<double> prune_threshold;
};

/// Minimizes 1/2 sum_d ell_lambda^a(||Yhat^d||_1) + 1/2 ||e||^2 with WGNC,
/// starting from 1/2 sum_d ||Yhat^d||_2^2 + 1/2 ||e||^2.
ComponentFit fit_stp_components(const ComponentGrams& grams, const Vector& y, double lambda,
                                const StpOptions& options = {});

ComponentFit fit_stp_components(std::shared_ptr<const ComponentSystem> system, double lambda,
                                const StpOptions& options = {});

/// Objective of the STP scheme at (alpha, b).
double stp_objective(const ComponentGrams& grams, const Vector& y, const Vector& alpha, double bias, double lambda,
                     double a = 3.7);

/// Model that simulates only the retained components. For classification
/// (regression on +-1 labels) alpha is converted to the alpha_k y_k convention.
TrainedModel to_model(const ComponentFit& fit, Task task, KernelSpec spec, Matrix inputs, const Vector& y);

/// Componentwise LS-SVM restricted to `retained`: Omega_S = sum_{d in S} Omega^d,
/// M = Omega_S + I/gamma. With S empty, alpha = 0 and b = mean(Y).
DualSolution refit_dual(const ComponentGrams& grams, const Vector& y, const std::vector<Index>& retained, double gamma);

/// Sum of the validation cross blocks in `retained` times alpha, plus b.
Vector refit_validation_predictions(const ComponentGrams& grams, const std::vector<Index>& retained,
                                    const DualSolution& dual);

/// The L1 problem in the plain form used by the brute-force oracle.
ComponentL1Problem l1_problem(const ComponentGrams& grams, const Vector& y, double xi);

} // namespace cwlssvm
