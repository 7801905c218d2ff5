#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <vector>

#include "cwlssvm/linalg.hpp"

namespace cwlssvm {

/// Bordered saddle-point system
///
///     [ 0   u^T ] [ b     ]   [ rhs_top ]
///     [ u   M   ] [ alpha ] = [ rhs     ]
///
/// with M symmetric. u is the ones vector for regression and the label
/// vector for classification.
struct KktSystem {
    Vector border;
    Matrix block;
    double rhs_top = 0.0;
    Vector rhs;

    Index size() const { return block.rows(); }
};

struct SolveReport {
    double bias = 0.0;
    Vector coef;
    double residual_norm = 0.0; ///< infinity norm of the full-system residual
    int iterations = 0;
    bool converged = true;
    double condition_estimate = 1.0;
};

/// Largest 1-norm condition estimate accepted by solve_kkt.
inline constexpr double kMaxConditionEstimate = 1e14;

/// Direct LU solve with partial pivoting and up to two refinement sweeps.
/// Throws NumericalError when the system is singular or too ill-conditioned;
/// the message points at the diagonal shift of M as the remedy.
SolveReport solve_kkt(const KktSystem& sys);

// ---------------------------------------------------------------------------
// Iteratively reweighted least squares

struct IrlsOptions {
    double tol = 1e-9; ///< relative change of the objective between iterates
    int max_iter = 200;
};

template <class State>
struct IrlsResult {
    State state;          ///< best iterate seen (the last one for majorize-minimize rules)
    Vector weights;       ///< weights that produced `state`
    double objective = 0.0;
    int iterations = 0;   ///< number of weighted solves
    bool converged = false;
    std::vector<double> trace;
};

/// A problem that is solvable by weighted least squares for fixed weights.
template <class P>
concept WeightedLeastSquaresProblem = requires(const P& p, const Vector& w, const typename P::State& s) {
    { p.solve(w) } -> std::convertible_to<typename P::State>;
    { p.objective(s) } -> std::convertible_to<double>;
};

/// Repeats: solve with weights, refresh weights from the new iterate, until the
/// objective changes by no more than tol * (1 + |J|). With tol = infinity the
/// first weighted solve is returned.
template <WeightedLeastSquaresProblem P, class Refresh>
    requires std::invocable<Refresh&, const typename P::State&>
IrlsResult<typename P::State> irls_minimize(const P& problem, Vector weights, Refresh&& refresh,
                                            const IrlsOptions& options = {}) {
    using State = typename P::State;
    IrlsResult<State> result{problem.solve(weights), weights, 0.0, 1, false, {}};
    result.objective = problem.objective(result.state);
    result.trace.push_back(result.objective);

    State current = result.state;
    double previous = std::numeric_limits<double>::infinity();
    double value = result.objective;
    while (true) {
        if (std::abs(previous - value) <= options.tol * (1.0 + std::abs(value))) {
            result.converged = true;
            break;
        }
        if (result.iterations >= options.max_iter) {
            break;
        }
        weights = refresh(current);
        current = problem.solve(weights);
        previous = value;
        value = problem.objective(current);
        ++result.iterations;
        result.trace.push_back(value);
        if (value < result.objective) {
            result.objective = value;
            result.state = current;
            result.weights = weights;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// L1 component-regularized least squares and its brute-force oracle

/// min_{alpha, b}  1/2 sum_d ||G_d alpha||_1 + xi/2 ||y - Omega alpha - 1 b||^2
/// s.t. 1^T alpha = 0.
///
/// The G_d are the penalized blocks (training component Grams, optionally
/// followed by validation cross blocks).
struct ComponentL1Problem {
    std::vector<Matrix> blocks;
    Matrix fit_gram;
    Vector targets;
    double xi = 1.0;

    Index points() const { return fit_gram.rows(); }
    double objective(const Vector& alpha, double bias) const;
};

struct OracleConfig {
    int iterations = 1'000'000; ///< subgradient steps per start (hard cap 1e6)
    int starts = 4;
    std::uint64_t seed = 1;
};

struct OracleSolution {
    Vector alpha;
    double bias = 0.0;
    double objective = 0.0;
};

/// Reference optimum for tiny instances (N <= 10, at most 3 components):
/// multi-start projected subgradient descent with diminishing steps, followed
/// by an exact equality-constrained solve on the detected zero/sign pattern.
/// Rejects larger instances with InvalidArgument.
OracleSolution brute_force_qp_oracle(const ComponentL1Problem& problem, const OracleConfig& config = {});

// ---------------------------------------------------------------------------
// Nonnegative least squares

struct NnlsResult {
    Vector x;
    int iterations = 0;
    bool converged = true;
};

/// min ||A x - b||_2 subject to x >= 0 (Lawson-Hanson active set).
NnlsResult nnls(const Matrix& a, const Vector& b, int max_iter = -1, double tol = 1e-12);

} // namespace cwlssvm
