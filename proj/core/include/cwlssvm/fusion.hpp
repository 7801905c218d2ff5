#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cwlssvm/kernels.hpp"
#include "cwlssvm/linalg.hpp"
#include "cwlssvm/lssvm.hpp"
#include "cwlssvm/sparse.hpp"

namespace cwlssvm {

/// Held-out points used by the fusion criteria, one point per column.
struct ValidationSplit {
    Matrix x;
    Vector y;

    Index points() const { return x.cols(); }
    /// Throws InvalidArgument unless x has `inputs` rows and y matches.
    void validate(Index inputs, bool allow_empty = false) const;
};

/// Smallest admissible per-component trade-off; components at the floor count as deselected.
inline constexpr double kEtaFloor = 1e-10;

/// Relative size below which a trade-off is reported as switched off.
inline constexpr double kEtaSelectFraction = 1e-3;

/// Throws InvalidArgument unless every entry is finite and strictly positive.
void validate_eta(const Vector& eta, Index components);

/// { d : eta_d >= kEtaSelectFraction * max eta }.
std::vector<Index> eta_selection(const Vector& eta);

double validation_mse(const TrainedModel& model, const ValidationSplit& split);

// ---------------------------------------------------------------------------
// Level-2 grid over gamma

struct GammaTuning {
    double gamma = 0.0;
    TrainedModel model;
    std::vector<double> grid;
    std::vector<double> scores;        ///< validation MSE per grid point, NaN when training failed
    std::vector<std::string> failures; ///< one message per failed grid point
};

/// Picks the gamma minimizing the validation squared error; ties go to the smallest gamma.
GammaTuning tune_gamma_grid(const Matrix& x, const Vector& y, const ValidationSplit& split, const KernelSpec& spec,
                            const std::vector<double>& gamma_grid);

// ---------------------------------------------------------------------------
// AReg selection over training and validation outputs

struct AregFusion {
    ComponentFit fit; ///< outputs.val holds the validation component outputs
    Vector c;         ///< AReg term, e = alpha + c
    double validation_mse = 0.0;
};

/// Minimizes 1/2 sum_d ||Yhat^(v)d||_1 + 1/2 sum_d ||Yhat^d||_1 + xi/2 ||e||^2.
/// `grams` must carry validation blocks unless y_val is empty, in which case
/// the problem is the plain L1 component fit.
AregFusion fuse_areg_select(const ComponentGrams& grams, const Vector& y, const Vector& y_val, double xi,
                            const L1Options& options = {});

/// Fusion over a xi grid: each AReg selection is refit as a componentwise
/// LS-SVM on its retained set for every gamma, and xi is scored by the best
/// refit validation MSE (ties to the smaller xi, then the smaller gamma).
struct AregTuning {
    double xi = 0.0;
    double gamma = 0.0;
    AregFusion fusion;
    TrainedModel model;               ///< refit on the selected components
    std::vector<double> xi_grid;
    std::vector<double> scores;       ///< per xi, NaN when the fit failed
    std::vector<std::vector<Index>> selections;
};

AregTuning fuse_areg_tuned(const Matrix& x, const Vector& y, const ValidationSplit& split, const KernelSpec& spec,
                           const std::vector<double>& xi_grid, const std::vector<double>& gamma_grid,
                           const L1Options& options = {});

// ---------------------------------------------------------------------------
// Per-component trade-offs

/// Solves [0 1^T; 1 sum_d eta_d Omega^d + I] [b; alpha] = [0; Y].
TrainedModel train_eta_model(const Matrix& x, const Vector& y, const KernelSpec& spec, const Vector& eta);

/// Same system from precomputed Grams; returns (alpha, b).
DualSolution solve_eta_dual(const ComponentGrams& grams, const Vector& y, const Vector& eta);

struct EtaStep {
    int iteration = 0;
    double validation_mse = 0.0;
    Vector eta;
    double step = 1.0; ///< accepted fraction of the ALS move
};

struct EtaFusion {
    Vector eta;
    DualSolution dual;
    TrainedModel model;
    double validation_mse = 0.0;
    std::vector<Index> selected; ///< eta_selection(eta)
    std::vector<EtaStep> trace;  ///< accepted iterates, starting with the initial point
    bool converged = false;
    bool stalled = false;        ///< no improving move found
};

struct EtaAlsOptions {
    int max_outer = 100;
    double tol = 1e-8;       ///< stop when the relative validation improvement falls below this
    int max_backtrack = 30;
};

/// Alternates the linear alpha step (eta fixed) with a nonnegative least
/// squares eta step (alpha fixed) on the validation predictions; a move is
/// accepted only if the retrained validation MSE does not increase.
EtaFusion fuse_eta_als(const Matrix& x, const Vector& y, const ValidationSplit& split, const KernelSpec& spec,
                       const Vector& init_eta, const EtaAlsOptions& options = {});

/// Coordinate-wise search of each eta_d over a log grid, repeated until no
/// coordinate changes. Meant for D <= 3.
EtaFusion fuse_eta_grid(const Matrix& x, const Vector& y, const ValidationSplit& split, const KernelSpec& spec,
                        const std::vector<double>& eta_grid, int max_sweeps = 20);

/// Log-spaced grid of `count` points from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int count);

/// CSV with columns iteration, validation_mse, step, eta_1..eta_D.
void write_eta_trace_csv(std::ostream& os, const std::vector<EtaStep>& trace);

} // namespace cwlssvm
