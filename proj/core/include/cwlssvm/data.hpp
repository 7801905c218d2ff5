#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cwlssvm/linalg.hpp"
#include "cwlssvm/lssvm.hpp"

namespace cwlssvm {

/// Per-column transform recorded so that new data can be mapped the same way.
struct Preprocessing {
    std::vector<bool> log1p;       ///< log(1 + x) applied before standardizing
    Vector mean;
    Vector scale;                  ///< divisor; 1 for flagged columns
    std::vector<bool> zero_variance;

    /// Applies the recorded transform to inputs (P x m, one point per column).
    Matrix apply(const Matrix& x) const;
};

struct Dataset {
    Matrix x;                          ///< P x N, one point per column
    Vector y;                          ///< targets, or +-1 labels
    std::vector<std::string> names;    ///< one per input column
    Task task = Task::Regression;
    std::optional<Preprocessing> preprocessing;

    Index inputs() const { return x.rows(); }
    Index points() const { return x.cols(); }

    /// Throws InvalidArgument on NaN/Inf, N < 2 or labels outside {-1, +1}.
    void validate() const;

    Dataset subset(const std::vector<Index>& columns) const;
};

/// f(x) = 10 sinc(x1) + 20 (x2 - 0.5)^2 + 10 x3 + 5 x4 with sinc(u) = sin(u)/u.
double sinc(double u);
double vapnik_function(const Eigen::Ref<const Vector>& x);

struct VapnikSample {
    Dataset data;
    Vector noiseless;                 ///< f(x) without noise
    std::vector<Index> truth{0, 1, 2, 3}; ///< zero-based relevant inputs
    std::uint64_t seed = 0;
    double noise_sd = 1.0;
};

/// X uniform on [0,1]^D, y = f(x) + noise_sd * N(0,1). Requires N >= 10, D >= 4.
VapnikSample generate_vapnik(Index n, std::uint64_t seed, double noise_sd = 1.0, Index d = 10);

struct CsvSchema {
    std::string target;                           ///< header name; empty = last column
    bool has_target = true;                       ///< false: every column is an input, y stays empty
    Task task = Task::Regression;
    std::map<std::string, double> label_map;      ///< e.g. {"spam", 1}, {"ham", -1}
};

/// Reads a header + rectangular numeric CSV. Errors cite 1-based row/column.
Dataset load_csv(const std::string& path, const CsvSchema& schema = {});
Dataset parse_csv(const std::string& text, const CsvSchema& schema = {});

/// Writes header (names..., target) and one row per point with 17 significant digits.
void write_csv(const std::string& path, const Dataset& ds, const std::string& target_name = "y");

struct PreprocessOptions {
    bool log1p = true;
};

/// log(1 + x) (where enabled and the column is non-negative), then centre and
/// scale to unit sample sd. Zero-variance columns are centred and flagged.
Dataset preprocess_log_standardize(const Dataset& ds, const PreprocessOptions& options = {});

// ---------------------------------------------------------------------------
// Cross-validation

struct CvPlan {
    Index folds = 10;
    std::uint64_t seed = 0;
    std::vector<Index> assignment; ///< fold of each point

    /// Random balanced assignment: fold sizes differ by at most one.
    static CvPlan make(Index n, Index folds, std::uint64_t seed);

    std::vector<Index> test_indices(Index fold) const;
    std::vector<Index> train_indices(Index fold) const;
};

struct CvEntry {
    std::size_t grid_index = 0;
    double score = 0.0;  ///< mean held-out score (NaN when invalid)
    double se = 0.0;     ///< standard error of the mean over folds
    std::vector<double> fold_scores;
    bool valid = true;
    std::string error;
};

struct CvResult {
    std::size_t best = 0;
    double best_score = 0.0;
    std::vector<CvEntry> table;
};

/// Scores one grid point on one fold: (training split, held-out split) -> score.
using FoldScorer = std::function<double(std::size_t grid_index, const Dataset& train, const Dataset& test)>;

/// Mean held-out score per grid point; argmin with ties to the first point.
/// A throwing fold marks its grid point invalid.
CvResult kfold_cv(const Dataset& ds, const CvPlan& plan, std::size_t grid_size, const FoldScorer& scorer);

/// Scores every grid point of one fold in a single call, so work shared
/// across the grid (Gram matrices, factorizations) is done once per fold.
/// A NaN entry marks that grid point invalid; a throw invalidates the fold
/// for every point.
using BatchFoldScorer = std::function<std::vector<double>(const Dataset& train, const Dataset& test)>;

CvResult kfold_cv_batch(const Dataset& ds, const CvPlan& plan, std::size_t grid_size, const BatchFoldScorer& scorer);

/// One-standard-error rule: among valid points whose score is within one
/// standard error of the best, take the one with the largest `simplicity`;
/// ties go to the lower score, then to the first point.
std::size_t one_standard_error_choice(const CvResult& cv, const std::vector<double>& simplicity);

// ---------------------------------------------------------------------------
// Metrics

struct ErrorMetrics {
    double l2 = 0.0;   ///< mean squared error
    double l1 = 0.0;   ///< mean absolute error
    double linf = 0.0; ///< max absolute error
};

ErrorMetrics error_metrics(const Vector& predicted, const Vector& reference);

} // namespace cwlssvm
