#include "cwlssvm/data.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "cwlssvm/error.hpp"
#include "cwlssvm/rng.hpp"

namespace cwlssvm {

Matrix Preprocessing::apply(const Matrix& x) const {
    if (x.rows() != mean.size()) {
        throw InvalidArgument("Preprocessing::apply: expected " + std::to_string(mean.size()) + " inputs, got " +
                              std::to_string(x.rows()));
    }
    Matrix out = x;
    for (Index j = 0; j < out.rows(); ++j) {
        if (log1p[static_cast<std::size_t>(j)]) {
            out.row(j) = out.row(j).array().log1p();
        }
        out.row(j) = (out.row(j).array() - mean[j]) / scale[j];
    }
    return out;
}

void Dataset::validate() const {
    if (x.cols() != y.size()) {
        throw InvalidArgument("Dataset: " + std::to_string(x.cols()) + " points but " + std::to_string(y.size()) +
                              " targets");
    }
    if (points() < 2) {
        throw InvalidArgument("Dataset: need at least 2 points");
    }
    if (!x.allFinite() || !y.allFinite()) {
        throw InvalidArgument("Dataset: non-finite values");
    }
    if (task == Task::Classification) {
        for (Index k = 0; k < y.size(); ++k) {
            if (y[k] != 1.0 && y[k] != -1.0) {
                throw InvalidArgument("Dataset: label " + std::to_string(y[k]) + " at point " + std::to_string(k + 1) +
                                      " is not +-1");
            }
        }
    }
}

Dataset Dataset::subset(const std::vector<Index>& columns) const {
    Dataset out;
    out.names = names;
    out.task = task;
    out.preprocessing = preprocessing;
    out.x.resize(x.rows(), static_cast<Index>(columns.size()));
    out.y.resize(static_cast<Index>(columns.size()));
    for (std::size_t i = 0; i < columns.size(); ++i) {
        out.x.col(static_cast<Index>(i)) = x.col(columns[i]);
        if (y.size() > 0) {
            out.y[static_cast<Index>(i)] = y[columns[i]];
        }
    }
    if (y.size() == 0) {
        out.y.resize(0);
    }
    return out;
}

double sinc(double u) { return u == 0.0 ? 1.0 : std::sin(u) / u; }

double vapnik_function(const Eigen::Ref<const Vector>& x) {
    if (x.size() < 4) {
        throw InvalidArgument("vapnik_function: need at least 4 inputs");
    }
    return 10.0 * sinc(x[0]) + 20.0 * (x[1] - 0.5) * (x[1] - 0.5) + 10.0 * x[2] + 5.0 * x[3];
}

VapnikSample generate_vapnik(Index n, std::uint64_t seed, double noise_sd, Index d) {
    if (n < 10) {
        throw InvalidArgument("generate_vapnik: need N >= 10");
    }
    if (d < 4) {
        throw InvalidArgument("generate_vapnik: need D >= 4");
    }
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
        throw InvalidArgument("generate_vapnik: noise_sd must be finite and non-negative");
    }
    Rng rng(seed);
    VapnikSample s;
    s.seed = seed;
    s.noise_sd = noise_sd;
    s.data.x.resize(d, n);
    for (Index k = 0; k < n; ++k) {
        for (Index j = 0; j < d; ++j) {
            s.data.x(j, k) = rng.uniform();
        }
    }
    s.noiseless.resize(n);
    s.data.y.resize(n);
    for (Index k = 0; k < n; ++k) {
        s.noiseless[k] = vapnik_function(s.data.x.col(k));
        s.data.y[k] = s.noiseless[k] + (noise_sd > 0.0 ? noise_sd * rng.normal() : 0.0);
    }
    for (Index j = 0; j < d; ++j) {
        s.data.names.push_back("x" + std::to_string(j + 1));
    }
    return s;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\"");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\"");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) {
        out.push_back(trim(cell));
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

std::optional<double> parse_number(const std::string& cell) {
    if (cell.empty()) {
        return std::nullopt;
    }
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size() || errno == ERANGE || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

std::string where(std::size_t row, std::size_t col) {
    return "row " + std::to_string(row) + ", column " + std::to_string(col);
}

} // namespace

Dataset parse_csv(const std::string& text, const CsvSchema& schema) {
    std::istringstream is(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(is, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            header = split(line);
            break;
        }
    }
    Dataset ds;
    ds.task = schema.task;
    if (header.empty()) {
        ds.x.resize(0, 0);
        return ds;
    }

    std::optional<std::size_t> target;
    if (schema.has_target) {
        if (schema.target.empty()) {
            target = header.size() - 1;
        } else {
            const auto it = std::find(header.begin(), header.end(), schema.target);
            if (it == header.end()) {
                throw IoError("CSV: target column '" + schema.target + "' not found in header");
            }
            target = static_cast<std::size_t>(it - header.begin());
        }
    }
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c != target) {
            ds.names.push_back(header[c]);
        }
    }
    const auto p = static_cast<Index>(ds.names.size());

    std::vector<std::vector<double>> columns;
    std::vector<double> targets;
    while (std::getline(is, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split(line);
        if (cells.size() != header.size()) {
            throw IoError("CSV: row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                          " cells, header has " + std::to_string(header.size()));
        }
        std::vector<double> point;
        point.reserve(static_cast<std::size_t>(p));
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c == target) {
                const auto mapped = schema.label_map.find(cells[c]);
                if (mapped != schema.label_map.end()) {
                    targets.push_back(mapped->second);
                    continue;
                }
            }
            const auto v = parse_number(cells[c]);
            if (!v) {
                throw IoError("CSV: cannot parse '" + cells[c] + "' at " + where(line_no, c + 1));
            }
            if (c == target) {
                targets.push_back(*v);
            } else {
                point.push_back(*v);
            }
        }
        columns.push_back(std::move(point));
    }

    ds.x.resize(p, static_cast<Index>(columns.size()));
    for (std::size_t k = 0; k < columns.size(); ++k) {
        for (Index j = 0; j < p; ++j) {
            ds.x(j, static_cast<Index>(k)) = columns[k][static_cast<std::size_t>(j)];
        }
    }
    ds.y = Eigen::Map<const Vector>(targets.data(), static_cast<Index>(targets.size()));
    if (ds.task == Task::Classification) {
        for (Index k = 0; k < ds.y.size(); ++k) {
            if (ds.y[k] != 1.0 && ds.y[k] != -1.0) {
                throw IoError("CSV: label at data row " + std::to_string(k + 1) +
                              " is not +-1; supply a label mapping");
            }
        }
    }
    return ds;
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_csv(buf.str(), schema);
    } catch (const IoError& e) {
        throw IoError(path + ": " + e.what());
    }
}

void write_csv(const std::string& path, const Dataset& ds, const std::string& target_name) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path + "'");
    }
    out << std::setprecision(17);
    for (Index j = 0; j < ds.inputs(); ++j) {
        out << (j < static_cast<Index>(ds.names.size()) ? ds.names[static_cast<std::size_t>(j)]
                                                        : "x" + std::to_string(j + 1))
            << ',';
    }
    out << target_name << '\n';
    for (Index k = 0; k < ds.points(); ++k) {
        for (Index j = 0; j < ds.inputs(); ++j) {
            out << ds.x(j, k) << ',';
        }
        out << ds.y[k] << '\n';
    }
    if (!out) {
        throw IoError("write failed for '" + path + "'");
    }
}

Dataset preprocess_log_standardize(const Dataset& ds, const PreprocessOptions& options) {
    const Index p = ds.inputs();
    const Index n = ds.points();
    if (n < 2) {
        throw InvalidArgument("preprocess_log_standardize: need at least 2 points");
    }
    Preprocessing pre;
    pre.log1p.assign(static_cast<std::size_t>(p), false);
    pre.zero_variance.assign(static_cast<std::size_t>(p), false);
    pre.mean = Vector::Zero(p);
    pre.scale = Vector::Ones(p);
    Dataset out = ds;
    for (Index j = 0; j < p; ++j) {
        auto row = out.x.row(j).array();
        if (options.log1p && row.minCoeff() >= 0.0) {
            pre.log1p[static_cast<std::size_t>(j)] = true;
            row = row.log1p();
        }
        const double mean = row.mean();
        const double var = (row - mean).square().sum() / static_cast<double>(n - 1);
        const double sd = std::sqrt(var);
        pre.mean[j] = mean;
        if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
            pre.zero_variance[static_cast<std::size_t>(j)] = true;
            row = row - mean;
        } else {
            pre.scale[j] = sd;
            row = (row - mean) / sd;
        }
    }
    out.preprocessing = std::move(pre);
    return out;
}

// ---------------------------------------------------------------------------
// Cross-validation

CvPlan CvPlan::make(Index n, Index folds, std::uint64_t seed) {
    if (folds < 2 || folds > n) {
        throw InvalidArgument("CvPlan: need 2 <= k <= N (k=" + std::to_string(folds) + ", N=" + std::to_string(n) +
                              ")");
    }
    CvPlan plan;
    plan.folds = folds;
    plan.seed = seed;
    plan.assignment.assign(static_cast<std::size_t>(n), 0);
    Rng rng(seed);
    const auto order = rng.permutation(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < order.size(); ++i) {
        plan.assignment[order[i]] = static_cast<Index>(i % static_cast<std::size_t>(folds));
    }
    return plan;
}

std::vector<Index> CvPlan::test_indices(Index fold) const {
    std::vector<Index> out;
    for (std::size_t k = 0; k < assignment.size(); ++k) {
        if (assignment[k] == fold) {
            out.push_back(static_cast<Index>(k));
        }
    }
    return out;
}

std::vector<Index> CvPlan::train_indices(Index fold) const {
    std::vector<Index> out;
    for (std::size_t k = 0; k < assignment.size(); ++k) {
        if (assignment[k] != fold) {
            out.push_back(static_cast<Index>(k));
        }
    }
    return out;
}

namespace {

void check_plan(const Dataset& ds, const CvPlan& plan, std::size_t grid_size) {
    if (grid_size == 0) {
        throw InvalidArgument("kfold_cv: empty grid");
    }
    if (static_cast<Index>(plan.assignment.size()) != ds.points()) {
        throw InvalidArgument("kfold_cv: plan does not match dataset size");
    }
}

// Fold scores are complete; fills means, standard errors and the argmin.
void summarize(CvResult& result, Index folds) {
    bool any = false;
    for (auto& entry : result.table) {
        if (!entry.valid) {
            entry.score = std::numeric_limits<double>::quiet_NaN();
            entry.se = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        double sum = 0.0;
        for (double v : entry.fold_scores) {
            sum += v;
        }
        entry.score = sum / static_cast<double>(folds);
        double ss = 0.0;
        for (double v : entry.fold_scores) {
            ss += (v - entry.score) * (v - entry.score);
        }
        entry.se = folds > 1 ? std::sqrt(ss / static_cast<double>(folds - 1) / static_cast<double>(folds)) : 0.0;
        if (!any || entry.score < result.best_score) {
            result.best = entry.grid_index;
            result.best_score = entry.score;
            any = true;
        }
    }
    if (!any) {
        throw NumericalError("kfold_cv: every grid point failed");
    }
}

CvResult empty_result(std::size_t grid_size) {
    CvResult result;
    result.table.resize(grid_size);
    for (std::size_t g = 0; g < grid_size; ++g) {
        result.table[g].grid_index = g;
    }
    return result;
}

} // namespace

CvResult kfold_cv(const Dataset& ds, const CvPlan& plan, std::size_t grid_size, const FoldScorer& scorer) {
    check_plan(ds, plan, grid_size);
    CvResult result = empty_result(grid_size);
    for (Index f = 0; f < plan.folds; ++f) {
        const Dataset train = ds.subset(plan.train_indices(f));
        const Dataset test = ds.subset(plan.test_indices(f));
        for (std::size_t g = 0; g < grid_size; ++g) {
            CvEntry& entry = result.table[g];
            if (!entry.valid) {
                continue;
            }
            try {
                const double s = scorer(g, train, test);
                if (!std::isfinite(s)) {
                    throw NumericalError("non-finite score");
                }
                entry.fold_scores.push_back(s);
            } catch (const std::exception& e) {
                entry.valid = false;
                entry.error = "fold " + std::to_string(f + 1) + ": " + e.what();
            }
        }
    }
    summarize(result, plan.folds);
    return result;
}

CvResult kfold_cv_batch(const Dataset& ds, const CvPlan& plan, std::size_t grid_size, const BatchFoldScorer& scorer) {
    check_plan(ds, plan, grid_size);
    CvResult result = empty_result(grid_size);
    for (Index f = 0; f < plan.folds; ++f) {
        const Dataset train = ds.subset(plan.train_indices(f));
        const Dataset test = ds.subset(plan.test_indices(f));
        std::vector<double> scores;
        std::string failure;
        try {
            scores = scorer(train, test);
            if (scores.size() != grid_size) {
                throw InvalidArgument("kfold_cv_batch: scorer returned " + std::to_string(scores.size()) +
                                      " scores for a grid of " + std::to_string(grid_size));
            }
        } catch (const InvalidArgument&) {
            throw;
        } catch (const std::exception& e) {
            failure = e.what();
        }
        for (std::size_t g = 0; g < grid_size; ++g) {
            CvEntry& entry = result.table[g];
            if (!entry.valid) {
                continue;
            }
            if (!failure.empty() || !std::isfinite(scores[g])) {
                entry.valid = false;
                entry.error = "fold " + std::to_string(f + 1) + ": " + (failure.empty() ? "training failed" : failure);
                continue;
            }
            entry.fold_scores.push_back(scores[g]);
        }
    }
    summarize(result, plan.folds);
    return result;
}

std::size_t one_standard_error_choice(const CvResult& cv, const std::vector<double>& simplicity) {
    if (simplicity.size() != cv.table.size()) {
        throw InvalidArgument("one_standard_error_choice: simplicity has the wrong length");
    }
    const CvEntry& best = cv.table.at(cv.best);
    const double limit = best.score + best.se;
    std::size_t pick = cv.best;
    for (const auto& e : cv.table) {
        if (!e.valid || e.score > limit) {
            continue;
        }
        const std::size_t g = e.grid_index;
        if (simplicity[g] > simplicity[pick] || (simplicity[g] == simplicity[pick] && e.score < cv.table[pick].score)) {
            pick = g;
        }
    }
    return pick;
}

ErrorMetrics error_metrics(const Vector& predicted, const Vector& reference) {
    if (predicted.size() != reference.size()) {
        throw InvalidArgument("error_metrics: length mismatch");
    }
    ErrorMetrics m;
    if (predicted.size() == 0) {
        return m;
    }
    const Vector d = (predicted - reference).cwiseAbs();
    m.l2 = d.squaredNorm() / static_cast<double>(d.size());
    m.l1 = d.mean();
    m.linf = d.maxCoeff();
    return m;
}

} // namespace cwlssvm
