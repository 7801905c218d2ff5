#include "cwlssvm/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "cwlssvm/error.hpp"

namespace cwlssvm {

void ValidationSplit::validate(Index inputs, bool allow_empty) const {
    if (x.cols() != y.size()) {
        throw InvalidArgument("validation split has " + std::to_string(x.cols()) + " points but " +
                              std::to_string(y.size()) + " targets");
    }
    if (!allow_empty && y.size() < 1) {
        throw InvalidArgument("validation split is empty");
    }
    if (y.size() > 0 && x.rows() != inputs) {
        throw InvalidArgument("validation inputs have " + std::to_string(x.rows()) + " features, expected " +
                              std::to_string(inputs));
    }
    if (!x.allFinite() || !y.allFinite()) {
        throw InvalidArgument("validation split contains non-finite values");
    }
}

void validate_eta(const Vector& eta, Index components) {
    if (eta.size() != components) {
        throw InvalidArgument("eta has " + std::to_string(eta.size()) + " entries, expected " +
                              std::to_string(components));
    }
    for (Index d = 0; d < eta.size(); ++d) {
        if (!(eta[d] > 0.0) || !std::isfinite(eta[d])) {
            throw InvalidArgument("eta_" + std::to_string(d + 1) + " must be strictly positive");
        }
    }
}

std::vector<Index> eta_selection(const Vector& eta) {
    std::vector<Index> out;
    if (eta.size() == 0) {
        return out;
    }
    const double cut = kEtaSelectFraction * eta.maxCoeff();
    for (Index d = 0; d < eta.size(); ++d) {
        if (eta[d] >= cut) {
            out.push_back(d);
        }
    }
    return out;
}

double validation_mse(const TrainedModel& model, const ValidationSplit& split) {
    if (split.points() == 0) {
        return 0.0;
    }
    return (predict(model, split.x) - split.y).squaredNorm() / static_cast<double>(split.points());
}

GammaTuning tune_gamma_grid(const Matrix& x, const Vector& y, const ValidationSplit& split, const KernelSpec& spec,
                            const std::vector<double>& gamma_grid) {
    if (gamma_grid.empty()) {
        throw InvalidArgument("tune_gamma_grid: empty gamma grid");
    }
    for (double g : gamma_grid) {
        if (!(g > 0.0) || !std::isfinite(g)) {
            throw InvalidArgument("tune_gamma_grid: gamma grid values must be positive");
        }
    }
    split.validate(x.rows());
    const ComponentGrams grams = build_grams(x, split.x, spec);

    GammaTuning out;
    out.grid = gamma_grid;
    out.scores.assign(gamma_grid.size(), std::numeric_limits<double>::quiet_NaN());
    std::size_t best = gamma_grid.size();
    for (std::size_t i = 0; i < gamma_grid.size(); ++i) {
        try {
            const DualSolution dual = solve_regression_dual(grams.train_sum, y, gamma_grid[i]);
            const Vector pred = (grams.val_sum * dual.alpha).array() + dual.bias;
            out.scores[i] = (pred - split.y).squaredNorm() / static_cast<double>(split.points());
        } catch (const Error& e) {
            out.failures.push_back("gamma=" + std::to_string(gamma_grid[i]) + ": " + e.what());
            continue;
        }
        if (best == gamma_grid.size() || out.scores[i] < out.scores[best] ||
            (out.scores[i] == out.scores[best] && gamma_grid[i] < gamma_grid[best])) {
            best = i;
        }
    }
    if (best == gamma_grid.size()) {
        throw NumericalError("tune_gamma_grid: training failed on every grid point");
    }
    out.gamma = gamma_grid[best];
    out.model = train_regressor(x, y, spec, out.gamma);
    return out;
}

AregFusion fuse_areg_select(const ComponentGrams& grams, const Vector& y, const Vector& y_val, double xi,
                            const L1Options& options) {
    if (grams.points() != y.size()) {
        throw InvalidArgument("fuse_areg_select: Gram size and target length differ");
    }
    const bool with_val = y_val.size() > 0;
    if (with_val && (grams.val.size() != grams.train.size() || grams.val_sum.rows() != y_val.size())) {
        throw InvalidArgument("fuse_areg_select: validation Gram blocks do not match the validation targets");
    }
    AregFusion out;
    out.fit = fit_l1_components(ComponentSystem::from_grams(grams, y, with_val), xi, options);
    out.c = out.fit.residual - out.fit.alpha;
    if (with_val) {
        Vector pred = Vector::Constant(y_val.size(), out.fit.bias);
        for (Index d : out.fit.sparsity.retained) {
            pred += grams.val[static_cast<std::size_t>(d)] * out.fit.alpha;
        }
        out.validation_mse = (pred - y_val).squaredNorm() / static_cast<double>(y_val.size());
    }
    return out;
}

AregTuning fuse_areg_tuned(const Matrix& x, const Vector& y, const ValidationSplit& split, const KernelSpec& spec,
                           const std::vector<double>& xi_grid, const std::vector<double>& gamma_grid,
                           const L1Options& options) {
    if (xi_grid.empty() || gamma_grid.empty()) {
        throw InvalidArgument("fuse_areg_tuned: empty grid");
    }
    split.validate(x.rows());
    const ComponentGrams grams = build_grams(x, split.x, spec);
    AregTuning out;
    out.xi_grid = xi_grid;
    out.scores.assign(xi_grid.size(), std::numeric_limits<double>::quiet_NaN());
    out.selections.resize(xi_grid.size());
    std::size_t best = xi_grid.size();
    double best_gamma = 0.0;
    for (std::size_t i = 0; i < xi_grid.size(); ++i) {
        AregFusion f;
        try {
            f = fuse_areg_select(grams, y, split.y, xi_grid[i], options);
        } catch (const NumericalError&) {
            continue;
        }
        out.selections[i] = f.fit.sparsity.retained;
        double score = std::numeric_limits<double>::infinity();
        double gamma = 0.0;
        for (double g : gamma_grid) {
            try {
                const DualSolution dual = refit_dual(grams, y, f.fit.sparsity.retained, g);
                const Vector p = refit_validation_predictions(grams, f.fit.sparsity.retained, dual);
                const double mse = (p - split.y).squaredNorm() / static_cast<double>(split.points());
                if (mse < score) {
                    score = mse;
                    gamma = g;
                }
            } catch (const NumericalError&) {
            }
        }
        if (!std::isfinite(score)) {
            continue;
        }
        out.scores[i] = score;
        if (best == xi_grid.size() || score < out.scores[best]) {
            best = i;
            best_gamma = gamma;
            out.fusion = std::move(f);
        }
    }
    if (best == xi_grid.size()) {
        throw NumericalError("fuse_areg_tuned: every grid point failed");
    }
    out.xi = xi_grid[best];
    out.gamma = best_gamma;
    const auto& keep = out.fusion.fit.sparsity.retained;
    DualSolution dual = refit_dual(grams, y, keep, best_gamma);
    out.model = make_model(Task::Regression, std::move(dual.alpha), dual.bias, spec, x);
    out.model.retained = keep;
    out.model.component_norms = out.fusion.fit.sparsity.mean_abs;
    return out;
}

namespace {

Matrix weighted_sum(const std::vector<Matrix>& blocks, const Vector& eta) {
    Matrix m = Matrix::Zero(blocks.front().rows(), blocks.front().cols());
    for (std::size_t d = 0; d < blocks.size(); ++d) {
        m.noalias() += eta[static_cast<Index>(d)] * blocks[d];
    }
    return m;
}

// Validation predictions of the eta model and their MSE.
struct EtaEval {
    DualSolution dual;
    double mse = std::numeric_limits<double>::infinity();
};

EtaEval evaluate_eta(const ComponentGrams& grams, const Vector& y, const Vector& y_val, const Vector& eta) {
    EtaEval ev;
    ev.dual = solve_eta_dual(grams, y, eta);
    const Vector pred = (weighted_sum(grams.val, eta) * ev.dual.alpha).array() + ev.dual.bias;
    ev.mse = (pred - y_val).squaredNorm() / static_cast<double>(y_val.size());
    return ev;
}

bool better(double mse, const Vector& eta, double best_mse, const Vector& best_eta) {
    return mse < best_mse || (mse == best_mse && eta.lpNorm<1>() < best_eta.lpNorm<1>());
}

EtaFusion finish_eta(const Matrix& x, const KernelSpec& spec, Vector eta, EtaEval ev) {
    EtaFusion out;
    out.eta = std::move(eta);
    out.dual = ev.dual;
    out.validation_mse = ev.mse;
    out.selected = eta_selection(out.eta);
    out.model = make_model(Task::Regression, ev.dual.alpha, ev.dual.bias, spec, x);
    out.model.eta = out.eta;
    return out;
}

} // namespace

DualSolution solve_eta_dual(const ComponentGrams& grams, const Vector& y, const Vector& eta) {
    validate_eta(eta, grams.components());
    if (grams.points() != y.size()) {
        throw InvalidArgument("train_eta_model: Gram size and target length differ");
    }
    // sum_d eta_d Omega^d + I is the Tikhonov system with unit gamma.
    return solve_regression_dual(weighted_sum(grams.train, eta), y, 1.0);
}

TrainedModel train_eta_model(const Matrix& x, const Vector& y, const KernelSpec& spec, const Vector& eta) {
    if (x.cols() != y.size()) {
        throw InvalidArgument("train_eta_model: inputs and targets differ in length");
    }
    const ComponentGrams grams = build_grams(x, std::nullopt, spec);
    DualSolution dual = solve_eta_dual(grams, y, eta);
    TrainedModel m = make_model(Task::Regression, std::move(dual.alpha), dual.bias, spec, x);
    m.eta = eta;
    return m;
}

EtaFusion fuse_eta_als(const Matrix& x, const Vector& y, const ValidationSplit& split, const KernelSpec& spec,
                       const Vector& init_eta, const EtaAlsOptions& options) {
    split.validate(x.rows());
    validate_eta(init_eta, spec.size());
    if (options.max_outer < 0 || options.max_backtrack < 0) {
        throw InvalidArgument("fuse_eta_als: iteration limits must be non-negative");
    }
    const ComponentGrams grams = build_grams(x, split.x, spec);
    const Index dims = spec.size();

    Vector eta = init_eta.cwiseMax(kEtaFloor);
    EtaEval cur = evaluate_eta(grams, y, split.y, eta);
    std::vector<EtaStep> trace{{0, cur.mse, eta, 0.0}};
    bool converged = false;
    bool stalled = false;

    for (int it = 1; it <= options.max_outer; ++it) {
        // eta step: validation predictions are linear in eta for fixed alpha, b
        Matrix a(split.points(), dims);
        for (Index d = 0; d < dims; ++d) {
            a.col(d) = grams.val[static_cast<std::size_t>(d)] * cur.dual.alpha;
        }
        const Vector target = (split.y.array() - cur.dual.bias).matrix() - a * Vector::Constant(dims, kEtaFloor);
        const Vector proposal = nnls(a, target).x.array() + kEtaFloor;

        double step = 1.0;
        bool accepted = false;
        Vector next;
        EtaEval trial;
        for (int k = 0; k <= options.max_backtrack; ++k, step *= 0.5) {
            next = (eta + step * (proposal - eta)).cwiseMax(kEtaFloor);
            try {
                trial = evaluate_eta(grams, y, split.y, next);
            } catch (const NumericalError&) {
                continue;
            }
            if (better(trial.mse, next, cur.mse, eta)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            stalled = true;
            break;
        }
        const double gain = cur.mse - trial.mse;
        eta = next;
        cur = trial;
        trace.push_back({it, cur.mse, eta, step});
        if (gain <= options.tol * std::max(cur.mse, std::numeric_limits<double>::min())) {
            converged = true;
            break;
        }
    }
    EtaFusion out = finish_eta(x, spec, eta, cur);
    out.trace = std::move(trace);
    out.converged = converged;
    out.stalled = stalled;
    return out;
}

EtaFusion fuse_eta_grid(const Matrix& x, const Vector& y, const ValidationSplit& split, const KernelSpec& spec,
                        const std::vector<double>& eta_grid, int max_sweeps) {
    split.validate(x.rows());
    if (eta_grid.empty()) {
        throw InvalidArgument("fuse_eta_grid: empty grid");
    }
    for (double g : eta_grid) {
        if (!(g > 0.0)) {
            throw InvalidArgument("fuse_eta_grid: grid values must be positive");
        }
    }
    const ComponentGrams grams = build_grams(x, split.x, spec);
    const Index dims = spec.size();

    // start from the best common value
    Vector eta;
    EtaEval cur;
    for (double g : eta_grid) {
        const Vector cand = Vector::Constant(dims, g);
        try {
            EtaEval ev = evaluate_eta(grams, y, split.y, cand);
            if (eta.size() == 0 || better(ev.mse, cand, cur.mse, eta)) {
                eta = cand;
                cur = ev;
            }
        } catch (const NumericalError&) {
        }
    }
    if (eta.size() == 0) {
        throw NumericalError("fuse_eta_grid: training failed on every grid point");
    }
    std::vector<EtaStep> trace{{0, cur.mse, eta, 0.0}};
    bool changed = true;
    int sweep = 0;
    for (; sweep < max_sweeps && changed; ++sweep) {
        changed = false;
        for (Index d = 0; d < dims; ++d) {
            for (double g : eta_grid) {
                Vector cand = eta;
                cand[d] = g;
                try {
                    EtaEval ev = evaluate_eta(grams, y, split.y, cand);
                    if (better(ev.mse, cand, cur.mse, eta)) {
                        eta = cand;
                        cur = ev;
                        changed = true;
                    }
                } catch (const NumericalError&) {
                }
            }
        }
        if (changed) {
            trace.push_back({sweep + 1, cur.mse, eta, 1.0});
        }
    }
    EtaFusion out = finish_eta(x, spec, eta, cur);
    out.trace = std::move(trace);
    out.converged = !changed;
    return out;
}

std::vector<double> log_grid(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi >= lo) || count < 1) {
        throw InvalidArgument("log_grid: need 0 < lo <= hi and count >= 1");
    }
    std::vector<double> g(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        g[static_cast<std::size_t>(i)] = std::pow(10.0, std::log10(lo) + t * (std::log10(hi) - std::log10(lo)));
    }
    return g;
}

void write_eta_trace_csv(std::ostream& os, const std::vector<EtaStep>& trace) {
    const auto prec = os.precision(17);
    os << "iteration,validation_mse,step";
    const Index dims = trace.empty() ? 0 : trace.front().eta.size();
    for (Index d = 0; d < dims; ++d) {
        os << ",eta_" << d + 1;
    }
    os << '\n';
    for (const auto& s : trace) {
        os << s.iteration << ',' << s.validation_mse << ',' << s.step;
        for (Index d = 0; d < s.eta.size(); ++d) {
            os << ',' << s.eta[d];
        }
        os << '\n';
    }
    os.precision(prec);
}

} // namespace cwlssvm
