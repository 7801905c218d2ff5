#include "cwlssvm/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cwlssvm/error.hpp"

namespace cwlssvm {

AregSolution solve_areg_substrate(const Matrix& omega, const Vector& y, const Vector& c) {
    if (omega.rows() != y.size() || omega.cols() != y.size() || c.size() != y.size()) {
        throw InvalidArgument("solve_areg_substrate: dimension mismatch");
    }
    KktSystem sys;
    sys.border = Vector::Ones(y.size());
    sys.block = omega;
    sys.block.diagonal().array() += 1.0;
    sys.rhs = y - c;
    const SolveReport r = solve_kkt(sys);
    return {r.coef, r.bias, r.coef + c};
}

double default_prune_threshold(const Vector& y) {
    if (y.size() < 2) {
        return 0.0;
    }
    const double mean = y.mean();
    const double var = (y.array() - mean).square().sum() / static_cast<double>(y.size() - 1);
    return kPruneFraction * std::sqrt(var);
}

SparsityResult prune_components(const ComponentOutputs& outputs, double tau) {
    if (!(tau >= 0.0)) {
        throw InvalidArgument("prune_components: threshold must be non-negative");
    }
    const auto d = static_cast<Index>(outputs.train.size());
    SparsityResult s;
    s.threshold = tau;
    s.l1_norms = Vector::Zero(d);
    s.mean_abs = Vector::Zero(d);
    for (Index j = 0; j < d; ++j) {
        const Vector& out = outputs.train[static_cast<std::size_t>(j)];
        s.l1_norms[j] = out.lpNorm<1>();
        s.mean_abs[j] = out.size() > 0 ? s.l1_norms[j] / static_cast<double>(out.size()) : 0.0;
        if (s.mean_abs[j] > tau) {
            s.retained.push_back(j);
        }
    }
    return s;
}

ComponentOutputs component_outputs(const ComponentGrams& grams, const Vector& alpha) {
    ComponentOutputs out;
    for (const auto& g : grams.train) {
        out.train.push_back(g * alpha);
    }
    for (const auto& g : grams.val) {
        out.val.push_back(g * alpha);
    }
    return out;
}

// ---------------------------------------------------------------------------

ComponentSystem::ComponentSystem(std::vector<Matrix> blocks, Vector targets, Index train_blocks, double truncation,
                                 double range_truncation)
    : blocks_(std::move(blocks)), targets_(std::move(targets)) {
    const Index n = targets_.size();
    if (blocks_.empty()) {
        throw InvalidArgument("ComponentSystem: no blocks");
    }
    if (!targets_.allFinite()) {
        throw InvalidArgument("ComponentSystem: non-finite targets");
    }
    train_blocks_ = train_blocks < 0 ? static_cast<Index>(blocks_.size())
                                     : std::min<Index>(train_blocks, static_cast<Index>(blocks_.size()));
    if (train_blocks_ < 1) {
        throw InvalidArgument("ComponentSystem: need at least one training block");
    }
    fit_gram_ = Matrix::Zero(n, n);
    for (Index d = 0; d < train_blocks_; ++d) {
        const Matrix& g = blocks_[static_cast<std::size_t>(d)];
        if (g.rows() != n || g.cols() != n) {
            throw InvalidArgument("ComponentSystem: training block " + std::to_string(d + 1) + " is not N x N");
        }
        fit_gram_ += g;
    }
    const Matrix basis = sum_zero_basis(n);

    // G_d Z = L_d C_d with L_d orthonormal.
    std::vector<Matrix> lefts;
    std::vector<Matrix> rights;
    Index stacked = 0;
    for (const auto& g : blocks_) {
        if (g.cols() != n) {
            throw InvalidArgument("ComponentSystem: block has " + std::to_string(g.cols()) + " columns, expected " +
                                  std::to_string(n));
        }
        penalized_size_ += g.rows();
        const bool symmetric = g.rows() == g.cols() && g.isApprox(g.transpose(), 1e-14);
        Matrix left;
        Matrix right; // r x N
        if (symmetric) {
            const Eigen::SelfAdjointEigenSolver<Matrix> eig(g);
            const Vector& vals = eig.eigenvalues();
            const double top = vals.cwiseAbs().maxCoeff();
            std::vector<Index> keep;
            for (Index i = 0; i < vals.size(); ++i) {
                if (top > 0.0 && std::abs(vals[i]) > truncation * top) {
                    keep.push_back(i);
                }
            }
            const auto r = static_cast<Index>(keep.size());
            left.resize(g.rows(), r);
            right.resize(r, n);
            for (Index j = 0; j < r; ++j) {
                const Index i = keep[static_cast<std::size_t>(j)];
                left.col(j) = eig.eigenvectors().col(i);
                right.row(j) = vals[i] * eig.eigenvectors().col(i).transpose();
            }
        } else {
            const Eigen::BDCSVD<Matrix> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
            const Vector& sv = svd.singularValues();
            const double top = sv.size() > 0 ? sv[0] : 0.0;
            Index r = 0;
            while (r < sv.size() && top > 0.0 && sv[r] > truncation * top) {
                ++r;
            }
            left = svd.matrixU().leftCols(r);
            right = sv.head(r).asDiagonal() * svd.matrixV().leftCols(r).transpose();
        }
        rights.push_back(right * basis);
        lefts.push_back(std::move(left));
        stacked += rights.back().rows();
    }

    // Reduce beta to the range of the stacked C: beta = V S^-1 gamma, C beta = U gamma.
    Matrix c(stacked, n - 1);
    Index at = 0;
    for (const auto& r : rights) {
        c.middleRows(at, r.rows()) = r;
        at += r.rows();
    }
    const Eigen::BDCSVD<Matrix> svd(c, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const double top = sv.size() > 0 ? sv[0] : 0.0;
    Index rank = 0;
    while (rank < sv.size() && top > 0.0 && sv[rank] > range_truncation * top) {
        ++rank;
    }
    coords_ = basis * (svd.matrixV().leftCols(rank) * sv.head(rank).cwiseInverse().asDiagonal());

    at = 0;
    data_rows_ = Matrix::Zero(n, rank);
    for (std::size_t d = 0; d < lefts.size(); ++d) {
        Factor f;
        f.reduced = svd.matrixU().block(at, 0, rights[d].rows(), rank);
        at += rights[d].rows();
        f.left = std::move(lefts[d]);
        if (static_cast<Index>(d) < train_blocks_) {
            data_rows_.noalias() += f.left * f.reduced;
        }
        factors_.push_back(std::move(f));
    }
    data_rows_.rowwise() -= data_rows_.colwise().mean();
    data_rhs_ = targets_.array() - targets_.mean();
}

std::shared_ptr<const ComponentSystem> ComponentSystem::from_grams(const ComponentGrams& grams, const Vector& y,
                                                                   bool with_validation) {
    std::vector<Matrix> blocks = grams.train;
    if (with_validation) {
        if (!grams.has_validation()) {
            throw InvalidArgument("ComponentSystem: validation blocks requested but not present");
        }
        blocks.insert(blocks.end(), grams.val.begin(), grams.val.end());
    }
    return std::make_shared<const ComponentSystem>(std::move(blocks), y, grams.components());
}

std::vector<Index> ComponentSystem::groups() const {
    std::vector<Index> g;
    g.reserve(blocks_.size());
    for (const auto& b : blocks_) {
        g.push_back(b.rows());
    }
    return g;
}

ComponentSystem::Solution ComponentSystem::evaluate(Vector alpha, double bias) const {
    Solution s;
    s.penalized.resize(penalized_size_);
    Index at = 0;
    for (const auto& g : blocks_) {
        s.penalized.segment(at, g.rows()).noalias() = g * alpha;
        at += g.rows();
    }
    s.residual = targets_ - fit_gram_ * alpha;
    s.residual.array() -= bias;
    s.alpha = std::move(alpha);
    s.bias = bias;
    return s;
}

ComponentSystem::Solution ComponentSystem::solve(const Vector& weights, double data_scale) const {
    if (weights.size() != penalized_size_) {
        throw InvalidArgument("ComponentSystem::solve: weight vector has wrong length");
    }
    if (!(data_scale > 0.0)) {
        throw InvalidArgument("ComponentSystem::solve: data weight must be positive");
    }
    if (!weights.allFinite() || weights.minCoeff() < 0.0) {
        throw InvalidArgument("ComponentSystem::solve: weights must be finite and non-negative");
    }
    const Index n = points();
    const Index rank = coords_.cols();
    Index rows = n;
    for (const auto& f : factors_) {
        rows += f.reduced.rows();
    }
    Matrix a(rows, rank);
    Vector rhs = Vector::Zero(rows);
    const double root = std::sqrt(data_scale);
    a.topRows(n) = root * data_rows_;
    rhs.head(n) = root * data_rhs_;

    Index at = n;
    Index offset = 0;
    for (const auto& f : factors_) {
        const Index m = f.left.rows();
        const Index r = f.reduced.rows();
        if (r > 0) {
            // ||diag(sqrt w) L u|| = ||T u|| with T the triangular factor of diag(sqrt w) L.
            const Matrix scaled = weights.segment(offset, m).cwiseSqrt().asDiagonal() * f.left;
            const Eigen::HouseholderQR<Matrix> qr(scaled);
            const Matrix t = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
            a.middleRows(at, r).noalias() = t * f.reduced;
        }
        at += r;
        offset += m;
    }
    const Vector gamma = a.colPivHouseholderQr().solve(rhs);
    Vector alpha = coords_ * gamma;
    const double bias = (targets_ - fit_gram_ * alpha).mean();
    return evaluate(std::move(alpha), bias);
}

double ComponentLeastSquares::objective(const State& s) const {
    return 0.5 * s.penalized.lpNorm<1>() + data_objective(s);
}

// ---------------------------------------------------------------------------

namespace {

ComponentFit finish_fit(const ComponentSystem& system, const ComponentSystem::Solution& s,
                        std::optional<double> threshold, bool hard_threshold) {
    ComponentFit fit;
    fit.alpha = s.alpha;
    fit.bias = s.bias;
    fit.penalized = s.penalized;
    fit.residual = s.residual;
    Index at = 0;
    const auto& blocks = system.blocks();
    for (std::size_t d = 0; d < blocks.size(); ++d) {
        Vector out = s.penalized.segment(at, blocks[d].rows());
        if (hard_threshold) {
            out = out.unaryExpr([](double v) { return std::abs(v) <= kResidualFloor ? 0.0 : v; });
        }
        if (static_cast<Index>(d) < system.train_blocks()) {
            fit.outputs.train.push_back(std::move(out));
        } else {
            fit.outputs.val.push_back(std::move(out));
        }
        at += blocks[d].rows();
    }
    fit.sparsity = prune_components(fit.outputs, threshold.value_or(default_prune_threshold(system.targets())));
    fit.sparsity.energies.resize(system.train_blocks());
    for (Index d = 0; d < system.train_blocks(); ++d) {
        fit.sparsity.energies[d] = s.alpha.dot(fit.outputs.train[static_cast<std::size_t>(d)]);
    }
    return fit;
}

} // namespace

Vector l1_weights(const Vector& outputs) {
    // Majorizer of |v|/2 touching at v: weight 1 / (4 |v|).
    return outputs.unaryExpr([](double v) { return 0.25 / std::max(std::abs(v), kResidualFloor); });
}

ComponentFit fit_l1_components(std::shared_ptr<const ComponentSystem> system, double xi, const L1Options& options) {
    if (!(xi > 0.0) || !std::isfinite(xi)) {
        throw InvalidArgument("fit_l1_components: xi must be positive");
    }
    if (!(options.clamp_ratio > 0.0 && options.clamp_ratio < 1.0) || !(options.clamp_start >= 0.0)) {
        throw InvalidArgument("fit_l1_components: invalid clamp continuation");
    }
    const ComponentLeastSquares problem(system, 0.5 * xi);
    Vector start = options.initial_weights;
    if (start.size() == 0) {
        start = Vector::Constant(system->penalized_size(), 0.5);
    } else if (start.size() != system->penalized_size()) {
        throw InvalidArgument("fit_l1_components: initial weights have wrong length");
    }

    // Phase 1: shrink the clamp geometrically; phase 2: plain reweighting at the floor.
    int continuation = 0;
    const double top = problem.solve(start).penalized.cwiseAbs().maxCoeff();
    double clamp = options.clamp_start * top;
    if (clamp > kResidualFloor) {
        continuation = static_cast<int>(std::ceil(std::log(kResidualFloor / clamp) / std::log(options.clamp_ratio)));
    }
    auto shrinking = [&](const ComponentLeastSquares::State& s) {
        clamp = std::max(kResidualFloor, clamp * options.clamp_ratio);
        return Vector(s.penalized.unaryExpr([&](double v) { return 0.25 / std::max(std::abs(v), clamp); }));
    };
    int iterations = 0;
    if (continuation > 0) {
        const auto warm = irls_minimize(problem, start, shrinking,
                                        IrlsOptions{0.0, std::min(continuation, options.irls.max_iter)});
        start = l1_weights(warm.state.penalized);
        iterations += warm.iterations;
    }
    auto refresh = [](const ComponentLeastSquares::State& s) { return l1_weights(s.penalized); };
    IrlsOptions rest = options.irls;
    rest.max_iter = std::max(1, options.irls.max_iter - iterations);
    const auto result = irls_minimize(problem, start, refresh, rest);
    ComponentFit fit = finish_fit(*system, result.state, options.prune_threshold, true);
    fit.objective = result.objective;
    fit.iterations = iterations + result.iterations;
    fit.converged = result.converged;
    return fit;
}

ComponentFit fit_l1_components(const ComponentGrams& grams, const Vector& y, double xi, const L1Options& options) {
    if (grams.points() != y.size()) {
        throw InvalidArgument("fit_l1_components: Gram size and target length differ");
    }
    return fit_l1_components(ComponentSystem::from_grams(grams, y), xi, options);
}

ComponentFit fit_stp_components(std::shared_ptr<const ComponentSystem> system, double lambda,
                                const StpOptions& options) {
    if (!(lambda >= 0.0) || !(options.a > 0.0)) {
        throw InvalidArgument("fit_stp_components: need lambda >= 0 and a > 0");
    }
    const ComponentLeastSquares problem(system, 0.5);
    const PenaltyFn penalty = PenaltyFn::stp(lambda, options.a).scaled(0.5);
    const auto result = wgnc_minimize(problem, penalty, options.schedule, options.wgnc);
    ComponentFit fit = finish_fit(*system, result.state, options.prune_threshold, true);
    fit.objective = result.objective;
    fit.converged = result.converged;
    for (const auto& step : result.trace) {
        fit.iterations += step.inner_iterations;
    }
    fit.trace = result.trace;
    return fit;
}

ComponentFit fit_stp_components(const ComponentGrams& grams, const Vector& y, double lambda,
                                const StpOptions& options) {
    if (grams.points() != y.size()) {
        throw InvalidArgument("fit_stp_components: Gram size and target length differ");
    }
    return fit_stp_components(ComponentSystem::from_grams(grams, y), lambda, options);
}

double stp_objective(const ComponentGrams& grams, const Vector& y, const Vector& alpha, double bias, double lambda,
                     double a) {
    double total = 0.0;
    for (const auto& g : grams.train) {
        total += 0.5 * stp_penalty((g * alpha).lpNorm<1>(), lambda, a);
    }
    const Vector e = (y - grams.train_sum * alpha).array() - bias;
    return total + 0.5 * e.squaredNorm();
}

TrainedModel to_model(const ComponentFit& fit, Task task, KernelSpec spec, Matrix inputs, const Vector& y) {
    TrainedModel m;
    m.task = task;
    m.bias = fit.bias;
    if (task == Task::Classification) {
        // Regression on +-1 labels: sum_k alpha_k y_k K = sum_k alpha_reg_k K.
        m.alpha = fit.alpha.cwiseProduct(y);
        m.labels = y;
    } else {
        m.alpha = fit.alpha;
    }
    m.kernel = std::move(spec);
    m.inputs = std::move(inputs);
    m.retained = fit.sparsity.retained;
    m.component_norms = fit.sparsity.mean_abs;
    return m;
}

DualSolution refit_dual(const ComponentGrams& grams, const Vector& y, const std::vector<Index>& retained, double gamma) {
    if (grams.points() != y.size()) {
        throw InvalidArgument("refit_dual: Gram size and target length differ");
    }
    if (retained.empty()) {
        return {y.mean(), Vector::Zero(y.size())};
    }
    Matrix omega = Matrix::Zero(y.size(), y.size());
    for (Index d : retained) {
        omega += grams.train.at(static_cast<std::size_t>(d));
    }
    return solve_regression_dual(omega, y, gamma);
}

Vector refit_validation_predictions(const ComponentGrams& grams, const std::vector<Index>& retained,
                                    const DualSolution& dual) {
    Vector p = Vector::Constant(grams.val_sum.rows(), dual.bias);
    for (Index d : retained) {
        p.noalias() += grams.val.at(static_cast<std::size_t>(d)) * dual.alpha;
    }
    return p;
}

ComponentL1Problem l1_problem(const ComponentGrams& grams, const Vector& y, double xi) {
    return {grams.train, grams.train_sum, y, xi};
}

} // namespace cwlssvm
