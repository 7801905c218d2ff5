#include "cwlssvm/tuning.hpp"

#include <cmath>
#include <limits>

#include "cwlssvm/error.hpp"

namespace cwlssvm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool has_rbf(const KernelSpec& spec) {
    for (const auto& k : spec.components()) {
        if (k.family == KernelFamily::Rbf) {
            return true;
        }
    }
    return false;
}

std::vector<double> effective_sigmas(const KernelSpec& base, const std::vector<double>& sigmas) {
    if (sigmas.empty()) {
        throw InvalidArgument("tuning: empty sigma grid");
    }
    if (!has_rbf(base)) {
        return {sigmas.front()};
    }
    return sigmas;
}

void require_grid(const std::vector<double>& g, const char* name) {
    if (g.empty()) {
        throw InvalidArgument(std::string("tuning: empty ") + name + " grid");
    }
    for (double v : g) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw InvalidArgument(std::string("tuning: ") + name + " grid values must be positive");
        }
    }
}

std::size_t choose(const CvResult& cv, SelectionRule rule, const std::vector<double>& simplicity) {
    return rule == SelectionRule::Minimum ? cv.best : one_standard_error_choice(cv, simplicity);
}

// Latent predictions of a sparse fit on held-out points.
Vector sparse_latent(const ComponentGrams& grams, const ComponentFit& fit) {
    Vector p = Vector::Constant(grams.val_sum.rows(), fit.bias);
    for (Index d : fit.sparsity.retained) {
        p.noalias() += grams.val[static_cast<std::size_t>(d)] * fit.alpha;
    }
    return p;
}

} // namespace

double heldout_score(Task task, const Vector& latent, const Vector& y) {
    if (latent.size() != y.size() || y.size() == 0) {
        throw InvalidArgument("heldout_score: empty or mismatched vectors");
    }
    if (task == Task::Classification) {
        Index wrong = 0;
        for (Index i = 0; i < y.size(); ++i) {
            wrong += ((latent[i] >= 0.0 ? 1.0 : -1.0) != y[i]);
        }
        return static_cast<double>(wrong) / static_cast<double>(y.size());
    }
    return (latent - y).squaredNorm() / static_cast<double>(y.size());
}

Tuning cv_tune_lssvm(const Dataset& ds, const CvPlan& plan, const KernelSpec& base, const std::vector<double>& sigmas,
                     const std::vector<double>& gammas) {
    const auto sig = effective_sigmas(base, sigmas);
    require_grid(sig, "sigma");
    require_grid(gammas, "gamma");
    Tuning t;
    for (double s : sig) {
        for (double g : gammas) {
            t.grid.push_back({s, g, kNaN, kNaN, kNaN});
        }
    }
    const Task task = ds.task;
    t.cv = kfold_cv_batch(ds, plan, t.grid.size(), [&](const Dataset& train, const Dataset& test) {
        std::vector<double> scores;
        for (double s : sig) {
            const ComponentGrams grams = build_grams(train.x, test.x, base.with_sigma(s));
            for (double g : gammas) {
                try {
                    Vector latent;
                    if (task == Task::Classification) {
                        // LS-SVM classifier: alpha_k y_k is the expansion coefficient
                        KktSystem sys;
                        sys.border = train.y;
                        sys.block = (train.y * train.y.transpose()).cwiseProduct(grams.train_sum);
                        sys.block.diagonal().array() += 1.0 / g;
                        sys.rhs = Vector::Ones(train.y.size());
                        const SolveReport r = solve_kkt(sys);
                        latent = (grams.val_sum * r.coef.cwiseProduct(train.y)).array() + r.bias;
                    } else {
                        const DualSolution dual = solve_regression_dual(grams.train_sum, train.y, g);
                        latent = (grams.val_sum * dual.alpha).array() + dual.bias;
                    }
                    scores.push_back(heldout_score(task, latent, test.y));
                } catch (const NumericalError&) {
                    scores.push_back(kNaN);
                }
            }
        }
        return scores;
    });
    t.chosen = t.cv.best;
    t.params = t.grid[t.chosen];
    const KernelSpec spec = base.with_sigma(t.params.sigma);
    t.model = task == Task::Classification ? train_classifier(ds.x, ds.y, spec, t.params.gamma)
                                           : train_regressor(ds.x, ds.y, spec, t.params.gamma);
    return t;
}

Tuning cv_tune_l1(const Dataset& ds, const CvPlan& plan, const KernelSpec& base, const std::vector<double>& sigmas,
                  const std::vector<double>& xis, const std::vector<double>& gammas, SelectionRule rule,
                  const L1Options& options) {
    const auto sig = effective_sigmas(base, sigmas);
    require_grid(sig, "sigma");
    require_grid(xis, "xi");
    require_grid(gammas, "gamma");
    Tuning t;
    std::vector<double> simplicity;
    for (double s : sig) {
        for (double x : xis) {
            for (double g : gammas) {
                t.grid.push_back({s, g, x, kNaN, kNaN});
                simplicity.push_back(-x);
            }
        }
    }
    const Task task = ds.task;
    t.cv = kfold_cv_batch(ds, plan, t.grid.size(), [&](const Dataset& train, const Dataset& test) {
        std::vector<double> scores;
        for (double s : sig) {
            const ComponentGrams grams = build_grams(train.x, test.x, base.with_sigma(s));
            const auto system = ComponentSystem::from_grams(grams, train.y);
            for (double x : xis) {
                std::optional<ComponentFit> fit;
                try {
                    fit = fit_l1_components(system, x, options);
                } catch (const NumericalError&) {
                }
                for (double g : gammas) {
                    if (!fit) {
                        scores.push_back(kNaN);
                        continue;
                    }
                    try {
                        const DualSolution dual = refit_dual(grams, train.y, fit->sparsity.retained, g);
                        scores.push_back(heldout_score(
                            task, refit_validation_predictions(grams, fit->sparsity.retained, dual), test.y));
                    } catch (const NumericalError&) {
                        scores.push_back(kNaN);
                    }
                }
            }
        }
        return scores;
    });
    t.chosen = choose(t.cv, rule, simplicity);
    t.params = t.grid[t.chosen];
    const KernelSpec spec = base.with_sigma(t.params.sigma);
    t.fit = fit_l1_components(build_grams(ds.x, std::nullopt, spec), ds.y, t.params.xi, options);
    t.model = to_model(*t.fit, task, spec, ds.x, ds.y);
    return t;
}

Tuning cv_tune_stp(const Dataset& ds, const CvPlan& plan, const KernelSpec& base, const std::vector<double>& sigmas,
                   const std::vector<double>& lambdas, const std::vector<double>& as, SelectionRule rule,
                   const StpOptions& options) {
    const auto sig = effective_sigmas(base, sigmas);
    require_grid(sig, "sigma");
    require_grid(lambdas, "lambda");
    require_grid(as, "a");
    Tuning t;
    std::vector<double> simplicity;
    for (double s : sig) {
        for (double a : as) {
            for (double l : lambdas) {
                t.grid.push_back({s, kNaN, kNaN, l, a});
                simplicity.push_back(l);
            }
        }
    }
    const Task task = ds.task;
    t.cv = kfold_cv_batch(ds, plan, t.grid.size(), [&](const Dataset& train, const Dataset& test) {
        std::vector<double> scores;
        for (double s : sig) {
            const ComponentGrams grams = build_grams(train.x, test.x, base.with_sigma(s));
            const auto system = ComponentSystem::from_grams(grams, train.y);
            for (double a : as) {
                StpOptions o = options;
                o.a = a;
                for (double l : lambdas) {
                    try {
                        const ComponentFit fit = fit_stp_components(system, l, o);
                        scores.push_back(heldout_score(task, sparse_latent(grams, fit), test.y));
                    } catch (const NumericalError&) {
                        scores.push_back(kNaN);
                    }
                }
            }
        }
        return scores;
    });
    t.chosen = choose(t.cv, rule, simplicity);
    t.params = t.grid[t.chosen];
    const KernelSpec spec = base.with_sigma(t.params.sigma);
    StpOptions o = options;
    o.a = t.params.a;
    t.fit = fit_stp_components(build_grams(ds.x, std::nullopt, spec), ds.y, t.params.lambda, o);
    t.model = to_model(*t.fit, task, spec, ds.x, ds.y);
    return t;
}

Vector FullRbfModel::predict(const Matrix& x) const {
    if (x.rows() != inputs.rows()) {
        throw InvalidArgument("FullRbfModel::predict: expected " + std::to_string(inputs.rows()) + " features");
    }
    return (joint_rbf_gram(x, inputs, sigma) * alpha).array() + bias;
}

FullRbfModel train_full_rbf(const Matrix& x, const Vector& y, double sigma, double gamma) {
    if (x.cols() != y.size()) {
        throw InvalidArgument("train_full_rbf: inputs and targets differ in length");
    }
    FullRbfModel m;
    m.inputs = x;
    m.sigma = sigma;
    const DualSolution dual = solve_regression_dual(joint_rbf_gram(x, x, sigma), y, gamma);
    m.alpha = dual.alpha;
    m.bias = dual.bias;
    return m;
}

FullRbfTuning cv_tune_full_rbf(const Dataset& ds, const CvPlan& plan, const std::vector<double>& sigmas,
                               const std::vector<double>& gammas) {
    require_grid(sigmas, "sigma");
    require_grid(gammas, "gamma");
    FullRbfTuning t;
    for (double s : sigmas) {
        for (double g : gammas) {
            t.grid.push_back({s, g, kNaN, kNaN, kNaN});
        }
    }
    t.cv = kfold_cv_batch(ds, plan, t.grid.size(), [&](const Dataset& train, const Dataset& test) {
        std::vector<double> scores;
        for (double s : sigmas) {
            const Matrix k = joint_rbf_gram(train.x, train.x, s);
            const Matrix kv = joint_rbf_gram(test.x, train.x, s);
            for (double g : gammas) {
                try {
                    const DualSolution dual = solve_regression_dual(k, train.y, g);
                    scores.push_back(heldout_score(Task::Regression, (kv * dual.alpha).array() + dual.bias, test.y));
                } catch (const NumericalError&) {
                    scores.push_back(kNaN);
                }
            }
        }
        return scores;
    });
    t.params = t.grid[t.cv.best];
    t.model = train_full_rbf(ds.x, ds.y, t.params.sigma, t.params.gamma);
    return t;
}

} // namespace cwlssvm
