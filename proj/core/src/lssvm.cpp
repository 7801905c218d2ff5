#include "cwlssvm/lssvm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cwlssvm/error.hpp"
#include "cwlssvm/solvers.hpp"

namespace cwlssvm {

std::string_view to_string(Task task) {
    return task == Task::Regression ? "regression" : "classification";
}

Task task_from_string(std::string_view name) {
    if (name == "regression") {
        return Task::Regression;
    }
    if (name == "classification") {
        return Task::Classification;
    }
    throw InvalidArgument("unknown task '" + std::string(name) + "'");
}

bool TrainedModel::is_retained(Index d) const {
    return std::binary_search(retained.begin(), retained.end(), d);
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw InvalidArgument(std::string(what) + " must be a positive finite number");
    }
}

void check_training_data(const Matrix& x, const Vector& y, const KernelSpec& spec) {
    if (x.cols() != y.size()) {
        throw InvalidArgument("training inputs have " + std::to_string(x.cols()) + " points but targets have " +
                              std::to_string(y.size()));
    }
    if (y.size() < 2) {
        throw InvalidArgument("training requires at least two points");
    }
    if (!y.allFinite()) {
        throw InvalidArgument("non-finite training target");
    }
    if (x.rows() < spec.required_inputs()) {
        throw InvalidArgument("training inputs have " + std::to_string(x.rows()) + " columns, kernel spec reads " +
                              std::to_string(spec.required_inputs()));
    }
}

std::vector<Index> all_components(Index d) {
    std::vector<Index> s(static_cast<std::size_t>(d));
    std::iota(s.begin(), s.end(), Index{0});
    return s;
}

Vector expansion_coefficients(const TrainedModel& model) {
    if (model.task == Task::Classification) {
        return model.alpha.cwiseProduct(model.labels);
    }
    return model.alpha;
}

} // namespace

void validate(const RegularizerConfig& config) {
    std::visit(overloaded{
                   [](const reg::Tikhonov& t) { require_positive(t.gamma, "gamma"); },
                   [](const reg::AReg& a) {
                       if (!a.c.allFinite()) {
                           throw InvalidArgument("AReg vector c must be finite");
                       }
                   },
                   [](const reg::L1Component& l) { require_positive(l.xi, "xi"); },
                   [](const reg::Stp& s) {
                       require_positive(s.lambda, "lambda");
                       require_positive(s.a, "a");
                   },
                   [](const reg::PerComponent& p) {
                       if (p.eta.size() == 0 || !(p.eta.array() > 0.0).all() || !p.eta.allFinite()) {
                           throw InvalidArgument("eta must be strictly positive");
                       }
                   },
               },
               config);
}

DualSolution solve_regression_dual(const Matrix& omega, const Vector& y, double gamma) {
    require_positive(gamma, "gamma");
    KktSystem sys;
    sys.border = Vector::Ones(y.size());
    sys.block = omega;
    sys.block.diagonal().array() += 1.0 / gamma;
    sys.rhs = y;
    const SolveReport r = solve_kkt(sys);
    return {r.bias, r.coef};
}

TrainedModel make_model(Task task, Vector alpha, double bias, KernelSpec spec, Matrix inputs, Vector labels) {
    TrainedModel m;
    m.task = task;
    m.alpha = std::move(alpha);
    m.bias = bias;
    m.retained = all_components(spec.size());
    m.kernel = std::move(spec);
    m.inputs = std::move(inputs);
    m.labels = std::move(labels);
    return m;
}

TrainedModel train_regressor(const Matrix& x, const Vector& y, const KernelSpec& spec, double gamma) {
    check_training_data(x, y, spec);
    const ComponentGrams grams = build_grams(x, std::nullopt, spec);
    DualSolution dual = solve_regression_dual(grams.train_sum, y, gamma);
    return make_model(Task::Regression, std::move(dual.alpha), dual.bias, spec, x);
}

TrainedModel train_regressor_without_bias(const Matrix& x, const Vector& y, const KernelSpec& spec, double gamma) {
    check_training_data(x, y, spec);
    require_positive(gamma, "gamma");
    const ComponentGrams grams = build_grams(x, std::nullopt, spec);
    Matrix a = grams.train_sum;
    a.diagonal().array() += 1.0 / gamma;
    const Eigen::PartialPivLU<Matrix> lu(a);
    if (!(lu.rcond() * kMaxConditionEstimate >= 1.0)) {
        throw NumericalError("train_regressor_without_bias: Omega + I/gamma is singular; decrease gamma");
    }
    return make_model(Task::Regression, lu.solve(y), 0.0, spec, x);
}

TrainedModel train_classifier(const Matrix& x, const Vector& y, const KernelSpec& spec, double gamma) {
    check_training_data(x, y, spec);
    require_positive(gamma, "gamma");
    bool has_pos = false;
    bool has_neg = false;
    for (Index k = 0; k < y.size(); ++k) {
        if (y[k] == 1.0) {
            has_pos = true;
        } else if (y[k] == -1.0) {
            has_neg = true;
        } else {
            throw InvalidArgument("classification labels must be -1 or +1 (point " + std::to_string(k + 1) + ")");
        }
    }
    if (!has_pos || !has_neg) {
        throw InvalidArgument("classification requires both classes in the training data");
    }
    const ComponentGrams grams = build_grams(x, std::nullopt, spec);
    KktSystem sys;
    sys.border = y;
    sys.block = (y * y.transpose()).cwiseProduct(grams.train_sum);
    sys.block.diagonal().array() += 1.0 / gamma;
    sys.rhs = Vector::Ones(y.size());
    const SolveReport r = solve_kkt(sys);
    return make_model(Task::Classification, r.coef, r.bias, spec, x, y);
}

Vector decision_values(const TrainedModel& model, const Matrix& x) {
    if (x.rows() < model.kernel.required_inputs()) {
        throw InvalidArgument("prediction inputs have " + std::to_string(x.rows()) + " features, model expects " +
                              std::to_string(model.kernel.required_inputs()));
    }
    if (!x.allFinite()) {
        throw InvalidArgument("prediction inputs must be finite");
    }
    const Vector coef = expansion_coefficients(model);
    Vector out = Vector::Constant(x.cols(), model.bias);
    for (Index d : model.retained) {
        out.noalias() += model.component_weight(d) * (component_gram(model.kernel[d], x, model.inputs) * coef);
    }
    return out;
}

double decision_value(const TrainedModel& model, const Eigen::Ref<const Vector>& x) {
    return decision_values(model, Matrix(x))[0];
}

Vector predict(const TrainedModel& model, const Matrix& x) {
    Vector v = decision_values(model, x);
    if (model.task == Task::Classification) {
        v = v.unaryExpr([](double s) { return s >= 0.0 ? 1.0 : -1.0; });
    }
    return v;
}

double predict(const TrainedModel& model, const Eigen::Ref<const Vector>& x) {
    return predict(model, Matrix(x))[0];
}

double predict_component(const TrainedModel& model, Index d, double u) {
    if (d < 0 || d >= model.components()) {
        throw InvalidArgument("predict_component: component " + std::to_string(d + 1) + " out of range 1.." +
                              std::to_string(model.components()));
    }
    if (!std::isfinite(u)) {
        throw InvalidArgument("predict_component: non-finite input");
    }
    if (!model.is_retained(d)) {
        return 0.0;
    }
    const ComponentKernel& k = model.kernel[d];
    const Vector coef = expansion_coefficients(model);
    double acc = 0.0;
    for (Index i = 0; i < model.points(); ++i) {
        acc += coef[i] * k(model.inputs(k.input, i), u);
    }
    return model.component_weight(d) * acc;
}

Matrix training_component_outputs(const TrainedModel& model) {
    const Vector coef = expansion_coefficients(model);
    Matrix out = Matrix::Zero(model.points(), model.components());
    for (Index d : model.retained) {
        out.col(d) = model.component_weight(d) * (component_gram(model.kernel[d], model.inputs, model.inputs) * coef);
    }
    return out;
}

Matrix smoother_matrix(const Matrix& omega, double gamma) {
    require_positive(gamma, "gamma");
    if (omega.rows() != omega.cols()) {
        throw InvalidArgument("smoother_matrix: Omega must be square");
    }
    Matrix a = omega;
    a.diagonal().array() += 1.0 / gamma;
    const Eigen::PartialPivLU<Matrix> lu(a);
    if (!(lu.rcond() * kMaxConditionEstimate >= 1.0)) {
        throw NumericalError("smoother_matrix: Omega + I/gamma is singular; decrease gamma");
    }
    // Omega and (Omega + I/gamma)^-1 commute, so S = (Omega + I/gamma)^-1 Omega.
    return lu.solve(omega);
}

} // namespace cwlssvm
