#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cwlssvm/data.hpp"
#include "cwlssvm/error.hpp"
#include "cwlssvm/fusion.hpp"
#include "cwlssvm/kernels.hpp"
#include "cwlssvm/lssvm.hpp"
#include "cwlssvm/model_io.hpp"
#include "cwlssvm/sparse.hpp"
#include "cwlssvm/tuning.hpp"

namespace cwlssvm::cli {

using nlohmann::json;

namespace {

constexpr int kCurvePoints = 200;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Option structs

struct GenOptions {
    Index n = 100;
    std::uint64_t seed = 0;
    Index d = 10;
    double noise_sd = 1.0;
    std::string out = "vapnik";
};

struct FitOptions {
    std::string data;
    std::string target;
    std::string task = "regression";
    std::vector<std::string> label_map;
    bool preprocess = false;
    bool no_log1p = false;
    std::string method;
    std::string kernel = "rbf";
    std::optional<double> sigma;
    std::vector<double> sigma_grid;
    std::optional<double> gamma;
    std::vector<double> gamma_grid;
    std::optional<double> xi;
    std::vector<double> xi_grid;
    std::optional<double> lambda;
    std::vector<double> lambda_grid;
    std::optional<double> a;
    std::vector<double> a_grid;
    int cv = 0;
    std::string rule = "1se";
    std::uint64_t seed = 0;
    std::string validation;
    std::string test;
    int max_outer = 100;
    double tol = 1e-8;
    std::string out = "model";
};

struct PredictOptions {
    std::string model;
    std::string data;
    std::string target;
    std::string out;
};

// ---------------------------------------------------------------------------
// Small helpers

json vec_json(const Vector& v) {
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) {
        a.push_back(v[i]);
    }
    return a;
}

json one_based(const std::vector<Index>& idx) {
    json a = json::array();
    for (Index i : idx) {
        a.push_back(i + 1);
    }
    return a;
}

json nan_or(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    return os;
}

void write_text(const std::string& path, const std::string& text) {
    auto os = open_out(path);
    os << text;
    if (!os) {
        throw IoError("failed writing '" + path + "'");
    }
}

std::string read_text(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

double sample_sd(const Vector& y) {
    if (y.size() < 2) {
        return 0.0;
    }
    return std::sqrt((y.array() - y.mean()).square().sum() / static_cast<double>(y.size() - 1));
}

// ---------------------------------------------------------------------------
// gen

int cmd_gen(const GenOptions& o) {
    const VapnikSample s = generate_vapnik(o.n, o.seed, o.noise_sd, o.d);
    write_csv(o.out + ".csv", s.data, "y");
    json config{{"command", "gen"}, {"n", o.n}, {"seed", o.seed}, {"d", o.d}, {"noise_sd", o.noise_sd},
                {"out", o.out}};
    json truth{{"config", config},
               {"true_components", one_based(s.truth)},
               {"noiseless", vec_json(s.noiseless)},
               {"seed", o.seed}};
    write_text(o.out + ".truth.json", truth.dump(2) + "\n");
    return kExitOk;
}

// ---------------------------------------------------------------------------
// fit

json fit_config(const FitOptions& o) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json lm = json::object();
    for (const auto& e : o.label_map) {
        const auto eq = e.find('=');
        lm[e.substr(0, eq)] = std::stod(e.substr(eq + 1));
    }
    return json{{"command", "fit"},
                {"data", o.data},
                {"target", o.target},
                {"task", o.task},
                {"label_map", lm},
                {"preprocess", o.preprocess},
                {"log1p", !o.no_log1p},
                {"method", o.method},
                {"kernel", o.kernel},
                {"sigma", opt(o.sigma)},
                {"sigma_grid", o.sigma_grid},
                {"gamma", opt(o.gamma)},
                {"gamma_grid", o.gamma_grid},
                {"xi", opt(o.xi)},
                {"xi_grid", o.xi_grid},
                {"lambda", opt(o.lambda)},
                {"lambda_grid", o.lambda_grid},
                {"a", opt(o.a)},
                {"a_grid", o.a_grid},
                {"cv", o.cv},
                {"rule", o.rule},
                {"seed", o.seed},
                {"validation", o.validation},
                {"test", o.test},
                {"max_outer", o.max_outer},
                {"tol", o.tol},
                {"out", o.out}};
}

void check_fit_options(const FitOptions& o) {
    const bool fusion = o.method == "fuse-areg" || o.method == "fuse-eta";
    if (o.method == "lssvm" && !o.gamma && o.cv == 0) {
        throw UsageError("method lssvm needs --gamma or --cv");
    }
    if (o.method == "l1" && !o.xi && o.cv == 0) {
        throw UsageError("method l1 needs --xi (or --cv with --xi-grid)");
    }
    if (fusion && o.validation.empty()) {
        throw UsageError("method " + o.method + " needs --validation");
    }
    if (fusion && o.cv != 0) {
        throw UsageError("method " + o.method + " tunes on --validation; --cv does not apply");
    }
    if (fusion && o.task != "regression") {
        throw UsageError("method " + o.method + " supports regression only");
    }
    if (o.cv == 1 || o.cv < 0) {
        throw UsageError("--cv needs at least 2 folds");
    }
    for (const auto& e : o.label_map) {
        const auto eq = e.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw UsageError("--label-map entries look like name=value, got '" + e + "'");
        }
        try {
            std::size_t used = 0;
            std::stod(e.substr(eq + 1), &used);
            if (used != e.size() - eq - 1) {
                throw std::invalid_argument("trailing");
            }
        } catch (const std::exception&) {
            throw UsageError("--label-map value in '" + e + "' is not a number");
        }
    }
}

CsvSchema fit_schema(const FitOptions& o) {
    CsvSchema s;
    s.target = o.target;
    s.task = task_from_string(o.task);
    for (const auto& e : o.label_map) {
        const auto eq = e.find('=');
        s.label_map[e.substr(0, eq)] = std::stod(e.substr(eq + 1));
    }
    return s;
}

KernelSpec base_kernel(const std::string& name, Index inputs, double sigma) {
    if (name == "rbf") {
        return KernelSpec::uniform_rbf(inputs, sigma);
    }
    if (name == "linear") {
        return KernelSpec::uniform_linear(inputs);
    }
    return KernelSpec::rbf_linear_library(inputs, sigma);
}

std::vector<double> or_single(const std::vector<double>& grid, const std::optional<double>& single, double fallback) {
    if (!grid.empty()) {
        return grid;
    }
    return {single.value_or(fallback)};
}

SelectionRule parse_rule(const std::string& r) {
    return r == "min" ? SelectionRule::Minimum : SelectionRule::OneStandardError;
}

json cv_json(const FitOptions& o, const Tuning& t) {
    json rows = json::array();
    for (std::size_t g = 0; g < t.grid.size(); ++g) {
        const auto& p = t.grid[g];
        const auto& e = t.cv.table[g];
        rows.push_back({{"sigma", nan_or(p.sigma)},
                        {"gamma", nan_or(p.gamma)},
                        {"xi", nan_or(p.xi)},
                        {"lambda", nan_or(p.lambda)},
                        {"a", nan_or(p.a)},
                        {"score", nan_or(e.score)},
                        {"se", nan_or(e.se)},
                        {"valid", e.valid}});
    }
    return {{"folds", o.cv}, {"seed", o.seed}, {"rule", o.rule}, {"chosen", t.chosen},
            {"best", t.cv.best}, {"table", rows}};
}

void write_cv_csv(const std::string& path, const Tuning& t) {
    auto os = open_out(path);
    os << "sigma,gamma,xi,lambda,a,score,se,valid,chosen\n";
    for (std::size_t g = 0; g < t.grid.size(); ++g) {
        const auto& p = t.grid[g];
        const auto& e = t.cv.table[g];
        os << fmt(p.sigma) << ',' << fmt(p.gamma) << ',' << fmt(p.xi) << ',' << fmt(p.lambda) << ',' << fmt(p.a)
           << ',' << fmt(e.score) << ',' << fmt(e.se) << ',' << (e.valid ? 1 : 0) << ','
           << (g == t.chosen ? 1 : 0) << '\n';
    }
}

json score_json(Task task, const TrainedModel& model, const Dataset& ds) {
    if (task == Task::Classification) {
        const Vector p = predict(model, ds.x);
        Index right = 0;
        for (Index i = 0; i < p.size(); ++i) {
            right += p[i] == ds.y[i];
        }
        const double acc = static_cast<double>(right) / static_cast<double>(std::max<Index>(1, p.size()));
        return {{"accuracy", acc}, {"error_rate", 1.0 - acc}, {"points", ds.points()}};
    }
    const ErrorMetrics m = error_metrics(predict(model, ds.x), ds.y);
    return {{"L2", m.l2}, {"L1", m.l1}, {"Linf", m.linf}, {"points", ds.points()}};
}

json preprocessing_json(const Preprocessing& p) {
    return {{"log1p", p.log1p}, {"mean", vec_json(p.mean)}, {"scale", vec_json(p.scale)},
            {"zero_variance", p.zero_variance}};
}

Preprocessing preprocessing_from_json(const json& j) {
    Preprocessing p;
    try {
        p.log1p = j.at("log1p").get<std::vector<bool>>();
        p.zero_variance = j.at("zero_variance").get<std::vector<bool>>();
        const auto mean = j.at("mean").get<std::vector<double>>();
        const auto scale = j.at("scale").get<std::vector<double>>();
        p.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Index>(mean.size()));
        p.scale = Eigen::Map<const Vector>(scale.data(), static_cast<Index>(scale.size()));
    } catch (const json::exception& e) {
        throw IoError(std::string("model JSON: field 'preprocessing': ") + e.what());
    }
    if (p.log1p.size() != static_cast<std::size_t>(p.mean.size()) || p.scale.size() != p.mean.size()) {
        throw IoError("model JSON: field 'preprocessing' has inconsistent lengths");
    }
    return p;
}

Dataset load_split(const std::string& path, const FitOptions& o, const Dataset& train) {
    Dataset ds = load_csv(path, fit_schema(o));
    ds.validate();
    if (ds.inputs() != train.inputs() && !(train.preprocessing && ds.inputs() == train.preprocessing->mean.size())) {
        throw InvalidArgument("'" + path + "' has " + std::to_string(ds.inputs()) + " inputs, training data has " +
                              std::to_string(train.inputs()));
    }
    if (train.preprocessing) {
        ds.x = train.preprocessing->apply(ds.x);
        ds.preprocessing = train.preprocessing;
    }
    return ds;
}

void write_curves(const std::string& path, const TrainedModel& model) {
    auto os = open_out(path);
    os << "component,input,family,u,value\n";
    for (Index d : model.retained) {
        const ComponentKernel& k = model.kernel[d];
        const auto row = model.inputs.row(k.input);
        const double lo = row.minCoeff();
        const double hi = row.maxCoeff();
        for (int i = 0; i < kCurvePoints; ++i) {
            const double u = lo + (hi - lo) * static_cast<double>(i) / (kCurvePoints - 1);
            os << d + 1 << ',' << k.input + 1 << ',' << to_string(k.family) << ',' << fmt(u) << ','
               << fmt(predict_component(model, d, u)) << '\n';
        }
    }
}

json component_table(const TrainedModel& model) {
    const Matrix outputs = training_component_outputs(model);
    const double n = static_cast<double>(std::max<Index>(1, model.points()));
    json rows = json::array();
    for (Index d = 0; d < model.components(); ++d) {
        const ComponentKernel& k = model.kernel[d];
        const double l1 = outputs.col(d).cwiseAbs().sum();
        json r{{"component", d + 1},
               {"input", k.input + 1},
               {"family", std::string(to_string(k.family))},
               {"l1_norm", l1},
               {"mean_abs", l1 / n},
               {"retained", model.is_retained(d)}};
        if (k.family == KernelFamily::Rbf) {
            r["sigma"] = k.sigma;
        }
        if (model.eta) {
            r["eta"] = (*model.eta)[d];
        }
        rows.push_back(r);
    }
    return rows;
}

struct FitOutcome {
    TrainedModel model;
    json hyper = json::object();
    json extra = json::object();
    std::vector<Index> selected; ///< reported S_D
    std::optional<Tuning> tuning;
    std::vector<WgncStep> wgnc_trace;
    std::vector<EtaStep> eta_trace;
};

FitOutcome fit_lssvm(const FitOptions& o, const Dataset& ds) {
    FitOutcome r;
    const double sigma0 = o.sigma.value_or(1.0);
    if (o.cv > 0) {
        const CvPlan plan = CvPlan::make(ds.points(), o.cv, o.seed);
        const auto sig = or_single(o.sigma_grid, o.sigma, 1.0);
        const auto grid = o.gamma_grid.empty() && !o.gamma ? log_grid(1e-2, 1e4, 13) : or_single(o.gamma_grid, o.gamma, 1.0);
        Tuning t = cv_tune_lssvm(ds, plan, base_kernel(o.kernel, ds.inputs(), sigma0), sig, grid);
        r.model = t.model;
        r.hyper = {{"sigma", t.params.sigma}, {"gamma", t.params.gamma}};
        r.tuning = std::move(t);
    } else {
        const KernelSpec spec = base_kernel(o.kernel, ds.inputs(), sigma0);
        r.model = ds.task == Task::Classification ? train_classifier(ds.x, ds.y, spec, *o.gamma)
                                                  : train_regressor(ds.x, ds.y, spec, *o.gamma);
        r.hyper = {{"sigma", sigma0}, {"gamma", *o.gamma}};
    }
    r.selected = r.model.retained;
    return r;
}

FitOutcome fit_l1(const FitOptions& o, const Dataset& ds) {
    FitOutcome r;
    const double sigma0 = o.sigma.value_or(1.0);
    ComponentFit fit;
    if (o.cv > 0) {
        const CvPlan plan = CvPlan::make(ds.points(), o.cv, o.seed);
        const auto xis = o.xi_grid.empty() ? (o.xi ? std::vector<double>{*o.xi}
                                                   : std::vector<double>{0.5, 0.7, 1.0, 1.4, 2.0, 3.0})
                                           : o.xi_grid;
        const auto grid = o.gamma_grid.empty() && !o.gamma ? std::vector<double>{10.0, 100.0, 1000.0}
                                                           : or_single(o.gamma_grid, o.gamma, 100.0);
        Tuning t = cv_tune_l1(ds, plan, base_kernel(o.kernel, ds.inputs(), sigma0), or_single(o.sigma_grid, o.sigma, 1.0),
                              xis, grid, parse_rule(o.rule));
        r.hyper = {{"sigma", t.params.sigma}, {"xi", t.params.xi}, {"refit_gamma", t.params.gamma}};
        r.tuning = std::move(t);
        r.model = r.tuning->model;
        fit = *r.tuning->fit;
    } else {
        const KernelSpec spec = base_kernel(o.kernel, ds.inputs(), sigma0);
        fit = fit_l1_components(build_grams(ds.x, std::nullopt, spec), ds.y, *o.xi);
        r.model = to_model(fit, ds.task, spec, ds.x, ds.y);
        r.hyper = {{"sigma", sigma0}, {"xi", *o.xi}};
    }
    r.selected = r.model.retained;
    r.extra = {{"iterations", fit.iterations}, {"converged", fit.converged}, {"objective", fit.objective},
               {"prune_threshold", fit.sparsity.threshold}};
    return r;
}

FitOutcome fit_stp(const FitOptions& o, const Dataset& ds) {
    FitOutcome r;
    const double sigma0 = o.sigma.value_or(1.0);
    const double sd = sample_sd(ds.y);
    ComponentFit fit;
    if (o.cv > 0) {
        const CvPlan plan = CvPlan::make(ds.points(), o.cv, o.seed);
        std::vector<double> lambdas = o.lambda_grid;
        if (lambdas.empty()) {
            if (o.lambda) {
                lambdas = {*o.lambda};
            } else {
                for (double m : {2.5, 5.0, 7.5, 12.5}) {
                    lambdas.push_back(m * sd);
                }
            }
        }
        const auto as = o.a_grid.empty() ? (o.a ? std::vector<double>{*o.a} : std::vector<double>{0.1, 0.3})
                                         : o.a_grid;
        Tuning t = cv_tune_stp(ds, plan, base_kernel(o.kernel, ds.inputs(), sigma0),
                               or_single(o.sigma_grid, o.sigma, 1.0), lambdas, as, parse_rule(o.rule));
        r.hyper = {{"sigma", t.params.sigma}, {"lambda", t.params.lambda}, {"a", t.params.a}};
        fit = *t.fit;
        r.model = t.model;
        r.tuning = std::move(t);
    } else {
        const KernelSpec spec = base_kernel(o.kernel, ds.inputs(), sigma0);
        StpOptions so;
        so.a = o.a.value_or(3.7);
        const double lambda = o.lambda.value_or(0.1 * sd);
        fit = fit_stp_components(build_grams(ds.x, std::nullopt, spec), ds.y, lambda, so);
        r.model = to_model(fit, ds.task, spec, ds.x, ds.y);
        r.hyper = {{"sigma", sigma0}, {"lambda", lambda}, {"a", so.a}};
    }
    r.selected = r.model.retained;
    r.wgnc_trace = fit.trace;
    r.extra = {{"iterations", fit.iterations}, {"converged", fit.converged}, {"objective", fit.objective},
               {"prune_threshold", fit.sparsity.threshold}};
    return r;
}

ValidationSplit to_split(const Dataset& v) { return {v.x, v.y}; }

FitOutcome fit_fuse_areg(const FitOptions& o, const Dataset& ds, const Dataset& val) {
    FitOutcome r;
    const auto sig = or_single(o.sigma_grid, o.sigma, 1.0);
    const auto xis = o.xi_grid.empty() ? (o.xi ? std::vector<double>{*o.xi}
                                               : std::vector<double>{0.5, 0.7, 1.0, 1.4, 2.0, 3.0})
                                       : o.xi_grid;
    const auto gammas = o.gamma_grid.empty() ? (o.gamma ? std::vector<double>{*o.gamma} : log_grid(0.1, 1e4, 11))
                                             : o.gamma_grid;
    const ValidationSplit split = to_split(val);
    std::optional<AregTuning> best;
    double best_sigma = 0.0;
    double best_score = std::numeric_limits<double>::infinity();
    json per_sigma = json::array();
    for (double s : sig) {
        AregTuning t = fuse_areg_tuned(ds.x, ds.y, split, base_kernel(o.kernel, ds.inputs(), s), xis, gammas);
        const double score = validation_mse(t.model, split);
        json xs = json::array();
        for (std::size_t i = 0; i < t.xi_grid.size(); ++i) {
            xs.push_back({{"xi", t.xi_grid[i]}, {"score", nan_or(t.scores[i])}, {"S_D", one_based(t.selections[i])}});
        }
        per_sigma.push_back({{"sigma", s}, {"validation_mse", score}, {"xi_table", xs}});
        if (score < best_score) {
            best_score = score;
            best_sigma = s;
            best = std::move(t);
        }
    }
    if (!best) {
        throw NumericalError("fuse-areg: no sigma produced a finite validation score");
    }
    r.model = best->model;
    r.selected = r.model.retained;
    r.hyper = {{"sigma", best_sigma}, {"xi", best->xi}, {"refit_gamma", best->gamma}};
    r.extra = {{"validation_search", per_sigma},
               {"areg_validation_mse", best->fusion.validation_mse},
               {"iterations", best->fusion.fit.iterations},
               {"converged", best->fusion.fit.converged}};
    return r;
}

FitOutcome fit_fuse_eta(const FitOptions& o, const Dataset& ds, const Dataset& val) {
    FitOutcome r;
    const auto sig = or_single(o.sigma_grid, o.sigma, 1.0);
    const auto gammas = o.gamma_grid.empty() ? (o.gamma ? std::vector<double>{*o.gamma} : log_grid(0.1, 1e4, 11))
                                             : o.gamma_grid;
    const ValidationSplit split = to_split(val);
    double best_sigma = 0.0;
    double best_gamma = 0.0;
    double best_score = std::numeric_limits<double>::infinity();
    for (double s : sig) {
        const GammaTuning g = tune_gamma_grid(ds.x, ds.y, split, base_kernel(o.kernel, ds.inputs(), s), gammas);
        const double score = validation_mse(g.model, split);
        if (score < best_score) {
            best_score = score;
            best_sigma = s;
            best_gamma = g.gamma;
        }
    }
    if (!std::isfinite(best_score)) {
        throw NumericalError("fuse-eta: gamma search failed for every sigma");
    }
    const KernelSpec spec = base_kernel(o.kernel, ds.inputs(), best_sigma);
    EtaAlsOptions eo;
    eo.max_outer = o.max_outer;
    eo.tol = o.tol;
    const EtaFusion f = fuse_eta_als(ds.x, ds.y, split, spec, Vector::Constant(spec.size(), best_gamma), eo);
    r.model = f.model;
    r.selected = f.selected;
    r.eta_trace = f.trace;
    r.hyper = {{"sigma", best_sigma}, {"initial_gamma", best_gamma}, {"eta", vec_json(f.eta)}};
    r.extra = {{"iterations", static_cast<int>(f.trace.size()) - 1},
               {"converged", f.converged},
               {"stalled", f.stalled},
               {"eta_validation_mse", f.validation_mse},
               {"initial_validation_mse", best_score}};
    return r;
}

int cmd_fit(const FitOptions& o) {
    check_fit_options(o);
    const json config = fit_config(o);

    Dataset ds = load_csv(o.data, fit_schema(o));
    ds.validate();
    if (o.preprocess) {
        PreprocessOptions po;
        po.log1p = !o.no_log1p;
        ds = preprocess_log_standardize(ds, po);
    }
    std::optional<Dataset> val;
    std::optional<Dataset> test;
    if (!o.validation.empty()) {
        val = load_split(o.validation, o, ds);
    }
    if (!o.test.empty()) {
        test = load_split(o.test, o, ds);
    }

    FitOutcome r;
    if (o.method == "lssvm") {
        r = fit_lssvm(o, ds);
    } else if (o.method == "l1") {
        r = fit_l1(o, ds);
    } else if (o.method == "stp") {
        r = fit_stp(o, ds);
    } else if (o.method == "fuse-areg") {
        r = fit_fuse_areg(o, ds, *val);
    } else {
        r = fit_fuse_eta(o, ds, *val);
    }

    json model_doc = json::parse(serialize_model(r.model));
    model_doc["config"] = config;
    if (ds.preprocessing) {
        model_doc["preprocessing"] = preprocessing_json(*ds.preprocessing);
    }
    model_doc["input_names"] = ds.names;
    write_text(o.out + ".model.json", model_doc.dump(2) + "\n");

    write_curves(o.out + ".curves.csv", r.model);

    json metrics;
    metrics["config"] = config;
    metrics["method"] = o.method;
    metrics["task"] = std::string(to_string(ds.task));
    metrics["S_D"] = one_based(r.selected);
    metrics["components"] = component_table(r.model);
    metrics["hyperparameters"] = r.hyper;
    metrics["train"] = score_json(ds.task, r.model, ds);
    if (val) {
        metrics["validation"] = score_json(ds.task, r.model, *val);
    }
    if (test) {
        metrics["test"] = score_json(ds.task, r.model, *test);
    }
    metrics["train_predictions"] = vec_json(predict(r.model, ds.x));
    if (ds.task == Task::Classification) {
        metrics["train_scores"] = vec_json(decision_values(r.model, ds.x));
    }
    for (auto it = r.extra.begin(); it != r.extra.end(); ++it) {
        metrics[it.key()] = it.value();
    }
    if (r.tuning) {
        metrics["cv"] = cv_json(o, *r.tuning);
        write_cv_csv(o.out + ".cv.csv", *r.tuning);
    }
    if (!r.wgnc_trace.empty()) {
        auto os = open_out(o.out + ".wgnc_trace.csv");
        write_trace_csv(os, r.wgnc_trace);
    }
    if (!r.eta_trace.empty()) {
        auto os = open_out(o.out + ".eta_trace.csv");
        write_eta_trace_csv(os, r.eta_trace);
    }
    write_text(o.out + ".metrics.json", metrics.dump(2) + "\n");
    return kExitOk;
}

// ---------------------------------------------------------------------------
// predict

std::vector<std::string> header_fields(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::vector<std::string> out;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            const auto b = cell.find_first_not_of(" \t\r\"");
            const auto e = cell.find_last_not_of(" \t\r\"");
            out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
        }
        return out;
    }
    return {};
}

int cmd_predict(const PredictOptions& o, std::ostream& out) {
    const std::string model_text = read_text(o.model);
    const TrainedModel model = parse_model(model_text);
    const json doc = json::parse(model_text);
    const Index p = model.inputs.rows();

    std::optional<Preprocessing> pre;
    if (doc.contains("preprocessing")) {
        pre = preprocessing_from_json(doc["preprocessing"]);
    }
    CsvSchema schema;
    if (doc.contains("config") && doc["config"].contains("label_map")) {
        for (auto it = doc["config"]["label_map"].begin(); it != doc["config"]["label_map"].end(); ++it) {
            schema.label_map[it.key()] = it.value().get<double>();
        }
    }

    const std::string text = read_text(o.data);
    const auto header = header_fields(text);
    std::ostringstream result;
    if (!header.empty()) {
        const auto cols = static_cast<Index>(header.size());
        if (!o.target.empty()) {
            schema.target = o.target;
            schema.has_target = true;
        } else if (cols == p + 1) {
            schema.has_target = true;
        } else if (cols == p) {
            schema.has_target = false;
        } else {
            throw InvalidArgument("input has " + std::to_string(cols) + " columns; model expects " + std::to_string(p) +
                                  " input columns (D = " + std::to_string(model.components()) +
                                  " components), optionally followed by a target column");
        }
        Dataset ds = parse_csv(text, schema);
        if (ds.inputs() != p) {
            throw InvalidArgument("input has " + std::to_string(ds.inputs()) + " feature columns; model expects " +
                                  std::to_string(p) + " (D = " + std::to_string(model.components()) + " components)");
        }
        if (ds.points() > 0) {
            if (!ds.x.allFinite()) {
                throw InvalidArgument("prediction inputs must be finite");
            }
            const Matrix x = pre ? pre->apply(ds.x) : ds.x;
            const Vector scores = decision_values(model, x);
            if (model.task == Task::Classification) {
                result << "prediction,score\n";
                for (Index i = 0; i < scores.size(); ++i) {
                    result << (scores[i] >= 0.0 ? "1" : "-1") << ',' << fmt(scores[i]) << '\n';
                }
            } else {
                result << "prediction\n";
                for (Index i = 0; i < scores.size(); ++i) {
                    result << fmt(scores[i]) << '\n';
                }
            }
        }
    }
    if (o.out.empty()) {
        out << result.str();
    } else {
        write_text(o.out, result.str());
    }
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Componentwise LS-SVM estimation and structure detection", "cwlssvm"};
    app.require_subcommand(1);

    GenOptions gen;
    auto* g = app.add_subcommand("gen", "Generate a sample of the 10-input sinc benchmark");
    g->add_option("--n", gen.n, "Number of points")->check(CLI::Range(Index{10}, Index{100000000}));
    g->add_option("--seed", gen.seed, "Random seed");
    g->add_option("--d", gen.d, "Number of inputs")->check(CLI::Range(Index{4}, Index{100000}));
    g->add_option("--noise-sd", gen.noise_sd, "Noise standard deviation")->check(CLI::NonNegativeNumber);
    g->add_option("--out", gen.out, "Output prefix");

    FitOptions fit;
    auto* f = app.add_subcommand("fit", "Train a model");
    f->add_option("--data", fit.data, "Training CSV")->required();
    f->add_option("--method", fit.method, "Estimator")
        ->required()
        ->check(CLI::IsMember({"lssvm", "l1", "stp", "fuse-areg", "fuse-eta"}));
    f->add_option("--target", fit.target, "Target column name (default: last column)");
    f->add_option("--task", fit.task, "regression or classification")
        ->check(CLI::IsMember({"regression", "classification"}));
    f->add_option("--label-map", fit.label_map, "Label mapping, e.g. spam=1,ham=-1")->delimiter(',');
    f->add_flag("--preprocess", fit.preprocess, "log(1+x) then standardize inputs");
    f->add_flag("--no-log1p", fit.no_log1p, "With --preprocess: standardize only");
    f->add_option("--kernel", fit.kernel, "rbf, linear or rbf+linear")
        ->check(CLI::IsMember({"rbf", "linear", "rbf+linear"}));
    f->add_option("--sigma", fit.sigma, "RBF bandwidth")->check(CLI::PositiveNumber);
    f->add_option("--sigma-grid", fit.sigma_grid, "RBF bandwidth grid")->delimiter(',')->check(CLI::PositiveNumber);
    f->add_option("--gamma", fit.gamma, "Regularization constant")->check(CLI::PositiveNumber);
    f->add_option("--gamma-grid", fit.gamma_grid, "Gamma grid")->delimiter(',')->check(CLI::PositiveNumber);
    f->add_option("--xi", fit.xi, "L1 trade-off")->check(CLI::PositiveNumber);
    f->add_option("--xi-grid", fit.xi_grid, "Xi grid")->delimiter(',')->check(CLI::PositiveNumber);
    f->add_option("--lambda", fit.lambda, "STP level (default 0.1 std(Y))")->check(CLI::PositiveNumber);
    f->add_option("--lambda-grid", fit.lambda_grid, "Lambda grid")->delimiter(',')->check(CLI::PositiveNumber);
    f->add_option("--a", fit.a, "STP shape (default 3.7)")->check(CLI::PositiveNumber);
    f->add_option("--a-grid", fit.a_grid, "STP shape grid (default 0.1,0.3)")->delimiter(',')->check(CLI::PositiveNumber);
    f->add_option("--cv", fit.cv, "Number of cross-validation folds");
    f->add_option("--rule", fit.rule, "CV selection: min or 1se")->check(CLI::IsMember({"min", "1se"}));
    f->add_option("--seed", fit.seed, "Fold assignment seed");
    f->add_option("--validation", fit.validation, "Validation CSV (fusion methods)");
    f->add_option("--test", fit.test, "Test CSV for reporting");
    f->add_option("--max-outer", fit.max_outer, "fuse-eta outer iterations")->check(CLI::PositiveNumber);
    f->add_option("--tol", fit.tol, "fuse-eta relative tolerance")->check(CLI::PositiveNumber);
    f->add_option("--out", fit.out, "Output prefix");

    PredictOptions pred;
    auto* p = app.add_subcommand("predict", "Predict with a saved model");
    p->add_option("--model", pred.model, "Model JSON")->required();
    p->add_option("--data", pred.data, "Input CSV")->required();
    p->add_option("--target", pred.target, "Column to ignore");
    p->add_option("--out", pred.out, "Output CSV (default: stdout)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "cwlssvm: " << e.what() << '\n';
        if (!app.get_subcommands().empty()) {
            err << app.get_subcommands().front()->help();
        }
        return kExitUsage;
    }

    try {
        if (g->parsed()) {
            return cmd_gen(gen);
        }
        if (f->parsed()) {
            return cmd_fit(fit);
        }
        return cmd_predict(pred, out);
    } catch (const UsageError& e) {
        err << "cwlssvm: usage: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InvalidArgument& e) {
        err << "cwlssvm: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NumericalError& e) {
        err << "cwlssvm: numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const IoError& e) {
        err << "cwlssvm: I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const json::exception& e) {
        err << "cwlssvm: I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const Error& e) {
        err << "cwlssvm: " << e.what() << '\n';
        return kExitNumerical;
    }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return run(args, out, err);
}

} // namespace cwlssvm::cli
