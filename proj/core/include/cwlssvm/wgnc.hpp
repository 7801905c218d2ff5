#pragma once

#include <cmath>
#include <concepts>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "cwlssvm/linalg.hpp"

namespace cwlssvm {

/// Symmetric penalty l(|e|), non-decreasing on [0, inf).
///
/// `profile` is the penalty as a function of the magnitude and `slope` its
/// derivative there; value() and derivative() extend both to signed residuals.
class PenaltyFn {
public:
    using Profile = std::function<double(double)>;

    PenaltyFn(std::string name, Profile profile, Profile slope);

    static PenaltyFn squared();
    static PenaltyFn absolute();
    /// Transformed L1: lambda * a * v / (1 + a * v).
    static PenaltyFn stp(double lambda, double a = 3.7);
    /// Bridge penalty lambda * |v|^p, 0 < p.
    static PenaltyFn bridge(double lambda, double p);
    /// lambda^2 - (v - lambda)^2 for v < lambda, lambda^2 beyond.
    static PenaltyFn hard_threshold(double lambda);

    PenaltyFn scaled(double factor) const;

    double value(double e) const { return profile_(std::abs(e)); }
    double derivative(double e) const;
    double slope(double magnitude) const { return slope_(magnitude); }
    const std::string& name() const { return name_; }

private:
    std::string name_;
    Profile profile_;
    Profile slope_;
};

/// ell_lambda^a(v) = lambda a v / (1 + a v) for an L1 norm value v >= 0.
double stp_penalty(double v, double lambda, double a = 3.7);

/// Residual magnitudes below this are clamped before reweighting.
inline constexpr double kResidualFloor = 1e-8;

/// Quadratic (nu e)^2 + mu touching the penalty in value and slope at e.
struct Reweighting {
    double nu2 = 1.0;
    double mu = 0.0;
};

/// Solves [e^2 1; 2e 0] [nu^2; mu] = [l(e); l'(e)] at e clamped to
/// |e| >= kResidualFloor. Throws InvalidArgument if nu^2 < 0.
Reweighting reweight(double e, const PenaltyFn& penalty);

/// Strictly decreasing 1 = z_0 > z_1 > ... > z_T = 0.
class RelaxationSchedule {
public:
    explicit RelaxationSchedule(std::vector<double> values);

    /// 1, ratio, ratio^2, ... while above `floor`, then 0.
    static RelaxationSchedule geometric(double ratio = 0.7, double floor = 1e-3);

    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> values_;
};

struct WgncOptions {
    double inner_tol = 1e-9; ///< relative change of the relaxed objective
    int max_inner = 50;
    int max_outer = 1000;    ///< cap on relaxation steps taken from the schedule
    double ls_weight = 1.0;  ///< warm start penalizes ls_weight * sum r_i^2
};

struct WgncStep {
    double zeta = 1.0;
    double objective = 0.0; ///< target objective at the end of the step
    double relaxed = 0.0;   ///< relaxed objective at the end of the step
    int inner_iterations = 0;
    std::vector<double> relaxed_trace; ///< relaxed objective after each inner solve
};

template <class State>
struct WgncResult {
    State state;              ///< iterate with the lowest target objective
    double objective = 0.0;
    State warm_start;         ///< least-squares solution the homotopy started from
    double warm_start_objective = 0.0;
    std::vector<WgncStep> trace;
    bool converged = true;    ///< false if some step hit max_inner
};

/// Write the trace as CSV: step,zeta,objective,relaxed,inner_iterations.
void write_trace_csv(std::ostream& os, const std::vector<WgncStep>& trace);

/// Problem protocol for wgnc_minimize.
///
/// The objective is  sum_g l(||r_g||_1) + Q(theta)  where r(theta) is split
/// into consecutive groups of the sizes given by groups(). solve(w) must
/// return the minimizer of  sum_i w_i r_i^2 + Q(theta).
template <class P>
concept WgncProblem = requires(const P& p, const Vector& w, const typename P::State& s) {
    { p.solve(w) } -> std::convertible_to<typename P::State>;
    { p.penalized(s) } -> std::convertible_to<Vector>;
    { p.data_objective(s) } -> std::convertible_to<double>;
    { p.groups() } -> std::convertible_to<std::vector<Index>>;
    { p.penalized_size() } -> std::convertible_to<Index>;
};

namespace detail {

double group_penalty(const Vector& r, const std::vector<Index>& groups, const PenaltyFn& penalty);

/// Entry weights of the relaxed objective (1 - zeta) sum_g l(||r_g||_1) + zeta * ls * ||r||^2.
Vector relaxed_weights(const Vector& r, const std::vector<Index>& groups, const PenaltyFn& penalty, double zeta,
                       double ls_weight);

} // namespace detail

/// Weighted graduated non-convexity: start from the least-squares solution and
/// deform the penalty along the schedule, running weighted least squares
/// iterations at every step. Returns the best iterate for the target penalty.
template <WgncProblem P>
WgncResult<typename P::State> wgnc_minimize(const P& problem, const PenaltyFn& target,
                                            const RelaxationSchedule& schedule, const WgncOptions& options = {}) {
    using State = typename P::State;
    const std::vector<Index> groups = problem.groups();
    auto target_objective = [&](const State& s) {
        return detail::group_penalty(problem.penalized(s), groups, target) + problem.data_objective(s);
    };
    auto relaxed_objective = [&](const State& s, double zeta) {
        const Vector r = problem.penalized(s);
        return (1.0 - zeta) * detail::group_penalty(r, groups, target) +
               zeta * options.ls_weight * r.squaredNorm() + problem.data_objective(s);
    };

    State current = problem.solve(Vector::Constant(problem.penalized_size(), options.ls_weight));
    WgncResult<State> result{current, target_objective(current), current, 0.0, {}, true};
    result.warm_start_objective = result.objective;

    const auto& zetas = schedule.values();
    int outer = 0;
    for (std::size_t t = 1; t < zetas.size() && outer < options.max_outer; ++t, ++outer) {
        const double zeta = zetas[t];
        WgncStep step;
        step.zeta = zeta;
        double previous = std::numeric_limits<double>::infinity();
        double value = relaxed_objective(current, zeta);
        bool settled = false;
        while (step.inner_iterations < options.max_inner) {
            const Vector w =
                detail::relaxed_weights(problem.penalized(current), groups, target, zeta, options.ls_weight);
            State next = problem.solve(w);
            const double next_value = relaxed_objective(next, zeta);
            ++step.inner_iterations;
            step.relaxed_trace.push_back(next_value);
            previous = value;
            value = next_value;
            current = std::move(next);
            const double obj = target_objective(current);
            if (obj < result.objective) {
                result.objective = obj;
                result.state = current;
            }
            if (std::abs(previous - value) <= options.inner_tol * (1.0 + std::abs(value))) {
                settled = true;
                break;
            }
        }
        if (!settled) {
            result.converged = false;
        }
        step.relaxed = value;
        step.objective = target_objective(current);
        result.trace.push_back(std::move(step));
    }
    return result;
}

} // namespace cwlssvm
