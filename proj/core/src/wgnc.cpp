#include "cwlssvm/wgnc.hpp"

#include <ostream>

#include "cwlssvm/error.hpp"

namespace cwlssvm {

PenaltyFn::PenaltyFn(std::string name, Profile profile, Profile slope)
    : name_(std::move(name)), profile_(std::move(profile)), slope_(std::move(slope)) {}

double PenaltyFn::derivative(double e) const {
    if (e == 0.0) {
        return 0.0;
    }
    const double s = slope_(std::abs(e));
    return e > 0.0 ? s : -s;
}

PenaltyFn PenaltyFn::squared() {
    return {"squared", [](double v) { return v * v; }, [](double v) { return 2.0 * v; }};
}

PenaltyFn PenaltyFn::absolute() {
    return {"absolute", [](double v) { return v; }, [](double) { return 1.0; }};
}

PenaltyFn PenaltyFn::stp(double lambda, double a) {
    if (!(lambda >= 0.0) || !(a > 0.0)) {
        throw InvalidArgument("stp penalty: need lambda >= 0 and a > 0");
    }
    return {"stp",
            [lambda, a](double v) { return stp_penalty(v, lambda, a); },
            [lambda, a](double v) {
                const double den = 1.0 + a * v;
                return lambda * a / (den * den);
            }};
}

PenaltyFn PenaltyFn::bridge(double lambda, double p) {
    if (!(p > 0.0) || !(lambda >= 0.0)) {
        throw InvalidArgument("bridge penalty: need p > 0 and lambda >= 0");
    }
    return {"bridge",
            [lambda, p](double v) { return lambda * std::pow(v, p); },
            [lambda, p](double v) { return lambda * p * std::pow(v, p - 1.0); }};
}

PenaltyFn PenaltyFn::hard_threshold(double lambda) {
    if (!(lambda > 0.0)) {
        throw InvalidArgument("hard threshold penalty: need lambda > 0");
    }
    return {"hard_threshold",
            [lambda](double v) {
                if (v >= lambda) {
                    return lambda * lambda;
                }
                const double d = v - lambda;
                return lambda * lambda - d * d;
            },
            [lambda](double v) { return v >= lambda ? 0.0 : 2.0 * (lambda - v); }};
}

PenaltyFn PenaltyFn::scaled(double factor) const {
    auto profile = profile_;
    auto slope = slope_;
    return {name_,
            [profile, factor](double v) { return factor * profile(v); },
            [slope, factor](double v) { return factor * slope(v); }};
}

double stp_penalty(double v, double lambda, double a) {
    if (!(v >= 0.0) || !(lambda >= 0.0) || !(a > 0.0)) {
        throw InvalidArgument("stp_penalty: need v >= 0, lambda >= 0, a > 0");
    }
    if (std::isinf(v)) {
        return lambda;
    }
    return lambda * a * v / (1.0 + a * v);
}

Reweighting reweight(double e, const PenaltyFn& penalty) {
    if (std::abs(e) < kResidualFloor) {
        e = e < 0.0 ? -kResidualFloor : kResidualFloor;
    }
    Reweighting r;
    r.nu2 = penalty.derivative(e) / (2.0 * e);
    if (r.nu2 < 0.0 || !std::isfinite(r.nu2)) {
        throw InvalidArgument("reweight: penalty '" + penalty.name() + "' is decreasing at residual " +
                              std::to_string(e));
    }
    r.mu = penalty.value(e) - r.nu2 * e * e;
    return r;
}

RelaxationSchedule::RelaxationSchedule(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2 || values_.front() != 1.0 || values_.back() != 0.0) {
        throw InvalidArgument("relaxation schedule must start at 1 and end at 0");
    }
    for (std::size_t i = 1; i < values_.size(); ++i) {
        if (!(values_[i] < values_[i - 1])) {
            throw InvalidArgument("relaxation schedule must be strictly decreasing");
        }
    }
}

RelaxationSchedule RelaxationSchedule::geometric(double ratio, double floor) {
    if (!(ratio > 0.0 && ratio < 1.0) || !(floor > 0.0 && floor < 1.0)) {
        throw InvalidArgument("geometric schedule: need 0 < ratio < 1 and 0 < floor < 1");
    }
    std::vector<double> v{1.0};
    double z = ratio;
    while (z > floor) {
        v.push_back(z);
        z *= ratio;
    }
    v.push_back(0.0);
    return RelaxationSchedule(std::move(v));
}

void write_trace_csv(std::ostream& os, const std::vector<WgncStep>& trace) {
    os << "step,zeta,objective,relaxed,inner_iterations\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& s = trace[i];
        os << (i + 1) << ',' << s.zeta << ',' << s.objective << ',' << s.relaxed << ',' << s.inner_iterations
           << '\n';
    }
}

namespace detail {

double group_penalty(const Vector& r, const std::vector<Index>& groups, const PenaltyFn& penalty) {
    double total = 0.0;
    Index at = 0;
    for (Index size : groups) {
        total += penalty.value(r.segment(at, size).lpNorm<1>());
        at += size;
    }
    return total;
}

Vector relaxed_weights(const Vector& r, const std::vector<Index>& groups, const PenaltyFn& penalty, double zeta,
                       double ls_weight) {
    Vector w(r.size());
    Index at = 0;
    for (Index size : groups) {
        if (size == 1) {
            w[at] = (1.0 - zeta) * reweight(r[at], penalty).nu2 + zeta * ls_weight;
        } else {
            // Tangent of l at the group's L1 norm, then the |.| majorizer per entry.
            const double slope = penalty.slope(r.segment(at, size).lpNorm<1>());
            if (slope < 0.0) {
                throw InvalidArgument("penalty '" + penalty.name() + "' is decreasing");
            }
            for (Index i = at; i < at + size; ++i) {
                const double mag = std::max(std::abs(r[i]), kResidualFloor);
                w[i] = (1.0 - zeta) * slope / (2.0 * mag) + zeta * ls_weight;
            }
        }
        at += size;
    }
    return w;
}

} // namespace detail

} // namespace cwlssvm
