#include "nsl/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace nsl {

namespace {

constexpr double kHalfPi = 1.5707963267948966192313216916398;

// Operations dividing by sigma reject tiny t outright; clamping would hide
// caller bugs behind huge but finite scores.
constexpr double kSigmaGuard = 1e-6;

void check_dims(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("state vectors differ in dimension");
}

}  // namespace

ScheduleEval eval_schedule(const Schedule& sched, double t) {
    if (!(t >= 0.0 && t <= Schedule::T)) throw std::domain_error("schedule time outside [0, T]");
    switch (sched.kind) {
        case ScheduleKind::Linear:
            return {1.0 - t, t, -1.0, 1.0};
        case ScheduleKind::TrigVP: {
            double a = kHalfPi * t;
            return {std::cos(a), std::sin(a), -kHalfPi * std::sin(a), kHalfPi * std::cos(a)};
        }
    }
    throw std::logic_error("unreachable schedule kind");
}

Vector forward_sample(std::span<const double> x0, std::span<const double> eps, double t,
                      const Schedule& sched) {
    check_dims(x0, eps);
    ScheduleEval e = eval_schedule(sched, t);
    Vector out(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) out[i] = e.alpha * x0[i] + e.sigma * eps[i];
    return out;
}

Vector velocity_target(std::span<const double> x0, std::span<const double> eps, double t,
                       const Schedule& sched) {
    check_dims(x0, eps);
    ScheduleEval e = eval_schedule(sched, t);
    Vector out(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) out[i] = e.alpha_dot * x0[i] + e.sigma_dot * eps[i];
    return out;
}

Vector score_from_velocity(std::span<const double> x, std::span<const double> v, double t,
                           const Schedule& sched) {
    check_dims(x, v);
    if (t < kSigmaGuard) throw std::domain_error("score undefined at sigma(t) = 0");
    ScheduleEval e = eval_schedule(sched, t);
    double denom = e.alpha * e.sigma_dot - e.alpha_dot * e.sigma;
    Vector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = -(e.alpha * v[i] - e.alpha_dot * x[i]) / (e.sigma * denom);
    return out;
}

Vector velocity_from_score(std::span<const double> x, std::span<const double> s, double t,
                           const Schedule& sched) {
    check_dims(x, s);
    if (t < kSigmaGuard) throw std::domain_error("velocity recovery undefined at sigma(t) = 0");
    ScheduleEval e = eval_schedule(sched, t);
    if (e.alpha == 0.0) throw std::domain_error("velocity recovery undefined at alpha(t) = 0");
    double denom = e.alpha * e.sigma_dot - e.alpha_dot * e.sigma;
    Vector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = (e.alpha_dot * x[i] - e.sigma * denom * s[i]) / e.alpha;
    return out;
}

Vector score_from_eps(std::span<const double> eps_hat, double t, const Schedule& sched) {
    if (t < kSigmaGuard) throw std::domain_error("score undefined at sigma(t) = 0");
    ScheduleEval e = eval_schedule(sched, t);
    Vector out(eps_hat.size());
    for (std::size_t i = 0; i < eps_hat.size(); ++i) out[i] = -eps_hat[i] / e.sigma;
    return out;
}

double shift_first_order(double t, double sigma_e, const Schedule& sched) {
    if (sigma_e < 0.0) throw std::domain_error("sigma_e must be nonnegative");
    ScheduleEval e = eval_schedule(sched, t);
    if (e.sigma_dot <= 0.0) throw std::domain_error("shift undefined where sigma_dot = 0");
    return (std::sqrt(e.sigma * e.sigma + sigma_e * sigma_e) - e.sigma) / e.sigma_dot;
}

double shift_exact(double t, double sigma_e, const Schedule& sched) {
    if (sigma_e < 0.0) throw std::domain_error("sigma_e must be nonnegative");
    if (sigma_e == 0.0) return 0.0;
    ScheduleEval e = eval_schedule(sched, t);
    double target = e.sigma * e.sigma + sigma_e * sigma_e;
    if (target > 1.0 + 1e-12) throw std::out_of_range("combined noise exceeds sigma(T); no shifted time exists");
    if (target > 1.0) target = 1.0;

    // sigma is strictly increasing and invertible in closed form for both
    // schedule kinds, so the shifted time comes out at full precision.
    double shifted;
    switch (sched.kind) {
        case ScheduleKind::Linear:
            shifted = std::sqrt(target);
            break;
        case ScheduleKind::TrigVP:
            shifted = std::asin(std::sqrt(target)) / kHalfPi;
            break;
        default:
            throw std::logic_error("unhandled schedule kind");
    }
    return std::min(shifted, Schedule::T) - t;
}

}  // namespace nsl
