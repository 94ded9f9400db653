#pragma once

#include <span>
#include <vector>

#include "nsl/linalg.hpp"

namespace nsl {

enum class ScheduleKind { Linear, TrigVP };

// Interpolant x_t = alpha(t) x0 + sigma(t) eps on t in [0, 1], with
// alpha(0)=1, alpha(1)=0, sigma(0)=0, sigma(1)=1.
struct Schedule {
    ScheduleKind kind = ScheduleKind::Linear;
    static constexpr double T = 1.0;
};

struct ScheduleEval {
    double alpha;
    double sigma;
    double alpha_dot;
    double sigma_dot;
};

struct NoiseShift {
    double t;
    double sigma_e;
    double delta_first_order;
    double delta_exact;
};

ScheduleEval eval_schedule(const Schedule& sched, double t);

Vector forward_sample(std::span<const double> x0, std::span<const double> eps, double t,
                      const Schedule& sched);

Vector velocity_target(std::span<const double> x0, std::span<const double> eps, double t,
                       const Schedule& sched);

// Score implied by a velocity at (x, t):
//   s = -sigma^{-1} (alpha v - alpha_dot x) / (alpha sigma_dot - alpha_dot sigma).
// The denominator is positive on (0, 1] for both schedule kinds; the sign is
// fixed so the result agrees with the analytic Gaussian score (see tests).
Vector score_from_velocity(std::span<const double> x, std::span<const double> v, double t,
                           const Schedule& sched);

// Inverse of score_from_velocity: the velocity whose implied score is s.
Vector velocity_from_score(std::span<const double> x, std::span<const double> s, double t,
                           const Schedule& sched);

Vector score_from_eps(std::span<const double> eps_hat, double t, const Schedule& sched);

// Statement-level noise shift: an extra N(0, sigma_e^2) perturbation on top
// of the time-t marginal looks like the forward process at time t + delta.
double shift_first_order(double t, double sigma_e, const Schedule& sched);
double shift_exact(double t, double sigma_e, const Schedule& sched);

inline NoiseShift noise_shift(double t, double sigma_e, const Schedule& sched) {
    return {t, sigma_e, shift_first_order(t, sigma_e, sched), shift_exact(t, sigma_e, sched)};
}

}  // namespace nsl
