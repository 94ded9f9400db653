#pragma once

#include <optional>
#include <span>

#include "nsl/model.hpp"

namespace nsl {

struct NoiseEstimator;

enum class NagMode { Off, ClassifierFree, ClassifierBased };

struct GuidanceSpec {
    double w_cfg = 0.0;
    double w_nag = 0.0;
    NagMode nag_mode = NagMode::Off;
    double tau = 0.05;  // posterior width for ClassifierBased
};

// (1+w) s_cond - w s_uncond: extrapolates along the class-conditioning axis.
Vector cfg_mix(std::span<const double> s_cond, std::span<const double> s_uncond, double w);

// (w+1) s(x|t) - w s(x): extrapolates along the noise-conditioning axis,
// where s(x) is the noise-level-unconditional score (null noise token, same
// conversion time t).
Vector nag_mix(std::span<const double> s_t_cond, std::span<const double> s_t_uncond, double w_nag);

// Gradient of the Gaussian-posterior log-likelihood of noise level t under
// the point regressor: ((t - g(x)) / tau^2) * grad_x g(x).
Vector classifier_nag_grad(const NoiseEstimator& est, std::span<const double> x, double t,
                           double tau);

// Both guidance axes anchored at the fully conditioned score:
//   s(x|t,y) + w_cfg [s(x|t,y) - s(x|t)] + w_nag-scaled NAG correction.
// The degenerate paths reproduce cfg_mix / nag_mix bitwise.
Vector combined_score(const VelocityModel& model, std::span<const double> x, double t,
                      std::optional<int> y, const GuidanceSpec& spec,
                      const NoiseEstimator* estimator = nullptr);

}  // namespace nsl
