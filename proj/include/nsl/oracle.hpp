#pragma once

#include <optional>
#include <span>
#include <utility>

#include "nsl/mixture.hpp"
#include "nsl/schedule.hpp"

namespace nsl {

// Prior over noise levels for the noise-level-marginalized score. Uniform01
// is the default (matching how training draws t); DiscreteGrid covers point
// masses and custom supports.
struct TimePrior {
    enum class Kind { Uniform01, DiscreteGrid } kind = Kind::Uniform01;
    std::vector<std::pair<double, double>> grid;  // (t, weight), DiscreteGrid only

    static TimePrior uniform01() { return {Kind::Uniform01, {}}; }
    static TimePrior point_mass(double t) { return {Kind::DiscreteGrid, {{t, 1.0}}}; }
};

// Pushforward of the data mixture through x_t = alpha x0 + sigma eps:
// means scale by alpha, variances become alpha^2 Sigma + sigma^2.
MixtureSpec marginal_at(const MixtureSpec& mix, double t, const Schedule& sched);

// Log density of the mixture itself (log-sum-exp stabilized).
double log_density(const MixtureSpec& mix, std::span<const double> x);

// Exact per-component posterior moments E[x0 | x_t = x] and E[eps | x_t = x],
// mixed over component responsibilities. Well defined at t = 0.
struct PosteriorMoments {
    Vector x0;
    Vector eps;
};
PosteriorMoments posterior_moments(const MixtureSpec& mix, std::span<const double> x, double t,
                                   const Schedule& sched,
                                   std::optional<int> class_filter = std::nullopt);

// Gradient of log p_t(x); with class_filter, of the class-conditional
// marginal (components of that label, weights renormalized).
Vector oracle_score(const MixtureSpec& mix, std::span<const double> x, double t,
                    const Schedule& sched, std::optional<int> class_filter = std::nullopt);

// E[x_dot | x_t = x] = alpha_dot E[x0|x] + sigma_dot E[eps|x].
Vector oracle_velocity(const MixtureSpec& mix, std::span<const double> x, double t,
                       const Schedule& sched, std::optional<int> class_filter = std::nullopt);

// Gradient of log of the noise-level-marginalized density
// integral p_t(x) p(t) dt, by Gauss-Legendre quadrature over the prior
// support (or the weighted discrete sum for grid priors).
Vector noise_marginal_score(const MixtureSpec& mix, std::span<const double> x,
                            const TimePrior& prior, const Schedule& sched,
                            std::optional<int> class_filter = std::nullopt, int nodes = 64);

// Same marginalization for the log density itself; shares the quadrature
// so guidance identities can be finite-difference checked.
double noise_marginal_log_density(const MixtureSpec& mix, std::span<const double> x,
                                  const TimePrior& prior, const Schedule& sched,
                                  std::optional<int> class_filter = std::nullopt, int nodes = 64);

// Nodes and weights on [0, 1]; computed once per order and cached.
struct Quadrature {
    Vector nodes;
    Vector weights;
};
const Quadrature& gauss_legendre_01(int n);

}  // namespace nsl
