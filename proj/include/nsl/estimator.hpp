#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nsl/mixture.hpp"
#include "nsl/net.hpp"
#include "nsl/parallel.hpp"
#include "nsl/sampler.hpp"
#include "nsl/schedule.hpp"

namespace nsl {

// Point regressor x -> t̂ trained on forward-process states. It never sees
// the noise level as an input, so its reading of a state is an independent
// measurement of how noisy that state looks.
struct NoiseEstimator {
    DenseNet trunk;
    Schedule schedule;
    long steps_trained = 0;
    double final_loss = 0.0;
    std::string dataset_id;
    std::uint64_t seed = 0;
};

NoiseEstimator train_estimator(const MixtureSpec& data, Schedule sched, long steps,
                               std::uint64_t seed, const std::string& dataset_id = "",
                               std::size_t batch = 256);

struct TEstimate {
    double raw = 0.0;      // direct trunk output, out-of-range kept as signal
    double clamped = 0.0;  // pinned to [0, T] for reporting
};

TEstimate estimate_t(const NoiseEstimator& est, std::span<const double> x);

struct ShiftRow {
    double t_prior = 0.0;
    double mean_sampled = 0.0;
    double mean_forward = 0.0;
    double delta_raw = 0.0;
    double delta_normalized = 0.0;
};

struct KdeCurve {
    double prior_t = 0.0;
    std::string arm;  // "sampled" or "forward"
    Vector grid;
    Vector density;
};

struct ShiftReport {
    std::vector<ShiftRow> rows;
    std::size_t n_sampled = 0;
    std::size_t n_forward = 0;
    std::vector<KdeCurve> curves;
};

// Walks the shared time grid of a trajectory batch; at each time compares the
// estimator's mean reading on sampled states against its reading on fresh
// forward samples at the same time. delta_raw ignores the estimator's own
// bias, delta_normalized subtracts it out. kde_times (matched to the nearest
// grid time) select which times get per-sample density curves.
ShiftReport measure_shift(const std::vector<Trajectory>& trajs, const NoiseEstimator& est,
                          const MixtureSpec& forward_ref, std::size_t n_ref, std::uint64_t seed,
                          const std::vector<double>& kde_times = {}, Exec mode = Exec::Parallel);

// Gaussian-kernel density over a sorted evaluation grid, renormalized so the
// trapezoidal integral over the grid is 1.
std::vector<std::pair<double, double>> kde(const std::vector<double>& samples,
                                           const std::vector<double>& grid,
                                           std::optional<double> bandwidth = std::nullopt);

void save_estimator(const std::string& path, const NoiseEstimator& est);
NoiseEstimator load_estimator(const std::string& path);

}  // namespace nsl
