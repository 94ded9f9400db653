#include "nsl/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "nsl/rng.hpp"

namespace nsl {

namespace {

constexpr std::size_t kEvalChunk = 512;

// Mean clamped reading over the rows of a matrix, evaluated in row chunks
// with disjoint writes and combined in index order, so the result does not
// depend on the thread count.
double mean_reading(const NoiseEstimator& est, const Matrix& states, Exec mode, Vector* per_row) {
    const std::size_t n = states.rows;
    Vector readings(n);
    const std::size_t n_chunks = (n + kEvalChunk - 1) / kEvalChunk;
    for_each_index(n_chunks, mode, [&](std::size_t c) {
        const std::size_t r0 = c * kEvalChunk;
        const std::size_t r1 = std::min(n, r0 + kEvalChunk);
        BatchWorkspace ws;
        Matrix block(r1 - r0, states.cols);
        std::copy(states.row(r0), states.row(r0) + (r1 - r0) * states.cols, block.row(0));
        const Matrix& out = net_apply_batch(est.trunk, block, ws);
        for (std::size_t r = r0; r < r1; ++r) {
            readings[r] = std::clamp(out.at(r - r0, 0), 0.0, Schedule::T);
        }
    });
    double sum = 0.0;
    for (double v : readings) {
        sum += v;
    }
    if (per_row != nullptr) {
        *per_row = std::move(readings);
    }
    return sum / static_cast<double>(n);
}

}  // namespace

NoiseEstimator train_estimator(const MixtureSpec& data, Schedule sched, long steps,
                               std::uint64_t seed, const std::string& dataset_id,
                               std::size_t batch) {
    if (steps < 1) {
        throw std::invalid_argument("train_estimator: steps must be at least 1");
    }
    if (batch == 0) {
        throw std::invalid_argument("train_estimator: batch must be nonempty");
    }
    validate(data);
    const std::size_t dim = data.dim;
    Rng init_rng(seed, 0);
    Rng draw_rng(seed, 1);
    NoiseEstimator est;
    est.trunk = make_dense({dim, 128, 128, 128, 128, 1}, init_rng);
    est.schedule = sched;
    est.steps_trained = steps;
    est.dataset_id = dataset_id;
    est.seed = seed;

    OptimState opt = make_optim(param_count(est.trunk), 1e-4, 0.9, 0.999, 0.0);
    GradBuffer grads = make_grad_buffer(est.trunk);
    BatchWorkspace ws;
    Matrix input(batch, dim);
    Matrix dout(batch, 1);
    Vector x0(dim);
    Vector targets(batch);
    int label = 0;
    double running = 0.0;

    for (long step = 0; step < steps; ++step) {
        for (std::size_t i = 0; i < batch; ++i) {
            sample_one(data, draw_rng, x0, label);
            const double t = draw_rng.uniform() * Schedule::T;
            const ScheduleEval se = eval_schedule(sched, t);
            for (std::size_t j = 0; j < dim; ++j) {
                input.at(i, j) = se.alpha * x0[j] + se.sigma * draw_rng.normal();
            }
            targets[i] = t;
        }
        const Matrix& pred = net_apply_batch(est.trunk, input, ws);
        double loss = 0.0;
        for (std::size_t i = 0; i < batch; ++i) {
            const double r = pred.at(i, 0) - targets[i];
            loss += r * r;
            dout.at(i, 0) = 2.0 * r / static_cast<double>(batch);
        }
        loss /= static_cast<double>(batch);
        if (!std::isfinite(loss)) {
            throw std::runtime_error("train_estimator: loss diverged at step " +
                                     std::to_string(step));
        }
        running = step == 0 ? loss : 0.99 * running + 0.01 * loss;
        zero(grads);
        net_backward_batch(est.trunk, dout, ws, grads);
        optim_step(opt, param_spans(est.trunk), grad_spans(grads));
    }
    est.final_loss = running;
    return est;
}

TEstimate estimate_t(const NoiseEstimator& est, std::span<const double> x) {
    Vector out = net_apply(est.trunk, x);
    TEstimate e;
    e.raw = out[0];
    e.clamped = std::clamp(out[0], 0.0, Schedule::T);
    return e;
}

ShiftReport measure_shift(const std::vector<Trajectory>& trajs, const NoiseEstimator& est,
                          const MixtureSpec& forward_ref, std::size_t n_ref, std::uint64_t seed,
                          const std::vector<double>& kde_times, Exec mode) {
    if (trajs.empty()) {
        throw std::invalid_argument("measure_shift: empty trajectory list");
    }
    if (n_ref == 0) {
        throw std::invalid_argument("measure_shift: need forward reference samples");
    }
    validate(forward_ref);
    const Vector& times = trajs.front().times;
    for (const Trajectory& tr : trajs) {
        if (tr.times != times) {
            throw std::invalid_argument("measure_shift: trajectories must share a time grid");
        }
    }
    const std::size_t dim = forward_ref.dim;
    if (trajs.front().states.cols != dim) {
        throw std::invalid_argument("measure_shift: state dimension does not match reference");
    }

    // Times that get per-sample density curves, snapped to the grid.
    std::vector<std::size_t> curve_idx;
    for (double want : kde_times) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < times.size(); ++i) {
            if (std::abs(times[i] - want) < std::abs(times[best] - want)) {
                best = i;
            }
        }
        if (std::find(curve_idx.begin(), curve_idx.end(), best) == curve_idx.end()) {
            curve_idx.push_back(best);
        }
    }

    ShiftReport report;
    report.n_sampled = trajs.size();
    report.n_forward = n_ref;
    report.rows.resize(times.size());

    Matrix sampled(trajs.size(), dim);
    Matrix forward(n_ref, dim);
    Vector x0(dim);
    int label = 0;
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
        const double t = times[ti];
        for (std::size_t r = 0; r < trajs.size(); ++r) {
            std::copy(trajs[r].states.row(ti), trajs[r].states.row(ti) + dim, sampled.row(r));
        }
        // Fresh reference batch per grid time, one stream per time index.
        Rng rng(seed, ti);
        const ScheduleEval se = eval_schedule(est.schedule, t);
        for (std::size_t r = 0; r < n_ref; ++r) {
            sample_one(forward_ref, rng, x0, label);
            for (std::size_t j = 0; j < dim; ++j) {
                forward.at(r, j) = se.alpha * x0[j] + se.sigma * rng.normal();
            }
        }
        const bool want_curve =
            std::find(curve_idx.begin(), curve_idx.end(), ti) != curve_idx.end();
        Vector sampled_readings;
        Vector forward_readings;
        ShiftRow& row = report.rows[ti];
        row.t_prior = t;
        row.mean_sampled =
            mean_reading(est, sampled, mode, want_curve ? &sampled_readings : nullptr);
        row.mean_forward =
            mean_reading(est, forward, mode, want_curve ? &forward_readings : nullptr);
        row.delta_raw = row.mean_sampled - row.t_prior;
        // Built from delta_raw so the decomposition identity is exact.
        row.delta_normalized = row.delta_raw - (row.mean_forward - row.t_prior);

        if (want_curve) {
            Vector grid(241);
            for (std::size_t g = 0; g < grid.size(); ++g) {
                grid[g] = -0.1 + 0.005 * static_cast<double>(g);
            }
            for (auto [arm, readings] :
                 {std::pair<const char*, Vector*>{"sampled", &sampled_readings},
                  std::pair<const char*, Vector*>{"forward", &forward_readings}}) {
                auto curve = kde(*readings, grid);
                KdeCurve kc;
                kc.prior_t = t;
                kc.arm = arm;
                kc.grid = grid;
                kc.density.resize(curve.size());
                for (std::size_t g = 0; g < curve.size(); ++g) {
                    kc.density[g] = curve[g].second;
                }
                report.curves.push_back(std::move(kc));
            }
        }
    }
    return report;
}

std::vector<std::pair<double, double>> kde(const std::vector<double>& samples,
                                           const std::vector<double>& grid,
                                           std::optional<double> bandwidth) {
    if (samples.empty()) {
        throw std::invalid_argument("kde: no samples");
    }
    if (grid.size() < 2 || !std::is_sorted(grid.begin(), grid.end())) {
        throw std::invalid_argument("kde: grid must be sorted with at least two points");
    }
    const double n = static_cast<double>(samples.size());
    double h;
    if (bandwidth) {
        h = *bandwidth;
        if (!(h > 0.0)) {
            throw std::invalid_argument("kde: bandwidth must be positive");
        }
    } else {
        const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
        double var = 0.0;
        for (double s : samples) {
            var += (s - mean) * (s - mean);
        }
        var /= n;
        // Exact ties and accumulated rounding both land here; a bandwidth of
        // rounding-noise size would render the curve as isolated spikes.
        if (var < 1e-24) {
            throw std::invalid_argument("kde: zero-variance samples need an explicit bandwidth");
        }
        h = 1.06 * std::sqrt(var) * std::pow(n, -0.2);
    }
    const double norm = 1.0 / (n * h * std::sqrt(2.0 * 3.14159265358979323846));
    std::vector<std::pair<double, double>> out(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double acc = 0.0;
        for (double s : samples) {
            const double z = (grid[g] - s) / h;
            acc += std::exp(-0.5 * z * z);
        }
        out[g] = {grid[g], norm * acc};
    }
    double integral = 0.0;
    for (std::size_t g = 0; g + 1 < grid.size(); ++g) {
        integral += 0.5 * (out[g].second + out[g + 1].second) * (grid[g + 1] - grid[g]);
    }
    if (integral > 0.0) {
        for (auto& p : out) {
            p.second /= integral;
        }
    }
    return out;
}

void save_estimator(const std::string& path, const NoiseEstimator& est) {
    nlohmann::json meta;
    meta["kind"] = "estimator";
    meta["state_dim"] = est.trunk.input_dim;
    std::vector<std::size_t> hidden;
    for (std::size_t l = 0; l + 1 < est.trunk.layers.size(); ++l) {
        hidden.push_back(est.trunk.layers[l].w.rows);
    }
    meta["hidden"] = hidden;
    meta["schedule"] = est.schedule.kind == ScheduleKind::Linear ? "linear" : "trig_vp";
    meta["steps_trained"] = est.steps_trained;
    meta["final_loss"] = est.final_loss;
    meta["dataset_id"] = est.dataset_id;
    meta["seed"] = est.seed;
    save_checkpoint(path, meta.dump(), param_spans(est.trunk));
}

NoiseEstimator load_estimator(const std::string& path) {
    CheckpointData data = load_checkpoint(path);
    nlohmann::json meta = nlohmann::json::parse(data.metadata_json);
    if (meta.value("kind", "") != "estimator") {
        throw std::runtime_error("load_estimator: checkpoint is not an estimator");
    }
    NoiseEstimator est;
    std::vector<std::size_t> dims;
    dims.push_back(meta.at("state_dim").get<std::size_t>());
    for (std::size_t h : meta.at("hidden").get<std::vector<std::size_t>>()) {
        dims.push_back(h);
    }
    dims.push_back(1);
    Rng rng(0, 0);
    est.trunk = make_dense(dims, rng);
    est.schedule.kind =
        meta.at("schedule").get<std::string>() == "linear" ? ScheduleKind::Linear
                                                           : ScheduleKind::TrigVP;
    est.steps_trained = meta.at("steps_trained").get<long>();
    est.final_loss = meta.at("final_loss").get<double>();
    est.dataset_id = meta.value("dataset_id", "");
    est.seed = meta.at("seed").get<std::uint64_t>();
    std::size_t offset = 0;
    for (auto span : param_spans(est.trunk)) {
        if (offset + span.size() > data.payload.size()) {
            throw std::runtime_error("load_estimator: payload too short");
        }
        std::copy(data.payload.begin() + static_cast<std::ptrdiff_t>(offset),
                  data.payload.begin() + static_cast<std::ptrdiff_t>(offset + span.size()),
                  span.begin());
        offset += span.size();
    }
    if (offset != data.payload.size()) {
        throw std::runtime_error("load_estimator: payload size mismatch");
    }
    return est;
}

}  // namespace nsl
