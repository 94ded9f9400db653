#include "nsl/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>

#include "nsl/estimator.hpp"
#include "nsl/oracle.hpp"
#include "nsl/rng.hpp"

namespace nsl {

namespace {

constexpr std::size_t kChunk = 256;

// Below this sigma the Langevin term w_t = sigma_t is negligible and the
// score conversion loses precision, so the step degenerates to drift-only.
constexpr double kSigmaNoiseFloor = 1e-6;

struct ModelScratch final : FieldScratch {
    BatchWorkspace ws;
    Matrix input;
    Matrix v_cond;
    Matrix v_aux;
    std::vector<int> tokens;
    GradBuffer est_grads;
};

struct OracleScratch final : FieldScratch {};

}  // namespace

Vector time_grid(const SamplerConfig& cfg, double T) {
    if (cfg.steps < 2) {
        throw std::invalid_argument("time_grid: steps must be at least 2");
    }
    if (!(cfg.last_step_size > 0.0) || !(cfg.last_step_size < T)) {
        throw std::invalid_argument("time_grid: last_step_size must lie in (0, T)");
    }
    Vector times(static_cast<std::size_t>(cfg.steps) + 1);
    const double span = T - cfg.last_step_size;
    const int coarse = cfg.steps - 1;
    for (int i = 0; i < cfg.steps; ++i) {
        times[static_cast<std::size_t>(i)] = T - span * static_cast<double>(i) / coarse;
    }
    times[static_cast<std::size_t>(cfg.steps) - 1] = cfg.last_step_size;
    times[static_cast<std::size_t>(cfg.steps)] = 0.0;
    return times;
}

ModelField::ModelField(const VelocityModel& model, GuidanceSpec spec,
                       const NoiseEstimator* estimator)
    : model_(&model), spec_(spec), estimator_(estimator) {
    if (spec_.nag_mode == NagMode::ClassifierBased && estimator_ == nullptr) {
        throw std::invalid_argument("ModelField: ClassifierBased guidance needs an estimator");
    }
    if (spec_.nag_mode == NagMode::ClassifierBased && !(spec_.tau > 0.0)) {
        throw std::invalid_argument("ModelField: tau must be positive");
    }
}

std::unique_ptr<FieldScratch> ModelField::make_scratch(std::size_t max_rows) const {
    auto s = std::make_unique<ModelScratch>();
    s->tokens.resize(max_rows);
    if (spec_.nag_mode == NagMode::ClassifierBased) {
        s->est_grads = make_grad_buffer(estimator_->trunk);
    }
    return s;
}

void ModelField::eval(const Matrix& x, double t, std::span<const int> labels,
                      FieldScratch& scratch, Matrix& v_out) const {
    auto& s = static_cast<ModelScratch&>(scratch);
    const std::size_t rows = x.rows;
    predict_velocity_batch(*model_, x, t, labels, /*t_present=*/true, s.ws, s.input, s.v_cond);
    v_out = s.v_cond;
    if (spec_.w_cfg != 0.0) {
        s.tokens.assign(rows, model_->num_classes);
        predict_velocity_batch(*model_, x, t, s.tokens, /*t_present=*/true, s.ws, s.input,
                               s.v_aux);
        for (std::size_t i = 0; i < v_out.data.size(); ++i) {
            v_out.data[i] += spec_.w_cfg * (s.v_cond.data[i] - s.v_aux.data[i]);
        }
    }
    if (spec_.nag_mode == NagMode::ClassifierFree && spec_.w_nag != 0.0) {
        predict_velocity_batch(*model_, x, t, labels, /*t_present=*/false, s.ws, s.input,
                               s.v_aux);
        for (std::size_t i = 0; i < v_out.data.size(); ++i) {
            v_out.data[i] += spec_.w_nag * (s.v_cond.data[i] - s.v_aux.data[i]);
        }
    } else if (spec_.nag_mode == NagMode::ClassifierBased && spec_.w_nag != 0.0) {
        const ScheduleEval se = eval_schedule(model_->schedule, t);
        // The score-space pull converts to velocity space through the factor
        // -sigma D / alpha, which diverges where alpha vanishes (the pure
        // noise endpoint); the correction is dropped there.
        if (se.alpha > 1e-8) {
            const double d = se.alpha * se.sigma_dot - se.alpha_dot * se.sigma;
            const double factor = -(se.sigma * d / se.alpha) * spec_.w_nag / (spec_.tau * spec_.tau);
            Vector upstream(1, 1.0);
            for (std::size_t i = 0; i < rows; ++i) {
                std::span<const double> row(x.row(i), x.cols);
                Vector value = net_apply(estimator_->trunk, row);
                Vector gx = net_grad(estimator_->trunk, row, upstream, s.est_grads);
                const double pull = factor * (t - value[0]);
                for (std::size_t j = 0; j < gx.size(); ++j) {
                    v_out.at(i, j) += pull * gx[j];
                }
            }
        }
    }
}

OracleField::OracleField(const MixtureSpec& mix, Schedule sched) : mix_(&mix), sched_(sched) {
    validate(mix);
}

std::unique_ptr<FieldScratch> OracleField::make_scratch(std::size_t) const {
    return std::make_unique<OracleScratch>();
}

void OracleField::eval(const Matrix& x, double t, std::span<const int>, FieldScratch&,
                       Matrix& v_out) const {
    v_out.resize(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        Vector v = oracle_velocity(*mix_, std::span<const double>(x.row(i), x.cols), t, sched_);
        for (std::size_t j = 0; j < x.cols; ++j) {
            v_out.at(i, j) = v[j];
        }
    }
}

std::vector<Trajectory> sample(const VelocityField& field, const SamplerConfig& cfg,
                               std::size_t n, std::optional<int> fixed_label, Exec mode,
                               const std::string& model_id) {
    if (n == 0) {
        throw std::invalid_argument("sample: need at least one trajectory");
    }
    if (fixed_label && field.label_count() > 0 &&
        (*fixed_label < 0 || *fixed_label >= field.label_count())) {
        throw std::invalid_argument("sample: fixed label out of range");
    }
    const Schedule sched = field.schedule();
    const Vector times = time_grid(cfg, Schedule::T);
    const std::size_t dim = field.dim();
    const std::size_t n_times = times.size();

    std::vector<Trajectory> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i].times = times;
        out[i].states.resize(n_times, dim);
        out[i].seed = cfg.seed;
        out[i].guidance = field.guidance_spec();
        out[i].model_id = model_id;
    }

    const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
    std::exception_ptr failure = nullptr;
    std::mutex failure_mutex;

    for_each_index(n_chunks, mode, [&](std::size_t c) {
        try {
            const std::size_t r0 = c * kChunk;
            const std::size_t rows = std::min(kChunk, n - r0);
            auto scratch = field.make_scratch(rows);

            std::vector<Rng> engines;
            engines.reserve(rows);
            for (std::size_t r = 0; r < rows; ++r) {
                engines.emplace_back(cfg.seed, r0 + r);
            }

            // Fixed draw order per trajectory stream: class label first when
            // one is drawn, then the initial noise state, then step noise.
            std::vector<int> labels(rows, -1);
            if (field.label_count() > 0) {
                for (std::size_t r = 0; r < rows; ++r) {
                    labels[r] = fixed_label ? *fixed_label
                                            : static_cast<int>(engines[r].uniform_index(
                                                  static_cast<std::size_t>(field.label_count())));
                }
            }
            Matrix x(rows, dim);
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t j = 0; j < dim; ++j) {
                    x.at(r, j) = engines[r].normal();
                }
                std::copy(x.row(r), x.row(r) + dim, out[r0 + r].states.row(0));
                out[r0 + r].label = labels[r];
            }

            Matrix v;
            for (std::size_t i = 0; i + 1 < n_times; ++i) {
                const double t = times[i];
                const double t_next = times[i + 1];
                const double dt = t - t_next;
                field.eval(x, t, labels, *scratch, v);
                const ScheduleEval se = eval_schedule(sched, t);
                const bool noisy = cfg.kind == SamplerKind::EulerMaruyamaSDE &&
                                   cfg.w_choice == WChoice::SigmaT && t_next > 0.0 &&
                                   se.sigma >= kSigmaNoiseFloor;
                if (noisy) {
                    const double w = se.sigma;
                    const double d = se.alpha * se.sigma_dot - se.alpha_dot * se.sigma;
                    const double noise_scale = std::sqrt(w * dt);
                    for (std::size_t r = 0; r < rows; ++r) {
                        for (std::size_t j = 0; j < dim; ++j) {
                            const double vv = v.at(r, j);
                            const double score =
                                -(se.alpha * vv - se.alpha_dot * x.at(r, j)) / (se.sigma * d);
                            x.at(r, j) -= dt * (vv - 0.5 * w * score);
                        }
                        for (std::size_t j = 0; j < dim; ++j) {
                            x.at(r, j) += noise_scale * engines[r].normal();
                        }
                    }
                } else {
                    for (std::size_t r = 0; r < rows; ++r) {
                        for (std::size_t j = 0; j < dim; ++j) {
                            x.at(r, j) -= dt * v.at(r, j);
                        }
                    }
                }
                for (std::size_t r = 0; r < rows; ++r) {
                    double sum = 0.0;
                    for (std::size_t j = 0; j < dim; ++j) {
                        sum += x.at(r, j);
                    }
                    if (!std::isfinite(sum)) {
                        throw std::runtime_error(
                            "sample: non-finite state in trajectory " + std::to_string(r0 + r) +
                            " stepping from t=" + std::to_string(t) +
                            "; recorded prefix ends at that time");
                    }
                    std::copy(x.row(r), x.row(r) + dim, out[r0 + r].states.row(i + 1));
                }
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (failure == nullptr) {
                failure = std::current_exception();
            }
        }
    });
    if (failure != nullptr) {
        std::rethrow_exception(failure);
    }
    return out;
}

Matrix final_states(const std::vector<Trajectory>& trajs) {
    if (trajs.empty()) {
        throw std::invalid_argument("final_states: empty batch");
    }
    const std::size_t dim = trajs.front().states.cols;
    Matrix m(trajs.size(), dim);
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        const std::size_t last = trajs[i].states.rows - 1;
        for (std::size_t j = 0; j < dim; ++j) {
            m.at(i, j) = trajs[i].states.at(last, j);
        }
    }
    return m;
}

}  // namespace nsl
