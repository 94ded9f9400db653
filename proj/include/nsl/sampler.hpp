#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nsl/guidance.hpp"
#include "nsl/mixture.hpp"
#include "nsl/model.hpp"
#include "nsl/parallel.hpp"
#include "nsl/schedule.hpp"

namespace nsl {

enum class SamplerKind { EulerODE, EulerMaruyamaSDE };

// Diffusion strength w_t for the reverse SDE: SigmaT uses w_t = sigma_t,
// Zero degenerates to the probability-flow ODE.
enum class WChoice { SigmaT, Zero };

struct SamplerConfig {
    SamplerKind kind = SamplerKind::EulerMaruyamaSDE;
    int steps = 250;
    double last_step_size = 0.04;
    WChoice w_choice = WChoice::SigmaT;
    std::uint64_t seed = 0;
};

// Descending times, steps+1 entries: steps-1 uniform intervals from T down to
// last_step_size, then one final interval to 0 integrated drift-only.
Vector time_grid(const SamplerConfig& cfg, double T);

struct Trajectory {
    Vector times;           // descending, steps+1 entries
    Matrix states;          // one row per time
    int label = -1;         // class drawn or fixed for this trajectory, -1 if none
    std::uint64_t seed = 0; // base seed of the run it belongs to
    GuidanceSpec guidance;
    std::string model_id;
};

// Per-chunk mutable evaluation state owned by the caller, so a frozen field
// can serve many chunks concurrently.
struct FieldScratch {
    virtual ~FieldScratch() = default;
};

// A guided velocity field. Score-space guidance is folded into the velocity
// (the conversion is affine, so mixing commutes with it); the integrator
// recovers the matching score through score_from_velocity where it needs one.
class VelocityField {
public:
    virtual ~VelocityField() = default;
    virtual std::size_t dim() const = 0;
    virtual Schedule schedule() const = 0;
    // Number of class choices to draw per trajectory; 0 means unlabeled.
    virtual int label_count() const = 0;
    virtual GuidanceSpec guidance_spec() const { return {}; }
    virtual std::unique_ptr<FieldScratch> make_scratch(std::size_t max_rows) const = 0;
    virtual void eval(const Matrix& x, double t, std::span<const int> labels,
                      FieldScratch& scratch, Matrix& v_out) const = 0;
};

class ModelField : public VelocityField {
public:
    ModelField(const VelocityModel& model, GuidanceSpec spec, const NoiseEstimator* estimator);
    std::size_t dim() const override { return model_->state_dim; }
    Schedule schedule() const override { return model_->schedule; }
    int label_count() const override { return model_->num_classes; }
    GuidanceSpec guidance_spec() const override { return spec_; }
    std::unique_ptr<FieldScratch> make_scratch(std::size_t max_rows) const override;
    void eval(const Matrix& x, double t, std::span<const int> labels, FieldScratch& scratch,
              Matrix& v_out) const override;

private:
    const VelocityModel* model_;
    GuidanceSpec spec_;
    const NoiseEstimator* estimator_;
};

// Analytic field over a mixture: ground truth for sampler checks and for
// step-count sweeps free of learned-model error.
class OracleField : public VelocityField {
public:
    OracleField(const MixtureSpec& mix, Schedule sched);
    std::size_t dim() const override { return mix_->dim; }
    Schedule schedule() const override { return sched_; }
    int label_count() const override { return 0; }
    std::unique_ptr<FieldScratch> make_scratch(std::size_t max_rows) const override;
    void eval(const Matrix& x, double t, std::span<const int> labels, FieldScratch& scratch,
              Matrix& v_out) const override;

private:
    const MixtureSpec* mix_;
    Schedule sched_;
};

// Integrates n reverse trajectories from t=T noise to t=0. Each trajectory
// owns an RNG stream derived from (cfg.seed, trajectory index) and consumes
// it in a fixed order, so serial and parallel runs agree bitwise. A fixed
// label suppresses the per-trajectory class draw.
std::vector<Trajectory> sample(const VelocityField& field, const SamplerConfig& cfg,
                               std::size_t n, std::optional<int> fixed_label, Exec mode,
                               const std::string& model_id);

// Final states of a trajectory batch stacked into one matrix.
Matrix final_states(const std::vector<Trajectory>& trajs);

}  // namespace nsl
