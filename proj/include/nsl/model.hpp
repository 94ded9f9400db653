#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "nsl/mixture.hpp"
#include "nsl/net.hpp"
#include "nsl/schedule.hpp"

namespace nsl {

// Conditioning layout for the velocity trunk. The input row is always
// [state | noise slot | class slot]: the noise slot carries Fourier features
// of t, or a learned null token when the noise condition is dropped; the
// class slot carries a learned per-class embedding, with the last table row
// reserved as the class-null token. Slots never collapse, so dropping a
// condition changes values, not shapes.
struct ConditionEmbedding {
    int t_fourier_bands = 32;
    Matrix class_table;      // (num_classes + 1) x embed_dim
    Vector noise_null_token; // embed_dim
    int embed_dim() const { return 2 * t_fourier_bands; }
};

struct DropoutPolicy {
    double p_drop_noise = 0.1;
    double p_drop_class = 0.1;
};

struct VelocityModel {
    ConditionEmbedding embed;
    DenseNet trunk;
    Schedule schedule;
    int num_classes = 0;
    std::size_t state_dim = 0;
};

// Log-spaced frequencies pi * 2^0 .. pi * 2^7; writes sin/cos pairs
// (2*bands values) to out.
void fourier_features(double t, int bands, std::span<double> out);

VelocityModel make_velocity_model(std::size_t state_dim, int num_classes,
                                  const std::vector<std::size_t>& hidden, Schedule sched,
                                  Rng& rng);

// All learned parameters: trunk in layer order, then class table, then the
// noise-null token. This order is the checkpoint payload contract.
std::vector<std::span<double>> model_param_spans(VelocityModel& model);
std::vector<std::span<const double>> model_param_spans(const VelocityModel& model);

// Single-state velocity prediction. Absent t_cond or y_cond routes the
// corresponding null token into the trunk.
Vector predict_velocity(const VelocityModel& model, std::span<const double> x,
                        std::optional<double> t_cond, std::optional<int> y_cond);

// Velocity converted to a score via the interpolant algebra at time t. When
// t_cond_present is false the trunk sees the null token but the conversion
// coefficients still use the trajectory time t.
Vector model_score(const VelocityModel& model, std::span<const double> x, double t,
                   std::optional<int> y_cond, bool t_cond_present);

struct ModelGrads {
    GradBuffer trunk;
    Matrix class_table;
    Vector noise_null_token;
};
ModelGrads make_model_grads(const VelocityModel& model);
void zero(ModelGrads& g);
std::vector<std::span<const double>> model_grad_spans(const ModelGrads& g);

struct TrainScratch {
    BatchWorkspace ws;
    Matrix input;
    Matrix dout;
    Matrix dinput;
    std::vector<double> t;
    std::vector<int> token_row;  // class-table row fed per example
    std::vector<bool> noise_dropped;
    Matrix x0, eps, target;
    std::vector<int> labels;
};

// One optimizer step on a freshly drawn batch: per example draws
// t ~ U(0, 1), eps ~ N(0, I), independent condition drops per the policy,
// then regresses the trunk output onto the interpolant velocity target.
// Returns the pre-update mean over the batch of the squared-norm residual.
double train_step(VelocityModel& model, const MixtureSpec& data, std::size_t batch,
                  const DropoutPolicy& policy, OptimState& opt, ModelGrads& grads,
                  TrainScratch& scratch, Rng& rng);

// Batched velocity prediction for the sampler: rows of x at a shared time t.
// y_token selects the class-table row per example (num_classes = null);
// t_present false substitutes the noise-null token for every row.
void predict_velocity_batch(const VelocityModel& model, const Matrix& x, double t,
                            std::span<const int> y_token, bool t_present, BatchWorkspace& ws,
                            Matrix& scratch_input, Matrix& out);

// Checkpoint round trip (container from the net layer). Metadata records
// dims, schedule, class count, dropout rates, and training step count.
void save_model(const std::string& path, const VelocityModel& model, const DropoutPolicy& policy,
                long steps_trained, std::uint64_t seed);
struct LoadedModel {
    VelocityModel model;
    DropoutPolicy policy;
    long steps_trained = 0;
    std::uint64_t seed = 0;
};
LoadedModel load_model(const std::string& path);

}  // namespace nsl
