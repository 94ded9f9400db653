#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nsl/linalg.hpp"
#include "nsl/rng.hpp"

namespace nsl {

enum class Activation { SiLU, Identity };

struct Layer {
    Matrix w;  // out x in
    Vector b;
    Activation act = Activation::SiLU;
};

struct DenseNet {
    std::vector<Layer> layers;
    std::size_t input_dim = 0;
    std::size_t output_dim = 0;
};

// Hidden layers get SiLU, the final layer Identity. Weights start uniform in
// +-sqrt(6/(fan_in+fan_out)), biases at zero.
DenseNet make_dense(const std::vector<std::size_t>& dims, Rng& rng);

std::size_t param_count(const DenseNet& net);

// Mutable views over all parameters in serialization order (per layer:
// weights row-major, then bias). The flat order is the contract for the
// optimizer, EMA shadows, and checkpoints.
std::vector<std::span<double>> param_spans(DenseNet& net);
std::vector<std::span<const double>> param_spans(const DenseNet& net);

Vector net_apply(const DenseNet& net, std::span<const double> input);

struct GradBuffer {
    std::vector<Matrix> w;
    std::vector<Vector> b;
};
GradBuffer make_grad_buffer(const DenseNet& net);
void zero(GradBuffer& g);
std::vector<std::span<const double>> grad_spans(const GradBuffer& g);

// Exact reverse-mode gradients of <upstream, net(input)>; returns the input
// gradient and accumulates parameter gradients into grads.
Vector net_grad(const DenseNet& net, std::span<const double> input,
                std::span<const double> upstream, GradBuffer& grads);

// Batched row-per-example forward/backward sharing one workspace so the
// training loop does no per-step allocation.
struct BatchWorkspace {
    std::vector<Matrix> pre;  // pre-activations per layer
    std::vector<Matrix> act;  // activations per layer (act[0] is the input)
    Matrix dcur, dprev;
};

const Matrix& net_apply_batch(const DenseNet& net, const Matrix& input, BatchWorkspace& ws);

// Backward for the batch most recently pushed through ws; accumulates into
// grads and, when dinput is non-null, writes the input gradient there.
void net_backward_batch(const DenseNet& net, const Matrix& dout, BatchWorkspace& ws,
                        GradBuffer& grads, Matrix* dinput = nullptr);

// Decoupled-weight-decay Adam over a flat parameter ordering.
struct OptimState {
    Vector first_moment;
    Vector second_moment;
    long step_count = 0;
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double weight_decay = 0.0;
    double eps = 1e-8;
};

OptimState make_optim(std::size_t n_params, double lr, double beta1, double beta2,
                      double weight_decay);

void optim_step(OptimState& opt, std::vector<std::span<double>> params,
                std::vector<std::span<const double>> grads);

struct EmaState {
    Vector shadow;
    double decay = 0.9999;
};

EmaState make_ema(std::vector<std::span<const double>> params, double decay);
void ema_update(EmaState& ema, std::vector<std::span<const double>> params);
void ema_copy_to(const EmaState& ema, std::vector<std::span<double>> params);

// Versioned binary container: magic "NSL1", little-endian u32 metadata
// length, UTF-8 JSON metadata, then the parameter payload as little-endian
// 64-bit floats in flat order. Round trips bit-exactly.
void save_checkpoint(const std::string& path, const std::string& metadata_json,
                     std::vector<std::span<const double>> payload);

struct CheckpointData {
    std::string metadata_json;
    Vector payload;
};
CheckpointData load_checkpoint(const std::string& path);

}  // namespace nsl
