#include "nsl/net.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace nsl {

namespace {

inline double silu(double x) {
    double s = 1.0 / (1.0 + std::exp(-x));
    return x * s;
}

inline double silu_prime(double x) {
    double s = 1.0 / (1.0 + std::exp(-x));
    return s * (1.0 + x * (1.0 - s));
}

void apply_activation(Activation act, Matrix& m) {
    if (act == Activation::Identity) return;
    for (double& v : m.data) v = silu(v);
}

}  // namespace

DenseNet make_dense(const std::vector<std::size_t>& dims, Rng& rng) {
    if (dims.size() < 2) throw std::invalid_argument("network needs at least one layer");
    DenseNet net;
    net.input_dim = dims.front();
    net.output_dim = dims.back();
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Layer layer;
        layer.w = Matrix(dims[l + 1], dims[l]);
        layer.b.assign(dims[l + 1], 0.0);
        layer.act = (l + 2 == dims.size()) ? Activation::Identity : Activation::SiLU;
        double bound = std::sqrt(6.0 / double(dims[l] + dims[l + 1]));
        for (double& v : layer.w.data) v = bound * (2.0 * rng.uniform() - 1.0);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

std::size_t param_count(const DenseNet& net) {
    std::size_t n = 0;
    for (const auto& l : net.layers) n += l.w.data.size() + l.b.size();
    return n;
}

std::vector<std::span<double>> param_spans(DenseNet& net) {
    std::vector<std::span<double>> spans;
    for (auto& l : net.layers) {
        spans.push_back(l.w.data);
        spans.push_back(l.b);
    }
    return spans;
}

std::vector<std::span<const double>> param_spans(const DenseNet& net) {
    std::vector<std::span<const double>> spans;
    for (const auto& l : net.layers) {
        spans.push_back(l.w.data);
        spans.push_back(l.b);
    }
    return spans;
}

Vector net_apply(const DenseNet& net, std::span<const double> input) {
    if (input.size() != net.input_dim) throw std::invalid_argument("net input dimension mismatch");
    Vector cur(input.begin(), input.end());
    for (const auto& layer : net.layers) {
        Vector next(layer.w.rows);
        for (std::size_t i = 0; i < layer.w.rows; ++i) {
            const double* wr = layer.w.row(i);
            double acc = layer.b[i];
            for (std::size_t j = 0; j < layer.w.cols; ++j) acc += wr[j] * cur[j];
            next[i] = layer.act == Activation::SiLU ? silu(acc) : acc;
        }
        cur = std::move(next);
    }
    return cur;
}

GradBuffer make_grad_buffer(const DenseNet& net) {
    GradBuffer g;
    for (const auto& l : net.layers) {
        g.w.push_back(Matrix(l.w.rows, l.w.cols));
        g.b.push_back(Vector(l.b.size(), 0.0));
    }
    return g;
}

void zero(GradBuffer& g) {
    for (auto& m : g.w) m.data.assign(m.data.size(), 0.0);
    for (auto& v : g.b) v.assign(v.size(), 0.0);
}

std::vector<std::span<const double>> grad_spans(const GradBuffer& g) {
    std::vector<std::span<const double>> spans;
    for (std::size_t l = 0; l < g.w.size(); ++l) {
        spans.push_back(g.w[l].data);
        spans.push_back(g.b[l]);
    }
    return spans;
}

Vector net_grad(const DenseNet& net, std::span<const double> input,
                std::span<const double> upstream, GradBuffer& grads) {
    if (input.size() != net.input_dim) throw std::invalid_argument("net input dimension mismatch");
    if (upstream.size() != net.output_dim)
        throw std::invalid_argument("upstream dimension mismatch");

    std::vector<Vector> pre(net.layers.size());
    std::vector<Vector> act(net.layers.size() + 1);
    act[0].assign(input.begin(), input.end());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& layer = net.layers[l];
        pre[l].resize(layer.w.rows);
        act[l + 1].resize(layer.w.rows);
        for (std::size_t i = 0; i < layer.w.rows; ++i) {
            const double* wr = layer.w.row(i);
            double acc = layer.b[i];
            for (std::size_t j = 0; j < layer.w.cols; ++j) acc += wr[j] * act[l][j];
            pre[l][i] = acc;
            act[l + 1][i] = layer.act == Activation::SiLU ? silu(acc) : acc;
        }
    }

    Vector dcur(upstream.begin(), upstream.end());
    for (std::size_t l = net.layers.size(); l-- > 0;) {
        const auto& layer = net.layers[l];
        if (layer.act == Activation::SiLU)
            for (std::size_t i = 0; i < dcur.size(); ++i) dcur[i] *= silu_prime(pre[l][i]);
        for (std::size_t i = 0; i < layer.w.rows; ++i) {
            double* gw = grads.w[l].row(i);
            for (std::size_t j = 0; j < layer.w.cols; ++j) gw[j] += dcur[i] * act[l][j];
            grads.b[l][i] += dcur[i];
        }
        Vector dprev(layer.w.cols, 0.0);
        for (std::size_t i = 0; i < layer.w.rows; ++i) {
            const double* wr = layer.w.row(i);
            for (std::size_t j = 0; j < layer.w.cols; ++j) dprev[j] += dcur[i] * wr[j];
        }
        dcur = std::move(dprev);
    }
    return dcur;
}

const Matrix& net_apply_batch(const DenseNet& net, const Matrix& input, BatchWorkspace& ws) {
    if (input.cols != net.input_dim) throw std::invalid_argument("net input dimension mismatch");
    ws.pre.resize(net.layers.size());
    ws.act.resize(net.layers.size() + 1);
    ws.act[0] = input;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& layer = net.layers[l];
        matmul_nt(ws.act[l], layer.w, ws.pre[l]);
        for (std::size_t i = 0; i < ws.pre[l].rows; ++i) {
            double* row = ws.pre[l].row(i);
            for (std::size_t j = 0; j < layer.b.size(); ++j) row[j] += layer.b[j];
        }
        ws.act[l + 1] = ws.pre[l];
        apply_activation(layer.act, ws.act[l + 1]);
    }
    return ws.act.back();
}

void net_backward_batch(const DenseNet& net, const Matrix& dout, BatchWorkspace& ws,
                        GradBuffer& grads, Matrix* dinput) {
    check_same_shape(dout, ws.act.back(), "net_backward_batch: upstream shape mismatch");
    ws.dcur = dout;
    for (std::size_t l = net.layers.size(); l-- > 0;) {
        const auto& layer = net.layers[l];
        if (layer.act == Activation::SiLU)
            for (std::size_t i = 0; i < ws.dcur.data.size(); ++i)
                ws.dcur.data[i] *= silu_prime(ws.pre[l].data[i]);
        matmul_tn_acc(ws.dcur, ws.act[l], grads.w[l]);
        for (std::size_t i = 0; i < ws.dcur.rows; ++i) {
            const double* row = ws.dcur.row(i);
            for (std::size_t j = 0; j < layer.b.size(); ++j) grads.b[l][j] += row[j];
        }
        if (l == 0 && !dinput) break;
        matmul_nn(ws.dcur, layer.w, ws.dprev);
        std::swap(ws.dcur, ws.dprev);
    }
    if (dinput) *dinput = ws.dcur;
}

OptimState make_optim(std::size_t n_params, double lr, double beta1, double beta2,
                      double weight_decay) {
    OptimState opt;
    opt.first_moment.assign(n_params, 0.0);
    opt.second_moment.assign(n_params, 0.0);
    opt.lr = lr;
    opt.beta1 = beta1;
    opt.beta2 = beta2;
    opt.weight_decay = weight_decay;
    return opt;
}

void optim_step(OptimState& opt, std::vector<std::span<double>> params,
                std::vector<std::span<const double>> grads) {
    if (params.size() != grads.size()) throw std::invalid_argument("param/grad span count mismatch");
    opt.step_count += 1;
    double bc1 = 1.0 - std::pow(opt.beta1, double(opt.step_count));
    double bc2 = 1.0 - std::pow(opt.beta2, double(opt.step_count));
    std::size_t off = 0;
    for (std::size_t s = 0; s < params.size(); ++s) {
        if (params[s].size() != grads[s].size())
            throw std::invalid_argument("param/grad span size mismatch");
        for (std::size_t i = 0; i < params[s].size(); ++i, ++off) {
            double g = grads[s][i];
            if (!std::isfinite(g)) throw std::runtime_error("non-finite gradient in optimizer step");
            double& m = opt.first_moment[off];
            double& v = opt.second_moment[off];
            m = opt.beta1 * m + (1.0 - opt.beta1) * g;
            v = opt.beta2 * v + (1.0 - opt.beta2) * g * g;
            double mhat = m / bc1;
            double vhat = v / bc2;
            double& p = params[s][i];
            p -= opt.lr * (mhat / (std::sqrt(vhat) + opt.eps) + opt.weight_decay * p);
        }
    }
    if (off != opt.first_moment.size())
        throw std::invalid_argument("parameter count disagrees with optimizer state");
}

EmaState make_ema(std::vector<std::span<const double>> params, double decay) {
    EmaState ema;
    ema.decay = decay;
    for (auto s : params) ema.shadow.insert(ema.shadow.end(), s.begin(), s.end());
    return ema;
}

void ema_update(EmaState& ema, std::vector<std::span<const double>> params) {
    std::size_t off = 0;
    for (auto s : params)
        for (double p : s) {
            ema.shadow[off] = ema.decay * ema.shadow[off] + (1.0 - ema.decay) * p;
            ++off;
        }
    if (off != ema.shadow.size()) throw std::invalid_argument("EMA shadow size mismatch");
}

void ema_copy_to(const EmaState& ema, std::vector<std::span<double>> params) {
    std::size_t off = 0;
    for (auto s : params)
        for (double& p : s) p = ema.shadow[off++];
    if (off != ema.shadow.size()) throw std::invalid_argument("EMA shadow size mismatch");
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is little-endian; big-endian hosts need byte swaps");

void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}

}  // namespace

void save_checkpoint(const std::string& path, const std::string& metadata_json,
                     std::vector<std::span<const double>> payload) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    out.write("NSL1", 4);
    if (metadata_json.size() > UINT32_MAX) throw std::invalid_argument("metadata too large");
    write_u32(out, std::uint32_t(metadata_json.size()));
    out.write(metadata_json.data(), std::streamsize(metadata_json.size()));
    for (auto s : payload)
        out.write(reinterpret_cast<const char*>(s.data()), std::streamsize(s.size() * 8));
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "NSL1", 4) != 0)
        throw std::runtime_error("not a checkpoint file (bad magic): " + path);
    std::uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 4);
    if (!in) throw std::runtime_error("truncated checkpoint header: " + path);
    CheckpointData data;
    data.metadata_json.resize(len);
    in.read(data.metadata_json.data(), len);
    if (!in) throw std::runtime_error("truncated checkpoint metadata: " + path);
    char buf[8];
    while (in.read(buf, 8)) {
        double v;
        std::memcpy(&v, buf, 8);
        data.payload.push_back(v);
    }
    if (in.gcount() != 0) throw std::runtime_error("checkpoint payload not a whole number of doubles");
    return data;
}

}  // namespace nsl
