#include "nsl/model.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace nsl {

namespace {

constexpr double kPi = 3.14159265358979323846;

int class_token(const VelocityModel& model, std::optional<int> y_cond) {
    if (!y_cond) return model.num_classes;
    if (*y_cond < 0 || *y_cond >= model.num_classes)
        throw std::invalid_argument("class index outside the trained label range");
    return *y_cond;
}

void fill_input_row(const VelocityModel& model, std::span<const double> x,
                    std::optional<double> t_cond, int token, double* row) {
    const int ed = model.embed.embed_dim();
    for (std::size_t d = 0; d < model.state_dim; ++d) row[d] = x[d];
    double* noise_slot = row + model.state_dim;
    if (t_cond) {
        fourier_features(*t_cond, model.embed.t_fourier_bands,
                         std::span<double>(noise_slot, std::size_t(ed)));
    } else {
        for (int i = 0; i < ed; ++i) noise_slot[i] = model.embed.noise_null_token[i];
    }
    const double* cls = model.embed.class_table.row(std::size_t(token));
    double* class_slot = noise_slot + ed;
    for (int i = 0; i < ed; ++i) class_slot[i] = cls[i];
}

}  // namespace

void fourier_features(double t, int bands, std::span<double> out) {
    if (out.size() != std::size_t(2 * bands)) throw std::invalid_argument("fourier output size mismatch");
    for (int k = 0; k < bands; ++k) {
        double freq = kPi * std::exp2(7.0 * k / double(bands - 1));
        out[std::size_t(k)] = std::sin(freq * t);
        out[std::size_t(bands + k)] = std::cos(freq * t);
    }
}

VelocityModel make_velocity_model(std::size_t state_dim, int num_classes,
                                  const std::vector<std::size_t>& hidden, Schedule sched,
                                  Rng& rng) {
    if (num_classes < 1) throw std::invalid_argument("model needs at least one class");
    VelocityModel model;
    model.schedule = sched;
    model.num_classes = num_classes;
    model.state_dim = state_dim;
    model.embed.class_table = Matrix(std::size_t(num_classes) + 1, std::size_t(model.embed.embed_dim()));
    model.embed.noise_null_token.assign(std::size_t(model.embed.embed_dim()), 0.0);

    std::vector<std::size_t> dims;
    dims.push_back(state_dim + 2 * std::size_t(model.embed.embed_dim()));
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(state_dim);
    model.trunk = make_dense(dims, rng);
    // Embedding tables start near zero, comparable to a trained token's
    // early magnitude, so conditioning signals grow rather than dominate.
    for (double& v : model.embed.class_table.data) v = 0.02 * rng.normal();
    for (double& v : model.embed.noise_null_token) v = 0.02 * rng.normal();
    return model;
}

std::vector<std::span<double>> model_param_spans(VelocityModel& model) {
    auto spans = param_spans(model.trunk);
    spans.push_back(model.embed.class_table.data);
    spans.push_back(model.embed.noise_null_token);
    return spans;
}

std::vector<std::span<const double>> model_param_spans(const VelocityModel& model) {
    auto spans = param_spans(model.trunk);
    spans.push_back(model.embed.class_table.data);
    spans.push_back(model.embed.noise_null_token);
    return spans;
}

Vector predict_velocity(const VelocityModel& model, std::span<const double> x,
                        std::optional<double> t_cond, std::optional<int> y_cond) {
    if (x.size() != model.state_dim) throw std::invalid_argument("state dimension mismatch");
    if (t_cond && !(*t_cond >= 0.0 && *t_cond <= Schedule::T))
        throw std::domain_error("conditioning time outside [0, T]");
    Vector input(model.trunk.input_dim);
    fill_input_row(model, x, t_cond, class_token(model, y_cond), input.data());
    return net_apply(model.trunk, input);
}

Vector model_score(const VelocityModel& model, std::span<const double> x, double t,
                   std::optional<int> y_cond, bool t_cond_present) {
    Vector v = predict_velocity(model, x, t_cond_present ? std::optional<double>(t) : std::nullopt,
                                y_cond);
    return score_from_velocity(x, v, t, model.schedule);
}

ModelGrads make_model_grads(const VelocityModel& model) {
    ModelGrads g;
    g.trunk = make_grad_buffer(model.trunk);
    g.class_table = Matrix(model.embed.class_table.rows, model.embed.class_table.cols);
    g.noise_null_token.assign(model.embed.noise_null_token.size(), 0.0);
    return g;
}

void zero(ModelGrads& g) {
    zero(g.trunk);
    g.class_table.data.assign(g.class_table.data.size(), 0.0);
    g.noise_null_token.assign(g.noise_null_token.size(), 0.0);
}

std::vector<std::span<const double>> model_grad_spans(const ModelGrads& g) {
    auto spans = grad_spans(g.trunk);
    spans.push_back(g.class_table.data);
    spans.push_back(g.noise_null_token);
    return spans;
}

double train_step(VelocityModel& model, const MixtureSpec& data, std::size_t batch,
                  const DropoutPolicy& policy, OptimState& opt, ModelGrads& grads,
                  TrainScratch& sc, Rng& rng) {
    if (batch == 0) throw std::invalid_argument("empty training batch");
    const std::size_t dim = model.state_dim;
    const int ed = model.embed.embed_dim();

    sc.input = Matrix(batch, model.trunk.input_dim);
    sc.target = Matrix(batch, dim);
    sc.x0 = Matrix(batch, dim);
    sc.eps = Matrix(batch, dim);
    sc.t.resize(batch);
    sc.token_row.resize(batch);
    sc.noise_dropped.resize(batch);
    sc.labels.resize(batch);

    // All randomness is drawn serially here in a fixed per-example order;
    // the heavy math below is then free to use any execution layout.
    for (std::size_t i = 0; i < batch; ++i) {
        sample_one(data, rng, std::span<double>(sc.x0.row(i), dim), sc.labels[i]);
        sc.t[i] = rng.uniform();
        for (std::size_t d = 0; d < dim; ++d) sc.eps.row(i)[d] = rng.normal();
        sc.noise_dropped[i] = rng.uniform() < policy.p_drop_noise;
        bool drop_class = rng.uniform() < policy.p_drop_class;
        sc.token_row[i] = drop_class ? model.num_classes : sc.labels[i];
    }

    for (std::size_t i = 0; i < batch; ++i) {
        ScheduleEval e = eval_schedule(model.schedule, sc.t[i]);
        Vector xt(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            xt[d] = e.alpha * sc.x0.row(i)[d] + e.sigma * sc.eps.row(i)[d];
            sc.target.row(i)[d] = e.alpha_dot * sc.x0.row(i)[d] + e.sigma_dot * sc.eps.row(i)[d];
        }
        fill_input_row(model, xt,
                       sc.noise_dropped[i] ? std::nullopt : std::optional<double>(sc.t[i]),
                       sc.token_row[i], sc.input.row(i));
    }

    const Matrix& out = net_apply_batch(model.trunk, sc.input, sc.ws);
    sc.dout = Matrix(batch, dim);
    double loss = 0.0;
    for (std::size_t i = 0; i < batch; ++i)
        for (std::size_t d = 0; d < dim; ++d) {
            double r = out.row(i)[d] - sc.target.row(i)[d];
            loss += r * r;
            sc.dout.row(i)[d] = 2.0 * r / double(batch);
        }
    loss /= double(batch);
    if (!std::isfinite(loss)) throw std::runtime_error("training loss diverged to a non-finite value");

    zero(grads);
    net_backward_batch(model.trunk, sc.dout, sc.ws, grads.trunk, &sc.dinput);

    // Route the conditioning-slot input gradients into the tables they came
    // from; the state and Fourier slices have no learned source.
    for (std::size_t i = 0; i < batch; ++i) {
        const double* din = sc.dinput.row(i);
        const double* noise_slot = din + dim;
        if (sc.noise_dropped[i])
            for (int k = 0; k < ed; ++k) grads.noise_null_token[std::size_t(k)] += noise_slot[k];
        double* ct = grads.class_table.row(std::size_t(sc.token_row[i]));
        const double* class_slot = noise_slot + ed;
        for (int k = 0; k < ed; ++k) ct[k] += class_slot[k];
    }

    optim_step(opt, model_param_spans(model), model_grad_spans(grads));
    return loss;
}

void predict_velocity_batch(const VelocityModel& model, const Matrix& x, double t,
                            std::span<const int> y_token, bool t_present, BatchWorkspace& ws,
                            Matrix& scratch_input, Matrix& out) {
    if (x.cols != model.state_dim) throw std::invalid_argument("state dimension mismatch");
    if (y_token.size() != x.rows) throw std::invalid_argument("per-row class token count mismatch");
    const int ed = model.embed.embed_dim();
    Vector tfe(static_cast<std::size_t>(ed));
    if (t_present) fourier_features(t, model.embed.t_fourier_bands, tfe);

    scratch_input = Matrix(x.rows, model.trunk.input_dim);
    for (std::size_t i = 0; i < x.rows; ++i) {
        double* row = scratch_input.row(i);
        const double* xr = x.row(i);
        for (std::size_t d = 0; d < model.state_dim; ++d) row[d] = xr[d];
        double* noise_slot = row + model.state_dim;
        const double* src = t_present ? tfe.data() : model.embed.noise_null_token.data();
        for (int k = 0; k < ed; ++k) noise_slot[k] = src[k];
        int token = y_token[i];
        if (token < 0 || token > model.num_classes)
            throw std::invalid_argument("class token outside table");
        const double* cls = model.embed.class_table.row(std::size_t(token));
        for (int k = 0; k < ed; ++k) noise_slot[ed + k] = cls[k];
    }
    out = net_apply_batch(model.trunk, scratch_input, ws);
}

namespace {

std::vector<std::size_t> hidden_dims(const DenseNet& trunk) {
    std::vector<std::size_t> hidden;
    for (std::size_t l = 0; l + 1 < trunk.layers.size(); ++l)
        hidden.push_back(trunk.layers[l].w.rows);
    return hidden;
}

}  // namespace

void save_model(const std::string& path, const VelocityModel& model, const DropoutPolicy& policy,
                long steps_trained, std::uint64_t seed) {
    nlohmann::json meta;
    meta["kind"] = "velocity";
    meta["state_dim"] = model.state_dim;
    meta["num_classes"] = model.num_classes;
    meta["hidden"] = hidden_dims(model.trunk);
    meta["t_fourier_bands"] = model.embed.t_fourier_bands;
    meta["schedule"] = model.schedule.kind == ScheduleKind::Linear ? "linear" : "trig_vp";
    meta["p_drop_noise"] = policy.p_drop_noise;
    meta["p_drop_class"] = policy.p_drop_class;
    meta["steps_trained"] = steps_trained;
    meta["seed"] = seed;
    save_checkpoint(path, meta.dump(), model_param_spans(model));
}

LoadedModel load_model(const std::string& path) {
    CheckpointData data = load_checkpoint(path);
    nlohmann::json meta = nlohmann::json::parse(data.metadata_json);
    if (meta.at("kind").get<std::string>() != "velocity")
        throw std::runtime_error("checkpoint is not a velocity model: " + path);

    LoadedModel out;
    Rng rng(0);
    Schedule sched;
    sched.kind = meta.at("schedule").get<std::string>() == "linear" ? ScheduleKind::Linear
                                                                    : ScheduleKind::TrigVP;
    out.model = make_velocity_model(meta.at("state_dim").get<std::size_t>(),
                                    meta.at("num_classes").get<int>(),
                                    meta.at("hidden").get<std::vector<std::size_t>>(), sched, rng);
    out.model.embed.t_fourier_bands = meta.at("t_fourier_bands").get<int>();
    out.policy.p_drop_noise = meta.at("p_drop_noise").get<double>();
    out.policy.p_drop_class = meta.at("p_drop_class").get<double>();
    out.steps_trained = meta.at("steps_trained").get<long>();
    out.seed = meta.at("seed").get<std::uint64_t>();

    auto spans = model_param_spans(out.model);
    std::size_t need = 0;
    for (auto s : spans) need += s.size();
    if (data.payload.size() != need)
        throw std::runtime_error("checkpoint payload size disagrees with architecture: " + path);
    std::size_t off = 0;
    for (auto s : spans)
        for (double& p : s) p = data.payload[off++];
    return out;
}

}  // namespace nsl
