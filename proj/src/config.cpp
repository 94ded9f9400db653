#include "nsl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "nsl/report.hpp"

namespace nsl {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (allowed.find(it.key()) == allowed.end()) {
            throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
        }
    }
}

ScheduleKind parse_schedule(const std::string& s) {
    if (s == "linear") {
        return ScheduleKind::Linear;
    }
    if (s == "trig_vp") {
        return ScheduleKind::TrigVP;
    }
    throw std::invalid_argument("config: schedule must be 'linear' or 'trig_vp', got '" + s + "'");
}

SamplerKind parse_sampler_kind(const std::string& s) {
    if (s == "sde") {
        return SamplerKind::EulerMaruyamaSDE;
    }
    if (s == "ode") {
        return SamplerKind::EulerODE;
    }
    throw std::invalid_argument("config: sampler.kind must be 'sde' or 'ode', got '" + s + "'");
}

WChoice parse_w_choice(const std::string& s) {
    if (s == "sigma_t") {
        return WChoice::SigmaT;
    }
    if (s == "zero") {
        return WChoice::Zero;
    }
    throw std::invalid_argument("config: sampler.w_choice must be 'sigma_t' or 'zero', got '" +
                                s + "'");
}

MixtureSpec parse_inline_dataset(const json& obj) {
    reject_unknown_keys(obj, {"components"}, "dataset");
    MixtureSpec mix;
    for (const json& c : obj.at("components")) {
        reject_unknown_keys(c, {"weight", "mean", "var", "label"}, "dataset component");
        MixtureComponent comp;
        comp.weight = c.at("weight").get<double>();
        comp.mean = c.at("mean").get<Vector>();
        if (c.at("var").is_number()) {
            comp.var.assign(comp.mean.size(), c.at("var").get<double>());
        } else {
            comp.var = c.at("var").get<Vector>();
        }
        comp.label = c.value("label", 0);
        mix.components.push_back(std::move(comp));
    }
    if (mix.components.empty()) {
        throw std::invalid_argument("config: inline dataset needs components");
    }
    mix.dim = mix.components.front().mean.size();
    validate(mix);
    return mix;
}

}  // namespace

NagMode parse_nag_mode(const std::string& s) {
    if (s == "off") {
        return NagMode::Off;
    }
    if (s == "classifier_free") {
        return NagMode::ClassifierFree;
    }
    if (s == "classifier_based") {
        return NagMode::ClassifierBased;
    }
    throw std::invalid_argument(
        "config: guidance.nag_mode must be 'off', 'classifier_free', or 'classifier_based', "
        "got '" +
        s + "'");
}

RunConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: parse error: ") + e.what());
    }
    if (!root.is_object()) {
        throw std::invalid_argument("config: top level must be an object");
    }
    reject_unknown_keys(root,
                        {"dataset", "schedule", "model", "optim", "train", "sampler", "guidance",
                         "seed", "out_dir"},
                        "top level");
    RunConfig cfg;
    try {
        if (root.contains("dataset")) {
            if (root["dataset"].is_string()) {
                cfg.dataset = root["dataset"].get<std::string>();
                preset_by_name(cfg.dataset);  // name check up front
            } else {
                cfg.inline_dataset = parse_inline_dataset(root["dataset"]);
                cfg.dataset = "inline";
            }
        }
        if (root.contains("schedule")) {
            cfg.schedule = parse_schedule(root["schedule"].get<std::string>());
        }
        if (root.contains("model")) {
            const json& m = root["model"];
            reject_unknown_keys(m, {"hidden", "dropout_noise", "dropout_class"}, "model");
            if (m.contains("hidden")) {
                cfg.hidden = m["hidden"].get<std::vector<std::size_t>>();
                if (cfg.hidden.empty()) {
                    throw std::invalid_argument("config: model.hidden must be nonempty");
                }
            }
            cfg.dropout.p_drop_noise = m.value("dropout_noise", cfg.dropout.p_drop_noise);
            cfg.dropout.p_drop_class = m.value("dropout_class", cfg.dropout.p_drop_class);
        }
        if (root.contains("optim")) {
            const json& o = root["optim"];
            reject_unknown_keys(o, {"lr", "beta1", "beta2", "weight_decay"}, "optim");
            cfg.optim.lr = o.value("lr", cfg.optim.lr);
            cfg.optim.beta1 = o.value("beta1", cfg.optim.beta1);
            cfg.optim.beta2 = o.value("beta2", cfg.optim.beta2);
            cfg.optim.weight_decay = o.value("weight_decay", cfg.optim.weight_decay);
        }
        if (root.contains("train")) {
            const json& t = root["train"];
            reject_unknown_keys(t, {"steps", "batch", "ema_decay"}, "train");
            cfg.train.steps = t.value("steps", cfg.train.steps);
            cfg.train.batch = t.value("batch", cfg.train.batch);
            cfg.train.ema_decay = t.value("ema_decay", cfg.train.ema_decay);
        }
        if (root.contains("sampler")) {
            const json& s = root["sampler"];
            reject_unknown_keys(s, {"kind", "steps", "last_step_size", "w_choice"}, "sampler");
            if (s.contains("kind")) {
                cfg.sampler.kind = parse_sampler_kind(s["kind"].get<std::string>());
            }
            cfg.sampler.steps = s.value("steps", cfg.sampler.steps);
            cfg.sampler.last_step_size = s.value("last_step_size", cfg.sampler.last_step_size);
            if (s.contains("w_choice")) {
                cfg.sampler.w_choice = parse_w_choice(s["w_choice"].get<std::string>());
            }
        }
        if (root.contains("guidance")) {
            const json& g = root["guidance"];
            reject_unknown_keys(g, {"w_cfg", "w_nag", "nag_mode", "tau"}, "guidance");
            cfg.guidance.w_cfg = g.value("w_cfg", cfg.guidance.w_cfg);
            cfg.guidance.w_nag = g.value("w_nag", cfg.guidance.w_nag);
            if (g.contains("nag_mode")) {
                cfg.guidance.nag_mode = parse_nag_mode(g["nag_mode"].get<std::string>());
            }
            cfg.guidance.tau = g.value("tau", cfg.guidance.tau);
            if (!(cfg.guidance.tau > 0.0)) {
                throw std::invalid_argument("config: guidance.tau must be positive");
            }
            if (cfg.guidance.w_cfg < 0.0 || cfg.guidance.w_nag < 0.0) {
                throw std::invalid_argument("config: guidance weights must be nonnegative");
            }
        }
        cfg.seed = root.value("seed", cfg.seed);
        if (root.contains("out_dir")) {
            cfg.out_dir = root["out_dir"].get<std::string>();
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: invalid field: ") + e.what());
    }
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("config: cannot open " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string dump_config(const RunConfig& cfg) {
    json root;
    if (cfg.inline_dataset) {
        json comps = json::array();
        for (const MixtureComponent& c : cfg.inline_dataset->components) {
            json jc;
            jc["weight"] = c.weight;
            jc["mean"] = c.mean;
            jc["var"] = c.var;
            jc["label"] = c.label;
            comps.push_back(jc);
        }
        root["dataset"] = json{{"components", comps}};
    } else {
        root["dataset"] = cfg.dataset;
    }
    root["schedule"] = cfg.schedule == ScheduleKind::Linear ? "linear" : "trig_vp";
    root["model"] = {{"hidden", cfg.hidden},
                     {"dropout_noise", cfg.dropout.p_drop_noise},
                     {"dropout_class", cfg.dropout.p_drop_class}};
    root["optim"] = {{"lr", cfg.optim.lr},
                     {"beta1", cfg.optim.beta1},
                     {"beta2", cfg.optim.beta2},
                     {"weight_decay", cfg.optim.weight_decay}};
    root["train"] = {{"steps", cfg.train.steps},
                     {"batch", cfg.train.batch},
                     {"ema_decay", cfg.train.ema_decay}};
    root["sampler"] = {
        {"kind", cfg.sampler.kind == SamplerKind::EulerMaruyamaSDE ? "sde" : "ode"},
        {"steps", cfg.sampler.steps},
        {"last_step_size", cfg.sampler.last_step_size},
        {"w_choice", cfg.sampler.w_choice == WChoice::SigmaT ? "sigma_t" : "zero"}};
    const char* mode = cfg.guidance.nag_mode == NagMode::Off
                           ? "off"
                           : cfg.guidance.nag_mode == NagMode::ClassifierFree
                                 ? "classifier_free"
                                 : "classifier_based";
    root["guidance"] = {{"w_cfg", cfg.guidance.w_cfg},
                        {"w_nag", cfg.guidance.w_nag},
                        {"nag_mode", mode},
                        {"tau", cfg.guidance.tau}};
    root["seed"] = cfg.seed;
    root["out_dir"] = cfg.out_dir;
    return root.dump(2);
}

std::string config_hash(const RunConfig& cfg) {
    const std::string text = dump_config(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    static const char* hex = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = hex[h & 0xF];
        h >>= 4;
    }
    buf[16] = '\0';
    return std::string(buf);
}

MixtureSpec dataset_of(const RunConfig& cfg) {
    if (cfg.inline_dataset) {
        return *cfg.inline_dataset;
    }
    return preset_by_name(cfg.dataset);
}

std::string dataset_id(const RunConfig& cfg) { return cfg.dataset; }

}  // namespace nsl
