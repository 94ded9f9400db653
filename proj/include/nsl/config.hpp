#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nsl/guidance.hpp"
#include "nsl/mixture.hpp"
#include "nsl/model.hpp"
#include "nsl/sampler.hpp"
#include "nsl/schedule.hpp"

namespace nsl {

struct OptimConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double weight_decay = 0.0;
};

struct TrainConfig {
    long steps = 20000;
    std::size_t batch = 256;
    double ema_decay = 0.9999;
};

// Everything that determines a run byte-for-byte. Every field has a default;
// parsing rejects unknown keys so a typo cannot silently fall back.
struct RunConfig {
    std::string dataset = "grid_mixture";       // preset name
    std::optional<MixtureSpec> inline_dataset;  // takes precedence when set
    ScheduleKind schedule = ScheduleKind::Linear;
    std::vector<std::size_t> hidden = {128, 128, 128, 128};
    DropoutPolicy dropout;
    OptimConfig optim;
    TrainConfig train;
    SamplerConfig sampler;
    GuidanceSpec guidance{1.5, 3.0, NagMode::Off, 0.05};
    std::uint64_t seed = 0;
    std::string out_dir = "runs/out";
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config_file(const std::string& path);
NagMode parse_nag_mode(const std::string& s);

// Canonical serialization: sorted keys, shortest round-trip numbers. Hashing
// this string identifies the effective configuration in emitted files.
std::string dump_config(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

MixtureSpec dataset_of(const RunConfig& cfg);
std::string dataset_id(const RunConfig& cfg);

}  // namespace nsl
