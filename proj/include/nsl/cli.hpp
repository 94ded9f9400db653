#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nsl/config.hpp"

namespace nsl {

struct TrainResult {
    std::string model_path;
    std::string ema_path;
    std::string loss_csv_path;
    double first_loss = 0.0;
    double final_loss = 0.0;
};

TrainResult cmd_train(const RunConfig& cfg, bool force);

std::string cmd_train_estimator(const RunConfig& cfg, bool force);

struct SampleOptions {
    std::string checkpoint;
    std::string estimator_checkpoint;  // needed for classifier_based guidance
    std::optional<GuidanceSpec> guidance;  // config guidance when absent
    std::optional<int> steps;
    std::size_t n = 2000;
    std::optional<std::uint64_t> seed;
    std::optional<int> label;
    bool trajectories = false;
};

struct SampleResult {
    std::string samples_csv;
    std::string trajectories_csv;  // empty unless requested
};

SampleResult cmd_sample(const RunConfig& cfg, const SampleOptions& opt, bool force);

struct DiagnoseOptions {
    std::string model_checkpoint;
    std::string estimator_checkpoint;
    std::size_t n = 2000;
    std::size_t n_ref = 5000;
    std::optional<std::uint64_t> seed;
};

std::vector<std::string> cmd_diagnose(const RunConfig& cfg, const DiagnoseOptions& opt,
                                      bool force);

enum class SweepAxis { WNag, Steps };

struct SweepOptions {
    SweepAxis axis = SweepAxis::WNag;
    std::vector<double> values;
    std::string model_checkpoint;      // unused when oracle is set
    std::string estimator_checkpoint;  // optional; shift columns are nan without it
    bool oracle = false;
    std::size_t n = 2000;
    int seeds = 3;
    std::optional<std::uint64_t> seed;
};

std::string cmd_sweep(const RunConfig& cfg, const SweepOptions& opt, bool force);

std::string cmd_show_config(const RunConfig& cfg);

}  // namespace nsl
