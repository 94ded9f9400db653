// Command-line front end. Each verb loads a config (file or defaults), applies
// the common overrides, and dispatches to the corresponding cmd_* entry point.
#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "nsl/cli.hpp"
#include "nsl/config.hpp"

namespace {

struct Common {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool out_dir_set = false;
    bool force = false;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config_path, "config file (JSON)")
        ->check(CLI::ExistingFile);
    auto* od = sub->add_option("--out-dir", c.out_dir, "output directory override");
    auto* sd = sub->add_option("--seed", c.seed, "seed override");
    sub->add_flag("--force", c.force, "overwrite existing outputs");
    sd->each([&c](const std::string&) { c.seed_set = true; });
    od->each([&c](const std::string&) { c.out_dir_set = true; });
}

nsl::RunConfig resolve(const Common& c) {
    nsl::RunConfig cfg = c.config_path.empty() ? nsl::RunConfig{}
                                               : nsl::load_config_file(c.config_path);
    if (c.seed_set) cfg.seed = c.seed;
    if (c.out_dir_set) cfg.out_dir = c.out_dir;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"noise shift laboratory"};
    app.require_subcommand(1);

    Common com_train, com_est, com_sample, com_diag, com_sweep, com_show;

    auto* c_train = app.add_subcommand("train", "train the velocity model");
    add_common(c_train, com_train);

    auto* c_est = app.add_subcommand("train-estimator", "train the noise-level estimator");
    add_common(c_est, com_est);

    auto* c_sample = app.add_subcommand("sample", "draw samples from a trained model");
    add_common(c_sample, com_sample);
    nsl::SampleOptions sopt;
    double s_wcfg = 1.5;
    double s_wnag = 3.0;
    std::string s_mode = "off";
    int s_steps = 0;
    int s_label = -1;
    c_sample->add_option("--checkpoint", sopt.checkpoint, "velocity model checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    c_sample->add_option("--estimator", sopt.estimator_checkpoint,
                         "estimator checkpoint (classifier_based guidance)")
        ->check(CLI::ExistingFile);
    auto* o_wcfg = c_sample->add_option("--w-cfg", s_wcfg, "classifier-free guidance weight");
    auto* o_wnag = c_sample->add_option("--w-nag", s_wnag, "noise awareness guidance weight");
    auto* o_mode = c_sample->add_option("--nag-mode", s_mode, "off|classifier_free|classifier_based")
                       ->check(CLI::IsMember({"off", "classifier_free", "classifier_based"}));
    auto* o_steps = c_sample->add_option("--steps", s_steps, "sampler step count override");
    auto* o_label = c_sample->add_option("--label", s_label, "fix the class label");
    c_sample->add_option("--n", sopt.n, "number of samples");
    c_sample->add_flag("--trajectories", sopt.trajectories, "also write full trajectories");

    auto* c_diag = app.add_subcommand("diagnose", "shift report across guidance arms");
    add_common(c_diag, com_diag);
    nsl::DiagnoseOptions dopt;
    c_diag->add_option("--model", dopt.model_checkpoint, "velocity model checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    c_diag->add_option("--estimator", dopt.estimator_checkpoint, "estimator checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    c_diag->add_option("--n", dopt.n, "trajectories per arm");
    c_diag->add_option("--n-ref", dopt.n_ref, "forward reference batch size");

    auto* c_sweep = app.add_subcommand("sweep", "metric table over a parameter axis");
    add_common(c_sweep, com_sweep);
    nsl::SweepOptions wopt;
    std::string w_axis = "w_nag";
    c_sweep->add_option("--axis", w_axis, "w_nag|steps")
        ->check(CLI::IsMember({"w_nag", "steps"}));
    c_sweep->add_option("--values", wopt.values, "axis values")->required();
    c_sweep->add_option("--model", wopt.model_checkpoint, "velocity model checkpoint");
    c_sweep->add_option("--estimator", wopt.estimator_checkpoint,
                        "estimator checkpoint (enables shift columns)");
    c_sweep->add_flag("--oracle", wopt.oracle, "sample with the analytic score instead of a model");
    c_sweep->add_option("--n", wopt.n, "samples per cell");
    c_sweep->add_option("--seeds", wopt.seeds, "seed replicates per cell");

    auto* c_show = app.add_subcommand("show-config", "print the resolved config and its hash");
    add_common(c_show, com_show);

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_train->parsed()) {
            nsl::TrainResult r = nsl::cmd_train(resolve(com_train), com_train.force);
            std::cout << "model: " << r.model_path << "\n"
                      << "ema: " << r.ema_path << "\n"
                      << "loss: " << r.first_loss << " -> " << r.final_loss << "\n";
        } else if (c_est->parsed()) {
            std::cout << "estimator: " << nsl::cmd_train_estimator(resolve(com_est), com_est.force)
                      << "\n";
        } else if (c_sample->parsed()) {
            nsl::RunConfig cfg = resolve(com_sample);
            nsl::GuidanceSpec g = cfg.guidance;
            if (o_wcfg->count()) g.w_cfg = s_wcfg;
            if (o_wnag->count()) g.w_nag = s_wnag;
            if (o_mode->count()) g.nag_mode = nsl::parse_nag_mode(s_mode);
            if (o_wcfg->count() || o_wnag->count() || o_mode->count()) sopt.guidance = g;
            if (o_steps->count()) sopt.steps = s_steps;
            if (o_label->count()) sopt.label = s_label;
            if (com_sample.seed_set) sopt.seed = com_sample.seed;
            nsl::SampleResult r = nsl::cmd_sample(cfg, sopt, com_sample.force);
            std::cout << "samples: " << r.samples_csv << "\n";
            if (!r.trajectories_csv.empty())
                std::cout << "trajectories: " << r.trajectories_csv << "\n";
        } else if (c_diag->parsed()) {
            if (com_diag.seed_set) dopt.seed = com_diag.seed;
            for (const std::string& p : nsl::cmd_diagnose(resolve(com_diag), dopt, com_diag.force))
                std::cout << p << "\n";
        } else if (c_sweep->parsed()) {
            wopt.axis = (w_axis == "steps") ? nsl::SweepAxis::Steps : nsl::SweepAxis::WNag;
            if (com_sweep.seed_set) wopt.seed = com_sweep.seed;
            std::cout << nsl::cmd_sweep(resolve(com_sweep), wopt, com_sweep.force) << "\n";
        } else if (c_show->parsed()) {
            std::cout << nsl::cmd_show_config(resolve(com_show));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
