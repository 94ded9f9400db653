#include "nsl/cli.hpp"

#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "nsl/estimator.hpp"
#include "nsl/metrics.hpp"
#include "nsl/report.hpp"
#include "nsl/rng.hpp"

namespace nsl {

namespace {

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void refuse_overwrite(const std::string& path, bool force) {
    if (!force && file_exists(path)) {
        throw std::runtime_error("refusing to overwrite " + path + " (pass --force to allow)");
    }
}

std::string cell(double v) { return format_number(v); }

// Shared shift summary window: mean delta_normalized over the mid-range grid
// times where both the estimator response and the sampler are informative.
double mean_delta_in_window(const ShiftReport& report, double lo, double hi) {
    double acc = 0.0;
    std::size_t count = 0;
    for (const ShiftRow& row : report.rows) {
        if (row.t_prior >= lo - 1e-12 && row.t_prior <= hi + 1e-12) {
            acc += row.delta_normalized;
            ++count;
        }
    }
    return count == 0 ? 0.0 : acc / static_cast<double>(count);
}

void write_shift_csv(const std::string& path, const FileStamp& stamp,
                     const ShiftReport& report) {
    CsvBuilder csv(stamp, {"t", "mean_t_hat_sampled", "mean_t_hat_forward", "delta_raw",
                           "delta_normalized", "n"});
    for (const ShiftRow& row : report.rows) {
        csv.add_row({cell(row.t_prior), cell(row.mean_sampled), cell(row.mean_forward),
                     cell(row.delta_raw), cell(row.delta_normalized),
                     std::to_string(report.n_sampled)});
    }
    write_text_file(path, csv.str());
}

void write_kde_csv(const std::string& path, const FileStamp& stamp, const ShiftReport& report) {
    CsvBuilder csv(stamp, {"t_hat", "density", "prior_t", "arm"});
    for (const KdeCurve& curve : report.curves) {
        for (std::size_t i = 0; i < curve.grid.size(); ++i) {
            csv.add_row(
                {cell(curve.grid[i]), cell(curve.density[i]), cell(curve.prior_t), curve.arm});
        }
    }
    write_text_file(path, csv.str());
}

}  // namespace

TrainResult cmd_train(const RunConfig& cfg, bool force) {
    const MixtureSpec mix = dataset_of(cfg);
    const FileStamp stamp{config_hash(cfg)};
    TrainResult result;
    result.model_path = join_path(cfg.out_dir, "model.nsl");
    result.ema_path = join_path(cfg.out_dir, "model_ema.nsl");
    result.loss_csv_path = join_path(cfg.out_dir, "loss.csv");
    refuse_overwrite(result.model_path, force);
    refuse_overwrite(result.ema_path, force);
    refuse_overwrite(result.loss_csv_path, force);

    Rng init_rng(cfg.seed, 0);
    Rng draw_rng(cfg.seed, 1);
    Schedule sched{cfg.schedule};
    VelocityModel model = make_velocity_model(mix.dim, mix.num_classes(), cfg.hidden, sched,
                                              init_rng);
    std::size_t n_params = 0;
    for (auto s : model_param_spans(static_cast<const VelocityModel&>(model))) {
        n_params += s.size();
    }
    OptimState opt = make_optim(n_params, cfg.optim.lr, cfg.optim.beta1, cfg.optim.beta2,
                                cfg.optim.weight_decay);
    EmaState ema = make_ema(model_param_spans(static_cast<const VelocityModel&>(model)),
                            cfg.train.ema_decay);
    ModelGrads grads = make_model_grads(model);
    TrainScratch scratch;

    CsvBuilder loss_csv(stamp, {"step", "loss"});
    for (long step = 0; step < cfg.train.steps; ++step) {
        const double loss = train_step(model, mix, cfg.train.batch, cfg.dropout, opt, grads,
                                       scratch, draw_rng);
        ema_update(ema, model_param_spans(static_cast<const VelocityModel&>(model)));
        if (step == 0) {
            result.first_loss = loss;
        }
        result.final_loss = loss;
        if (step % 100 == 0 || step + 1 == cfg.train.steps) {
            loss_csv.add_row({std::to_string(step), cell(loss)});
        }
    }

    save_model(result.model_path, model, cfg.dropout, cfg.train.steps, cfg.seed);
    VelocityModel shadow = model;
    ema_copy_to(ema, model_param_spans(shadow));
    save_model(result.ema_path, shadow, cfg.dropout, cfg.train.steps, cfg.seed);
    write_text_file(result.loss_csv_path, loss_csv.str());
    return result;
}

std::string cmd_train_estimator(const RunConfig& cfg, bool force) {
    const MixtureSpec mix = dataset_of(cfg);
    const std::string path = join_path(cfg.out_dir, "estimator.nsl");
    refuse_overwrite(path, force);
    NoiseEstimator est = train_estimator(mix, Schedule{cfg.schedule}, cfg.train.steps, cfg.seed,
                                         dataset_id(cfg), cfg.train.batch);
    save_estimator(path, est);
    return path;
}

SampleResult cmd_sample(const RunConfig& cfg, const SampleOptions& opt, bool force) {
    if (opt.n == 0) {
        throw std::invalid_argument("cmd_sample: --n must be positive");
    }
    const MixtureSpec mix = dataset_of(cfg);
    const FileStamp stamp{config_hash(cfg)};
    LoadedModel loaded = load_model(opt.checkpoint);
    if (loaded.model.state_dim != mix.dim) {
        throw std::invalid_argument("cmd_sample: checkpoint dimension does not match dataset");
    }

    GuidanceSpec guidance = opt.guidance.value_or(cfg.guidance);
    NoiseEstimator est;
    const NoiseEstimator* est_ptr = nullptr;
    if (guidance.nag_mode == NagMode::ClassifierBased) {
        if (opt.estimator_checkpoint.empty()) {
            throw std::invalid_argument(
                "cmd_sample: classifier_based guidance needs --estimator");
        }
        est = load_estimator(opt.estimator_checkpoint);
        est_ptr = &est;
    }

    SamplerConfig scfg = cfg.sampler;
    if (opt.steps) {
        scfg.steps = *opt.steps;
    }
    scfg.seed = opt.seed.value_or(cfg.seed);

    ModelField field(loaded.model, guidance, est_ptr);
    std::vector<Trajectory> trajs =
        sample(field, scfg, opt.n, opt.label, Exec::Parallel, opt.checkpoint);

    SampleResult result;
    result.samples_csv = join_path(cfg.out_dir, "samples.csv");
    refuse_overwrite(result.samples_csv, force);
    {
        std::vector<std::string> header;
        for (std::size_t j = 0; j < mix.dim; ++j) {
            header.push_back("x" + std::to_string(j));
        }
        header.push_back("label");
        CsvBuilder csv(stamp, header);
        const Matrix finals = final_states(trajs);
        for (std::size_t i = 0; i < finals.rows; ++i) {
            std::vector<std::string> row;
            for (std::size_t j = 0; j < finals.cols; ++j) {
                row.push_back(cell(finals.at(i, j)));
            }
            row.push_back(std::to_string(trajs[i].label));
            csv.add_row(row);
        }
        write_text_file(result.samples_csv, csv.str());
    }

    if (opt.trajectories) {
        result.trajectories_csv = join_path(cfg.out_dir, "trajectories.csv");
        refuse_overwrite(result.trajectories_csv, force);
        std::vector<std::string> header = {"trajectory", "step", "t"};
        for (std::size_t j = 0; j < mix.dim; ++j) {
            header.push_back("x" + std::to_string(j));
        }
        CsvBuilder csv(stamp, header);
        for (std::size_t i = 0; i < trajs.size(); ++i) {
            for (std::size_t s = 0; s < trajs[i].times.size(); ++s) {
                std::vector<std::string> row = {std::to_string(i), std::to_string(s),
                                                cell(trajs[i].times[s])};
                for (std::size_t j = 0; j < mix.dim; ++j) {
                    row.push_back(cell(trajs[i].states.at(s, j)));
                }
                csv.add_row(row);
            }
        }
        write_text_file(result.trajectories_csv, csv.str());
    }
    return result;
}

std::vector<std::string> cmd_diagnose(const RunConfig& cfg, const DiagnoseOptions& opt,
                                      bool force) {
    const MixtureSpec mix = dataset_of(cfg);
    const FileStamp stamp{config_hash(cfg)};
    LoadedModel loaded = load_model(opt.model_checkpoint);
    if (loaded.model.state_dim != mix.dim) {
        throw std::invalid_argument("cmd_diagnose: checkpoint dimension does not match dataset");
    }
    NoiseEstimator est = load_estimator(opt.estimator_checkpoint);
    if (est.trunk.input_dim != mix.dim) {
        throw std::invalid_argument("cmd_diagnose: estimator dimension does not match dataset");
    }
    const std::uint64_t seed = opt.seed.value_or(cfg.seed);

    struct Arm {
        const char* name;
        GuidanceSpec spec;
    };
    // The two-weight joint arm uses the documented combined defaults rather
    // than the single-axis defaults.
    const Arm arms[] = {
        {"bare", {0.0, 0.0, NagMode::Off, cfg.guidance.tau}},
        {"cfg", {cfg.guidance.w_cfg, 0.0, NagMode::Off, cfg.guidance.tau}},
        {"nag", {0.0, cfg.guidance.w_nag, NagMode::ClassifierFree, cfg.guidance.tau}},
        {"cfg_nag", {1.2, 2.0, NagMode::ClassifierFree, cfg.guidance.tau}},
    };

    std::vector<std::string> outputs;
    std::vector<Series> delta_series;
    const std::vector<double> kde_times = {0.2, 0.5, 0.8};
    for (std::size_t a = 0; a < 4; ++a) {
        ModelField field(loaded.model, arms[a].spec, nullptr);
        SamplerConfig scfg = cfg.sampler;
        scfg.seed = derive_seed(seed, 100 + a);
        std::vector<Trajectory> trajs =
            sample(field, scfg, opt.n, std::nullopt, Exec::Parallel, opt.model_checkpoint);
        ShiftReport report = measure_shift(trajs, est, mix, opt.n_ref,
                                           derive_seed(seed, 200 + a), kde_times);

        const std::string shift_path =
            join_path(cfg.out_dir, std::string("shift_") + arms[a].name + ".csv");
        refuse_overwrite(shift_path, force);
        write_shift_csv(shift_path, stamp, report);
        outputs.push_back(shift_path);

        const std::string kde_path =
            join_path(cfg.out_dir, std::string("kde_") + arms[a].name + ".csv");
        refuse_overwrite(kde_path, force);
        write_kde_csv(kde_path, stamp, report);
        outputs.push_back(kde_path);

        Series s;
        s.name = arms[a].name;
        for (const ShiftRow& row : report.rows) {
            s.x.push_back(row.t_prior);
            s.y.push_back(row.delta_normalized);
        }
        delta_series.push_back(std::move(s));
    }

    const std::string svg_path = join_path(cfg.out_dir, "shift.svg");
    refuse_overwrite(svg_path, force);
    write_text_file(svg_path,
                    line_chart_svg(stamp, "Mean-normalized noise shift along sampling", "t",
                                   "delta_normalized", delta_series));
    outputs.push_back(svg_path);
    return outputs;
}

std::string cmd_sweep(const RunConfig& cfg, const SweepOptions& opt, bool force) {
    if (opt.values.empty()) {
        throw std::invalid_argument("cmd_sweep: values must be nonempty");
    }
    if (opt.seeds < 1) {
        throw std::invalid_argument("cmd_sweep: need at least one seed");
    }
    const MixtureSpec mix = dataset_of(cfg);
    const FileStamp stamp{config_hash(cfg)};
    const std::uint64_t seed = opt.seed.value_or(cfg.seed);

    LoadedModel loaded;
    NoiseEstimator est;
    bool have_est = false;
    if (!opt.oracle) {
        if (opt.model_checkpoint.empty()) {
            throw std::invalid_argument("cmd_sweep: need --model or --oracle");
        }
        loaded = load_model(opt.model_checkpoint);
    }
    if (!opt.estimator_checkpoint.empty()) {
        est = load_estimator(opt.estimator_checkpoint);
        have_est = true;
    }

    // One fixed reference batch keeps the metric comparable across rows.
    const DataSample ref = sample_data(mix, opt.n, derive_seed(seed, 9999));
    Matrix ref_states(opt.n, mix.dim);
    for (std::size_t i = 0; i < opt.n; ++i) {
        std::copy(ref.states.row(i), ref.states.row(i) + mix.dim, ref_states.row(i));
    }

    const std::string path = join_path(cfg.out_dir, "sweep.csv");
    refuse_overwrite(path, force);
    CsvBuilder csv(stamp,
                   {"axis_value", "sw2_mean", "sw2_se", "shift_mean", "shift_se", "n", "seeds"});

    for (double value : opt.values) {
        Vector sw2_values;
        Vector shift_values;
        for (int rep = 0; rep < opt.seeds; ++rep) {
            SamplerConfig scfg = cfg.sampler;
            GuidanceSpec guidance = cfg.guidance;
            if (opt.axis == SweepAxis::Steps) {
                scfg.steps = static_cast<int>(value);
                if (scfg.steps < 2 || static_cast<double>(scfg.steps) != value) {
                    throw std::invalid_argument("cmd_sweep: steps values must be integers >= 2");
                }
            } else {
                guidance.w_nag = value;
                if (guidance.nag_mode == NagMode::Off) {
                    guidance.nag_mode = NagMode::ClassifierFree;
                }
            }
            scfg.seed = derive_seed(seed, static_cast<std::uint64_t>(rep));

            std::vector<Trajectory> trajs;
            if (opt.oracle) {
                OracleField field(mix, Schedule{cfg.schedule});
                trajs = sample(field, scfg, opt.n, std::nullopt, Exec::Parallel, "oracle");
            } else {
                ModelField field(loaded.model, guidance,
                                 guidance.nag_mode == NagMode::ClassifierBased && have_est
                                     ? &est
                                     : nullptr);
                trajs = sample(field, scfg, opt.n, std::nullopt, Exec::Parallel,
                               opt.model_checkpoint);
            }
            sw2_values.push_back(
                sliced_w2(final_states(trajs), ref_states, 128, derive_seed(seed, 777)));
            if (have_est) {
                ShiftReport report = measure_shift(trajs, est, mix, 5000,
                                                   derive_seed(seed, 300 + rep));
                shift_values.push_back(mean_delta_in_window(report, 0.2, 0.7));
            }
        }
        auto mean_se = [](const Vector& v) -> std::pair<double, double> {
            if (v.empty()) {
                return {std::nan(""), std::nan("")};
            }
            double mean = 0.0;
            for (double x : v) {
                mean += x;
            }
            mean /= static_cast<double>(v.size());
            if (v.size() < 2) {
                return {mean, std::nan("")};
            }
            double var = 0.0;
            for (double x : v) {
                var += (x - mean) * (x - mean);
            }
            var /= static_cast<double>(v.size() - 1);
            return {mean, std::sqrt(var / static_cast<double>(v.size()))};
        };
        const auto [sw2_mean, sw2_se] = mean_se(sw2_values);
        const auto [shift_mean, shift_se] = mean_se(shift_values);
        csv.add_row({cell(value), cell(sw2_mean), cell(sw2_se), cell(shift_mean),
                     cell(shift_se), std::to_string(opt.n), std::to_string(opt.seeds)});
    }
    write_text_file(path, csv.str());
    return path;
}

std::string cmd_show_config(const RunConfig& cfg) {
    return dump_config(cfg) + "\n# hash: " + config_hash(cfg) + "\n";
}

}  // namespace nsl
