#include "nsl/guidance.hpp"

#include <stdexcept>

#include "nsl/estimator.hpp"

namespace nsl {

namespace {

void check_same_dim(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.size() != b.size()) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch");
    }
}

}  // namespace

Vector cfg_mix(std::span<const double> s_cond, std::span<const double> s_uncond, double w) {
    check_same_dim(s_cond, s_uncond, "cfg_mix");
    // Anchored arrangement of (1+w) s_cond - w s_uncond: when both inputs
    // agree the correction is exactly zero, so the mix passes s_cond through
    // unchanged instead of picking up rounding from the two products.
    Vector out(s_cond.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = s_cond[i] + w * (s_cond[i] - s_uncond[i]);
    }
    return out;
}

Vector nag_mix(std::span<const double> s_t_cond, std::span<const double> s_t_uncond,
               double w_nag) {
    check_same_dim(s_t_cond, s_t_uncond, "nag_mix");
    Vector out(s_t_cond.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = s_t_cond[i] + w_nag * (s_t_cond[i] - s_t_uncond[i]);
    }
    return out;
}

Vector classifier_nag_grad(const NoiseEstimator& est, std::span<const double> x, double t,
                           double tau) {
    if (!(tau > 0.0)) {
        throw std::invalid_argument("classifier_nag_grad: tau must be positive");
    }
    if (x.size() != static_cast<std::size_t>(est.trunk.input_dim)) {
        throw std::invalid_argument("classifier_nag_grad: state dimension mismatch");
    }
    // Regressor output g(x) plays the role of a Gaussian likelihood mean for
    // the level t; the pull toward "looks like level t" is the log-likelihood
    // gradient (t - g(x)) / tau^2 times the input sensitivity of g.
    Vector value = net_apply(est.trunk, x);
    Vector upstream(1, 1.0);
    GradBuffer scratch = make_grad_buffer(est.trunk);
    Vector grad_x = net_grad(est.trunk, x, upstream, scratch);
    const double scale = (t - value[0]) / (tau * tau);
    for (double& g : grad_x) {
        g *= scale;
    }
    return grad_x;
}

Vector combined_score(const VelocityModel& model, std::span<const double> x, double t,
                      std::optional<int> y, const GuidanceSpec& spec,
                      const NoiseEstimator* estimator) {
    Vector s_full = model_score(model, x, t, y, /*t_cond_present=*/true);
    if (spec.nag_mode == NagMode::Off) {
        if (spec.w_cfg == 0.0) {
            return s_full;
        }
        Vector s_no_class = model_score(model, x, t, std::nullopt, /*t_cond_present=*/true);
        return cfg_mix(s_full, s_no_class, spec.w_cfg);
    }
    if (spec.nag_mode == NagMode::ClassifierFree) {
        if (spec.w_cfg == 0.0) {
            // Class conditioning stays in both branches; only the noise
            // conditioning is nulled.
            Vector s_no_noise = model_score(model, x, t, y, /*t_cond_present=*/false);
            return nag_mix(s_full, s_no_noise, spec.w_nag);
        }
        Vector s_no_class = model_score(model, x, t, std::nullopt, /*t_cond_present=*/true);
        Vector s_no_noise = model_score(model, x, t, y, /*t_cond_present=*/false);
        Vector out(s_full.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = s_full[i] + spec.w_cfg * (s_full[i] - s_no_class[i]) +
                     spec.w_nag * (s_full[i] - s_no_noise[i]);
        }
        return out;
    }
    // ClassifierBased: the NAG correction comes from the level regressor
    // instead of a second trunk pass.
    if (estimator == nullptr) {
        throw std::invalid_argument("combined_score: ClassifierBased guidance needs an estimator");
    }
    Vector nag_term = classifier_nag_grad(*estimator, x, t, spec.tau);
    Vector out(s_full.size());
    if (spec.w_cfg == 0.0) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = s_full[i] + spec.w_nag * nag_term[i];
        }
        return out;
    }
    Vector s_no_class = model_score(model, x, t, std::nullopt, /*t_cond_present=*/true);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = s_full[i] + spec.w_cfg * (s_full[i] - s_no_class[i]) +
                 spec.w_nag * nag_term[i];
    }
    return out;
}

}  // namespace nsl
