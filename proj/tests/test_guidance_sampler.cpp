#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <vector>

#include "nsl/estimator.hpp"
#include "nsl/guidance.hpp"
#include "nsl/metrics.hpp"
#include "nsl/mixture.hpp"
#include "nsl/model.hpp"
#include "nsl/oracle.hpp"
#include "nsl/rng.hpp"
#include "nsl/sampler.hpp"

using namespace nsl;

namespace {

MixtureSpec two_class_pair() {
    MixtureSpec mix;
    mix.components.push_back({0.5, {-1.0, 0.0}, {0.2, 0.2}, 0});
    mix.components.push_back({0.5, {1.0, 0.5}, {0.2, 0.2}, 1});
    mix.dim = 2;
    validate(mix);
    return mix;
}

bool same_bits(const Matrix& a, const Matrix& b) {
    return a.rows == b.rows && a.cols == b.cols &&
           std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("cfg_mix and nag_mix degenerate cases are exact") {
    Vector a{0.1, -2.7, 3.3};
    Vector b{0.9, 1.1, -0.4};
    // w=0 returns the conditional input unchanged
    CHECK(cfg_mix(a, b, 0.0) == a);
    CHECK(nag_mix(a, b, 0.0) == a);
    // equal inputs pass through for any weight, including awkward ones
    for (double w : {0.3, 1.0, 1.5, 3.0, 7.7}) {
        CHECK(cfg_mix(a, a, w) == a);
        CHECK(nag_mix(a, a, w) == a);
    }
    // arithmetic spot checks
    Vector c1 = cfg_mix(Vector{1, 0}, Vector{0, 1}, 1.0);
    CHECK(c1[0] == doctest::Approx(2.0));
    CHECK(c1[1] == doctest::Approx(-1.0));
    Vector n1 = nag_mix(Vector{1, 0}, Vector{0, 1}, 1.0);
    CHECK(n1[0] == doctest::Approx(2.0));
    CHECK(n1[1] == doctest::Approx(-1.0));
    // with a zero anchor the output is the bare correction, and doubling the
    // weight doubles it bitwise (power-of-two scaling commutes with rounding)
    Vector zero{0.0, 0.0, 0.0};
    for (double w : {0.3, 1.7, 3.0}) {
        Vector cw = nag_mix(zero, b, w);
        Vector c2w = nag_mix(zero, b, 2.0 * w);
        for (std::size_t j = 0; j < 3; ++j) CHECK(c2w[j] == 2.0 * cw[j]);
    }
    CHECK_THROWS_AS(cfg_mix(a, Vector{1.0}, 1.0), std::invalid_argument);
}

TEST_CASE("score mixture differentiates the tilted oracle density") {
    // Mixing the fixed-t score with the noise-marginalized score must equal
    // the gradient of (1+w) log p_t(x) - w log p_marg(x).
    MixtureSpec mix = two_class_pair();
    Schedule sched{ScheduleKind::Linear};
    TimePrior prior = TimePrior::uniform01();
    const double w = 2.0;
    for (double t : {0.2, 0.5, 0.8}) {
        Vector x{0.35, -0.15};
        Vector st = oracle_score(mix, x, t, sched);
        Vector sm = noise_marginal_score(mix, x, prior, sched);
        Vector mixed = nag_mix(st, sm, w);
        for (std::size_t j = 0; j < 2; ++j) {
            Vector up = x, dn = x;
            up[j] += 1e-6;
            dn[j] -= 1e-6;
            auto tilted = [&](const Vector& p) {
                MixtureSpec m = marginal_at(mix, t, sched);
                return (1.0 + w) * log_density(m, p) -
                       w * noise_marginal_log_density(mix, p, prior, sched);
            };
            double fd = (tilted(up) - tilted(dn)) / 2e-6;
            CHECK(mixed[j] == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("combined_score reduces to its pieces bitwise") {
    Rng r(41, 0);
    Schedule sched{ScheduleKind::Linear};
    VelocityModel m = make_velocity_model(2, 2, {24, 24}, sched, r);
    Vector x{0.2, -0.6};
    double t = 0.55;

    GuidanceSpec bare{0.0, 0.0, NagMode::Off, 0.05};
    CHECK(combined_score(m, x, t, 1, bare) == model_score(m, x, t, 1, true));

    GuidanceSpec cfg{1.5, 0.0, NagMode::Off, 0.05};
    Vector via_mix = cfg_mix(model_score(m, x, t, 1, true), model_score(m, x, t, {}, true), 1.5);
    CHECK(combined_score(m, x, t, 1, cfg) == via_mix);

    GuidanceSpec nag{0.0, 3.0, NagMode::ClassifierFree, 0.05};
    Vector via_nag = nag_mix(model_score(m, x, t, 1, true), model_score(m, x, t, 1, false), 3.0);
    CHECK(combined_score(m, x, t, 1, nag) == via_nag);
}

TEST_CASE("combined corrections are linear in the weights") {
    Rng r(43, 0);
    Schedule sched{ScheduleKind::TrigVP};
    VelocityModel m = make_velocity_model(2, 3, {16, 16}, sched, r);
    Vector x{-0.4, 0.9};
    double t = 0.4;
    Vector base = combined_score(m, x, t, 2, {0.0, 0.0, NagMode::ClassifierFree, 0.05});
    Vector w1 = combined_score(m, x, t, 2, {0.0, 1.0, NagMode::ClassifierFree, 0.05});
    Vector w2 = combined_score(m, x, t, 2, {0.0, 2.0, NagMode::ClassifierFree, 0.05});
    for (std::size_t j = 0; j < 2; ++j) {
        double c1 = w1[j] - base[j];
        double c2 = w2[j] - base[j];
        CHECK(c2 == doctest::Approx(2.0 * c1).epsilon(1e-12));
    }

    // both axes at once assemble the anchored sum
    GuidanceSpec both{1.5, 2.0, NagMode::ClassifierFree, 0.05};
    Vector got = combined_score(m, x, t, 2, both);
    Vector sf = model_score(m, x, t, 2, true);
    Vector snc = model_score(m, x, t, {}, true);
    Vector snn = model_score(m, x, t, 2, false);
    for (std::size_t j = 0; j < 2; ++j) {
        double want = sf[j] + 1.5 * (sf[j] - snc[j]) + 2.0 * (sf[j] - snn[j]);
        CHECK(got[j] == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("classifier gradient descends the estimated noise level") {
    MixtureSpec mix = two_class_pair();
    Schedule sched{ScheduleKind::Linear};
    NoiseEstimator est = train_estimator(mix, sched, 200, 5, "test");

    Vector x{0.3, 0.1};
    double tau = 0.05;
    Vector g_val = net_apply(est.trunk, x);
    // finite-difference check of the quadratic log-likelihood gradient
    for (double t : {g_val[0] - 0.2, g_val[0], g_val[0] + 0.15}) {
        Vector grad = classifier_nag_grad(est, x, t, tau);
        for (std::size_t j = 0; j < 2; ++j) {
            Vector up = x, dn = x;
            up[j] += 1e-6;
            dn[j] -= 1e-6;
            double lu = -std::pow(t - net_apply(est.trunk, up)[0], 2) / (2 * tau * tau);
            double ld = -std::pow(t - net_apply(est.trunk, dn)[0], 2) / (2 * tau * tau);
            double fd = (lu - ld) / 2e-6;
            CHECK(grad[j] == doctest::Approx(fd).epsilon(1e-4));
        }
        if (t == g_val[0]) {
            CHECK(grad[0] == 0.0);
            CHECK(grad[1] == 0.0);
        }
    }
    CHECK_THROWS_AS(classifier_nag_grad(est, x, 0.5, 0.0), std::invalid_argument);
    GuidanceSpec cb{0.0, 3.0, NagMode::ClassifierBased, 0.05};
    Rng r(47, 0);
    VelocityModel m = make_velocity_model(2, 2, {8}, sched, r);
    CHECK_THROWS_AS(combined_score(m, x, 0.5, 0, cb, nullptr), std::invalid_argument);
}

TEST_CASE("time grid spans T down to zero with a short last step") {
    SamplerConfig cfg;
    cfg.steps = 250;
    cfg.last_step_size = 0.04;
    std::vector<double> ts = time_grid(cfg, 1.0);
    REQUIRE(ts.size() == 251);
    CHECK(ts.front() == doctest::Approx(1.0));
    CHECK(ts[249] == doctest::Approx(0.04).epsilon(1e-12));
    CHECK(ts.back() == 0.0);
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) CHECK(ts[i] > ts[i + 1]);
    // uniform spacing over the main leg
    double d0 = ts[0] - ts[1];
    CHECK(ts[100] - ts[101] == doctest::Approx(d0).epsilon(1e-9));

    SamplerConfig bad = cfg;
    bad.steps = 1;
    CHECK_THROWS_AS(time_grid(bad, 1.0), std::invalid_argument);
    bad = cfg;
    bad.last_step_size = 1.5;
    CHECK_THROWS_AS(time_grid(bad, 1.0), std::invalid_argument);
}

TEST_CASE("oracle sampling is reproducible and mode-independent") {
    MixtureSpec mix = two_class_pair();
    Schedule sched{ScheduleKind::Linear};
    OracleField field(mix, sched);
    SamplerConfig cfg;
    cfg.steps = 40;
    cfg.seed = 77;
    Matrix serial = final_states(sample(field, cfg, 96, {}, Exec::Serial, "oracle"));
    Matrix parallel = final_states(sample(field, cfg, 96, {}, Exec::Parallel, "oracle"));
    Matrix again = final_states(sample(field, cfg, 96, {}, Exec::Serial, "oracle"));
    CHECK(same_bits(serial, parallel));
    CHECK(same_bits(serial, again));

    // ODE stepping equals the SDE with its diffusion switched off
    SamplerConfig ode = cfg;
    ode.kind = SamplerKind::EulerODE;
    SamplerConfig zero = cfg;
    zero.w_choice = WChoice::Zero;
    Matrix x_ode = final_states(sample(field, ode, 96, {}, Exec::Serial, "oracle"));
    Matrix x_zero = final_states(sample(field, zero, 96, {}, Exec::Serial, "oracle"));
    CHECK(same_bits(x_ode, x_zero));
    CHECK_FALSE(same_bits(x_ode, serial));
}

TEST_CASE("trajectories record the grid and the label draw") {
    MixtureSpec mix = two_class_pair();
    Schedule sched{ScheduleKind::Linear};
    OracleField field(mix, sched);
    SamplerConfig cfg;
    cfg.steps = 12;
    cfg.seed = 3;
    auto trajs = sample(field, cfg, 8, {}, Exec::Serial, "oracle");
    REQUIRE(trajs.size() == 8);
    Vector grid = time_grid(cfg, 1.0);
    for (const Trajectory& tr : trajs) {
        CHECK(tr.times == grid);
        CHECK(tr.states.rows == grid.size());
        CHECK(tr.states.cols == 2);
        CHECK(tr.seed == 3);
        CHECK(tr.label == -1);  // oracle fields carry no class structure
        CHECK(tr.model_id == "oracle");
    }

    // a labeled model draws a class per trajectory, or honors a fixed one
    Rng r(61, 0);
    VelocityModel vm = make_velocity_model(2, 2, {8}, sched, r);
    ModelField mf(vm, {}, nullptr);
    auto drawn = sample(mf, cfg, 40, {}, Exec::Serial, "m");
    bool saw0 = false, saw1 = false;
    for (const Trajectory& tr : drawn) {
        REQUIRE(tr.label >= 0);
        REQUIRE(tr.label < 2);
        saw0 = saw0 || tr.label == 0;
        saw1 = saw1 || tr.label == 1;
    }
    CHECK(saw0);
    CHECK(saw1);
    auto fixed = sample(mf, cfg, 10, 1, Exec::Serial, "m");
    for (const Trajectory& tr : fixed) CHECK(tr.label == 1);
    CHECK_THROWS_AS(sample(mf, cfg, 4, 7, Exec::Serial, "m"), std::invalid_argument);
}

TEST_CASE("exact-score sampling lands on the target distribution") {
    // Standard normal is its own reverse-process fixed point, so the sampler
    // output must match direct draws closely even at modest step counts.
    MixtureSpec mix = standard_normal(2);
    Schedule sched{ScheduleKind::Linear};
    OracleField field(mix, sched);
    SamplerConfig cfg;
    cfg.steps = 250;
    cfg.seed = 19;
    Matrix got = final_states(sample(field, cfg, 2000, {}, Exec::Parallel, "oracle"));
    // A reference draw much larger than the sampled set keeps the metric's
    // own floor well under the gate, so the check reads integrator error.
    Rng ref_rng(23, 0);
    Matrix ref(20000, 2);
    for (double& v : ref.data) v = ref_rng.normal();
    double d = sliced_w2(got, ref, 128, 5, Exec::Serial);
    CHECK(d < 0.05);
}

TEST_CASE("model field applies classifier-free guidance in velocity space") {
    // The guided velocity must equal the velocity of the guided score, which
    // for affine conversions is the anchored velocity mixture.
    Rng r(53, 0);
    Schedule sched{ScheduleKind::Linear};
    VelocityModel m = make_velocity_model(2, 2, {16, 16}, sched, r);
    GuidanceSpec spec{0.7, 2.0, NagMode::ClassifierFree, 0.05};
    ModelField field(m, spec, nullptr);
    auto scratch = field.make_scratch(4);
    Matrix x(3, 2);
    Rng rx(54, 0);
    for (double& v : x.data) v = rx.normal();
    std::vector<int> labels = {0, 1, 0};
    Matrix v_out(3, 2);
    double t = 0.45;
    field.eval(x, t, labels, *scratch, v_out);
    for (std::size_t i = 0; i < 3; ++i) {
        std::span<const double> xi(x.row(i), 2);
        Vector s = combined_score(m, xi, t, labels[i], spec);
        Vector want = velocity_from_score(xi, s, t, sched);
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(v_out.at(i, j) == doctest::Approx(want[j]).epsilon(1e-9));
    }
}

TEST_CASE("model field applies the classifier pull with the velocity factor") {
    MixtureSpec mix = two_class_pair();
    Schedule sched{ScheduleKind::Linear};
    NoiseEstimator est = train_estimator(mix, sched, 100, 6, "test");
    Rng r(55, 0);
    VelocityModel m = make_velocity_model(2, 2, {16, 16}, sched, r);
    GuidanceSpec spec{0.0, 1.5, NagMode::ClassifierBased, 0.05};
    ModelField field(m, spec, &est);
    auto scratch = field.make_scratch(2);
    Matrix x(1, 2);
    x.at(0, 0) = 0.4;
    x.at(0, 1) = -0.3;
    std::vector<int> labels = {1};
    Matrix v_out(1, 2);
    double t = 0.5;
    field.eval(x, t, labels, *scratch, v_out);
    std::span<const double> xi(x.row(0), 2);
    Vector s = combined_score(m, xi, t, 1, spec, &est);
    Vector want = velocity_from_score(xi, s, t, sched);
    CHECK(v_out.at(0, 0) == doctest::Approx(want[0]).epsilon(1e-9));
    CHECK(v_out.at(0, 1) == doctest::Approx(want[1]).epsilon(1e-9));
}

TEST_CASE("guided sampling remains reproducible across modes") {
    Rng r(59, 0);
    Schedule sched{ScheduleKind::Linear};
    VelocityModel m = make_velocity_model(2, 2, {16, 16}, sched, r);
    GuidanceSpec spec{1.2, 2.0, NagMode::ClassifierFree, 0.05};
    ModelField field(m, spec, nullptr);
    SamplerConfig cfg;
    cfg.steps = 25;
    cfg.seed = 101;
    Matrix a = final_states(sample(field, cfg, 64, {}, Exec::Serial, "m"));
    Matrix b = final_states(sample(field, cfg, 64, {}, Exec::Parallel, "m"));
    CHECK(same_bits(a, b));
}
