#include "nsl/oracle.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace nsl {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

MixtureSpec filtered(const MixtureSpec& mix, std::optional<int> class_filter) {
    if (!class_filter) return mix;
    MixtureSpec out;
    out.dim = mix.dim;
    double total = 0.0;
    for (const auto& c : mix.components)
        if (c.label == *class_filter) {
            out.components.push_back(c);
            total += c.weight;
        }
    if (out.components.empty() || total <= 0.0)
        throw std::invalid_argument("class filter matches no mixture component");
    for (auto& c : out.components) c.weight /= total;
    return out;
}

// Per-component log N(x; mean, diag var) and the stabilized responsibilities.
double component_log_density(const MixtureComponent& c, std::span<const double> x) {
    double acc = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
        double diff = x[d] - c.mean[d];
        acc += diff * diff / c.var[d] + std::log(c.var[d]);
    }
    return -0.5 * (acc + double(x.size()) * kLog2Pi);
}

struct Responsibilities {
    std::vector<double> r;
    double log_total;
};

Responsibilities responsibilities(const MixtureSpec& mix, std::span<const double> x) {
    std::vector<double> lg(mix.components.size());
    double top = -HUGE_VAL;
    for (std::size_t k = 0; k < mix.components.size(); ++k) {
        lg[k] = std::log(mix.components[k].weight) + component_log_density(mix.components[k], x);
        top = std::max(top, lg[k]);
    }
    double sum = 0.0;
    for (double v : lg) sum += std::exp(v - top);
    Responsibilities out;
    out.log_total = top + std::log(sum);
    out.r.resize(lg.size());
    for (std::size_t k = 0; k < lg.size(); ++k) out.r[k] = std::exp(lg[k] - out.log_total);
    return out;
}

}  // namespace

MixtureSpec marginal_at(const MixtureSpec& mix, double t, const Schedule& sched) {
    ScheduleEval e = eval_schedule(sched, t);
    MixtureSpec out = mix;
    for (auto& c : out.components)
        for (std::size_t d = 0; d < mix.dim; ++d) {
            c.mean[d] *= e.alpha;
            c.var[d] = e.alpha * e.alpha * c.var[d] + e.sigma * e.sigma;
        }
    return out;
}

double log_density(const MixtureSpec& mix, std::span<const double> x) {
    if (x.size() != mix.dim) throw std::invalid_argument("state dimension disagrees with mixture");
    return responsibilities(mix, x).log_total;
}

PosteriorMoments posterior_moments(const MixtureSpec& mix, std::span<const double> x, double t,
                                   const Schedule& sched, std::optional<int> class_filter) {
    MixtureSpec base = filtered(mix, class_filter);
    if (x.size() != base.dim) throw std::invalid_argument("state dimension disagrees with mixture");
    ScheduleEval e = eval_schedule(sched, t);
    MixtureSpec marg = marginal_at(base, t, sched);
    Responsibilities resp = responsibilities(marg, x);

    PosteriorMoments out;
    out.x0.assign(base.dim, 0.0);
    out.eps.assign(base.dim, 0.0);
    for (std::size_t k = 0; k < base.components.size(); ++k) {
        const auto& c0 = base.components[k];
        const auto& ct = marg.components[k];
        double r = resp.r[k];
        for (std::size_t d = 0; d < base.dim; ++d) {
            double centered = x[d] - ct.mean[d];
            // Joint-Gaussian conditionals per component; both stay finite at
            // sigma = 0 where they reduce to x0 = x, eps = 0.
            out.x0[d] += r * (c0.mean[d] + e.alpha * c0.var[d] * centered / ct.var[d]);
            out.eps[d] += r * (e.sigma * centered / ct.var[d]);
        }
    }
    return out;
}

Vector oracle_score(const MixtureSpec& mix, std::span<const double> x, double t,
                    const Schedule& sched, std::optional<int> class_filter) {
    MixtureSpec marg = marginal_at(filtered(mix, class_filter), t, sched);
    if (x.size() != marg.dim) throw std::invalid_argument("state dimension disagrees with mixture");
    Responsibilities resp = responsibilities(marg, x);
    Vector out(marg.dim, 0.0);
    for (std::size_t k = 0; k < marg.components.size(); ++k) {
        const auto& c = marg.components[k];
        for (std::size_t d = 0; d < marg.dim; ++d)
            out[d] -= resp.r[k] * (x[d] - c.mean[d]) / c.var[d];
    }
    return out;
}

Vector oracle_velocity(const MixtureSpec& mix, std::span<const double> x, double t,
                       const Schedule& sched, std::optional<int> class_filter) {
    ScheduleEval e = eval_schedule(sched, t);
    PosteriorMoments m = posterior_moments(mix, x, t, sched, class_filter);
    Vector out(x.size());
    for (std::size_t d = 0; d < x.size(); ++d)
        out[d] = e.alpha_dot * m.x0[d] + e.sigma_dot * m.eps[d];
    return out;
}

const Quadrature& gauss_legendre_01(int n) {
    static std::map<int, Quadrature> cache;
    static std::mutex lock;
    std::lock_guard<std::mutex> guard(lock);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    if (n < 1) throw std::invalid_argument("quadrature order must be positive");

    // Newton iteration on P_n over [-1, 1], then affine map to [0, 1].
    Quadrature q;
    q.nodes.resize(n);
    q.weights.resize(n);
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < n; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double step = p1 / dp;
            x -= step;
            if (std::abs(step) < 1e-15) break;
        }
        q.nodes[n - 1 - i] = 0.5 * (x + 1.0);
        q.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    return cache.emplace(n, std::move(q)).first->second;
}

namespace {

// Shared evaluation for the marginalized density and its gradient:
// log-sum-exp over prior-weighted time slices, gradient as the
// responsibility-weighted average of per-slice scores.
struct MarginalEval {
    double log_density;
    Vector score;
};

MarginalEval eval_noise_marginal(const MixtureSpec& mix, std::span<const double> x,
                                 const TimePrior& prior, const Schedule& sched,
                                 std::optional<int> class_filter, int nodes) {
    MixtureSpec base = filtered(mix, class_filter);
    std::vector<std::pair<double, double>> support;
    if (prior.kind == TimePrior::Kind::Uniform01) {
        const Quadrature& q = gauss_legendre_01(nodes);
        for (int i = 0; i < nodes; ++i) support.push_back({q.nodes[i], q.weights[i]});
    } else {
        support = prior.grid;
    }
    if (support.empty()) throw std::invalid_argument("time prior has empty support");
    double wsum = 0.0;
    for (auto& [t, w] : support) {
        if (t < 0.0 || t > Schedule::T) throw std::invalid_argument("time prior outside [0, T]");
        if (w < 0.0) throw std::invalid_argument("negative prior weight");
        wsum += w;
    }
    if (wsum <= 0.0) throw std::invalid_argument("time prior has zero mass");

    std::vector<double> lg(support.size());
    std::vector<Vector> scores(support.size());
    double top = -HUGE_VAL;
    for (std::size_t i = 0; i < support.size(); ++i) {
        auto [t, w] = support[i];
        MixtureSpec marg = marginal_at(base, t, sched);
        lg[i] = std::log(w / wsum) + log_density(marg, x);
        scores[i] = oracle_score(base, x, t, sched);
        top = std::max(top, lg[i]);
    }
    double sum = 0.0;
    for (double v : lg) sum += std::exp(v - top);

    MarginalEval out;
    out.log_density = top + std::log(sum);
    out.score.assign(x.size(), 0.0);
    for (std::size_t i = 0; i < support.size(); ++i) {
        double u = std::exp(lg[i] - out.log_density);
        for (std::size_t d = 0; d < x.size(); ++d) out.score[d] += u * scores[i][d];
    }
    return out;
}

}  // namespace

Vector noise_marginal_score(const MixtureSpec& mix, std::span<const double> x,
                            const TimePrior& prior, const Schedule& sched,
                            std::optional<int> class_filter, int nodes) {
    return eval_noise_marginal(mix, x, prior, sched, class_filter, nodes).score;
}

double noise_marginal_log_density(const MixtureSpec& mix, std::span<const double> x,
                                  const TimePrior& prior, const Schedule& sched,
                                  std::optional<int> class_filter, int nodes) {
    return eval_noise_marginal(mix, x, prior, sched, class_filter, nodes).log_density;
}

}  // namespace nsl
