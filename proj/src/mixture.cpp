#include "nsl/mixture.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "nsl/rng.hpp"

namespace nsl {

int MixtureSpec::num_classes() const {
    int top = -1;
    for (const auto& c : components) top = std::max(top, c.label);
    return top + 1;
}

void validate(const MixtureSpec& mix) {
    if (mix.components.empty()) throw std::invalid_argument("mixture has no components");
    if (mix.dim == 0) throw std::invalid_argument("mixture dimension must be positive");
    double total = 0.0;
    std::set<int> labels;
    for (const auto& c : mix.components) {
        if (c.mean.size() != mix.dim || c.var.size() != mix.dim)
            throw std::invalid_argument("component dimension disagrees with mixture");
        if (c.weight < 0.0) throw std::invalid_argument("negative component weight");
        for (double v : c.var)
            if (!(v > 0.0)) throw std::invalid_argument("component variance must be positive");
        if (c.label < 0) throw std::invalid_argument("negative class label");
        total += c.weight;
        labels.insert(c.label);
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("component weights must sum to 1");
    int expect = 0;
    for (int l : labels)
        if (l != expect++) throw std::invalid_argument("class labels must be contiguous from 0");
}

void sample_one(const MixtureSpec& mix, Rng& rng, std::span<double> x0_out, int& label_out) {
    double r = rng.uniform();
    std::size_t k = 0;
    double acc = 0.0;
    for (; k + 1 < mix.components.size(); ++k) {
        acc += mix.components[k].weight;
        if (r < acc) break;
    }
    const auto& comp = mix.components[k];
    for (std::size_t d = 0; d < mix.dim; ++d)
        x0_out[d] = comp.mean[d] + std::sqrt(comp.var[d]) * rng.normal();
    label_out = comp.label;
}

DataSample sample_data(const MixtureSpec& mix, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("sample_data requires n >= 1");
    validate(mix);
    Rng rng(seed);
    DataSample out;
    out.states = Matrix(n, mix.dim);
    out.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        sample_one(mix, rng, std::span<double>(out.states.row(i), mix.dim), out.labels[i]);
    return out;
}

MixtureSpec standard_normal(std::size_t dim) {
    MixtureSpec mix;
    mix.dim = dim;
    mix.components.push_back({1.0, Vector(dim, 0.0), Vector(dim, 1.0), 0});
    return mix;
}

// Jittered two-level lattice in eight dimensions: 2^8 tight clusters near
// the corners of a small hypercube, displaced by a fixed random jitter so
// no coordinate plane is a symmetry axis. The scale is tuned for drift
// diagnostics: cluster spacing 0.7 is fine enough that a sampler running
// slightly "too noisy" visibly smears the corners, while the ambient
// dimension gives a state-only noise regressor enough coordinates to
// average over. Classes are the quadrant of the first two axes.
MixtureSpec grid_mixture() {
    const std::size_t dim = 8;
    const int n_comp = 1 << dim;
    const double spacing = 0.7;
    const double jitter = 0.2;
    const double var = 0.05 * 0.05;

    Rng rng(42);  // fixed jitter; the preset is one distribution, not a family
    MixtureSpec mix;
    mix.dim = dim;
    mix.components.reserve(n_comp);
    for (int idx = 0; idx < n_comp; ++idx) {
        Vector mean(dim);
        for (std::size_t a = 0; a < dim; ++a) {
            int level = (idx >> (dim - 1 - a)) & 1;
            mean[a] = (level - 0.5) * spacing + (2.0 * rng.uniform() - 1.0) * jitter;
        }
        int label = (idx >> (dim - 1)) * 2 + ((idx >> (dim - 2)) & 1);
        mix.components.push_back({1.0 / n_comp, std::move(mean), Vector(dim, var), label});
    }
    return mix;
}

// Two interleaved arcs, one class per arc, eight clusters along each.
MixtureSpec two_moons() {
    MixtureSpec mix;
    mix.dim = 2;
    const int per_arc = 8;
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < per_arc; ++i) {
        double th = pi * (i + 0.5) / per_arc;
        mix.components.push_back(
            {0.5 / per_arc, {std::cos(th), std::sin(th) - 0.25}, {0.01, 0.01}, 0});
    }
    for (int i = 0; i < per_arc; ++i) {
        double th = pi * (i + 0.5) / per_arc;
        mix.components.push_back(
            {0.5 / per_arc, {1.0 - std::cos(th), 0.25 - std::sin(th)}, {0.01, 0.01}, 1});
    }
    return mix;
}

// Eight occupied squares of a 4x4 board on [-1,1]^2; each square is one
// class, its Gaussian matching the square's variance side^2/12.
MixtureSpec checkerboard() {
    MixtureSpec mix;
    mix.dim = 2;
    const double side = 0.5;
    const double var = side * side / 12.0;
    int label = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            if ((i + j) % 2 != 0) continue;
            double cx = -1.0 + side * (i + 0.5);
            double cy = -1.0 + side * (j + 0.5);
            mix.components.push_back({1.0 / 8.0, {cx, cy}, {var, var}, label++});
        }
    return mix;
}

MixtureSpec preset_by_name(const std::string& name) {
    if (name == "standard_normal") return standard_normal(2);
    if (name == "grid_mixture") return grid_mixture();
    if (name == "two_moons") return two_moons();
    if (name == "checkerboard") return checkerboard();
    throw std::invalid_argument("unknown dataset preset: " + name);
}

}  // namespace nsl
