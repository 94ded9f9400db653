#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nsl/linalg.hpp"

namespace nsl {

class Rng;

// Diagonal-covariance Gaussian mixture; the only data family in the lab.
// Every component carries a class label so conditional scores and
// class-guided sampling come for free.
struct MixtureComponent {
    double weight;
    Vector mean;
    Vector var;  // per-coordinate variances
    int label = 0;
};

struct MixtureSpec {
    std::vector<MixtureComponent> components;
    std::size_t dim = 0;

    int num_classes() const;
};

// Throws std::invalid_argument on inconsistent dimensions, weights not
// summing to 1 (tolerance 1e-12), nonpositive variances, or labels that do
// not cover a contiguous range starting at 0.
void validate(const MixtureSpec& mix);

struct DataSample {
    Matrix states;            // n x dim
    std::vector<int> labels;  // n
};

DataSample sample_data(const MixtureSpec& mix, std::size_t n, std::uint64_t seed);

// Single draw into caller storage; consumes 1 + dim RNG values in a fixed
// order so callers can interleave draws deterministically.
void sample_one(const MixtureSpec& mix, Rng& rng, std::span<double> x0_out, int& label_out);

// Named presets usable anywhere a dataset is configured.
MixtureSpec standard_normal(std::size_t dim);
MixtureSpec grid_mixture();
MixtureSpec two_moons();
MixtureSpec checkerboard();
MixtureSpec preset_by_name(const std::string& name);

}  // namespace nsl
