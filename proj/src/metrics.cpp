#include "nsl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nsl/rng.hpp"

namespace nsl {

namespace {

// Empirical quantile at probability q by linear interpolation between order
// statistics; with equal sample counts on both sides this reduces to exact
// sorted pairing.
double quantile(const Vector& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size()) - 0.5;
    if (pos <= 0.0) {
        return sorted.front();
    }
    if (pos >= static_cast<double>(sorted.size() - 1)) {
        return sorted.back();
    }
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

double sliced_w2(const Matrix& a, const Matrix& b, int n_projections, std::uint64_t seed,
                 Exec mode) {
    if (a.cols != b.cols) {
        throw std::invalid_argument("sliced_w2: dimension mismatch");
    }
    if (a.rows == 0 || b.rows == 0) {
        throw std::invalid_argument("sliced_w2: empty sample set");
    }
    if (n_projections < 1) {
        throw std::invalid_argument("sliced_w2: need at least one projection");
    }
    const std::size_t dim = a.cols;
    const std::size_t k = std::max(a.rows, b.rows);
    Vector per_projection(static_cast<std::size_t>(n_projections));

    for_each_index(static_cast<std::size_t>(n_projections), mode, [&](std::size_t p) {
        Rng rng(seed, p);
        Vector u(dim);
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                u[j] = rng.normal();
                norm2 += u[j] * u[j];
            }
        } while (norm2 == 0.0);
        const double inv = 1.0 / std::sqrt(norm2);
        for (double& v : u) {
            v *= inv;
        }
        Vector pa(a.rows);
        Vector pb(b.rows);
        for (std::size_t i = 0; i < a.rows; ++i) {
            double dot = 0.0;
            const double* row = a.row(i);
            for (std::size_t j = 0; j < dim; ++j) {
                dot += row[j] * u[j];
            }
            pa[i] = dot;
        }
        for (std::size_t i = 0; i < b.rows; ++i) {
            double dot = 0.0;
            const double* row = b.row(i);
            for (std::size_t j = 0; j < dim; ++j) {
                dot += row[j] * u[j];
            }
            pb[i] = dot;
        }
        std::sort(pa.begin(), pa.end());
        std::sort(pb.begin(), pb.end());
        double acc = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double q = (static_cast<double>(i) + 0.5) / static_cast<double>(k);
            const double d = quantile(pa, q) - quantile(pb, q);
            acc += d * d;
        }
        per_projection[p] = acc / static_cast<double>(k);
    });

    double total = 0.0;
    for (double v : per_projection) {
        total += v;
    }
    return std::sqrt(total / static_cast<double>(n_projections));
}

}  // namespace nsl
