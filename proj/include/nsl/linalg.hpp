#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace nsl {

using Vector = std::vector<double>;

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Vector data;  // row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }
    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    void resize(std::size_t r, std::size_t c) {
        rows = r;
        cols = c;
        data.assign(r * c, 0.0);
    }
};

// C = A * B^T. Shapes: A (n x k), B (m x k), C (n x m). The shared inner
// dimension is contiguous in both operands, which is what the training and
// sampling hot loops need (activations times a row-major weight matrix).
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c);

// C = A * B. Shapes: A (n x m), B (m x k), C (n x k).
void matmul_nn(const Matrix& a, const Matrix& b, Matrix& c);

// C += A^T * B. Shapes: A (n x m), B (n x k), C (m x k).
void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c);

inline void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows != b.rows || a.cols != b.cols) throw std::invalid_argument(what);
}

}  // namespace nsl
