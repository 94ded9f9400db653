#include "nsl/linalg.hpp"

namespace nsl {

namespace {

// 4x4 register tile over the dot-product formulation, accumulating in four
// independent lanes per cell so the k loop maps onto packed fused
// multiply-adds. Both operand rows are walked contiguously; the tile keeps
// the accumulators live and quarters the load traffic.
void nt_tile(const double* a0, const double* a1, const double* a2, const double* a3,
             const double* b0, const double* b1, const double* b2, const double* b3,
             std::size_t k, double out[4][4]) {
    const double* a[4] = {a0, a1, a2, a3};
    const double* b[4] = {b0, b1, b2, b3};
    double acc[4][4][4] = {};
    const std::size_t k4 = k - k % 4;
    for (std::size_t p = 0; p < k4; p += 4)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                for (int l = 0; l < 4; ++l) acc[i][j][l] += a[i][p + l] * b[j][p + l];
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double s = (acc[i][j][0] + acc[i][j][1]) + (acc[i][j][2] + acc[i][j][3]);
            for (std::size_t p = k4; p < k; ++p) s += a[i][p] * b[j][p];
            out[i][j] = s;
        }
}

}  // namespace

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.cols != b.cols) throw std::invalid_argument("matmul_nt: inner dimension mismatch");
    c.rows = a.rows;
    c.cols = b.rows;
    c.data.assign(c.rows * c.cols, 0.0);
    const std::size_t n = a.rows, m = b.rows, k = a.cols;
    const std::size_t n4 = n - n % 4, m4 = m - m % 4;
    for (std::size_t i = 0; i < n4; i += 4) {
        for (std::size_t j = 0; j < m4; j += 4) {
            double out[4][4];
            nt_tile(a.row(i), a.row(i + 1), a.row(i + 2), a.row(i + 3),
                    b.row(j), b.row(j + 1), b.row(j + 2), b.row(j + 3), k, out);
            for (int di = 0; di < 4; ++di)
                for (int dj = 0; dj < 4; ++dj) c.at(i + di, j + dj) = out[di][dj];
        }
        for (std::size_t j = m4; j < m; ++j) {
            for (int di = 0; di < 4; ++di) {
                const double* ar = a.row(i + di);
                const double* br = b.row(j);
                double acc = 0.0;
                for (std::size_t p = 0; p < k; ++p) acc += ar[p] * br[p];
                c.at(i + di, j) = acc;
            }
        }
    }
    for (std::size_t i = n4; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double* ar = a.row(i);
            const double* br = b.row(j);
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += ar[p] * br[p];
            c.at(i, j) = acc;
        }
    }
}

void matmul_nn(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul_nn: inner dimension mismatch");
    c.rows = a.rows;
    c.cols = b.cols;
    c.data.assign(c.rows * c.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double* cr = c.row(i);
        const double* ar = a.row(i);
        for (std::size_t p = 0; p < a.cols; ++p) {
            const double av = ar[p];
            const double* br = b.row(p);
            for (std::size_t j = 0; j < b.cols; ++j) cr[j] += av * br[j];
        }
    }
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.rows != b.rows) throw std::invalid_argument("matmul_tn_acc: outer dimension mismatch");
    if (c.rows != a.cols || c.cols != b.cols) throw std::invalid_argument("matmul_tn_acc: output shape mismatch");
    for (std::size_t p = 0; p < a.rows; ++p) {
        const double* ar = a.row(p);
        const double* br = b.row(p);
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double av = ar[i];
            double* cr = c.row(i);
            for (std::size_t j = 0; j < b.cols; ++j) cr[j] += av * br[j];
        }
    }
}

}  // namespace nsl
