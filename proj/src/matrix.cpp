#include "ced/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace ced {

Matrix::Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
    require_shape(rows > 0 && cols > 0, "matrix dimensions must be positive");
    data_.assign(static_cast<std::size_t>(rows) * cols, 0.0);
}

Matrix::Matrix(int rows, int cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    require_shape(rows > 0 && cols > 0, "matrix dimensions must be positive");
    require_shape(data_.size() == static_cast<std::size_t>(rows) * cols,
                  "matrix data length must equal rows*cols");
}

Matrix Matrix::row_vector(std::vector<double> values) {
    const int n = static_cast<int>(values.size());
    return Matrix(1, n, std::move(values));
}

Matrix Matrix::filled(int rows, int cols, double value) {
    Matrix m(rows, cols);
    m.fill(value);
    return m;
}

bool Matrix::all_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Matrix::fill(double value) { data_.assign(data_.size(), value); }

void require_shape(bool cond, const std::string& what) {
    if (!cond) throw std::invalid_argument("invalid shape: " + what);
}

namespace {

// Work threshold below which the parallel kernels run their serial path;
// tiny matrices are common in training and OpenMP overhead dominates there.
constexpr long long kParallelFlops = 1LL << 16;

void matmul_row(const Matrix& a, const Matrix& b, Matrix& c, int i) {
    const int k_dim = a.cols();
    const int n = b.cols();
    double* crow = c.row_ptr(i);
    const double* arow = a.row_ptr(i);
    for (int k = 0; k < k_dim; ++k) {
        const double av = arow[k];
        const double* brow = b.row_ptr(k);
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
}

void matmul_nt_row(const Matrix& a, const Matrix& b, Matrix& c, int i) {
    const int k_dim = a.cols();
    const int n = b.rows();
    double* crow = c.row_ptr(i);
    const double* arow = a.row_ptr(i);
    for (int j = 0; j < n; ++j) {
        const double* brow = b.row_ptr(j);
        double acc = 0.0;
        for (int k = 0; k < k_dim; ++k) acc += arow[k] * brow[k];
        crow[j] = acc;
    }
}

void matmul_tn_row(const Matrix& a, const Matrix& b, Matrix& c, int i) {
    // c(i,j) = sum_k a(k,i) * b(k,j)
    const int k_dim = a.rows();
    const int n = b.cols();
    double* crow = c.row_ptr(i);
    for (int k = 0; k < k_dim; ++k) {
        const double av = a(k, i);
        const double* brow = b.row_ptr(k);
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
}

void softmax_row(const Matrix& m, Matrix& out, int i) {
    const int n = m.cols();
    const double* src = m.row_ptr(i);
    double* dst = out.row_ptr(i);
    double mx = src[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, src[j]);
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
        dst[j] = std::exp(src[j] - mx);
        sum += dst[j];
    }
    const double inv = 1.0 / sum;
    for (int j = 0; j < n; ++j) dst[j] *= inv;
}

void layer_norm_row(const Matrix& x, const Matrix& gamma, const Matrix& beta,
                    double eps, Matrix& out, Matrix* stats, int i) {
    const int n = x.cols();
    const double* src = x.row_ptr(i);
    double* dst = out.row_ptr(i);
    double mean = 0.0;
    for (int j = 0; j < n; ++j) mean += src[j];
    mean /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) {
        const double d = src[j] - mean;
        var += d * d;
    }
    var /= n;
    const double inv_std = 1.0 / std::sqrt(var + eps);
    const double* g = gamma.row_ptr(0);
    const double* b = beta.row_ptr(0);
    for (int j = 0; j < n; ++j) dst[j] = (src[j] - mean) * inv_std * g[j] + b[j];
    if (stats != nullptr) {
        (*stats)(i, 0) = mean;
        (*stats)(i, 1) = inv_std;
    }
}

void check_matmul_shapes(const Matrix& a, const Matrix& b, int a_inner, int b_inner,
                         const char* name) {
    require_shape(!a.empty() && !b.empty(), std::string(name) + " on empty matrix");
    require_shape(a_inner == b_inner, std::string(name) + " inner dimension mismatch");
}

}  // namespace

namespace kernels {

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_matmul_shapes(a, b, a.cols(), b.rows(), "matmul");
    Matrix c(a.rows(), b.cols());
    const long long flops = 2LL * a.rows() * a.cols() * b.cols();
#pragma omp parallel for schedule(static) if (flops >= kParallelFlops)
    for (int i = 0; i < a.rows(); ++i) matmul_row(a, b, c, i);
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    check_matmul_shapes(a, b, a.cols(), b.cols(), "matmul_nt");
    Matrix c(a.rows(), b.rows());
    const long long flops = 2LL * a.rows() * a.cols() * b.rows();
#pragma omp parallel for schedule(static) if (flops >= kParallelFlops)
    for (int i = 0; i < a.rows(); ++i) matmul_nt_row(a, b, c, i);
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    check_matmul_shapes(a, b, a.rows(), b.rows(), "matmul_tn");
    Matrix c(a.cols(), b.cols());
    const long long flops = 2LL * a.cols() * a.rows() * b.cols();
#pragma omp parallel for schedule(static) if (flops >= kParallelFlops)
    for (int i = 0; i < a.cols(); ++i) matmul_tn_row(a, b, c, i);
    return c;
}

Matrix softmax_rows(const Matrix& m) {
    require_shape(!m.empty(), "softmax_rows on empty matrix");
    Matrix out(m.rows(), m.cols());
    const long long work = static_cast<long long>(m.rows()) * m.cols() * 8;
#pragma omp parallel for schedule(static) if (work >= kParallelFlops)
    for (int i = 0; i < m.rows(); ++i) softmax_row(m, out, i);
    return out;
}

Matrix layer_norm_rows(const Matrix& x, const Matrix& gamma, const Matrix& beta,
                       double eps, Matrix* stats) {
    require_shape(x.cols() >= 1 && !x.empty(), "layer_norm on empty matrix");
    require_shape(gamma.rows() == 1 && gamma.cols() == x.cols(), "layer_norm gamma length");
    require_shape(beta.rows() == 1 && beta.cols() == x.cols(), "layer_norm beta length");
    if (stats != nullptr && (stats->rows() != x.rows() || stats->cols() != 2)) {
        *stats = Matrix(x.rows(), 2);
    }
    Matrix out(x.rows(), x.cols());
    const long long work = static_cast<long long>(x.rows()) * x.cols() * 6;
#pragma omp parallel for schedule(static) if (work >= kParallelFlops)
    for (int i = 0; i < x.rows(); ++i) layer_norm_row(x, gamma, beta, eps, out, stats, i);
    return out;
}

}  // namespace kernels

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_matmul_shapes(a, b, a.cols(), b.rows(), "matmul");
    Matrix c(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i) matmul_row(a, b, c, i);
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    check_matmul_shapes(a, b, a.cols(), b.cols(), "matmul_nt");
    Matrix c(a.rows(), b.rows());
    for (int i = 0; i < a.rows(); ++i) matmul_nt_row(a, b, c, i);
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    check_matmul_shapes(a, b, a.rows(), b.rows(), "matmul_tn");
    Matrix c(a.cols(), b.cols());
    for (int i = 0; i < a.cols(); ++i) matmul_tn_row(a, b, c, i);
    return c;
}

Matrix softmax_rows(const Matrix& m) {
    require_shape(!m.empty(), "softmax_rows on empty matrix");
    Matrix out(m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i) softmax_row(m, out, i);
    return out;
}

Matrix layer_norm_rows(const Matrix& x, const Matrix& gamma, const Matrix& beta,
                       double eps, Matrix* stats) {
    require_shape(x.cols() >= 1 && !x.empty(), "layer_norm on empty matrix");
    require_shape(gamma.rows() == 1 && gamma.cols() == x.cols(), "layer_norm gamma length");
    require_shape(beta.rows() == 1 && beta.cols() == x.cols(), "layer_norm beta length");
    if (stats != nullptr && (stats->rows() != x.rows() || stats->cols() != 2)) {
        *stats = Matrix(x.rows(), 2);
    }
    Matrix out(x.rows(), x.cols());
    for (int i = 0; i < x.rows(); ++i) layer_norm_row(x, gamma, beta, eps, out, stats, i);
    return out;
}

}  // namespace serial

namespace {

void ensure_finite(const Matrix& m, const char* op) {
    if (!m.all_finite()) {
        throw std::domain_error(std::string(op) + " produced a non-finite value");
    }
}

}  // namespace

Matrix softmax_rows(const Matrix& m) {
    Matrix out = kernels::softmax_rows(m);
    ensure_finite(out, "softmax_rows");
    return out;
}

Matrix layer_norm(const Matrix& x, const Matrix& gamma, const Matrix& beta, double eps) {
    require_shape(eps > 0.0, "layer_norm eps must be positive");
    Matrix out = kernels::layer_norm_rows(x, gamma, beta, eps);
    ensure_finite(out, "layer_norm");
    return out;
}

Matrix linear(const Matrix& x, const Matrix& w) {
    Matrix out = kernels::matmul(x, w);
    ensure_finite(out, "linear");
    return out;
}

Matrix linear(const Matrix& x, const Matrix& w, const Matrix& bias) {
    require_shape(bias.rows() == 1 && bias.cols() == w.cols(), "linear bias length");
    Matrix out = kernels::matmul(x, w);
    for (int i = 0; i < out.rows(); ++i) {
        double* row = out.row_ptr(i);
        const double* b = bias.row_ptr(0);
        for (int j = 0; j < out.cols(); ++j) row[j] += b[j];
    }
    ensure_finite(out, "linear");
    return out;
}

}  // namespace ced
