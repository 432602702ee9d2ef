#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ced {

/// Dense 2-D matrix of doubles, row-major. Vectors are 1xN matrices.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols);
    Matrix(int rows, int cols, std::vector<double> values);

    static Matrix row_vector(std::vector<double> values);
    static Matrix filled(int rows, int cols, double value);

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    double* row_ptr(int r) noexcept { return data_.data() + static_cast<std::size_t>(r) * cols_; }
    const double* row_ptr(int r) const noexcept { return data_.data() + static_cast<std::size_t>(r) * cols_; }

    const std::vector<double>& values() const noexcept { return data_; }

    bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    bool all_finite() const noexcept;
    void fill(double value);

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

/// Throws std::invalid_argument when `cond` is false.
void require_shape(bool cond, const std::string& what);

// Parallel kernels. Each output row is produced by exactly one thread with a
// fixed inner accumulation order, so results are bitwise identical to the
// serial reference regardless of thread count.
namespace kernels {

Matrix matmul(const Matrix& a, const Matrix& b);     // a(m,k) * b(k,n)
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a(m,k) * b(n,k)^T
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a(k,m)^T * b(k,n)
Matrix softmax_rows(const Matrix& m);
// stats receives one row per input row: [mean, 1/sqrt(var+eps)].
Matrix layer_norm_rows(const Matrix& x, const Matrix& gamma, const Matrix& beta,
                       double eps, Matrix* stats = nullptr);

}  // namespace kernels

// Serial reference implementations, kept for testing and benchmarking against
// the parallel kernels.
namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix softmax_rows(const Matrix& m);
Matrix layer_norm_rows(const Matrix& x, const Matrix& gamma, const Matrix& beta,
                       double eps, Matrix* stats = nullptr);

}  // namespace serial

// Public tensor surface. Shape-checked, and outputs are verified finite.

/// Row-wise stabilized softmax; every output row sums to 1.
Matrix softmax_rows(const Matrix& m);

/// Per-row normalization to zero mean / unit variance, then gamma/beta affine.
Matrix layer_norm(const Matrix& x, const Matrix& gamma, const Matrix& beta, double eps);

Matrix linear(const Matrix& x, const Matrix& w);
Matrix linear(const Matrix& x, const Matrix& w, const Matrix& bias);

}  // namespace ced
