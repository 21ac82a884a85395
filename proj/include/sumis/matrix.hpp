#ifndef SUMIS_MATRIX_HPP
#define SUMIS_MATRIX_HPP

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace sumis {

using RealVector = std::vector<double>;

// Dense row-major real matrix. All detector-side dimensions are small
// (Nt <= ~32), so no blocking or sparse formats.
class RealMatrix {
public:
    RealMatrix() = default;
    RealMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

    static RealMatrix identity(std::size_t n) {
        RealMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    const double* row(std::size_t i) const { return a_.data() + i * cols_; }
    double* row(std::size_t i) { return a_.data() + i * cols_; }

    std::vector<double>& data() { return a_; }
    const std::vector<double>& data() const { return a_; }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// All of the following tally elementary operations into the per-thread
// counter (see opcount.hpp) when counting is enabled.
RealMatrix matmul(const RealMatrix& a, const RealMatrix& b);
RealVector matvec(const RealMatrix& a, const RealVector& x);
RealVector matvec_transposed(const RealMatrix& a, const RealVector& x);  // aᵀx
RealMatrix transpose(const RealMatrix& a);
RealMatrix gram(const RealMatrix& a);  // aᵀa, symmetric
double dot(const RealVector& a, const RealVector& b);
double norm2(const RealVector& a);  // squared Euclidean norm
RealVector vec_sub(const RealVector& a, const RealVector& b);
void axpy(double alpha, const RealVector& x, RealVector& y);  // y += alpha*x

double frobenius_norm(const RealMatrix& a);
double max_abs(const RealMatrix& a);

// Columns of `a` listed in `idx`, in order.
RealMatrix pick_columns(const RealMatrix& a, const std::vector<int>& idx);

}  // namespace sumis

#endif
