#include "sumis/matrix.hpp"

#include <cmath>

#include "sumis/opcount.hpp"

namespace sumis {

RealMatrix matmul(const RealMatrix& a, const RealMatrix& b) {
    if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
    const std::size_t r = a.rows(), k = a.cols(), c = b.cols();
    RealMatrix out(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < k; ++t) s += a(i, t) * b(t, j);
            out(i, j) = s;
        }
    if (k > 0) ops::elem(r * c * k + r * c * (k - 1));
    return out;
}

RealVector matvec(const RealMatrix& a, const RealVector& x) {
    if (a.cols() != x.size()) throw ShapeError("matvec: dimension mismatch");
    const std::size_t r = a.rows(), c = a.cols();
    RealVector out(r, 0.0);
    for (std::size_t i = 0; i < r; ++i) {
        double s = 0.0;
        const double* row = a.row(i);
        for (std::size_t j = 0; j < c; ++j) s += row[j] * x[j];
        out[i] = s;
    }
    if (c > 0) ops::elem(r * c + r * (c - 1));
    return out;
}

RealVector matvec_transposed(const RealMatrix& a, const RealVector& x) {
    if (a.rows() != x.size()) throw ShapeError("matvec_transposed: dimension mismatch");
    const std::size_t r = a.rows(), c = a.cols();
    RealVector out(c, 0.0);
    for (std::size_t i = 0; i < r; ++i) {
        const double* row = a.row(i);
        const double xi = x[i];
        for (std::size_t j = 0; j < c; ++j) out[j] += row[j] * xi;
    }
    if (r > 0) ops::elem(r * c + (r - 1) * c);
    return out;
}

RealMatrix transpose(const RealMatrix& a) {
    RealMatrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

RealMatrix gram(const RealMatrix& a) {
    const std::size_t r = a.rows(), c = a.cols();
    RealMatrix out(c, c);
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = i; j < c; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < r; ++t) s += a(t, i) * a(t, j);
            out(i, j) = s;
            out(j, i) = s;
        }
    // Full-product count: the symmetric shortcut is bookkeeping, the paper's
    // Nr*Nt^2 figure assumes the plain product.
    if (r > 0) ops::elem(r * c * c + (r - 1) * c * c);
    return out;
}

double dot(const RealVector& a, const RealVector& b) {
    if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    if (!a.empty()) ops::elem(2 * a.size() - 1);
    return s;
}

double norm2(const RealVector& a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    if (!a.empty()) ops::elem(2 * a.size() - 1);
    return s;
}

RealVector vec_sub(const RealVector& a, const RealVector& b) {
    if (a.size() != b.size()) throw ShapeError("vec_sub: length mismatch");
    RealVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    ops::elem(a.size());
    return out;
}

void axpy(double alpha, const RealVector& x, RealVector& y) {
    if (x.size() != y.size()) throw ShapeError("axpy: length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
    ops::elem(2 * x.size());
}

double frobenius_norm(const RealMatrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

double max_abs(const RealMatrix& a) {
    double m = 0.0;
    for (double v : a.data()) m = std::max(m, std::fabs(v));
    return m;
}

RealMatrix pick_columns(const RealMatrix& a, const std::vector<int>& idx) {
    RealMatrix out(a.rows(), idx.size());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < idx.size(); ++j) out(i, j) = a(i, static_cast<std::size_t>(idx[j]));
    return out;
}

}  // namespace sumis
