#include "sumis/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <limits>

#include "sumis/opcount.hpp"

namespace sumis {

namespace {

void check_square(const RealMatrix& a, const char* who) {
    if (a.rows() != a.cols() || a.rows() == 0) throw ShapeError(std::string(who) + ": square matrix required");
}

void check_symmetric(const RealMatrix& a, const char* who) {
    const double scale = max_abs(a);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j)
            if (std::fabs(a(i, j) - a(j, i)) > 1e-12 * (scale > 0 ? scale : 1.0))
                throw NotSymmetric(std::string(who) + ": matrix is not symmetric");
}

}  // namespace

LdlFactors ldl_decompose(const RealMatrix& a) {
    check_square(a, "ldl_decompose");
    check_symmetric(a, "ldl_decompose");
    const std::size_t n = a.rows();

    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::fabs(a(i, i)));
    const double pivot_floor = 1e-14 * (max_diag > 0 ? max_diag : 1.0);

    RealMatrix l = RealMatrix::identity(n);
    RealVector d(n, 0.0);
    RealVector v(n, 0.0);  // v[k] = l(j,k) * d[k], cached per pivot row
    std::uint64_t count = 0;
    for (std::size_t j = 0; j < n; ++j) {
        double dj = a(j, j);
        for (std::size_t k = 0; k < j; ++k) {
            v[k] = l(j, k) * d[k];
            dj -= l(j, k) * v[k];
        }
        count += 3 * j;
        if (dj <= pivot_floor) throw NotPositiveDefinite("ldl_decompose: non-positive pivot");
        d[j] = dj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * v[k];
            l(i, j) = s / dj;
            count += 2 * j + 1;
        }
    }
    ops::elem(count);
    return {std::move(l), std::move(d)};
}

RealMatrix invert_unit_lower(const RealMatrix& l) {
    check_square(l, "invert_unit_lower");
    const std::size_t n = l.rows();
    for (std::size_t i = 0; i < n; ++i) {
        if (l(i, i) != 1.0) throw ShapeError("invert_unit_lower: diagonal must be exactly 1");
        for (std::size_t j = i + 1; j < n; ++j)
            if (l(i, j) != 0.0) throw ShapeError("invert_unit_lower: matrix is not lower-triangular");
    }
    // Forward substitution column by column; the inverse stays unit lower.
    RealMatrix inv = RealMatrix::identity(n);
    std::uint64_t count = 0;
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = 0.0;
            for (std::size_t k = j; k < i; ++k) s -= l(i, k) * inv(k, j);
            inv(i, j) = s;
            count += 2 * (i - j);
        }
    }
    ops::elem(count);
    return inv;
}

RealMatrix spd_inverse(const RealMatrix& a) {
    LdlFactors f = ldl_decompose(a);
    const std::size_t n = a.rows();
    RealMatrix linv = invert_unit_lower(f.unit_lower);
    // A⁻¹ = L⁻ᵀ D⁻¹ L⁻¹, assembled symmetrically.
    RealMatrix out(n, n);
    std::uint64_t count = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = std::max(i, j); k < n; ++k) s += linv(k, i) * linv(k, j) / f.diag[k];
            out(i, j) = s;
            out(j, i) = s;
            count += 3 * (n - std::max(i, j));
        }
    ops::elem(count);
    return out;
}

namespace {

double det2(const RealMatrix& a, int r0, int r1, int c0, int c1) {
    return a(r0, c0) * a(r1, c1) - a(r0, c1) * a(r1, c0);
}

double det3(const RealMatrix& a, const int r[3], const int c[3]) {
    return a(r[0], c[0]) * (a(r[1], c[1]) * a(r[2], c[2]) - a(r[1], c[2]) * a(r[2], c[1])) -
           a(r[0], c[1]) * (a(r[1], c[0]) * a(r[2], c[2]) - a(r[1], c[2]) * a(r[2], c[0])) +
           a(r[0], c[2]) * (a(r[1], c[0]) * a(r[2], c[1]) - a(r[1], c[1]) * a(r[2], c[0]));
}

}  // namespace

RealMatrix small_inverse(const RealMatrix& a) {
    check_square(a, "small_inverse");
    const std::size_t n = a.rows();
    if (n > 4) throw ShapeError("small_inverse: dimension must be <= 4");

    double scale = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        double rmax = 0.0;
        for (std::size_t j = 0; j < n; ++j) rmax = std::max(rmax, std::fabs(a(i, j)));
        scale *= (rmax > 0 ? rmax : 1.0);
    }

    RealMatrix inv(n, n);
    double det = 0.0;
    switch (n) {
        case 1: {
            det = a(0, 0);
            if (std::fabs(det) <= 1e-14 * scale) throw Singular("small_inverse: singular matrix");
            inv(0, 0) = 1.0 / det;
            ops::elem(1);
            return inv;
        }
        case 2: {
            det = det2(a, 0, 1, 0, 1);
            if (std::fabs(det) <= 1e-14 * scale) throw Singular("small_inverse: singular matrix");
            const double id = 1.0 / det;
            inv(0, 0) = a(1, 1) * id;
            inv(0, 1) = -a(0, 1) * id;
            inv(1, 0) = -a(1, 0) * id;
            inv(1, 1) = a(0, 0) * id;
            ops::elem(3 + 1 + 4);
            return inv;
        }
        case 3: {
            const int rr[3] = {0, 1, 2}, cc[3] = {0, 1, 2};
            det = det3(a, rr, cc);
            if (std::fabs(det) <= 1e-14 * scale) throw Singular("small_inverse: singular matrix");
            const double id = 1.0 / det;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    const int r0 = (j + 1) % 3, r1 = (j + 2) % 3;
                    const int c0 = (i + 1) % 3, c1 = (i + 2) % 3;
                    // Cofactor with the cyclic index trick absorbing the sign.
                    inv(i, j) = (a(r0, c0) * a(r1, c1) - a(r0, c1) * a(r1, c0)) * id;
                }
            ops::elem(14 + 1 + 9 * 4);
            return inv;
        }
        case 4: {
            // Cofactor expansion along row 0 for the determinant, then the
            // adjugate from 3x3 minors.
            int rows[3], cols[3];
            auto minor3 = [&](int skip_r, int skip_c) {
                int t = 0;
                for (int r = 0; r < 4; ++r)
                    if (r != skip_r) rows[t++] = r;
                t = 0;
                for (int c = 0; c < 4; ++c)
                    if (c != skip_c) cols[t++] = c;
                return det3(a, rows, cols);
            };
            double sign = 1.0;
            for (int c = 0; c < 4; ++c) {
                det += sign * a(0, c) * minor3(0, c);
                sign = -sign;
            }
            if (std::fabs(det) <= 1e-14 * scale) throw Singular("small_inverse: singular matrix");
            const double id = 1.0 / det;
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) {
                    const double s = ((i + j) % 2 == 0) ? 1.0 : -1.0;
                    inv(i, j) = s * minor3(j, i) * id;
                }
            ops::elem(4 * 14 + 7 + 1 + 16 * 16);
            return inv;
        }
        default:
            throw ShapeError("small_inverse: unreachable");
    }
}

double jacobian_log_sum(double a, double b) {
    const double ninf = -std::numeric_limits<double>::infinity();
    if (a == ninf && b == ninf) return ninf;
    if (a == ninf) return b;
    if (b == ninf) return a;
    const double hi = std::max(a, b);
    const double diff = std::fabs(a - b);
    ops::elem(2);
    ops::transc(2);  // exp + log1p
    return hi + std::log1p(std::exp(-diff));
}

double quadratic_norm(const RealVector& x, const RealMatrix& q_inv) {
    if (q_inv.rows() != x.size() || q_inv.cols() != x.size())
        throw ShapeError("quadratic_norm: dimension mismatch");
    const std::size_t n = x.size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double t = 0.0;
        for (std::size_t j = 0; j < n; ++j) t += q_inv(i, j) * x[j];
        s += t * x[i];
    }
    ops::elem(2 * n * n + 2 * n);
    return s;
}

}  // namespace sumis
