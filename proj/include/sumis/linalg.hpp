#ifndef SUMIS_LINALG_HPP
#define SUMIS_LINALG_HPP

#include <stdexcept>

#include "sumis/matrix.hpp"

namespace sumis {

struct NotPositiveDefinite : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotSymmetric : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct Singular : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// a = L D Lᵀ with L unit lower-triangular and D positive diagonal.
struct LdlFactors {
    RealMatrix unit_lower;  // L
    RealVector diag;        // D
};

// Plain LDL without pivoting; inputs here are regularized by (N0/2)I and
// stay well away from singularity.
// Throws NotSymmetric (1e-12 relative check) or NotPositiveDefinite
// (pivot <= 1e-14 * largest diagonal).
LdlFactors ldl_decompose(const RealMatrix& a);

// Inverse of a unit lower-triangular matrix; result is unit lower-triangular
// with upper entries identically zero.
RealMatrix invert_unit_lower(const RealMatrix& l);

// A⁻¹ = L⁻ᵀ D⁻¹ L⁻¹ for symmetric positive-definite A; result symmetrized.
RealMatrix spd_inverse(const RealMatrix& a);

// Closed-form (adjugate) inverse for dimension 1..4.
// Throws Singular when |det| <= 1e-14 * scale.
RealMatrix small_inverse(const RealMatrix& a);

// log(eᵃ + eᵇ) = max(a,b) + log1p(e^{-|a-b|}); exact when an argument is -inf.
double jacobian_log_sum(double a, double b);

// xᵀ Qinv x for a symmetric matrix Qinv (supplied already inverted).
double quadratic_norm(const RealVector& x, const RealMatrix& q_inv);

}  // namespace sumis

#endif
