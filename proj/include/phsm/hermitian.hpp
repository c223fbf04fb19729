#pragma once

#include "phsm/types.hpp"

#include <array>

namespace phsm {

/// Real 9-vector of a Hermitian matrix: T11, T22, T33, Re/Im T12, Re/Im T13, Re/Im T23.
using HermitianVector = std::array<double, 9>;

HermitianVector to_vector(const Matrix3c& t);
Matrix3c from_vector(const HermitianVector& v);

/// Closed-form determinant of a Hermitian matrix (always real).
double hermitian_det(const Matrix3c& t);

/// Natural log of |t|, with diagonal loading when the determinant falls
/// below `det_floor`. `trace_ref` sets the loading scale; it defaults to the
/// matrix's own trace. Returns a finite value for any PSD input.
double loaded_log_det(const Matrix3c& t, double trace_ref = -1.0);

/// Inverse with the same loading rule as loaded_log_det.
Matrix3c loaded_inverse(const Matrix3c& t);

inline constexpr double kDetFloor = 1e-300;
inline constexpr double kLoadingFactor = 1e-10;

/// (T + T^H) / 2.
Matrix3c hermitian_part(const Matrix3c& t);

bool is_hermitian(const Matrix3c& t, double rel_tol = 1e-9);

/// Hermitian and every eigenvalue >= -rel_tol * max(1, trace).
bool is_psd(const Matrix3c& t, double rel_tol = 1e-9);

}  // namespace phsm
