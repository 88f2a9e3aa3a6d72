#pragma once

// Dense linear-algebra kernels shared by the synthesis and simulation code.
// Everything here is a pure function of its arguments.

#include <complex>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "synctool/errors.hpp"
#include "synctool/state_space.hpp"

namespace synctool::numlin {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using Spectrum = Eigen::VectorXcd;

// Real parts above -kHurwitzTolerance count as not strictly stable.
inline constexpr double kHurwitzTolerance = 1e-9;

// Relative singular-value threshold for rank decisions, and the width (in
// decades, each side) of the band in which a decision is refused.
inline constexpr double kRankThreshold = 1e-8;
inline constexpr double kRankBandDecades = 1.0;

Spectrum eigenvalues(const Matrix& a);

// Largest real part of the spectrum; -inf for an empty matrix.
double spectral_abscissa(const Matrix& a);

// max Re(lambda) < -max(margin, kHurwitzTolerance).
bool is_hurwitz(const Matrix& a, double margin = 0.0);

// Solves A^T P + P A = -Q for symmetric positive definite Q, A Hurwitz.
Matrix lyap_solve(const Matrix& a, const Matrix& q);

// Solves A X + X B = C through the vectorized (Kronecker) system. Throws a
// numerical error when the spectra of A and -B intersect.
Matrix sylvester_solve(const Matrix& a, const Matrix& b, const Matrix& c);

// e^{A h} by scaling and squaring with a Pade approximant.
Matrix expm(const Matrix& a, double h);

// Frequency response C (jw I - A)^{-1} B + D.
ComplexMatrix frequency_response(const StateSpace& sys, double omega);
double sigma_max(const ComplexMatrix& g);
double sigma_max(const Matrix& g);

// H-infinity norm by gamma bisection on the Hamiltonian imaginary-axis test.
double hinf_norm(const StateSpace& sys, double tol = 1e-6);

// Returns F such that spec(A - B F) equals `desired` (a conjugate-closed list).
Matrix place_poles(const Matrix& a, const Matrix& b,
                   const std::vector<Complex>& desired);

// Monic characteristic polynomial coefficients [c0, c1, ..., c_{n-1}] of the
// polynomial prod (s - r_i) = s^n + c_{n-1} s^{n-1} + ... + c0.
std::vector<double> poly_from_roots(const std::vector<Complex>& roots);

bool is_conjugate_closed(const std::vector<Complex>& values, double tol = 1e-9);

// Multiset comparison of two spectra with absolute tolerance `tol`.
bool spectra_match(const Spectrum& a, const Spectrum& b, double tol);
bool spectra_match(const Spectrum& a, const std::vector<Complex>& b,
                   double tol);

// Rank-revealing helpers. `test` names the decision in the error raised when
// a singular value lands inside the indeterminate band.
Eigen::Index numeric_rank(const Matrix& m, std::string_view test);
Eigen::Index numeric_rank(const ComplexMatrix& m, std::string_view test);
// Orthonormal basis of the column space.
Matrix orth(const Matrix& m, std::string_view test);
// Orthonormal basis of the null space (columns).
Matrix null_space(const Matrix& m, std::string_view test);

// Orthonormal basis of the controllable subspace of (A, B).
Matrix controllable_subspace(const Matrix& a, const Matrix& b);

}  // namespace synctool::numlin
