#pragma once

#include <Eigen/Dense>
#include <complex>

namespace resatlas {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// Relative Hermiticity tolerance used throughout: ||A - A^*|| <= tol * ||A||.
inline constexpr double kHermitianTol = 1e-12;
// z counts as "in spectrum" below this relative separation; downstream
// operations refuse rather than return garbage near spec(H0).
inline constexpr double kSpectrumGuard = 1e-13;

struct HermitianEigen {
    RealVector values;      // ascending
    ComplexMatrix vectors;  // orthonormal columns, A = U diag(values) U^*
};

// Eigenvalues in decreasing magnitude, ties broken by ascending argument
// in (-pi, pi]. residual_bound is an upper estimate of
// max_j ||A v_j - lambda_j v_j|| / ||A||_F over the computed eigenpairs.
struct EigenResult {
    ComplexVector values;
    double residual_bound = 0.0;
};

struct ShiftedSolve {
    ComplexMatrix x;          // (H - z) x = b
    double condition = 1.0;   // max_j |lambda_j - z| / min_j |lambda_j - z|
};

// Throws NonFiniteError when any entry is NaN/Inf.
void require_finite(const ComplexMatrix& a, const char* what);

// ||A - A^*||_F <= tol * max(||A||_F, eps)
bool is_hermitian(const ComplexMatrix& a, double tol = kHermitianTol);

// Sorts in place: decreasing |v|, ties by ascending arg in (-pi, pi].
void sort_by_magnitude(ComplexVector& v);

// Hermitian eigendecomposition; eigenvalues ascending, basis orthonormal.
// Throws NotHermitianError / NonFiniteError / NoConvergenceError.
HermitianEigen hermitian_eigen(const ComplexMatrix& a);

// Dense non-symmetric eigenvalues of a square matrix, with the full
// algebraic multiset (Schur-based).
EigenResult general_eigen(const ComplexMatrix& a);

// s-numbers: singular values in descending order; their sum is ||A||_1.
RealVector singular_values(const ComplexMatrix& a);

double trace_norm(const ComplexMatrix& a);

// min_j |lambda_j - z| for a real spectrum.
double spectrum_distance(const RealVector& eigs, Complex z);

// Resolvent application X = (H - z)^{-1} B through the eigendecomposition
// of Hermitian H. Throws SpectrumHitError when z is numerically in spec(H).
ShiftedSolve solve_shifted(const ComplexMatrix& h, Complex z, const ComplexMatrix& b);

}  // namespace resatlas
