#include "resatlas/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "resatlas/errors.hpp"

namespace resatlas {

void require_finite(const ComplexMatrix& a, const char* what) {
    if (!a.allFinite())
        throw NonFiniteError(std::string(what) + ": matrix has NaN/Inf entries");
}

bool is_hermitian(const ComplexMatrix& a, double tol) {
    if (a.rows() != a.cols()) return false;
    const double defect = (a - a.adjoint()).norm();
    const double scale = std::max(a.norm(), 1e-300);
    return defect <= tol * scale;
}

void sort_by_magnitude(ComplexVector& v) {
    std::vector<Complex> tmp(v.data(), v.data() + v.size());
    std::stable_sort(tmp.begin(), tmp.end(), [](Complex a, Complex b) {
        const double ma = std::abs(a), mb = std::abs(b);
        if (ma != mb) return ma > mb;
        return std::arg(a) < std::arg(b);
    });
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = tmp[static_cast<std::size_t>(i)];
}

HermitianEigen hermitian_eigen(const ComplexMatrix& a) {
    if (a.rows() != a.cols())
        throw DimensionMismatchError("hermitian_eigen: matrix not square");
    require_finite(a, "hermitian_eigen");
    if (!is_hermitian(a)) {
        const double defect = (a - a.adjoint()).norm();
        throw NotHermitianError("hermitian_eigen: symmetry defect " + std::to_string(defect) +
                                " exceeds 1e-12 * ||A||");
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(a);
    if (es.info() != Eigen::Success)
        throw NoConvergenceError("hermitian_eigen: tridiagonal QL iteration failed to converge");
    return {es.eigenvalues(), es.eigenvectors()};
}

EigenResult general_eigen(const ComplexMatrix& a) {
    if (a.rows() != a.cols())
        throw DimensionMismatchError("general_eigen: matrix not square");
    require_finite(a, "general_eigen");

    Eigen::ComplexEigenSolver<ComplexMatrix> ces(a, /*computeEigenvectors=*/true);
    if (ces.info() != Eigen::Success)
        throw NoConvergenceError(
            "general_eigen: Schur QR iteration failed to converge within the 30*n sweep budget");

    EigenResult out;
    out.values = ces.eigenvalues();
    sort_by_magnitude(out.values);

    const double a_norm = a.norm();
    if (a_norm > 0.0) {
        // Residuals against the unsorted pairs; the bound is order-independent.
        double worst = 0.0;
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            const ComplexVector v = ces.eigenvectors().col(j);
            const double r = (a * v - ces.eigenvalues()[j] * v).norm() / v.norm();
            worst = std::max(worst, r);
        }
        out.residual_bound = worst / a_norm;
    }
    return out;
}

RealVector singular_values(const ComplexMatrix& a) {
    require_finite(a, "singular_values");
    if (std::min(a.rows(), a.cols()) >= 32) {
        Eigen::BDCSVD<ComplexMatrix> svd(a);
        return svd.singularValues();
    }
    Eigen::JacobiSVD<ComplexMatrix> svd(a);
    return svd.singularValues();
}

double trace_norm(const ComplexMatrix& a) { return singular_values(a).sum(); }

double spectrum_distance(const RealVector& eigs, Complex z) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < eigs.size(); ++i)
        best = std::min(best, std::abs(Complex(eigs[i], 0.0) - z));
    return best;
}

ShiftedSolve solve_shifted(const ComplexMatrix& h, Complex z, const ComplexMatrix& b) {
    const HermitianEigen eig = hermitian_eigen(h);
    if (b.rows() != h.rows())
        throw DimensionMismatchError("solve_shifted: rhs row count mismatch");
    require_finite(b, "solve_shifted rhs");

    const double h_norm = eig.values.size()
                              ? std::max(std::abs(eig.values[0]), std::abs(eig.values[eig.values.size() - 1]))
                              : 0.0;
    double min_sep = std::numeric_limits<double>::infinity();
    double max_sep = 0.0;
    for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
        const double d = std::abs(Complex(eig.values[i], 0.0) - z);
        min_sep = std::min(min_sep, d);
        max_sep = std::max(max_sep, d);
    }
    if (min_sep <= kSpectrumGuard * h_norm)
        throw SpectrumHitError(z, min_sep, kSpectrumGuard * h_norm);

    ComplexVector g(eig.values.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = 1.0 / (Complex(eig.values[i], 0.0) - z);

    ShiftedSolve out;
    out.x = eig.vectors * g.asDiagonal() * (eig.vectors.adjoint() * b);
    out.condition = max_sep / min_sep;
    return out;
}

}  // namespace resatlas
