#pragma once

// Test-only independent oracles. These deliberately avoid the library's
// solver paths (Eigen decompositions) so every identity check has two routes:
// determinants go through a hand-rolled LU, Hermitian eigenvalues through
// sign-change bisection on det(A - xI), assignments through brute force.

#include <algorithm>
#include <complex>
#include <numeric>
#include <vector>

#include "resatlas/numerics.hpp"
#include "resatlas/rng.hpp"

namespace oracle {

using resatlas::Complex;
using resatlas::ComplexMatrix;

inline Complex det_lu(ComplexMatrix a) {
    const Eigen::Index n = a.rows();
    Complex det = 1.0;
    for (Eigen::Index col = 0; col < n; ++col) {
        Eigen::Index pivot = col;
        for (Eigen::Index r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        if (a(pivot, col) == Complex(0.0, 0.0)) return 0.0;
        if (pivot != col) {
            a.row(pivot).swap(a.row(col));
            det = -det;
        }
        det *= a(col, col);
        for (Eigen::Index r = col + 1; r < n; ++r) {
            const Complex factor = a(r, col) / a(col, col);
            a.row(r).tail(n - col) -= factor * a.row(col).tail(n - col);
        }
    }
    return det;
}

// Real roots of det(A - xI) for Hermitian A: Gershgorin bracket, fixed grid
// scan for sign changes, bisection. Requires all eigenvalues simple at the
// scan resolution (callers use seeds checked to satisfy that).
inline std::vector<double> hermitian_eigenvalues_by_bisection(const ComplexMatrix& a,
                                                              int grid = 1 << 14) {
    const Eigen::Index n = a.rows();
    double bound = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
        double row = 0.0;
        for (Eigen::Index c = 0; c < n; ++c) row += std::abs(a(r, c));
        bound = std::max(bound, row);
    }
    bound += 1.0;

    auto charpoly = [&](double x) {
        return det_lu(a - x * ComplexMatrix::Identity(n, n)).real();
    };

    std::vector<double> roots;
    double prev_x = -bound, prev_v = charpoly(prev_x);
    for (int i = 1; i <= grid; ++i) {
        const double x = -bound + 2.0 * bound * i / grid;
        const double v = charpoly(x);
        if (prev_v == 0.0) roots.push_back(prev_x);
        if ((prev_v < 0.0 && v > 0.0) || (prev_v > 0.0 && v < 0.0)) {
            double lo = prev_x, hi = x, flo = prev_v;
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = charpoly(mid);
                if ((flo < 0.0) == (fm < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push_back(0.5 * (lo + hi));
        }
        prev_x = x;
        prev_v = v;
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

// Minimum-total-cost assignment by exhaustive permutation search (n <= 9).
inline std::vector<int> brute_force_assignment(const Eigen::MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    std::vector<int> perm(static_cast<std::size_t>(n)), best;
    std::iota(perm.begin(), perm.end(), 0);
    double best_cost = std::numeric_limits<double>::infinity();
    do {
        double c = 0.0;
        for (int i = 0; i < n; ++i) c += cost(i, perm[static_cast<std::size_t>(i)]);
        if (c < best_cost) {
            best_cost = c;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// Rank-one closed forms for h0 = diag(1,-1), v = (1,1)/sqrt(2), J = [1]:
//   sigma(z) = <v, (h0 - z)^{-1} v> = -z / (z^2 - 1),   r(z) = (z^2 - 1) / z
inline Complex rank_one_sigma(Complex z) { return -z / (z * z - 1.0); }
inline Complex rank_one_r(Complex z) { return (z * z - 1.0) / z; }

inline ComplexMatrix random_complex(resatlas::SplitMix64& rng, int rows, int cols) {
    ComplexMatrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = Complex(rng.normal(), rng.normal());
    return m;
}

inline ComplexMatrix random_hermitian(resatlas::SplitMix64& rng, int n) {
    const ComplexMatrix g = random_complex(rng, n, n);
    return 0.5 * (g + g.adjoint());
}

// Unitary by Gram-Schmidt on Gaussian columns.
inline ComplexMatrix random_unitary(resatlas::SplitMix64& rng, int n) {
    ComplexMatrix q = random_complex(rng, n, n);
    for (int c = 0; c < n; ++c) {
        for (int prev = 0; prev < c; ++prev) q.col(c) -= q.col(prev).dot(q.col(c)) * q.col(prev);
        q.col(c) /= q.col(c).norm();
    }
    return q;
}

}  // namespace oracle
