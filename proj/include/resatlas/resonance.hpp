#pragma once

#include <vector>

#include "resatlas/numerics.hpp"
#include "resatlas/problem.hpp"

namespace resatlas {

// Relative threshold below which an eigenvalue of M(z) counts as zero and
// contributes no resonance. Divergence classification deliberately lowers it.
inline constexpr double kDefaultZeroTol = 1e-10;

// Shift s counts as colliding with a resonance value below this distance.
inline constexpr double kCouplingCollisionTol = 1e-12;

// M(z) = F (H0 - z)^{-1} F^* J at one point, with its eigenvalue multiset
// split into retained (|sigma| >= zero_tol * ||M||) and numerically-zero parts.
struct TransferSample {
    Complex z;
    ComplexMatrix m;       // k x k
    ComplexVector sigmas;  // retained eigenvalues, decreasing magnitude
    int zero_count = 0;
    double condition = 1.0;  // max|lambda - z| / min|lambda - z| of the resolvent
    double zero_tol = kDefaultZeroTol;
    double norm2 = 0.0;          // ||M(z)||_2
    double sigma_min_raw = 0.0;  // min |sigma| over the full multiset, zeros included
    double sigma_max_raw = 0.0;

    Complex trace() const { return m.trace(); }
};

// r_j(z) = -1/sigma_j(z), aligned index-by-index with the source sigmas.
struct ResonanceSet {
    Complex z;
    ComplexVector values;

    int size() const { return static_cast<int>(values.size()); }
};

// f(z) = sum_j (s - r_j(z))^{-1} against its closed-form twin tr M_s(z),
// with the trace-norm bound that dominates |f| (Weyl inequality, p = 1).
struct HerglotzReport {
    Complex z;
    double s = 0.0;
    Complex f_sum;
    Complex f_trace;
    double residual = 0.0;          // |f_sum - f_trace|
    double trace_norm_bound = 0.0;  // ||M_s(z)||_1
};

// Prefix-sum comparison sum |lambda_j|^p <= sum s_j^p for n = 1..dim.
struct WeylReport {
    double p = 1.0;
    std::vector<double> prefix_lambda_sums;
    std::vector<double> prefix_s_sums;
    double min_slack = 0.0;  // min_n (s-sum - lambda-sum), >= -1e-12 * max(1, sum s^p)
};

struct CouplingCheck {
    double eig_distance = 0.0;    // min_w |w - z| over spec(H0 + r V)
    double sing_min = 0.0;        // smallest singular value of (I + r M(z)) / (1 + |r| ||M||)
    double perturbed_norm = 0.0;  // ||H0 + r V||_F, the natural scale for eig_distance
};

// Caches the eigendecomposition of H0 so M(z) costs O(k^2 n) per point.
// All methods are const and safe for concurrent use.
class TransferEvaluator {
public:
    explicit TransferEvaluator(const ResonanceProblem& p);

    // Evaluator for the pair (H0 + sV, V) with the same F and J.
    TransferEvaluator shifted(double s) const;

    const ResonanceProblem& problem() const { return problem_; }
    const RealVector& spectrum() const { return lambda_; }
    double spectrum_norm() const { return h0_norm_; }
    double spectrum_distance(Complex z) const;
    double spectrum_guard() const { return kSpectrumGuard * h0_norm_; }

    // M(z); throws SpectrumHitError inside the guard.
    ComplexMatrix transfer_matrix(Complex z) const;

    TransferSample sample(Complex z, double zero_tol = kDefaultZeroTol) const;

private:
    ResonanceProblem problem_;
    RealVector lambda_;  // ascending spectrum of H0
    ComplexMatrix w_;    // F U, so M(z) = W diag(1/(lambda - z)) W^* J
    double h0_norm_ = 0.0;
};

TransferSample transfer_at(const ResonanceProblem& p, Complex z,
                           double zero_tol = kDefaultZeroTol);

ResonanceSet resonances_at(const TransferSample& sample);

TransferSample shifted_transfer_at(const ResonanceProblem& p, double s, Complex z,
                                   double zero_tol = kDefaultZeroTol);

// Optimal-assignment distance between {(s - r_j(z))^{-1}} and the nonzero
// eigenvalues of M_s(z); both multisets are zero-padded to k. Contract:
// <= 1e-8 * (1 + ||M_s(z)||). Throws CouplingCollisionError when s is itself
// a resonance value at z.
double shift_identity_residual(const TransferEvaluator& base, const TransferEvaluator& shifted,
                               Complex z, double s);
double shift_identity_residual(const ResonanceProblem& p, Complex z, double s);

HerglotzReport herglotz_sum(const TransferEvaluator& base, const TransferEvaluator& shifted,
                            Complex z, double s);
HerglotzReport herglotz_sum(const ResonanceProblem& p, Complex z, double s);

WeylReport weyl_report(const ComplexMatrix& a, double p);

// Independent meaning-of-r oracle: z should be an eigenvalue of H0 + rV and
// I + r M(z) should be singular exactly when r is a resonance at z.
CouplingCheck coupling_consistency(const TransferEvaluator& eval, Complex z, Complex r);
CouplingCheck coupling_consistency(const ResonanceProblem& p, Complex z, Complex r);

}  // namespace resatlas
