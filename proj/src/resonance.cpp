#include "resatlas/resonance.hpp"

#include <algorithm>
#include <cmath>

#include "resatlas/assignment.hpp"
#include "resatlas/errors.hpp"

namespace resatlas {

TransferEvaluator::TransferEvaluator(const ResonanceProblem& p) : problem_(p) {
    const ValidationReport rep = validate(p);  // throws on dimension mismatch
    for (const auto& c : rep.checks) {
        if (c.pass) continue;
        if (c.name.find("Hermitian") != std::string::npos)
            throw NotHermitianError("problem: " + c.name + " fails, defect " +
                                    std::to_string(c.defect));
        throw NonFiniteError("problem: " + c.name + " fails");
    }

    const HermitianEigen eig = hermitian_eigen(p.h0);
    lambda_ = eig.values;
    w_ = p.f * eig.vectors;
    h0_norm_ = lambda_.size() ? std::max(std::abs(lambda_[0]), std::abs(lambda_[lambda_.size() - 1]))
                              : 0.0;
}

TransferEvaluator TransferEvaluator::shifted(double s) const {
    if (s == 0.0) return *this;
    ResonanceProblem q = problem_;
    q.h0 = problem_.h0 + s * problem_.coupling();
    // Symmetrize away the rounding of the product; s V is Hermitian exactly.
    q.h0 = 0.5 * (q.h0 + q.h0.adjoint()).eval();
    return TransferEvaluator(q);
}

double TransferEvaluator::spectrum_distance(Complex z) const {
    return resatlas::spectrum_distance(lambda_, z);
}

ComplexMatrix TransferEvaluator::transfer_matrix(Complex z) const {
    const double sep = spectrum_distance(z);
    if (sep <= spectrum_guard()) throw SpectrumHitError(z, sep, spectrum_guard());
    ComplexVector g(lambda_.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = 1.0 / (Complex(lambda_[i], 0.0) - z);
    return w_ * g.asDiagonal() * w_.adjoint() * problem_.j;
}

TransferSample TransferEvaluator::sample(Complex z, double zero_tol) const {
    const double sep = spectrum_distance(z);
    if (sep <= spectrum_guard()) throw SpectrumHitError(z, sep, spectrum_guard());

    TransferSample out;
    out.z = z;
    out.zero_tol = zero_tol;
    out.m = transfer_matrix(z);

    double max_sep = 0.0;
    for (Eigen::Index i = 0; i < lambda_.size(); ++i)
        max_sep = std::max(max_sep, std::abs(Complex(lambda_[i], 0.0) - z));
    out.condition = max_sep / sep;

    const RealVector sv = singular_values(out.m);
    out.norm2 = sv.size() ? sv[0] : 0.0;

    const EigenResult eig = general_eigen(out.m);
    const int k = problem_.k();
    if (eig.values.size()) {
        out.sigma_max_raw = std::abs(eig.values[0]);
        out.sigma_min_raw = std::abs(eig.values[eig.values.size() - 1]);
    }
    if (out.norm2 == 0.0) {
        out.sigmas = ComplexVector(0);
        out.zero_count = k;
        return out;
    }
    const double threshold = zero_tol * out.norm2;
    std::vector<Complex> retained;
    retained.reserve(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < eig.values.size(); ++i)
        if (std::abs(eig.values[i]) >= threshold) retained.push_back(eig.values[i]);
    out.sigmas = Eigen::Map<ComplexVector>(retained.data(), static_cast<Eigen::Index>(retained.size()));
    out.zero_count = k - static_cast<int>(retained.size());
    return out;
}

TransferSample transfer_at(const ResonanceProblem& p, Complex z, double zero_tol) {
    return TransferEvaluator(p).sample(z, zero_tol);
}

ResonanceSet resonances_at(const TransferSample& sample) {
    ResonanceSet out;
    out.z = sample.z;
    out.values = ComplexVector(sample.sigmas.size());
    for (Eigen::Index i = 0; i < sample.sigmas.size(); ++i) out.values[i] = -1.0 / sample.sigmas[i];
    return out;
}

TransferSample shifted_transfer_at(const ResonanceProblem& p, double s, Complex z, double zero_tol) {
    return TransferEvaluator(p).shifted(s).sample(z, zero_tol);
}

namespace {

// (s - r_j)^{-1} over retained branches; throws when s collides with some r_j.
ComplexVector shifted_branch_values(const ResonanceSet& rs, double s) {
    ComplexVector out(rs.values.size());
    for (Eigen::Index i = 0; i < rs.values.size(); ++i) {
        const Complex d = Complex(s, 0.0) - rs.values[i];
        if (std::abs(d) < kCouplingCollisionTol)
            throw CouplingCollisionError("s = " + std::to_string(s) +
                                         " collides with a resonance value; perturb s");
        out[i] = 1.0 / d;
    }
    return out;
}

}  // namespace

double shift_identity_residual(const TransferEvaluator& base, const TransferEvaluator& shifted,
                               Complex z, double s) {
    const TransferSample ms = base.sample(z);
    const ResonanceSet rs = resonances_at(ms);
    const ComplexVector predicted = shifted_branch_values(rs, s);
    const TransferSample actual = shifted.sample(z);
    return matching_distance(predicted, actual.sigmas);
}

double shift_identity_residual(const ResonanceProblem& p, Complex z, double s) {
    const TransferEvaluator base(p);
    return shift_identity_residual(base, base.shifted(s), z, s);
}

HerglotzReport herglotz_sum(const TransferEvaluator& base, const TransferEvaluator& shifted,
                            Complex z, double s) {
    HerglotzReport rep;
    rep.z = z;
    rep.s = s;

    const TransferSample ms = base.sample(z);
    const ComplexVector terms = shifted_branch_values(resonances_at(ms), s);
    rep.f_sum = terms.sum();

    const TransferSample shifted_sample = shifted.sample(z);
    rep.f_trace = shifted_sample.trace();
    rep.trace_norm_bound = trace_norm(shifted_sample.m);
    rep.residual = std::abs(rep.f_sum - rep.f_trace);
    return rep;
}

HerglotzReport herglotz_sum(const ResonanceProblem& p, Complex z, double s) {
    const TransferEvaluator base(p);
    return herglotz_sum(base, base.shifted(s), z, s);
}

WeylReport weyl_report(const ComplexMatrix& a, double p) {
    if (p <= 0.0) throw BadSpecError("weyl_report: p must be positive");
    require_finite(a, "weyl_report");

    const EigenResult eig = general_eigen(a);  // decreasing magnitude
    const RealVector sv = singular_values(a);  // decreasing

    WeylReport rep;
    rep.p = p;
    const Eigen::Index n = eig.values.size();
    rep.prefix_lambda_sums.reserve(static_cast<std::size_t>(n));
    rep.prefix_s_sums.reserve(static_cast<std::size_t>(n));
    double lam = 0.0, sig = 0.0;
    double min_slack = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
        lam += std::pow(std::abs(eig.values[i]), p);
        sig += std::pow(sv[i], p);
        rep.prefix_lambda_sums.push_back(lam);
        rep.prefix_s_sums.push_back(sig);
        min_slack = std::min(min_slack, sig - lam);
    }
    rep.min_slack = n ? min_slack : 0.0;
    return rep;
}

CouplingCheck coupling_consistency(const TransferEvaluator& eval, Complex z, Complex r) {
    if (r == Complex(0.0, 0.0))
        throw BadSpecError("coupling_consistency: r must be nonzero");
    const ComplexMatrix m = eval.transfer_matrix(z);  // guards the spectrum

    CouplingCheck out;
    const ComplexMatrix perturbed = eval.problem().h0 + r * eval.problem().coupling();
    out.perturbed_norm = perturbed.norm();
    const EigenResult eig = general_eigen(perturbed);
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < eig.values.size(); ++i)
        best = std::min(best, std::abs(eig.values[i] - z));
    out.eig_distance = best;

    const int k = eval.problem().k();
    const ComplexMatrix pencil = ComplexMatrix::Identity(k, k) + r * m;
    const RealVector sv = singular_values(pencil);
    const double scale = 1.0 + std::abs(r) * singular_values(m)[0];
    out.sing_min = sv[sv.size() - 1] / scale;
    return out;
}

CouplingCheck coupling_consistency(const ResonanceProblem& p, Complex z, Complex r) {
    return coupling_consistency(TransferEvaluator(p), z, r);
}

}  // namespace resatlas
