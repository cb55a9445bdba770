#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "resatlas/assignment.hpp"
#include "resatlas/errors.hpp"
#include "resatlas/resonance.hpp"
#include "resatlas/rng.hpp"
#include "resatlas/scan.hpp"

using namespace resatlas;

namespace {

ResonanceProblem identity_perturbation(const RealVector& diag) {
    ResonanceProblem p;
    const int n = static_cast<int>(diag.size());
    p.h0 = ComplexMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i) p.h0(i, i) = diag[i];
    p.f = ComplexMatrix::Identity(n, n);
    p.j = ComplexMatrix::Identity(n, n);
    return p;
}

// h0 = diag(1,-1), F = row (1,1)/sqrt(2), J = [1]; sigma(z) = -z/(z^2-1)
ResonanceProblem rank_one_model() {
    ResonanceProblem p;
    p.h0 = ComplexMatrix::Zero(2, 2);
    p.h0(0, 0) = 1.0;
    p.h0(1, 1) = -1.0;
    p.f = ComplexMatrix(1, 2);
    p.f(0, 0) = p.f(0, 1) = 1.0 / std::sqrt(2.0);
    p.j = ComplexMatrix::Identity(1, 1);
    return p;
}

ResonanceProblem random_problem(SplitMix64& rng, int n, int k) {
    EnsembleSpec spec;
    spec.kind = EnsembleKind::DenseGaussian;
    spec.n = n;
    spec.k = k;
    spec.seed = rng.next();
    spec.scale = 0.5 + rng.uniform01();
    return build_ensemble(spec);
}

Complex sample_off_spectrum(SplitMix64& rng, const TransferEvaluator& eval) {
    const RealVector& spec = eval.spectrum();
    const double lo = spec[0], hi = spec[spec.size() - 1];
    const double d = std::max(hi - lo, 1.0);
    for (;;) {
        const Complex z(rng.uniform(lo - 0.7 * d, hi + 0.7 * d), rng.uniform(-d, d));
        if (eval.spectrum_distance(z) >= 0.05 * d) return z;
    }
}

}  // namespace

TEST_CASE("transfer_at: diagonal resolvent at z = i") {
    RealVector diag(2);
    diag << 1.0, -1.0;
    const TransferSample s = transfer_at(identity_perturbation(diag), Complex(0, 1));
    CHECK(std::abs(s.m(0, 0) - Complex(0.5, 0.5)) < 1e-15);
    CHECK(std::abs(s.m(1, 1) - Complex(-0.5, 0.5)) < 1e-15);
    CHECK(s.zero_count == 0);
    REQUIRE(s.sigmas.size() == 2);
    // |sigma| ties broken by ascending argument: pi/4 before 3pi/4
    CHECK(std::abs(s.sigmas[0] - Complex(0.5, 0.5)) < 1e-15);
    CHECK(std::abs(s.sigmas[1] - Complex(-0.5, 0.5)) < 1e-15);
    CHECK(s.condition == doctest::Approx(1.0));
}

TEST_CASE("transfer_at: rank-one sigma-zero at z = 0 and SpectrumHit at z = 1") {
    const ResonanceProblem p = rank_one_model();
    const TransferSample s = transfer_at(p, Complex(0, 0));
    CHECK(s.zero_count == 1);
    CHECK(s.sigmas.size() == 0);
    CHECK(std::abs(s.m(0, 0)) < 1e-15);

    CHECK_THROWS_AS(transfer_at(p, Complex(1, 0)), SpectrumHitError);

    // closed form away from the zero
    SplitMix64 rng(5);
    const TransferEvaluator eval(p);
    for (int i = 0; i < 25; ++i) {
        const Complex z = sample_off_spectrum(rng, eval);
        const TransferSample t = eval.sample(z);
        REQUIRE(t.sigmas.size() == 1);
        CHECK(std::abs(t.sigmas[0] - oracle::rank_one_sigma(z)) < 1e-12);
    }
}

TEST_CASE("resonances_at: identity perturbation gives r_j = z - lambda_j") {
    RealVector diag(2);
    diag << 0.0, 2.0;
    const Complex z(0, 1);
    const ResonanceSet rs = resonances_at(transfer_at(identity_perturbation(diag), z));
    REQUIRE(rs.size() == 2);
    ComplexVector expected(2);
    expected << z - 0.0, z - 2.0;
    CHECK(matching_distance(rs.values, expected) < 1e-13);

    // the z = 0 rank-one sample has no resonances at all
    CHECK(resonances_at(transfer_at(rank_one_model(), Complex(0, 0))).size() == 0);
}

TEST_CASE("resonances obey Schwarz reflection for real problems") {
    SplitMix64 rng(13);
    EnsembleSpec spec{EnsembleKind::Jacobi, 6, 3, 0, 1.0};
    const ResonanceProblem p = build_ensemble(spec);
    const TransferEvaluator eval(p);
    for (int i = 0; i < 10; ++i) {
        const Complex z = sample_off_spectrum(rng, eval);
        const ResonanceSet a = resonances_at(eval.sample(z));
        const ResonanceSet b = resonances_at(eval.sample(std::conj(z)));
        CHECK(matching_distance(a.values, b.values.conjugate()) < 1e-10);
    }
}

TEST_CASE("shifted_transfer_at: s = 0 reduces to transfer_at, diagonal closed form") {
    RealVector diag(2);
    diag << 0.0, 2.0;
    const ResonanceProblem p = identity_perturbation(diag);
    const Complex z(0, 1);
    const TransferSample direct = transfer_at(p, z);
    const TransferSample shifted0 = shifted_transfer_at(p, 0.0, z);
    CHECK((direct.m - shifted0.m).norm() < 1e-15);

    const TransferSample s1 = shifted_transfer_at(p, 1.0, z);
    ComplexVector expected(2);
    expected << 1.0 / (Complex(1, 0) - z), 1.0 / (Complex(3, 0) - z);
    CHECK(matching_distance(s1.sigmas, expected) < 1e-13);
}

TEST_CASE("shifted transfer agrees with direct dense evaluation") {
    SplitMix64 rng(17);
    for (int trial = 0; trial < 6; ++trial) {
        const ResonanceProblem p = random_problem(rng, 8, 3);
        const TransferEvaluator eval(p);
        const Complex z = sample_off_spectrum(rng, eval);
        const double s = rng.uniform(-1.5, 1.5);

        // Independent route: assemble H_s and invert with a dense solve.
        const ComplexMatrix hs = p.h0 + s * p.coupling();
        const ComplexMatrix direct =
            p.f *
            (hs - z * ComplexMatrix::Identity(p.n(), p.n())).fullPivLu().solve(p.f.adjoint()) *
            p.j;
        const TransferSample fast = eval.shifted(s).sample(z);
        const EigenResult direct_eig = general_eigen(direct);
        CHECK(matching_distance(fast.sigmas, direct_eig.values) < 1e-9);
    }
}

TEST_CASE("shift identity: exact for identity perturbation, tight for random pairs") {
    RealVector diag(3);
    diag << -1.0, 0.5, 2.0;
    const ResonanceProblem p = identity_perturbation(diag);
    CHECK(shift_identity_residual(p, Complex(0.4, 0.9), 0.7) < 1e-12);
    CHECK(shift_identity_residual(p, Complex(-2.0, -0.3), -1.1) < 1e-12);

    // s = 0 tautology
    SplitMix64 rng(21);
    const ResonanceProblem q = random_problem(rng, 12, 4);
    const TransferEvaluator eval(q);
    const Complex z(0.3, 0.8);
    CHECK(shift_identity_residual(eval, eval, z, 0.0) < 1e-12);
    const TransferEvaluator shifted = eval.shifted(0.7);
    const double ms_norm = singular_values(shifted.transfer_matrix(z))[0];
    CHECK(shift_identity_residual(eval, shifted, z, 0.7) < 1e-8 * (1.0 + ms_norm));
}

TEST_CASE("shift identity raises CouplingCollision when s hits a resonance") {
    RealVector diag(2);
    diag << 1.0, -1.0;
    const ResonanceProblem p = identity_perturbation(diag);
    const Complex z(0.5, 0.0);  // between the eigenvalues, off spectrum
    // r_j = z - lambda_j = {-0.5, 1.5}; s = 1.5 collides
    CHECK_THROWS_AS(shift_identity_residual(p, z, 1.5), CouplingCollisionError);
}

TEST_CASE("herglotz_sum: frozen V=I example and trace equality at s = 0") {
    RealVector diag(2);
    diag << 1.0, -1.0;
    const ResonanceProblem p = identity_perturbation(diag);
    const HerglotzReport h = herglotz_sum(p, Complex(0, 1), 0.0);
    CHECK(std::abs(h.f_sum - Complex(0, 1)) < 1e-14);   // 1/(1-i) + 1/(-1-i) = i
    CHECK(std::abs(h.f_trace - Complex(0, 1)) < 1e-14);
    CHECK(h.f_sum.imag() > 0.0);
    CHECK(h.residual < 1e-14);
    CHECK(std::abs(h.f_trace) <= h.trace_norm_bound + 1e-14);
}

TEST_CASE("herglotz trace identity and trace-norm bound on random pairs") {
    SplitMix64 rng(25);
    for (int trial = 0; trial < 10; ++trial) {
        const ResonanceProblem p = random_problem(rng, 10, 4);
        const TransferEvaluator eval(p);
        const Complex z = sample_off_spectrum(rng, eval);
        const double s = rng.uniform(-1.0, 1.0);
        try {
            const HerglotzReport h = herglotz_sum(eval, eval.shifted(s), z, s);
            CHECK(h.residual <= 1e-8 * (1.0 + h.trace_norm_bound));
            CHECK(std::abs(h.f_trace) <= h.trace_norm_bound * (1.0 + 1e-12) + 1e-12);
        } catch (const CouplingCollisionError&) {
            // measure-zero; acceptable to skip the sample
        }
    }
}

TEST_CASE("shift covariance: resonances of (H0+sV, V) are r_j - s") {
    SplitMix64 rng(27);
    const ResonanceProblem p = random_problem(rng, 9, 3);
    const TransferEvaluator eval(p);
    const Complex z = sample_off_spectrum(rng, eval);
    const double s = 0.42;
    const ResonanceSet base = resonances_at(eval.sample(z));
    const ResonanceSet moved = resonances_at(eval.shifted(s).sample(z));
    ComplexVector expected = base.values;
    for (Eigen::Index i = 0; i < expected.size(); ++i) expected[i] -= s;
    CHECK(matching_distance(moved.values, expected) < 1e-8);
}

TEST_CASE("rank-one Herglotz positivity on the upper half-plane") {
    const ResonanceProblem p = rank_one_model();
    const TransferEvaluator eval(p);
    SplitMix64 rng(31);
    for (int i = 0; i < 100; ++i) {
        const Complex z(rng.uniform(-3.0, 3.0), rng.uniform(1e-3, 3.0));
        const ComplexMatrix m = eval.transfer_matrix(z);
        CHECK(m(0, 0).imag() > 0.0);
    }
}

TEST_CASE("weyl_report: nilpotent example, normal equality, random slack") {
    ComplexMatrix nil(2, 2);
    nil << 0.0, 1.0, 0.0, 0.0;
    const WeylReport w = weyl_report(nil, 1.0);
    CHECK(w.prefix_lambda_sums[0] == doctest::Approx(0.0));
    CHECK(w.prefix_lambda_sums[1] == doctest::Approx(0.0));
    CHECK(w.prefix_s_sums[0] == doctest::Approx(1.0));
    CHECK(w.prefix_s_sums[1] == doctest::Approx(1.0));
    CHECK(w.min_slack == doctest::Approx(1.0));

    SplitMix64 rng(35);
    ComplexMatrix d = ComplexMatrix::Zero(5, 5);
    for (int i = 0; i < 5; ++i)
        d(i, i) = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const ComplexMatrix u = oracle::random_unitary(rng, 5);
    const ComplexMatrix normal = u * d * u.adjoint();
    for (double p : {0.5, 1.0, 2.0}) CHECK(std::abs(weyl_report(normal, p).min_slack) < 1e-12);

    for (int trial = 0; trial < 6; ++trial) {
        const ComplexMatrix a = oracle::random_complex(rng, 10, 10);
        for (double p : {0.5, 1.0, 2.0}) {
            const WeylReport wr = weyl_report(a, p);
            CHECK(wr.min_slack >= -1e-12 * std::max(1.0, wr.prefix_s_sums.back()));
        }
    }
}

TEST_CASE("weyl_report and coupling_consistency reject bad arguments") {
    ComplexMatrix a = ComplexMatrix::Identity(2, 2);
    CHECK_THROWS_AS(weyl_report(a, 0.0), BadSpecError);
    CHECK_THROWS_AS(weyl_report(a, -1.0), BadSpecError);

    RealVector diag(2);
    diag << 1.0, -1.0;
    const ResonanceProblem p = identity_perturbation(diag);
    CHECK_THROWS_AS(coupling_consistency(p, Complex(0, 1), Complex(0, 0)), BadSpecError);
}

TEST_CASE("coupling_consistency: identity perturbation and closed-form rank-one") {
    RealVector diag(3);
    diag << -1.0, 0.3, 1.4;
    const ResonanceProblem p = identity_perturbation(diag);
    const Complex z(0.7, 0.6);
    const CouplingCheck cc = coupling_consistency(p, z, z - Complex(0.3, 0.0));
    CHECK(cc.eig_distance < 1e-12);
    CHECK(cc.sing_min < 1e-12);

    // rank-one: r(0.5i) = (z^2-1)/z = 2.5i; det(1 + r sigma(z)) = 0 exactly
    const ResonanceProblem q = rank_one_model();
    const Complex z2(0, 0.5);
    const Complex r = oracle::rank_one_r(z2);
    CHECK(std::abs(r - Complex(0, 2.5)) < 1e-15);
    CHECK(std::abs(1.0 + r * oracle::rank_one_sigma(z2)) < 1e-15);
    const CouplingCheck cc2 = coupling_consistency(q, z2, r);
    CHECK(cc2.eig_distance < 1e-10);
    CHECK(cc2.sing_min < 1e-10);

    // a non-resonant coupling keeps I + r M far from singular
    const CouplingCheck cc3 = coupling_consistency(q, z2, r + 1.0);
    CHECK(cc3.sing_min > 1e-3);
    CHECK(cc3.eig_distance > 1e-3);
}

TEST_CASE("every computed resonance passes coupling_consistency") {
    SplitMix64 rng(41);
    for (int trial = 0; trial < 6; ++trial) {
        const ResonanceProblem p = random_problem(rng, 8, 3);
        const TransferEvaluator eval(p);
        const Complex z = sample_off_spectrum(rng, eval);
        const ResonanceSet rs = resonances_at(eval.sample(z));
        for (Eigen::Index i = 0; i < rs.values.size(); ++i) {
            const CouplingCheck cc = coupling_consistency(eval, z, rs.values[i]);
            CHECK(cc.eig_distance <= 1e-7 * (1.0 + std::abs(z) + cc.perturbed_norm));
            CHECK(cc.sing_min <= 1e-7);
        }
    }
}

TEST_CASE("transfer family satisfies the mean-value property entrywise") {
    SplitMix64 rng(47);
    const ResonanceProblem p = random_problem(rng, 7, 3);
    const TransferEvaluator eval(p);
    for (int i = 0; i < 5; ++i) {
        const Complex z0 = sample_off_spectrum(rng, eval);
        const double rho = 0.5 * eval.spectrum_distance(z0);
        const ComplexMatrix m0 = eval.transfer_matrix(z0);
        for (int r = 0; r < p.k(); ++r)
            for (int c = 0; c < p.k(); ++c) {
                const double resid = mean_value_residual(
                    [&](Complex z) { return eval.transfer_matrix(z)(r, c); }, z0, rho, 64);
                CHECK(resid <= 1e-8 * std::max(1.0, m0.norm()));
            }
    }
}
