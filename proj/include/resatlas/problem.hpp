#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "resatlas/numerics.hpp"

namespace resatlas {

// The pair (H0, F, J). The perturbation is always the derived V = F^* J F,
// so both h0 and j must be Hermitian; F is an arbitrary k x n factor.
struct ResonanceProblem {
    ComplexMatrix h0;  // n x n Hermitian
    ComplexMatrix f;   // k x n
    ComplexMatrix j;   // k x k Hermitian

    int n() const { return static_cast<int>(h0.rows()); }
    int k() const { return static_cast<int>(f.rows()); }

    // V = F^* J F, Hermitian n x n by construction.
    ComplexMatrix coupling() const { return f.adjoint() * j * f; }

    bool operator==(const ResonanceProblem& o) const {
        return h0 == o.h0 && f == o.f && j == o.j;
    }
};

enum class EnsembleKind { Diagonal, Jacobi, DenseGaussian, RankK };

const char* ensemble_kind_name(EnsembleKind kind);
EnsembleKind parse_ensemble_kind(const std::string& name);  // BadSpecError

struct EnsembleSpec {
    EnsembleKind kind = EnsembleKind::Diagonal;
    int n = 1;
    int k = 1;
    std::uint64_t seed = 0;
    double scale = 1.0;
};

struct ValidationCheck {
    std::string name;
    bool pass = false;
    double defect = 0.0;     // measured
    double threshold = 0.0;  // allowed
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

// Per-invariant pass/fail with measured defects. Throws DimensionMismatchError
// when the shapes are inconsistent (no meaningful report exists then).
ValidationReport validate(const ResonanceProblem& p);

// Deterministic seeded generation; validate() passes on every output.
//   diagonal:       h0 = diag(uniform[-scale, scale]), F = leading k rows of I, J = I
//   jacobi:         h0 tridiagonal (2*scale on, -scale off diagonal), F, J as above
//   dense-gaussian: h0 = scale * (G + G^*)/2, F complex Gaussian, J = (B + B^*)/2
//   rank-k:         h0 = diag(uniform[-scale, scale]), F with orthonormal rows, J = I
ResonanceProblem build_ensemble(const EnsembleSpec& spec);

// JSON document: {n, k, h0, f, j}; complex entries as [re, im]; a real
// diagonal h0 may be given (and is emitted) as a flat real array of length n.
// Unknown fields are rejected. load(serialize(p)) == p exactly.
ResonanceProblem load_problem(const std::string& bytes);
ResonanceProblem load_problem_file(const std::string& path);
std::string serialize(const ResonanceProblem& p);

}  // namespace resatlas
