#include "resatlas/problem.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "resatlas/errors.hpp"
#include "resatlas/rng.hpp"

namespace resatlas {

using nlohmann::json;

const char* ensemble_kind_name(EnsembleKind kind) {
    switch (kind) {
        case EnsembleKind::Diagonal: return "diagonal";
        case EnsembleKind::Jacobi: return "jacobi";
        case EnsembleKind::DenseGaussian: return "dense-gaussian";
        case EnsembleKind::RankK: return "rank-k-perturbation";
    }
    return "?";
}

EnsembleKind parse_ensemble_kind(const std::string& name) {
    if (name == "diagonal") return EnsembleKind::Diagonal;
    if (name == "jacobi") return EnsembleKind::Jacobi;
    if (name == "dense-gaussian") return EnsembleKind::DenseGaussian;
    if (name == "rank-k-perturbation" || name == "rank-k") return EnsembleKind::RankK;
    throw BadSpecError("unknown ensemble kind '" + name + "'");
}

namespace {

double hermitian_defect(const ComplexMatrix& a) {
    const double scale = std::max(a.norm(), 1e-300);
    return (a - a.adjoint()).norm() / scale;
}

int count_nonfinite(const ComplexMatrix& a) {
    int bad = 0;
    for (Eigen::Index c = 0; c < a.cols(); ++c)
        for (Eigen::Index r = 0; r < a.rows(); ++r)
            if (!std::isfinite(a(r, c).real()) || !std::isfinite(a(r, c).imag())) ++bad;
    return bad;
}

}  // namespace

ValidationReport validate(const ResonanceProblem& p) {
    if (p.h0.rows() != p.h0.cols())
        throw DimensionMismatchError("validate: h0 is not square");
    if (p.j.rows() != p.j.cols())
        throw DimensionMismatchError("validate: j is not square");
    if (p.f.cols() != p.h0.rows())
        throw DimensionMismatchError("validate: f has " + std::to_string(p.f.cols()) +
                                     " columns, expected n = " + std::to_string(p.h0.rows()));
    if (p.f.rows() != p.j.rows())
        throw DimensionMismatchError("validate: f has " + std::to_string(p.f.rows()) +
                                     " rows, expected k = " + std::to_string(p.j.rows()));
    if (p.n() < 1 || p.k() < 1)
        throw DimensionMismatchError("validate: n and k must be >= 1");

    ValidationReport rep;
    auto add = [&rep](const std::string& name, double defect, double threshold) {
        rep.checks.push_back({name, defect <= threshold, defect, threshold});
    };

    add("h0 finite", count_nonfinite(p.h0), 0.0);
    add("f finite", count_nonfinite(p.f), 0.0);
    add("j finite", count_nonfinite(p.j), 0.0);
    add("h0 Hermitian", hermitian_defect(p.h0), kHermitianTol);
    add("j Hermitian", hermitian_defect(p.j), kHermitianTol);
    if (rep.all_pass()) {
        add("V = F*JF Hermitian", hermitian_defect(p.coupling()), kHermitianTol);
    }
    return rep;
}

ResonanceProblem build_ensemble(const EnsembleSpec& spec) {
    if (spec.n < 1) throw BadSpecError("ensemble: n must be >= 1");
    if (spec.k < 1) throw BadSpecError("ensemble: k must be >= 1");
    if (spec.scale <= 0.0) throw BadSpecError("ensemble: scale must be positive");
    const bool structured = spec.kind != EnsembleKind::DenseGaussian;
    if (structured && spec.k > spec.n)
        throw BadSpecError("ensemble: k must not exceed n for this kind");

    SplitMix64 rng(spec.seed);
    const int n = spec.n, k = spec.k;
    ResonanceProblem p;

    auto truncated_identity = [&] {
        p.f = ComplexMatrix::Zero(k, n);
        for (int i = 0; i < k; ++i) p.f(i, i) = 1.0;
        p.j = ComplexMatrix::Identity(k, k);
    };

    switch (spec.kind) {
        case EnsembleKind::Diagonal: {
            p.h0 = ComplexMatrix::Zero(n, n);
            for (int i = 0; i < n; ++i) p.h0(i, i) = rng.uniform(-spec.scale, spec.scale);
            truncated_identity();
            break;
        }
        case EnsembleKind::Jacobi: {
            // Discrete Dirichlet Laplacian stencil: 2*scale on, -scale off diagonal.
            p.h0 = ComplexMatrix::Zero(n, n);
            for (int i = 0; i < n; ++i) {
                p.h0(i, i) = 2.0 * spec.scale;
                if (i + 1 < n) {
                    p.h0(i, i + 1) = -spec.scale;
                    p.h0(i + 1, i) = -spec.scale;
                }
            }
            truncated_identity();
            break;
        }
        case EnsembleKind::DenseGaussian: {
            ComplexMatrix g(n, n);
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) g(r, c) = Complex(rng.normal(), rng.normal());
            p.h0 = 0.5 * spec.scale * (g + g.adjoint());
            p.f = ComplexMatrix(k, n);
            for (int r = 0; r < k; ++r)
                for (int c = 0; c < n; ++c) p.f(r, c) = Complex(rng.normal(), rng.normal());
            ComplexMatrix b(k, k);
            for (int r = 0; r < k; ++r)
                for (int c = 0; c < k; ++c) b(r, c) = Complex(rng.normal(), rng.normal());
            p.j = 0.5 * (b + b.adjoint());
            break;
        }
        case EnsembleKind::RankK: {
            p.h0 = ComplexMatrix::Zero(n, n);
            for (int i = 0; i < n; ++i) p.h0(i, i) = rng.uniform(-spec.scale, spec.scale);
            // Orthonormal rows by modified Gram-Schmidt on Gaussian rows.
            p.f = ComplexMatrix(k, n);
            for (int r = 0; r < k; ++r)
                for (int c = 0; c < n; ++c) p.f(r, c) = Complex(rng.normal(), rng.normal());
            for (int r = 0; r < k; ++r) {
                for (int prev = 0; prev < r; ++prev) {
                    const Complex proj = p.f.row(prev).dot(p.f.row(r));
                    p.f.row(r) -= proj * p.f.row(prev);
                }
                p.f.row(r) /= p.f.row(r).norm();
            }
            p.j = ComplexMatrix::Identity(k, k);
            break;
        }
    }
    return p;
}

namespace {

json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

Complex json_to_complex(const json& v, const std::string& field) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw SchemaError(field + ": expected a [re, im] pair");
    return {v[0].get<double>(), v[1].get<double>()};
}

ComplexMatrix parse_matrix(const json& v, int rows, int cols, const std::string& field) {
    if (!v.is_array() || static_cast<int>(v.size()) != rows)
        throw SchemaError(field + ": expected " + std::to_string(rows) + " rows");
    ComplexMatrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const json& row = v[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<int>(row.size()) != cols)
            throw SchemaError(field + ": row " + std::to_string(r) + " must have " +
                              std::to_string(cols) + " entries");
        for (int c = 0; c < cols; ++c)
            m(r, c) = json_to_complex(row[static_cast<std::size_t>(c)],
                                      field + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
    return m;
}

json matrix_to_json(const ComplexMatrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

bool is_real_diagonal(const ComplexMatrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (m(r, c).imag() != 0.0) return false;
            if (r != c && m(r, c).real() != 0.0) return false;
        }
    return true;
}

void require_hermitian_field(const ComplexMatrix& m, const std::string& field) {
    const double defect = hermitian_defect(m);
    if (defect > kHermitianTol)
        throw NotHermitianError(field + ": Hermiticity defect " + std::to_string(defect) +
                                " exceeds 1e-12 (relative)");
}

}  // namespace

ResonanceProblem load_problem(const std::string& bytes) {
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what());  // carries the byte offset
    }
    if (!doc.is_object()) throw SchemaError("top level: expected a JSON object");

    static const char* allowed[] = {"n", "k", "h0", "f", "j"};
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        bool known = false;
        for (const char* key : allowed) known = known || it.key() == key;
        if (!known) throw SchemaError("unknown field '" + it.key() + "'");
    }
    for (const char* key : allowed)
        if (!doc.contains(key)) throw SchemaError(std::string("missing field '") + key + "'");

    if (!doc["n"].is_number_integer() || doc["n"].get<int>() < 1)
        throw SchemaError("n: expected a positive integer");
    if (!doc["k"].is_number_integer() || doc["k"].get<int>() < 1)
        throw SchemaError("k: expected a positive integer");
    const int n = doc["n"].get<int>();
    const int k = doc["k"].get<int>();

    ResonanceProblem p;
    const json& h0 = doc["h0"];
    if (!h0.is_array() || static_cast<int>(h0.size()) != n)
        throw SchemaError("h0: expected an array of length n");
    bool flat = true;
    for (const auto& v : h0) flat = flat && v.is_number();
    if (flat) {
        p.h0 = ComplexMatrix::Zero(n, n);
        for (int i = 0; i < n; ++i) p.h0(i, i) = h0[static_cast<std::size_t>(i)].get<double>();
    } else {
        p.h0 = parse_matrix(h0, n, n, "h0");
    }
    p.f = parse_matrix(doc["f"], k, n, "f");
    p.j = parse_matrix(doc["j"], k, k, "j");

    if (count_nonfinite(p.h0) || count_nonfinite(p.f) || count_nonfinite(p.j))
        throw SchemaError("matrix entries must be finite");
    require_hermitian_field(p.h0, "h0");
    require_hermitian_field(p.j, "j");
    return p;
}

ResonanceProblem load_problem_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open problem file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_problem(ss.str());
}

std::string serialize(const ResonanceProblem& p) {
    json doc;
    doc["n"] = p.n();
    doc["k"] = p.k();
    if (is_real_diagonal(p.h0)) {
        json diag = json::array();
        for (int i = 0; i < p.n(); ++i) diag.push_back(p.h0(i, i).real());
        doc["h0"] = std::move(diag);
    } else {
        doc["h0"] = matrix_to_json(p.h0);
    }
    doc["f"] = matrix_to_json(p.f);
    doc["j"] = matrix_to_json(p.j);
    return doc.dump(1) + "\n";
}

}  // namespace resatlas
