#pragma once

#include <complex>
#include <sstream>
#include <stdexcept>
#include <string>

namespace resatlas {

// Base class for all resatlas errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Matrix contains NaN or Inf entries.
class NonFiniteError : public Error {
public:
    using Error::Error;
};

// Hermiticity defect above tolerance.
class NotHermitianError : public Error {
public:
    using Error::Error;
};

// Eigensolver exceeded its iteration budget.
class NoConvergenceError : public Error {
public:
    using Error::Error;
};

// z is numerically inside the spectrum of the matrix being resolved.
class SpectrumHitError : public Error {
public:
    SpectrumHitError(std::complex<double> z, double separation, double threshold)
        : Error(describe(z, separation, threshold)), z_(z), separation_(separation) {}

    std::complex<double> z() const { return z_; }
    double separation() const { return separation_; }

private:
    static std::string describe(std::complex<double> z, double sep, double thr) {
        std::ostringstream os;
        os << "z = " << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag())
           << "i is numerically in the spectrum (separation " << sep
           << " <= threshold " << thr << ")";
        return os.str();
    }

    std::complex<double> z_;
    double separation_;
};

class DimensionMismatchError : public Error {
public:
    using Error::Error;
};

class BadSpecError : public Error {
public:
    using Error::Error;
};

// Malformed document (syntax level), with byte location when known.
class ParseError : public Error {
public:
    using Error::Error;
};

// Well-formed document violating the problem schema; names the field.
class SchemaError : public Error {
public:
    using Error::Error;
};

// The shift s coincides with a resonance value at this z; caller must perturb s.
class CouplingCollisionError : public Error {
public:
    using Error::Error;
};

// Branch counts differ between consecutive samples (the step crossed a sigma-zero).
class CardinalityMismatchError : public Error {
public:
    using Error::Error;
};

// Adaptive stepping hit min_step without resolving the branch matching.
class StepCollapseError : public Error {
public:
    StepCollapseError(std::complex<double> pinch, const std::string& what)
        : Error(what), pinch_(pinch) {}

    std::complex<double> pinch() const { return pinch_; }

private:
    std::complex<double> pinch_;
};

// Quadtree subdivision left unresolved cells at maximal depth.
class DepthExceededError : public Error {
public:
    using Error::Error;
};

// Log-log slope fit did not stabilize within the requested decades.
class InsufficientDecadesError : public Error {
public:
    using Error::Error;
};

}  // namespace resatlas
