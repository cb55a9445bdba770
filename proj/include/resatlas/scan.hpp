#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "resatlas/continuation.hpp"
#include "resatlas/resonance.hpp"

namespace resatlas {

// Number of worker threads: requested if > 0, else RESATLAS_THREADS,
// else hardware concurrency.
int resolve_thread_count(int requested);

// Scan window with an exclusion margin around spec(H0); margin < 0 means the
// default 1e-3 * spectral diameter (or 1e-3 * max(1, ||H0||) when the
// spectrum is a single point).
struct Region {
    double re_min, re_max, im_min, im_max;
    double margin = -1.0;

    bool contains(Complex z) const {
        return z.real() >= re_min && z.real() <= re_max && z.imag() >= im_min &&
               z.imag() <= im_max;
    }
};

struct ScanRecord {
    Complex z;
    double sigma_min = 0.0;  // smallest |eigenvalue| of M(z), zeros included
    double sigma_max = 0.0;
    Complex f;  // tr M_s(z)
    int zero_count = 0;
    double condition = 0.0;
    bool skipped = false;
    bool herglotz_ok = true;  // residual within 1e-8 * (1 + ||M_s||_1)
    std::string skip_reason;
};

struct ZeroCandidate {
    Complex location;        // grid node
    double abs_f = 0.0;      // |f| at the node
    double radius = 0.0;     // one grid cell diagonal
    Complex refined;         // after Newton refinement
    double refined_abs_f = 0.0;
    bool isolated = false;   // annulus (radius, 3*radius) stays above 10*|f(refined)|
};

struct ScanSummary {
    double sigma_min_min = 0.0, sigma_min_max = 0.0;
    double sigma_max_min = 0.0, sigma_max_max = 0.0;
    double abs_f_min = 0.0, abs_f_max = 0.0, abs_f_median = 0.0;
    double condition_max = 0.0;
    int evaluated = 0;
    int skipped = 0;
    int herglotz_violations = 0;  // residual > 1e-8 * (1 + ||M_s||_1)
    std::map<std::string, int> skip_reasons;
    std::vector<ZeroCandidate> zero_candidates;
};

struct ScanReport {
    int nx = 0, ny = 0;
    Region region;
    double s = 0.0;         // shift actually used (after collision retries)
    double margin = 0.0;    // margin actually used
    RealVector spectrum;    // spec(H0)
    std::vector<ScanRecord> records;  // row-major: index = iy * nx + ix
    ScanSummary summary;
};

// Row-major deterministic grid evaluation of transfer_at / herglotz_sum;
// per-point failures are recorded as skipped, never fatal. A shift collision
// anywhere restarts the whole scan at s + 0.37 (up to 3 retries) so f stays
// a single function across the grid.
ScanReport grid_scan(const ResonanceProblem& p, const Region& region, int nx, int ny, double s,
                     int threads = 0);

// CSV rows: re_z,im_z,sigma_min,sigma_max,abs_f,re_f,im_f,zero_count,condition,skipped
std::string scan_csv(const ScanReport& report);

// Summary + findings document, schema "resatlas-scan/1".
std::string scan_json(const ScanReport& report);

struct RayFan {
    std::vector<Complex> targets;
    int directions_per_target = 8;
    double branching_probe_radius = 0.0;  // 0 = auto; see ClassifyOptions
};

struct SweepRay {
    Complex target;
    Complex direction;
    std::optional<DivergenceReport> report;  // nullopt when the ray errored
    std::string error;
};

struct SweepSummary {
    std::map<std::string, int> counts;       // classification (or "error") -> rays
    std::vector<SweepRay> rays;              // deterministic order
    std::vector<const SweepRay*> findings;   // every suspected_absorbing, full data
    int total_rays = 0;
};

// classify_approach over every (target, equally spaced direction) pair;
// per-ray errors are aggregated, never fatal.
SweepSummary absorbing_sweep(const ResonanceProblem& p, const Region& region, const RayFan& fan,
                             int decades, int threads = 0);

std::string sweep_json(const SweepSummary& summary);

// Discrete Cauchy mean-value defect: |F(z0) - average of F over an n-point
// circle of radius rho|. Holomorphic F makes this vanish to quadrature order.
double mean_value_residual(const std::function<Complex(Complex)>& fn, Complex z0, double rho,
                           int npoints = 64);

}  // namespace resatlas
