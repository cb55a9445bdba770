#pragma once

#include <optional>
#include <string>
#include <vector>

#include "resatlas/resonance.hpp"

namespace resatlas {

// Branch permutations, stored as index maps: perm[i] = image of i.
using Permutation = std::vector<int>;

bool is_identity(const Permutation& p);
Permutation inverse_permutation(const Permutation& p);
// compose(p, q)[i] = p[q[i]]  (apply q first, then p)
Permutation compose(const Permutation& p, const Permutation& q);
// Ascending multiset of all cycle lengths of p.
std::vector<int> cycle_lengths(const Permutation& p);
bool same_cycle_type(const Permutation& a, const Permutation& b);

// A discretized path or loop. Waypoints are honored exactly: every waypoint
// appears among the trace samples.
struct PathSpec {
    std::vector<Complex> waypoints;
    double max_step = 0.1;
    double min_step = 1e-9;
    bool closed = false;

    static PathSpec circle(Complex center, double radius, int segments = 16);
    static PathSpec segment(Complex a, Complex b, double max_step, double min_step);
};

struct Rect {
    double re_min, re_max, im_min, im_max;

    double width() const { return re_max - re_min; }
    double height() const { return im_max - im_min; }
    double diameter() const;
    Complex center() const { return {0.5 * (re_min + re_max), 0.5 * (im_min + im_max)}; }
};

struct MatchResult {
    Permutation perm;  // prev index -> next index
    double max_pair_distance = 0.0;
    double half_min_gap = 0.0;  // half the minimal pairwise gap within prev
    bool ambiguous = false;
};

// Optimal assignment between consecutive resonance sets; Ambiguous when the
// worst pair distance exceeds half the minimal gap within prev (the unique
// nearest-neighbour criterion). Throws CardinalityMismatchError when the
// branch counts differ (the step crossed a sigma-zero; refine the step).
MatchResult match_spectra(const ResonanceSet& prev, const ResonanceSet& next);

struct PathSample {
    Complex z;
    ResonanceSet resonances;
    Permutation perm;       // from previous sample (identity at the start)
    Permutation positions;  // branch label -> index in this sample
};

struct BranchFamily {
    std::vector<PathSample> samples;
    std::vector<std::size_t> waypoint_samples;  // indices of samples at waypoints
    double max_consistency_defect = 0.0;        // scaled coupling_consistency worst case

    int branch_count() const {
        return samples.empty() ? 0 : samples.front().resonances.size();
    }
    // Value of the branch labeled by its start index, at a given sample.
    Complex value(int label, std::size_t sample_index) const {
        const PathSample& s = samples[sample_index];
        return s.resonances.values[s.positions[static_cast<std::size_t>(label)]];
    }
    // label -> index in the final sample
    const Permutation& composed() const { return samples.back().positions; }
};

struct TraceOptions {
    double zero_tol = kDefaultZeroTol;
    bool verify_consistency = true;  // run coupling_consistency at every sample
    int repeats = 1;                 // closed paths only: number of traversals
};

// Adaptive continuation of all branches along the path; halves the step on
// Ambiguous or CardinalityMismatch down to min_step, then throws
// StepCollapseError with the pinch location.
BranchFamily trace_branches(const TransferEvaluator& eval, const PathSpec& path,
                            const TraceOptions& opts = {});
BranchFamily trace_branches(const ResonanceProblem& p, const PathSpec& path,
                            const TraceOptions& opts = {});

// Composed branch permutation around a closed loop, as label -> label.
Permutation monodromy(const TransferEvaluator& eval, const PathSpec& loop,
                      const TraceOptions& opts = {});
Permutation monodromy(const ResonanceProblem& p, const PathSpec& loop,
                      const TraceOptions& opts = {});

struct BranchPoint {
    Complex location;
    double radius = 0.0;
    Permutation monodromy;
    std::vector<int> periods;  // cycle lengths of the monodromy
};

struct UnresolvedCell {
    Rect cell;
    std::string reason;
};

struct BranchPointSearch {
    std::vector<BranchPoint> points;
    std::vector<UnresolvedCell> unresolved;
    std::vector<std::string> warnings;
};

// Monodromy quadtree: subdivide cells with non-identity boundary monodromy
// until their diameter falls below 2^-max_depth * diam(region); every emitted
// point is confirmed by circles at radius/2 and 2*radius (same cycle type).
BranchPointSearch locate_branch_points(const TransferEvaluator& eval, const Rect& region,
                                       int max_depth, const TraceOptions& opts = {});
BranchPointSearch locate_branch_points(const ResonanceProblem& p, const Rect& region,
                                       int max_depth, const TraceOptions& opts = {});

enum class ApproachClass { Regular, PoleLike, Branching, SuspectedAbsorbing };

const char* approach_class_name(ApproachClass c);

struct ApproachSample {
    double t;
    ComplexVector r;  // indexed by branch label (start order at t0)
};

struct DivergenceReport {
    Complex target;
    Complex direction;
    std::vector<ApproachSample> samples;  // geometric approach data, t decreasing
    ApproachClass classification = ApproachClass::Regular;
    int pole_order = 0;        // for PoleLike
    double fit_quality = 0.0;  // max residual of the decisive log-log fits
    std::vector<double> slopes;
    bool series_truncated = false;  // a sigma crossed the zero threshold
};

struct ClassifyOptions {
    int decades = 6;
    double zero_tol = 1e-14;  // lowered so tiny sigmas keep their branches
    double t0 = 0.0;          // 0 = auto: min(1, dist(z0, spec)/2)
    // Radius of the branching-test circles; 0 = auto (t0-scale / 64). Set it
    // to the localization radius when z0 comes from locate_branch_points.
    double branching_probe_radius = 0.0;
    // The branching test depends only on z0; sweeps may compute it once per
    // target and pass it down.
    std::optional<bool> branching_hint;
};

// Samples t_m = t0 * 2^-m along z0 + t*direction, fits log|r_j| against
// log t per branch, and classifies the approach.
DivergenceReport classify_approach(const TransferEvaluator& eval, Complex z0, Complex direction,
                                   const ClassifyOptions& opts = {});
DivergenceReport classify_approach(const ResonanceProblem& p, Complex z0, Complex direction,
                                   const ClassifyOptions& opts = {});

// Branching test alone: non-identity branch monodromy on two small circles
// about z0, radii r and 2r with r = radius (auto scale/64 when radius == 0,
// scale = min(1, dist(z0, spec)/2)). nullopt when the circles cannot be traced.
std::optional<bool> branching_at(const TransferEvaluator& eval, Complex z0,
                                 double zero_tol = 1e-14, double radius = 0.0);

}  // namespace resatlas
