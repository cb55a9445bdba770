#include "resatlas/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "resatlas/assignment.hpp"
#include "resatlas/complex_format.hpp"
#include "resatlas/errors.hpp"

namespace resatlas {

bool is_identity(const Permutation& p) {
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] != static_cast<int>(i)) return false;
    return true;
}

Permutation inverse_permutation(const Permutation& p) {
    Permutation inv(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) inv[static_cast<std::size_t>(p[i])] = static_cast<int>(i);
    return inv;
}

Permutation compose(const Permutation& p, const Permutation& q) {
    Permutation out(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) out[i] = p[static_cast<std::size_t>(q[i])];
    return out;
}

std::vector<int> cycle_lengths(const Permutation& p) {
    std::vector<char> seen(p.size(), 0);
    std::vector<int> lengths;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (seen[i]) continue;
        int len = 0;
        std::size_t j = i;
        while (!seen[j]) {
            seen[j] = 1;
            j = static_cast<std::size_t>(p[j]);
            ++len;
        }
        lengths.push_back(len);
    }
    std::sort(lengths.begin(), lengths.end());
    return lengths;
}

bool same_cycle_type(const Permutation& a, const Permutation& b) {
    return a.size() == b.size() && cycle_lengths(a) == cycle_lengths(b);
}

PathSpec PathSpec::circle(Complex center, double radius, int segments) {
    PathSpec p;
    p.waypoints.reserve(static_cast<std::size_t>(segments));
    for (int l = 0; l < segments; ++l) {
        const double th = 2.0 * M_PI * l / segments;
        p.waypoints.push_back(center + radius * Complex(std::cos(th), std::sin(th)));
    }
    p.max_step = M_PI * radius / segments;
    p.min_step = std::max(radius * 1e-10, 1e-15);
    p.closed = true;
    return p;
}

PathSpec PathSpec::segment(Complex a, Complex b, double max_step, double min_step) {
    PathSpec p;
    p.waypoints = {a, b};
    p.max_step = max_step;
    p.min_step = min_step;
    p.closed = false;
    return p;
}

double Rect::diameter() const { return std::hypot(width(), height()); }

MatchResult match_spectra(const ResonanceSet& prev, const ResonanceSet& next) {
    if (prev.size() != next.size())
        throw CardinalityMismatchError("match_spectra: branch counts differ (" +
                                       std::to_string(prev.size()) + " vs " +
                                       std::to_string(next.size()) + ")");
    MatchResult out;
    const int b = prev.size();
    out.half_min_gap = std::numeric_limits<double>::infinity();
    if (b == 0) return out;

    const ValueMatch vm = match_values(prev.values, next.values);
    out.perm = vm.perm;
    out.max_pair_distance = vm.max_pair_distance;
    for (int i = 0; i < b; ++i)
        for (int j = i + 1; j < b; ++j)
            out.half_min_gap = std::min(out.half_min_gap,
                                        0.5 * std::abs(prev.values[i] - prev.values[j]));
    out.ambiguous = out.max_pair_distance > out.half_min_gap;
    return out;
}

namespace {

double point_segment_distance(Complex p, Complex a, Complex b) {
    const Complex ab = b - a;
    const double len2 = std::norm(ab);
    if (len2 == 0.0) return std::abs(p - a);
    const double t = std::clamp(((p - a) * std::conj(ab)).real() / len2, 0.0, 1.0);
    return std::abs(p - (a + t * ab));
}

void validate_path(const TransferEvaluator& eval, const PathSpec& path) {
    if (path.waypoints.size() < 2) throw BadSpecError("path needs at least two waypoints");
    if (!(path.min_step > 0.0) || path.max_step < path.min_step)
        throw BadSpecError("path requires 0 < min_step <= max_step");
    for (std::size_t i = 0; i < path.waypoints.size(); ++i)
        for (std::size_t j = i + 1; j < path.waypoints.size(); ++j)
            if (path.waypoints[i] == path.waypoints[j])
                throw BadSpecError("path waypoints must be pairwise distinct");

    // Every point of the path must stay off spec(H0) by 10 * min_step.
    std::vector<Complex> pts = path.waypoints;
    if (path.closed) pts.push_back(path.waypoints.front());
    const RealVector& spec = eval.spectrum();
    for (std::size_t seg = 0; seg + 1 < pts.size(); ++seg)
        for (Eigen::Index e = 0; e < spec.size(); ++e) {
            const double sep =
                point_segment_distance(Complex(spec[e], 0.0), pts[seg], pts[seg + 1]);
            if (sep < 10.0 * path.min_step)
                throw BadSpecError("path passes within 10*min_step of spec(H0) near lambda = " +
                                   std::to_string(spec[e]));
        }
}

// Worst scaled coupling-consistency defect over all branches of one sample.
double sample_consistency_defect(const TransferEvaluator& eval, const ResonanceSet& rs) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < rs.values.size(); ++i) {
        const CouplingCheck cc = coupling_consistency(eval, rs.z, rs.values[i]);
        const double eig_scale = 1.0 + std::abs(rs.z) + cc.perturbed_norm;
        worst = std::max({worst, cc.eig_distance / eig_scale, cc.sing_min});
    }
    return worst;
}

}  // namespace

BranchFamily trace_branches(const TransferEvaluator& eval, const PathSpec& path,
                            const TraceOptions& opts) {
    validate_path(eval, path);
    if (opts.repeats < 1) throw BadSpecError("trace: repeats must be >= 1");
    if (opts.repeats > 1 && !path.closed)
        throw BadSpecError("trace: repeats require a closed path");

    std::vector<Complex> pts = path.waypoints;
    if (path.closed) pts.push_back(path.waypoints.front());

    BranchFamily family;
    TransferSample ts0 = eval.sample(pts[0], opts.zero_tol);
    const int zero0 = ts0.zero_count;
    ResonanceSet cur = resonances_at(ts0);
    const int b = cur.size();
    Permutation ident(static_cast<std::size_t>(b));
    std::iota(ident.begin(), ident.end(), 0);
    family.samples.push_back({pts[0], cur, ident, ident});
    family.waypoint_samples.push_back(0);
    if (opts.verify_consistency)
        family.max_consistency_defect =
            std::max(family.max_consistency_defect, sample_consistency_defect(eval, cur));

    Permutation positions = ident;
    for (int rep = 0; rep < opts.repeats; ++rep) {
        for (std::size_t seg = 0; seg + 1 < pts.size(); ++seg) {
            const Complex a = pts[seg], bb = pts[seg + 1];
            const double len = std::abs(bb - a);
            const Complex dir = (bb - a) / len;
            double t = 0.0;
            double step = std::min(path.max_step, len);
            while (t < len) {
                double dt = std::min(step, len - t);
                for (;;) {
                    const bool at_end = (len - (t + dt)) < 0.5 * path.min_step;
                    const Complex z_next = at_end ? bb : a + dir * (t + dt);
                    bool refine = false;
                    std::string why;
                    try {
                        TransferSample tsn = eval.sample(z_next, opts.zero_tol);
                        if (tsn.zero_count != zero0)
                            throw CardinalityMismatchError(
                                "branch count changed along the path (sigma-zero crossed)");
                        ResonanceSet next = resonances_at(tsn);
                        const MatchResult m = match_spectra(cur, next);
                        if (m.ambiguous) {
                            refine = true;
                            why = "ambiguous matching";
                        } else {
                            for (auto& pos : positions) pos = m.perm[static_cast<std::size_t>(pos)];
                            family.samples.push_back({z_next, next, m.perm, positions});
                            if (opts.verify_consistency)
                                family.max_consistency_defect = std::max(
                                    family.max_consistency_defect,
                                    sample_consistency_defect(eval, next));
                            cur = std::move(next);
                            t = at_end ? len : t + dt;
                            step = std::min(step * 1.7, path.max_step);
                            break;
                        }
                    } catch (const SpectrumHitError& e) {
                        refine = true;
                        why = e.what();
                    } catch (const CardinalityMismatchError& e) {
                        refine = true;
                        why = e.what();
                    }
                    if (refine) {
                        dt *= 0.5;
                        if (dt < path.min_step) {
                            const Complex pinch = a + dir * (t + dt);
                            throw StepCollapseError(
                                pinch, "step collapse near " + format_complex(pinch) + ": " + why);
                        }
                    }
                }
            }
            family.waypoint_samples.push_back(family.samples.size() - 1);
        }
    }
    return family;
}

BranchFamily trace_branches(const ResonanceProblem& p, const PathSpec& path,
                            const TraceOptions& opts) {
    return trace_branches(TransferEvaluator(p), path, opts);
}

Permutation monodromy(const TransferEvaluator& eval, const PathSpec& loop,
                      const TraceOptions& opts) {
    if (!loop.closed) throw BadSpecError("monodromy requires a closed path");
    const BranchFamily fam = trace_branches(eval, loop, opts);
    const ResonanceSet& first = fam.samples.front().resonances;
    const ResonanceSet& last = fam.samples.back().resonances;
    if (first.size() == 0) return {};

    // The loop ends at its start point; align the final value ordering with
    // the initial one to express the permutation on starting labels.
    const MatchResult align = match_spectra(last, first);
    if (align.ambiguous)
        throw StepCollapseError(first.z, "loop failed to close: final/initial matching ambiguous");

    const Permutation& pos = fam.composed();
    Permutation mono(pos.size());
    for (std::size_t label = 0; label < pos.size(); ++label)
        mono[label] = align.perm[static_cast<std::size_t>(pos[label])];
    return mono;
}

Permutation monodromy(const ResonanceProblem& p, const PathSpec& loop, const TraceOptions& opts) {
    return monodromy(TransferEvaluator(p), loop, opts);
}

namespace {

PathSpec rect_path(const Rect& c) {
    PathSpec p;
    p.waypoints = {Complex(c.re_min, c.im_min), Complex(c.re_max, c.im_min),
                   Complex(c.re_max, c.im_max), Complex(c.re_min, c.im_max)};
    const double perim = 2.0 * (c.width() + c.height());
    p.max_step = perim / 64.0;
    p.min_step = std::max(perim * 1e-11, 1e-15);
    p.closed = true;
    return p;
}

Rect scaled_about_center(const Rect& c, double factor) {
    const double cx = 0.5 * (c.re_min + c.re_max), cy = 0.5 * (c.im_min + c.im_max);
    const double hw = 0.5 * c.width() * factor, hh = 0.5 * c.height() * factor;
    return {cx - hw, cx + hw, cy - hh, cy + hh};
}

std::optional<Permutation> try_cell_monodromy(const TransferEvaluator& eval, const Rect& cell,
                                              const TraceOptions& topts, std::string& fail_reason) {
    // A branch point sitting on the boundary pinches the trace; nudge the
    // cell outline and retry before giving up.
    for (double grow : {1.0, 1.004, 0.9955, 1.0085}) {
        try {
            return monodromy(eval, rect_path(scaled_about_center(cell, grow)), topts);
        } catch (const Error& e) {
            fail_reason = e.what();
        }
    }
    return std::nullopt;
}

std::optional<Permutation> try_circle_monodromy(const TransferEvaluator& eval, Complex center,
                                                double radius, const TraceOptions& topts) {
    for (double grow : {1.0, 1.13, 0.87}) {
        try {
            return monodromy(eval, PathSpec::circle(center, radius * grow), topts);
        } catch (const Error&) {
        }
    }
    return std::nullopt;
}

struct QuadtreeState {
    const TransferEvaluator& eval;
    TraceOptions topts;
    double target_diam;
    int max_depth;
    BranchPointSearch result;
};

struct Partition {
    Rect children[4];
    std::optional<Permutation> perms[4];
    bool failed[4] = {false, false, false, false};
    int nonidentity = 0;
    int failures = 0;

    int active() const { return nonidentity + failures; }
};

Partition evaluate_partition(QuadtreeState& st, const Rect& cell, double ratio) {
    Partition part;
    const double sx = cell.re_min + ratio * cell.width();
    const double sy = cell.im_min + ratio * cell.height();
    part.children[0] = {cell.re_min, sx, cell.im_min, sy};
    part.children[1] = {sx, cell.re_max, cell.im_min, sy};
    part.children[2] = {cell.re_min, sx, sy, cell.im_max};
    part.children[3] = {sx, cell.re_max, sy, cell.im_max};
    for (int i = 0; i < 4; ++i) {
        std::string reason;
        part.perms[i] = try_cell_monodromy(st.eval, part.children[i], st.topts, reason);
        if (!part.perms[i]) {
            part.failed[i] = true;
            ++part.failures;
        } else if (!is_identity(*part.perms[i])) {
            ++part.nonidentity;
        }
    }
    return part;
}

void process_cell(QuadtreeState& st, const Rect& cell, int depth,
                  std::optional<Permutation> precomputed) {
    std::string fail_reason;
    std::optional<Permutation> perm =
        precomputed ? std::move(precomputed) : try_cell_monodromy(st.eval, cell, st.topts, fail_reason);
    if (!perm) {
        st.result.unresolved.push_back({cell, "boundary monodromy failed: " + fail_reason});
        return;
    }
    if (is_identity(*perm)) return;

    if (cell.diameter() < st.target_diam || depth >= st.max_depth + 4) {
        // Re-center before confirming: two extra subdivision levels pin the
        // point well inside radius/2 of the reported location.
        Rect pin = cell;
        for (int extra = 0; extra < 2; ++extra) {
            bool advanced = false;
            for (double ratio : {0.5, 0.43}) {
                const Partition part = evaluate_partition(st, pin, ratio);
                if (part.nonidentity == 1 && part.failures == 0) {
                    for (int i = 0; i < 4; ++i)
                        if (!is_identity(*part.perms[i])) pin = part.children[i];
                    advanced = true;
                    break;
                }
            }
            if (!advanced) break;
        }
        const Complex center = pin.center();
        const double radius = 0.5 * cell.diameter();
        // Two-radius confirmation: the same (conjugacy class of) monodromy
        // must appear at radius/2 and 2*radius.
        for (double rr : {0.5 * radius, 2.0 * radius}) {
            const std::optional<Permutation> check = try_circle_monodromy(st.eval, center, rr, st.topts);
            if (!check || is_identity(*check) || !same_cycle_type(*check, *perm)) {
                st.result.unresolved.push_back({cell, "two-radius confirmation failed"});
                return;
            }
        }
        st.result.points.push_back({center, radius, *perm, cycle_lengths(*perm)});
        return;
    }

    // A point sitting on the subdivision cross makes several children report
    // it at once; prefer the split ratio that isolates the signal.
    Partition best = evaluate_partition(st, cell, 0.5);
    if (best.active() == 0 || best.nonidentity > 1) {
        for (double ratio : {0.43, 0.57}) {
            Partition alt = evaluate_partition(st, cell, ratio);
            const bool better = alt.active() > 0 &&
                                (best.active() == 0 || alt.nonidentity < best.nonidentity);
            if (better) best = std::move(alt);
            if (best.active() > 0 && best.nonidentity <= 1) break;
        }
    }
    if (best.active() == 0) {
        st.result.unresolved.push_back({cell, "subdivision lost the monodromy signal"});
        return;
    }

    if (best.nonidentity == 1 && best.failures == 0) {
        for (int i = 0; i < 4; ++i)
            if (!best.failed[i] && !is_identity(*best.perms[i]) &&
                !same_cycle_type(*best.perms[i], *perm))
                st.result.warnings.push_back(
                    "cell and child monodromy cycle types disagree near " +
                    std::to_string(cell.center().real()) + "+" +
                    std::to_string(cell.center().imag()) + "i");
    }
    for (int i = 0; i < 4; ++i) {
        if (best.failed[i])
            process_cell(st, best.children[i], depth + 1, std::nullopt);  // retried below
        else if (!is_identity(*best.perms[i]))
            process_cell(st, best.children[i], depth + 1, std::move(best.perms[i]));
    }
}

}  // namespace

BranchPointSearch locate_branch_points(const TransferEvaluator& eval, const Rect& region,
                                       int max_depth, const TraceOptions& opts) {
    if (!(region.re_min < region.re_max) || !(region.im_min < region.im_max))
        throw BadSpecError("locate_branch_points: empty region");
    if (max_depth < 1) throw BadSpecError("locate_branch_points: max_depth must be >= 1");
    // The cell traces need the whole region off the spectrum (their min_step
    // is ~1e-11 of the cell perimeter, and boundaries jitter slightly).
    const RealVector& spec = eval.spectrum();
    for (Eigen::Index e = 0; e < spec.size(); ++e) {
        const double lam = spec[e];
        const double dre = std::max({region.re_min - lam, lam - region.re_max, 0.0});
        const double dim = std::max({region.im_min, -region.im_max, 0.0});
        if (std::hypot(dre, dim) < 1e-9 * region.diameter())
            throw BadSpecError("locate_branch_points: region touches spec(H0) at lambda = " +
                               std::to_string(lam));
    }

    QuadtreeState st{eval, opts, region.diameter() * std::pow(2.0, -max_depth), max_depth, {}};
    st.topts.verify_consistency = false;  // cells only need the permutations
    st.topts.repeats = 1;
    process_cell(st, region, 0, std::nullopt);

    // Deduplicate points claimed by adjacent leaves (possible after jitter).
    std::vector<BranchPoint> unique;
    for (const auto& bp : st.result.points) {
        bool dup = false;
        for (const auto& kept : unique)
            dup = dup || std::abs(bp.location - kept.location) < (bp.radius + kept.radius);
        if (!dup) unique.push_back(bp);
    }
    st.result.points = std::move(unique);
    return st.result;
}

BranchPointSearch locate_branch_points(const ResonanceProblem& p, const Rect& region,
                                       int max_depth, const TraceOptions& opts) {
    return locate_branch_points(TransferEvaluator(p), region, max_depth, opts);
}

const char* approach_class_name(ApproachClass c) {
    switch (c) {
        case ApproachClass::Regular: return "regular";
        case ApproachClass::PoleLike: return "pole_like";
        case ApproachClass::Branching: return "branching";
        case ApproachClass::SuspectedAbsorbing: return "suspected_absorbing";
    }
    return "?";
}

namespace {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double max_residual = 0.0;
};

LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    LineFit fit;
    const double denom = n * sxx - sx * sx;
    fit.slope = denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
    fit.intercept = (sy - fit.slope * sx) / n;
    for (std::size_t i = 0; i < n; ++i)
        fit.max_residual = std::max(fit.max_residual,
                                    std::abs(ys[i] - (fit.intercept + fit.slope * xs[i])));
    return fit;
}

struct RaySeries {
    std::vector<double> ts;
    std::vector<ComplexVector> values;      // per sample, index = branch label
    std::vector<Permutation> positions;     // label -> index in the sample's own order
    bool truncated = false;
    int branches = 0;
};

RaySeries trace_ray(const TransferEvaluator& eval, Complex z0, Complex dir, double t0, int count,
                    double zero_tol) {
    RaySeries out;
    TransferSample ts = eval.sample(z0 + t0 * dir, zero_tol);
    const int zero0 = ts.zero_count;
    ResonanceSet cur = resonances_at(ts);
    out.branches = cur.size();
    Permutation positions(static_cast<std::size_t>(out.branches));
    std::iota(positions.begin(), positions.end(), 0);

    auto record = [&](double t) {
        ComplexVector by_label(out.branches);
        for (int l = 0; l < out.branches; ++l)
            by_label[l] = cur.values[positions[static_cast<std::size_t>(l)]];
        out.ts.push_back(t);
        out.values.push_back(std::move(by_label));
        out.positions.push_back(positions);
    };
    record(t0);
    if (out.branches == 0) return out;

    double t_cur = t0;
    for (int m = 1; m < count; ++m) {
        const double t_target = t0 * std::pow(2.0, -m);
        std::vector<double> pending = {t_target};
        bool stop = false;
        while (!pending.empty()) {
            const double t_b = pending.back();
            TransferSample tsn = eval.sample(z0 + t_b * dir, zero_tol);
            if (tsn.zero_count != zero0) {
                // A sigma crossed the zero threshold; the collected decades
                // already show the divergence.
                out.truncated = true;
                stop = true;
                break;
            }
            ResonanceSet next = resonances_at(tsn);
            const MatchResult match = match_spectra(cur, next);
            if (match.ambiguous) {
                const double t_mid = std::sqrt(t_cur * t_b);
                if (t_mid / t_b < 1.0 + 1e-9 || pending.size() > 64)
                    throw StepCollapseError(z0 + t_mid * dir,
                                            "ray continuation pinched during approach");
                pending.push_back(t_mid);
                continue;
            }
            for (auto& pos : positions) pos = match.perm[static_cast<std::size_t>(pos)];
            cur = std::move(next);
            t_cur = t_b;
            pending.pop_back();
        }
        if (stop) break;
        record(t_cur);
    }
    return out;
}

struct SigmaZeroCheck {
    bool ok = false;
    double fit_residual = 1.0;
    double c0_rel = 1.0;
};

// Fits sigma on a circle |z - z0| = rho by an analytic polynomial (DFT
// truncation); a holomorphic zero shows a tiny residual and |c_0| ~ 0.
SigmaZeroCheck sigma_zero_check(const TransferEvaluator& eval, Complex z0, Complex dir, double rho,
                                int branch_index_at_basepoint, double zero_tol) {
    SigmaZeroCheck out;
    constexpr int kPoints = 32;
    PathSpec circle;
    // waypoint 0 must be the ray sample z0 + rho*dir itself, so the branch
    // index from the ray carries over to the circle trace
    for (int l = 0; l < kPoints; ++l) {
        const double th = 2.0 * M_PI * l / kPoints;
        circle.waypoints.push_back(z0 + rho * dir * Complex(std::cos(th), std::sin(th)));
    }
    circle.max_step = M_PI * rho / kPoints;
    circle.min_step = std::max(rho * 1e-10, 1e-15);
    circle.closed = true;

    TraceOptions topts;
    topts.zero_tol = zero_tol;
    topts.verify_consistency = false;
    BranchFamily fam;
    try {
        fam = trace_branches(eval, circle, topts);
    } catch (const Error&) {
        return out;  // inconclusive; caller treats as not certified
    }
    if (fam.waypoint_samples.size() < kPoints + 1) return out;

    std::vector<Complex> sigma(kPoints);
    double max_sigma = 0.0;
    for (int l = 0; l < kPoints; ++l) {
        const Complex r = fam.value(branch_index_at_basepoint, fam.waypoint_samples[l]);
        sigma[static_cast<std::size_t>(l)] = -1.0 / r;
        max_sigma = std::max(max_sigma, std::abs(sigma[static_cast<std::size_t>(l)]));
    }
    if (max_sigma == 0.0) return out;

    // c_d = (1/N) sum_l sigma_l e^{-2 pi i d l / N}; analytic reconstruction
    // keeps d <= D, so conjugate-analytic content lands in the residual.
    constexpr int kDegree = 10;
    Complex coeff[kDegree + 1];
    for (int d = 0; d <= kDegree; ++d) {
        Complex c = 0.0;
        for (int l = 0; l < kPoints; ++l) {
            const double ph = -2.0 * M_PI * d * l / kPoints;
            c += sigma[static_cast<std::size_t>(l)] * Complex(std::cos(ph), std::sin(ph));
        }
        coeff[d] = c / static_cast<double>(kPoints);
    }
    double worst = 0.0;
    for (int l = 0; l < kPoints; ++l) {
        Complex recon = 0.0;
        for (int d = 0; d <= kDegree; ++d) {
            const double ph = 2.0 * M_PI * d * l / kPoints;
            recon += coeff[d] * Complex(std::cos(ph), std::sin(ph));
        }
        worst = std::max(worst, std::abs(sigma[static_cast<std::size_t>(l)] - recon));
    }
    out.fit_residual = worst / max_sigma;
    out.c0_rel = std::abs(coeff[0]) / max_sigma;
    out.ok = out.fit_residual < 1e-6 && out.c0_rel < 1e-6;
    return out;
}

}  // namespace

DivergenceReport classify_approach(const TransferEvaluator& eval, Complex z0, Complex direction,
                                   const ClassifyOptions& opts) {
    if (opts.decades < 1) throw BadSpecError("classify_approach: decades must be >= 1");
    const double dn = std::abs(direction);
    if (dn == 0.0) throw BadSpecError("classify_approach: direction must be nonzero");
    const Complex dir = direction / dn;

    const double dist0 = eval.spectrum_distance(z0);
    if (dist0 <= eval.spectrum_guard())
        throw SpectrumHitError(z0, dist0, eval.spectrum_guard());
    const double t0 = opts.t0 > 0.0 ? opts.t0 : std::min(1.0, 0.5 * dist0);
    const int count = static_cast<int>(std::ceil(3.321928094887362 * opts.decades)) + 1;

    DivergenceReport rep;
    rep.target = z0;
    rep.direction = dir;

    const RaySeries ray = trace_ray(eval, z0, dir, t0, count, opts.zero_tol);
    rep.series_truncated = ray.truncated;
    for (std::size_t i = 0; i < ray.ts.size(); ++i)
        rep.samples.push_back({ray.ts[i], ray.values[i]});
    if (ray.branches == 0) return rep;  // no branches anywhere: trivially regular

    // Branching test: non-identity branch monodromy on small circles about z0.
    bool branching = false;
    if (opts.branching_hint) {
        branching = *opts.branching_hint;
    } else if (ray.branches > 1) {
        branching =
            branching_at(eval, z0, opts.zero_tol, opts.branching_probe_radius).value_or(false);
    }

    // Per-branch log-log slope over the trailing samples.
    const std::size_t n = ray.ts.size();
    if (n < 5)
        throw InsufficientDecadesError("classify_approach: only " + std::to_string(n) +
                                       " usable samples along the ray");
    const std::size_t tail = std::max<std::size_t>(5, (n * 2) / 5);
    std::vector<double> tail_logt(tail);
    for (std::size_t i = 0; i < tail; ++i) tail_logt[i] = std::log(ray.ts[n - tail + i]);

    rep.slopes.resize(static_cast<std::size_t>(ray.branches));
    std::vector<LineFit> fits(static_cast<std::size_t>(ray.branches));
    std::vector<bool> diverging(static_cast<std::size_t>(ray.branches), false);
    bool any_diverging = false;
    for (int l = 0; l < ray.branches; ++l) {
        std::vector<double> ys(tail);
        for (std::size_t i = 0; i < tail; ++i)
            ys[i] = std::log(std::max(std::abs(ray.values[n - tail + i][l]), 1e-300));
        fits[static_cast<std::size_t>(l)] = fit_line(tail_logt, ys);
        rep.slopes[static_cast<std::size_t>(l)] = fits[static_cast<std::size_t>(l)].slope;
        diverging[static_cast<std::size_t>(l)] = fits[static_cast<std::size_t>(l)].slope < -0.25;
        any_diverging = any_diverging || diverging[static_cast<std::size_t>(l)];
    }

    if (branching) {
        rep.classification = ApproachClass::Branching;
        double q = 0.0;
        for (const auto& f : fits) q = std::max(q, f.max_residual);
        rep.fit_quality = q;
        return rep;
    }
    if (!any_diverging) {
        rep.classification = ApproachClass::Regular;
        double q = 0.0;
        for (const auto& f : fits) q = std::max(q, f.max_residual);
        rep.fit_quality = q;
        return rep;
    }

    // Divergence without branching: certify a holomorphic sigma-zero for a
    // pole-like verdict, otherwise flag the ray.
    double fit_quality = 0.0;
    bool all_pole_like = true;
    int max_order = 0;
    const std::size_t rho_index = std::min(n - 1, std::max<std::size_t>(1, (n * 13) / 20));
    for (int l = 0; l < ray.branches; ++l) {
        if (!diverging[static_cast<std::size_t>(l)]) continue;
        const LineFit& fit = fits[static_cast<std::size_t>(l)];
        fit_quality = std::max(fit_quality, fit.max_residual);
        if (fit.max_residual > 0.05)
            throw InsufficientDecadesError(
                "classify_approach: log-log fit residual " + std::to_string(fit.max_residual) +
                " > 0.05 at the requested depth; increase decades");
        const int order = static_cast<int>(std::lround(-fit.slope));
        const bool integer_slope = order >= 1 && std::abs(fit.slope + order) <= 0.05;
        bool certified = false;
        if (integer_slope) {
            const SigmaZeroCheck check = sigma_zero_check(
                eval, z0, dir, ray.ts[rho_index],
                ray.positions[rho_index][static_cast<std::size_t>(l)], opts.zero_tol);
            certified = check.ok;
        }
        if (certified)
            max_order = std::max(max_order, order);
        else
            all_pole_like = false;
    }
    rep.fit_quality = fit_quality;
    if (all_pole_like) {
        rep.classification = ApproachClass::PoleLike;
        rep.pole_order = max_order;
    } else {
        rep.classification = ApproachClass::SuspectedAbsorbing;
    }
    return rep;
}

DivergenceReport classify_approach(const ResonanceProblem& p, Complex z0, Complex direction,
                                   const ClassifyOptions& opts) {
    return classify_approach(TransferEvaluator(p), z0, direction, opts);
}

std::optional<bool> branching_at(const TransferEvaluator& eval, Complex z0, double zero_tol,
                                 double radius) {
    const double dist0 = eval.spectrum_distance(z0);
    if (dist0 <= eval.spectrum_guard()) return std::nullopt;
    const double r = radius > 0.0 ? radius : std::min(1.0, 0.5 * dist0) / 64.0;
    TraceOptions topts;
    topts.zero_tol = zero_tol;
    topts.verify_consistency = false;
    const std::optional<Permutation> small = try_circle_monodromy(eval, z0, r, topts);
    if (!small) return std::nullopt;
    if (is_identity(*small)) return false;
    const std::optional<Permutation> confirm = try_circle_monodromy(eval, z0, 2.0 * r, topts);
    if (!confirm) return std::nullopt;
    return !is_identity(*confirm) && same_cycle_type(*small, *confirm);
}

}  // namespace resatlas
