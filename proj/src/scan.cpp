#include "resatlas/scan.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <json.hpp>

#include "resatlas/complex_format.hpp"
#include "resatlas/errors.hpp"

namespace resatlas {

using nlohmann::json;

int resolve_thread_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("RESATLAS_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

namespace {

double effective_margin(const Region& region, const TransferEvaluator& eval) {
    if (region.margin >= 0.0) return region.margin;
    const RealVector& spec = eval.spectrum();
    const double diam = spec.size() ? spec[spec.size() - 1] - spec[0] : 0.0;
    if (diam > 0.0) return 1e-3 * diam;
    return 1e-3 * std::max(1.0, eval.spectrum_norm());
}

// One parallel pass over the grid at a fixed shift; returns false when some
// node raised a coupling collision (caller retries with a perturbed shift).
bool scan_pass(const TransferEvaluator& base, const TransferEvaluator& shifted, ScanReport& rep,
               int threads) {
    const int nx = rep.nx, ny = rep.ny;
    const double dx = nx > 1 ? (rep.region.re_max - rep.region.re_min) / (nx - 1) : 0.0;
    const double dy = ny > 1 ? (rep.region.im_max - rep.region.im_min) / (ny - 1) : 0.0;
    rep.records.assign(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), {});

    std::atomic<int> next_row{0};
    std::atomic<bool> collision{false};
    auto worker = [&]() {
        for (;;) {
            const int iy = next_row.fetch_add(1);
            if (iy >= ny || collision.load()) return;
            for (int ix = 0; ix < nx; ++ix) {
                ScanRecord& rec = rep.records[static_cast<std::size_t>(iy) * nx + ix];
                rec.z = Complex(rep.region.re_min + ix * dx, rep.region.im_min + iy * dy);
                if (base.spectrum_distance(rec.z) <= rep.margin) {
                    rec.skipped = true;
                    rec.skip_reason = "inside exclusion margin";
                    continue;
                }
                try {
                    const TransferSample sample = base.sample(rec.z);
                    rec.sigma_max = sample.sigma_max_raw;
                    rec.sigma_min = sample.sigma_min_raw;
                    rec.zero_count = sample.zero_count;
                    rec.condition = sample.condition;
                    const HerglotzReport h = herglotz_sum(base, shifted, rec.z, rep.s);
                    rec.f = h.f_trace;
                    rec.herglotz_ok = h.residual <= 1e-8 * (1.0 + h.trace_norm_bound);
                } catch (const CouplingCollisionError&) {
                    collision.store(true);
                    return;
                } catch (const Error& e) {
                    rec.skipped = true;
                    rec.skip_reason = e.what();
                }
            }
        }
    };

    const int t = std::max(1, std::min(resolve_thread_count(threads), ny));
    if (t == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(t));
        for (int i = 0; i < t; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return !collision.load();
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Complex Newton refinement of an f-zero from a grid candidate.
Complex refine_zero(const std::function<Complex(Complex)>& f, Complex z, double step_scale) {
    Complex best = z;
    double best_abs = std::abs(f(z));
    Complex cur = z;
    for (int it = 0; it < 8; ++it) {
        const double h = std::max(1e-9, 1e-7 * step_scale) * (1.0 + std::abs(cur));
        Complex fz, d;
        try {
            fz = f(cur);
            d = (f(cur + h) - f(cur - h)) / (2.0 * h);
        } catch (const Error&) {
            break;
        }
        if (std::abs(d) == 0.0) break;
        cur -= fz / d;
        try {
            const double a = std::abs(f(cur));
            if (a < best_abs) {
                best_abs = a;
                best = cur;
            }
        } catch (const Error&) {
            break;
        }
    }
    return best;
}

void collect_zero_candidates(const TransferEvaluator& base, const TransferEvaluator& shifted,
                             ScanReport& rep) {
    const int nx = rep.nx, ny = rep.ny;
    std::vector<double> abs_f;
    for (const auto& r : rep.records)
        if (!r.skipped) abs_f.push_back(std::abs(r.f));
    const double median = median_of(abs_f);
    rep.summary.abs_f_median = median;
    if (median <= 0.0) return;
    const double cutoff = 1e-6 * median;

    const double dx = nx > 1 ? (rep.region.re_max - rep.region.re_min) / (nx - 1) : 0.0;
    const double dy = ny > 1 ? (rep.region.im_max - rep.region.im_min) / (ny - 1) : 0.0;
    const double cell_diag = std::hypot(dx, dy);

    auto f_at = [&](Complex z) -> Complex {
        return herglotz_sum(base, shifted, z, rep.s).f_trace;
    };

    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            const ScanRecord& rec = rep.records[static_cast<std::size_t>(iy) * nx + ix];
            if (rec.skipped) continue;
            const double v = std::abs(rec.f);
            if (v >= cutoff) continue;
            bool local_min = true;
            for (int jy = std::max(0, iy - 1); jy <= std::min(ny - 1, iy + 1) && local_min; ++jy)
                for (int jx = std::max(0, ix - 1); jx <= std::min(nx - 1, ix + 1); ++jx) {
                    if (jx == ix && jy == iy) continue;
                    const ScanRecord& nb = rep.records[static_cast<std::size_t>(jy) * nx + jx];
                    if (!nb.skipped && std::abs(nb.f) < v) {
                        local_min = false;
                        break;
                    }
                }
            if (!local_min) continue;

            ZeroCandidate cand;
            cand.location = rec.z;
            cand.abs_f = v;
            cand.radius = std::max(cell_diag, 1e-12);
            cand.refined = refine_zero(f_at, rec.z, cand.radius);
            try {
                cand.refined_abs_f = std::abs(f_at(cand.refined));
            } catch (const Error&) {
                cand.refined_abs_f = v;
                cand.refined = rec.z;
            }

            // Isolation: min |f| on the annulus (radius, 3*radius) must stay a
            // factor 10 above |f| at the refined zero.
            double annulus_min = std::numeric_limits<double>::infinity();
            int valid = 0;
            for (double rr : {1.2, 1.7, 2.3, 2.9}) {
                for (int a = 0; a < 24; ++a) {
                    const double th = 2.0 * M_PI * a / 24.0;
                    const Complex zz =
                        cand.refined + rr * cand.radius * Complex(std::cos(th), std::sin(th));
                    try {
                        annulus_min = std::min(annulus_min, std::abs(f_at(zz)));
                        ++valid;
                    } catch (const Error&) {
                    }
                }
            }
            cand.isolated = valid > 0 && annulus_min > 10.0 * cand.refined_abs_f;
            rep.summary.zero_candidates.push_back(std::move(cand));
        }
    }
}

void fill_summary(ScanReport& rep) {
    ScanSummary& s = rep.summary;
    bool first = true;
    for (const auto& r : rep.records) {
        if (r.skipped) {
            ++s.skipped;
            ++s.skip_reasons[r.skip_reason];
            continue;
        }
        ++s.evaluated;
        if (!r.herglotz_ok) ++s.herglotz_violations;
        const double af = std::abs(r.f);
        if (first) {
            s.sigma_min_min = s.sigma_min_max = r.sigma_min;
            s.sigma_max_min = s.sigma_max_max = r.sigma_max;
            s.abs_f_min = s.abs_f_max = af;
            s.condition_max = r.condition;
            first = false;
        } else {
            s.sigma_min_min = std::min(s.sigma_min_min, r.sigma_min);
            s.sigma_min_max = std::max(s.sigma_min_max, r.sigma_min);
            s.sigma_max_min = std::min(s.sigma_max_min, r.sigma_max);
            s.sigma_max_max = std::max(s.sigma_max_max, r.sigma_max);
            s.abs_f_min = std::min(s.abs_f_min, af);
            s.abs_f_max = std::max(s.abs_f_max, af);
            s.condition_max = std::max(s.condition_max, r.condition);
        }
    }
}

}  // namespace

ScanReport grid_scan(const ResonanceProblem& p, const Region& region, int nx, int ny, double s,
                     int threads) {
    if (nx < 2 || ny < 2) throw BadSpecError("grid_scan: nx and ny must be >= 2");
    if (!(region.re_min < region.re_max) || !(region.im_min < region.im_max))
        throw BadSpecError("grid_scan: empty region");

    const TransferEvaluator base(p);
    ScanReport rep;
    rep.nx = nx;
    rep.ny = ny;
    rep.region = region;
    rep.spectrum = base.spectrum();
    rep.margin = effective_margin(region, base);
    rep.s = s;

    // Retry the whole grid on a shift collision so f is one function of z.
    for (int attempt = 0; attempt < 4; ++attempt) {
        const TransferEvaluator shifted = base.shifted(rep.s);
        if (scan_pass(base, shifted, rep, threads)) {
            fill_summary(rep);
            collect_zero_candidates(base, shifted, rep);
            return rep;
        }
        rep.s += 0.37;
        rep.summary = {};
    }
    throw CouplingCollisionError("grid_scan: shift collides with resonances after 3 retries");
}

std::string scan_csv(const ScanReport& rep) {
    std::string out = "re_z,im_z,sigma_min,sigma_max,abs_f,re_f,im_f,zero_count,condition,skipped\n";
    for (const auto& r : rep.records) {
        out += format_double(r.z.real());
        out += ',';
        out += format_double(r.z.imag());
        out += ',';
        if (r.skipped) {
            out += "nan,nan,nan,nan,nan,0,nan,1\n";
            continue;
        }
        out += format_double(r.sigma_min);
        out += ',';
        out += format_double(r.sigma_max);
        out += ',';
        out += format_double(std::abs(r.f));
        out += ',';
        out += format_double(r.f.real());
        out += ',';
        out += format_double(r.f.imag());
        out += ',';
        out += std::to_string(r.zero_count);
        out += ',';
        out += format_double(r.condition);
        out += ",0\n";
    }
    return out;
}

namespace {

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

}  // namespace

std::string scan_json(const ScanReport& rep) {
    json doc;
    doc["schema"] = "resatlas-scan/1";
    doc["grid"] = {{"nx", rep.nx}, {"ny", rep.ny}};
    doc["region"] = {{"re_min", rep.region.re_min},
                     {"re_max", rep.region.re_max},
                     {"im_min", rep.region.im_min},
                     {"im_max", rep.region.im_max}};
    doc["margin"] = rep.margin;
    doc["s"] = rep.s;
    json spec = json::array();
    for (Eigen::Index i = 0; i < rep.spectrum.size(); ++i) spec.push_back(rep.spectrum[i]);
    doc["spectrum"] = std::move(spec);

    json summary;
    summary["evaluated"] = rep.summary.evaluated;
    summary["skipped"] = rep.summary.skipped;
    summary["herglotz_violations"] = rep.summary.herglotz_violations;
    if (!rep.summary.skip_reasons.empty()) {
        json reasons;
        for (const auto& [reason, count] : rep.summary.skip_reasons) reasons[reason] = count;
        summary["skip_reasons"] = std::move(reasons);
    }
    if (rep.summary.evaluated > 0) {
        summary["sigma_min"] = {{"min", rep.summary.sigma_min_min}, {"max", rep.summary.sigma_min_max}};
        summary["sigma_max"] = {{"min", rep.summary.sigma_max_min}, {"max", rep.summary.sigma_max_max}};
        summary["abs_f"] = {{"min", rep.summary.abs_f_min},
                            {"max", rep.summary.abs_f_max},
                            {"median", rep.summary.abs_f_median}};
        summary["condition_max"] = rep.summary.condition_max;
    }
    doc["summary"] = std::move(summary);

    json zeros = json::array();
    for (const auto& c : rep.summary.zero_candidates) {
        json z;
        z["location"] = complex_json(c.location);
        z["abs_f"] = c.abs_f;
        z["radius"] = c.radius;
        z["refined"] = complex_json(c.refined);
        z["refined_abs_f"] = c.refined_abs_f;
        z["isolated"] = c.isolated;
        zeros.push_back(std::move(z));
    }
    doc["zero_candidates"] = std::move(zeros);
    return doc.dump(1) + "\n";
}

SweepSummary absorbing_sweep(const ResonanceProblem& p, const Region& region, const RayFan& fan,
                             int decades, int threads) {
    if (fan.directions_per_target < 1)
        throw BadSpecError("absorbing_sweep: directions_per_target must be >= 1");
    for (const Complex t : fan.targets)
        if (!region.contains(t)) throw BadSpecError("absorbing_sweep: target outside region");

    const TransferEvaluator eval(p);
    const int d = fan.directions_per_target;
    const int total = static_cast<int>(fan.targets.size()) * d;

    SweepSummary out;
    out.total_rays = total;
    out.rays.resize(static_cast<std::size_t>(total));
    // Half-step fan offset: real problems have conjugation-symmetric branch
    // structure, and rays running exactly along the real axis would pierce
    // on-axis collisions; the offset keeps the fan equally spaced but generic.
    for (int idx = 0; idx < total; ++idx) {
        const double th = 2.0 * M_PI * ((idx % d) + 0.5) / d;
        out.rays[static_cast<std::size_t>(idx)].target = fan.targets[static_cast<std::size_t>(idx) / d];
        out.rays[static_cast<std::size_t>(idx)].direction = Complex(std::cos(th), std::sin(th));
    }

    // The branching test depends only on the target; compute it once each.
    std::vector<std::optional<bool>> hints(fan.targets.size());
    for (std::size_t ti = 0; ti < fan.targets.size(); ++ti)
        hints[ti] = branching_at(eval, fan.targets[ti], 1e-14, fan.branching_probe_radius);

    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int idx = next.fetch_add(1);
            if (idx >= total) return;
            SweepRay& ray = out.rays[static_cast<std::size_t>(idx)];
            try {
                ClassifyOptions opts;
                opts.decades = decades;
                opts.branching_hint = hints[static_cast<std::size_t>(idx) / d];
                ray.report = classify_approach(eval, ray.target, ray.direction, opts);
            } catch (const Error& e) {
                ray.error = e.what();
            }
        }
    };

    const int t = std::max(1, std::min(resolve_thread_count(threads), total));
    if (t == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < t; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (const auto& ray : out.rays) {
        if (!ray.report) {
            ++out.counts["error"];
            continue;
        }
        ++out.counts[approach_class_name(ray.report->classification)];
        if (ray.report->classification == ApproachClass::SuspectedAbsorbing)
            out.findings.push_back(&ray);
    }
    return out;
}

namespace {

json report_json(const DivergenceReport& r) {
    json doc;
    doc["direction"] = complex_json(r.direction);
    doc["classification"] = approach_class_name(r.classification);
    if (r.classification == ApproachClass::PoleLike) doc["order"] = r.pole_order;
    doc["fit_quality"] = r.fit_quality;
    doc["series_truncated"] = r.series_truncated;
    json slopes = json::array();
    for (double s : r.slopes) slopes.push_back(s);
    doc["slopes"] = std::move(slopes);
    json samples = json::array();
    for (const auto& s : r.samples) {
        json row;
        row["t"] = s.t;
        json values = json::array();
        for (Eigen::Index i = 0; i < s.r.size(); ++i) values.push_back(complex_json(s.r[i]));
        row["r"] = std::move(values);
        samples.push_back(std::move(row));
    }
    doc["samples"] = std::move(samples);
    return doc;
}

}  // namespace

std::string sweep_json(const SweepSummary& summary) {
    json doc;
    doc["schema"] = "resatlas-classify/1";
    doc["total_rays"] = summary.total_rays;
    json counts;
    for (const auto& [name, n] : summary.counts) counts[name] = n;
    doc["counts"] = std::move(counts);

    json rays = json::array();
    json findings = json::array();
    for (const auto& ray : summary.rays) {
        json rj;
        rj["target"] = complex_json(ray.target);
        rj["direction"] = complex_json(ray.direction);
        if (ray.report) {
            rj.update(report_json(*ray.report));
            if (ray.report->classification == ApproachClass::SuspectedAbsorbing)
                findings.push_back(rj);
        } else {
            rj["error"] = ray.error;
        }
        rays.push_back(std::move(rj));
    }
    doc["rays"] = std::move(rays);
    doc["findings"] = std::move(findings);
    return doc.dump(1) + "\n";
}

double mean_value_residual(const std::function<Complex(Complex)>& fn, Complex z0, double rho,
                           int npoints) {
    Complex acc = 0.0;
    for (int i = 0; i < npoints; ++i) {
        const double th = 2.0 * M_PI * i / npoints;
        acc += fn(z0 + rho * Complex(std::cos(th), std::sin(th)));
    }
    return std::abs(fn(z0) - acc / static_cast<double>(npoints));
}

}  // namespace resatlas
