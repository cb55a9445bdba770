// resatlas: coupling resonance functions of finite self-adjoint pairs
// (H0, V = F*JF) — generation, identity verification, complex-plane scans,
// branch continuation, branch-point search, divergence classification, plots.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "resatlas/complex_format.hpp"
#include "resatlas/continuation.hpp"
#include "resatlas/errors.hpp"
#include "resatlas/problem.hpp"
#include "resatlas/resonance.hpp"
#include "resatlas/rng.hpp"
#include "resatlas/scan.hpp"
#include "resatlas/svg.hpp"

namespace rs = resatlas;

namespace {

// Catch unwritable destinations before any computation starts.
void check_writable(const std::string& path) {
    const bool existed = std::filesystem::exists(path);
    std::ofstream probe(path, std::ios::app);
    if (!probe) throw rs::BadSpecError("output path '" + path + "' is not writable");
    probe.close();
    if (!existed) std::filesystem::remove(path);
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw rs::BadSpecError("cannot write '" + path + "'");
    out << content;
    out.flush();
    if (!out.good()) {
        out.close();
        std::error_code ec;
        std::filesystem::remove(path, ec);  // drop the partial file
        throw rs::BadSpecError("write to '" + path + "' failed");
    }
}

std::vector<double> parse_reals(const std::string& text) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find(',', start);
        if (end == std::string::npos) end = text.size();
        const std::string piece = text.substr(start, end - start);
        if (!piece.empty()) {
            double v = 0.0;
            auto res = std::from_chars(piece.data(), piece.data() + piece.size(), v);
            if (res.ec != std::errc{} || res.ptr != piece.data() + piece.size())
                throw rs::ParseError("bad number '" + piece + "'");
            out.push_back(v);
        }
        if (end == text.size()) break;
        start = end + 1;
    }
    return out;
}

rs::Region parse_region(const std::string& text, double margin) {
    const std::vector<double> v = parse_reals(text);
    if (v.size() != 4) throw rs::ParseError("region must be re_min,re_max,im_min,im_max");
    rs::Region r{v[0], v[1], v[2], v[3], margin};
    if (!(r.re_min < r.re_max) || !(r.im_min < r.im_max))
        throw rs::ParseError("region must satisfy re_min < re_max and im_min < im_max");
    return r;
}

std::pair<int, int> parse_grid(const std::string& text) {
    const std::size_t x = text.find('x');
    if (x == std::string::npos) throw rs::ParseError("grid must be NXxNY, e.g. 64x64");
    int nx = 0, ny = 0;
    auto r1 = std::from_chars(text.data(), text.data() + x, nx);
    auto r2 = std::from_chars(text.data() + x + 1, text.data() + text.size(), ny);
    if (r1.ec != std::errc{} || r2.ec != std::errc{} || nx < 2 || ny < 2)
        throw rs::ParseError("grid must be NXxNY with both >= 2");
    return {nx, ny};
}

// ------------------------------------------------------------------ verify

struct CheckRow {
    std::string name;
    double worst;
    double tol;
    bool ok;
    bool applicable = true;
};

// Random z off-spectrum inside an inflated box around spec(H0).
rs::Complex sample_z(rs::SplitMix64& rng, const rs::TransferEvaluator& eval, bool upper_half = false) {
    const rs::RealVector& spec = eval.spectrum();
    const double lo = spec[0], hi = spec[spec.size() - 1];
    const double d = std::max(hi - lo, 1.0);
    for (int attempt = 0; attempt < 256; ++attempt) {
        const double re = rng.uniform(lo - 0.75 * d, hi + 0.75 * d);
        const double im = upper_half ? rng.uniform(0.02 * d, d) : rng.uniform(-d, d);
        const rs::Complex z(re, im);
        if (eval.spectrum_distance(z) >= 0.02 * d) return z;
    }
    throw rs::BadSpecError("could not sample a point away from the spectrum");
}

int run_verify(const std::string& problem_path, int samples, std::uint64_t seed, double tol) {
    const rs::ResonanceProblem p = rs::load_problem_file(problem_path);
    const rs::ValidationReport vr = rs::validate(p);
    if (!vr.all_pass()) {
        for (const auto& c : vr.checks)
            if (!c.pass)
                std::cerr << "problem invalid: " << c.name << " (defect " << c.defect << ")\n";
        return 2;
    }

    const rs::TransferEvaluator eval(p);
    rs::SplitMix64 rng(seed);

    double worst_shift = 0.0, worst_trace = 0.0, worst_weyl = 0.0;
    double worst_eig = 0.0, worst_sing = 0.0;
    for (int i = 0; i < samples; ++i) {
        const rs::Complex z = sample_z(rng, eval);
        double s = rng.uniform(-2.0, 2.0);
        for (int retry = 0;; ++retry) {
            try {
                const rs::TransferEvaluator shifted = eval.shifted(s);
                const double msnorm = rs::singular_values(shifted.transfer_matrix(z))[0];
                const double shift_res = rs::shift_identity_residual(eval, shifted, z, s);
                worst_shift = std::max(worst_shift, shift_res / (1.0 + msnorm));

                const rs::HerglotzReport h = rs::herglotz_sum(eval, shifted, z, s);
                worst_trace = std::max(worst_trace, h.residual / (1.0 + h.trace_norm_bound));

                const rs::TransferSample ms = shifted.sample(z);
                for (double pw : {0.5, 1.0, 2.0}) {
                    const rs::WeylReport w = rs::weyl_report(ms.m, pw);
                    const double scale = std::max(1.0, w.prefix_s_sums.empty() ? 1.0 : w.prefix_s_sums.back());
                    worst_weyl = std::min(worst_weyl, w.min_slack / scale);
                }

                const rs::ResonanceSet rset = rs::resonances_at(eval.sample(z));
                for (Eigen::Index bi = 0; bi < rset.values.size(); ++bi) {
                    const rs::CouplingCheck cc = rs::coupling_consistency(eval, z, rset.values[bi]);
                    worst_eig = std::max(worst_eig,
                                         cc.eig_distance / (1.0 + std::abs(z) + cc.perturbed_norm));
                    worst_sing = std::max(worst_sing, cc.sing_min);
                }
                break;
            } catch (const rs::CouplingCollisionError&) {
                if (retry >= 3) throw;
                s += 0.37;
            }
        }
    }

    std::vector<CheckRow> rows;
    rows.push_back({"shift-identity", worst_shift, tol, worst_shift <= tol});
    rows.push_back({"trace-identity", worst_trace, tol, worst_trace <= tol});
    rows.push_back({"weyl-min-slack", worst_weyl, -1e-12, worst_weyl >= -1e-12});
    rows.push_back({"coupling-eig-distance", worst_eig, 1e-7, worst_eig <= 1e-7});
    rows.push_back({"coupling-sing-min", worst_sing, 1e-7, worst_sing <= 1e-7});

    // Rank-one positive pairs are Herglotz: Im sigma > 0 on the upper half-plane.
    const bool rank_one_positive = p.k() == 1 && p.j(0, 0).real() > 0.0;
    if (rank_one_positive) {
        double min_im = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 100; ++i) {
            const rs::Complex z = sample_z(rng, eval, /*upper_half=*/true);
            const rs::ComplexMatrix m = eval.transfer_matrix(z);
            min_im = std::min(min_im, m(0, 0).imag());
        }
        rows.push_back({"herglotz-positivity", min_im, 0.0, min_im > 0.0});
    } else {
        rows.push_back({"herglotz-positivity", 0.0, 0.0, true, /*applicable=*/false});
    }

    std::printf("verify: %d samples, seed %llu, tol %.1e\n", samples,
                static_cast<unsigned long long>(seed), tol);
    std::printf("%-24s %-14s %-12s %s\n", "check", "worst", "tol", "status");
    bool all_ok = true;
    for (const auto& r : rows) {
        if (!r.applicable) {
            std::printf("%-24s %-14s %-12s %s\n", r.name.c_str(), "-", "-", "n/a (not rank-one)");
            continue;
        }
        std::printf("%-24s %-14.3e %-12.1e %s\n", r.name.c_str(), r.worst, r.tol,
                    r.ok ? "ok" : "FAIL");
        all_ok = all_ok && r.ok;
    }
    return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coupling resonance atlas for finite self-adjoint pairs"};
    app.require_subcommand(1);

    // --- gen ---------------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "generate a seeded ensemble problem file");
    std::string gen_kind = "dense-gaussian", gen_out;
    int gen_n = 8, gen_k = 0;
    std::uint64_t gen_seed = 0;
    double gen_scale = 1.0;
    gen->add_option("--ensemble", gen_kind, "diagonal|jacobi|dense-gaussian|rank-k-perturbation");
    gen->add_option("--n", gen_n, "space dimension")->check(CLI::PositiveNumber);
    gen->add_option("--k", gen_k, "factor rank (0 = kind default)");
    gen->add_option("--seed", gen_seed, "PRNG seed");
    gen->add_option("--scale", gen_scale, "spectral scale")->check(CLI::PositiveNumber);
    gen->add_option("--out", gen_out, "output problem file")->required();

    // --- verify ------------------------------------------------------------
    auto* verify = app.add_subcommand("verify", "run the random-sample identity suite");
    std::string verify_problem;
    int verify_samples = 32;
    std::uint64_t verify_seed = 1;
    double verify_tol = 1e-8;
    verify->add_option("--problem", verify_problem)->required();
    verify->add_option("--samples", verify_samples)->check(CLI::PositiveNumber);
    verify->add_option("--seed", verify_seed);
    verify->add_option("--tol", verify_tol)->check(CLI::PositiveNumber);

    // --- scan --------------------------------------------------------------
    auto* scan = app.add_subcommand("scan", "grid scan of sigma_min / f landscapes");
    std::string scan_problem, scan_region, scan_grid = "64x64", scan_out, scan_json_path;
    double scan_shift = 0.0, scan_margin = -1.0;
    int scan_threads = 0;
    scan->add_option("--problem", scan_problem)->required();
    scan->add_option("--region", scan_region, "re_min,re_max,im_min,im_max")->required();
    scan->add_option("--grid", scan_grid, "NXxNY");
    scan->add_option("--shift", scan_shift, "coupling shift s");
    scan->add_option("--margin", scan_margin, "exclusion margin (<0 = auto)");
    scan->add_option("--out", scan_out, "CSV output")->required();
    scan->add_option("--json", scan_json_path, "summary JSON output");
    scan->add_option("--threads", scan_threads, "worker threads (0 = auto)");

    // --- trace -------------------------------------------------------------
    auto* trace = app.add_subcommand("trace", "continue branches along a path");
    std::string trace_problem, trace_path, trace_out;
    double trace_max_step = 0.05, trace_min_step = 1e-9, trace_tol = 1e-6;
    bool trace_closed = false;
    trace->add_option("--problem", trace_problem)->required();
    trace->add_option("--path", trace_path, "waypoints 'a+bi;c+di;...'")->required();
    trace->add_flag("--closed", trace_closed, "close the path back to the first waypoint");
    trace->add_option("--max-step", trace_max_step)->check(CLI::PositiveNumber);
    trace->add_option("--min-step", trace_min_step)->check(CLI::PositiveNumber);
    trace->add_option("--tol", trace_tol, "consistency tolerance")->check(CLI::PositiveNumber);
    trace->add_option("--out", trace_out, "CSV output")->required();

    // --- branch-points -----------------------------------------------------
    auto* bp = app.add_subcommand("branch-points", "monodromy quadtree search");
    std::string bp_problem, bp_region, bp_out;
    int bp_depth = 6;
    bp->add_option("--problem", bp_problem)->required();
    bp->add_option("--region", bp_region, "re_min,re_max,im_min,im_max")->required();
    bp->add_option("--max-depth", bp_depth)->check(CLI::PositiveNumber);
    bp->add_option("--out", bp_out, "JSON output")->required();

    // --- classify ----------------------------------------------------------
    auto* classify = app.add_subcommand("classify", "classify approaches to a target point");
    std::string cls_problem, cls_target, cls_out;
    int cls_directions = 8, cls_decades = 6, cls_threads = 0;
    double cls_probe_radius = 0.0;
    classify->add_option("--problem", cls_problem)->required();
    classify->add_option("--target", cls_target, "complex literal a+bi")->required();
    classify->add_option("--directions", cls_directions)->check(CLI::PositiveNumber);
    classify->add_option("--decades", cls_decades)->check(CLI::PositiveNumber);
    classify->add_option("--probe-radius", cls_probe_radius,
                         "branching-test circle radius (0 = auto; use the localization "
                         "radius when the target comes from branch-points)");
    classify->add_option("--threads", cls_threads);
    classify->add_option("--out", cls_out, "JSON output")->required();

    // --- plot --------------------------------------------------------------
    auto* plot = app.add_subcommand("plot", "render a scan CSV quantity as an SVG heatmap");
    std::string plot_csv, plot_out, plot_quantity = "abs_f", plot_spectrum;
    plot->add_option("--csv", plot_csv)->required();
    plot->add_option("--quantity", plot_quantity,
                     "sigma_min|sigma_max|abs_f|re_f|im_f|zero_count|condition");
    plot->add_option("--spectrum", plot_spectrum, "comma-separated real eigenvalues to mark");
    plot->add_option("--out", plot_out, "SVG output")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*gen) {
            check_writable(gen_out);
            rs::EnsembleSpec spec;
            spec.kind = rs::parse_ensemble_kind(gen_kind);
            spec.n = gen_n;
            if (gen_k > 0) {
                spec.k = gen_k;
            } else if (spec.kind == rs::EnsembleKind::RankK) {
                spec.k = std::min(gen_n, 2);
            } else if (spec.kind == rs::EnsembleKind::DenseGaussian) {
                spec.k = std::min(gen_n, 4);
            } else {
                spec.k = gen_n;
            }
            spec.seed = gen_seed;
            spec.scale = gen_scale;
            const rs::ResonanceProblem p = rs::build_ensemble(spec);
            write_file(gen_out, rs::serialize(p));
            std::cout << "wrote " << gen_out << " (" << ensemble_kind_name(spec.kind)
                      << ", n=" << spec.n << ", k=" << spec.k << ", seed=" << spec.seed << ")\n";
            return 0;
        }

        if (*verify) return run_verify(verify_problem, verify_samples, verify_seed, verify_tol);

        if (*scan) {
            check_writable(scan_out);
            if (!scan_json_path.empty()) check_writable(scan_json_path);
            const rs::ResonanceProblem p = rs::load_problem_file(scan_problem);
            const rs::Region region = parse_region(scan_region, scan_margin);
            const auto [nx, ny] = parse_grid(scan_grid);
            const rs::ScanReport rep = rs::grid_scan(p, region, nx, ny, scan_shift, scan_threads);
            write_file(scan_out, rs::scan_csv(rep));
            if (!scan_json_path.empty()) write_file(scan_json_path, rs::scan_json(rep));
            std::cout << "scan: " << rep.summary.evaluated << " evaluated, " << rep.summary.skipped
                      << " skipped, s=" << rep.s << ", " << rep.summary.zero_candidates.size()
                      << " f-zero candidates, " << rep.summary.herglotz_violations
                      << " herglotz violations\n";
            return rep.summary.herglotz_violations == 0 ? 0 : 1;
        }

        if (*trace) {
            check_writable(trace_out);
            const rs::ResonanceProblem p = rs::load_problem_file(trace_problem);
            rs::PathSpec path;
            path.waypoints = rs::parse_complex_list(trace_path);
            path.max_step = trace_max_step;
            path.min_step = trace_min_step;
            path.closed = trace_closed;
            const rs::BranchFamily fam = rs::trace_branches(p, path);

            std::string csv = "step,re_z,im_z,branch,re_r,im_r\n";
            for (std::size_t si = 0; si < fam.samples.size(); ++si) {
                for (int b = 0; b < fam.branch_count(); ++b) {
                    const rs::Complex r = fam.value(b, si);
                    csv += std::to_string(si) + ',' + rs::format_double(fam.samples[si].z.real()) +
                           ',' + rs::format_double(fam.samples[si].z.imag()) + ',' +
                           std::to_string(b) + ',' + rs::format_double(r.real()) + ',' +
                           rs::format_double(r.imag()) + '\n';
                }
            }
            write_file(trace_out, csv);
            std::cout << "trace: " << fam.samples.size() << " samples, " << fam.branch_count()
                      << " branches, max consistency defect " << fam.max_consistency_defect << "\n";
            return fam.max_consistency_defect <= trace_tol ? 0 : 1;
        }

        if (*bp) {
            check_writable(bp_out);
            const rs::ResonanceProblem p = rs::load_problem_file(bp_problem);
            const rs::Region region = parse_region(bp_region, 0.0);
            const rs::Rect rect{region.re_min, region.re_max, region.im_min, region.im_max};
            const rs::BranchPointSearch search = rs::locate_branch_points(p, rect, bp_depth);

            nlohmann::json doc;
            doc["schema"] = "resatlas-branch-points/1";
            doc["region"] = {{"re_min", rect.re_min},
                             {"re_max", rect.re_max},
                             {"im_min", rect.im_min},
                             {"im_max", rect.im_max}};
            doc["max_depth"] = bp_depth;
            nlohmann::json pts = nlohmann::json::array();
            for (const auto& point : search.points) {
                nlohmann::json pj;
                pj["location"] = {point.location.real(), point.location.imag()};
                pj["radius"] = point.radius;
                pj["monodromy"] = point.monodromy;
                pj["periods"] = point.periods;
                pts.push_back(std::move(pj));
            }
            doc["points"] = std::move(pts);
            nlohmann::json unres = nlohmann::json::array();
            for (const auto& cell : search.unresolved) {
                nlohmann::json cj;
                cj["cell"] = {{"re_min", cell.cell.re_min},
                              {"re_max", cell.cell.re_max},
                              {"im_min", cell.cell.im_min},
                              {"im_max", cell.cell.im_max}};
                cj["reason"] = cell.reason;
                unres.push_back(std::move(cj));
            }
            doc["unresolved"] = std::move(unres);
            doc["warnings"] = search.warnings;
            write_file(bp_out, doc.dump(1) + "\n");
            std::cout << "branch-points: " << search.points.size() << " found, "
                      << search.unresolved.size() << " unresolved cells\n";
            return search.unresolved.empty() ? 0 : 1;
        }

        if (*classify) {
            check_writable(cls_out);
            const rs::ResonanceProblem p = rs::load_problem_file(cls_problem);
            const rs::Complex target = rs::parse_complex(cls_target);
            rs::Region region{target.real() - 1.0, target.real() + 1.0, target.imag() - 1.0,
                              target.imag() + 1.0, 0.0};
            rs::RayFan fan;
            fan.targets = {target};
            fan.directions_per_target = cls_directions;
            fan.branching_probe_radius = cls_probe_radius;
            const rs::SweepSummary sweep = rs::absorbing_sweep(p, region, fan, cls_decades, cls_threads);
            write_file(cls_out, rs::sweep_json(sweep));
            for (const auto& [name, count] : sweep.counts)
                std::cout << name << ": " << count << "\n";
            if (!sweep.findings.empty()) {
                std::cout << "FINDING: suspected_absorbing rays present\n";
                return 1;
            }
            const auto err = sweep.counts.find("error");
            if (err != sweep.counts.end() && err->second == sweep.total_rays) {
                std::cerr << "all rays failed\n";
                return 2;
            }
            return 0;
        }

        if (*plot) {
            check_writable(plot_out);
            std::ifstream in(plot_csv, std::ios::binary);
            if (!in) throw rs::ParseError("cannot open CSV '" + plot_csv + "'");
            std::ostringstream ss;
            ss << in.rdbuf();
            const rs::ScanTable table = rs::parse_scan_csv(ss.str());
            rs::HeatmapOptions opts;
            opts.quantity = plot_quantity;
            if (!plot_spectrum.empty()) opts.spectrum_markers = parse_reals(plot_spectrum);
            write_file(plot_out, rs::render_heatmap(table, opts));
            std::cout << "wrote " << plot_out << "\n";
            return 0;
        }
    } catch (const rs::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
