#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "resatlas/errors.hpp"
#include "resatlas/scan.hpp"
#include "resatlas/svg.hpp"

using namespace resatlas;

namespace {

ResonanceProblem identity_perturbation(std::initializer_list<double> diag) {
    ResonanceProblem p;
    const int n = static_cast<int>(diag.size());
    p.h0 = ComplexMatrix::Zero(n, n);
    int i = 0;
    for (double d : diag) p.h0(i, i) = d, ++i;
    p.f = ComplexMatrix::Identity(n, n);
    p.j = ComplexMatrix::Identity(n, n);
    return p;
}

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

}  // namespace

TEST_CASE("grid_scan: V=I closed form f(z) = -2z/(z^2-1)") {
    const ResonanceProblem p = identity_perturbation({1.0, -1.0});
    const Region region{-2.0, 2.0, 0.5, 2.0};
    const ScanReport rep = grid_scan(p, region, 9, 7, 0.0);
    REQUIRE(rep.records.size() == 9 * 7);
    CHECK(rep.summary.skipped == 0);
    for (const auto& rec : rep.records) {
        const Complex expected = -2.0 * rec.z / (rec.z * rec.z - 1.0);
        CHECK(std::abs(rec.f - expected) < 1e-12);
    }
    // node z = i sits on this grid and |f(i)| = |-2i / -2| = 1
    bool found = false;
    for (const auto& rec : rep.records)
        if (rec.z == Complex(0.0, 1.0)) {
            found = true;
            CHECK(std::abs(rec.f) == doctest::Approx(1.0).epsilon(1e-12));
        }
    CHECK(found);
}

TEST_CASE("grid_scan: skipped nodes keep their row, reason, and nan fields") {
    const ResonanceProblem p = identity_perturbation({1.0, -1.0});
    Region region{0.5, 1.5, -0.2, 0.2};  // straddles the eigenvalue at 1
    region.margin = 0.15;
    const ScanReport rep = grid_scan(p, region, 11, 5, 0.0);
    CHECK(rep.summary.skipped > 0);
    CHECK(rep.summary.evaluated > 0);
    CHECK(rep.summary.skip_reasons.at("inside exclusion margin") == rep.summary.skipped);

    const std::string csv = scan_csv(rep);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 11 * 5 + 1);  // skipped rows included
    CHECK(csv.find(",nan,nan,nan,nan,nan,0,nan,1\n") != std::string::npos);
    CHECK(scan_json(rep).find("\"skip_reasons\"") != std::string::npos);

    // the heatmap renders skipped cells without choking on nan
    const std::string svg = render_heatmap(parse_scan_csv(csv), HeatmapOptions{});
    CHECK(svg.find("#404040") != std::string::npos);
}

TEST_CASE("RESATLAS_THREADS drives the default worker count") {
    setenv("RESATLAS_THREADS", "3", 1);
    CHECK(resolve_thread_count(0) == 3);
    CHECK(resolve_thread_count(7) == 7);  // explicit request wins
    unsetenv("RESATLAS_THREADS");
    CHECK(resolve_thread_count(0) >= 1);
}

TEST_CASE("grid_scan: region inside the exclusion margin is fully skipped") {
    const ResonanceProblem p = identity_perturbation({1.0, -1.0});
    Region region{0.99999, 1.00001, -1e-5, 1e-5};
    region.margin = 0.5;
    const ScanReport rep = grid_scan(p, region, 3, 3, 0.0);
    CHECK(rep.summary.skipped == 9);
    CHECK(rep.summary.evaluated == 0);
    CHECK(rep.summary.zero_candidates.empty());
    for (const auto& rec : rep.records) CHECK(rec.skipped);
}

TEST_CASE("grid_scan: nested refinement shrinks the minimum of |f| monotonically") {
    const ResonanceProblem p = identity_perturbation({1.0, -1.0});
    const Region region{-2.0, 2.0, 0.4, 2.0};
    const ScanReport coarse = grid_scan(p, region, 9, 9, 0.0);
    const ScanReport fine = grid_scan(p, region, 17, 17, 0.0);  // nodes nest
    CHECK(fine.summary.abs_f_min <= coarse.summary.abs_f_min + 1e-15);
    CHECK(fine.summary.abs_f_max >= coarse.summary.abs_f_max - 1e-15);
}

TEST_CASE("grid_scan: f-zero at the origin is detected, refined, and isolated") {
    // V=I with symmetric spectrum: f(z) = -2z/(z^2-1) vanishes at z = 0,
    // and the 65x65 grid over [-1/2,1/2]^2 places a node exactly there.
    const ResonanceProblem p = identity_perturbation({1.0, -1.0});
    const Region region{-0.5, 0.5, -0.5, 0.5};
    const ScanReport rep = grid_scan(p, region, 65, 65, 0.0);
    REQUIRE(rep.summary.zero_candidates.size() == 1);
    const ZeroCandidate& cand = rep.summary.zero_candidates.front();
    CHECK(std::abs(cand.location) < 1e-12);
    CHECK(cand.refined_abs_f <= cand.abs_f);
    CHECK(cand.isolated);
}

TEST_CASE("grid_scan retries the shift when it collides with a resonance") {
    // V=I, h0 = diag(0,2): r_1(z) = z, so the node z = 1 collides with s = 1
    // exactly; the scan must restart at s + 0.37 and stay a single function.
    const ResonanceProblem p = identity_perturbation({0.0, 2.0});
    const Region region{0.0, 2.0, -1.0, 1.0};
    const ScanReport rep = grid_scan(p, region, 5, 5, 1.0);
    CHECK(rep.s == doctest::Approx(1.37));
    CHECK(rep.summary.evaluated == 25);
    for (const auto& rec : rep.records) {
        const Complex expected =
            1.0 / (Complex(0, 0) + rep.s - rec.z) + 1.0 / (Complex(2, 0) + rep.s - rec.z);
        CHECK(std::abs(rec.f - expected) < 1e-12);
    }
}

TEST_CASE("grid_scan: determinism and thread-count independence") {
    const ResonanceProblem p = rank_one_model();
    const Region region{-2.0, 2.0, 0.3, 1.7};
    const ScanReport a = grid_scan(p, region, 17, 13, 0.0, /*threads=*/1);
    const ScanReport b = grid_scan(p, region, 17, 13, 0.0, /*threads=*/4);
    const ScanReport c = grid_scan(p, region, 17, 13, 0.0, /*threads=*/1);
    CHECK(scan_csv(a) == scan_csv(b));
    CHECK(scan_csv(a) == scan_csv(c));
    CHECK(scan_json(a) == scan_json(b));
}

TEST_CASE("grid_scan CSV has the documented header and row count") {
    const ResonanceProblem p = rank_one_model();
    const Region region{-2.0, 2.0, 0.3, 1.7};
    const ScanReport rep = grid_scan(p, region, 8, 5, 0.0);
    const std::string csv = scan_csv(rep);
    CHECK(csv.rfind("re_z,im_z,sigma_min,sigma_max,abs_f,re_f,im_f,zero_count,condition,skipped\n",
                    0) == 0);
    const std::size_t rows = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
    CHECK(rows == 8 * 5 + 1);  // header + one row per grid node
    CHECK(scan_json(rep).find("\"schema\": \"resatlas-scan/1\"") != std::string::npos);
}

TEST_CASE("scan f satisfies the mean-value property at interior points") {
    const ResonanceProblem p = rank_one_model();
    const TransferEvaluator eval(p);
    auto f = [&](Complex z) { return eval.transfer_matrix(z).trace(); };
    SplitMix64 rng(61);
    for (int i = 0; i < 40; ++i) {
        const Complex z0(rng.uniform(-1.8, 1.8), rng.uniform(0.3, 1.6));
        const double rho = 0.45 * eval.spectrum_distance(z0);
        double max_circle = 0.0;
        for (int a = 0; a < 64; ++a) {
            const double th = 2.0 * M_PI * a / 64;
            max_circle = std::max(max_circle,
                                  std::abs(f(z0 + rho * Complex(std::cos(th), std::sin(th)))));
        }
        CHECK(mean_value_residual(f, z0, rho, 64) < 1e-7 * (1.0 + max_circle));
    }
}

TEST_CASE("absorbing_sweep: V=I fan is all regular, rank-one target 0 all pole_like(1)") {
    const ResonanceProblem p = identity_perturbation({0.0, 2.0});
    Region region{-3.0, 5.0, -3.0, 3.0};
    RayFan fan;
    fan.targets = {Complex(1.0, 1.2), Complex(-0.8, 0.4), Complex(2.5, -0.9)};
    fan.directions_per_target = 4;
    const SweepSummary sweep = absorbing_sweep(p, region, fan, 4);
    CHECK(sweep.counts.at("regular") == 12);
    CHECK(sweep.findings.empty());

    const ResonanceProblem q = rank_one_model();
    Region region2{-2.0, 2.0, -2.0, 2.0};
    RayFan fan2;
    fan2.targets = {Complex(0.0, 0.0)};
    fan2.directions_per_target = 8;
    const SweepSummary sweep2 = absorbing_sweep(q, region2, fan2, 6);
    CHECK(sweep2.counts.at("pole_like") == 8);
    for (const auto& ray : sweep2.rays) {
        REQUIRE(ray.report.has_value());
        CHECK(ray.report->pole_order == 1);
    }
    const std::string doc = sweep_json(sweep2);
    CHECK(doc.find("\"schema\": \"resatlas-classify/1\"") != std::string::npos);
    CHECK(doc.find("\"findings\": []") != std::string::npos);
}

TEST_CASE("f stays finite and mean-valued across a pole-like point") {
    // Toward the rank-one sigma-zero at 0 the branch r diverges, so its
    // (s - r)^{-1} term vanishes; f = tr M_s continues across z0 = 0 with
    // value 0 and keeps the mean-value property on a circle straddling it.
    const ResonanceProblem p = rank_one_model();
    const TransferEvaluator base(p);
    const TransferEvaluator shifted = base.shifted(0.5);
    auto f = [&](Complex z) { return shifted.transfer_matrix(z).trace(); };

    for (double t : {1e-2, 1e-4, 1e-6}) {
        const Complex z(t, t);
        const ResonanceSet rs = resonances_at(base.sample(z, 1e-14));
        REQUIRE(rs.size() == 1);
        CHECK(std::abs(1.0 / (0.5 - rs.values[0])) < 2.0 * t);
    }
    CHECK(std::abs(f(Complex(0, 0))) < 1e-12);
    CHECK(mean_value_residual(f, Complex(0, 0), 0.3, 64) < 1e-10);
}

TEST_CASE("absorbing_sweep rejects targets outside the region") {
    const ResonanceProblem p = rank_one_model();
    Region region{-1.0, 1.0, -1.0, 1.0};
    RayFan fan;
    fan.targets = {Complex(5.0, 0.0)};
    CHECK_THROWS_AS(absorbing_sweep(p, region, fan, 4), BadSpecError);
}

TEST_CASE("heatmap renders a self-contained SVG from the documented CSV") {
    const ResonanceProblem p = identity_perturbation({1.0, -1.0});
    const Region region{-2.0, 2.0, 0.4, 2.0};
    const ScanReport rep = grid_scan(p, region, 12, 10, 0.0);
    const ScanTable table = parse_scan_csv(scan_csv(rep));
    CHECK(table.rows.size() == 12 * 10);

    HeatmapOptions opts;
    opts.quantity = "abs_f";
    opts.spectrum_markers = {1.0, -1.0};
    const std::string svg = render_heatmap(table, opts);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(std::count(svg.begin(), svg.end(), '<') > 120);  // one rect per cell
    CHECK_THROWS_AS(render_heatmap(table, HeatmapOptions{"bogus", {}, 640}), BadSpecError);
}
