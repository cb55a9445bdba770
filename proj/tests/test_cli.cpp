#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code;
};

RunResult run(const std::string& args) {
    const std::string cmd = std::string(RESATLAS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return {WEXITSTATUS(status)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("resatlas_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("gen + verify round trip exits 0 and is deterministic") {
    TempDir dir;
    const std::string p1 = dir.file("p1.json"), p2 = dir.file("p2.json");
    CHECK(run("gen --ensemble jacobi --n 8 --seed 1 --out " + p1).exit_code == 0);
    CHECK(run("gen --ensemble jacobi --n 8 --seed 1 --out " + p2).exit_code == 0);
    CHECK(slurp(p1) == slurp(p2));
    CHECK(run("verify --problem " + p1 + " --samples 32 --seed 7 --tol 1e-8").exit_code == 0);

    const std::string g = dir.file("g.json");
    CHECK(run("gen --ensemble dense-gaussian --n 10 --k 3 --seed 4 --out " + g).exit_code == 0);
    CHECK(run("verify --problem " + g + " --samples 24 --seed 3 --tol 1e-8").exit_code == 0);
}

TEST_CASE("verify rejects a corrupted (non-Hermitian j) problem file with exit 2") {
    TempDir dir;
    const std::string bad = dir.file("bad.json");
    std::ofstream(bad) << R"({"n":1,"k":2,"h0":[0],"f":[[[1,0]],[[0,0]]],)"
                       << R"("j":[[[0,0],[1,0]],[[0,0],[0,0]]]})";
    CHECK(run("verify --problem " + bad + " --samples 4").exit_code == 2);
    CHECK(run("verify --problem " + dir.file("missing.json")).exit_code == 2);
}

TEST_CASE("usage errors exit 2") {
    CHECK(run("verify").exit_code == 2);           // missing required option
    CHECK(run("frobnicate").exit_code == 2);       // unknown subcommand
    TempDir dir;
    const std::string p = dir.file("p.json");
    CHECK(run("gen --ensemble diagonal --n 4 --out " + p).exit_code == 0);
    CHECK(run("scan --problem " + p + " --region 2,1,0,1 --out " + dir.file("s.csv")).exit_code == 2);
}

TEST_CASE("scan writes the documented row count and is thread-count independent") {
    TempDir dir;
    const std::string p = dir.file("p.json");
    CHECK(run("gen --ensemble dense-gaussian --n 8 --k 3 --seed 11 --out " + p).exit_code == 0);

    const std::string csv1 = dir.file("s1.csv"), csv2 = dir.file("s2.csv");
    const std::string json1 = dir.file("s1.json"), json2 = dir.file("s2.json");
    CHECK(run("scan --problem " + p + " --region -2,2,0.1,2 --grid 24x16 --shift 0 --threads 1 --out " +
              csv1 + " --json " + json1)
              .exit_code == 0);
    CHECK(run("scan --problem " + p + " --region -2,2,0.1,2 --grid 24x16 --shift 0 --threads 4 --out " +
              csv2 + " --json " + json2)
              .exit_code == 0);

    const std::string a = slurp(csv1);
    CHECK(a == slurp(csv2));
    CHECK(slurp(json1) == slurp(json2));
    CHECK(std::count(a.begin(), a.end(), '\n') == 24 * 16 + 1);
}

TEST_CASE("trace, branch-points, classify, and plot run end to end") {
    TempDir dir;
    const std::string p = dir.file("p.json");
    // engineered pair with a square-root branch point at z = i
    std::ofstream(p) << R"({"n":2,"k":2,"h0":[1,-1],)"
                     << R"("f":[[[1,0],[0,0]],[[0,0],[1,0]]],)"
                     << R"("j":[[[1,0],[0.70710678118654752,0]],[[0.70710678118654752,0],[1,0]]]})";

    const std::string tr = dir.file("t.csv");
    CHECK(run("trace --problem " + p + " --path \"-1+0.5i;1+0.5i\" --out " + tr).exit_code == 0);
    const std::string trace_csv = slurp(tr);
    CHECK(trace_csv.rfind("step,re_z,im_z,branch,re_r,im_r\n", 0) == 0);

    const std::string bp = dir.file("bp.json");
    CHECK(run("branch-points --problem " + p + " --region -0.6,0.6,0.4,1.6 --max-depth 6 --out " +
              bp).exit_code == 0);
    CHECK(slurp(bp).find("resatlas-branch-points/1") != std::string::npos);
    CHECK(slurp(bp).find("\"periods\"") != std::string::npos);

    // region containing the spectrum is rejected as bad input
    CHECK(run("branch-points --problem " + p + " --region -2,2,-1,1 --max-depth 4 --out " +
              dir.file("bp2.json")).exit_code == 2);

    const std::string cl = dir.file("cl.json");
    CHECK(run("classify --problem " + p + " --target 0+1i --directions 4 --decades 4 --out " +
              cl).exit_code == 0);
    CHECK(slurp(cl).find("branching") != std::string::npos);

    const std::string sc = dir.file("s.csv");
    CHECK(run("scan --problem " + p + " --region -2,2,0.2,2 --grid 16x12 --out " + sc).exit_code == 0);
    const std::string svg = dir.file("plot.svg");
    CHECK(run("plot --csv " + sc + " --quantity abs_f --spectrum 1,-1 --out " + svg).exit_code == 0);
    const std::string svg_text = slurp(svg);
    CHECK(svg_text.rfind("<svg", 0) == 0);
    CHECK(svg_text.find("</svg>") != std::string::npos);
}

TEST_CASE("classify flags rank-one pole as pole_like with exit 0") {
    TempDir dir;
    const std::string p = dir.file("r1.json");
    std::ofstream(p) << R"({"n":2,"k":1,"h0":[1,-1],)"
                     << R"("f":[[[0.70710678118654752,0],[0.70710678118654752,0]]],)"
                     << R"("j":[[[1,0]]]})";
    const std::string out = dir.file("cls.json");
    CHECK(run("classify --problem " + p + " --target 0 --directions 8 --out " + out).exit_code == 0);
    const std::string doc = slurp(out);
    CHECK(doc.find("\"pole_like\"") != std::string::npos);
    CHECK(doc.find("\"order\": 1") != std::string::npos);
    CHECK(doc.find("suspected_absorbing") == std::string::npos);

    // rank-one verify also runs the Herglotz positivity row
    CHECK(run("verify --problem " + p + " --samples 16 --seed 2").exit_code == 0);
}

TEST_CASE("closed-loop trace runs and reports its samples") {
    TempDir dir;
    const std::string p = dir.file("p.json");
    std::ofstream(p) << R"({"n":2,"k":2,"h0":[1,-1],)"
                     << R"("f":[[[1,0],[0,0]],[[0,0],[1,0]]],)"
                     << R"("j":[[[1,0],[0.70710678118654752,0]],[[0.70710678118654752,0],[1,0]]]})";
    const std::string tr = dir.file("loop.csv");
    CHECK(run("trace --problem " + p +
              " --path \"0.4+1i;0+1.4i;-0.4+1i;0-0.6i...\" --out " + tr).exit_code == 2);
    CHECK(run("trace --problem " + p + " --path \"0.5+1i;0+1.5i;-0.5+1i;0+0.5i\" --closed --out " +
              tr).exit_code == 0);
    const std::string csv = slurp(tr);
    CHECK(csv.rfind("step,re_z,im_z,branch,re_r,im_r\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') > 20);
}
