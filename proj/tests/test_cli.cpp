#include <catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

fs::path scratch() {
    static const fs::path dir = [] {
        auto p = fs::temp_directory_path() / ("archkernel_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Result run(const std::string& args) {
    const auto err_path = scratch() / "stderr.txt";
    const std::string cmd = std::string(ARCHKERNEL_CLI_PATH) + " " + args + " 2>" + err_path.string();
    Result r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t got = 0;
    while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
    const int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err_path);
    return r;
}

std::string sha256_file(const fs::path& p) {
    FILE* pipe = ::popen(("sha256sum " + p.string()).c_str(), "r");
    char buf[65] = {};
    const std::size_t got = std::fread(buf, 1, 64, pipe);
    ::pclose(pipe);
    return std::string(buf, got);
}

}  // namespace

TEST_CASE("kernel subcommand", "[cli]") {
    const auto r = run("kernel --family clayton --theta 1 --dim 3 --l 1 --x 0.5 --y 0.5,0.5");
    CHECK(r.code == 0);
    CHECK(r.out == "x1,y1,y2,value,branch\n0.5,0.5,0.5,0.25,regular\n");

    const auto zero = run("kernel --family independence --dim 3 --l 2 --x 0,0.5 --y 0.3");
    CHECK(zero.code == 0);
    CHECK(zero.out.find(",1,in-zero-margin\n") != std::string::npos);
}

TEST_CASE("usage errors exit with 2", "[cli]") {
    CHECK(run("").code == 2);
    CHECK(run("sample --family gumbel --theta 2 --n 5").code == 2);
    CHECK(run("kernel --family gumbel --theta 2 --x 0.5").code == 2);
    CHECK(run("kernel --family gumbel --theta 2 --l 2 --x 0.5 --y 0.5,0.5").code == 2);
    CHECK(run("kernel --family gumbel --l 1 --x 0.5 --y 0.5,0.5").code == 2);
    CHECK(run("zeta1 --family gumbel --theta 2 --dim 2").code == 2);
    CHECK(run("sample --family gumbel --theta 2 --seed 1 --bogus").code == 2);
    CHECK(run("check no-such-check --family gumbel --theta 2").code == 2);
    CHECK(run("--help").code == 0);
}

TEST_CASE("domain errors exit with 1 and JSON", "[cli]") {
    const auto r = run("kernel --family gumbel --theta 0.5 --dim 3 --l 1 --x 0.5 --y 0.5,0.5");
    CHECK(r.code == 1);
    const auto j = json::parse(r.err);
    CHECK(j["error"] == "InadmissibleParameter");
    CHECK(j["message"].get<std::string>().find("theta") != std::string::npos);

    const auto boundary = run("sample --family clayton-boundary --dim 3 --n 10 --seed 1");
    CHECK(boundary.code == 1);
    CHECK(json::parse(boundary.err)["error"] == "NotStrict");

    const auto cfg = scratch() / "bad.json";
    std::ofstream(cfg) << R"({"experiment":"no-such","seed":1})";
    const auto bad = run("run --config " + cfg.string() + " --out " + (scratch() / "bad").string());
    CHECK(bad.code == 1);
    CHECK(json::parse(bad.err)["error"] == "InvalidConfig");
}

TEST_CASE("checks report pass", "[cli]") {
    const auto r = run("check d-monotone --family gumbel --theta 3 --dim 3");
    CHECK(r.code == 0);
    CHECK(json::parse(r.out)["status"] == "pass");
    for (const char* args : {"log-convexity --family clayton --theta 2 --dim 3",
                             "mixture --family frank --theta 4 --dim 3",
                             "box-mixture --family gumbel --theta 1.5 --dim 3 --x 0.4",
                             "truncation --family clayton --theta 0.5 --dim 4 --x 0.3,0.6"}) {
        INFO(args);
        const auto c = run(std::string("check ") + args);
        CHECK(c.code == 0);
        CHECK(json::parse(c.out)["status"] == "pass");
    }
    const auto na = run("check log-convexity --family clayton-boundary --dim 3");
    CHECK(na.code == 0);
    CHECK(json::parse(na.out)["status"] == "not-applicable");
}

TEST_CASE("sampling and fitting through files", "[cli]") {
    const auto a = scratch() / "a.csv";
    const auto b = scratch() / "b.csv";
    REQUIRE(run("sample --family gumbel --theta 3 --dim 3 --n 400 --seed 9 --out " + a.string()).code == 0);
    REQUIRE(run("sample --family gumbel --theta 3 --dim 3 --n 400 --seed 9 --out " + b.string()).code == 0);
    CHECK(slurp(a) == slurp(b));
    const auto other = run("sample --family gumbel --theta 3 --dim 3 --n 400 --seed 10");
    CHECK(other.out != slurp(a));
    CHECK(slurp(a).rfind("# copula=", 0) == 0);

    const auto fit = run("fit --input " + a.string() + " --family gumbel");
    REQUIRE(fit.code == 0);
    const auto j = json::parse(fit.out);
    CHECK(j["n"] == 400);
    CHECK(std::abs(j["theta_hat"].get<double>() - 3.0) < 0.5);
    const auto tau = json::parse(run("fit --input " + a.string() + " --family gumbel --method tau").out);
    CHECK(std::abs(tau["theta_hat"].get<double>() - j["theta_hat"].get<double>()) < 0.5);

    const auto cond = run("sample --family gumbel --theta 3 --dim 3 --n 50 --seed 2 --x 0.4");
    CHECK(cond.code == 0);
    CHECK(cond.out.find("\nu1,u2\n") != std::string::npos);
    const auto fix = run("sample --family fixture-b --n 20 --seed 2");
    CHECK(fix.code == 0);
}

TEST_CASE("zeta and metric subcommands", "[cli]") {
    const auto mc = json::parse(run("zeta1x --family gumbel --theta 5 --dim 3 --x 0.5 --seed 7").out);
    const auto quad = json::parse(run("zeta1x --family gumbel --theta 5 --dim 3 --x 0.5 --method tensor-gauss").out);
    CHECK(mc["std_error"].get<double>() > 0.0);
    CHECK(std::abs(mc["value"].get<double>() - quad["value"].get<double>()) < 4.0 * mc["std_error"].get<double>());

    const auto z = json::parse(run("zeta1 --family independence --dim 2 --method tensor-gauss").out);
    CHECK(std::abs(z["value"].get<double>()) < 2e-3);

    const auto d1 = json::parse(
        run("metric --a independence --b fixture-b --which D1 --method monte-carlo --samples 100000 --seed 3").out);
    CHECK(std::abs(d1["value"].get<double>() - 1.0 / 6.0) < 5e-3);
    const auto du = json::parse(run("metric --a gumbel:3 --b gumbel:3 --which duniform").out);
    CHECK(du["value"].get<double>() == 0.0);

    const auto cg = run("cond-gen --family gumbel --theta 3 --dim 3 --x 0.05,0.85 --points 11 --zmax 2");
    CHECK(cg.code == 0);
    CHECK(cg.out.rfind("z,psi,psi_x_0.05,psi_x_0.85,psi_x_norm_0.05,psi_x_norm_0.85\n0,1,1,1,1,1\n", 0) == 0);
}

TEST_CASE("experiment runs are reproducible and hashed", "[cli]") {
    const auto cfg = scratch() / "cg.json";
    std::ofstream(cfg) << R"({"experiment":"cond-generators","seed":5,"sample_n":300,"points":41})";
    const auto one = scratch() / "run1";
    const auto two = scratch() / "run2";
    REQUIRE(run("run --config " + cfg.string() + " --out " + one.string()).code == 0);
    REQUIRE(run("run --config " + cfg.string() + " --out " + two.string()).code == 0);

    const auto manifest = json::parse(slurp(one / "manifest.json"));
    CHECK(manifest["config"]["seed"] == 5);
    CHECK(manifest["versions"]["archkernel"] == "0.1.0");
    CHECK(manifest["wall_time_seconds"].get<double>() >= 0.0);
    std::size_t listed = 0;
    for (const auto& f : manifest["files"]) {
        const auto name = f["path"].get<std::string>();
        INFO(name);
        CHECK(sha256_file(one / name) == f["sha256"].get<std::string>());
        CHECK(fs::file_size(one / name) == f["bytes"].get<std::size_t>());
        CHECK(slurp(one / name) == slurp(two / name));
        ++listed;
    }
    std::size_t on_disk = 0;
    for (const auto& e : fs::directory_iterator(one)) on_disk += e.path().filename() != "manifest.json";
    CHECK(listed == on_disk);
    CHECK(fs::exists(one / "generators.csv"));
    CHECK(fs::exists(one / "sample_x_0.05.csv"));

    const auto sing = scratch() / "sing.json";
    std::ofstream(sing) << R"({"experiment":"singularity","seed":3,"integration":{"nodes_or_samples":20000}})";
    REQUIRE(run("run --config " + sing.string() + " --out " + (scratch() / "sing").string()).code == 0);
    const auto rep = json::parse(slurp(scratch() / "sing" / "singularity_report.json"));
    CHECK(rep["fixture_b"]["contrast"] == true);
    CHECK(rep["density_mass"]["value"].get<double>() <= 5e-3);
}
