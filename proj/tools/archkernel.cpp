#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/version.hpp>
#include <openssl/evp.h>
#include <openssl/opensslv.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "archkernel/archkernel.hpp"
#include "archkernel/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace archkernel;

namespace {

constexpr const char* kVersion = "0.1.0";

// Bad flag combinations detected after parsing; reported like parse errors.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Exit code of `check` when the property does not hold.
constexpr int kCheckFailed = 3;

std::string num(double v) { return detail::fmt_double(v); }

// Doubles rounded to 12 significant digits so that JSON output is stable.
json rounded(const json& j) {
    if (j.is_number_float()) return std::strtod(num(j.get<double>()).c_str(), nullptr);
    if (j.is_array() || j.is_object()) {
        json out = j;
        for (auto it = out.begin(); it != out.end(); ++it) *it = rounded(*it);
        return out;
    }
    return j;
}

std::string dump(const json& j) { return rounded(j).dump(2) + "\n"; }

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw UsageError("not a number: '" + item + "'");
        }
        if (used != item.size()) throw UsageError("not a number: '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw UsageError("empty list");
    return out;
}

GeneratorFamily family_from(const std::string& name, std::optional<double> theta, int d) {
    const Family f = parse_family(name);
    switch (f) {
        case Family::Independence: return GeneratorFamily::independence();
        case Family::ClaytonBoundary: return theta ? GeneratorFamily{f, *theta} : GeneratorFamily::clayton_boundary(d);
        default:
            if (!theta) throw UsageError("--theta is required for family " + name);
            return {f, *theta};
    }
}

struct CopulaFlags {
    std::string family = "gumbel";
    std::optional<double> theta;
    int dim = 3;

    void add(CLI::App* app) {
        app->add_option("--family", family, "independence|gumbel|clayton|frank|clayton-boundary")->capture_default_str();
        app->add_option("--theta", theta, "family parameter");
        app->add_option("--dim", dim, "copula dimension")->capture_default_str();
    }
    [[nodiscard]] ArchimedeanCopula<> copula() const {
        return ArchimedeanCopula<>(make_generator(family_from(family, theta, dim), dim));
    }
};

struct IntegrationFlags {
    std::string method;
    std::size_t samples = 100000;
    std::size_t nodes = 128;
    std::optional<std::uint64_t> seed;

    void add(CLI::App* app, const std::string& default_method) {
        method = default_method;
        app->add_option("--method", method, "monte-carlo|tensor-gauss")->capture_default_str();
        app->add_option("--samples", samples, "Monte Carlo draws")->capture_default_str();
        app->add_option("--nodes", nodes, "quadrature nodes per axis")->capture_default_str();
        app->add_option("--seed", seed, "RNG seed (required for monte-carlo)");
    }
    [[nodiscard]] IntegrationSpec spec() const {
        if (parse_integration_method(method) == IntegrationMethod::TensorGauss) return IntegrationSpec::tensor(nodes);
        if (!seed) throw UsageError("--seed is required for monte-carlo integration");
        return IntegrationSpec::monte_carlo(samples, *seed);
    }
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    detail::require(static_cast<bool>(os), Errc::InvalidConfig, "cannot write " + path.string());
    os << text;
}

std::string sample_text(const SampleMatrix& s) {
    std::ostringstream os;
    write_csv(os, s);
    return os.str();
}

void emit(const std::string& text, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << text;
    } else {
        write_text(out, text);
    }
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    detail::require(EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) == 1,
                    Errc::NumericalFailure, "sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

// ---------------------------------------------------------------- subcommands

int cmd_sample(const CopulaFlags& cf, std::size_t n, std::optional<std::uint64_t> seed, const std::string& x,
               const std::string& out) {
    if (!seed) throw UsageError("--seed is required");
    if (cf.family == "fixture-b") {
        emit(sample_text(sample_fixture_b(n, *seed)), out);
        return 0;
    }
    const auto c = cf.copula();
    if (x.empty()) {
        emit(sample_text(sample(c, n, *seed)), out);
    } else {
        emit(sample_text(sample_conditional(conditional_copula(c, parse_list(x)), n, *seed)), out);
    }
    return 0;
}

int cmd_kernel(const CopulaFlags& cf, int l, const std::string& xs, const std::string& ys) {
    const auto x = parse_list(xs);
    const auto y = parse_list(ys);
    if (static_cast<int>(x.size()) != l) throw UsageError("--x must have --l entries");
    const auto c = cf.copula();
    const auto e = kernel_cdf(c, x, y);
    std::string text;
    for (std::size_t i = 0; i < x.size(); ++i) text += "x" + std::to_string(i + 1) + ",";
    for (std::size_t j = 0; j < y.size(); ++j) text += "y" + std::to_string(j + 1) + ",";
    text += "value,branch\n";
    for (double v : x) text += num(v) + ",";
    for (double v : y) text += num(v) + ",";
    text += num(e.value) + "," + std::string(to_string(e.branch)) + "\n";
    std::cout << text;
    return 0;
}

std::vector<double> linspace(double lo, double hi, std::size_t points) {
    std::vector<double> out;
    for (std::size_t i = 0; i < points; ++i)
        out.push_back(points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1));
    return out;
}

// CSV (z, psi, psi_x_<x>..., psi_x_norm_<x>...) for l = 1 conditioning points.
std::string cond_gen_table(const ArchimedeanCopula<>& c, const std::vector<double>& xs, double zmax,
                           std::size_t points) {
    std::vector<ConditionalGenerator<>> raw, norm;
    for (double x : xs) {
        const double p[1] = {x};
        raw.emplace_back(c.generator(), c.dim(), p, false);
        norm.emplace_back(c.generator(), c.dim(), p, true);
    }
    std::string text = "z,psi";
    for (double x : xs) text += ",psi_x_" + num(x);
    for (double x : xs) text += ",psi_x_norm_" + num(x);
    text += "\n";
    for (double z : linspace(0.0, zmax, points)) {
        text += num(z) + "," + num(c.generator().psi(z));
        for (const auto& g : raw) text += "," + num(g.psi(z));
        for (const auto& g : norm) text += "," + num(g.psi(z));
        text += "\n";
    }
    return text;
}

int cmd_zeta(const CopulaFlags& cf, const IntegrationFlags& integ, const std::string& xs) {
    const auto c = cf.copula();
    const auto spec = integ.spec();
    const auto e = xs.empty() ? zeta1(c, spec) : zeta1_conditional(c, parse_list(xs), spec);
    json j{{"value", e.value}, {"std_error", e.std_error}, {"method", std::string(to_string(spec.method))}};
    if (!xs.empty()) j["x"] = parse_list(xs);
    std::cout << dump(j);
    return 0;
}

int cmd_fit(const std::string& input, const std::string& family, const std::string& method) {
    std::ifstream is(input);
    if (!is) throw UsageError("cannot read " + input);
    const auto s = read_csv(is);
    const Family f = parse_family(family);
    const int d = static_cast<int>(s.d);
    FitResult r;
    if (method == "mle") {
        r = fit_mle(f, d, s);
    } else if (method == "tau") {
        r = fit_tau_inversion(f, d, s);
    } else {
        throw UsageError("--method must be mle or tau");
    }
    auto j = to_json(r);
    j["method"] = method;
    std::cout << dump(j);
    return 0;
}

// "family[:theta]" or "fixture-b".
std::optional<ArchimedeanCopula<>> copula_spec(const std::string& text, int d) {
    if (text == "fixture-b") return std::nullopt;
    const auto colon = text.find(':');
    std::optional<double> theta;
    if (colon != std::string::npos) theta = parse_list(text.substr(colon + 1)).at(0);
    return ArchimedeanCopula<>(make_generator(family_from(text.substr(0, colon), theta, d), d));
}

int cmd_metric(const std::string& a_text, const std::string& b_text, int d, const std::string& which,
               const IntegrationFlags& integ, std::size_t resolution) {
    const auto a = copula_spec(a_text, d);
    const auto b = copula_spec(b_text, d);
    const FixtureCopulaB fix;
    double value = 0.0;
    if (which == "duniform") {
        if (a && b) value = d_uniform(*a, *b, resolution);
        else if (a) value = d_uniform(*a, fix, resolution);
        else if (b) value = d_uniform(fix, *b, resolution);
    } else {
        const auto m = parse_kernel_metric(which);
        const auto spec = integ.spec();
        if (a && b) value = kernel_metric(*a, *b, m, spec);
        else if (a) value = kernel_metric(*a, fix, m, spec);
        else if (b) value = kernel_metric(fix, *b, m, spec);
    }
    std::cout << dump({{"metric", which}, {"a", a_text}, {"b", b_text}, {"value", value}});
    return 0;
}

int cmd_check(const std::string& name, const CopulaFlags& cf, const std::string& xs, std::size_t nodes) {
    const auto c = cf.copula();
    json j{{"check", name}, {"copula", c.describe()}};
    bool pass = true;
    if (name == "d-monotone") {
        const auto grid = linspace(0.0, 20.0, 2001);
        const auto rep = validate_d_monotone(c.generator(), grid);
        pass = rep.pass;
        if (rep.first_violation) {
            const auto& v = *rep.first_violation;
            j["first_violation"] = {{"criterion", v.criterion}, {"order", v.order}, {"z", v.z}, {"value", v.value}};
        }
    } else if (name == "log-convexity") {
        std::vector<double> grid;
        for (int i = 0; i < 400; ++i) grid.push_back(0.05 * std::pow(400.0, i / 399.0));
        const auto rep = log_convexity_check(c, grid);
        pass = rep.status == CheckStatus::Pass;
        j["min_second_difference"] = rep.min_second_difference;
        j["worst_z"] = rep.worst_z;
        j["transfer"] = std::string(to_string(rep.transfer));
        if (rep.status == CheckStatus::NotApplicable) j["status"] = "not-applicable";
    } else if (name == "mixture" || name == "box-mixture") {
        const auto zs = linspace(0.1, 5.0, 10);
        MixtureReport rep;
        if (name == "mixture") {
            rep = mixture_identity_check(c, xs.empty() ? 1 : static_cast<int>(parse_list(xs).at(0)), zs, nodes);
        } else {
            rep = box_mixture_check(c, xs.empty() ? std::vector<double>{0.5} : parse_list(xs), zs, nodes);
        }
        pass = rep.max_abs_error <= 1e-3;
        j["max_abs_error"] = rep.max_abs_error;
        j["tolerance"] = 1e-3;
    } else if (name == "truncation") {
        const auto x = xs.empty() ? std::vector<double>{0.5} : parse_list(xs);
        const auto cc = conditional_copula(c, x);
        const auto axis = linspace(0.05, 0.95, 7);
        double worst = 0.0;
        detail::for_each_grid_point(axis, static_cast<std::size_t>(cc.dim()), [&](std::span<const double> u) {
            worst = std::max(worst, std::abs(cc.cdf(u) - cc.cdf_ratio(u)));
        });
        pass = worst <= 1e-10;
        j["max_abs_deviation"] = worst;
        j["tolerance"] = 1e-10;
    } else {
        throw UsageError("unknown check '" + name + "'");
    }
    if (!j.contains("status")) j["status"] = pass ? "pass" : "fail";
    std::cout << dump(j);
    return j["status"] == "fail" ? kCheckFailed : 0;
}

// ---------------------------------------------------------------- experiments

struct RunConfig {
    std::string experiment;
    json echo;
    GeneratorFamily family;
    int dim = 3;
    int l = 1;
    std::vector<std::vector<double>> x_grid;
    std::vector<std::size_t> n_list;
    std::size_t replicates = 30;
    std::uint64_t seed = 0;
    IntegrationSpec spec;
    std::size_t sample_n = 2000;
    double z_max = 5.0;
    std::size_t points = 201;
    fs::path out;
};

std::vector<std::vector<double>> grid_from(const json& j, int l) {
    std::vector<std::vector<double>> out;
    for (const auto& e : j) {
        if (e.is_array()) {
            out.push_back(e.get<std::vector<double>>());
        } else {
            out.emplace_back(static_cast<std::size_t>(l), e.get<double>());
        }
    }
    return out;
}

std::vector<double> steps(double lo, double hi, double step) {
    std::vector<double> out;
    for (int i = 0; lo + i * step <= hi + 1e-12; ++i) out.push_back(std::round((lo + i * step) * 1e12) / 1e12);
    return out;
}

RunConfig parse_config(const json& j) {
    RunConfig c;
    try {
        c.experiment = j.at("experiment").get<std::string>();
        struct Defaults {
            const char* family;
            double theta;
            int dim;
            std::vector<double> x;
            std::vector<std::size_t> n;
            IntegrationSpec spec;
        };
        Defaults def;
        if (c.experiment == "cond-generators") {
            def = {"gumbel", 3.0, 3, {0.05, 0.25, 0.45, 0.65, 0.85}, {}, IntegrationSpec::tensor(128)};
        } else if (c.experiment == "zeta-estimation") {
            def = {"gumbel", 5.0, 3, steps(0.05, 0.95, 0.1), {50, 100, 500, 1000}, IntegrationSpec::tensor(64)};
        } else if (c.experiment == "convergence") {
            def = {"gumbel", 3.0, 3, {0.5}, {1, 10, 100, 1000}, IntegrationSpec::tensor(16)};
        } else if (c.experiment == "singularity") {
            def = {"clayton-boundary", std::nan(""), 3, {}, {}, IntegrationSpec::monte_carlo(100000, 0)};
        } else {
            detail::fail(Errc::InvalidConfig, "unknown experiment '" + c.experiment + "'");
        }
        c.dim = j.value("dim", def.dim);
        c.l = j.value("l", 1);
        const std::string fam = j.value("family", std::string(def.family));
        std::optional<double> theta;
        if (j.contains("theta") && !j["theta"].is_null()) theta = j["theta"].get<double>();
        else if (!std::isnan(def.theta) && fam == def.family) theta = def.theta;
        if (!theta && parse_family(fam) != Family::Independence && parse_family(fam) != Family::ClaytonBoundary)
            detail::fail(Errc::InvalidConfig, "theta is required for family " + fam);
        c.family = family_from(fam, theta, c.dim);
        if (j.contains("x_grid")) {
            c.x_grid = grid_from(j["x_grid"], c.l);
        } else if (c.experiment == "singularity") {
            c.x_grid = {{0.6, 0.6}, {0.4, 0.8}};
        } else {
            c.x_grid = grid_from(json(def.x), c.l);
        }
        c.n_list = j.value("n_list", def.n);
        c.replicates = j.value("replicates", std::size_t{30});
        c.seed = j.at("seed").get<std::uint64_t>();
        c.spec = def.spec;
        c.spec.seed = c.seed;
        if (j.contains("integration")) {
            const auto& s = j["integration"];
            c.spec.method = parse_integration_method(s.value("method", std::string(to_string(c.spec.method))));
            c.spec.nodes_or_samples = s.value("nodes_or_samples", c.spec.nodes_or_samples);
            c.spec.seed = s.value("seed", c.seed);
        }
        c.sample_n = j.value("sample_n", std::size_t{2000});
        c.z_max = j.value("z_max", 5.0);
        c.points = j.value("points", std::size_t{201});
        c.out = j.value("out", std::string("out"));
    } catch (const json::exception& e) {
        detail::fail(Errc::InvalidConfig, std::string("malformed config: ") + e.what());
    }
    c.echo = {{"experiment", c.experiment},
              {"family", std::string(family_name(c.family.id))},
              {"theta", c.family.has_parameter() ? json(c.family.theta) : json(nullptr)},
              {"dim", c.dim},
              {"l", c.l},
              {"x_grid", c.x_grid},
              {"n_list", c.n_list},
              {"replicates", c.replicates},
              {"seed", c.seed},
              {"integration", to_json(c.spec)},
              {"sample_n", c.sample_n},
              {"z_max", c.z_max},
              {"points", c.points},
              {"out", c.out.string()}};
    return c;
}

using Files = std::vector<std::pair<std::string, std::string>>;

std::string x_label(const std::vector<double>& x) {
    std::string s;
    for (std::size_t i = 0; i < x.size(); ++i) s += (i ? "_" : "") + num(x[i]);
    return s;
}

std::string x_cells(const std::vector<double>& x) {
    std::string s;
    for (std::size_t i = 0; i < x.size(); ++i) s += (i ? ";" : "") + num(x[i]);
    return s;
}

Files run_cond_generators(const RunConfig& cfg, json& report) {
    const ArchimedeanCopula<> c(make_generator(cfg.family, cfg.dim));
    Files files;
    std::vector<double> xs;
    for (const auto& x : cfg.x_grid) {
        detail::require(x.size() == 1, Errc::InvalidConfig, "cond-generators conditions on one coordinate");
        xs.push_back(x[0]);
    }
    files.emplace_back("generators.csv", cond_gen_table(c, xs, cfg.z_max, cfg.points));
    std::string zeta = "x,zeta,std_error\n";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto e = zeta1_conditional(c, cfg.x_grid[i], cfg.spec);
        zeta += num(xs[i]) + "," + num(e.value) + "," + num(e.std_error) + "\n";
        const auto s = sample_conditional(conditional_copula(c, cfg.x_grid[i]), cfg.sample_n, derive_seed(cfg.seed, i));
        files.emplace_back("sample_x_" + num(xs[i]) + ".csv", sample_text(s));
    }
    files.emplace_back("zeta_x.csv", zeta);
    report["copula"] = c.describe();
    return files;
}

Files run_zeta_estimation(const RunConfig& cfg, json& report) {
    ZetaStudyConfig sc;
    sc.family = cfg.family;
    sc.dim = cfg.dim;
    sc.x_grid = cfg.x_grid;
    sc.n_list = cfg.n_list;
    sc.replicates = cfg.replicates;
    sc.seed = cfg.seed;
    sc.spec = cfg.spec;
    const auto study = zeta_estimation_study(sc);
    std::string table = "x,n,zeta_true,zeta_hat_mean,zeta_hat_sd\n";
    for (const auto& cell : study.cells)
        table += x_cells(cell.x) + "," + std::to_string(cell.n) + "," + num(cell.zeta_true) + "," +
                 num(cell.zeta_hat_mean) + "," + num(cell.zeta_hat_sd) + "\n";
    std::string fits = "n,replicate,seed,theta_hat,log_likelihood,convergence\n";
    std::string reps = "n,replicate,x,zeta_hat\n";
    for (const auto& r : study.replicates) {
        fits += std::to_string(r.n) + "," + std::to_string(r.replicate) + "," + std::to_string(r.seed) + "," +
                num(r.fit.theta_hat) + "," + num(r.fit.log_likelihood) + "," + std::string(to_string(r.fit.status)) +
                "\n";
        for (std::size_t i = 0; i < r.zeta_hat.size(); ++i)
            reps += std::to_string(r.n) + "," + std::to_string(r.replicate) + "," + x_cells(cfg.x_grid[i]) + "," +
                    num(r.zeta_hat[i]) + "\n";
    }
    report["zeta_true"] = study.zeta_true;
    return {{"zeta_estimation.csv", table}, {"fits.csv", fits}, {"replicates.csv", reps}};
}

Files run_convergence(const RunConfig& cfg, json& report) {
    detail::require(cfg.family.has_parameter(), Errc::InvalidConfig, "convergence needs a parametric family");
    const ArchimedeanCopula<> limit(make_generator(cfg.family, cfg.dim));
    std::vector<ArchimedeanCopula<>> seq;
    for (std::size_t n : cfg.n_list)
        seq.emplace_back(make_generator({cfg.family.id, cfg.family.theta + 1.0 / static_cast<double>(n)}, cfg.dim));
    const auto rep = convergence_report<Generator>(seq, limit, cfg.spec);
    std::string table = "n,theta_n";
    for (const auto& c : rep.criteria) table += "," + c.name;
    table += "\n";
    for (std::size_t i = 0; i < seq.size(); ++i) {
        table += std::to_string(cfg.n_list[i]) + "," + num(seq[i].generator().family().theta);
        for (const auto& c : rep.criteria) table += "," + num(c.values[i]);
        table += "\n";
    }
    const auto x = cfg.x_grid.empty() ? std::vector<double>{} : cfg.x_grid.front();
    const auto zc = zeta1_continuity_check<Generator>(seq, limit, IntegrationSpec::tensor(64), x);
    std::string zeta = "n,theta_n,zeta,std_error,deviation\n";
    for (std::size_t i = 0; i < seq.size(); ++i)
        zeta += std::to_string(cfg.n_list[i]) + "," + num(seq[i].generator().family().theta) + "," +
                num(zc.values[i]) + "," + num(zc.std_errors[i]) + "," + num(zc.deviations[i]) + "\n";
    report["convergence"] = to_json(rep);
    report["zeta_continuity"] = {{"x", x},
                                 {"limit_value", zc.limit_value},
                                 {"deviations", zc.deviations},
                                 {"decreasing_within_noise", zc.decreasing_within_noise}};
    return {{"convergence.csv", table}, {"zeta_continuity.csv", zeta}};
}

Files run_singularity(const RunConfig& cfg, json& report) {
    Files files;
    files.emplace_back("fixture_b_sample.csv", sample_text(sample_fixture_b(cfg.sample_n, cfg.seed)));
    const ArchimedeanCopula<> c(make_generator(cfg.family, cfg.dim));
    const auto mass = density_mass(c, cfg.spec.nodes_or_samples, cfg.spec.seed);
    json profiles = json::array();
    std::vector<StepProfile> ps;
    for (const auto& x : cfg.x_grid) {
        ps.push_back(top_kernel_profile(c, x, cfg.points));
        const auto& p = ps.back();
        profiles.push_back({{"x", x},
                            {"max_jump", p.max_jump},
                            {"observed_location", p.observed_location},
                            {"predicted_location", std::isnan(p.predicted_location) ? json(nullptr)
                                                                                    : json(p.predicted_location)}});
    }
    std::string table = "y";
    for (const auto& x : cfg.x_grid) table += ",kernel_x_" + x_label(x);
    table += "\n";
    for (std::size_t i = 0; i < cfg.points; ++i) {
        table += num(ps.empty() ? 0.0 : ps[0].y[i]);
        for (const auto& p : ps) table += "," + num(p.value[i]);
        table += "\n";
    }
    files.emplace_back("step_profile.csv", table);
    const auto fb = fixture_b_singularity();
    report["copula"] = c.describe();
    report["density_mass"] = {{"value", mass.value}, {"std_error", mass.std_error}};
    report["top_kernel_profiles"] = profiles;
    report["fixture_b"] = {{"min_strip_mass", fb.min_strip_mass},
                           {"strip_area", fb.strip_area},
                           {"second_kernel_max_deviation", fb.second_kernel_max_deviation},
                           {"first_kernel_singular", fb.first_kernel_singular},
                           {"second_kernel_uniform", fb.second_kernel_uniform},
                           {"contrast", fb.first_kernel_singular && fb.second_kernel_uniform}};
    files.emplace_back("singularity_report.json", dump(report));
    return files;
}

int cmd_run(const std::string& config_path, const std::string& out_override) {
    std::ifstream is(config_path);
    if (!is) throw UsageError("cannot read " + config_path);
    json raw;
    try {
        raw = json::parse(is);
    } catch (const json::exception& e) {
        detail::fail(Errc::InvalidConfig, std::string("config is not JSON: ") + e.what());
    }
    auto cfg = parse_config(raw);
    if (!out_override.empty()) cfg.out = out_override;
    cfg.echo["out"] = cfg.out.string();

    const auto start = std::chrono::steady_clock::now();
    json report = json::object();
    Files files;
    if (cfg.experiment == "cond-generators") files = run_cond_generators(cfg, report);
    else if (cfg.experiment == "zeta-estimation") files = run_zeta_estimation(cfg, report);
    else if (cfg.experiment == "convergence") files = run_convergence(cfg, report);
    else files = run_singularity(cfg, report);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    fs::create_directories(cfg.out);
    json listing = json::array();
    for (const auto& [name, text] : files) {
        write_text(cfg.out / name, text);
        listing.push_back({{"path", name}, {"sha256", sha256_hex(text)}, {"bytes", text.size()}});
    }
    const json manifest{{"experiment", cfg.experiment},
                        {"config", cfg.echo},
                        {"versions",
                         {{"archkernel", kVersion},
                          {"boost", BOOST_LIB_VERSION},
                          {"openssl", OPENSSL_VERSION_TEXT},
                          {"compiler", __VERSION__}}},
                        {"wall_time_seconds", wall},
                        {"report", report},
                        {"files", listing}};
    write_text(cfg.out / "manifest.json", dump(manifest));
    std::cout << dump({{"status", "ok"}, {"out", cfg.out.string()}, {"files", listing.size()}});
    return 0;
}

void report_error(std::string_view code, const std::string& message) {
    std::cerr << json{{"error", code}, {"message", message}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Archimedean copulas, Markov kernels and conditional dependence"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CopulaFlags cf;
    IntegrationFlags integ;
    std::size_t n = 1000;
    std::optional<std::uint64_t> seed;
    std::string x, y, out, input, method, a_text, b_text, which, check_name, config;
    int l = 1;
    double zmax = 5.0;
    std::size_t points = 201, resolution = 21, nodes = 64;

    auto* sample_cmd = app.add_subcommand("sample", "draw a sample (CSV); --family fixture-b is allowed");
    cf.add(sample_cmd);
    sample_cmd->add_option("--n", n, "rows")->capture_default_str();
    sample_cmd->add_option("--seed", seed, "RNG seed (required)");
    sample_cmd->add_option("--x", x, "conditioning point a,b,...: sample the conditional copula");
    sample_cmd->add_option("--out", out, "output file (default stdout)");

    auto* kernel_cmd = app.add_subcommand("kernel", "Markov kernel K(x, [0,y]) as a CSV row");
    cf.add(kernel_cmd);
    kernel_cmd->add_option("--l", l, "number of conditioning coordinates")->capture_default_str();
    kernel_cmd->add_option("--x", x, "conditioning point a,b,...")->required();
    kernel_cmd->add_option("--y", y, "upper corner c,d,...")->required();

    auto* cond_cmd = app.add_subcommand("cond-gen", "generator and conditional generators on a z grid (CSV)");
    cf.add(cond_cmd);
    cond_cmd->add_option("--x", x, "conditioning values (one curve each)")->required();
    cond_cmd->add_option("--zmax", zmax, "largest z")->capture_default_str();
    cond_cmd->add_option("--points", points, "grid points")->capture_default_str();

    auto* zeta_cmd = app.add_subcommand("zeta1", "zeta_1 of the copula (JSON)");
    cf.add(zeta_cmd);
    integ.add(zeta_cmd, "monte-carlo");

    auto* zetax_cmd = app.add_subcommand("zeta1x", "zeta_1 of the conditional copula at x (JSON)");
    cf.add(zetax_cmd);
    zetax_cmd->add_option("--x", x, "conditioning point a,b,...")->required();
    IntegrationFlags integ_x;
    integ_x.add(zetax_cmd, "monte-carlo");

    auto* fit_cmd = app.add_subcommand("fit", "fit theta to a sample CSV (JSON)");
    fit_cmd->add_option("--input", input, "sample CSV")->required();
    std::string fit_family = "gumbel";
    fit_cmd->add_option("--family", fit_family, "family to fit")->capture_default_str();
    method = "mle";
    fit_cmd->add_option("--method", method, "mle|tau")->capture_default_str();

    auto* metric_cmd = app.add_subcommand("metric", "distance between two copulas (JSON)");
    metric_cmd->add_option("--a", a_text, "family[:theta] or fixture-b")->required();
    metric_cmd->add_option("--b", b_text, "family[:theta] or fixture-b")->required();
    int metric_dim = 3;
    metric_cmd->add_option("--dim", metric_dim, "dimension")->capture_default_str();
    which = "D1";
    metric_cmd->add_option("--which", which, "D1|D2|Dinf|duniform")->capture_default_str();
    metric_cmd->add_option("--resolution", resolution, "grid points per axis for duniform")->capture_default_str();
    IntegrationFlags integ_m;
    integ_m.nodes = 24;
    integ_m.add(metric_cmd, "tensor-gauss");

    auto* check_cmd = app.add_subcommand("check", "structural checks (JSON); exit 3 when a check fails");
    check_cmd->add_option("name", check_name, "d-monotone|log-convexity|mixture|box-mixture|truncation")->required();
    cf.add(check_cmd);
    check_cmd->add_option("--x", x, "conditioning point (box-mixture, truncation) or l (mixture)");
    check_cmd->add_option("--nodes", nodes, "quadrature nodes per axis")->capture_default_str();

    auto* run_cmd = app.add_subcommand("run", "run an experiment from a JSON config");
    run_cmd->add_option("--config", config, "config file")->required();
    run_cmd->add_option("--out", out, "output directory (overrides the config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*sample_cmd) return cmd_sample(cf, n, seed, x, out);
        if (*kernel_cmd) return cmd_kernel(cf, l, x, y);
        if (*cond_cmd) {
            std::cout << cond_gen_table(cf.copula(), parse_list(x), zmax, points);
            return 0;
        }
        if (*zeta_cmd) return cmd_zeta(cf, integ, "");
        if (*zetax_cmd) return cmd_zeta(cf, integ_x, x);
        if (*fit_cmd) return cmd_fit(input, fit_family, method);
        if (*metric_cmd) return cmd_metric(a_text, b_text, metric_dim, which, integ_m, resolution);
        if (*check_cmd) return cmd_check(check_name, cf, x, nodes);
        if (*run_cmd) return cmd_run(config, out);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        report_error(to_string(e.code()), e.what());
        return 1;
    } catch (const std::exception& e) {
        report_error("InternalError", e.what());
        return 1;
    }
    return 2;
}
