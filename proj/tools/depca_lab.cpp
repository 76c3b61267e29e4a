#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "depca/depca.hpp"
#include "depca/dichotomy.hpp"
#include "depca/errors.hpp"
#include "depca/expression.hpp"
#include "depca/io.hpp"
#include "depca/lasota.hpp"
#include "depca/perturb.hpp"
#include "depca/rap.hpp"
#include "depca/reduction.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace depca;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Options {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::int64_t> m;
    std::optional<std::pair<std::int64_t, std::int64_t>> window;
    std::optional<double> tol;
    std::optional<double> nu;
    std::optional<double> gamma;
    std::optional<double> epsilon;
    std::optional<std::uint64_t> seed;
};

json load_config(const Options& opt) {
    json cfg;
    if (!opt.config_path.empty()) {
        try {
            cfg = json::parse(read_text(opt.config_path));
        } catch (const json::exception& e) {
            throw ConfigError("config parse error: " + std::string(e.what()));
        }
    }
    if (opt.m) cfg["window"]["m"] = *opt.m;
    if (opt.window) {
        cfg["window"]["start"] = opt.window->first;
        cfg["window"]["end"] = opt.window->second;
    }
    if (opt.tol) cfg["tol"] = *opt.tol;
    if (opt.nu) cfg["perturb"]["nu"] = *opt.nu;
    if (opt.gamma) cfg["lasota"]["gamma"] = *opt.gamma;
    if (opt.epsilon) cfg["rap"]["epsilon"] = *opt.epsilon;
    if (opt.seed) cfg["seed"] = *opt.seed;
    return cfg;
}

std::uint64_t config_seed(const json& cfg) {
    return cfg.value("seed", std::uint64_t{12345});
}

double config_tol(const json& cfg) { return cfg.value("tol", 1e-10); }

int config_substeps(const json& cfg) { return cfg.value("substeps", 4); }

std::optional<Mat> config_projection(const json& cfg) {
    if (!cfg.contains("P")) return std::nullopt;
    const auto& jp = cfg.at("P");
    auto rows = static_cast<Eigen::Index>(jp.size());
    Mat P(rows, rows);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < rows; ++j)
            P(i, j) = jp.at(static_cast<size_t>(i)).at(static_cast<size_t>(j))
                          .get<double>();
    return P;
}

/// Scalar function of t from a JSON number or expression string.
ScalarFn scalar_fn(const json& j, const std::string& name) {
    if (j.is_number()) {
        double v = j.get<double>();
        return [v](double) { return v; };
    }
    if (j.is_string()) {
        Expression expr = Expression::parse(j.get<std::string>());
        for (const auto& v : expr.variables())
            if (v != "t")
                throw ConfigError(name + ": unknown variable '" + v +
                                  "' (only t is allowed)");
        return [expr](double t) { return expr.eval({{"t", t}}); };
    }
    throw ConfigError(name + ": expected a number or an expression string");
}

void write_manifest(const fs::path& dir, const std::string& subcommand,
                    const Options& opt, std::uint64_t seed, double wall_s) {
    json manifest;
    manifest["subcommand"] = subcommand;
    manifest["config"] = opt.config_path;
    manifest["output_dir"] = dir.string();
    manifest["seed"] = seed;
    manifest["version"] = kVersion;
    manifest["wall_time_s"] = wall_s;
    write_text((dir / "manifest.json").string(), json_dump(manifest));
}

void write_trajectory(const fs::path& path, const HybridSolution& sol) {
    std::vector<std::string> header{"t"};
    for (Eigen::Index i = 0; i < sol.dim(); ++i)
        header.push_back("x" + std::to_string(i));
    CsvWriter csv(header);
    for (std::int64_t k = 0; k < sol.grid().size(); ++k) {
        std::vector<std::string> row{format_double(sol.grid().node(k).value())};
        for (Eigen::Index i = 0; i < sol.dim(); ++i)
            row.push_back(format_double(sol.at_node(k)(i)));
        csv.row(row);
    }
    csv.write(path.string());
}

json dichotomy_summary(const DichotomyData& dd) {
    json j;
    j["alpha"] = dd.alpha();
    j["K"] = dd.K();
    switch (dd.provenance()) {
        case DichotomyProvenance::UserSupplied: j["provenance"] = "user"; break;
        case DichotomyProvenance::Spectral: j["provenance"] = "spectral"; break;
        case DichotomyProvenance::Fitted: j["provenance"] = "fitted"; break;
    }
    std::vector<std::vector<double>> P;
    for (Eigen::Index i = 0; i < dd.dim(); ++i) {
        std::vector<double> row;
        for (Eigen::Index jj = 0; jj < dd.dim(); ++jj) row.push_back(dd.P()(i, jj));
        P.push_back(row);
    }
    j["P"] = P;
    return j;
}

struct Pipeline {
    TimeGrid grid;
    CoefficientSystem system;
    HybridKernel kernel;
    DiscreteSystem disc;
};

Pipeline build_pipeline(const json& cfg) {
    TimeGrid grid = grid_from_json(cfg.at("window"));
    CoefficientSystem system = system_from_json(cfg.at("system"), grid);
    HybridKernel kernel = hybrid_kernels(system, grid, config_substeps(cfg));
    DiscreteSystem disc = reduce(kernel, system);
    return Pipeline{grid, system, kernel, disc};
}

json certificate_summary(const ContractionCertificate& cert) {
    json j;
    j["kappa"] = cert.kappa;
    j["kappa_observed"] = cert.kappa_observed;
    j["radius_check"] = cert.radius_check;
    j["issued"] = cert.issued;
    j["iterations"] = cert.iterations;
    j["final_residual"] = cert.final_residual;
    return j;
}

int cmd_solve(const json& cfg, const fs::path& out) {
    Pipeline pipe = build_pipeline(cfg);
    DichotomyData dd = detect_dichotomy(pipe.disc, config_projection(cfg));
    HybridSolution sol =
        rap_solution(pipe.system, pipe.kernel, dd, config_tol(cfg));
    write_trajectory(out / "trajectory.csv", sol);
    json summary = dichotomy_summary(dd);
    summary["sup_norm"] = sol.sup_norm();
    summary["window"] = {sol.grid().t_start(), sol.grid().t_end()};
    write_text((out / "summary.json").string(), json_dump(summary));
    return 0;
}

int cmd_reduce(const json& cfg, const fs::path& out) {
    Pipeline pipe = build_pipeline(cfg);
    Eigen::Index q = pipe.disc.dim();
    std::vector<std::string> header{"n"};
    for (Eigen::Index i = 0; i < q; ++i)
        for (Eigen::Index j = 0; j < q; ++j)
            header.push_back("C" + std::to_string(i) + std::to_string(j));
    for (Eigen::Index i = 0; i < q; ++i) header.push_back("h" + std::to_string(i));
    CsvWriter csv(header);
    for (std::int64_t n = pipe.disc.n_min(); n < pipe.disc.n_max(); ++n) {
        std::vector<std::string> row{std::to_string(n)};
        for (Eigen::Index i = 0; i < q; ++i)
            for (Eigen::Index j = 0; j < q; ++j)
                row.push_back(format_double(pipe.disc.C(n)(i, j)));
        for (Eigen::Index i = 0; i < q; ++i)
            row.push_back(format_double(pipe.disc.h(n)(i)));
        csv.row(row);
    }
    csv.write((out / "reduction.csv").string());
    return 0;
}

int cmd_dichotomy(const json& cfg, const fs::path& out) {
    Pipeline pipe = build_pipeline(cfg);
    DichotomyData dd = detect_dichotomy(pipe.disc, config_projection(cfg));
    write_text((out / "dichotomy.json").string(), json_dump(dichotomy_summary(dd)));
    return 0;
}

int cmd_rap_scan(const json& cfg, const fs::path& out) {
    const json& rc = cfg.at("rap");
    double epsilon = rc.value("epsilon", 0.5);
    std::int64_t T0 = rc.value("T0", std::int64_t{500});
    std::int64_t T = rc.value("T", std::int64_t{2000});
    std::int64_t tau_max = rc.value("tau_max", std::int64_t{100});
    std::string mode = rc.value("mode", "sequence");
    std::int64_t range = T + tau_max;

    RapReport rep;
    if (mode == "sequence") {
        SequenceWindow u(-range, range, 1);
        if (!rc.contains("source") ||
            (rc.at("source").is_string() && rc.at("source") == "demo")) {
            u = demo_sequence(-range, range);
        } else {
            ScalarFn fn = scalar_fn(rc.at("source").at("expression"), "rap.source");
            for (std::int64_t n = -range; n <= range; ++n)
                u.at(n)(0) = fn(static_cast<double>(n));
        }
        rep = scan_sequence(u, epsilon, T0, T, tau_max);
    } else if (mode == "RAP" || mode == "ZRAP") {
        std::int64_t m = rc.value("m", std::int64_t{10});
        ScalarFn fn = scalar_fn(rc.at("source").at("expression"), "rap.source");
        TimeGrid grid(-range, range, m);
        HybridSolution samples(grid, 1);
        for (std::int64_t k = 0; k < grid.size(); ++k)
            samples.at_node(k) = Vec::Constant(1, fn(grid.node(k).value()));
        rep = scan_function(samples, epsilon, T0, T, tau_max,
                            mode == "RAP" ? ScanMode::RAP : ScanMode::ZRAP);
    } else {
        throw ConfigError("rap.mode must be sequence, RAP or ZRAP");
    }

    CsvWriter csv({"tau", "variation", "accepted"});
    for (const auto& [tau, variation] : rep.remote_variation)
        csv.row({std::to_string(tau), format_double(variation),
                 variation < rep.epsilon ? "1" : "0"});
    csv.write((out / "rap_scan.csv").string());
    json summary;
    summary["epsilon"] = rep.epsilon;
    summary["verdict"] = rep.verdict;
    summary["max_gap"] = rep.max_gap;
    summary["density_bound"] = rep.density_bound;
    summary["accepted_count"] = rep.taus_found.size();
    summary["T0"] = rep.T0;
    summary["T"] = rep.T;
    if (!rep.note.empty()) summary["note"] = rep.note;
    write_text((out / "summary.json").string(), json_dump(summary));
    return 0;
}

PerturbFn perturb_expression(const std::string& text) {
    Expression expr = Expression::parse(text);
    for (const auto& v : expr.variables())
        if (v != "t" && v != "x" && v != "y" && v != "nu")
            throw ConfigError("perturb.g: unknown variable '" + v + "'");
    return [expr](double t, const Vec& x, const Vec& y, double nu) {
        Vec g(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i)
            g(i) = expr.eval({{"t", t}, {"x", x(i)}, {"y", y(i)}, {"nu", nu}});
        return g;
    };
}

/// Reference solution on its own full kernel, so the perturbation stage sees
/// a reference defined on every node of the (inner) grid it works on.
struct Reference {
    HybridKernel kernel;
    DiscreteSystem disc;
    DichotomyData dd;
    HybridSolution xi;
};

Reference build_reference(const json& cfg, const Pipeline& pipe) {
    DichotomyData dd0 = detect_dichotomy(pipe.disc, config_projection(cfg));
    auto bs = bounded_solution(pipe.disc, dd0, 0.1 * config_tol(cfg));
    TimeGrid inner(bs.y.n_min(), bs.y.n_max(), pipe.grid.subdivisions());
    HybridKernel kernel = hybrid_kernels(pipe.system, inner, config_substeps(cfg));
    DiscreteSystem disc = reduce(kernel, pipe.system);
    DichotomyData dd = detect_dichotomy(disc, config_projection(cfg));
    HybridSolution xi = reconstruct(kernel, pipe.system, bs.y, 1e-5);
    return Reference{std::move(kernel), std::move(disc), std::move(dd),
                     std::move(xi)};
}

int cmd_perturb(const json& cfg, const fs::path& out) {
    Pipeline pipe = build_pipeline(cfg);
    const json& pc = cfg.at("perturb");
    double nu = pc.value("nu", 0.1);
    double r = pc.value("r", 0.5);
    PerturbFn g = perturb_expression(pc.at("g").get<std::string>());

    Reference ref = build_reference(cfg, pipe);
    const HybridSolution& xi = ref.xi;
    auto center = [&xi](double t) {
        double lo = static_cast<double>(xi.grid().t_start());
        double hi = static_cast<double>(xi.grid().t_end());
        return xi.value(std::min(std::max(t, lo), hi));
    };
    Perturbation pert = measure_perturbation(g, nu, r, ref.kernel.grid(), center,
                                             config_seed(cfg));
    HybridFixedPoint fp = solve_perturbed_depca(pipe.system, ref.kernel, ref.dd,
                                                pert, xi, config_tol(cfg));
    write_trajectory(out / "trajectory.csv", fp.psi);
    json summary = certificate_summary(fp.cert);
    summary["nu"] = nu;
    summary["r"] = r;
    summary["M0"] = pert.M0;
    summary["g_norm"] = pert.g_norm;
    write_text((out / "certificate.json").string(), json_dump(summary));
    return 0;
}

int cmd_nonlinear(const json& cfg, const fs::path& out) {
    Pipeline pipe = build_pipeline(cfg);
    const json& nc = cfg.at("nonlinear");
    double r = nc.value("r", 0.5);
    Expression expr = Expression::parse(nc.at("f").get<std::string>());
    for (const auto& v : expr.variables())
        if (v != "t" && v != "x" && v != "y")
            throw ConfigError("nonlinear.f: unknown variable '" + v + "'");
    NonlinearRhs f = [expr](double t, const Vec& x, const Vec& y) {
        Vec g(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i)
            g(i) = expr.eval({{"t", t}, {"x", x(i)}, {"y", y(i)}});
        return g;
    };

    Reference ref = build_reference(cfg, pipe);
    HybridFixedPoint fp =
        solve_nonlinear(f, ref.xi, r, config_tol(cfg), config_substeps(cfg),
                        config_projection(cfg), 200, config_seed(cfg));
    write_trajectory(out / "trajectory.csv", fp.psi);
    write_text((out / "certificate.json").string(),
               json_dump(certificate_summary(fp.cert)));
    return 0;
}

int cmd_lasota(const json& cfg, const fs::path& out) {
    TimeGrid grid = grid_from_json(cfg.at("window"));
    const json& lc = cfg.at("lasota");
    double gamma = lc.value("gamma", 0.1);
    LasotaParams params =
        lasota_params(scalar_fn(lc.at("delta"), "lasota.delta"),
                      scalar_fn(lc.at("p"), "lasota.p"), gamma,
                      lc.value("delta_minus", 0.5));

    LasotaSolveResult result = rap_positive_solution(
        params, grid, config_tol(cfg), config_substeps(cfg));
    write_trajectory(out / "trajectory.csv", result.psi);
    json summary;
    summary["gamma"] = gamma;
    summary["kappa"] = result.kappa;
    summary["gamma_star"] = result.gamma_star;
    summary["iterations"] = result.iterations;
    summary["residual"] = result.residual;
    summary["sup_norm"] = result.psi.sup_norm();
    write_text((out / "summary.json").string(), json_dump(summary));

    if (lc.contains("sweep")) {
        CsvWriter csv({"gamma", "kappa", "converged"});
        for (double gs : lc.at("sweep").get<std::vector<double>>()) {
            LasotaParams sweep_params =
                lasota_params(params.delta, params.p, gs, params.delta_minus);
            try {
                LasotaSolveResult rs = rap_positive_solution(
                    sweep_params, grid, config_tol(cfg), config_substeps(cfg));
                csv.row({format_double(gs), format_double(rs.kappa), "1"});
            } catch (const HypothesisError&) {
                csv.row({format_double(gs), format_double(gs / result.gamma_star),
                         "0"});
            }
        }
        csv.write((out / "gamma_sweep.csv").string());
    }
    return 0;
}

int cmd_oracle_check(const json& cfg, const fs::path& out) {
    int trials = cfg.value("trials", 50);
    std::uint64_t seed = config_seed(cfg);
    std::int64_t m = cfg.contains("window") ? grid_from_json(cfg.at("window"))
                                                  .subdivisions()
                                            : 100;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> a_dist(-2.0, -0.2);
    std::uniform_real_distribution<double> bc_dist(-1.0, 1.0);

    CsvWriter csv({"a", "b", "c", "max_error"});
    double worst = 0.0;
    TimeGrid grid(0, 10, m);
    for (int trial = 0; trial < trials; ++trial) {
        double a = a_dist(rng), b = bc_dist(rng), c = bc_dist(rng);
        // keep the one-step multiplier away from the unit circle
        if (std::abs(std::abs(scalar_Z(a, b, 1.0)) - 1.0) < 0.01) {
            --trial;
            continue;
        }
        MatrixFn A = [a](double) { return Mat::Constant(1, 1, a).eval(); };
        MatrixFn B = [b](double) { return Mat::Constant(1, 1, b).eval(); };
        VectorFn F = [c](double) { return Vec::Constant(1, c).eval(); };
        CoefficientSystem sys = validate_system(1, A, B, F, grid);
        HybridKernel kernel = hybrid_kernels(sys, grid);
        DiscreteSystem disc = reduce(kernel, sys);
        auto anchors = iterate(disc, Vec::Constant(1, 1.0), 0, 10);
        HybridSolution sol = reconstruct(kernel, sys, anchors);
        double err = 0.0;
        for (std::int64_t k = 0; k < grid.size(); ++k) {
            double t = grid.node(k).value();
            err = std::max(err, std::abs(sol.at_node(k)(0) -
                                         closed_form_oracle(a, b, c, 1.0, t)));
        }
        worst = std::max(worst, err);
        csv.numeric_row({a, b, c, err});
    }
    csv.write((out / "oracle.csv").string());
    json summary;
    summary["trials"] = trials;
    summary["max_error"] = worst;
    summary["tolerance"] = 1e-6;
    write_text((out / "oracle.json").string(), json_dump(summary));
    std::cout << "oracle-check: max error " << format_double(worst) << "\n";
    return worst <= 1e-6 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DEPCA laboratory: reduction, dichotomy and fixed-point "
                 "pipelines for piecewise-constant-argument equations"};
    app.require_subcommand(1);

    Options opt;
    app.add_option("--config", opt.config_path, "JSON config file");
    app.add_option("--out", opt.out_dir, "output directory");
    app.add_option("--m", opt.m, "override grid subdivisions per unit");
    app.add_option("--window", opt.window, "override window start end");
    app.add_option("--tol", opt.tol, "override tolerance");
    app.add_option("--nu", opt.nu, "override perturbation strength");
    app.add_option("--gamma", opt.gamma, "override Lipschitz constant");
    app.add_option("--epsilon", opt.epsilon, "override scan epsilon");
    app.add_option("--seed", opt.seed, "override sampling seed");

    std::map<std::string, int (*)(const json&, const fs::path&)> handlers{
        {"solve", cmd_solve},           {"reduce", cmd_reduce},
        {"dichotomy", cmd_dichotomy},   {"rap-scan", cmd_rap_scan},
        {"perturb", cmd_perturb},       {"nonlinear", cmd_nonlinear},
        {"lasota", cmd_lasota},         {"oracle-check", cmd_oracle_check}};
    for (const auto& [name, handler] : handlers) {
        (void)handler;
        // shared options live on the parent; let "tool sub --config ..." work
        app.add_subcommand(name)->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;  // help stays 0, any usage problem is 1
    }
    std::string sub = app.get_subcommands().front()->get_name();

    auto start = std::chrono::steady_clock::now();
    try {
        json cfg = load_config(opt);
        fs::path out(opt.out_dir);
        fs::create_directories(out);
        int rc = handlers.at(sub)(cfg, out);
        double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                .count();
        write_manifest(out, sub, opt, config_seed(cfg), wall);
        return rc;
    } catch (const HypothesisError& e) {
        std::cerr << "hypothesis failure: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
