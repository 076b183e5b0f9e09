// blayer: boundary-layer expansion laboratory.
//
// Subcommands: validate, prandtl0, euler1, prandtl1, residual, remainder,
// iterate, sweep. Exit codes: 0 success, 1 validation/solver failure, 2 I/O.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "blayer/interp.hpp"
#include "blayer/io.hpp"
#include "blayer/pipeline.hpp"
#include "blayer/prandtl_one.hpp"

using namespace blayer;
using nlohmann::json;

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir = "out";
    std::vector<double> eps_list;
    int seed = -1;
    bool skip_remainder = false;
    bool force = false;
};

RunConfig load_config(const CliOptions& opt) {
    RunConfig cfg = RunConfig::defaults();
    if (!opt.config_path.empty()) {
        std::ifstream is(opt.config_path);
        if (!is) throw IoError("cannot open config: " + opt.config_path);
        json j;
        is >> j;
        cfg = RunConfig::from_json(j);
    }
    if (!opt.eps_list.empty()) cfg.eps_list = opt.eps_list;
    if (opt.seed >= 0) cfg.base.seed = static_cast<unsigned>(opt.seed);
    if (opt.skip_remainder) cfg.skip_remainder = true;
    if (opt.force) cfg.force = true;
    cfg.out_dir = std::filesystem::path(opt.out_dir);
    return cfg;
}

// per-module subcommands run the module surfaces with the user data verbatim
// (no x-extension); composite flows use the pipeline's extended domain
RunConfig surface_cfg(const RunConfig& cfg) {
    RunConfig c = cfg;
    c.x_margin = 0.0;
    return c;
}

int cmd_validate(const RunConfig& cfg) {
    const double eps = cfg.eps_list.front();
    const ProblemData pd = cfg.make_pd(eps);
    const Grid2D grid =
        make_grid(pd.L, cfg.grid.Ymax, cfg.grid.nx, cfg.grid.ny, cfg.grid.stretch);
    const ValidationReport vr = validate(pd, grid);
    json j;
    j["schema_version"] = kSchemaVersion;
    j["eps"] = eps;
    for (const auto& c : vr.checks)
        j["checks"][c.name] = {{"pass", c.pass}, {"value", c.value},
                               {"threshold", c.threshold}};
    j["all_pass"] = vr.all_pass();
    write_text(*cfg.out_dir / "validate.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    return vr.all_pass() || cfg.force ? 0 : 1;
}

int cmd_prandtl0(const RunConfig& cfg) {
    const double eps = cfg.eps_list.front();
    const ProblemData pd = cfg.make_pd(eps);
    const Grid2D grid =
        make_grid(pd.L, cfg.grid.Ymax, cfg.grid.nx, cfg.grid.ny, cfg.grid.stretch);
    const ValidationReport vr = validate(pd, grid);
    if (!vr.all_pass() && !cfg.force) {
        std::cerr << "validation failed; use --force to continue\n";
        return 1;
    }
    const PrandtlLayer0 layer0 = march_prandtl0(pd, grid);
    write_field_csv(*cfg.out_dir / "u_p0.csv", layer0.u_p0);
    write_field_csv(*cfg.out_dir / "v_p0.csv", layer0.v_p0);
    {
        CsvWriter w({"x", "eta", "value"});
        for (int i = 0; i < grid.nx; ++i)
            for (size_t k = 0; k < layer0.eta.size(); ++k)
                w.row({grid.x[i], layer0.eta[k], layer0.W[i][k]});
        w.write(*cfg.out_dir / "W.csv");
    }
    json j;
    j["schema_version"] = kSchemaVersion;
    j["eps"] = eps;
    j["min_W"] = layer0.min_W;
    j["max_principle_margin"] = check_max_principle(layer0);
    j["N0"] = weighted_norms(layer0, grid, 0, 0);
    j["N1"] = weighted_norms(layer0, grid, 0, 1);
    write_text(*cfg.out_dir / "prandtl0.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_euler1(const RunConfig& cfg) {
    const ProfileBundle st = build_profiles(surface_cfg(cfg), cfg.eps_list.front());
    write_field_csv(*cfg.out_dir / "v_e1.csv", st.ec.v_e1);
    write_field_csv(*cfg.out_dir / "u_e1.csv", st.ec.u_e1);
    write_field_csv(*cfg.out_dir / "p_e1.csv", st.ec.p_e1);
    write_field_csv(*cfg.out_dir / "E_b.csv", st.ec.E_b);
    auto h_surrogates = [&](const Field2D& f) {
        const Field2D fx = ddx(f), fz = ddy(f);
        const Field2D fxx = d2x(f), fzz = d2y(f), fxz = ddy(fx);
        json s;
        s["L2"] = norm_L2(f);
        s["H1"] = std::sqrt(norm_L2(f) * norm_L2(f) + norm_L2(fx) * norm_L2(fx) +
                            norm_L2(fz) * norm_L2(fz));
        s["H2_seminorm"] =
            std::sqrt(norm_L2(fxx) * norm_L2(fxx) + norm_L2(fzz) * norm_L2(fzz) +
                      norm_L2(fxz) * norm_L2(fxz));
        s["sup"] = norm_sup(f);
        return s;
    };
    json j;
    j["schema_version"] = kSchemaVersion;
    j["eps"] = st.pd.eps;
    j["theta0"] = st.ec.theta0;
    j["degenerate_lift"] = st.ec.degenerate_lift;
    j["solve_residual"] = st.ec.solve_residual;
    j["v_e1"] = h_surrogates(st.ec.v_e1);
    j["u_e1"] = h_surrogates(st.ec.u_e1);
    write_text(*cfg.out_dir / "euler1.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_prandtl1(const RunConfig& cfg) {
    const ProfileBundle st = build_profiles(surface_cfg(cfg), cfg.eps_list.front());
    const PrandtlCorrector1& c1 = st.corr1;
    write_field_csv(*cfg.out_dir / "v_p.csv", c1.v_p);
    write_field_csv(*cfg.out_dir / "u_p1.csv", c1.u_p1);
    write_field_csv(*cfg.out_dir / "v_p1.csv", c1.v_p1);
    write_field_csv(*cfg.out_dir / "p_p2.csv", c1.p_p2);
    json j;
    j["schema_version"] = kSchemaVersion;
    j["eps"] = st.pd.eps;
    j["outer_iters"] = c1.outer_iters;
    j["outer_resid"] = c1.outer_resid;
    j["wall_defect"] = c1.wall_defect;
    j["sup_vp"] = norm_sup(c1.v_p);
    j["sup_up"] = norm_sup(c1.u_p);
    j["norm_vpyy_w"] = norm_L2(d2y(c1.v_p), 2);
    j["norm_vpxy_w"] = norm_L2(ddy(ddx(c1.v_p)), 2);
    j["norm_vpx1"] = norm_L2(ddx(c1.v_p1));
    write_text(*cfg.out_dir / "prandtl1.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_residual(const RunConfig& cfg) {
    RunConfig c = cfg;
    c.skip_remainder = true;
    const ConvergenceReport rep = run_sweep(c);
    emit_report(rep, *cfg.out_dir);
    for (const auto& r : rep.records) {
        std::cout << "eps=" << r.eps << (r.ok ? "" : " FAILED: " + r.error)
                  << " combined=" << r.combined << "\n";
        if (!r.ok) return 1;
    }
    return 0;
}

int cmd_remainder(const RunConfig& cfg) {
    const double eps = cfg.eps_list.front();
    const ProfileBundle st = build_profiles(cfg, eps);
    const ShearBackground bg = build_background(st.pd, st.layer0, st.eul, *st.grid);
    const MacGrid mg(st.pd.L, st.grid->Ymax, cfg.rem_ncx, cfg.rem_ncy);
    LinearizedStokes solver(bg, mg, st.pd.tol.tol_linear);

    std::mt19937 rng(st.pd.seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const double a1 = uni(rng), a2 = uni(rng), a3 = uni(rng), a4 = uni(rng);
    const double Lx = st.pd.L, Ym = st.grid->Ymax;
    auto f = [&](double x, double y) {
        return a1 * std::sin(M_PI * x / Lx) * std::exp(-y) +
               a2 * std::cos(2 * M_PI * x / Lx) * y * std::exp(-0.7 * y);
    };
    auto g = [&](double x, double y) {
        return a3 * std::sin(2 * M_PI * x / Lx) * std::exp(-0.5 * y) +
               a4 * (x / Lx) * std::exp(-2.0 * y * y / (Ym * Ym));
    };
    const RemainderSolution sol = solver.solve(f, g);
    const CheckResult en = energy_check(solver, sol, cfg.C_energy);
    const CheckResult vo = vorticity_check(solver, sol, cfg.C_vort);
    const XNorm xn = x_norm(sol, eps, st.pd.gamma);
    const double denom = sol.diag.norm_f + std::sqrt(eps) * sol.diag.norm_g;

    {
        CsvWriter wu({"x", "y", "u"});
        for (int i = 0; i <= mg.ncx; ++i)
            for (int j = 0; j < mg.ncy; ++j)
                wu.row({mg.xu(i), mg.yu(j), sol.field.U(i, j)});
        wu.write(*cfg.out_dir / "remainder_u.csv");
        CsvWriter wv({"x", "y", "v"});
        for (int i = 0; i < mg.ncx; ++i)
            for (int j = 0; j <= mg.ncy; ++j)
                wv.row({mg.xv(i), mg.yv(j), sol.field.V(i, j)});
        wv.write(*cfg.out_dir / "remainder_v.csv");
    }

    json j;
    j["schema_version"] = kSchemaVersion;
    j["eps"] = eps;
    j["stability_ratio"] =
        (sol.diag.grad_eps_u + sol.diag.grad_eps_v) / std::max(denom, 1e-300);
    j["energy_lhs"] = en.lhs;
    j["energy_rhs"] = en.rhs;
    j["energy_pass"] = en.pass;
    j["vorticity_lhs"] = vo.lhs;
    j["vorticity_rhs"] = vo.rhs;
    j["vorticity_pass"] = vo.pass;
    j["x_norm"] = xn.value;
    j["div_max"] = sol.diag.div_max;
    j["solve_residual"] = sol.diag.solve_residual;
    write_text(*cfg.out_dir / "remainder.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    return (en.pass && vo.pass) ? 0 : 1;
}

int cmd_iterate(const RunConfig& cfg) {
    const double eps = cfg.eps_list.front();
    const ProfileBundle st = build_profiles(cfg, eps);
    const ApproxSolution approx =
        assemble(st.pd, st.layer0, st.eul, st.corr1, *st.grid);
    const ShearBackground bg = build_background(st.pd, st.layer0, st.eul, *st.grid);
    const MacGrid mg(st.pd.L, st.grid->Ymax, cfg.rem_ncx, cfg.rem_ncy);
    const NonlinearResult nr = nonlinear_iterate(st.pd, approx, bg, mg);
    json j;
    j["schema_version"] = kSchemaVersion;
    j["eps"] = eps;
    j["converged"] = nr.trace.converged;
    j["diverged"] = nr.trace.diverged;
    j["iterations"] = nr.trace.iterations;
    j["contraction_ratio"] = nr.trace.contraction_ratio;
    j["x_norms"] = nr.trace.x_norms;
    j["x_norm"] = x_norm(nr.sol, eps, st.pd.gamma).value;
    j["div_max"] = nr.sol.diag.div_max;
    write_text(*cfg.out_dir / "iterate.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    return 0;  // divergence is reported as data
}

int cmd_sweep(const RunConfig& cfg) {
    const ConvergenceReport rep = run_sweep(cfg);
    emit_report(rep, *cfg.out_dir);
    bool any_fail = false;
    for (const auto& r : rep.records) {
        std::cout << "eps=" << r.eps;
        if (r.ok)
            std::cout << " combined=" << r.combined
                      << (r.rem.attempted
                              ? (r.rem.converged
                                     ? " remainder=converged"
                                     : (r.rem.diverged ? " remainder=diverged"
                                                       : " remainder=stopped"))
                              : "")
                      << "\n";
        else {
            std::cout << " FAILED: " << r.error << "\n";
            any_fail = true;
        }
    }
    for (const auto& [name, f] : rep.fits)
        std::cout << name << ": slope=" << f.slope << " r2=" << f.r2 << "\n";
    return any_fail ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Prandtl boundary-layer expansion laboratory"};
    app.require_subcommand(1);

    CliOptions opt;
    app.add_option("--config", opt.config_path, "JSON config file");
    app.add_option("--out", opt.out_dir, "output directory");
    app.add_option("--eps-list", opt.eps_list, "override eps values");
    app.add_option("--seed", opt.seed, "RNG seed");
    app.add_flag("--skip-remainder", opt.skip_remainder, "skip the remainder solve");
    app.add_flag("--force", opt.force, "continue past validation failures");

    const char* names[] = {"validate", "prandtl0", "euler1", "prandtl1",
                           "residual", "remainder", "iterate", "sweep"};
    for (const char* n : names) app.add_subcommand(n)->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        const RunConfig cfg = load_config(opt);
        const std::string sub = app.get_subcommands().front()->get_name();
        if (sub == "validate") return cmd_validate(cfg);
        if (sub == "prandtl0") return cmd_prandtl0(cfg);
        if (sub == "euler1") return cmd_euler1(cfg);
        if (sub == "prandtl1") return cmd_prandtl1(cfg);
        if (sub == "residual") return cmd_residual(cfg);
        if (sub == "remainder") return cmd_remainder(cfg);
        if (sub == "iterate") return cmd_iterate(cfg);
        if (sub == "sweep") return cmd_sweep(cfg);
        return 1;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
