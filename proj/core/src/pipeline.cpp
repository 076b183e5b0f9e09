#include "blayer/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "blayer/interp.hpp"
#include "blayer/io.hpp"

namespace blayer {

using nlohmann::json;

namespace {

Profile1D profile_from_json(const json& j) {
    if (j.is_string()) return Profile1D::from_expr(j.get<std::string>());
    const std::string type = j.value("type", "expr");
    if (type == "expr") return Profile1D::from_expr(j.at("expr").get<std::string>());
    if (type == "samples")
        return Profile1D::from_samples(j.at("s").get<std::vector<double>>(),
                                       j.at("v").get<std::vector<double>>());
    if (type == "zero") return Profile1D::zero();
    throw ConfigError("profile spec: unknown type '" + type + "'");
}

StretchSpec stretch_from_json(const json& j) {
    if (j.is_string()) {
        if (j == "uniform") return {};
        throw ConfigError("grid.stretch: expected \"uniform\" or {tanh beta}");
    }
    StretchSpec s;
    s.kind = Stretch::Tanh;
    s.beta = j.at("beta").get<double>();
    return s;
}

}  // namespace

RunConfig RunConfig::defaults() {
    RunConfig cfg;
    cfg.base = default_demo_data();
    return cfg;
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig cfg = RunConfig::defaults();
    if (j.contains("eps_list")) cfg.eps_list = j["eps_list"].get<std::vector<double>>();
    ProblemData& pd = cfg.base;
    if (j.contains("L")) pd.L = j["L"].get<double>();
    if (j.contains("gamma")) pd.gamma = j["gamma"].get<double>();
    if (j.contains("kappa")) pd.kappa = j["kappa"].get<double>();
    if (j.contains("u_b")) pd.u_b = j["u_b"].get<double>();
    if (j.contains("u_e0")) pd.u_e0 = profile_from_json(j["u_e0"]);
    if (j.contains("ubar0")) pd.ubar0 = profile_from_json(j["ubar0"]);
    if (j.contains("ubar1")) pd.ubar1 = profile_from_json(j["ubar1"]);
    if (j.contains("Vb0")) pd.Vb0 = profile_from_json(j["Vb0"]);
    if (j.contains("VbL")) pd.VbL = profile_from_json(j["VbL"]);
    if (j.contains("ub1")) pd.ub1 = profile_from_json(j["ub1"]);
    if (j.contains("seed")) pd.seed = j["seed"].get<unsigned>();
    if (j.contains("tolerances")) {
        const json& t = j["tolerances"];
        if (t.contains("tol_newton")) pd.tol.tol_newton = t["tol_newton"].get<double>();
        if (t.contains("tol_linear")) pd.tol.tol_linear = t["tol_linear"].get<double>();
        if (t.contains("tol_compat")) pd.tol.tol_compat = t["tol_compat"].get<double>();
        if (t.contains("c_vtrace")) pd.tol.c_vtrace = t["c_vtrace"].get<double>();
    }
    if (j.contains("grid")) {
        const json& g = j["grid"];
        if (g.contains("nx")) cfg.grid.nx = g["nx"].get<int>();
        if (g.contains("ny")) cfg.grid.ny = g["ny"].get<int>();
        if (g.contains("Ymax")) cfg.grid.Ymax = g["Ymax"].get<double>();
        if (g.contains("stretch")) cfg.grid.stretch = stretch_from_json(g["stretch"]);
    }
    if (j.contains("euler_grid")) {
        const json& g = j["euler_grid"];
        if (g.contains("nz")) cfg.euler_nz = g["nz"].get<int>();
        if (g.contains("Zmax")) cfg.euler_Zmax = g["Zmax"].get<double>();
    }
    if (j.contains("remainder_grid")) {
        const json& g = j["remainder_grid"];
        if (g.contains("ncx")) cfg.rem_ncx = g["ncx"].get<int>();
        if (g.contains("ncy")) cfg.rem_ncy = g["ncy"].get<int>();
    }
    if (j.contains("C_energy")) cfg.C_energy = j["C_energy"].get<double>();
    if (j.contains("C_vort")) cfg.C_vort = j["C_vort"].get<double>();
    if (j.contains("auto_compat")) cfg.auto_compat = j["auto_compat"].get<bool>();
    if (j.contains("warm_inflow")) cfg.warm_inflow = j["warm_inflow"].get<bool>();
    if (j.contains("skip_remainder")) cfg.skip_remainder = j["skip_remainder"].get<bool>();
    if (j.contains("remainder_eps_min"))
        cfg.remainder_eps_min = j["remainder_eps_min"].get<double>();
    return cfg;
}

json RunConfig::to_json() const {
    json j;
    j["eps_list"] = eps_list;
    j["L"] = base.L;
    j["gamma"] = base.gamma;
    j["kappa"] = base.kappa;
    j["u_b"] = base.u_b;
    j["seed"] = base.seed;
    j["grid"] = {{"nx", grid.nx}, {"ny", grid.ny}, {"Ymax", grid.Ymax}};
    j["euler_grid"] = {{"nz", euler_nz}, {"Zmax", euler_Zmax}};
    j["remainder_grid"] = {{"ncx", rem_ncx}, {"ncy", rem_ncy}};
    j["tolerances"] = {{"tol_newton", base.tol.tol_newton},
                       {"tol_linear", base.tol.tol_linear},
                       {"tol_compat", base.tol.tol_compat},
                       {"c_vtrace", base.tol.c_vtrace}};
    j["C_energy"] = C_energy;
    j["C_vort"] = C_vort;
    j["auto_compat"] = auto_compat;
    j["warm_inflow"] = warm_inflow;
    j["skip_remainder"] = skip_remainder;
    j["remainder_eps_min"] = remainder_eps_min;
    return j;
}

namespace {

Field2D restrict_cols(const Field2D& f, const Grid2D& to, int i0) {
    Field2D r(to);
    for (int i = 0; i < to.nx; ++i)
        for (int j = 0; j < to.ny; ++j) r(i, j) = f(i0 + i, j);
    return r;
}

void write_eps_artifacts(const RunConfig& cfg, const ProfileBundle& b,
                         const ApproxSolution& approx, const PipelineRecord& rec) {
    if (!cfg.out_dir) return;
    const auto dir = *cfg.out_dir / ("eps_" + format_g17(b.pd.eps));
    write_field_csv(dir / "u_p0.csv", b.layer0.u_p0);
    write_field_csv(dir / "v_p0.csv", b.layer0.v_p0);
    write_field_csv(dir / "u_p1.csv", b.corr1.u_p1);
    write_field_csv(dir / "v_p1.csv", b.corr1.v_p1);
    write_field_csv(dir / "v_p_uncut.csv", b.corr1.v_p);
    write_field_csv(dir / "p_p2.csv", b.corr1.p_p2);
    write_field_csv(dir / "u_app.csv", approx.u_app);
    write_field_csv(dir / "v_app.csv", approx.v_app);
    write_field_csv(dir / "v_e1.csv", approx.ve1);
    write_field_csv(dir / "u_e1.csv", approx.ue1);
    write_field_csv(dir / "p_e1.csv", approx.pe1);
    write_text(dir / "record.json", record_to_json(rec).dump(2) + "\n");
}

}  // namespace

ProfileBundle build_profiles(const RunConfig& cfg, double eps, PipelineRecord* rec) {
    ProfileBundle b;
    b.pd = cfg.make_pd(eps);

    // the cut-off support {sqrt(eps) y <= 1} must sit inside the profile
    // domain, otherwise the truncated norms only see the uncut plateau of the
    // first-order layer; pad the height accordingly (uniform y spacing kept)
    double Ytall = cfg.grid.Ymax;
    int ny_tall = cfg.grid.ny;
    if (cfg.grid.stretch.kind == Stretch::Uniform) {
        const double want = 1.3 / std::sqrt(eps);
        const double dy = cfg.grid.Ymax / (cfg.grid.ny - 1);
        if (want > Ytall) {
            const int extra = static_cast<int>(std::ceil((want - Ytall) / dy));
            ny_tall += extra;
            Ytall += extra * dy;
        }
    }
    b.grid = std::make_shared<Grid2D>(make_grid(b.pd.L, Ytall, cfg.grid.nx,
                                                ny_tall, cfg.grid.stretch));

    const ValidationReport vr = validate(b.pd, *b.grid);
    if (rec) {
        rec->validation_pass = vr.all_pass();
        rec->nozero_margin = vr["nozero_margin"].value;
    }
    if (!vr.all_pass() && !cfg.force)
        throw PreconditionError("validation failed (rerun with --force to override)");

    // march domain: pad in x so the elliptic corners and the inflow
    // compatibility transients sit outside the physical window
    int pad = 0;
    ProblemData pd_ext = b.pd;
    if (cfg.x_margin > 0.0) {
        pad = std::max(1, static_cast<int>(std::lround(cfg.x_margin * (cfg.grid.nx - 1))));
        const double dx = b.grid->x[1] - b.grid->x[0];
        pd_ext.L = b.pd.L + 2 * pad * dx;
        b.grid_ext = std::make_shared<Grid2D>(make_grid(pd_ext.L, Ytall,
                                                        cfg.grid.nx + 2 * pad,
                                                        ny_tall, cfg.grid.stretch));
    } else {
        if (cfg.warm_inflow) pd_ext = warm_start_inflow(pd_ext, *b.grid);
        b.grid_ext = b.grid;
    }

    PrandtlLayer0 layer0_ext = march_prandtl0(pd_ext, *b.grid_ext);
    if (rec) {
        rec->min_W = layer0_ext.min_W;
        rec->max_principle_margin = check_max_principle(layer0_ext);
        rec->N0 = weighted_norms(layer0_ext, *b.grid_ext, 0, 0);
        rec->N1 = weighted_norms(layer0_ext, *b.grid_ext, 0, 1);
    }

    if (cfg.auto_compat) pd_ext = enforce_corner_compat(pd_ext, layer0_ext);
    if (rec) {
        const CompatMargins cm = compat_check(pd_ext, layer0_ext);
        rec->compat_margin0 = cm.at_x0;
        rec->compat_marginL = cm.at_xL;
    }

    b.gz = std::make_shared<Grid2D>(make_euler_grid(pd_ext, b.grid_ext->nx,
                                                    cfg.euler_nz, cfg.euler_Zmax));
    b.ec = solve_euler_corrector(pd_ext, layer0_ext, *b.gz);
    if (rec) rec->euler_theta0 = b.ec.theta0;

    PrandtlCorrector1 corr1_ext =
        solve_prandtl1(pd_ext, layer0_ext, b.ec, *b.gz, *b.grid_ext);
    if (rec) {
        rec->prandtl1_outer_iters = corr1_ext.outer_iters;
        rec->prandtl1_outer_resid = corr1_ext.outer_resid;
        rec->wall_defect = corr1_ext.wall_defect;
    }

    const EulerSampled eul_ext = sample_euler(b.ec, *b.gz, *b.grid_ext, eps);

    // restrict everything onto the physical window
    const Grid2D& G = *b.grid;
    auto R = [&](const Field2D& f) { return restrict_cols(f, G, pad); };
    b.layer0.u_p0 = R(layer0_ext.u_p0);
    b.layer0.v_p0 = R(layer0_ext.v_p0);
    b.layer0.u_p0x = R(layer0_ext.u_p0x);
    b.layer0.eta = layer0_ext.eta;
    b.layer0.eta_max = layer0_ext.eta_max;
    b.layer0.F_src = layer0_ext.F_src;
    b.layer0.min_W = layer0_ext.min_W;
    b.layer0.min_W_bound = layer0_ext.min_W_bound;

    b.corr1.u_p = R(corr1_ext.u_p);
    b.corr1.v_p = R(corr1_ext.v_p);
    b.corr1.v_bar = R(corr1_ext.v_bar);
    b.corr1.u_p1 = R(corr1_ext.u_p1);
    b.corr1.v_p1 = R(corr1_ext.v_p1);
    b.corr1.p_p2 = R(corr1_ext.p_p2);
    b.corr1.p_p1 = corr1_ext.p_p1;
    b.corr1.seed = corr1_ext.seed;
    b.corr1.outer_iters = corr1_ext.outer_iters;
    b.corr1.outer_resid = corr1_ext.outer_resid;
    b.corr1.wall_defect = corr1_ext.wall_defect;
    b.corr1.Ymax_march = corr1_ext.Ymax_march;

    b.eul.ue1 = R(eul_ext.ue1);
    b.eul.ve1 = R(eul_ext.ve1);
    b.eul.pe1 = R(eul_ext.pe1);
    b.eul.ue1_z = R(eul_ext.ue1_z);
    b.eul.ue1_zz = R(eul_ext.ue1_zz);
    b.eul.ve1_z = R(eul_ext.ve1_z);
    b.eul.ve1_zz = R(eul_ext.ve1_zz);
    b.eul.ve1_x = R(eul_ext.ve1_x);
    b.eul.ve1_xz = R(eul_ext.ve1_xz);
    b.eul.ve1_xx = R(eul_ext.ve1_xx);
    b.eul.intEb = R(eul_ext.intEb);
    b.eul.uex1_wall.assign(eul_ext.uex1_wall.begin() + pad,
                           eul_ext.uex1_wall.begin() + pad + G.nx);
    b.eul.uexx1_wall.assign(eul_ext.uexx1_wall.begin() + pad,
                            eul_ext.uexx1_wall.begin() + pad + G.nx);

    b.pd = pd_ext;
    b.pd.L = b.grid->L;
    return b;
}

PipelineRecord run_pipeline(const RunConfig& cfg, double eps) {
    PipelineRecord rec;
    rec.eps = eps;
    const auto t0 = std::chrono::steady_clock::now();
    std::string stage = "validate";
    try {
        ProfileBundle art = build_profiles(cfg, eps, &rec);
        stage = "assemble";
        const ApproxSolution approx =
            assemble(art.pd, art.layer0, art.eul, art.corr1, *art.grid);
        const ResidualReport rr = residual_report(art.pd, approx, art.layer0, art.corr1);
        rec.norm_Ru = rr.norm_Ru;
        rec.norm_Rv = rr.norm_Rv;
        rec.combined = rr.combined;
        rec.budget = rr.budget;
        stage = "remainder";
        if (!cfg.skip_remainder && eps >= cfg.remainder_eps_min) {
            rec.rem.attempted = true;
            const ShearBackground bg =
                build_background(art.pd, art.layer0, art.eul, *art.grid);
            const MacGrid mg(art.pd.L, cfg.grid.Ymax, cfg.rem_ncx, cfg.rem_ncy);
            const NonlinearResult nr = nonlinear_iterate(art.pd, approx, bg, mg);
            rec.rem.converged = nr.trace.converged;
            rec.rem.diverged = nr.trace.diverged;
            rec.rem.iterations = nr.trace.iterations;
            rec.rem.contraction_ratio = nr.trace.contraction_ratio;
            const XNorm xn = x_norm(nr.sol, eps, art.pd.gamma);
            rec.rem.x_norm = xn.value;
            rec.rem.grad_eps_u = nr.sol.diag.grad_eps_u;
            rec.rem.grad_eps_v = nr.sol.diag.grad_eps_v;
            rec.rem.sup_u = nr.sol.diag.sup_u;
            rec.rem.sup_v = nr.sol.diag.sup_v;
            rec.rem.div_max = nr.sol.diag.div_max;

            if (nr.trace.converged) {
                // corollary sup-differences at the staggered points
                const double se = std::sqrt(eps);
                const double amp = std::pow(eps, art.pd.gamma + 0.5);
                const Field2D usum = approx.ue1 + approx.up1;
                double du = 0.0, dv = 0.0;
                for (int i = 0; i <= mg.ncx; ++i)
                    for (int j = 0; j < mg.ncy; ++j) {
                        const double prof =
                            se * sample_bilinear(usum, mg.xu(i), mg.yu(j));
                        du = std::max(du, std::abs(prof + amp * nr.sol.field.U(i, j)));
                    }
                const Field2D vsum1 = approx.vp1;
                for (int i = 0; i < mg.ncx; ++i)
                    for (int j = 0; j <= mg.ncy; ++j) {
                        const double prof =
                            eps * sample_bilinear(vsum1, mg.xv(i), mg.yv(j));
                        dv = std::max(dv, std::abs(prof + std::sqrt(eps) * amp *
                                                              nr.sol.field.V(i, j)));
                    }
                rec.rem.sup_u_diff = du;
                rec.rem.sup_v_diff = dv;
            }
        }
        write_eps_artifacts(cfg, art, approx, rec);
        rec.ok = true;
    } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = stage + ": " + e.what();
    }
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& points) {
    std::vector<double> lx, ly;
    for (const auto& [eps, val] : points) {
        if (!(val > 0.0) || !(eps > 0.0)) continue;  // excluded with warning upstream
        lx.push_back(std::log(eps));
        ly.push_back(std::log(val));
    }
    const int n = static_cast<int>(lx.size());
    if (n < 3) throw ConfigError("fit_rate: fewer than 3 usable points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (int k = 0; k < n; ++k) {
        sx += lx[k];
        sy += ly[k];
        sxx += lx[k] * lx[k];
        sxy += lx[k] * ly[k];
        syy += ly[k] * ly[k];
    }
    RateFit f;
    f.points_used = n;
    const double den = n * sxx - sx * sx;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double ybar = sy / n;
    for (int k = 0; k < n; ++k) {
        const double pred = f.intercept + f.slope * lx[k];
        ss_res += (ly[k] - pred) * (ly[k] - pred);
        ss_tot += (ly[k] - ybar) * (ly[k] - ybar);
    }
    f.r2 = (ss_tot > 0) ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

ConvergenceReport run_sweep(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    ConvergenceReport rep;
    rep.config_echo = cfg.to_json();
    rep.records.resize(cfg.eps_list.size());

    int pool = static_cast<int>(std::min<size_t>(cfg.eps_list.size(),
                                                 std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("BLAYER_THREADS"))
        pool = std::max(1, std::min(pool, std::atoi(env)));
    pool = std::max(1, pool);

    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const size_t k = next.fetch_add(1);
            if (k >= cfg.eps_list.size()) return;
            rep.records[k] = run_pipeline(cfg, cfg.eps_list[k]);
        }
    };
    if (pool == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int t = 0; t < pool; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    std::sort(rep.records.begin(), rep.records.end(),
              [](const PipelineRecord& a, const PipelineRecord& b) { return a.eps > b.eps; });

    // resolution gate: refine the profile grids at the smallest eps and
    // compare the combined residual
    for (auto it = rep.records.rbegin(); it != rep.records.rend(); ++it) {
        if (!it->ok) continue;
        RunConfig fine = cfg;
        fine.grid.nx = 2 * (cfg.grid.nx - 1) + 1;
        fine.grid.ny = 2 * (cfg.grid.ny - 1) + 1;
        fine.euler_nz = 2 * (cfg.euler_nz - 1) + 1;
        fine.skip_remainder = true;
        fine.out_dir.reset();
        const PipelineRecord fr = run_pipeline(fine, it->eps);
        if (fr.ok && fr.combined > 0)
            it->refine_drift = std::abs(fr.combined - it->combined) / fr.combined;
        break;
    }

    auto fit_of = [&](auto getter) -> std::optional<RateFit> {
        std::vector<std::pair<double, double>> pts;
        for (const auto& r : rep.records)
            if (r.ok) pts.emplace_back(r.eps, getter(r));
        if (pts.size() < 3) return std::nullopt;
        try {
            return fit_rate(pts);
        } catch (const ConfigError&) {
            return std::nullopt;
        }
    };
    if (auto f = fit_of([](const PipelineRecord& r) { return r.combined; }))
        rep.fits["combined"] = *f;
    for (const char* key : {"E0", "Ru0", "Ru1", "Rv0", "Ru1p", "px2", "eps_order"}) {
        if (auto f = fit_of([key](const PipelineRecord& r) {
                auto it = r.budget.find(key);
                return it == r.budget.end() ? 0.0 : it->second;
            }))
            rep.fits[std::string("budget_") + key] = *f;
    }
    for (const auto& [name, fit] : corollary_check(rep.records)) rep.fits[name] = fit;

    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

std::map<std::string, RateFit> corollary_check(const std::vector<PipelineRecord>& records) {
    std::map<std::string, RateFit> out;
    std::vector<std::pair<double, double>> pu, pv;
    for (const auto& r : records) {
        if (r.ok && r.rem.converged) {
            pu.emplace_back(r.eps, r.rem.sup_u_diff);
            pv.emplace_back(r.eps, r.rem.sup_v_diff);
        }
    }
    if (pu.size() >= 3) {
        try {
            out["corollary_sup_u"] = fit_rate(pu);
            out["corollary_sup_v"] = fit_rate(pv);
        } catch (const ConfigError&) {
        }
    }
    return out;
}

json record_to_json(const PipelineRecord& r) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["eps"] = r.eps;
    j["ok"] = r.ok;
    j["error"] = r.error;
    j["validation_pass"] = r.validation_pass;
    j["nozero_margin"] = r.nozero_margin;
    j["min_W"] = r.min_W;
    j["max_principle_margin"] = r.max_principle_margin;
    j["compat_margin0"] = r.compat_margin0;
    j["compat_marginL"] = r.compat_marginL;
    j["N0"] = r.N0;
    j["N1"] = r.N1;
    j["euler_theta0"] = r.euler_theta0;
    j["prandtl1_outer_iters"] = r.prandtl1_outer_iters;
    j["prandtl1_outer_resid"] = r.prandtl1_outer_resid;
    j["wall_defect"] = r.wall_defect;
    j["norm_Ru"] = r.norm_Ru;
    j["norm_Rv"] = r.norm_Rv;
    j["combined"] = r.combined;
    j["budget"] = r.budget;
    j["refine_drift"] = r.refine_drift;
    j["wall_seconds"] = r.wall_seconds;
    j["remainder"] = {{"attempted", r.rem.attempted},
                      {"converged", r.rem.converged},
                      {"diverged", r.rem.diverged},
                      {"iterations", r.rem.iterations},
                      {"contraction_ratio", r.rem.contraction_ratio},
                      {"x_norm", r.rem.x_norm},
                      {"grad_eps_u", r.rem.grad_eps_u},
                      {"grad_eps_v", r.rem.grad_eps_v},
                      {"sup_u", r.rem.sup_u},
                      {"sup_v", r.rem.sup_v},
                      {"div_max", r.rem.div_max},
                      {"sup_u_diff", r.rem.sup_u_diff},
                      {"sup_v_diff", r.rem.sup_v_diff}};
    return j;
}

void emit_report(const ConvergenceReport& report, const std::filesystem::path& out_dir) {
    json full;
    full["schema_version"] = kSchemaVersion;
    full["config"] = report.config_echo;
    full["wall_seconds"] = report.wall_seconds;
    full["records"] = json::array();
    for (const auto& r : report.records) full["records"].push_back(record_to_json(r));
    full["fits"] = json::object();
    for (const auto& [name, f] : report.fits)
        full["fits"][name] = {{"slope", f.slope},
                              {"intercept", f.intercept},
                              {"r2", f.r2},
                              {"points_used", f.points_used}};
    write_text(out_dir / "report.json", full.dump(2) + "\n");

    CsvWriter summary({"schema_version", "eps", "ok", "norm_Ru", "norm_Rv", "combined",
                       "E0", "Ru0", "Ru1", "Rv0", "Ru1p", "px2", "eps_order",
                       "min_W", "max_principle_margin", "x_norm", "rem_converged",
                       "rem_diverged", "sup_u_diff", "sup_v_diff", "refine_drift"});
    for (const auto& r : report.records) {
        auto bud = [&](const char* k) {
            auto it = r.budget.find(k);
            return it == r.budget.end() ? 0.0 : it->second;
        };
        summary.row({double(kSchemaVersion), r.eps, r.ok ? 1.0 : 0.0, r.norm_Ru,
                     r.norm_Rv, r.combined, bud("E0"), bud("Ru0"), bud("Ru1"),
                     bud("Rv0"), bud("Ru1p"), bud("px2"), bud("eps_order"), r.min_W,
                     r.max_principle_margin, r.rem.x_norm, r.rem.converged ? 1.0 : 0.0,
                     r.rem.diverged ? 1.0 : 0.0, r.rem.sup_u_diff, r.rem.sup_v_diff,
                     r.refine_drift});
    }
    summary.write(out_dir / "summary.csv");

    CsvWriter fitcsv({"schema_version", "quantity", "slope", "intercept", "r2",
                      "points_used"});
    for (const auto& [name, f] : report.fits)
        fitcsv.row_mixed({std::to_string(kSchemaVersion), name, format_g17(f.slope),
                          format_g17(f.intercept), format_g17(f.r2),
                          std::to_string(f.points_used)});
    fitcsv.write(out_dir / "fits.csv");

    // residuals.csv in the schema of the assembly module's interface
    CsvWriter res({"eps", "norm_Ru", "norm_Rv", "combined", "E0", "Ru0", "Ru1", "Rv0",
                   "Ru1p", "px2"});
    for (const auto& r : report.records) {
        if (!r.ok) continue;
        auto bud = [&](const char* k) {
            auto it = r.budget.find(k);
            return it == r.budget.end() ? 0.0 : it->second;
        };
        res.row({r.eps, r.norm_Ru, r.norm_Rv, r.combined, bud("E0"), bud("Ru0"),
                 bud("Ru1"), bud("Rv0"), bud("Ru1p"), bud("px2")});
    }
    res.write(out_dir / "residuals.csv");
    {
        json rj;
        rj["schema_version"] = kSchemaVersion;
        for (const auto& [name, f] : report.fits)
            rj["fits"][name] = {{"slope", f.slope}, {"r2", f.r2}};
        write_text(out_dir / "residuals.json", rj.dump(2) + "\n");
    }

    // gnuplot-ready traces: eps vs quantity
    auto dat = [&](const std::string& name, auto getter) {
        std::string text = "# eps " + name + "\n";
        for (const auto& r : report.records)
            if (r.ok) text += format_g17(r.eps) + " " + format_g17(getter(r)) + "\n";
        write_text(out_dir / (name + ".dat"), text);
    };
    dat("combined", [](const PipelineRecord& r) { return r.combined; });
    dat("E0", [](const PipelineRecord& r) {
        auto it = r.budget.find("E0");
        return it == r.budget.end() ? 0.0 : it->second;
    });
    dat("px2", [](const PipelineRecord& r) {
        auto it = r.budget.find("px2");
        return it == r.budget.end() ? 0.0 : it->second;
    });
    dat("x_norm", [](const PipelineRecord& r) { return r.rem.x_norm; });
}

}  // namespace blayer
