#include "blayer/prandtl_one.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>

namespace blayer {

Prandtl1Context build_prandtl1_context(const ProblemData& pd,
                                       const PrandtlLayer0& layer0,
                                       const EulerSampled& eul, const Grid2D& grid) {
    Prandtl1Context c;
    c.grid = &grid;
    c.eps = pd.eps;
    const double se = std::sqrt(pd.eps);

    c.u0 = Field2D(grid);
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.ny; ++j)
            c.u0(i, j) = pd.u_e0(se * grid.y[j]) + layer0.u_p0(i, j);
    for (double v : c.u0.v)
        if (!(v > 0.0))
            throw PreconditionError("prandtl1: background u^0 must be positive");

    c.u0_y = ddy(c.u0);
    c.u0_yy = d2y(c.u0);
    c.inv = Field2D(grid);
    for (size_t k = 0; k < c.inv.v.size(); ++k) c.inv.v[k] = 1.0 / c.u0.v[k];
    c.inv_x = ddx(c.inv);
    c.inv_y = ddy(c.inv);
    c.inv_xy = ddy(c.inv_x);
    c.inv_yy = d2y(c.inv);
    c.inv_xyy = d2y(c.inv_x);
    c.u0_xy = ddy(layer0.u_p0x);          // u_e^0 part is x-independent
    c.u0_xxy = ddy(d2x(layer0.u_p0));
    c.ratio = c.u0_yy * c.inv;
    c.ratio_x = ddx(c.ratio);
    c.vsum = layer0.v_p0 + eul.ve1;
    c.vsum_y_over_u0 = ddy(c.vsum * c.inv);
    c.vp0_x = ddx(layer0.v_p0);
    c.vex_over_u0 = eul.ve1_x * c.inv;
    c.vex_over_u0_y = ddy(c.vex_over_u0);
    c.ve1_z = eul.ve1_z;
    c.ve1_xz = eul.ve1_xz;
    c.uex1_wall = eul.uex1_wall;
    c.uexx1_wall = eul.uexx1_wall;

    // F_p = -u_ez^0 [y u_px^0 + v_p^0] - y v_ez^1 u_py^0 - u_e^1 u_px^0 - u_p^0 u_ex^1
    // with u_ex^1 = -v_ez^1 exactly by the divergence-free recovery.
    const Field2D up0_y = ddy(layer0.u_p0);
    c.F_p = Field2D(grid);
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.ny; ++j) {
            const double y = grid.y[j];
            const double uez0 = pd.u_e0.d(se * y);
            c.F_p(i, j) = -uez0 * (y * layer0.u_p0x(i, j) + layer0.v_p0(i, j)) -
                          y * eul.ve1_z(i, j) * up0_y(i, j) -
                          eul.ue1(i, j) * layer0.u_p0x(i, j) +
                          layer0.u_p0(i, j) * eul.ve1_z(i, j);
        }
    c.F_py = ddy(c.F_p);
    c.F_pxy = ddy(ddx(c.F_p));

    c.lift_shape.resize(grid.ny);
    c.lift_shape_y.resize(grid.ny);
    c.lift_shape_yy.resize(grid.ny);
    Field2D lyy_over_u0(grid);
    for (int j = 0; j < grid.ny; ++j) {
        const double y = grid.y[j];
        c.lift_shape[j] = y * pd.chi(y);
        c.lift_shape_y[j] = pd.chi(y) + y * pd.chi.d(y);
        c.lift_shape_yy[j] = 2.0 * pd.chi.d(y) + y * pd.chi.dd(y);
        for (int i = 0; i < grid.nx; ++i)
            lyy_over_u0(i, j) = c.lift_shape_yy[j] * c.inv(i, j);
    }
    c.lift_term_yy = d2y(lyy_over_u0);
    return c;
}

double wall_compat_defect(const ProblemData& pd, const Prandtl1Context& ctx) {
    const Field2D u0_x = ddx(ctx.u0);
    return ctx.F_p(0, 0) + pd.u_b * ctx.uex1_wall[0] -
           pd.ubar1(0.0) * u0_x(0, 0) + pd.ubar1.dd(0.0);
}

ProblemData enforce_wall_compat(const ProblemData& pd, const Prandtl1Context& ctx) {
    const double c = -0.5 * wall_compat_defect(pd, ctx);
    ProblemData out = pd;
    const Profile1D base = pd.ubar1;
    out.ubar1 = Profile1D::analytic(
        [base, c](double y) { return base(y) + c * y * y * std::exp(-y); },
        [base, c](double y) { return base.d(y) + c * (2.0 * y - y * y) * std::exp(-y); },
        [base, c](double y) {
            return base.dd(y) + c * (2.0 - 4.0 * y + y * y) * std::exp(-y);
        });
    return out;
}

BoundarySeed boundary_seed(const ProblemData& pd, const Prandtl1Context& ctx) {
    const Grid2D& grid = *ctx.grid;
    const int ny = grid.ny;
    BoundarySeed s;

    std::vector<double> ub1(ny), ub1_y(ny), ub1_yy(ny);
    for (int j = 0; j < ny; ++j) {
        ub1[j] = pd.ubar1(grid.y[j]);
        ub1_y[j] = pd.ubar1.d(grid.y[j]);
        ub1_yy[j] = pd.ubar1.dd(grid.y[j]);
    }
    s.psi = cumtrapz(grid.y, ub1);

    std::vector<double> u0(ny), u0y(ny), u0x(ny), u0xx(ny), u0xy(ny), u0xxy(ny);
    std::vector<double> vsum(ny), vsumx(ny), Fp(ny), Fpx(ny);
    {
        const Field2D du0x = ddx(ctx.u0);
        const Field2D du0xx = d2x(ctx.u0);
        const Field2D dvsumx = ddx(ctx.vsum);
        const Field2D dFpx = ddx(ctx.F_p);
        for (int j = 0; j < ny; ++j) {
            u0[j] = ctx.u0(0, j);
            u0y[j] = ctx.u0_y(0, j);
            u0x[j] = du0x(0, j);
            u0xx[j] = du0xx(0, j);
            u0xy[j] = ctx.u0_xy(0, j);
            u0xxy[j] = ctx.u0_xxy(0, j);
            vsum[j] = ctx.vsum(0, j);
            vsumx[j] = dvsumx(0, j);
            Fp[j] = ctx.F_p(0, j);
            Fpx[j] = dFpx(0, j);
        }
    }

    s.w.resize(ny);
    s.w_x.resize(ny);
    for (int j = 0; j < ny; ++j) {
        s.w[j] = u0[j] * ub1[j] - u0y[j] * s.psi[j];
        s.w_x[j] = -u0xy[j] * s.psi[j] - vsum[j] * ub1_y[j] + ub1_yy[j] + Fp[j];
    }

    // psi = u^0 int_0^y w/(u^0)^2; x-differentiate the representation
    std::vector<double> integ(ny), integ_x(ny);
    for (int j = 0; j < ny; ++j) {
        const double i2 = 1.0 / (u0[j] * u0[j]);
        integ[j] = s.w[j] * i2;
        integ_x[j] = s.w_x[j] * i2 - 2.0 * s.w[j] * u0x[j] * i2 / u0[j];
    }
    const std::vector<double> I = cumtrapz(grid.y, integ);
    const std::vector<double> Ix = cumtrapz(grid.y, integ_x);

    std::vector<double> psi_x(ny);
    for (int j = 0; j < ny; ++j) psi_x[j] = u0x[j] * I[j] + u0[j] * Ix[j];
    s.v0.resize(ny);
    for (int j = 0; j < ny; ++j) s.v0[j] = -psi_x[j];

    const std::vector<double> upx = deriv1(grid.y, psi_x);
    const std::vector<double> upxy = deriv1(grid.y, upx);
    const std::vector<double> upxyy = deriv2(grid.y, upx);
    std::vector<double> w_xx(ny), integ_xx(ny);
    for (int j = 0; j < ny; ++j) {
        w_xx[j] = -u0xxy[j] * s.psi[j] - u0xy[j] * psi_x[j] - vsumx[j] * ub1_y[j] -
                  vsum[j] * upxy[j] + upxyy[j] + Fpx[j];
        const double i2 = 1.0 / (u0[j] * u0[j]);
        integ_xx[j] = w_xx[j] * i2 - 4.0 * s.w_x[j] * u0x[j] * i2 / u0[j] +
                      s.w[j] * (-2.0 * u0xx[j] * i2 / u0[j] +
                                6.0 * u0x[j] * u0x[j] * i2 / (u0[j] * u0[j]));
    }
    const std::vector<double> Ixx = cumtrapz(grid.y, integ_xx);
    s.vx0.resize(ny);
    for (int j = 0; j < ny; ++j)
        s.vx0[j] = -(u0xx[j] * I[j] + 2.0 * u0x[j] * Ix[j] + u0[j] * Ixx[j]);
    return s;
}

SourcePair assemble_sources(const ProblemData& pd, const Prandtl1Context& ctx,
                            const Field2D& u_p, const Field2D& v_p) {
    const Grid2D& grid = *ctx.grid;
    const double se = std::sqrt(pd.eps);
    SourcePair out;

    const Field2D u_py = ddy(u_p);
    const Field2D u_pyy = d2y(u_p);
    const Field2D v_py = ddy(v_p);
    const Field2D v_pyy = d2y(v_p);
    // divergence-free identities: u_px = -v_py, u_pxy = -v_pyy
    const Field2D u_px = -1.0 * v_py;
    const Field2D u_pxy = -1.0 * v_pyy;

    out.terms["f_visc_x"] = u_pyy * ctx.inv_x;
    out.terms["f_visc_xy"] = u_py * ctx.inv_xy;
    out.terms["f_advect"] = (ctx.vsum * ctx.inv) * v_pyy;
    out.terms["f_curv"] = 2.0 * (v_pyy * ctx.inv_y);
    out.terms["f_euler"] = ctx.vex_over_u0 * u_py;

    out.f = Field2D(grid);
    for (const char* name : {"f_visc_x", "f_visc_xy", "f_advect", "f_curv", "f_euler"})
        out.f = out.f + out.terms.at(name);

    // G_p group hit by (1/u0)_x
    Field2D gp(grid);
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.ny; ++j)
            gp(i, j) = ctx.F_py(i, j) - u_p(i, j) * ctx.u0_xy(i, j) -
                       ctx.vsum(i, j) * u_pyy(i, j) -
                       se * ctx.ve1_z(i, j) * u_py(i, j);
    out.terms["g_Gp"] = gp * ctx.inv_x;

    // x-derivative group hit by 1/u0
    Field2D gx(grid);
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.ny; ++j)
            gx(i, j) = ctx.F_pxy(i, j) - u_px(i, j) * ctx.u0_xy(i, j) -
                       u_p(i, j) * ctx.u0_xxy(i, j) -
                       ctx.vp0_x(i, j) * u_pyy(i, j) -
                       se * ctx.ve1_xz(i, j) * u_py(i, j) -
                       se * ctx.ve1_z(i, j) * u_pxy(i, j);
    out.terms["g_Gpx"] = gx * ctx.inv;

    out.terms["g_euler_y"] = -1.0 * (ctx.vex_over_u0_y * u_py);
    out.terms["g_advect_y"] = -1.0 * (ctx.vsum_y_over_u0 * v_pyy);
    out.terms["g_curv"] = -2.0 * (v_pyy * ctx.inv_yy);
    out.terms["g_visc_xy"] = -2.0 * (u_pyy * ctx.inv_xy);
    out.terms["g_visc_yy"] = -1.0 * (u_pxy * ctx.inv_yy);
    out.terms["g_visc_xyy"] = -1.0 * (u_py * ctx.inv_xyy);
    out.terms["g_ratio_x"] = -1.0 * (ctx.ratio_x * v_p);

    Field2D glift(grid);
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.ny; ++j)
            glift(i, j) = -ctx.lift_shape_yy[j] * ctx.uexx1_wall[i] +
                          ctx.ratio(i, j) * ctx.lift_shape[j] * ctx.uexx1_wall[i] +
                          ctx.lift_term_yy(i, j) * ctx.uex1_wall[i];
    out.terms["g_lift"] = glift;

    out.g = Field2D(grid);
    for (const char* name : {"g_Gp", "g_Gpx", "g_euler_y", "g_advect_y", "g_curv",
                             "g_visc_xy", "g_visc_yy", "g_visc_xyy", "g_ratio_x",
                             "g_lift"})
        out.g = out.g + out.terms.at(name);

    out.f.require_finite("prandtl1 source f");
    out.g.require_finite("prandtl1 source g");
    return out;
}

namespace {

// Tridiagonal application of M = -d_yy + ratio on the Dirichlet space.
void apply_M(const std::vector<double>& ratio, double h, const std::vector<double>& v,
             std::vector<double>& out) {
    const int m = static_cast<int>(v.size());  // interior values, v[0] ~ node 1
    for (int k = 0; k < m; ++k) {
        const double vm = (k > 0) ? v[k - 1] : 0.0;
        const double vp = (k + 1 < m) ? v[k + 1] : 0.0;
        out[k] = -(vm - 2.0 * v[k] + vp) / (h * h) + ratio[k] * v[k];
    }
}

}  // namespace

Field2D march_corrector(const ProblemData& pd, const Prandtl1Context& ctx,
                        const Field2D& f, const Field2D& g,
                        const std::vector<double>& vbar_inflow) {
    (void)pd;
    const Grid2D& grid = *ctx.grid;
    if (!grid.uniform_y())
        throw ConfigError("march_corrector: uniform y grid required");
    const int nx = grid.nx, ny = grid.ny;
    const int m = ny - 2;
    const double h = grid.y[1] - grid.y[0];

    const Field2D rhs_field = ddy(f) + g;

    Field2D vbar(grid);
    for (int j = 0; j < ny; ++j) vbar(0, j) = vbar_inflow[j];
    vbar(0, 0) = 0.0;
    vbar(0, ny - 1) = 0.0;

    // Unknowns are nodes 1..ny-2 (v = 0 at the ends is eliminated). The PDE is
    // collocated at nodes 2..ny-3; the rows at nodes 1 and ny-2 impose
    // v_y = 0 at y = 0 and y = Ymax strongly (second-order one-sided). No
    // ghost values enter, so the kernel mode with v_y(0) != 0 cannot drift in.
    std::vector<double> prev(m), ratio(m), rhs(m), Mv(m);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    std::vector<Eigen::Triplet<double>> trip;

    for (int n = 0; n + 1 < nx; ++n) {
        const double dx = grid.x[n + 1] - grid.x[n];
        for (int k = 0; k < m; ++k) {
            prev[k] = vbar(n, k + 1);
            ratio[k] = ctx.ratio(n + 1, k + 1);
        }

        trip.clear();
        auto add = [&](int r, int c, double val) {
            if (c >= 0 && c < m && val != 0.0) trip.emplace_back(r, c, val);
        };
        const double h2 = h * h, h4 = h2 * h2;
        // boundary-condition rows: 4 v(1) - v(2) = 0 and 4 v(ny-2) - v(ny-3) = 0
        add(0, 0, 4.0);
        add(0, 1, -1.0);
        add(m - 1, m - 1, 4.0);
        add(m - 1, m - 2, -1.0);
        for (int k = 1; k + 1 < m; ++k) {
            // M part
            add(k, k, 2.0 / h2 + ratio[k]);
            add(k, k - 1, -1.0 / h2);
            add(k, k + 1, -1.0 / h2);
            // K part: (1/h2) [q_{i-1} - 2 q_i + q_{i+1}] with i = k+1 and
            // q_j = v_yy,j / u0_j over nodes 1..ny-2 (3-point v_yy, end
            // values of v are zero)
            const int i = k + 1;
            auto addq = [&](int node, double coef) {
                const double w = coef * ctx.inv(n + 1, node) / h4;
                add(k, node - 2, w);
                add(k, node - 1, -2.0 * w);
                add(k, node, w);
            };
            addq(i - 1, dx);
            addq(i, -2.0 * dx);
            addq(i + 1, dx);
        }
        Eigen::SparseMatrix<double> A(m, m);
        A.setFromTriplets(trip.begin(), trip.end());
        A.makeCompressed();
        lu.compute(A);
        if (lu.info() != Eigen::Success)
            throw SolverError("march_corrector: step factorization failed at x = " +
                              std::to_string(grid.x[n + 1]));

        apply_M(ratio, h, prev, Mv);
        for (int k = 0; k < m; ++k)
            rhs[k] = Mv[k] + dx * rhs_field(n + 1, k + 1);
        rhs[0] = 0.0;
        rhs[m - 1] = 0.0;
        Eigen::VectorXd b = Eigen::Map<Eigen::VectorXd>(rhs.data(), m);
        Eigen::VectorXd sol = lu.solve(b);
        if (!sol.allFinite())
            throw SolverError("march_corrector: step solve failed at x = " +
                              std::to_string(grid.x[n + 1]));
        vbar(n + 1, 0) = 0.0;
        vbar(n + 1, ny - 1) = 0.0;
        for (int k = 0; k < m; ++k) vbar(n + 1, k + 1) = sol[k];
    }
    vbar.require_finite("v_bar");
    return vbar;
}

std::pair<Field2D, Field2D> march_up(const ProblemData& pd,
                                     const Prandtl1Context& ctx) {
    const Grid2D& grid = *ctx.grid;
    const int nx = grid.nx, ny = grid.ny;
    if (!grid.uniform_y()) throw ConfigError("march_up: uniform y grid required");
    const double h = grid.y[1] - grid.y[0];

    // wall trace of u_e^1
    std::vector<double> ue1_wall = cumtrapz(grid.x, ctx.uex1_wall);
    for (double& v : ue1_wall) v += pd.ub1(0.0);

    Field2D u_p(grid), v_p(grid);
    std::vector<double> u_prev(ny), u_cur(ny), v_iter(ny, 0.0), v_new(ny);
    for (int j = 0; j < ny; ++j) u_prev[j] = pd.ubar1(grid.y[j]);
    u_prev[0] = -ue1_wall[0];
    u_prev[ny - 1] = 0.0;
    for (int j = 0; j < ny; ++j) u_p(0, j) = u_prev[j];
    // inflow v from the inflow slope of the wall data and ubar1 alone is not
    // known pointwise; the first station's Picard fills v_p(0,.) consistently
    std::vector<double> sub(ny - 2), dia(ny - 2), sup(ny - 2), rhs(ny - 2), dudx(ny);

    for (int n = 0; n + 1 < nx; ++n) {
        const double dx = grid.x[n + 1] - grid.x[n];
        for (int j = 0; j < ny; ++j) v_iter[j] = v_p(n, j);
        double change = std::numeric_limits<double>::infinity();
        const double uwall = -ue1_wall[n + 1];
        for (int it = 0; it < 40 && change > pd.tol.tol_newton; ++it) {
            for (int j = 1; j + 1 < ny; ++j) {
                const int k = j - 1;
                const double u0 = ctx.u0(n + 1, j);
                const double u0x = -ctx.inv_x(n + 1, j) * u0 * u0;  // u0_x = -inv_x u0^2
                const double adv = ctx.vsum(n + 1, j);
                sub[k] = -adv / (2 * h) - 1.0 / (h * h);
                sup[k] = adv / (2 * h) - 1.0 / (h * h);
                dia[k] = u0 / dx + u0x + 2.0 / (h * h);
                rhs[k] = ctx.F_p(n + 1, j) + u0 * u_prev[j] / dx -
                         v_iter[j] * ctx.u0_y(n + 1, j);
            }
            rhs[0] -= sub[0] * uwall;
            // top Dirichlet u=0 contributes nothing
            const std::vector<double> sol = solve_tridiag(sub, dia, sup, rhs);
            u_cur[0] = uwall;
            u_cur[ny - 1] = 0.0;
            for (int j = 1; j + 1 < ny; ++j) u_cur[j] = sol[j - 1];
            for (int j = 0; j < ny; ++j) dudx[j] = (u_cur[j] - u_prev[j]) / dx;
            v_new = cumtrapz(grid.y, dudx);
            change = 0.0;
            for (int j = 0; j < ny; ++j) {
                v_new[j] = -v_new[j];
                change = std::max(change, std::abs(v_new[j] - v_iter[j]));
                v_iter[j] = v_new[j];
            }
        }
        if (!(change <= std::max(pd.tol.tol_newton, 1e-9)))
            throw SolverError("march_up: step Picard stalled at x = " +
                              std::to_string(grid.x[n + 1]));
        for (int j = 0; j < ny; ++j) {
            u_p(n + 1, j) = u_cur[j];
            v_p(n + 1, j) = v_iter[j];
        }
        u_prev = u_cur;
    }
    // the inflow slice of v_p: one-sided consistency with the first interior
    // stations (v_p(0,.) is not independent data)
    for (int j = 0; j < ny; ++j) v_p(0, j) = 2.0 * v_p(1, j) - v_p(2, j);
    u_p.require_finite("u_p (march_up)");
    v_p.require_finite("v_p (march_up)");
    return {std::move(u_p), std::move(v_p)};
}

Field2D recover_up(const ProblemData& pd, const Prandtl1Context& ctx,
                   const Field2D& v_p, double* wall_defect) {
    const Grid2D& grid = *ctx.grid;
    const Field2D v_py = ddy(v_p);
    Field2D u_p(grid);
    std::vector<double> line(grid.nx);
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) line[i] = v_py(i, j);
        const std::vector<double> acc = cumtrapz(grid.x, line);
        const double ub1 = pd.ubar1(grid.y[j]);
        for (int i = 0; i < grid.nx; ++i) u_p(i, j) = ub1 - acc[i];
    }
    if (wall_defect) {
        // u_p(x,0) should match -u_e^1(x,0) = -(ub1(0) - int v_ez(.,0));
        // the context carries u_ex^1(x,0), so rebuild the wall trace from it.
        std::vector<double> uex(grid.nx);
        for (int i = 0; i < grid.nx; ++i) uex[i] = ctx.uex1_wall[i];
        const std::vector<double> ue1_wall_delta = cumtrapz(grid.x, uex);
        double worst = 0.0;
        for (int i = 0; i < grid.nx; ++i) {
            const double ue1_wall = pd.ub1(0.0) + ue1_wall_delta[i];
            worst = std::max(worst, std::abs(u_p(i, 0) + ue1_wall));
        }
        *wall_defect = worst;
    }
    return u_p;
}

std::pair<Field2D, Field2D> apply_cutoff(const ProblemData& pd, const Field2D& u_p,
                                         const Field2D& v_p) {
    const Grid2D& grid = *u_p.grid;
    const double se = std::sqrt(pd.eps);
    Field2D u1(grid), v1(grid);
    std::vector<double> col(grid.ny);
    for (int i = 0; i < grid.nx; ++i) {
        for (int j = 0; j < grid.ny; ++j) col[j] = u_p(i, j);
        const std::vector<double> acc = cumtrapz(grid.y, col);
        for (int j = 0; j < grid.ny; ++j) {
            const double s = se * grid.y[j];
            u1(i, j) = pd.chi(s) * u_p(i, j) + se * pd.chi.d(s) * acc[j];
            v1(i, j) = pd.chi(s) * v_p(i, j);
        }
    }
    return {std::move(u1), std::move(v1)};
}

Field2D build_pressure2(const ProblemData& pd, const PrandtlLayer0& layer0,
                        const EulerSampled& eul, const Grid2D& grid) {
    const double se = std::sqrt(pd.eps);
    const Field2D vp0_x = ddx(layer0.v_p0);
    const Field2D vp0_y = ddy(layer0.v_p0);
    const Field2D vp0_yy = d2y(layer0.v_p0);
    Field2D integrand(grid);
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.ny; ++j) {
            const double ue0 = pd.u_e0(se * grid.y[j]);
            integrand(i, j) =
                (ue0 + layer0.u_p0(i, j)) * vp0_x(i, j) +
                layer0.u_p0(i, j) * eul.ve1_x(i, j) +
                (layer0.v_p0(i, j) + eul.ve1(i, j)) *
                    (vp0_y(i, j) + se * eul.ve1_z(i, j)) -
                vp0_yy(i, j) - pd.eps * eul.ve1_zz(i, j);
        }
    Field2D p2(grid);
    std::vector<double> col(grid.ny);
    for (int i = 0; i < grid.nx; ++i) {
        for (int j = 0; j < grid.ny; ++j) col[j] = integrand(i, j);
        const std::vector<double> acc = upper_tail_integral(grid.y, col);
        for (int j = 0; j < grid.ny; ++j) p2(i, j) = acc[j];
    }
    p2.require_finite("p_p2");
    return p2;
}

namespace {

// sup_x int |v_yy|^2 dy + iint |v_xy|^2 of a field with homogeneous data
double triple_norm(const Field2D& v) {
    const Grid2D& grid = *v.grid;
    const Field2D vyy = d2y(v);
    const Field2D vxy = ddy(ddx(v));
    double sup = 0.0;
    for (int i = 0; i < grid.nx; ++i) {
        double line = 0.0;
        for (int j = 0; j < grid.ny; ++j) line += grid.wy[j] * vyy(i, j) * vyy(i, j);
        sup = std::max(sup, line);
    }
    double acc = 0.0;
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.ny; ++j)
            acc += grid.wx[i] * grid.wy[j] * vxy(i, j) * vxy(i, j);
    return sup + acc;
}

}  // namespace

PrandtlCorrector1 solve_prandtl1(const ProblemData& pd_in, const PrandtlLayer0& layer0,
                                 const EulerCorrector& ec, const Grid2D& gz,
                                 const Grid2D& main_grid, int max_outer,
                                 double outer_tol, Prandtl1Formulation form) {
    PrandtlCorrector1 out;
    const double se0 = std::sqrt(pd_in.eps);
    const double want = 1.3 / se0;
    Grid2D egrid_storage;
    const Grid2D* gridp = &main_grid;
    const PrandtlLayer0* l0 = &layer0;
    PrandtlLayer0 layer0_ext;
    const bool extended = want > main_grid.Ymax && main_grid.uniform_y();
    if (extended) {
        const double dy = main_grid.y[1] - main_grid.y[0];
        const int extra = static_cast<int>(std::ceil((want - main_grid.Ymax) / dy));
        egrid_storage = make_grid(main_grid.L, main_grid.Ymax + extra * dy,
                                  main_grid.nx, main_grid.ny + extra);
        gridp = &egrid_storage;
        layer0_ext = march_prandtl0(pd_in, egrid_storage);
        l0 = &layer0_ext;
    }
    const Grid2D& grid = *gridp;
    out.Ymax_march = grid.Ymax;
    const EulerSampled eul = sample_euler(ec, gz, grid, pd_in.eps);

    const Prandtl1Context ctx = build_prandtl1_context(pd_in, *l0, eul, grid);
    // the corner constraint ties ubar1''(0) to the zeroth-order data; enforce
    // it so the march does not start from an incompatible trace
    const ProblemData pd = enforce_wall_compat(pd_in, ctx);
    out.seed = boundary_seed(pd, ctx);

    Field2D u_p(grid), v_p(grid), vbar_prev(grid);
    if (form == Prandtl1Formulation::UMarch) {
        auto res = march_up(pd, ctx);
        u_p = std::move(res.first);
        v_p = std::move(res.second);
        out.sources = assemble_sources(pd, ctx, u_p, v_p);
        out.outer_iters = 1;
        out.outer_resid = 0.0;
        for (int i = 0; i < grid.nx; ++i)
            for (int j = 0; j < grid.ny; ++j)
                vbar_prev(i, j) = v_p(i, j) - ctx.lift_shape[j] * ctx.uex1_wall[i];
    } else {
        // inflow slice of the lifted unknown
        std::vector<double> vbar0(grid.ny);
        for (int j = 0; j < grid.ny; ++j)
            vbar0[j] = out.seed.v0[j] - ctx.lift_shape[j] * ctx.uex1_wall[0];
        vbar0[0] = 0.0;
        vbar0[grid.ny - 1] = 0.0;

        // starting iterate: inflow data spread across x
        for (int i = 0; i < grid.nx; ++i)
            for (int j = 0; j < grid.ny; ++j) {
                v_p(i, j) = vbar0[j] + ctx.lift_shape[j] * ctx.uex1_wall[i];
                u_p(i, j) = pd.ubar1(grid.y[j]);
            }
        double resid = 0.0;
        int iter = 0;
        for (; iter < max_outer; ++iter) {
            out.sources = assemble_sources(pd, ctx, u_p, v_p);
            Field2D vbar = march_corrector(pd, ctx, out.sources.f, out.sources.g, vbar0);
            for (int i = 0; i < grid.nx; ++i)
                for (int j = 0; j < grid.ny; ++j)
                    v_p(i, j) = vbar(i, j) + ctx.lift_shape[j] * ctx.uex1_wall[i];
            u_p = recover_up(pd, ctx, v_p, nullptr);

            const double base = triple_norm(vbar);
            const double diff = triple_norm(vbar - vbar_prev);
            resid = (base > 1e-300) ? std::sqrt(diff / std::max(base, 1e-300)) : 0.0;
            vbar_prev = vbar;
            if (resid <= outer_tol) {
                ++iter;
                break;
            }
        }
        out.outer_iters = iter;
        out.outer_resid = resid;
        if (resid > 1e-3)
            throw SolverError("solve_prandtl1: fixed-point sweep did not settle, "
                              "relative change = " + std::to_string(resid));
    }

    // discrete defect of the wall Neumann identity v_py(x,0) = u_ex^1(x,0)
    {
        const Field2D v_py = ddy(v_p);
        double worst = 0.0;
        for (int i = 0; i < grid.nx; ++i)
            worst = std::max(worst, std::abs(v_py(i, 0) - ctx.uex1_wall[i]));
        out.wall_defect = worst;
    }

    auto cut = apply_cutoff(pd, u_p, v_p);
    const Field2D p2 = build_pressure2(pd, *l0, eul, grid);

    // restrict march-domain fields back onto the caller's grid (shared nodes)
    auto restrict_to_main = [&](const Field2D& f) {
        Field2D r(main_grid);
        for (int i = 0; i < main_grid.nx; ++i)
            for (int j = 0; j < main_grid.ny; ++j) r(i, j) = f(i, j);
        return r;
    };
    out.v_bar = restrict_to_main(vbar_prev);
    out.v_p = restrict_to_main(v_p);
    out.u_p = restrict_to_main(u_p);
    out.u_p1 = restrict_to_main(cut.first);
    out.v_p1 = restrict_to_main(cut.second);
    out.p_p2 = restrict_to_main(p2);
    if (extended) {
        out.sources.f = restrict_to_main(out.sources.f);
        out.sources.g = restrict_to_main(out.sources.g);
        out.sources.terms.clear();  // diagnostics live on the march grid
    }
    return out;
}

}  // namespace blayer
