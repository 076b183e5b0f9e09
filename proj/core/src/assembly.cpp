#include "blayer/assembly.hpp"

#include <cmath>

namespace blayer {

ApproxSolution assemble(const ProblemData& pd, const PrandtlLayer0& layer0,
                        const EulerSampled& eul, const PrandtlCorrector1& corr1,
                        const Grid2D& grid) {
    ApproxSolution a;
    a.grid = &grid;
    a.eps = pd.eps;
    const double se = std::sqrt(pd.eps);

    a.eul = eul;
    a.ue0 = Field2D(grid);
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.ny; ++j) a.ue0(i, j) = pd.u_e0(se * grid.y[j]);
    a.up0 = layer0.u_p0;
    a.vp0 = layer0.v_p0;
    a.ue1 = a.eul.ue1;
    a.ve1 = a.eul.ve1;
    a.pe1 = a.eul.pe1;
    a.up1 = corr1.u_p1;
    a.vp1 = corr1.v_p1;
    a.pp2 = corr1.p_p2;

    a.u_app = Field2D(grid);
    a.v_app = Field2D(grid);
    a.p_app = Field2D(grid);
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.ny; ++j) {
            a.u_app(i, j) = a.ue0(i, j) + a.up0(i, j) +
                            se * (a.ue1(i, j) + a.up1(i, j));
            a.v_app(i, j) = a.vp0(i, j) + a.ve1(i, j) + se * a.vp1(i, j);
            a.p_app(i, j) = se * (a.pe1(i, j) + corr1.p_p1) + pd.eps * a.pp2(i, j);
        }
    a.u_app.require_finite("u_app");
    a.v_app.require_finite("v_app");
    a.p_app.require_finite("p_app");
    return a;
}

std::pair<Field2D, Field2D> residuals(const ApproxSolution& a) {
    const Field2D ux = ddx(a.u_app), uy = ddy(a.u_app);
    const Field2D vx = ddx(a.v_app), vy = ddy(a.v_app);
    const Field2D px = ddx(a.p_app), py = ddy(a.p_app);
    const Field2D lap_u = laplace_eps(a.u_app, a.eps);
    const Field2D lap_v = laplace_eps(a.v_app, a.eps);

    Field2D Ru(*a.grid), Rv(*a.grid);
    for (int i = 0; i < a.grid->nx; ++i)
        for (int j = 0; j < a.grid->ny; ++j) {
            Ru(i, j) = a.u_app(i, j) * ux(i, j) + a.v_app(i, j) * uy(i, j) +
                       px(i, j) - lap_u(i, j);
            Rv(i, j) = a.u_app(i, j) * vx(i, j) + a.v_app(i, j) * vy(i, j) +
                       py(i, j) / a.eps - lap_v(i, j);
        }
    return {std::move(Ru), std::move(Rv)};
}

std::map<std::string, double> budget(const ProblemData& pd, const ApproxSolution& a,
                                     const PrandtlLayer0& layer0,
                                     const PrandtlCorrector1& corr1) {
    const Grid2D& grid = *a.grid;
    const double eps = pd.eps;
    const double se = std::sqrt(eps);
    std::map<std::string, double> out;

    const Field2D up0_x = layer0.u_p0x;
    const Field2D up0_y = ddy(layer0.u_p0);

    // E0 via the single-integral form:
    //   sqrt(eps) u_px^0 int_0^y {u_ez^0(se t) - u_ez^0(se y)} dt
    // + sqrt(eps) u_py^0 int_0^y {v_ez^1(x, se t) - v_ez^1(x, se y)} dt
    Field2D E0(grid);
    {
        std::vector<double> uez(grid.ny), col(grid.ny);
        for (int j = 0; j < grid.ny; ++j) uez[j] = pd.u_e0.d(se * grid.y[j]);
        const std::vector<double> uez_acc = cumtrapz(grid.y, uez);
        for (int i = 0; i < grid.nx; ++i) {
            for (int j = 0; j < grid.ny; ++j) col[j] = a.eul.ve1_z(i, j);
            const std::vector<double> vez_acc = cumtrapz(grid.y, col);
            for (int j = 0; j < grid.ny; ++j) {
                const double y = grid.y[j];
                E0(i, j) = se * up0_x(i, j) * (uez_acc[j] - y * uez[j]) +
                           se * up0_y(i, j) * (vez_acc[j] - y * col[j]);
            }
        }
    }
    out["E0"] = norm_L2(E0);

    // R^{u,0} = se {v_p^0+v_e^1} u_ez^0 + se u_ez^0 y u_px^0 + se v_ez^1 y u_py^0
    //           - eps u_ezz^0 + E0
    Field2D Ru0(grid);
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.ny; ++j) {
            const double y = grid.y[j];
            const double uez0 = pd.u_e0.d(se * y);
            const double uezz0 = pd.u_e0.dd(se * y);
            Ru0(i, j) = se * (a.vp0(i, j) + a.ve1(i, j)) * uez0 +
                        se * uez0 * y * up0_x(i, j) +
                        se * a.eul.ve1_z(i, j) * y * up0_y(i, j) - eps * uezz0 +
                        E0(i, j);
        }
    out["Ru0"] = norm_L2(Ru0);

    // R^{u,1} = se [v_p^0+v_e^1] u_ez^1 - eps u_ezz^1 + int_z^infty E_b
    Field2D Ru1(grid);
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.ny; ++j)
            Ru1(i, j) = se * (a.vp0(i, j) + a.ve1(i, j)) * a.eul.ue1_z(i, j) -
                        eps * a.eul.ue1_zz(i, j) + a.eul.intEb(i, j);
    out["Ru1"] = norm_L2(Ru1);

    // R^{v,0} = se [v_p^0+v_e^1] v_ez^1 - eps v_ezz^1
    Field2D Rv0(grid);
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.ny; ++j)
            Rv0(i, j) = se * (a.vp0(i, j) + a.ve1(i, j)) * a.eul.ve1_z(i, j) -
                        eps * a.eul.ve1_zz(i, j);
    out["Rv0"] = norm_L2(Rv0);

    // cut-off error R_p^{u,1}
    {
        const Field2D& u_p = corr1.u_p;
        const Field2D u_py = ddy(u_p);
        Field2D tail(grid);   // se chi'(se y) int_0^y u_p
        Field2D sum_vp(grid); // v_p^0 + v_e^1
        std::vector<double> col(grid.ny);
        for (int i = 0; i < grid.nx; ++i) {
            for (int j = 0; j < grid.ny; ++j) col[j] = u_p(i, j);
            const std::vector<double> acc = cumtrapz(grid.y, col);
            for (int j = 0; j < grid.ny; ++j) {
                tail(i, j) = se * pd.chi.d(se * grid.y[j]) * acc[j];
                sum_vp(i, j) = a.vp0(i, j) + a.ve1(i, j);
            }
        }
        const Field2D tail_x = ddx(tail);
        const Field2D tail_y = ddy(tail);
        const Field2D tail_yy = d2y(tail);
        const Field2D u0 = a.ue0 + a.up0;
        Field2D Ru1p(grid);
        for (int i = 0; i < grid.nx; ++i)
            for (int j = 0; j < grid.ny; ++j) {
                const double s = se * grid.y[j];
                const double band = se * pd.chi.d(s) - eps * pd.chi.dd(s);
                Ru1p(i, j) =
                    u0(i, j) * tail_x(i, j) + up0_x(i, j) * tail(i, j) +
                    sum_vp(i, j) * tail_y(i, j) - tail_yy(i, j) -
                    2.0 * se * pd.chi.d(s) * sum_vp(i, j) * u_py(i, j) +
                    u_p(i, j) * sum_vp(i, j) * band +
                    (1.0 - pd.chi(s)) *
                        (pd.u_e0.d(s) * (grid.y[j] * up0_x(i, j) + a.vp0(i, j)) +
                         grid.y[j] * a.eul.ve1_z(i, j) * up0_y(i, j) +
                         a.ue1(i, j) * up0_x(i, j) -
                         a.up0(i, j) * a.eul.ve1_z(i, j));
            }
        out["Ru1p"] = norm_L2(Ru1p);
    }

    // layer-pressure gradient
    out["px2"] = norm_L2(ddx(corr1.p_p2));

    // eps-order leftovers of R_app^u, lumped
    {
        const Field2D s1 = a.ue1 + a.up1;
        const Field2D s1x = ddx(s1);
        const Field2D s1y = ddy(s1);
        const Field2D px2f = ddx(corr1.p_p2);
        Field2D layer_x2 = a.up0;
        for (int i = 0; i < grid.nx; ++i)
            for (int j = 0; j < grid.ny; ++j)
                layer_x2(i, j) = a.up0(i, j) + se * s1(i, j);
        const Field2D lxx = d2x(layer_x2);
        Field2D left(grid);
        for (int i = 0; i < grid.nx; ++i)
            for (int j = 0; j < grid.ny; ++j)
                left(i, j) = eps * (s1(i, j) * s1x(i, j) + a.vp1(i, j) * s1y(i, j)) +
                             eps * px2f(i, j) - eps * lxx(i, j);
        out["eps_order"] = norm_L2(left);
    }
    return out;
}

ResidualReport residual_report(const ProblemData& pd, const ApproxSolution& a,
                               const PrandtlLayer0& layer0,
                               const PrandtlCorrector1& corr1) {
    ResidualReport rep;
    rep.eps = pd.eps;
    rep.nx = a.grid->nx;
    rep.ny = a.grid->ny;
    auto [Ru, Rv] = residuals(a);
    rep.norm_Ru = norm_L2(Ru);
    rep.norm_Rv = norm_L2(Rv);
    rep.combined = rep.norm_Ru + std::sqrt(pd.eps) * rep.norm_Rv;
    rep.budget = budget(pd, a, layer0, corr1);
    return rep;
}

}  // namespace blayer
