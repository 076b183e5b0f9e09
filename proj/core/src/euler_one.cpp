#include "blayer/euler_one.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>

#include "blayer/interp.hpp"

namespace blayer {

Grid2D make_euler_grid(const ProblemData& pd, int nx, int nz, double Zmax) {
    // need about 8 cells inside the corner layer {z <= eps}
    const double uniform_dz = Zmax / (nz - 1);
    if (pd.eps < 8.0 * uniform_dz) {
        // pick beta so that the first spacing is ~ eps/10
        double beta = 2.0;
        for (; beta < 14.0; beta += 0.25) {
            const double tb = std::tanh(beta);
            const double first = Zmax * (1.0 - std::tanh(beta * (1.0 - 1.0 / (nz - 1))) / tb);
            if (first <= pd.eps / 10.0) break;
        }
        return make_grid(pd.L, Zmax, nx, nz, {Stretch::Tanh, beta});
    }
    return make_grid(pd.L, Zmax, nx, nz);
}

BoundaryLift build_boundary_lift(const ProblemData& pd, const PrandtlLayer0& layer0,
                                 const Grid2D& gz, double tol_lift) {
    BoundaryLift out;
    const int nx = gz.nx, nz = gz.ny;
    std::vector<double> wall(nx);  // v_p^0(x, 0) on the shared x nodes
    for (int i = 0; i < nx; ++i) wall[i] = layer0.v_p0(i, 0);
    const double c0 = wall.front(), cL = wall.back();

    out.B = Field2D(gz);
    if (std::abs(c0) >= tol_lift && std::abs(cL) >= tol_lift) {
        for (int i = 0; i < nx; ++i) {
            const double t = gz.x[i] / gz.L;
            for (int j = 0; j < nz; ++j) {
                const double z = gz.y[j];
                out.B(i, j) =
                    ((1.0 - t) * pd.Vb0(z) / c0 + t * pd.VbL(z) / cL) * wall[i];
            }
        }
    } else {
        out.degenerate = true;
        for (int i = 0; i < nx; ++i) {
            const double t = gz.x[i] / gz.L;
            const double corner = -wall[i] - (1.0 - t) * pd.Vb0(0.0) - t * pd.VbL(0.0);
            for (int j = 0; j < nz; ++j) {
                const double z = gz.y[j];
                out.B(i, j) = (1.0 - t) * pd.Vb0(z) + t * pd.VbL(z) +
                              corner * std::exp(-z);
            }
        }
    }

    // F_e is the lift residual with the sign that makes v_e = B + w solve
    // -u_e^0 Lap v_e + u_ezz^0 v_e = E_b when w solves the homogeneous-BC
    // problem with RHS E_b + F_e.
    const Field2D lap = d2x(out.B) + d2y(out.B);
    out.F_e = Field2D(gz);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < nz; ++j) {
            const double z = gz.y[j];
            out.F_e(i, j) = pd.u_e0(z) * lap(i, j) - pd.u_e0.dd(z) * out.B(i, j);
        }
    out.F_e.require_finite("F_e");
    return out;
}

Field2D build_corner_corrector(const ProblemData& pd, const Field2D& F_e) {
    const Grid2D& gz = *F_e.grid;
    int inside = 0;
    for (double z : gz.y)
        if (z <= pd.eps) ++inside;
    if (inside < 8)
        throw ResolutionError("build_corner_corrector: fewer than 8 z-nodes inside "
                              "{z <= eps}; increase nz or use tanh stretching");
    Field2D E_b(gz);
    for (int i = 0; i < gz.nx; ++i)
        for (int j = 0; j < gz.ny; ++j)
            E_b(i, j) = -pd.chi(gz.y[j] / pd.eps) * F_e(i, 0);
    return E_b;
}

namespace {

// -Lap w + (u_ezz^0/u_e^0) w = rhs with homogeneous Dirichlet data; the
// division by u_e^0 symmetrizes the operator (positive by the layer's
// positivity identity).
Field2D solve_symmetrized(const ProblemData& pd, const Grid2D& gz,
                          const Field2D& rhs_raw, double* rel_residual) {
    const int nx = gz.nx, nz = gz.ny;
    for (double z : gz.y)
        if (!(pd.u_e0(z) > 0.0))
            throw PreconditionError("euler solve: u_e^0 must be positive");

    const int nun = (nx - 2) * (nz - 2);
    auto idx = [nz](int i, int j) { return (i - 1) * (nz - 2) + (j - 1); };

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(nun) * 5);
    Eigen::VectorXd b(nun);
    const double dx = gz.x[1] - gz.x[0];
    for (int i = 1; i + 1 < nx; ++i) {
        for (int j = 1; j + 1 < nz; ++j) {
            const double h1 = gz.y[j] - gz.y[j - 1];
            const double h2 = gz.y[j + 1] - gz.y[j];
            const double czm = 2.0 / (h1 * (h1 + h2));
            const double czp = 2.0 / (h2 * (h1 + h2));
            const double cxx = 1.0 / (dx * dx);
            const double c = pd.u_e0.dd(gz.y[j]) / pd.u_e0(gz.y[j]);
            const int r = idx(i, j);
            trip.emplace_back(r, r, 2.0 * cxx + czm + czp + c);
            if (i > 1) trip.emplace_back(r, idx(i - 1, j), -cxx);
            if (i + 2 < nx) trip.emplace_back(r, idx(i + 1, j), -cxx);
            if (j > 1) trip.emplace_back(r, idx(i, j - 1), -czm);
            if (j + 2 < nz) trip.emplace_back(r, idx(i, j + 1), -czp);
            b[r] = rhs_raw(i, j) / pd.u_e0(gz.y[j]);
        }
    }
    Eigen::SparseMatrix<double> A(nun, nun);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success)
        throw SolverError("euler solve: sparse factorization failed");
    const Eigen::VectorXd sol = lu.solve(b);
    const double bn = b.norm();
    const double res = bn > 0 ? (A * sol - b).norm() / bn : (A * sol - b).norm();
    if (rel_residual) *rel_residual = res;
    if (res > pd.tol.tol_linear * 100)
        throw SolverError("euler solve: relative residual " + std::to_string(res));

    Field2D w(gz);
    for (int i = 1; i + 1 < nx; ++i)
        for (int j = 1; j + 1 < nz; ++j) w(i, j) = sol[idx(i, j)];
    return w;
}

}  // namespace

EulerCorrector solve_euler_corrector(const ProblemData& pd,
                                     const PrandtlLayer0& layer0, const Grid2D& gz) {
    EulerCorrector ec;
    BoundaryLift lift = build_boundary_lift(pd, layer0, gz);
    ec.B = std::move(lift.B);
    ec.F_e = std::move(lift.F_e);
    ec.degenerate_lift = lift.degenerate;
    ec.E_b = build_corner_corrector(pd, ec.F_e);

    ec.w_hom = solve_symmetrized(pd, gz, ec.E_b + ec.F_e, &ec.solve_residual);
    ec.v_e1 = ec.B + ec.w_hom;
    ec.v_e1.require_finite("v_e1");

    // measured positivity constant of int(|w_z|^2 + (u_ezz/u_e) w^2) >= theta0 int |w_z|^2
    {
        const Field2D wz = ddy(ec.w_hom);
        double worst = std::numeric_limits<double>::infinity();
        for (int i = 1; i + 1 < gz.nx; ++i) {
            double qd = 0.0, den = 0.0;
            for (int j = 0; j < gz.ny; ++j) {
                const double c = pd.u_e0.dd(gz.y[j]) / pd.u_e0(gz.y[j]);
                qd += gz.wy[j] * (wz(i, j) * wz(i, j) +
                                  c * ec.w_hom(i, j) * ec.w_hom(i, j));
                den += gz.wy[j] * wz(i, j) * wz(i, j);
            }
            if (den > 1e-14) worst = std::min(worst, qd / den);
        }
        ec.theta0 = std::isfinite(worst) ? worst : 1.0;
    }

    // u_e^1 = u_b^1(z) - int_0^x v_ez^1; p_e^1 by the two line integrals with p_b = 0
    const Field2D vez = ddy(ec.v_e1);
    const Field2D vex = ddx(ec.v_e1);
    ec.u_e1 = Field2D(gz);
    {
        std::vector<double> line(gz.nx);
        for (int j = 0; j < gz.ny; ++j) {
            for (int i = 0; i < gz.nx; ++i) line[i] = vez(i, j);
            const std::vector<double> acc = cumtrapz(gz.x, line);
            for (int i = 0; i < gz.nx; ++i) ec.u_e1(i, j) = pd.ub1(gz.y[j]) - acc[i];
        }
    }
    ec.p_e1 = Field2D(gz);
    {
        const double ue0_w = pd.u_e0(0.0), uez0_w = pd.u_e0.d(0.0);
        std::vector<double> wallline(gz.nx);
        for (int i = 0; i < gz.nx; ++i)
            wallline[i] = -ue0_w * vez(i, 0) + ec.v_e1(i, 0) * uez0_w;
        const std::vector<double> wallint = cumtrapz(gz.x, wallline);
        std::vector<double> col(gz.ny);
        for (int i = 0; i < gz.nx; ++i) {
            for (int j = 0; j < gz.ny; ++j) col[j] = pd.u_e0(gz.y[j]) * vex(i, j);
            const std::vector<double> zint = cumtrapz(gz.y, col);
            for (int j = 0; j < gz.ny; ++j) ec.p_e1(i, j) = -wallint[i] - zint[j];
        }
    }
    ec.u_e1.require_finite("u_e1");
    ec.p_e1.require_finite("p_e1");
    return ec;
}

EulerSampled sample_euler(const EulerCorrector& ec, const Grid2D& gz,
                          const Grid2D& grid, double eps) {
    if (gz.nx != grid.nx)
        throw ConfigError("sample_euler: Euler and layer grids must share x nodes");
    const double se = std::sqrt(eps);
    if (se * grid.Ymax > gz.Ymax + 1e-12)
        throw ConfigError("sample_euler: sqrt(eps) Ymax exceeds Zmax");

    const Field2D ue1_z = ddy(ec.u_e1);
    const Field2D ue1_zz = d2y(ec.u_e1);
    const Field2D ve1_z = ddy(ec.v_e1);
    const Field2D ve1_zz = d2y(ec.v_e1);
    const Field2D ve1_x = ddx(ec.v_e1);
    const Field2D ve1_xz = ddy(ve1_x);
    const Field2D ve1_xx = d2x(ec.v_e1);

    Field2D intEb_z(gz);
    {
        std::vector<double> col(gz.ny);
        for (int i = 0; i < gz.nx; ++i) {
            for (int j = 0; j < gz.ny; ++j) col[j] = ec.E_b(i, j);
            const std::vector<double> acc = cumtrapz(gz.y, col);
            for (int j = 0; j < gz.ny; ++j) intEb_z(i, j) = acc[j];
        }
    }

    EulerSampled s;
    auto resample = [&](const Field2D& src) {
        Field2D out(grid);
        std::vector<double> col(gz.ny);
        for (int i = 0; i < grid.nx; ++i) {
            for (int j = 0; j < gz.ny; ++j) col[j] = src(i, j);
            Pchip interp(gz.y, col);
            for (int j = 0; j < grid.ny; ++j) out(i, j) = interp(se * grid.y[j]);
        }
        return out;
    };
    s.ue1 = resample(ec.u_e1);
    s.ve1 = resample(ec.v_e1);
    s.pe1 = resample(ec.p_e1);
    s.ue1_z = resample(ue1_z);
    s.ue1_zz = resample(ue1_zz);
    s.ve1_z = resample(ve1_z);
    s.ve1_zz = resample(ve1_zz);
    s.ve1_x = resample(ve1_x);
    s.ve1_xz = resample(ve1_xz);
    s.ve1_xx = resample(ve1_xx);
    s.intEb = resample(intEb_z);

    s.uex1_wall.resize(grid.nx);
    s.uexx1_wall.resize(grid.nx);
    for (int i = 0; i < grid.nx; ++i) {
        s.uex1_wall[i] = -ve1_z(i, 0);
        s.uexx1_wall[i] = -ve1_xz(i, 0);
    }
    return s;
}

}  // namespace blayer
