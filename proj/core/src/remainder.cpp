#include "blayer/remainder.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>

#include "blayer/interp.hpp"

namespace blayer {

ShearBackground build_background(const ProblemData& pd, const PrandtlLayer0& layer0,
                                 const EulerSampled& eul, const Grid2D& grid) {
    ShearBackground bg;
    bg.grid = &grid;
    bg.eps = pd.eps;
    const double se = std::sqrt(pd.eps);
    bg.us = Field2D(grid);
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.ny; ++j)
            bg.us(i, j) = pd.u_e0(se * grid.y[j]) + layer0.u_p0(i, j) +
                          se * eul.ue1(i, j);
    bg.vs = layer0.v_p0 + eul.ve1;
    bg.us_x = ddx(bg.us);
    bg.us_y = ddy(bg.us);
    bg.us_yy = d2y(bg.us);
    bg.vs_x = ddx(bg.vs);
    bg.vs_y = ddy(bg.vs);
    bg.min_us = std::numeric_limits<double>::infinity();
    for (double v : bg.us.v) bg.min_us = std::min(bg.min_us, v);
    if (!(bg.min_us > 0.0))
        throw PreconditionError("build_background: u_s must stay positive");
    return bg;
}

struct LinearizedStokes::Impl {
    Eigen::SparseMatrix<double> A;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    int Nu = 0, Nv = 0, Np = 0, N = 0;
};

namespace {

// unknown indices: u(i,j) for i in [1,ncx], v(i,j) for j in [1,ncy-1], p all
inline int iu(const MacGrid& mg, int i, int j) { return (i - 1) * mg.ncy + j; }
inline int iv(const MacGrid& mg, int i, int j) {
    return mg.ncx * mg.ncy + i * (mg.ncy - 1) + (j - 1);
}
inline int ip(const MacGrid& mg, int i, int j) {
    return mg.ncx * mg.ncy + mg.ncx * (mg.ncy - 1) + i * mg.ncy + j;
}

}  // namespace

LinearizedStokes::LinearizedStokes(const ShearBackground& bg, const MacGrid& mg,
                                   double tol_linear)
    : impl_(std::make_unique<Impl>()), mg_(mg), eps_(bg.eps), tol_linear_(tol_linear) {
    const int ncx = mg.ncx, ncy = mg.ncy;
    const double hx = mg.hx, hy = mg.hy, eps = eps_;
    if (ncx < 3 || ncy < 3) throw ConfigError("LinearizedStokes: grid too small");

    // background samples at the staggered points
    auto sample = [&](const Field2D& f, double x, double y) {
        return sample_bilinear(f, x, y);
    };
    us_u_.assign(static_cast<size_t>(ncx + 1) * ncy, 0.0);
    usx_u_ = us_u_;
    usy_u_ = us_u_;
    vs_u_ = us_u_;
    for (int i = 0; i <= ncx; ++i)
        for (int j = 0; j < ncy; ++j) {
            const double x = mg.xu(i), y = mg.yu(j);
            const size_t k = static_cast<size_t>(i) * ncy + j;
            us_u_[k] = sample(bg.us, x, y);
            usx_u_[k] = sample(bg.us_x, x, y);
            usy_u_[k] = sample(bg.us_y, x, y);
            vs_u_[k] = sample(bg.vs, x, y);
        }
    us_v_.assign(static_cast<size_t>(ncx) * (ncy + 1), 0.0);
    vsx_v_ = us_v_;
    vsy_v_ = us_v_;
    vs_v_ = us_v_;
    for (int i = 0; i < ncx; ++i)
        for (int j = 0; j <= ncy; ++j) {
            const double x = mg.xv(i), y = mg.yv(j);
            const size_t k = static_cast<size_t>(i) * (ncy + 1) + j;
            us_v_[k] = sample(bg.us, x, y);
            vsx_v_[k] = sample(bg.vs_x, x, y);
            vsy_v_[k] = sample(bg.vs_y, x, y);
            vs_v_[k] = sample(bg.vs, x, y);
        }

    Impl& im = *impl_;
    im.Nu = ncx * ncy;
    im.Nv = ncx * (ncy - 1);
    im.Np = ncx * ncy;
    im.N = im.Nu + im.Nv + im.Np;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(im.N) * 12);

    auto addU = [&](int r, int i, int j, double c) {
        if (i == 0) return;  // Dirichlet at x=0
        trip.emplace_back(r, iu(mg_, i, j), c);
    };
    auto addV = [&](int r, int i, int j, double c) {
        if (j == 0 || j == ncy) return;  // walls
        trip.emplace_back(r, iv(mg_, i, j), c);
    };
    auto addP = [&](int r, int i, int j, double c) {
        trip.emplace_back(r, ip(mg_, i, j), c);
    };
    // v with the x-ghosts expanded: reflection at x=0, tangential stress at x=L
    auto addVx = [&](int r, int i, int j, double c) {
        if (i == -1) {
            addV(r, 0, j, -c);
        } else if (i == ncx) {
            addV(r, ncx - 1, j, c);
            const double s = c * hx / (eps * hy);
            addU(r, ncx, j, -s);
            addU(r, ncx, j - 1, s);
        } else {
            addV(r, i, j, c);
        }
    };

    // u-momentum rows at interior x-faces
    for (int i = 1; i < ncx; ++i) {
        for (int j = 0; j < ncy; ++j) {
            const int r = iu(mg_, i, j);
            const size_t k = static_cast<size_t>(i) * ncy + j;
            const double us = us_u_[k], usx = usx_u_[k], usy = usy_u_[k],
                         vs = vs_u_[k];
            // us u_x (central)
            addU(r, i + 1, j, us / (2 * hx));
            addU(r, i - 1, j, -us / (2 * hx));
            // u usx
            addU(r, i, j, usx);
            // vs u_y with wall ghosts u(i,-1) = -u(i,0), u(i,ncy) = -u(i,ncy-1)
            if (j + 1 < ncy) addU(r, i, j + 1, vs / (2 * hy));
            else             addU(r, i, ncy - 1, -vs / (2 * hy));
            if (j - 1 >= 0)  addU(r, i, j - 1, -vs / (2 * hy));
            else             addU(r, i, 0, vs / (2 * hy));
            // v~ usy (4-point average)
            for (int di = -1; di <= 0; ++di)
                for (int dj = 0; dj <= 1; ++dj)
                    addV(r, i + di, j + dj, 0.25 * usy);
            // p_x
            addP(r, i, j, 1.0 / hx);
            addP(r, i - 1, j, -1.0 / hx);
            // -u_yy with wall ghosts
            {
                double cdiag = 2.0 / (hy * hy);
                if (j + 1 < ncy) addU(r, i, j + 1, -1.0 / (hy * hy));
                else             cdiag += 1.0 / (hy * hy);
                if (j - 1 >= 0)  addU(r, i, j - 1, -1.0 / (hy * hy));
                else             cdiag += 1.0 / (hy * hy);
                addU(r, i, j, cdiag);
            }
            // -eps u_xx
            addU(r, i + 1, j, -eps / (hx * hx));
            addU(r, i - 1, j, -eps / (hx * hx));
            addU(r, i, j, 2.0 * eps / (hx * hx));
        }
    }
    // stress closure at x=L: 1.5 p(ncx-1) - 0.5 p(ncx-2) - 2 eps u_x = 0
    for (int j = 0; j < ncy; ++j) {
        const int r = iu(mg_, ncx, j);
        addP(r, ncx - 1, j, 1.5);
        addP(r, ncx - 2, j, -0.5);
        addU(r, ncx, j, -2.0 * eps / hx);
        addU(r, ncx - 1, j, 2.0 * eps / hx);
    }
    // v-momentum rows (scaled by eps)
    for (int i = 0; i < ncx; ++i) {
        for (int j = 1; j < ncy; ++j) {
            const int r = iv(mg_, i, j);
            const size_t k = static_cast<size_t>(i) * (ncy + 1) + j;
            const double us = us_v_[k], vsx = vsx_v_[k], vsy = vsy_v_[k],
                         vs = vs_v_[k];
            // eps us v_x
            addVx(r, i + 1, j, eps * us / (2 * hx));
            addVx(r, i - 1, j, -eps * us / (2 * hx));
            // eps vsx u~ (4-point average)
            for (int di = 0; di <= 1; ++di)
                for (int dj = -1; dj <= 0; ++dj)
                    addU(r, i + di, j + dj, 0.25 * eps * vsx);
            // eps vs v_y
            addV(r, i, j + 1, eps * vs / (2 * hy));
            addV(r, i, j - 1, -eps * vs / (2 * hy));
            // eps vsy v
            addV(r, i, j, eps * vsy);
            // p_y
            addP(r, i, j, 1.0 / hy);
            addP(r, i, j - 1, -1.0 / hy);
            // -eps v_yy (wall values are zero and handled by addV)
            addV(r, i, j + 1, -eps / (hy * hy));
            addV(r, i, j - 1, -eps / (hy * hy));
            addV(r, i, j, 2.0 * eps / (hy * hy));
            // -eps^2 v_xx
            addVx(r, i + 1, j, -eps * eps / (hx * hx));
            addVx(r, i - 1, j, -eps * eps / (hx * hx));
            addV(r, i, j, 2.0 * eps * eps / (hx * hx));
        }
    }
    // divergence rows
    for (int i = 0; i < ncx; ++i) {
        for (int j = 0; j < ncy; ++j) {
            const int r = ip(mg_, i, j);
            addU(r, i + 1, j, 1.0 / hx);
            addU(r, i, j, -1.0 / hx);
            addV(r, i, j + 1, 1.0 / hy);
            addV(r, i, j, -1.0 / hy);
        }
    }

    im.A.resize(im.N, im.N);
    im.A.setFromTriplets(trip.begin(), trip.end());
    im.A.makeCompressed();
    im.lu.compute(im.A);
    if (im.lu.info() != Eigen::Success)
        throw SolverError("LinearizedStokes: factorization failed (singular or "
                          "ill-conditioned saddle system)");
}

LinearizedStokes::~LinearizedStokes() = default;
LinearizedStokes::LinearizedStokes(LinearizedStokes&&) noexcept = default;
LinearizedStokes& LinearizedStokes::operator=(LinearizedStokes&&) noexcept = default;

RemainderDiagnostics remainder_diagnostics(const LinearizedStokes& solver,
                                           const MacField& w, double norm_f,
                                           double norm_g) {
    const MacGrid& mg = solver.mg_;
    const int ncx = mg.ncx, ncy = mg.ncy;
    const double hx = mg.hx, hy = mg.hy, eps = solver.eps_;
    RemainderDiagnostics d;
    d.norm_f = norm_f;
    d.norm_g = norm_g;

    double ux2 = 0.0, uy2 = 0.0, vx2 = 0.0, vy2 = 0.0;
    for (int i = 0; i < ncx; ++i)
        for (int j = 0; j < ncy; ++j) {
            const double ux = (w.U(i + 1, j) - w.U(i, j)) / hx;
            const double vy = (w.V(i, j + 1) - w.V(i, j)) / hy;
            ux2 += hx * hy * ux * ux;
            vy2 += hx * hy * vy * vy;
        }
    for (int i = 0; i <= ncx; ++i) {
        const double wxi = hx * ((i == 0 || i == ncx) ? 0.5 : 1.0);
        for (int j = 0; j <= ncy; ++j) {
            const double wyj = hy * ((j == 0 || j == ncy) ? 0.5 : 1.0);
            double uy;
            if (j == 0) uy = 2.0 * w.U(i, 0) / hy;
            else if (j == ncy) uy = -2.0 * w.U(i, ncy - 1) / hy;
            else uy = (w.U(i, j) - w.U(i, j - 1)) / hy;
            uy2 += wxi * wyj * uy * uy;
        }
    }
    for (int j = 1; j < ncy; ++j) {
        const double wyj = hy;
        for (int i = 0; i <= ncx; ++i) {
            const double wxi = hx * ((i == 0 || i == ncx) ? 0.5 : 1.0);
            double vx;
            if (i == 0) vx = 2.0 * w.V(0, j) / hx;
            else if (i == ncx) vx = -(w.U(ncx, j) - w.U(ncx, j - 1)) / (eps * hy);
            else vx = (w.V(i, j) - w.V(i - 1, j)) / hx;
            vx2 += wxi * wyj * vx * vx;
        }
    }
    d.grad_eps_u = std::sqrt(eps * ux2 + uy2);
    d.grad_eps_v = std::sqrt(eps * vx2 + vy2);

    for (int i = 0; i < ncx; ++i)
        for (int j = 0; j < ncy; ++j) {
            const double div = (w.U(i + 1, j) - w.U(i, j)) / hx +
                               (w.V(i, j + 1) - w.V(i, j)) / hy;
            d.div_max = std::max(d.div_max, std::abs(div));
        }

    auto near_corner = [&](double x, double y) {
        const bool nx_ = (x <= 2 * hx) || (x >= mg.L - 2 * hx);
        const bool ny_ = (y <= 2 * hy) || (y >= mg.Ymax - 2 * hy);
        return nx_ && ny_;
    };
    for (int i = 0; i <= ncx; ++i)
        for (int j = 0; j < ncy; ++j)
            if (!near_corner(mg.xu(i), mg.yu(j)))
                d.sup_u = std::max(d.sup_u, std::abs(w.U(i, j)));
    for (int i = 0; i < ncx; ++i)
        for (int j = 0; j <= ncy; ++j)
            if (!near_corner(mg.xv(i), mg.yv(j)))
                d.sup_v = std::max(d.sup_v, std::abs(w.V(i, j)));
    return d;
}

RemainderSolution LinearizedStokes::solve_samples(const std::vector<double>& f_u,
                                                  const std::vector<double>& g_v) const {
    const Impl& im = *impl_;
    const int ncx = mg_.ncx, ncy = mg_.ncy;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(im.N);
    for (int i = 1; i < ncx; ++i)
        for (int j = 0; j < ncy; ++j)
            b[iu(mg_, i, j)] = f_u[static_cast<size_t>(i) * ncy + j];
    for (int i = 0; i < ncx; ++i)
        for (int j = 1; j < ncy; ++j)
            b[iv(mg_, i, j)] = eps_ * g_v[static_cast<size_t>(i) * (ncy + 1) + j];

    Eigen::VectorXd sol = im.lu.solve(b);
    if (!sol.allFinite()) throw SolverError("LinearizedStokes: solve failed");
    const double bn = b.norm();
    const double res = bn > 0 ? (im.A * sol - b).norm() / bn : (im.A * sol - b).norm();
    if (bn > 0 && res > tol_linear_ * 1e4)
        throw SolverError("LinearizedStokes: relative residual " + std::to_string(res));

    RemainderSolution out;
    out.field = MacField(mg_);
    for (int i = 1; i <= ncx; ++i)
        for (int j = 0; j < ncy; ++j) out.field.U(i, j) = sol[iu(mg_, i, j)];
    for (int i = 0; i < ncx; ++i)
        for (int j = 1; j < ncy; ++j) out.field.V(i, j) = sol[iv(mg_, i, j)];
    for (int i = 0; i < ncx; ++i)
        for (int j = 0; j < ncy; ++j) out.field.P(i, j) = sol[ip(mg_, i, j)];

    // L2 norms of the sampled sources over their staggered quadrature
    double nf = 0.0, ng = 0.0;
    for (int i = 1; i < ncx; ++i)
        for (int j = 0; j < ncy; ++j) {
            const double s = f_u[static_cast<size_t>(i) * ncy + j];
            nf += mg_.hx * mg_.hy * s * s;
        }
    for (int i = 0; i < ncx; ++i)
        for (int j = 1; j < ncy; ++j) {
            const double s = g_v[static_cast<size_t>(i) * (ncy + 1) + j];
            ng += mg_.hx * mg_.hy * s * s;
        }
    out.diag = remainder_diagnostics(*this, out.field, std::sqrt(nf), std::sqrt(ng));
    out.diag.solve_residual = res;
    return out;
}

RemainderSolution LinearizedStokes::solve(const PointFn& f, const PointFn& g) const {
    const int ncx = mg_.ncx, ncy = mg_.ncy;
    std::vector<double> f_u(static_cast<size_t>(ncx + 1) * ncy, 0.0);
    std::vector<double> g_v(static_cast<size_t>(ncx) * (ncy + 1), 0.0);
    for (int i = 1; i < ncx; ++i)
        for (int j = 0; j < ncy; ++j)
            f_u[static_cast<size_t>(i) * ncy + j] = f(mg_.xu(i), mg_.yu(j));
    for (int i = 0; i < ncx; ++i)
        for (int j = 1; j < ncy; ++j)
            g_v[static_cast<size_t>(i) * (ncy + 1) + j] = g(mg_.xv(i), mg_.yv(j));
    return solve_samples(f_u, g_v);
}

CheckResult energy_check(const LinearizedStokes& solver, const RemainderSolution& sol,
                         double C_energy) {
    const MacGrid& mg = solver.grid();
    const double eps = solver.eps();
    const MacField& w = sol.field;
    double outflow = 0.0;
    for (int j = 0; j < mg.ncy; ++j) {
        const double us = solver.us_at_u()[static_cast<size_t>(mg.ncx) * mg.ncy + j];
        const double u = w.U(mg.ncx, j);
        double v = 0.0;
        if (j >= 1 && mg.ncx >= 2)
            v = 1.5 * w.V(mg.ncx - 1, j) - 0.5 * w.V(mg.ncx - 2, j);
        outflow += mg.hy * us * (u * u + eps * v * v);
    }
    CheckResult r;
    r.lhs = sol.diag.grad_eps_u * sol.diag.grad_eps_u + outflow;
    r.rhs = C_energy * (mg.L * sol.diag.grad_eps_v * sol.diag.grad_eps_v +
                        sol.diag.norm_f * sol.diag.norm_f +
                        eps * sol.diag.norm_g * sol.diag.norm_g);
    r.pass = r.lhs <= r.rhs;
    return r;
}

CheckResult vorticity_check(const LinearizedStokes& solver, const RemainderSolution& sol,
                            double C_vort) {
    const MacGrid& mg = solver.grid();
    const double eps = solver.eps();
    const MacField& w = sol.field;
    double inflow_vx = 0.0;
    for (int j = 1; j < mg.ncy; ++j) {
        const double vx0 = 2.0 * w.V(0, j) / mg.hx;
        inflow_vx += mg.hy * vx0 * vx0;
    }
    double outflow_vy = 0.0;
    for (int j = 0; j < mg.ncy; ++j) {
        const double vyL1 = (w.V(mg.ncx - 1, j + 1) - w.V(mg.ncx - 1, j)) / mg.hy;
        const double vyL2 = (w.V(mg.ncx - 2, j + 1) - w.V(mg.ncx - 2, j)) / mg.hy;
        const double vyL = 1.5 * vyL1 - 0.5 * vyL2;
        outflow_vy += mg.hy * vyL * vyL;
    }
    CheckResult r;
    r.lhs = sol.diag.grad_eps_v * sol.diag.grad_eps_v + eps * eps * inflow_vx +
            eps * outflow_vy;
    r.rhs = C_vort * (sol.diag.grad_eps_u * sol.diag.grad_eps_u +
                      mg.L * sol.diag.grad_eps_v * sol.diag.grad_eps_v +
                      sol.diag.norm_f * sol.diag.norm_f +
                      eps * sol.diag.norm_g * sol.diag.norm_g);
    r.pass = r.lhs <= r.rhs;
    return r;
}

PositivityResult positivity_form_slice(const std::vector<double>& y,
                                       const std::vector<double>& v,
                                       const std::vector<double>& us,
                                       const std::vector<double>& us_yy,
                                       bool want_eig) {
    const int n = static_cast<int>(y.size());
    PositivityResult r;
    // edge-sum for v_y^2 (this is <-D_yy v, v> on the Dirichlet space) and the
    // exactly nonnegative factored form
    for (int j = 0; j + 1 < n; ++j) {
        const double h = y[j + 1] - y[j];
        const double vy = (v[j + 1] - v[j]) / h;
        r.Q_direct += h * vy * vy;
        const double um = 0.5 * (us[j] + us[j + 1]);
        const double ry = (v[j + 1] / us[j + 1] - v[j] / us[j]) / h;
        r.Q_factored += h * um * um * ry * ry;
    }
    for (int j = 0; j < n; ++j) {
        const double wj =
            0.5 * ((j > 0 ? y[j] - y[j - 1] : 0.0) + (j + 1 < n ? y[j + 1] - y[j] : 0.0));
        r.Q_direct += wj * (us_yy[j] / us[j]) * v[j] * v[j];
    }
    if (want_eig) {
        const int m = n - 2;
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
        for (int k = 0; k < m; ++k) {
            const int j = k + 1;
            const double hm = y[j] - y[j - 1], hp = y[j + 1] - y[j];
            A(k, k) = 2.0 / (hm * hp) + us_yy[j] / us[j];
            if (k > 0) A(k, k - 1) = -2.0 / (hm * (hm + hp));
            if (k + 1 < m) A(k, k + 1) = -2.0 / (hp * (hm + hp));
        }
        // symmetrize (uniform grids are symmetric already)
        const Eigen::MatrixXd S = 0.5 * (A + A.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
        r.min_eig = es.eigenvalues().minCoeff();
    }
    return r;
}

PositivityResult positivity_form(const Field2D& v, const ShearBackground& bg) {
    const Grid2D& grid = *v.grid;
    PositivityResult total;
    std::vector<double> vs(grid.ny), us(grid.ny), usyy(grid.ny);
    for (int i = 0; i < grid.nx; ++i) {
        for (int j = 0; j < grid.ny; ++j) {
            vs[j] = v(i, j);
            us[j] = bg.us(i, j);
            usyy[j] = bg.us_yy(i, j);
        }
        const PositivityResult s = positivity_form_slice(grid.y, vs, us, usyy, false);
        total.Q_direct += grid.wx[i] * s.Q_direct;
        total.Q_factored += grid.wx[i] * s.Q_factored;
    }
    const int mid = grid.nx / 2;
    for (int j = 0; j < grid.ny; ++j) {
        us[j] = bg.us(mid, j);
        usyy[j] = bg.us_yy(mid, j);
    }
    std::vector<double> zero(grid.ny, 0.0);
    total.min_eig = positivity_form_slice(grid.y, zero, us, usyy, true).min_eig;
    return total;
}

XNorm x_norm(const RemainderSolution& sol, double eps, double gamma) {
    XNorm x;
    x.grad_u = sol.diag.grad_eps_u;
    x.grad_v = sol.diag.grad_eps_v;
    x.sup_u = std::pow(eps, 0.5 * gamma) * sol.diag.sup_u;
    x.sup_v = std::pow(eps, 0.5 + 0.5 * gamma) * sol.diag.sup_v;
    x.value = x.grad_u + x.grad_v + x.sup_u + x.sup_v;
    return x;
}

NonlinearResult nonlinear_iterate(const ProblemData& pd, const ApproxSolution& approx,
                                  const ShearBackground& bg, const MacGrid& mg,
                                  int max_iter, double tol) {
    const double eps = pd.eps, gamma = pd.gamma;
    const double se = std::sqrt(eps);
    const double pref = std::pow(eps, -gamma - 0.5);

    auto [Ru, Rv] = residuals(approx);
    const Field2D up1_x = ddx(approx.up1);
    const Field2D up1_y = ddy(approx.up1);
    const Field2D vp1_x = ddx(approx.vp1);
    const Field2D vp1_y = ddy(approx.vp1);

    LinearizedStokes solver(bg, mg, pd.tol.tol_linear);
    const int ncx = mg.ncx, ncy = mg.ncy;
    const double hx = mg.hx, hy = mg.hy;

    MacField cur(mg);
    NonlinearResult out;
    out.sol.field = cur;

    std::vector<double> f_u(static_cast<size_t>(ncx + 1) * ncy, 0.0);
    std::vector<double> g_v(static_cast<size_t>(ncx) * (ncy + 1), 0.0);

    double prev_change = 0.0;
    int grow_streak = 0;
    XNorm prev_norm{};
    for (int it = 0; it < max_iter; ++it) {
        // R_1 at u-points
        for (int i = 1; i < ncx; ++i)
            for (int j = 0; j < ncy; ++j) {
                const double x = mg.xu(i), y = mg.yu(j);
                const double u = cur.U(i, j);
                const double ux = (cur.U(i + 1, j) - cur.U(i - 1, j)) / (2 * hx);
                double uy;
                if (j == 0) uy = (cur.U(i, 1) + cur.U(i, 0)) / (2 * hy);
                else if (j == ncy - 1) uy = (-cur.U(i, ncy - 1) - cur.U(i, ncy - 2)) / (2 * hy);
                else uy = (cur.U(i, j + 1) - cur.U(i, j - 1)) / (2 * hy);
                const double vt = 0.25 * (cur.V(i - 1, j) + cur.V(i - 1, j + 1) +
                                          cur.V(i, j) + cur.V(i, j + 1));
                const double up1 = sample_bilinear(approx.up1, x, y);
                const double vp1 = sample_bilinear(approx.vp1, x, y);
                f_u[static_cast<size_t>(i) * ncy + j] =
                    pref * sample_bilinear(Ru, x, y) -
                    se * ((up1 + std::pow(eps, gamma) * u) * ux +
                          u * sample_bilinear(up1_x, x, y) +
                          (vp1 + std::pow(eps, gamma) * vt) * uy +
                          vt * sample_bilinear(up1_y, x, y));
            }
        // R_2 at v-points
        for (int i = 0; i < ncx; ++i)
            for (int j = 1; j < ncy; ++j) {
                const double x = mg.xv(i), y = mg.yv(j);
                const double v = cur.V(i, j);
                double vxm, vxp;
                vxm = (i == 0) ? -cur.V(0, j) : cur.V(i - 1, j);
                if (i == ncx - 1)
                    vxp = cur.V(ncx - 1, j) -
                          (hx / (eps * hy)) * (cur.U(ncx, j) - cur.U(ncx, j - 1));
                else
                    vxp = cur.V(i + 1, j);
                const double vx = (vxp - vxm) / (2 * hx);
                const double vy = (cur.V(i, j + 1) - cur.V(i, j - 1)) / (2 * hy);
                const double ub = 0.25 * (cur.U(i, j - 1) + cur.U(i, j) +
                                          cur.U(i + 1, j - 1) + cur.U(i + 1, j));
                const double up1 = sample_bilinear(approx.up1, x, y);
                const double vp1 = sample_bilinear(approx.vp1, x, y);
                g_v[static_cast<size_t>(i) * (ncy + 1) + j] =
                    pref * sample_bilinear(Rv, x, y) -
                    se * ((up1 + std::pow(eps, gamma) * ub) * vx +
                          ub * sample_bilinear(vp1_x, x, y) +
                          (vp1 + std::pow(eps, gamma) * v) * vy +
                          v * sample_bilinear(vp1_y, x, y));
            }

        RemainderSolution next = solver.solve_samples(f_u, g_v);
        const XNorm xn = x_norm(next, eps, gamma);

        // X-norm of the difference field
        MacField diff = next.field;
        for (size_t k = 0; k < diff.u.size(); ++k) diff.u[k] -= cur.u[k];
        for (size_t k = 0; k < diff.v.size(); ++k) diff.v[k] -= cur.v[k];
        RemainderSolution dwrap;
        dwrap.field = diff;
        dwrap.diag = remainder_diagnostics(solver, diff, 0.0, 0.0);
        const double change = x_norm(dwrap, eps, gamma).value;

        out.trace.x_norms.push_back(xn.value);
        out.trace.step_changes.push_back(change);
        if (it > 0 && prev_change > 1e-300)
            out.trace.contraction_ratio =
                std::max(out.trace.contraction_ratio, change / prev_change);
        if (it > 0 && xn.value > prev_norm.value * (1.0 + 1e-12)) ++grow_streak;
        else grow_streak = 0;

        cur = next.field;
        out.sol = std::move(next);
        out.trace.iterations = it + 1;
        if (change <= tol * std::max(1.0, xn.value)) {
            out.trace.converged = true;
            break;
        }
        if (grow_streak >= 3 && it >= 5) {
            out.trace.diverged = true;  // reported as data; smaller L or larger eps helps
            break;
        }
        prev_change = change;
        prev_norm = xn;
    }
    return out;
}

}  // namespace blayer
