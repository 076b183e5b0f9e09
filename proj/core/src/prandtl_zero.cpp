#include "blayer/prandtl_zero.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "blayer/interp.hpp"

namespace blayer {

namespace {

// Integrate dy/deta = 1/(u_e + ubar0(y)) with RK4 substeps; returns y at the
// uniform eta nodes. Used to place the inflow slice exactly.
std::vector<double> invert_inflow_map(const ProblemData& pd,
                                      const std::vector<double>& eta) {
    const double ue = pd.u_e();
    auto speed = [&](double y) { return ue + pd.ubar0(y); };
    std::vector<double> y(eta.size(), 0.0);
    const int sub = 8;
    for (size_t i = 0; i + 1 < eta.size(); ++i) {
        double yi = y[i];
        const double h = (eta[i + 1] - eta[i]) / sub;
        for (int s = 0; s < sub; ++s) {
            const double k1 = 1.0 / speed(yi);
            const double k2 = 1.0 / speed(yi + 0.5 * h * k1);
            const double k3 = 1.0 / speed(yi + 0.5 * h * k2);
            const double k4 = 1.0 / speed(yi + h * k3);
            yi += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        }
        y[i + 1] = yi;
    }
    return y;
}

}  // namespace

std::vector<double> PrandtlLayer0::y_of_eta(int xi) const {
    const auto& slice = W[xi];
    std::vector<double> inv(slice.size());
    for (size_t k = 0; k < slice.size(); ++k) inv[k] = 1.0 / slice[k];
    return cumtrapz(eta, inv);
}

PrandtlLayer0 march_prandtl0(const ProblemData& pd, const Grid2D& grid) {
    PrandtlLayer0 out;
    const int nx = grid.nx;
    const int ne = grid.ny;
    const double ue = pd.u_e();
    const double mism = pd.u_b - ue;

    // eta_max = integral of (u_e + ubar0) over [0, Ymax], dense trapezoid
    {
        const int dense = 40 * grid.ny;
        std::vector<double> ys(dense + 1), vs(dense + 1);
        for (int k = 0; k <= dense; ++k) {
            ys[k] = grid.Ymax * k / double(dense);
            vs[k] = ue + pd.ubar0(ys[k]);
            if (!(vs[k] > 0.0))
                throw PreconditionError("march_prandtl0: u_e + ubar0 not positive");
        }
        out.eta_max = trapz(ys, vs);
    }

    out.eta.resize(ne);
    for (int i = 0; i < ne; ++i) out.eta[i] = out.eta_max * i / double(ne - 1);
    const double de = out.eta[1] - out.eta[0];

    std::vector<double> phi(ne), F(ne);
    for (int i = 0; i < ne; ++i) {
        phi[i] = ue + mism * std::exp(-out.eta[i]);
        F[i] = mism * phi[i] * std::exp(-out.eta[i]);  // F = -phi phi'
    }
    out.F_src = F;

    // inflow slice in von Mises variables
    const std::vector<double> y0 = invert_inflow_map(pd, out.eta);
    std::vector<double> Wslice(ne);
    for (int i = 0; i < ne; ++i) Wslice[i] = ue + pd.ubar0(y0[i]);
    Wslice[0] = pd.u_b;                                // eta = 0 is the plate
    Wslice[ne - 1] = ue + mism * std::exp(-out.eta_max);

    // lower bound of the maximum principle, over a dense sampling that
    // includes the eta-image points
    {
        double lo = pd.u_b;
        const int dense = 10 * grid.ny;
        for (int k = 0; k <= dense; ++k) {
            const double y = grid.Ymax * k / double(dense);
            lo = std::min(lo, ue + pd.ubar0(y));
        }
        for (double y : y0) lo = std::min(lo, ue + pd.ubar0(y));
        out.min_W_bound = lo;
    }

    out.W.reserve(nx);
    out.W.push_back(Wslice);
    out.min_W = *std::min_element(Wslice.begin(), Wslice.end());

    // implicit march: (W^{n+1} - W^n)/dx = D(a D W^{n+1}), Picard in a
    std::vector<double> a(ne), sub(ne - 2), diag(ne - 2), sup(ne - 2), rhs(ne - 2);
    for (int n = 0; n + 1 < nx; ++n) {
        const double dx = grid.x[n + 1] - grid.x[n];
        const std::vector<double>& prev = out.W[n];
        std::vector<double> cur = prev;  // Picard start
        bool converged = false;
        double change = 0.0;
        for (int it = 0; it < 20; ++it) {
            for (int i = 0; i + 1 < ne; ++i) {
                a[i] = 0.5 * (cur[i] + cur[i + 1]);  // midpoint coefficient
                if (!(a[i] > 0.0))
                    throw SolverError("march_prandtl0: marching coefficient lost "
                                      "positivity at x = " + std::to_string(grid.x[n + 1]));
            }
            for (int i = 1; i + 1 < ne; ++i) {
                const int k = i - 1;
                sub[k] = -dx * a[i - 1] / (de * de);
                sup[k] = -dx * a[i] / (de * de);
                diag[k] = 1.0 + dx * (a[i - 1] + a[i]) / (de * de);
                rhs[k] = prev[i];
            }
            rhs[0] -= sub[0] * pd.u_b;
            rhs[ne - 3] -= sup[ne - 3] * Wslice[ne - 1];
            const std::vector<double> sol = solve_tridiag(sub, diag, sup, rhs);
            change = 0.0;
            for (int i = 1; i + 1 < ne; ++i) {
                change = std::max(change, std::abs(sol[i - 1] - cur[i]));
                cur[i] = sol[i - 1];
            }
            cur[0] = pd.u_b;
            cur[ne - 1] = Wslice[ne - 1];
            if (change <= pd.tol.tol_newton) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw SolverError("march_prandtl0: Picard stalled at x = " +
                              std::to_string(grid.x[n + 1]) +
                              ", last change = " + std::to_string(change));
        out.min_W = std::min(out.min_W, *std::min_element(cur.begin(), cur.end()));
        out.W.push_back(std::move(cur));
    }

    if (out.min_W < out.min_W_bound - 1e-8)
        throw SolverError("march_prandtl0: discrete maximum principle violated, "
                          "margin = " + std::to_string(out.min_W - out.min_W_bound));

    out.w_shift.resize(nx);
    for (int n = 0; n < nx; ++n) {
        out.w_shift[n].resize(ne);
        for (int i = 0; i < ne; ++i) out.w_shift[n][i] = out.W[n][i] - phi[i];
    }

    // back to (x, y): u_p^0 = W - u_e resampled onto the fixed y grid
    out.u_p0 = Field2D(grid);
    const double tail_amp = mism * std::exp(-out.eta_max);
    for (int n = 0; n < nx; ++n) {
        const std::vector<double> yk = out.y_of_eta(n);
        std::vector<double> up(ne);
        for (int i = 0; i < ne; ++i) up[i] = out.W[n][i] - ue;
        Pchip interp(yk, up);
        for (int j = 0; j < grid.ny; ++j) {
            const double yq = grid.y[j];
            out.u_p0(n, j) = (yq <= yk.back())
                                 ? interp(yq)
                                 : tail_amp * std::exp(-(yq - yk.back()));
        }
    }
    out.u_p0.require_finite("u_p0");

    out.u_p0x = ddx(out.u_p0);
    out.v_p0 = Field2D(grid);
    std::vector<double> col(grid.ny);
    for (int n = 0; n < nx; ++n) {
        for (int j = 0; j < grid.ny; ++j) col[j] = out.u_p0x(n, j);
        const std::vector<double> vint = upper_tail_integral(grid.y, col);
        for (int j = 0; j < grid.ny; ++j) out.v_p0(n, j) = vint[j];
    }
    out.v_p0.require_finite("v_p0");
    return out;
}

ProblemData warm_start_inflow(const ProblemData& pd, const Grid2D& grid,
                              double warm_len) {
    if (warm_len <= 0.0) warm_len = pd.L;
    ProblemData warm_pd = pd;
    warm_pd.L = warm_len;
    const Grid2D warm_grid = make_grid(warm_len, grid.Ymax, grid.nx, grid.ny);
    const PrandtlLayer0 warm = march_prandtl0(warm_pd, warm_grid);
    std::vector<double> vals(grid.ny);
    for (int j = 0; j < grid.ny; ++j) vals[j] = warm.u_p0(grid.nx - 1, j);
    ProblemData out = pd;
    out.ubar0 = Profile1D::from_samples(warm_grid.y, vals);
    return out;
}

double weighted_norms(const PrandtlLayer0& layer0, const Grid2D& grid, int n, int j) {
    if (j < 0 || j > 1) throw ConfigError("weighted_norms: j must be 0 or 1");
    const int nx = grid.nx;
    const int ne = static_cast<int>(layer0.eta.size());
    const auto& eta = layer0.eta;

    auto wgt = [&](int i) { return std::pow(1.0 + eta[i] * eta[i], 0.5 * n); };
    std::vector<double> we(ne);
    for (int i = 0; i + 1 < ne; ++i) we[i] = eta[i + 1] - eta[i];

    // x-derivative slices of the shifted unknown by differencing stored slices
    auto dx_slice = [&](int k, int xi) -> std::vector<double> {
        if (k == 0) return layer0.w_shift[xi];
        std::vector<double> d(ne);
        const int lo = std::max(0, xi - 1), hi = std::min(nx - 1, xi + 1);
        const double h = grid.x[hi] - grid.x[lo];
        for (int i = 0; i < ne; ++i)
            d[i] = (layer0.w_shift[hi][i] - layer0.w_shift[lo][i]) / h;
        return d;
    };

    double total = 0.0;
    for (int k = 0; k <= j; ++k) {
        // sup-style first term, evaluated at x = L
        const std::vector<double> wl = dx_slice(k, nx - 1);
        double t1 = 0.0;
        for (int i = 0; i + 1 < ne; ++i)
            t1 += 0.5 * we[i] * (wgt(i) * wl[i] * wl[i] + wgt(i + 1) * wl[i + 1] * wl[i + 1]);
        // accumulated eta-gradient term over [0, L]
        double t2 = 0.0;
        for (int xi = 0; xi < nx; ++xi) {
            const std::vector<double> s = dx_slice(k, xi);
            const std::vector<double> se = deriv1(eta, s);
            double line = 0.0;
            for (int i = 0; i + 1 < ne; ++i)
                line += 0.5 * we[i] *
                        (wgt(i) * se[i] * se[i] + wgt(i + 1) * se[i + 1] * se[i + 1]);
            t2 += grid.wx[xi] * line;
        }
        total += t1 + t2;
    }
    return total;
}

double check_max_principle(const PrandtlLayer0& layer0) {
    return layer0.min_W - layer0.min_W_bound;
}

CompatMargins compat_check(const ProblemData& pd, const PrandtlLayer0& layer0) {
    return compat_check(pd, layer0.v_p0(0, 0), layer0.v_p0(layer0.v_p0.rows - 1, 0));
}

ProblemData enforce_corner_compat(const ProblemData& pd, const PrandtlLayer0& layer0) {
    return enforce_corner_compat(pd, layer0.v_p0(0, 0),
                                 layer0.v_p0(layer0.v_p0.rows - 1, 0));
}

}  // namespace blayer
