// Linearized remainder solver around the shear background on a MAC grid:
// monolithic saddle-point solve, energy/vorticity/positivity diagnostics,
// and the nonlinear fixed-point iteration for the true remainder.
#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "blayer/assembly.hpp"
#include "blayer/grid.hpp"

namespace blayer {

struct ShearBackground {
    const Grid2D* grid = nullptr;
    double eps = 0.0;
    Field2D us, vs;  // u_s = u_e^0 + u_p^0 + sqrt(eps) u_e^1, v_s = v_p^0 + v_e^1
    Field2D us_x, us_y, us_yy, vs_x, vs_y;
    double min_us = 0.0;
};

ShearBackground build_background(const ProblemData& pd, const PrandtlLayer0& layer0,
                                 const EulerSampled& eul, const Grid2D& grid);

/// Staggered layout on [0,L] x [0,Ymax]: u on x-faces, v on y-faces, p in cells.
struct MacGrid {
    int ncx = 0, ncy = 0;
    double L = 0.0, Ymax = 0.0, hx = 0.0, hy = 0.0;

    MacGrid() = default;
    MacGrid(double L_, double Ymax_, int ncx_, int ncy_)
        : ncx(ncx_), ncy(ncy_), L(L_), Ymax(Ymax_), hx(L_ / ncx_), hy(Ymax_ / ncy_) {}

    double xu(int i) const { return i * hx; }
    double yu(int j) const { return (j + 0.5) * hy; }
    double xv(int i) const { return (i + 0.5) * hx; }
    double yv(int j) const { return j * hy; }
};

/// Velocities with boundary values materialized; p over cells.
struct MacField {
    const MacGrid* mg = nullptr;
    std::vector<double> u;  // (ncx+1) x ncy
    std::vector<double> v;  // ncx x (ncy+1)
    std::vector<double> p;  // ncx x ncy
    MacField() = default;
    explicit MacField(const MacGrid& g)
        : mg(&g),
          u(static_cast<size_t>(g.ncx + 1) * g.ncy, 0.0),
          v(static_cast<size_t>(g.ncx) * (g.ncy + 1), 0.0),
          p(static_cast<size_t>(g.ncx) * g.ncy, 0.0) {}
    double& U(int i, int j) { return u[static_cast<size_t>(i) * mg->ncy + j]; }
    double U(int i, int j) const { return u[static_cast<size_t>(i) * mg->ncy + j]; }
    double& V(int i, int j) { return v[static_cast<size_t>(i) * (mg->ncy + 1) + j]; }
    double V(int i, int j) const { return v[static_cast<size_t>(i) * (mg->ncy + 1) + j]; }
    double& P(int i, int j) { return p[static_cast<size_t>(i) * mg->ncy + j]; }
    double P(int i, int j) const { return p[static_cast<size_t>(i) * mg->ncy + j]; }
};

struct RemainderDiagnostics {
    double grad_eps_u = 0.0;
    double grad_eps_v = 0.0;
    double sup_u = 0.0;       // corner-margin sup (2 cells excluded at corners)
    double sup_v = 0.0;
    double x_norm = 0.0;
    double div_max = 0.0;
    double solve_residual = 0.0;
    double norm_f = 0.0;
    double norm_g = 0.0;
};

struct RemainderSolution {
    MacField field;
    RemainderDiagnostics diag;
};

using PointFn = std::function<double(double, double)>;

/// Monolithic sparse solver; the factorization is reused across right-hand
/// sides (random batteries, fixed-point iterations).
class LinearizedStokes {
  public:
    LinearizedStokes(const ShearBackground& bg, const MacGrid& mg, double tol_linear);
    ~LinearizedStokes();
    LinearizedStokes(LinearizedStokes&&) noexcept;
    LinearizedStokes& operator=(LinearizedStokes&&) noexcept;

    RemainderSolution solve(const PointFn& f, const PointFn& g) const;
    /// RHS given directly at u-points / v-points (iteration path).
    RemainderSolution solve_samples(const std::vector<double>& f_u,
                                    const std::vector<double>& g_v) const;

    const MacGrid& grid() const { return mg_; }
    double eps() const { return eps_; }
    // background samples at staggered points, exposed for source evaluation
    const std::vector<double>& us_at_u() const { return us_u_; }
    const std::vector<double>& vs_at_u() const { return vs_u_; }

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    MacGrid mg_;
    double eps_ = 0.0;
    double tol_linear_ = 0.0;
    std::vector<double> us_u_, usx_u_, usy_u_, vs_u_;
    std::vector<double> us_v_, vsx_v_, vsy_v_, vs_v_;
    friend RemainderDiagnostics remainder_diagnostics(const LinearizedStokes&,
                                                      const MacField&, double, double);
};

struct CheckResult {
    double lhs = 0.0, rhs = 0.0;
    bool pass = false;
};

/// Lemma-style energy inequality with an explicit constant:
/// ||grad_eps u||^2 + int_{x=L} u_s (u^2 + eps v^2) <= C (L ||grad_eps v||^2 + ||f||^2 + eps ||g||^2).
CheckResult energy_check(const LinearizedStokes& solver, const RemainderSolution& sol,
                         double C_energy);

/// Vorticity-route inequality:
/// ||grad_eps v||^2 + eps^2 int_{x=0} v_x^2 + eps int_{x=L} v_y^2
///   <= C (||grad_eps u||^2 + L ||grad_eps v||^2 + ||f||^2 + eps ||g||^2).
CheckResult vorticity_check(const LinearizedStokes& solver, const RemainderSolution& sol,
                            double C_vort);

struct PositivityResult {
    double Q_direct = 0.0;    // int (v_y^2 + (u_syy/u_s) v^2)
    double Q_factored = 0.0;  // int u_s^2 |(v/u_s)_y|^2  (sum of squares)
    double min_eig = 0.0;     // smallest eigenvalue of -d_yy + u_syy/u_s, Dirichlet
};

/// One x-slice: us, us_yy sampled on the y nodes; v vanishes at y=0 (and Ymax
/// for the clean identity).
PositivityResult positivity_form_slice(const std::vector<double>& y,
                                       const std::vector<double>& v,
                                       const std::vector<double>& us,
                                       const std::vector<double>& us_yy,
                                       bool want_eig = false);

/// Full field: x-integrated forms; min_eig from the slice at mid-x.
PositivityResult positivity_form(const Field2D& v, const ShearBackground& bg);

struct XNorm {
    double value = 0.0;
    double grad_u = 0.0, grad_v = 0.0, sup_u = 0.0, sup_v = 0.0;
};
XNorm x_norm(const RemainderSolution& sol, double eps, double gamma);

struct IterationTrace {
    std::vector<double> x_norms;
    std::vector<double> step_changes;  // X-norm of successive differences
    bool converged = false;
    bool diverged = false;
    double contraction_ratio = 0.0;  // max ratio of successive changes
    int iterations = 0;
};

struct NonlinearResult {
    RemainderSolution sol;
    IterationTrace trace;
};

/// Picard iteration for the true remainder: re-evaluate R_1, R_2 at the
/// current iterate (nonlinear terms included) and re-solve, reusing the
/// factorization. Divergence is reported in the trace, not thrown.
NonlinearResult nonlinear_iterate(const ProblemData& pd, const ApproxSolution& approx,
                                  const ShearBackground& bg, const MacGrid& mg,
                                  int max_iter = 50, double tol = 1e-8);

}  // namespace blayer
