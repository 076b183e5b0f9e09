// First-order Prandtl corrector in the v-formulation: boundary seeding from
// the inflow trace, source assembly, positivity-based implicit march of the
// fourth-order equation, velocity recovery, cut-off, and the layer pressure.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "blayer/euler_one.hpp"
#include "blayer/grid.hpp"
#include "blayer/prandtl_zero.hpp"
#include "blayer/problem_data.hpp"

namespace blayer {

/// Background fields shared by every operation of this module. u0 is the full
/// tangential background u_e^0(sqrt(eps) y) + u_p^0; derivative fields use the
/// grid's discrete operators throughout so the marched identities close.
struct Prandtl1Context {
    const Grid2D* grid = nullptr;
    double eps = 0.0;
    Field2D u0, u0_y, u0_yy;
    Field2D inv, inv_x, inv_y, inv_xy, inv_yy, inv_xyy;  // powers of 1/u0
    Field2D u0_xy, u0_xxy;
    Field2D ratio;    // u0_yy / u0
    Field2D ratio_x;
    Field2D vsum;     // v_p^0 + v_e^1(x, sqrt(eps) y)
    Field2D vsum_y_over_u0;  // d/dy of (vsum/u0)
    Field2D vp0_x;
    Field2D F_p, F_py, F_pxy;
    Field2D vex_over_u0;     // v_ex^1 / u0, sampled at z = sqrt(eps) y
    Field2D vex_over_u0_y;   // its d/dy
    Field2D ve1_z, ve1_xz;   // sampled Euler derivatives reused by the sources
    std::vector<double> uex1_wall, uexx1_wall;
    std::vector<double> lift_shape, lift_shape_y, lift_shape_yy;  // y chi(y) and y-derivatives
    Field2D lift_term_yy;   // d2y of ((y chi)_yy / u0), multiplies u_ex^1(x,0)
};

Prandtl1Context build_prandtl1_context(const ProblemData& pd,
                                       const PrandtlLayer0& layer0,
                                       const EulerSampled& eul, const Grid2D& grid);

/// Wall-compatibility defect of the first-order inflow trace at the corner:
/// D = F_p(0,0) + u_b u_ex^1(0,0) - ubar1(0) u_px^0(0,0) + ubar1''(0).
/// The true corrector trace satisfies D = 0; generic data does not.
double wall_compat_defect(const ProblemData& pd, const Prandtl1Context& ctx);

/// Add c y^2 e^{-y} to ubar1 (c = -D/2) so the corner constraint holds; keeps
/// ubar1(0), ubar1'(0) and the decay untouched.
ProblemData enforce_wall_compat(const ProblemData& pd, const Prandtl1Context& ctx);

struct BoundarySeed {
    std::vector<double> v0;    // v_p(0, y)
    std::vector<double> vx0;   // v_px(0, y)
    std::vector<double> psi;   // stream function of ubar1
    std::vector<double> w;     // u^0 psi_y - u^0_y psi at x = 0
    std::vector<double> w_x;
};

/// Reconstruct the inflow profiles of v_p from ubar1 via the weighted stream
/// function quantity w = u^0 psi_y - u^0_y psi.
BoundarySeed boundary_seed(const ProblemData& pd, const Prandtl1Context& ctx);

struct SourcePair {
    Field2D f, g;
    std::map<std::string, Field2D> terms;  // named pieces for diagnostics
};

/// Evaluate the source fields of the fourth-order v-equation at the given
/// iterate of the (uncut) corrector velocities.
SourcePair assemble_sources(const ProblemData& pd, const Prandtl1Context& ctx,
                            const Field2D& u_p, const Field2D& v_p);

/// One implicit pass of the march in x: at each station solve
/// (M + dx K) v^{n+1} = M v^n + dx (f_y + g) with M = -d_yy + u0_yy/u0 and the
/// fourth-order term K treated implicitly; [v, v_y] = 0 at y = 0, Ymax.
Field2D march_corrector(const ProblemData& pd, const Prandtl1Context& ctx,
                        const Field2D& f, const Field2D& g,
                        const std::vector<double>& vbar_inflow);

/// Default solve path: implicit march of the undifferentiated corrector
/// momentum equation for u_p with v_p = -int_0^y u_px rebuilt inside each
/// step's Picard loop. Enforces the wall data u_p(x,0) = -u_e^1(x,0) strongly,
/// which makes v_p(x,0) = 0 and v_py(x,0) = u_ex^1(x,0) automatic.
std::pair<Field2D, Field2D> march_up(const ProblemData& pd,
                                     const Prandtl1Context& ctx);

/// u_p = ubar1 - int_0^x v_py; returns the field and the wall-matching defect
/// max_x |u_p(x,0) + u_e^1(x,0)|.
Field2D recover_up(const ProblemData& pd, const Prandtl1Context& ctx,
                   const Field2D& v_p, double* wall_defect = nullptr);

/// u_p^1 = chi(se y) u_p + se chi'(se y) int_0^y u_p,  v_p^1 = chi(se y) v_p,
/// with se = sqrt(eps); exactly divergence-free given u_px = -v_py.
std::pair<Field2D, Field2D> apply_cutoff(const ProblemData& pd, const Field2D& u_p,
                                         const Field2D& v_p);

/// Tail-integrated layer pressure p_p^2.
Field2D build_pressure2(const ProblemData& pd, const PrandtlLayer0& layer0,
                        const EulerSampled& eul, const Grid2D& grid);

struct PrandtlCorrector1 {
    Field2D v_bar, v_p, u_p;  // restricted to the caller's grid
    Field2D u_p1, v_p1;
    Field2D p_p2;
    double p_p1 = 0.0;  // the layer pressure is constant; pinned to zero
    BoundarySeed seed;
    SourcePair sources;       // at the converged iterate, on the march grid
    int outer_iters = 0;
    double outer_resid = 0.0; // relative change of the last fixed-point sweep
    double wall_defect = 0.0; // max |u_p(x,0) + u_e^1(x,0)|
    double Ymax_march = 0.0;  // height of the internal march domain
};

/// Full module driver: seed, then fixed-point sweeps of
/// assemble_sources -> march_corrector -> recover_up until the corrector
/// stabilizes, then cut-off and pressure.
///
enum class Prandtl1Formulation {
    VBar,   // positivity-based march of the xy-differentiated equation
    UMarch  // direct implicit march of the momentum equation
};

/// The uncut corrector does not decay, so the march runs on an internal
/// domain tall enough to contain the cut-off support {sqrt(eps) y <= 1} (the
/// artificial [v, v_y] = 0 clamp at the top then sits where chi already
/// vanishes); outputs are restricted to `grid`.
PrandtlCorrector1 solve_prandtl1(const ProblemData& pd, const PrandtlLayer0& layer0,
                                 const EulerCorrector& ec, const Grid2D& gz,
                                 const Grid2D& grid, int max_outer = 30,
                                 double outer_tol = 1e-9,
                                 Prandtl1Formulation form = Prandtl1Formulation::UMarch);

}  // namespace blayer
