// First-order Euler corrector: boundary lift, corner corrector, and the
// positivity-symmetrized elliptic solve on the (x,z) half-strip.
#pragma once

#include <vector>

#include "blayer/grid.hpp"
#include "blayer/prandtl_zero.hpp"
#include "blayer/problem_data.hpp"

namespace blayer {

/// Pick a z grid for the corrector: tanh-stretched automatically when the
/// corner layer {z <= eps} needs it, uniform otherwise.
Grid2D make_euler_grid(const ProblemData& pd, int nx, int nz, double Zmax = 10.0);

struct EulerCorrector {
    Field2D B;      // boundary lift
    Field2D F_e;    // lift residual -u_e^0 Lap B + u_ezz^0 B
    Field2D E_b;    // corner corrector -chi(z/eps) F_e(x,0)
    Field2D w_hom;  // homogeneous-BC solution, v_e1 = B + w_hom
    Field2D v_e1, u_e1, p_e1;
    bool degenerate_lift = false;  // additive fallback was used
    double solve_residual = 0.0;   // relative residual of the sparse solve
    double theta0 = 0.0;           // measured positivity constant of the form
};

/// Lift B per the corner-ratio formula; falls back to the additive blend when
/// a corner trace of v_p^0 is below tol_lift. Returns (B, F_e).
struct BoundaryLift {
    Field2D B, F_e;
    bool degenerate = false;
};
BoundaryLift build_boundary_lift(const ProblemData& pd, const PrandtlLayer0& layer0,
                                 const Grid2D& gz, double tol_lift = 1e-8);

/// E_b(x,z) = -chi(z/eps) F_e(x,0); needs >= 8 nodes inside {z <= eps}.
Field2D build_corner_corrector(const ProblemData& pd, const Field2D& F_e);

EulerCorrector solve_euler_corrector(const ProblemData& pd,
                                     const PrandtlLayer0& layer0, const Grid2D& gz);

/// Euler fields and the derivatives downstream assembly needs, resampled at
/// z = sqrt(eps) y onto the boundary-layer grid (same x nodes).
struct EulerSampled {
    Field2D ue1, ve1, pe1;
    Field2D ue1_z, ue1_zz;
    Field2D ve1_z, ve1_zz, ve1_x, ve1_xz, ve1_xx;
    Field2D intEb;                    // int_0^z E_b, the corner-corrector error
                                      // surviving in the tangential budget
    std::vector<double> uex1_wall;    // u_ex^1(x,0) = -v_ez^1(x,0)
    std::vector<double> uexx1_wall;   // u_exx^1(x,0) = -v_exz^1(x,0)
};
EulerSampled sample_euler(const EulerCorrector& ec, const Grid2D& gz,
                          const Grid2D& grid, double eps);

}  // namespace blayer
