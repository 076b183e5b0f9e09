// Zeroth-order nonlinear Prandtl layer solved by the von Mises transformation
// with implicit marching in x.
#pragma once

#include <vector>

#include "blayer/grid.hpp"
#include "blayer/problem_data.hpp"

namespace blayer {

struct PrandtlLayer0 {
    Field2D u_p0;    // node field on the (x,y) grid
    Field2D v_p0;    // upper-tail integral of u_px^0
    Field2D u_p0x;   // d/dx of u_p0, kept for downstream source assembly

    std::vector<double> eta;                  // von Mises nodes, uniform
    double eta_max = 0.0;                     // integral of u_e + ubar0 over [0, Ymax]
    std::vector<std::vector<double>> W;       // full unknown per x-slice, W = u_e + u_p^0
    std::vector<std::vector<double>> w_shift; // W minus the e^{-eta} boundary lift
    std::vector<double> F_src;                // shift source F = -phi phi' on eta nodes
    double min_W = 0.0;                       // running minimum over all march steps
    double min_W_bound = 0.0;                 // min{u_b, min_y(u_e + ubar0)}, dense sampling

    /// y(eta) for one x-slice (trapezoid of 1/W); strictly increasing.
    std::vector<double> y_of_eta(int xi) const;
};

/// March the transformed layer across [0, L]. Throws SolverError when a step's
/// Picard iteration stalls or the positivity of the marching coefficient is lost.
PrandtlLayer0 march_prandtl0(const ProblemData& pd, const Grid2D& grid);

/// Replace ubar0 by the outflow slice of a short upstream march. Generic
/// inflow traces are corner-incompatible at (0,0), which leaves an x-transient
/// whose high derivatives pollute every downstream x-differentiation; the
/// warm-started trace is compatible to discretization accuracy.
ProblemData warm_start_inflow(const ProblemData& pd, const Grid2D& grid,
                              double warm_len = -1.0);

/// N_j(L): weighted march norm of the shifted unknown, j in {0, 1}.
double weighted_norms(const PrandtlLayer0& layer0, const Grid2D& grid, int n, int j);

/// min W - min{u_b, min(u_e + ubar0)}; the discrete maximum principle keeps
/// this above roughly -tol_newton.
double check_max_principle(const PrandtlLayer0& layer0);

CompatMargins compat_check(const ProblemData& pd, const PrandtlLayer0& layer0);
ProblemData enforce_corner_compat(const ProblemData& pd, const PrandtlLayer0& layer0);

}  // namespace blayer
