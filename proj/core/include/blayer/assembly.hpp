// Assemble the approximate solution from all constructed profiles, evaluate
// the momentum residuals by direct substitution, and measure the term budget.
#pragma once

#include <map>
#include <string>

#include "blayer/euler_one.hpp"
#include "blayer/grid.hpp"
#include "blayer/prandtl_one.hpp"
#include "blayer/prandtl_zero.hpp"
#include "blayer/problem_data.hpp"

namespace blayer {

struct ApproxSolution {
    const Grid2D* grid = nullptr;
    double eps = 0.0;
    Field2D u_app, v_app, p_app;
    // constituents, kept for the remainder solve and the corollary check
    Field2D ue0;          // u_e^0(sqrt(eps) y) sampled
    Field2D up0, vp0;
    Field2D ue1, ve1, pe1;   // sampled at z = sqrt(eps) y
    Field2D up1, vp1, pp2;
    EulerSampled eul;
};

ApproxSolution assemble(const ProblemData& pd, const PrandtlLayer0& layer0,
                        const EulerSampled& eul, const PrandtlCorrector1& corr1,
                        const Grid2D& grid);

/// Momentum residuals of the scaled system by finite-difference substitution:
/// R_u = (u a_x + v a_y) u + p_x - Lap_eps u,  R_v likewise with p_y / eps.
std::pair<Field2D, Field2D> residuals(const ApproxSolution& approx);

struct ResidualReport {
    double eps = 0.0;
    double norm_Ru = 0.0;
    double norm_Rv = 0.0;
    double combined = 0.0;  // norm_Ru + sqrt(eps) norm_Rv
    std::map<std::string, double> budget;  // named term -> L2 norm
    int nx = 0, ny = 0;
};

/// Each named error term evaluated verbatim from its defining formula:
/// E0, Ru0, Ru1, Rv0, Ru1p, px2, and the lumped eps-order leftovers.
std::map<std::string, double> budget(const ProblemData& pd, const ApproxSolution& approx,
                                     const PrandtlLayer0& layer0,
                                     const PrandtlCorrector1& corr1);

ResidualReport residual_report(const ProblemData& pd, const ApproxSolution& approx,
                               const PrandtlLayer0& layer0,
                               const PrandtlCorrector1& corr1);

}  // namespace blayer
