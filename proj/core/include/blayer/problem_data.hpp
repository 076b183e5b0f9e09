// Given data of the main theorem: plate speed, Euler shear profile, inflow
// traces, cut-off, and the admissibility checks they must pass.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "blayer/expr.hpp"
#include "blayer/grid.hpp"

namespace blayer {

/// Scalar profile with first and second derivatives. Derivatives default to
/// second-order central differences of the value callable.
struct Profile1D {
    ScalarFn f;
    ScalarFn d1;
    ScalarFn d2;

    double operator()(double s) const { return f(s); }
    double d(double s) const { return d1(s); }
    double dd(double s) const { return d2(s); }

    static Profile1D analytic(ScalarFn f, ScalarFn d1, ScalarFn d2);
    static Profile1D from_fn(ScalarFn f, double fd_step = 1e-5);
    static Profile1D from_expr(const std::string& expr);
    static Profile1D from_samples(std::vector<double> s, std::vector<double> v);
    static Profile1D zero();
};

/// Cut-off: chi(0) = 1, support in [0,1], C^2. Default is the quartic bump
/// (1-s)^4 (1+4s).
struct Cutoff {
    ScalarFn f, d1, d2;
    double operator()(double s) const { return f(s); }
    double d(double s) const { return d1(s); }
    double dd(double s) const { return d2(s); }
    static Cutoff quartic_bump();
};

struct Tolerances {
    double tol_newton = 1e-11;  // Picard stop for the von Mises march
    double tol_linear = 1e-10;  // relative residual accepted from sparse solves
    double tol_compat = 1e-8;   // corner-compatibility margin
    double c_vtrace = 10.0;     // constant in max|VbL - Vb0| <= C L
};

struct ProblemData {
    double eps = 1e-3;
    double L = 0.1;
    double gamma = 0.2;
    double kappa = 0.01;
    double u_b = 0.5;    // plate speed, positive
    Profile1D u_e0;      // Euler shear profile of Y
    Profile1D ubar0;     // Prandtl inflow trace of y
    Profile1D ubar1;     // first-order inflow trace of y
    Profile1D Vb0;       // Euler corrector inflow trace of z
    Profile1D VbL;       // Euler corrector outflow trace of z
    Profile1D ub1;       // trace of u_e^1 at x = 0, function of z
    Cutoff chi = Cutoff::quartic_bump();
    Tolerances tol;
    unsigned seed = 12345;

    double u_e() const { return u_e0(0.0); }
};

/// Data satisfying every hypothesis; the compatibility traces still need
/// enforce_corner_compat() once the zeroth-order layer's corner values exist.
ProblemData default_demo_data(double eps = 1e-3, double L = 0.1);
/// Same shape with u_b = u_e and all mismatch traces identically zero.
ProblemData trivial_mismatch_data(double eps = 1e-3, double L = 0.1);

struct ValidationCheck {
    std::string name;
    bool pass = false;
    double value = 0.0;      // measured quantity (margin where applicable)
    double threshold = 0.0;  // what it was compared against
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    bool all_pass() const;
    const ValidationCheck& operator[](const std::string& name) const;
};

/// Run the admissibility checks of the theorem's hypotheses against `grid`.
/// Profile minima are taken over a dense sampling (10x the grid resolution).
ValidationReport validate(const ProblemData& pd, const Grid2D& grid);

struct CompatMargins {
    double at_x0 = 0.0;  // |V_b0(0) + v_p^0(0,0)|
    double at_xL = 0.0;  // |V_bL(0) + v_p^0(L,0)|
    bool pass = false;
};

/// Corner compatibility of the Euler-corrector traces against the layer's
/// corner values (the sign convention V_b0(0) = -v_p^0(0,0)).
CompatMargins compat_check(const ProblemData& pd, double vp0_corner0,
                           double vp0_cornerL);

/// Add e^{-z} corrections to Vb0/VbL so that the corner compatibility holds
/// exactly for the given corner values. Returns the adjusted data.
ProblemData enforce_corner_compat(const ProblemData& pd, double vp0_corner0,
                                  double vp0_cornerL);

}  // namespace blayer
