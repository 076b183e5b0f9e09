#include "blayer/problem_data.hpp"

#include <algorithm>
#include <cmath>

#include "blayer/interp.hpp"

namespace blayer {

Profile1D Profile1D::analytic(ScalarFn f, ScalarFn d1, ScalarFn d2) {
    return Profile1D{std::move(f), std::move(d1), std::move(d2)};
}

Profile1D Profile1D::from_fn(ScalarFn f, double fd_step) {
    Profile1D p;
    p.f = f;
    p.d1 = [f, fd_step](double s) {
        return (f(s + fd_step) - f(std::max(0.0, s - fd_step))) /
               (s + fd_step - std::max(0.0, s - fd_step));
    };
    p.d2 = [f, fd_step](double s) {
        const double lo = std::max(0.0, s - fd_step);
        const double hi = s + fd_step;
        const double mid = 0.5 * (lo + hi);
        const double h1 = mid - lo, h2 = hi - mid;
        return 2.0 * (h2 * f(lo) - (h1 + h2) * f(mid) + h1 * f(hi)) /
               (h1 * h2 * (h1 + h2));
    };
    return p;
}

Profile1D Profile1D::from_expr(const std::string& expr) {
    return from_fn(parse_expr(expr));
}

Profile1D Profile1D::from_samples(std::vector<double> s, std::vector<double> v) {
    auto interp = std::make_shared<Pchip>(std::move(s), std::move(v));
    return from_fn([interp](double q) { return (*interp)(q); }, 1e-4);
}

Profile1D Profile1D::zero() {
    auto z = [](double) { return 0.0; };
    return analytic(z, z, z);
}

Cutoff Cutoff::quartic_bump() {
    Cutoff c;
    c.f = [](double s) {
        s = std::max(s, 0.0);
        if (s >= 1.0) return 0.0;
        const double t = 1.0 - s;
        return t * t * t * t * (1.0 + 4.0 * s);
    };
    c.d1 = [](double s) {
        s = std::max(s, 0.0);
        if (s >= 1.0) return 0.0;
        const double t = 1.0 - s;
        return -20.0 * s * t * t * t;
    };
    c.d2 = [](double s) {
        s = std::max(s, 0.0);
        if (s >= 1.0) return 0.0;
        const double t = 1.0 - s;
        return -20.0 * t * t * (1.0 - 4.0 * s);
    };
    return c;
}

ProblemData default_demo_data(double eps, double L) {
    ProblemData pd;
    pd.eps = eps;
    pd.L = L;
    pd.u_e0 = Profile1D::analytic([](double Y) { return 1.0 + std::exp(-Y); },
                                  [](double Y) { return -std::exp(-Y); },
                                  [](double Y) { return std::exp(-Y); });
    pd.u_b = 0.5;
    const double mismatch = pd.u_e() - pd.u_b;  // 1.5
    pd.ubar0 = Profile1D::analytic(
        [mismatch](double y) { return -mismatch * std::exp(-y); },
        [mismatch](double y) { return mismatch * std::exp(-y); },
        [mismatch](double y) { return -mismatch * std::exp(-y); });
    // ubar1(0) = -ub1(0) keeps the no-slip matching of the first-order layer.
    const double a = 0.2, b = 0.3;
    pd.ubar1 = Profile1D::analytic(
        [a, b](double y) { return (-a + b * y) * std::exp(-y); },
        [a, b](double y) { return (a + b - b * y) * std::exp(-y); },
        [a, b](double y) { return (-a - 2.0 * b + b * y) * std::exp(-y); });
    pd.ub1 = Profile1D::analytic([a](double z) { return a * std::exp(-z); },
                                 [a](double z) { return -a * std::exp(-z); },
                                 [a](double z) { return a * std::exp(-z); });
    const double c0 = 0.05, cL = 0.05;
    pd.Vb0 = Profile1D::analytic([c0](double z) { return c0 * std::exp(-z); },
                                 [c0](double z) { return -c0 * std::exp(-z); },
                                 [c0](double z) { return c0 * std::exp(-z); });
    pd.VbL = Profile1D::analytic([cL](double z) { return cL * std::exp(-z); },
                                 [cL](double z) { return -cL * std::exp(-z); },
                                 [cL](double z) { return cL * std::exp(-z); });
    return pd;
}

ProblemData trivial_mismatch_data(double eps, double L) {
    ProblemData pd = default_demo_data(eps, L);
    pd.u_b = pd.u_e();
    pd.ubar0 = Profile1D::zero();
    pd.ubar1 = Profile1D::zero();
    pd.ub1 = Profile1D::zero();
    pd.Vb0 = Profile1D::zero();
    pd.VbL = Profile1D::zero();
    return pd;
}

bool ValidationReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const ValidationCheck& c) { return c.pass; });
}

const ValidationCheck& ValidationReport::operator[](const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return c;
    throw ConfigError("ValidationReport: no check named " + name);
}

ValidationReport validate(const ProblemData& pd, const Grid2D& grid) {
    ValidationReport rep;
    auto push = [&rep](std::string name, bool pass, double value, double thr) {
        rep.checks.push_back({std::move(name), pass, value, thr});
    };

    push("u_b_positive", pd.u_b > 0.0, pd.u_b, 0.0);

    // nozero margin on a dense sampling (10x grid resolution, grid nodes included)
    const double se = std::sqrt(pd.eps);
    double margin = std::numeric_limits<double>::infinity();
    const int dense = 10 * grid.ny;
    for (int k = 0; k <= dense; ++k) {
        const double y = grid.Ymax * k / double(dense);
        margin = std::min(margin, pd.u_e0(se * y) + pd.ubar0(y));
    }
    for (double y : grid.y) margin = std::min(margin, pd.u_e0(se * y) + pd.ubar0(y));
    push("nozero_margin", margin > 0.0, margin, 0.0);

    push("gamma_range", pd.gamma > 0.0 && pd.gamma < 0.25, pd.gamma, 0.25);
    push("kappa_range", pd.kappa > 0.0 && pd.kappa < 0.25 - pd.gamma, pd.kappa,
         0.25 - pd.gamma);

    double vdiff = 0.0;
    for (int k = 0; k <= dense; ++k) {
        const double z = grid.Ymax * k / double(dense);
        vdiff = std::max(vdiff, std::abs(pd.VbL(z) - pd.Vb0(z)));
    }
    push("vtrace_lipschitz", vdiff <= pd.tol.c_vtrace * pd.L, vdiff,
         pd.tol.c_vtrace * pd.L);

    const double decay_tol = 1e-6;
    push("ubar0_decay", std::abs(pd.ubar0(grid.Ymax)) <= decay_tol,
         std::abs(pd.ubar0(grid.Ymax)), decay_tol);
    push("ubar1_decay", std::abs(pd.ubar1(grid.Ymax)) <= decay_tol,
         std::abs(pd.ubar1(grid.Ymax)), decay_tol);
    push("Vb0_decay", std::abs(pd.Vb0(grid.Ymax)) <= decay_tol,
         std::abs(pd.Vb0(grid.Ymax)), decay_tol);
    push("VbL_decay", std::abs(pd.VbL(grid.Ymax)) <= decay_tol,
         std::abs(pd.VbL(grid.Ymax)), decay_tol);
    push("ub1_decay", std::abs(pd.ub1(grid.Ymax)) <= decay_tol,
         std::abs(pd.ub1(grid.Ymax)), decay_tol);

    push("chi_at_0", std::abs(pd.chi(0.0) - 1.0) <= 1e-12, pd.chi(0.0), 1.0);
    double chi_beyond = 0.0, chi_dd = 0.0;
    for (int k = 0; k <= 200; ++k) {
        const double s = 3.0 * k / 200.0;
        if (s >= 1.0) chi_beyond = std::max(chi_beyond, std::abs(pd.chi(s)));
        chi_dd = std::max(chi_dd, std::abs(pd.chi.dd(s)));
    }
    push("chi_support", chi_beyond <= 1e-12, chi_beyond, 0.0);
    push("chi_C2_bound", std::isfinite(chi_dd) && chi_dd < 1e3, chi_dd, 1e3);

    return rep;
}

CompatMargins compat_check(const ProblemData& pd, double vp0_corner0,
                           double vp0_cornerL) {
    CompatMargins m;
    m.at_x0 = std::abs(pd.Vb0(0.0) + vp0_corner0);
    m.at_xL = std::abs(pd.VbL(0.0) + vp0_cornerL);
    m.pass = m.at_x0 <= pd.tol.tol_compat && m.at_xL <= pd.tol.tol_compat;
    return m;
}

ProblemData enforce_corner_compat(const ProblemData& pd, double vp0_corner0,
                                  double vp0_cornerL) {
    ProblemData out = pd;
    const double s0 = -vp0_corner0 - pd.Vb0(0.0);
    const double sL = -vp0_cornerL - pd.VbL(0.0);
    const Profile1D base0 = pd.Vb0, baseL = pd.VbL;
    out.Vb0 = Profile1D::analytic(
        [base0, s0](double z) { return base0(z) + s0 * std::exp(-z); },
        [base0, s0](double z) { return base0.d(z) - s0 * std::exp(-z); },
        [base0, s0](double z) { return base0.dd(z) + s0 * std::exp(-z); });
    out.VbL = Profile1D::analytic(
        [baseL, sL](double z) { return baseL(z) + sL * std::exp(-z); },
        [baseL, sL](double z) { return baseL.d(z) - sL * std::exp(-z); },
        [baseL, sL](double z) { return baseL.dd(z) + sL * std::exp(-z); });
    return out;
}

}  // namespace blayer
