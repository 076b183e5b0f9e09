// Tensor-product grids on [0,L]x[0,Ymax], node fields, second-order
// difference operators and trapezoid-rule norms shared by every solver.
#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace blayer {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ResolutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Stretch { Uniform, Tanh };

struct StretchSpec {
    Stretch kind = Stretch::Uniform;
    double beta = 0.0;  // tanh clustering strength, > 0 when kind == Tanh
};

/// Nodes of [0,L] x [0,Ymax] with trapezoid quadrature weights.
/// The y direction may be tanh-stretched (clustered near y = 0).
struct Grid2D {
    int nx = 0;
    int ny = 0;
    double L = 0.0;
    double Ymax = 0.0;
    std::vector<double> x;   // size nx, x[0]=0, x[nx-1]=L, strictly increasing
    std::vector<double> y;   // size ny, y[0]=0, y[ny-1]=Ymax, strictly increasing
    std::vector<double> wx;  // trapezoid weights, sum = L
    std::vector<double> wy;  // trapezoid weights, sum = Ymax

    double dx(int i) const { return x[i + 1] - x[i]; }
    double dy(int j) const { return y[j + 1] - y[j]; }
    bool uniform_x() const;
    bool uniform_y() const;
};

Grid2D make_grid(double L, double Ymax, int nx, int ny,
                 StretchSpec stretch = {});

enum class Centering { Node, XFace, YFace, Cell };

/// Scalar samples attached to a grid. Node fields are nx*ny; staggered
/// centerings follow the MAC convention (see remainder.hpp).
struct Field2D {
    const Grid2D* grid = nullptr;
    Centering centering = Centering::Node;
    int rows = 0;  // count along x
    int cols = 0;  // count along y
    std::vector<double> v;

    Field2D() = default;
    Field2D(const Grid2D& g, Centering c = Centering::Node, double fill = 0.0);

    double& operator()(int i, int j) { return v[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return v[static_cast<size_t>(i) * cols + j]; }

    /// Evaluate f(x, y) at every node (node centering only).
    void fill_from(const std::function<double(double, double)>& f);
    bool all_finite() const;
    void require_finite(const std::string& what) const;
};

Field2D make_node_field(const Grid2D& g,
                        const std::function<double(double, double)>& f);

// Second-order first derivatives (central interior, one-sided boundary),
// exact on affine fields. Node centering.
Field2D ddx(const Field2D& f);
Field2D ddy(const Field2D& f);
// Second derivatives with the standard 3-point stencils (nonuniform-aware).
Field2D d2x(const Field2D& f);
Field2D d2y(const Field2D& f);
/// Delta_eps f = f_yy + eps * f_xx.
Field2D laplace_eps(const Field2D& f, double eps);

/// || <y>^{n/2} f ||_{L2} with <y> = sqrt(1+y^2), trapezoid quadrature.
double norm_L2(const Field2D& f, int weight_power = 0);
double norm_sup(const Field2D& f);
/// || grad_eps f || = sqrt(eps ||f_x||^2 + ||f_y||^2).
double norm_grad_eps(const Field2D& f, double eps);
/// Plain L2 inner product over the grid (node fields).
double inner(const Field2D& f, const Field2D& g);

// In-place field algebra (shapes must match).
Field2D operator+(const Field2D& a, const Field2D& b);
Field2D operator-(const Field2D& a, const Field2D& b);
Field2D operator*(const Field2D& a, const Field2D& b);
Field2D operator*(double s, const Field2D& a);

// 1-D helpers on the grid's y nodes (shared by profile constructions).
double trapz(const std::vector<double>& xs, const std::vector<double>& vals);
/// Cumulative trapezoid from xs[0]; out[0] = 0.
std::vector<double> cumtrapz(const std::vector<double>& xs,
                             const std::vector<double>& vals);

/// Fit g(s) ~ g(end) * exp(-lambda (s - s_end)) on the trailing window and
/// return the estimated tail integral over (s_end, infinity). Falls back to 0
/// when the samples do not look like a one-signed exponential tail.
double exp_tail_integral(const std::vector<double>& s,
                         const std::vector<double>& g,
                         double window_fraction = 0.10);

/// int_y^infty vals along each y-line: reverse cumulative trapezoid plus the
/// fitted exponential tail beyond Ymax.
std::vector<double> upper_tail_integral(const std::vector<double>& ys,
                                        const std::vector<double>& vals);

// 1-D second-order derivative along a (possibly nonuniform) axis.
std::vector<double> deriv1(const std::vector<double>& s, const std::vector<double>& f);
std::vector<double> deriv2(const std::vector<double>& s, const std::vector<double>& f);

/// Thomas solve of a tridiagonal system (no pivoting; intended for
/// diagonally dominant M-matrices). a = sub, b = diag, c = super.
std::vector<double> solve_tridiag(std::vector<double> a, std::vector<double> b,
                                  std::vector<double> c, std::vector<double> r);

}  // namespace blayer
