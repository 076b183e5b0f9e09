#include "blayer/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace blayer {

namespace {

std::vector<double> trapezoid_weights(const std::vector<double>& s) {
    const int n = static_cast<int>(s.size());
    std::vector<double> w(n, 0.0);
    for (int i = 0; i + 1 < n; ++i) {
        const double h = s[i + 1] - s[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    return w;
}

bool nearly_uniform(const std::vector<double>& s) {
    if (s.size() < 3) return true;
    const double h0 = s[1] - s[0];
    for (size_t i = 1; i + 1 < s.size(); ++i) {
        if (std::abs((s[i + 1] - s[i]) - h0) > 1e-12 * std::max(1.0, std::abs(h0)))
            return false;
    }
    return true;
}

}  // namespace

bool Grid2D::uniform_x() const { return nearly_uniform(x); }
bool Grid2D::uniform_y() const { return nearly_uniform(y); }

Grid2D make_grid(double L, double Ymax, int nx, int ny, StretchSpec stretch) {
    if (nx < 2 || ny < 2) throw ConfigError("make_grid: nx, ny must be >= 2");
    if (!(L > 0.0) || !(Ymax > 0.0)) throw ConfigError("make_grid: L, Ymax must be > 0");
    if (stretch.kind == Stretch::Tanh && !(stretch.beta > 0.0))
        throw ConfigError("make_grid: tanh stretch requires beta > 0");

    Grid2D g;
    g.nx = nx;
    g.ny = ny;
    g.L = L;
    g.Ymax = Ymax;
    g.x.resize(nx);
    g.y.resize(ny);
    for (int i = 0; i < nx; ++i) g.x[i] = L * i / double(nx - 1);
    g.x.back() = L;
    if (stretch.kind == Stretch::Uniform) {
        for (int j = 0; j < ny; ++j) g.y[j] = Ymax * j / double(ny - 1);
    } else {
        // y(xi) = Ymax (1 - tanh(beta(1-xi))/tanh(beta)) clusters nodes at y=0.
        const double tb = std::tanh(stretch.beta);
        for (int j = 0; j < ny; ++j) {
            const double xi = j / double(ny - 1);
            g.y[j] = Ymax * (1.0 - std::tanh(stretch.beta * (1.0 - xi)) / tb);
        }
        g.y[0] = 0.0;
    }
    g.y.back() = Ymax;
    for (int j = 0; j + 1 < ny; ++j) {
        if (!(g.y[j + 1] > g.y[j])) throw ConfigError("make_grid: y nodes not increasing");
    }
    g.wx = trapezoid_weights(g.x);
    g.wy = trapezoid_weights(g.y);
    return g;
}

Field2D::Field2D(const Grid2D& g, Centering c, double fill) : grid(&g), centering(c) {
    switch (c) {
        case Centering::Node:  rows = g.nx;     cols = g.ny;     break;
        case Centering::XFace: rows = g.nx;     cols = g.ny - 1; break;
        case Centering::YFace: rows = g.nx - 1; cols = g.ny;     break;
        case Centering::Cell:  rows = g.nx - 1; cols = g.ny - 1; break;
    }
    v.assign(static_cast<size_t>(rows) * cols, fill);
}

void Field2D::fill_from(const std::function<double(double, double)>& f) {
    if (centering != Centering::Node)
        throw ConfigError("fill_from: node centering expected");
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) (*this)(i, j) = f(grid->x[i], grid->y[j]);
}

bool Field2D::all_finite() const {
    return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

void Field2D::require_finite(const std::string& what) const {
    if (!all_finite()) throw SolverError(what + ": non-finite field entries");
}

Field2D make_node_field(const Grid2D& g,
                        const std::function<double(double, double)>& f) {
    Field2D out(g);
    out.fill_from(f);
    return out;
}

namespace {

// Second-order 3-point first-derivative weights at s1 given neighbors s0 < s1 < s2.
inline void d1_weights(double s0, double s1, double s2, double& w0, double& w1, double& w2) {
    const double h1 = s1 - s0, h2 = s2 - s1;
    w0 = -h2 / (h1 * (h1 + h2));
    w1 = (h2 - h1) / (h1 * h2);
    w2 = h1 / (h2 * (h1 + h2));
}

// One-sided second-order first derivative at s0 using s0 < s1 < s2.
inline void d1_onesided(double s0, double s1, double s2, double& w0, double& w1, double& w2) {
    const double h1 = s1 - s0, h2 = s2 - s1;
    w0 = -(2.0 * h1 + h2) / (h1 * (h1 + h2));
    w1 = (h1 + h2) / (h1 * h2);
    w2 = -h1 / (h2 * (h1 + h2));
}

// 3-point second derivative (exact on quadratics for any spacing).
inline void d2_weights(double s0, double s1, double s2, double& w0, double& w1, double& w2) {
    const double h1 = s1 - s0, h2 = s2 - s1;
    w0 = 2.0 / (h1 * (h1 + h2));
    w1 = -2.0 / (h1 * h2);
    w2 = 2.0 / (h2 * (h1 + h2));
}

}  // namespace

std::vector<double> deriv1(const std::vector<double>& s, const std::vector<double>& f) {
    const int n = static_cast<int>(s.size());
    std::vector<double> out(n, 0.0);
    if (n < 3) {
        if (n == 2) out[0] = out[1] = (f[1] - f[0]) / (s[1] - s[0]);
        return out;
    }
    double w0, w1, w2;
    d1_onesided(s[0], s[1], s[2], w0, w1, w2);
    out[0] = w0 * f[0] + w1 * f[1] + w2 * f[2];
    for (int i = 1; i + 1 < n; ++i) {
        d1_weights(s[i - 1], s[i], s[i + 1], w0, w1, w2);
        out[i] = w0 * f[i - 1] + w1 * f[i] + w2 * f[i + 1];
    }
    d1_onesided(s[n - 1], s[n - 2], s[n - 3], w0, w1, w2);
    out[n - 1] = w0 * f[n - 1] + w1 * f[n - 2] + w2 * f[n - 3];
    return out;
}

namespace {

// Fornberg finite-difference weights for derivative order m at z0 over `pts`.
std::vector<double> fornberg_weights(double z0, const std::vector<double>& pts, int m) {
    const int n = static_cast<int>(pts.size()) - 1;
    std::vector<std::vector<double>> c(n + 1, std::vector<double>(m + 1, 0.0));
    double c1 = 1.0, c4 = pts[0] - z0;
    c[0][0] = 1.0;
    for (int i = 1; i <= n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = pts[i] - z0;
        for (int j = 0; j < i; ++j) {
            const double c3 = pts[i] - pts[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k)
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n + 1);
    for (int i = 0; i <= n; ++i) w[i] = c[i][m];
    return w;
}

}  // namespace

std::vector<double> deriv2(const std::vector<double>& s, const std::vector<double>& f) {
    const int n = static_cast<int>(s.size());
    std::vector<double> out(n, 0.0);
    if (n < 4) return out;
    double w0, w1, w2;
    for (int i = 1; i + 1 < n; ++i) {
        d2_weights(s[i - 1], s[i], s[i + 1], w0, w1, w2);
        out[i] = w0 * f[i - 1] + w1 * f[i] + w2 * f[i + 1];
    }
    // one-sided 4-point closures, second-order at the ends
    const std::vector<double> lo(s.begin(), s.begin() + 4);
    const auto wl = fornberg_weights(s[0], lo, 2);
    out[0] = wl[0] * f[0] + wl[1] * f[1] + wl[2] * f[2] + wl[3] * f[3];
    const std::vector<double> hi(s.end() - 4, s.end());
    const auto wh = fornberg_weights(s[n - 1], hi, 2);
    out[n - 1] = wh[0] * f[n - 4] + wh[1] * f[n - 3] + wh[2] * f[n - 2] + wh[3] * f[n - 1];
    return out;
}

Field2D ddx(const Field2D& f) {
    if (f.centering != Centering::Node) throw ConfigError("ddx: node centering expected");
    const Grid2D& g = *f.grid;
    Field2D out(g);
    std::vector<double> line(g.nx), dline;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) line[i] = f(i, j);
        dline = deriv1(g.x, line);
        for (int i = 0; i < g.nx; ++i) out(i, j) = dline[i];
    }
    return out;
}

Field2D ddy(const Field2D& f) {
    if (f.centering != Centering::Node) throw ConfigError("ddy: node centering expected");
    const Grid2D& g = *f.grid;
    Field2D out(g);
    std::vector<double> line(g.ny), dline;
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) line[j] = f(i, j);
        dline = deriv1(g.y, line);
        for (int j = 0; j < g.ny; ++j) out(i, j) = dline[j];
    }
    return out;
}

Field2D d2x(const Field2D& f) {
    const Grid2D& g = *f.grid;
    Field2D out(g);
    std::vector<double> line(g.nx), dline;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) line[i] = f(i, j);
        dline = deriv2(g.x, line);
        for (int i = 0; i < g.nx; ++i) out(i, j) = dline[i];
    }
    return out;
}

Field2D d2y(const Field2D& f) {
    const Grid2D& g = *f.grid;
    Field2D out(g);
    std::vector<double> line(g.ny), dline;
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) line[j] = f(i, j);
        dline = deriv2(g.y, line);
        for (int j = 0; j < g.ny; ++j) out(i, j) = dline[j];
    }
    return out;
}

Field2D laplace_eps(const Field2D& f, double eps) {
    Field2D fyy = d2y(f);
    Field2D fxx = d2x(f);
    for (size_t k = 0; k < fyy.v.size(); ++k) fyy.v[k] += eps * fxx.v[k];
    return fyy;
}

double norm_L2(const Field2D& f, int weight_power) {
    if (weight_power < 0) throw ConfigError("norm_L2: weight power must be >= 0");
    if (f.centering != Centering::Node) throw ConfigError("norm_L2: node centering expected");
    const Grid2D& g = *f.grid;
    double acc = 0.0;
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            const double w = std::pow(1.0 + g.y[j] * g.y[j], 0.5 * weight_power);
            acc += g.wx[i] * g.wy[j] * w * f(i, j) * f(i, j);
        }
    }
    return std::sqrt(acc);
}

double norm_sup(const Field2D& f) {
    double m = 0.0;
    for (double a : f.v) m = std::max(m, std::abs(a));
    return m;
}

double norm_grad_eps(const Field2D& f, double eps) {
    const double nx2 = norm_L2(ddx(f));
    const double ny2 = norm_L2(ddy(f));
    return std::sqrt(eps * nx2 * nx2 + ny2 * ny2);
}

double inner(const Field2D& f, const Field2D& g) {
    const Grid2D& gr = *f.grid;
    double acc = 0.0;
    for (int i = 0; i < gr.nx; ++i)
        for (int j = 0; j < gr.ny; ++j) acc += gr.wx[i] * gr.wy[j] * f(i, j) * g(i, j);
    return acc;
}

namespace {
Field2D combine(const Field2D& a, const Field2D& b, double sb) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw ConfigError("field algebra: shape mismatch");
    Field2D out = a;
    for (size_t k = 0; k < out.v.size(); ++k) out.v[k] += sb * b.v[k];
    return out;
}
}  // namespace

Field2D operator+(const Field2D& a, const Field2D& b) { return combine(a, b, 1.0); }
Field2D operator-(const Field2D& a, const Field2D& b) { return combine(a, b, -1.0); }
Field2D operator*(const Field2D& a, const Field2D& b) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw ConfigError("field algebra: shape mismatch");
    Field2D out = a;
    for (size_t k = 0; k < out.v.size(); ++k) out.v[k] *= b.v[k];
    return out;
}
Field2D operator*(double s, const Field2D& a) {
    Field2D out = a;
    for (double& x : out.v) x *= s;
    return out;
}

double trapz(const std::vector<double>& xs, const std::vector<double>& vals) {
    double acc = 0.0;
    for (size_t i = 0; i + 1 < xs.size(); ++i)
        acc += 0.5 * (xs[i + 1] - xs[i]) * (vals[i] + vals[i + 1]);
    return acc;
}

std::vector<double> cumtrapz(const std::vector<double>& xs,
                             const std::vector<double>& vals) {
    std::vector<double> out(xs.size(), 0.0);
    for (size_t i = 0; i + 1 < xs.size(); ++i)
        out[i + 1] = out[i] + 0.5 * (xs[i + 1] - xs[i]) * (vals[i] + vals[i + 1]);
    return out;
}

double exp_tail_integral(const std::vector<double>& s, const std::vector<double>& g,
                         double window_fraction) {
    const int n = static_cast<int>(s.size());
    const int m = std::max(3, static_cast<int>(window_fraction * n));
    if (n < m) return 0.0;
    const double gend = g[n - 1];
    if (std::abs(gend) < 1e-300) return 0.0;
    // require one-signed samples over the fit window
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (int i = n - m; i < n; ++i) {
        if (g[i] * gend <= 0.0) return 0.0;
        const double lx = s[i], ly = std::log(std::abs(g[i]));
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++cnt;
    }
    const double denom = cnt * sxx - sx * sx;
    if (std::abs(denom) < 1e-300) return 0.0;
    const double slope = (cnt * sxy - sx * sy) / denom;
    const double lambda = -slope;
    if (!(lambda > 0.05)) return 0.0;  // not a decaying tail; drop the extension
    return gend / lambda;
}

std::vector<double> upper_tail_integral(const std::vector<double>& ys,
                                        const std::vector<double>& vals) {
    const int n = static_cast<int>(ys.size());
    std::vector<double> out(n, 0.0);
    const double tail = exp_tail_integral(ys, vals);
    out[n - 1] = tail;
    for (int j = n - 2; j >= 0; --j)
        out[j] = out[j + 1] + 0.5 * (ys[j + 1] - ys[j]) * (vals[j] + vals[j + 1]);
    return out;
}

std::vector<double> solve_tridiag(std::vector<double> a, std::vector<double> b,
                                  std::vector<double> c, std::vector<double> r) {
    const int n = static_cast<int>(b.size());
    for (int i = 1; i < n; ++i) {
        const double m = a[i] / b[i - 1];
        b[i] -= m * c[i - 1];
        r[i] -= m * r[i - 1];
    }
    std::vector<double> x(n);
    x[n - 1] = r[n - 1] / b[n - 1];
    for (int i = n - 2; i >= 0; --i) x[i] = (r[i] - c[i] * x[i + 1]) / b[i];
    return x;
}

}  // namespace blayer
