// Monotone cubic (Fritsch-Carlson) interpolation and bilinear field sampling.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "blayer/grid.hpp"

namespace blayer {

/// Shape-preserving cubic Hermite interpolant on a strictly increasing knot set.
/// Evaluation outside the knots clamps to the end values (profiles here decay,
/// so the clamp only ever sees the flat tail).
class Pchip {
  public:
    Pchip() = default;
    Pchip(std::vector<double> xs, std::vector<double> ys)
        : x_(std::move(xs)), y_(std::move(ys)) {
        const int n = static_cast<int>(x_.size());
        if (n < 2) throw ConfigError("Pchip: need at least two knots");
        for (int i = 0; i + 1 < n; ++i)
            if (!(x_[i + 1] > x_[i])) throw ConfigError("Pchip: knots must increase");
        d_.assign(n, 0.0);
        std::vector<double> h(n - 1), slope(n - 1);
        for (int i = 0; i + 1 < n; ++i) {
            h[i] = x_[i + 1] - x_[i];
            slope[i] = (y_[i + 1] - y_[i]) / h[i];
        }
        if (n == 2) {
            d_[0] = d_[1] = slope[0];
            return;
        }
        for (int i = 1; i + 1 < n; ++i) {
            if (slope[i - 1] * slope[i] <= 0.0) {
                d_[i] = 0.0;
            } else {
                const double w1 = 2.0 * h[i] + h[i - 1];
                const double w2 = h[i] + 2.0 * h[i - 1];
                d_[i] = (w1 + w2) / (w1 / slope[i - 1] + w2 / slope[i]);
            }
        }
        d_[0] = edge(h[0], h[1], slope[0], slope[1]);
        d_[n - 1] = edge(h[n - 2], h[n - 3], slope[n - 2], slope[n - 3]);
    }

    double operator()(double xq) const {
        if (xq <= x_.front()) return y_.front();
        if (xq >= x_.back()) return y_.back();
        const int i = static_cast<int>(std::upper_bound(x_.begin(), x_.end(), xq) -
                                       x_.begin()) - 1;
        const double h = x_[i + 1] - x_[i];
        const double t = (xq - x_[i]) / h;
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        return h00 * y_[i] + h * h10 * d_[i] + h01 * y_[i + 1] + h * h11 * d_[i + 1];
    }

  private:
    static double edge(double h0, double h1, double s0, double s1) {
        double d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
        if (d * s0 <= 0.0) return 0.0;
        if (s0 * s1 < 0.0 && std::abs(d) > 3.0 * std::abs(s0)) return 3.0 * s0;
        return d;
    }
    std::vector<double> x_, y_, d_;
};

/// Bilinear sample of a node field at an arbitrary point (clamped to the box).
inline double sample_bilinear(const Field2D& f, double xq, double yq) {
    const Grid2D& g = *f.grid;
    xq = std::clamp(xq, g.x.front(), g.x.back());
    yq = std::clamp(yq, g.y.front(), g.y.back());
    int i = static_cast<int>(std::upper_bound(g.x.begin(), g.x.end(), xq) - g.x.begin()) - 1;
    int j = static_cast<int>(std::upper_bound(g.y.begin(), g.y.end(), yq) - g.y.begin()) - 1;
    i = std::clamp(i, 0, g.nx - 2);
    j = std::clamp(j, 0, g.ny - 2);
    const double tx = (xq - g.x[i]) / (g.x[i + 1] - g.x[i]);
    const double ty = (yq - g.y[j]) / (g.y[j + 1] - g.y[j]);
    return (1 - tx) * (1 - ty) * f(i, j) + tx * (1 - ty) * f(i + 1, j) +
           (1 - tx) * ty * f(i, j + 1) + tx * ty * f(i + 1, j + 1);
}

}  // namespace blayer
