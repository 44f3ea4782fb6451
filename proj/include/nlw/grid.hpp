#pragma once

#include <Eigen/Core>
#include <vector>

namespace nlw {

using Field = Eigen::ArrayXd;

/// Uniform periodic grid on [0, L).
struct Grid1D {
    double L = 0;
    int n = 0;

    Grid1D() = default;
    Grid1D(double L_, int n_);
    double h() const { return L / n; }
    Field x() const;
    bool operator==(const Grid1D& o) const { return L == o.L && n == o.n; }
};

/// 4th-order periodic central differences.
Field d1(const Field& u, double h);
Field d2(const Field& u, double h);

/// Discrete L2 norm sqrt(h * sum u^2) and the mean-square version.
double l2norm(const Field& u, double h);
double rms(const Field& u);
double supnorm(const Field& u);

/// Trapezoid = spectral quadrature of a periodic field.
double integrate(const Field& u, double h);

/// Fornberg finite-difference weights for derivative `m` at x0 from nodes xs.
std::vector<double> fd_weights(double x0, const std::vector<double>& xs, int m);

/// Lagrange interpolation through (xs, ys) at x.
double lagrange(const std::vector<double>& xs, const std::vector<double>& ys, double x);

/// Quintic Hermite on [t0, t1] from value, first and second derivative at both ends.
double hermite5(double t0, double t1, double y0, double d0, double s0, double y1, double d1_,
                double s1, double t, double* dydt = nullptr);

/// Crude spectral low-pass: zero all Fourier modes with |k| > kmax.
Field lowpass(const Field& u, int kmax);

} // namespace nlw
