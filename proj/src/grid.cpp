#include "nlw/grid.hpp"
#include "nlw/errors.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <string>

namespace nlw {

Grid1D::Grid1D(double L_, int n_) : L(L_), n(n_) {
    if (n < 16 || n % 2 != 0)
        throw ConfigError("Grid1D: n must be even and >= 16, got " + std::to_string(n));
    if (!(L > 0)) throw ConfigError("Grid1D: length must be positive");
}

Field Grid1D::x() const {
    Field x(n);
    for (int i = 0; i < n; ++i) x[i] = i * h();
    return x;
}

Field d1(const Field& u, double h) {
    const int n = static_cast<int>(u.size());
    Field r(n);
    const double s = 1.0 / (12 * h);
    for (int i = 0; i < n; ++i) {
        int ip1 = (i + 1) % n, ip2 = (i + 2) % n;
        int im1 = (i - 1 + n) % n, im2 = (i - 2 + n) % n;
        r[i] = ((u[im2] - u[ip2]) + 8 * (u[ip1] - u[im1])) * s;
    }
    return r;
}

Field d2(const Field& u, double h) {
    const int n = static_cast<int>(u.size());
    Field r(n);
    const double s = 1.0 / (12 * h * h);
    for (int i = 0; i < n; ++i) {
        int ip1 = (i + 1) % n, ip2 = (i + 2) % n;
        int im1 = (i - 1 + n) % n, im2 = (i - 2 + n) % n;
        double c = u[i];
        r[i] = (-(u[ip2] - c) - (u[im2] - c) + 16 * ((u[ip1] - c) + (u[im1] - c))) * s;
    }
    return r;
}

double l2norm(const Field& u, double h) { return std::sqrt(h * u.square().sum()); }
double rms(const Field& u) { return u.size() ? std::sqrt(u.square().mean()) : 0.0; }
double supnorm(const Field& u) { return u.size() ? u.abs().maxCoeff() : 0.0; }
double integrate(const Field& u, double h) { return h * u.sum(); }

std::vector<double> fd_weights(double x0, const std::vector<double>& xs, int m) {
    // Fornberg (1988)
    const int n = static_cast<int>(xs.size());
    std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
    double c1 = 1, c4 = xs[0] - x0;
    c[0][0] = 1;
    for (int i = 1; i < n; ++i) {
        int mn = std::min(i, m);
        double c2 = 1, c5 = c4;
        c4 = xs[i] - x0;
        for (int j = 0; j < i; ++j) {
            double c3 = xs[i] - xs[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = c[i][m];
    return w;
}

double lagrange(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    double s = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        double l = 1;
        for (size_t j = 0; j < xs.size(); ++j)
            if (j != i) l *= (x - xs[j]) / (xs[i] - xs[j]);
        s += l * ys[i];
    }
    return s;
}

double hermite5(double t0, double t1, double y0, double v0, double a0, double y1, double v1,
                double a1, double t, double* dydt) {
    const double H = t1 - t0;
    const double s = (t - t0) / H;
    const double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
    // standard quintic Hermite basis
    const double h0 = 1 - 10 * s3 + 15 * s4 - 6 * s5;
    const double h1 = s - 6 * s3 + 8 * s4 - 3 * s5;
    const double h2 = 0.5 * (s2 - 3 * s3 + 3 * s4 - s5);
    const double h3 = 10 * s3 - 15 * s4 + 6 * s5;
    const double h4 = -4 * s3 + 7 * s4 - 3 * s5;
    const double h5 = 0.5 * (s3 - 2 * s4 + s5);
    if (dydt) {
        const double g0 = -30 * s2 + 60 * s3 - 30 * s4;
        const double g1 = 1 - 18 * s2 + 32 * s3 - 15 * s4;
        const double g2 = 0.5 * (2 * s - 9 * s2 + 12 * s3 - 5 * s4);
        const double g3 = 30 * s2 - 60 * s3 + 30 * s4;
        const double g4 = -12 * s2 + 28 * s3 - 15 * s4;
        const double g5 = 0.5 * (3 * s2 - 8 * s3 + 5 * s4);
        *dydt = (g0 * y0 + g3 * y1) / H + g1 * v0 + g4 * v1 + H * (g2 * a0 + g5 * a1);
    }
    return h0 * y0 + h1 * H * v0 + h2 * H * H * a0 + h3 * y1 + h4 * H * v1 + h5 * H * H * a1;
}

Field lowpass(const Field& u, int kmax) {
    const int n = static_cast<int>(u.size());
    Eigen::FFT<double> fft;
    std::vector<double> in(u.data(), u.data() + n);
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, in);
    for (int k = 0; k < n; ++k) {
        int kk = k <= n / 2 ? k : n - k;
        if (kk > kmax) spec[k] = 0;
    }
    std::vector<double> out;
    fft.inv(out, spec);
    Field r(n);
    for (int i = 0; i < n; ++i) r[i] = out[i];
    return r;
}

} // namespace nlw
