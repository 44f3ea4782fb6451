#include "nlw/exponents.hpp"
#include "nlw/errors.hpp"

#include <cmath>
#include <string>

namespace nlw {

int Exponents::floor_2kappa() const {
    double k2 = 2 * kappa;
    if (resonant) return static_cast<int>(std::lround(k2));
    return static_cast<int>(std::floor(k2));
}

double rpow(double x, double e) {
    double r = std::round(e);
    if (e == r && std::fabs(r) <= 64) {
        long n = static_cast<long>(r);
        bool inv = n < 0;
        if (inv) n = -n;
        double acc = 1, b = x;
        while (n) {
            if (n & 1) acc *= b;
            b *= b;
            n >>= 1;
        }
        return inv ? 1 / acc : acc;
    }
    return std::pow(x, e);
}

Exponents derive_exponents(double p) {
    if (!(p > 1) || !std::isfinite(p))
        throw ConfigError("derive_exponents: need p > 1, got " + std::to_string(p));
    Exponents e;
    e.p = p;
    e.alpha = 2 / (p - 1);
    e.beta = 2 * p / (p - 1);
    e.gamma = e.beta * (e.beta - 1);
    e.kappa = (p + 1) / (p - 1);
    e.c = rpow(e.alpha * (e.alpha + 1), 1 / (p - 1));
    double k2 = 2 * e.kappa;
    e.resonant = std::fabs(k2 - std::round(k2)) < 1e-12;
    return e;
}

std::pair<double, double> model_value(const Exponents& e, double t) {
    if (!(t > 0)) throw ConfigError("model_value: need t > 0");
    double phi = e.c * rpow(t, -e.alpha);
    return {phi, -e.alpha * phi / t};
}

static double boosted_phase(const Boost& b, double t, double x, int sign) {
    double ph = b.T + sign * t - b.v * x;
    if (!(ph > 0)) throw ConfigError("boosted_model_value: non-positive phase");
    if (!(std::fabs(b.v) < 1)) throw ConfigError("boosted_model_value: need |v| < 1");
    return ph;
}

double boosted_model_value(const Exponents& e, const Boost& b, double t, double x, int sign) {
    double ph = boosted_phase(b, t, x, sign);
    return e.c * rpow(1 - b.v * b.v, 1 / (e.p - 1)) * rpow(ph, -e.alpha);
}

double boosted_model_dt(const Exponents& e, const Boost& b, double t, double x, int sign) {
    double ph = boosted_phase(b, t, x, sign);
    return -sign * e.alpha * boosted_model_value(e, b, t, x, sign) / ph;
}

} // namespace nlw
