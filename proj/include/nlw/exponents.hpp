#pragma once

#include <utility>

namespace nlw {

struct Exponents {
    double p = 3;
    double alpha = 0;  // 2/(p-1)
    double beta = 0;   // 2p/(p-1)
    double gamma = 0;  // beta(beta-1)
    double kappa = 0;  // (p+1)/(p-1)
    double c = 0;      // c^{p-1} = alpha(alpha+1)
    bool resonant = false;

    int floor_2kappa() const;
};

struct Boost {
    double v = 0;
    double T = 0;
};

Exponents derive_exponents(double p);

/// x^e with integer exponents done by repeated multiplication.
double rpow(double x, double e);

/// (c t^{-alpha}, -alpha c t^{-alpha-1})
std::pair<double, double> model_value(const Exponents& e, double t);

/// c (1-v^2)^{1/(p-1)} (T + sign*t - v x)^{-alpha}
double boosted_model_value(const Exponents& e, const Boost& b, double t, double x, int sign = +1);

/// time derivative of boosted_model_value
double boosted_model_dt(const Exponents& e, const Boost& b, double t, double x, int sign = +1);

} // namespace nlw
