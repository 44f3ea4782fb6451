#pragma once

#include "nlw/chart.hpp"
#include "nlw/series.hpp"

#include <string>
#include <vector>

namespace nlw {

struct AnsatzConfig {
    Exponents e;
    Chart chart;
    Field psi;
    double N = 6;
    double N_max = 0;  // 0: default 2 beta + 4
    double slope_limit = 0.1;  // standing assumption |f'| < 1/10; raise for boosted checks
};

struct SkippedTerm {
    double exponent;
    int log_power;
    double max_abs;
};

struct Ansatz {
    FuchsianSeries series;
    std::vector<SkippedTerm> skipped;
    Diagnostics diag;
    double residual_order = 0;  // N - alpha - 2
};

/// c (1 - f'^2)^{1/(p-1)} t^{-alpha}
FuchsianSeries leading_profile(const AnsatzConfig& cfg);

/// □ in the chart, applied to a series with field coefficients.
FuchsianSeries apply_box(const FuchsianSeries& s, const Chart& chart);

/// P[phi] = □phi + phi^p as a series truncated at `order`.
FuchsianSeries residual_series(const FuchsianSeries& phi, const Chart& chart, double order);

Ansatz build_ansatz(const AnsatzConfig& cfg);

struct SlopeReport {
    double slope = 0;
    double floor = 0;   // N - 5/2
    double excess = 0;  // slope - floor
    bool exact = false;
    std::vector<double> t, norm;
};

SlopeReport ansatz_residual_slope(const AnsatzConfig& cfg, const Ansatz& a, const std::vector<double>& t_samples);

/// Slides a 3-decade window down from [1e-4, 1e-1] until consecutive slopes agree to `tol`.
SlopeReport asymptotic_residual_slope(const AnsatzConfig& cfg, const Ansatz& a, double tol = 1e-3);

/// log-spaced samples
std::vector<double> logspace(double a, double b, int n);

/// least-squares slope of log y against log x
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace nlw
