#pragma once

#include "nlw/grid.hpp"

#include <memory>

namespace nlw {

/// Tilted chart bold-t = t - f(x), y = x with f(y) = slope*y + g(y), g periodic.
/// slope = 0, g = 0 is the standard chart. Only f' and f'' enter the equations.
struct Chart {
    Grid1D grid;
    Field g;
    double slope = 0;
    Field fp;   // f'
    Field fpp;  // f''

    static Chart standard(const Grid1D& grid);
    static Chart tilted(const Grid1D& grid, const Field& g, double slope = 0);

    bool is_standard() const;
    Field f_values() const;
    Field weight() const { return 1.0 - fp.square(); }  // 1 - f'^2
    double max_slope() const { return fp.abs().maxCoeff(); }
};

using ChartPtr = std::shared_ptr<const Chart>;

} // namespace nlw
