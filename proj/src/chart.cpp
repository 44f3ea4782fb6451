#include "nlw/chart.hpp"
#include "nlw/errors.hpp"

namespace nlw {

Chart Chart::standard(const Grid1D& grid) { return tilted(grid, Field::Zero(grid.n), 0.0); }

Chart Chart::tilted(const Grid1D& grid, const Field& g, double slope) {
    if (g.size() != grid.n) throw ConfigError("Chart: profile size does not match grid");
    Chart c;
    c.grid = grid;
    c.g = g;
    c.slope = slope;
    c.fp = slope + d1(g, grid.h());
    c.fpp = d2(g, grid.h());
    if ((c.fp.square() >= 1).any()) throw ConfigError("Chart: |f'| >= 1 somewhere (surface not spacelike)");
    return c;
}

bool Chart::is_standard() const { return slope == 0 && (g == 0.0).all(); }

Field Chart::f_values() const { return slope * grid.x() + g; }

} // namespace nlw
