#pragma once

#include "nlw/grid.hpp"

#include <string>

namespace nlw {

/// Evaluate a profile expression on the grid.
/// Grammar: sums/differences of terms; a term is [number '*'] atom or a bare number;
/// atoms: x-free constants, sin(k*x), cos(k*x) (k defaults to 1, x may be shifted:
/// sin(k*x + phase)), gauss(center, width) periodized on the grid length, and `pi`.
/// "csv:<path>" reads one value per line (or the last column of comma-separated rows).
Field eval_profile(const std::string& spec, const Grid1D& grid);

} // namespace nlw
