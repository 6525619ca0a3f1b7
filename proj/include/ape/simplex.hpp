#pragma once

#include <span>
#include <vector>

namespace ape {

/// Euclidean projection onto the unit simplex {w >= 0, sum w = 1}.
/// Sort-and-threshold, ties in the sort broken by index.
std::vector<double> project_simplex(std::span<const double> v);

/// True when all entries are >= 0 and they sum to 1 within tol.
bool on_simplex(std::span<const double> w, double tol = 1e-12);

}  // namespace ape
