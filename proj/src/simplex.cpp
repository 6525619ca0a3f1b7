#include "ape/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ape {

std::vector<double> project_simplex(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("project_simplex: empty input");
    for (double x : v)
        if (!std::isfinite(x)) throw std::invalid_argument("project_simplex: non-finite input");

    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });

    double cumsum = 0.0;
    double theta = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        cumsum += v[order[k]];
        const double t = (cumsum - 1.0) / static_cast<double>(k + 1);
        if (v[order[k]] - t > 0.0) theta = t;
    }
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = std::max(v[i] - theta, 0.0);

    // Remove rounding drift so the output sums to one.
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= total;
    return w;
}

bool on_simplex(std::span<const double> w, double tol) {
    double total = 0.0;
    for (double x : w) {
        if (!(x >= 0.0)) return false;
        total += x;
    }
    return std::abs(total - 1.0) <= tol;
}

}  // namespace ape
