#include "ape/problems/clr.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

// Boost 1.74 pchip calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>

#include "ape/problems/linear_iv.hpp"
#include "ape/rng.hpp"

namespace ape {

struct ClrCriticalValues::Impl {
    boost::math::interpolators::pchip<std::vector<double>> spline;
    mutable std::atomic<std::size_t> clamped{0};
    mutable std::atomic<bool> warned{false};

    Impl(std::vector<double> x, std::vector<double> y) : spline(std::move(x), std::move(y)) {}
};

ClrCriticalValues::ClrCriticalValues(int k, double alpha, std::size_t n_draws, std::uint64_t seed,
                                     std::vector<double> grid, std::vector<double> values)
    : k_(k), alpha_(alpha), n_draws_(n_draws), seed_(seed), grid_(std::move(grid)),
      values_(std::move(values)) {
    if (grid_.size() < 4 || grid_.size() != values_.size())
        throw std::invalid_argument("CLR table needs at least four nodes with matching values");
    for (std::size_t i = 1; i < grid_.size(); ++i)
        if (!(grid_[i] > grid_[i - 1])) throw std::invalid_argument("CLR grid must be increasing");
    std::vector<double> x(grid_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i) x[i] = std::log(grid_[i]);
    impl_ = std::make_shared<Impl>(std::move(x), values_);
}

double ClrCriticalValues::operator()(double q_t) const {
    if (q_t <= grid_.front() || q_t >= grid_.back()) {
        if (q_t < grid_.front() || q_t > grid_.back()) {
            impl_->clamped.fetch_add(1, std::memory_order_relaxed);
            if (!impl_->warned.exchange(true))
                std::cerr << "warning: Q_T = " << q_t << " outside the CLR table range; clamping\n";
        }
        return q_t <= grid_.front() ? values_.front() : values_.back();
    }
    return impl_->spline(std::log(q_t));
}

std::size_t ClrCriticalValues::clamped_count() const { return impl_->clamped.load(); }

std::vector<double> log_spaced_grid(double lo, double hi, std::size_t n_nodes) {
    if (!(lo > 0.0 && hi > lo) || n_nodes < 2) throw std::invalid_argument("log_spaced_grid: bad range");
    std::vector<double> g(n_nodes);
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < n_nodes; ++i)
        g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n_nodes - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

ClrTablePtr clr_critical_values(int k, double alpha, std::size_t n_draws,
                                const std::vector<double>& qt_grid, std::uint64_t seed) {
    if (k < 1 || n_draws < 100) throw std::invalid_argument("clr_critical_values: bad arguments");
    std::vector<double> s1(n_draws), rest(n_draws);
    NormalStream normal(seed);
    for (std::size_t m = 0; m < n_draws; ++m) {
        s1[m] = normal();
        double r = 0.0;
        for (int j = 1; j < k; ++j) {
            const double z = normal();
            r += z * z;
        }
        rest[m] = r;
    }
    // Smallest LR value with at most floor(alpha * n) draws strictly above it.
    const auto rank = static_cast<std::size_t>(std::ceil((1.0 - alpha) * static_cast<double>(n_draws))) - 1;
    std::vector<double> lr(n_draws);
    std::vector<double> values(qt_grid.size());
    for (std::size_t g = 0; g < qt_grid.size(); ++g) {
        const double qt = qt_grid[g];
        const double root = std::sqrt(qt);
        for (std::size_t m = 0; m < n_draws; ++m) {
            const double q[3] = {s1[m] * s1[m] + rest[m], root * s1[m], qt};
            lr[m] = clr_statistic(q);
        }
        std::nth_element(lr.begin(), lr.begin() + static_cast<std::ptrdiff_t>(rank), lr.end());
        values[g] = lr[rank];
    }
    return std::make_shared<ClrCriticalValues>(k, alpha, n_draws, seed, qt_grid, std::move(values));
}

namespace {

constexpr char kClrMagic[8] = {'A', 'P', 'E', 'C', 'L', 'R', '0', '1'};

std::uint64_t grid_hash(const std::vector<double>& grid) {
    std::uint64_t h = 1469598103934665603ull;
    for (double x : grid) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, 8);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
    }
    return h;
}

}  // namespace

void save_clr_table(const ClrCriticalValues& t, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write CLR table " + path.string());
    const std::int32_t k = t.k();
    const double alpha = t.alpha();
    const std::uint64_t n = t.n_draws(), seed = t.seed(), nodes = t.grid().size();
    out.write(kClrMagic, 8);
    out.write(reinterpret_cast<const char*>(&k), 4);
    out.write(reinterpret_cast<const char*>(&alpha), 8);
    out.write(reinterpret_cast<const char*>(&n), 8);
    out.write(reinterpret_cast<const char*>(&seed), 8);
    out.write(reinterpret_cast<const char*>(&nodes), 8);
    out.write(reinterpret_cast<const char*>(t.grid().data()), static_cast<std::streamsize>(8 * nodes));
    out.write(reinterpret_cast<const char*>(t.values().data()), static_cast<std::streamsize>(8 * nodes));
}

std::optional<ClrTablePtr> load_clr_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    char magic[8];
    std::int32_t k = 0;
    double alpha = 0;
    std::uint64_t n = 0, seed = 0, nodes = 0;
    in.read(magic, 8);
    in.read(reinterpret_cast<char*>(&k), 4);
    in.read(reinterpret_cast<char*>(&alpha), 8);
    in.read(reinterpret_cast<char*>(&n), 8);
    in.read(reinterpret_cast<char*>(&seed), 8);
    in.read(reinterpret_cast<char*>(&nodes), 8);
    if (!in || std::memcmp(magic, kClrMagic, 8) != 0 || nodes > 1'000'000) return std::nullopt;
    std::vector<double> grid(nodes), values(nodes);
    in.read(reinterpret_cast<char*>(grid.data()), static_cast<std::streamsize>(8 * nodes));
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(8 * nodes));
    if (!in) return std::nullopt;
    return std::make_shared<ClrCriticalValues>(k, alpha, n, seed, std::move(grid), std::move(values));
}

ClrTablePtr cached_clr_critical_values(int k, double alpha, std::size_t n_draws,
                                       const std::vector<double>& qt_grid, std::uint64_t seed,
                                       const std::optional<std::filesystem::path>& cache_dir) {
    if (!cache_dir) return clr_critical_values(k, alpha, n_draws, qt_grid, seed);
    std::ostringstream name;
    name << "clr_k" << k << "_a" << alpha << "_n" << n_draws << "_s" << seed << "_g" << std::hex
         << grid_hash(qt_grid) << ".bin";
    const auto path = *cache_dir / name.str();
    if (auto cached = load_clr_table(path)) {
        const auto& t = **cached;
        if (t.k() == k && t.alpha() == alpha && t.n_draws() == n_draws && t.seed() == seed &&
            t.grid() == qt_grid)
            return *cached;
    }
    auto table = clr_critical_values(k, alpha, n_draws, qt_grid, seed);
    std::filesystem::create_directories(*cache_dir);
    save_clr_table(*table, path);
    return table;
}

TestPtr make_clr_test(ClrTablePtr table) {
    return std::make_shared<LambdaTest>("clr", [table](std::span<const double> q) {
        return clr_statistic(q) > (*table)(q[2]) ? 1.0 : 0.0;
    });
}

}  // namespace ape
