#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "ape/problem.hpp"

namespace ape {

/// Conditional 1-alpha quantiles of the LR statistic given Q_T = q_T under
/// H0, tabulated on a log-spaced q_T grid and interpolated with PCHIP in
/// log q_T. Values outside the grid are clamped to the end nodes.
class ClrCriticalValues {
public:
    ClrCriticalValues(int k, double alpha, std::size_t n_draws, std::uint64_t seed,
                      std::vector<double> grid, std::vector<double> values);

    double operator()(double q_t) const;

    int k() const { return k_; }
    double alpha() const { return alpha_; }
    std::size_t n_draws() const { return n_draws_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    /// Number of lookups that fell outside the grid and were clamped.
    std::size_t clamped_count() const;

private:
    struct Impl;
    int k_;
    double alpha_;
    std::size_t n_draws_;
    std::uint64_t seed_;
    std::vector<double> grid_;
    std::vector<double> values_;
    std::shared_ptr<Impl> impl_;
};

using ClrTablePtr = std::shared_ptr<const ClrCriticalValues>;

/// n_nodes log-spaced values on [lo, hi].
std::vector<double> log_spaced_grid(double lo, double hi, std::size_t n_nodes);

/// Simulates the conditional null law with T = (sqrt(q_T), 0, ..., 0) and
/// S ~ N(0, I_k): Q_S = S_1^2 + chi^2_{k-1}, Q_ST = sqrt(q_T) S_1. The same
/// n_draws draws are reused at every grid node.
ClrTablePtr clr_critical_values(int k, double alpha, std::size_t n_draws,
                                const std::vector<double>& qt_grid, std::uint64_t seed = 20240601);

/// Loads the table from cache_dir when a file with matching
/// (k, alpha, n_draws, seed, grid) exists, otherwise builds and stores it.
ClrTablePtr cached_clr_critical_values(int k, double alpha, std::size_t n_draws,
                                       const std::vector<double>& qt_grid, std::uint64_t seed,
                                       const std::optional<std::filesystem::path>& cache_dir);

void save_clr_table(const ClrCriticalValues& table, const std::filesystem::path& path);
std::optional<ClrTablePtr> load_clr_table(const std::filesystem::path& path);

/// 1 iff LR > cv(Q_T).
TestPtr make_clr_test(ClrTablePtr table);

}  // namespace ape
