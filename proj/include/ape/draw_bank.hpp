#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace ape {

/// Common-random-number baseline draws, row-major N x dim.
///
/// Standardized banks have column means exactly zero and second-moment
/// matrix (divisor N) exactly the identity. Symmetrized banks hold draw
/// m + N/2 equal to the negation of draw m.
struct DrawBank {
    std::vector<double> data;
    std::size_t n = 0;
    std::size_t dim = 0;
    std::uint64_t seed = 0;
    bool standardized = false;
    bool symmetrized = false;

    std::span<const double> row(std::size_t m) const { return {data.data() + m * dim, dim}; }
};

DrawBank build_bank(std::uint64_t seed, std::size_t n_draws, std::size_t dim, bool standardize,
                    bool symmetrize);

/// Stratified positions in (0,1), one per draw: (pi(m) + 1/2) / N for a
/// permutation pi fixed by the bank seed. Used to place the mixing value of
/// a base-distribution null component on each draw.
std::vector<double> stratified_positions(const DrawBank& bank);

/// Flat binary cache: magic, version, seed, N, dim, flags, then row-major
/// little-endian float64 values.
void save_bank(const DrawBank& bank, const std::filesystem::path& path);
DrawBank load_bank(const std::filesystem::path& path);

/// Column means and second-moment matrix (divisor N), for diagnostics.
struct BankMoments {
    std::vector<double> mean;
    std::vector<double> second_moment;  // dim x dim, row-major, centered
};
BankMoments bank_moments(const DrawBank& bank);

}  // namespace ape
