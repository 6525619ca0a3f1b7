#include "ape/draw_bank.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "ape/rng.hpp"

namespace ape {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Right-multiply by the inverse transposed Cholesky factor of X'X / n.
void whiten(Eigen::Ref<RowMatrix> x) {
    const double n = static_cast<double>(x.rows());
    const Eigen::MatrixXd m = (x.transpose() * x) / n;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) throw std::runtime_error("bank covariance is not positive definite");
    const Eigen::MatrixXd l = llt.matrixL();
    // X L^{-T}: solve L Z' = X'
    const Eigen::MatrixXd zt = l.triangularView<Eigen::Lower>().solve(x.transpose());
    x = zt.transpose();
}

constexpr std::uint64_t kMagic = 0x4b4e4142'45504100ull;  // "\0APEBANK"
constexpr std::uint32_t kVersion = 1;

}  // namespace

DrawBank build_bank(std::uint64_t seed, std::size_t n_draws, std::size_t dim, bool standardize,
                    bool symmetrize) {
    if (dim == 0) throw std::invalid_argument("build_bank: dim must be positive");
    if (n_draws < 2 * dim)
        throw std::invalid_argument("build_bank: need at least 2*dim draws to standardize");
    if (symmetrize && n_draws % 2 != 0)
        throw std::invalid_argument("build_bank: symmetrized bank needs an even draw count");

    DrawBank bank;
    bank.n = n_draws;
    bank.dim = dim;
    bank.seed = seed;
    bank.standardized = standardize;
    bank.symmetrized = symmetrize;
    bank.data.resize(n_draws * dim);

    NormalStream stream(seed);
    const std::size_t fresh = symmetrize ? n_draws / 2 : n_draws;
    for (std::size_t i = 0; i < fresh * dim; ++i) bank.data[i] = stream();

    Eigen::Map<RowMatrix> head(bank.data.data(), static_cast<Eigen::Index>(fresh),
                               static_cast<Eigen::Index>(dim));
    if (standardize) {
        if (!symmetrize) head.rowwise() -= head.colwise().mean();
        whiten(head);
    }
    if (symmetrize) {
        for (std::size_t i = 0; i < fresh * dim; ++i) bank.data[fresh * dim + i] = -bank.data[i];
    }
    return bank;
}

std::vector<double> stratified_positions(const DrawBank& bank) {
    std::vector<std::size_t> perm(bank.n);
    for (std::size_t i = 0; i < bank.n; ++i) perm[i] = i;
    SplitStream rng(bank.seed ^ 0x9e3779b97f4a7c15ull);
    for (std::size_t i = bank.n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    std::vector<double> u(bank.n);
    for (std::size_t m = 0; m < bank.n; ++m)
        u[m] = (static_cast<double>(perm[m]) + 0.5) / static_cast<double>(bank.n);
    return u;
}

void save_bank(const DrawBank& bank, const std::filesystem::path& path) {
    static_assert(std::endian::native == std::endian::little, "bank files are little-endian");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write bank file " + path.string());
    const std::uint64_t n = bank.n, dim = bank.dim, seed = bank.seed;
    const std::uint32_t flags = (bank.standardized ? 1u : 0u) | (bank.symmetrized ? 2u : 0u);
    out.write(reinterpret_cast<const char*>(&kMagic), 8);
    out.write(reinterpret_cast<const char*>(&kVersion), 4);
    out.write(reinterpret_cast<const char*>(&seed), 8);
    out.write(reinterpret_cast<const char*>(&n), 8);
    out.write(reinterpret_cast<const char*>(&dim), 8);
    out.write(reinterpret_cast<const char*>(&flags), 4);
    out.write(reinterpret_cast<const char*>(bank.data.data()),
              static_cast<std::streamsize>(bank.data.size() * sizeof(double)));
    if (!out) throw std::runtime_error("failed writing bank file " + path.string());
}

DrawBank load_bank(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open bank file " + path.string());
    std::uint64_t magic = 0, n = 0, dim = 0, seed = 0;
    std::uint32_t version = 0, flags = 0;
    in.read(reinterpret_cast<char*>(&magic), 8);
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&seed), 8);
    in.read(reinterpret_cast<char*>(&n), 8);
    in.read(reinterpret_cast<char*>(&dim), 8);
    in.read(reinterpret_cast<char*>(&flags), 4);
    if (!in || magic != kMagic) throw std::runtime_error("not a bank file: " + path.string());
    if (version != kVersion) throw std::runtime_error("unsupported bank file version");
    DrawBank bank;
    bank.n = n;
    bank.dim = dim;
    bank.seed = seed;
    bank.standardized = flags & 1u;
    bank.symmetrized = flags & 2u;
    bank.data.resize(n * dim);
    in.read(reinterpret_cast<char*>(bank.data.data()),
            static_cast<std::streamsize>(bank.data.size() * sizeof(double)));
    if (!in) throw std::runtime_error("truncated bank file " + path.string());
    return bank;
}

BankMoments bank_moments(const DrawBank& bank) {
    Eigen::Map<const RowMatrix> x(bank.data.data(), static_cast<Eigen::Index>(bank.n),
                                  static_cast<Eigen::Index>(bank.dim));
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const RowMatrix centered = x.rowwise() - mean;
    const RowMatrix cov = (centered.transpose() * centered) / static_cast<double>(bank.n);
    BankMoments out;
    out.mean.assign(mean.data(), mean.data() + bank.dim);
    out.second_moment.assign(cov.data(), cov.data() + bank.dim * bank.dim);
    return out;
}

}  // namespace ape
