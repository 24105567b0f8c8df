#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace safegame {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Tolerances used by every verification routine. The absolute tolerance
/// guards quantities of order one, the relative tolerance scales with the
/// Frobenius norm of the inputs, and psd_eig_tol bounds how negative the
/// smallest eigenvalue of a "positive semidefinite" matrix may be.
struct ToleranceConfig {
    double abs_tol = 1e-9;
    double rel_tol = 1e-6;
    double psd_eig_tol = 1e-9;

    void validate() const {
        if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || !(psd_eig_tol > 0.0)) {
            throw std::invalid_argument("ToleranceConfig: all tolerances must be strictly positive");
        }
    }

    /// Scale-aware tolerance: max(abs_tol, rel_tol * scale).
    double scaled(double scale) const { return std::max(abs_tol, rel_tol * scale); }
};

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
  public:
    using Error::Error;
};

/// Raised when a family of symmetric matrices fails the pairwise
/// commutation test; carries the offending pair.
class NotCommutingError : public Error {
  public:
    NotCommutingError(std::string msg, int first, int second)
        : Error(std::move(msg)), first_index(first), second_index(second) {}
    int first_index;
    int second_index;
};

/// Raised when a decomposition cannot be resolved because singular values
/// (or diagonal magnitudes) coincide within tolerance.
class DegenerateSpectrumError : public Error {
  public:
    using Error::Error;
};

class DomainError : public Error {
  public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Deterministic RNG streams.
//
// Every randomized routine takes an explicit 64-bit seed. Sub-streams are
// derived with a splitmix64 mix so that per-sample generators are independent
// of evaluation order (parallel and serial runs see identical streams).
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(master ^ splitmix64(stream + 0x517cc1b727220a95ULL));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline std::mt19937_64 make_rng(std::uint64_t master, std::uint64_t stream) {
    return std::mt19937_64(derive_seed(master, stream));
}

}  // namespace safegame
