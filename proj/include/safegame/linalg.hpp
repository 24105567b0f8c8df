#pragma once

#include "safegame/common.hpp"

#include <utility>
#include <vector>

namespace safegame {

/// Orthogonal projection pi = basis * basis^T where basis has orthonormal
/// columns. Construct through make_projection so the invariants
/// pi^2 = pi and pi^T = pi are checked once, up front.
struct Projection {
    Matrix basis;  // D x k, orthonormal columns

    Index dim() const { return basis.rows(); }
    Index rank() const { return basis.cols(); }
    Matrix matrix() const { return basis * basis.transpose(); }
    Vector apply(const Vector& v) const { return basis * (basis.transpose() * v); }
};

/// Gram-Schmidt with reorthogonalization. Throws if a column is linearly
/// dependent on its predecessors, naming the first such column.
Matrix orthonormalize(const Matrix& cols, const ToleranceConfig& tol = {});

/// Validates that P has orthonormal columns (Gram residual reported on
/// failure) and wraps it as a projection.
Projection make_projection(const Matrix& P, const ToleranceConfig& tol = {});

/// True iff ||pi*tau - tau*pi||_F <= abs_tol. Commuting projections have a
/// product that is itself an orthogonal projection.
bool projections_commute(const Projection& a, const Projection& b, const ToleranceConfig& tol = {});

/// Positive semidefiniteness of a (not necessarily symmetric) square matrix,
/// decided on the symmetric part: min eig((M + M^T)/2) >= -psd_eig_tol.
bool is_psd(const Matrix& M, const ToleranceConfig& tol = {});

/// M = Ms + Ma with Ms symmetric and Ma antisymmetric, exactly.
std::pair<Matrix, Matrix> sym_antisym_split(const Matrix& M);

struct JointDiagonalization {
    Matrix basis;                    // orthogonal P
    std::vector<Vector> diagonals;   // diag(P^T A_i P), in P's column order
};

/// Joint orthogonal diagonalization of commuting symmetric matrices.
///
/// Eigendecomposes a seeded strictly-positive random combination of the
/// inputs and verifies that every matrix is diagonal in that basis; retries
/// with fresh weights up to five times. Columns are ordered by the diagonal
/// of the first matrix (descending, ties broken by later diagonals) and
/// signed so the first nonzero entry of each column is positive.
///
/// Throws NotCommutingError identifying the first non-commuting pair, or
/// Error if the inputs are not symmetric / verification keeps failing.
JointDiagonalization simultaneous_diagonalize_symmetric(const std::vector<Matrix>& mats,
                                                        const ToleranceConfig& tol = {},
                                                        std::uint64_t seed = 0x5afe6a3eULL);

/// Necessary condition for a shared-factor diagonalization of a matrix pair:
/// A^T B and A B^T symmetric within tolerance.
bool check_svd_compatibility(const Matrix& A, const Matrix& B, const ToleranceConfig& tol = {});

struct PairSVD {
    Matrix P;  // orthogonal, rows(A) x rows(A)
    Vector D;  // min(rows, cols) singular values of A, nonnegative descending
    Matrix Q;  // orthogonal, cols(A) x cols(A)
    Vector E;  // diagonal of B in the shared basis, possibly signed
};

/// Shared-factor diagonalization A = P diag(D) Q^T, B = P diag(E) Q^T.
///
/// Strategy: SVD of A; inside each degenerate singular-value block the shared
/// basis is fixed by diagonalizing B restricted to the block (a symmetric
/// eigenproblem for nonzero blocks, an SVD for the null block). Fails if the
/// restriction is not symmetric or the final reconstruction residual exceeds
/// tolerance.
PairSVD simultaneous_svd_pair(const Matrix& A, const Matrix& B, const ToleranceConfig& tol = {});

// Small shared helpers.

/// Flips column signs in place so the first entry with |x| above a scale-aware
/// threshold is positive. Returns the applied signs.
Vector fix_column_signs(Matrix& M);

/// Random orthogonal matrix from the QR of a seeded Gaussian draw, with the
/// sign convention of fix_column_signs applied.
Matrix random_orthogonal(Index n, std::uint64_t seed);

/// Frobenius-norm relative residual ||X - Y||_F / max(1, ||X||_F).
double relative_residual(const Matrix& X, const Matrix& Y);

}  // namespace safegame
