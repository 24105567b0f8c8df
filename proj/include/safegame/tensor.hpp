#pragma once

#include "safegame/linalg.hpp"

#include <initializer_list>
#include <vector>

namespace safegame {

/// Dense order-N tensor, stored row-major with the last index fastest.
class DenseTensor {
  public:
    DenseTensor() = default;
    DenseTensor(std::vector<Index> dims, Vector entries);
    static DenseTensor zeros(std::vector<Index> dims);

    int order() const { return static_cast<int>(dims_.size()); }
    const std::vector<Index>& dims() const { return dims_; }
    Index dim(int mode) const { return dims_.at(static_cast<std::size_t>(mode)); }
    Index size() const { return entries_.size(); }

    const Vector& entries() const { return entries_; }
    Vector& entries() { return entries_; }

    Index offset(const std::vector<Index>& idx) const;
    double at(const std::vector<Index>& idx) const { return entries_(offset(idx)); }
    double& at(const std::vector<Index>& idx) { return entries_(offset(idx)); }

    double norm() const { return entries_.norm(); }

    /// Advances a multi-index in row-major order (last index fastest).
    /// Returns false once the index wraps around to all zeros.
    bool next_index(std::vector<Index>& idx) const;

  private:
    std::vector<Index> dims_;
    Vector entries_;
};

/// Mode-n product: contracts index `mode` of T against the columns of M.
/// The result replaces dimension D_mode by M.rows().
DenseTensor n_mode_product(const DenseTensor& T, const Matrix& M, int mode);

/// Flattens T along `mode` into a D_mode x (prod of the other dims) matrix.
/// Columns are ordered cyclically over the remaining modes
/// (mode+1, ..., N, 1, ..., mode-1) with the first of these varying slowest.
Matrix matricize(const DenseTensor& T, int mode);

/// Inverse of matricize for the given dims and mode.
DenseTensor dematricize(const Matrix& M, const std::vector<Index>& dims, int mode);

/// Full contraction of T against one vector per mode.
double multilinear_eval(const DenseTensor& T, const std::vector<Vector>& actions);

/// Contracts every mode except `skip_mode`; `actions` hold the N-1 remaining
/// vectors in mode order. Satisfies <result, w_skip> = multilinear_eval.
Vector partial_contract(const DenseTensor& T, const std::vector<Vector>& actions, int skip_mode);

/// Kronecker product with the first factor's index varying slowest.
Matrix kronecker(const Matrix& A, const Matrix& B);

/// vec(w_except_mode): the Kronecker stack of all action vectors except the
/// one for `mode`, ordered cyclically (mode+1, ..., N, 1, ..., mode-1) to
/// match the matricize column indexing.
Vector vec_except_mode(const std::vector<Vector>& actions, int mode);

/// Rank-L orthogonal tensor decomposition T = sum_l d_l u_l^1 x ... x u_l^N.
struct TensorSVDFactors {
    std::vector<Matrix> factors;  // U^n, D_n x L with orthonormal columns
    Vector d;                     // L diagonal values, possibly signed

    Index rank() const { return d.size(); }
};

DenseTensor compose_tensor_svd(const TensorSVDFactors& f);
bool verify_tensor_svd(const DenseTensor& T, const TensorSVDFactors& f, double tol,
                       const ToleranceConfig& cfg = {});

struct HOSVDResult {
    DenseTensor core;                       // all-orthogonal, norm-ordered
    std::vector<Matrix> factors;            // square orthogonal U^n
    std::vector<Vector> singular_values;    // n-mode singular values per mode
};

/// Higher-order SVD: U^n are the left singular vectors of matricize(T, n)
/// (first-nonzero-positive sign convention) and the core is T contracted
/// against the transposed factors. Always exists.
HOSVDResult hosvd(const DenseTensor& T);

/// Reconstructs core x_1 U^1 ... x_N U^N.
DenseTensor hosvd_reconstruct(const HOSVDResult& r);

/// Right singular factor V^n of matricize(T, n) implied by the HOSVD:
/// V^n = (U^{n+1} kron ... kron U^N kron U^1 kron ... kron U^{n-1}) *
///       tilde(S)_(n)^T with the core's mode-n rows rescaled to unit length.
Matrix hosvd_right_factor(const HOSVDResult& r, int mode);

struct SymmetricRecovery {
    TensorSVDFactors factors;  // identical factor matrix in every mode
    double residual = 0.0;     // ||T - compose||_F
};

/// Recovers a symmetric tensor-SVD with a shared factor matrix P in every
/// mode (the cumulant-tensor case): SVD of the mode-1 matricization yields
/// the columns and |d|; signs come from the core evaluation. Refuses
/// spectra whose |d| values collide within tolerance. When `verify` is set,
/// throws if the reconstruction residual exceeds tol.scaled(||T||).
SymmetricRecovery recover_symmetric_tensor_svd(const DenseTensor& T, Index rank,
                                               const ToleranceConfig& tol = {}, bool verify = true);

}  // namespace safegame
