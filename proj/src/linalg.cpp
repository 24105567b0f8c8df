#include "safegame/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace safegame {

namespace {

void require_square(const Matrix& M, const char* who) {
    if (M.rows() != M.cols()) {
        std::ostringstream os;
        os << who << ": expected a square matrix, got " << M.rows() << "x" << M.cols();
        throw DimensionError(os.str());
    }
}

}  // namespace

Matrix orthonormalize(const Matrix& cols, const ToleranceConfig& tol) {
    tol.validate();
    const Index n = cols.rows();
    const Index k = cols.cols();
    if (k > n) {
        throw DimensionError("orthonormalize: more columns than rows, columns cannot be independent");
    }
    Matrix Q(n, k);
    for (Index j = 0; j < k; ++j) {
        Vector v = cols.col(j);
        const double original_norm = v.norm();
        // two Gram-Schmidt passes for numerical orthogonality
        for (int pass = 0; pass < 2; ++pass) {
            for (Index i = 0; i < j; ++i) {
                v -= Q.col(i).dot(v) * Q.col(i);
            }
        }
        const double remaining = v.norm();
        if (remaining <= tol.scaled(original_norm)) {
            std::ostringstream os;
            os << "orthonormalize: column " << j << " is linearly dependent on columns 0.." << (j - 1)
               << " (residual norm " << remaining << ")";
            throw Error(os.str());
        }
        Q.col(j) = v / remaining;
    }
    return Q;
}

Projection make_projection(const Matrix& P, const ToleranceConfig& tol) {
    tol.validate();
    const Matrix gram = P.transpose() * P;
    const Matrix eye = Matrix::Identity(P.cols(), P.cols());
    const double residual = (gram - eye).norm();
    if (residual > tol.scaled(1.0)) {
        std::ostringstream os;
        os << "make_projection: columns are not orthonormal, Gram residual ||P^T P - I||_F = " << residual;
        throw Error(os.str());
    }
    return Projection{P};
}

bool projections_commute(const Projection& a, const Projection& b, const ToleranceConfig& tol) {
    tol.validate();
    if (a.dim() != b.dim()) {
        throw DimensionError("projections_commute: projections act on spaces of different dimension");
    }
    const Matrix pa = a.matrix();
    const Matrix pb = b.matrix();
    return (pa * pb - pb * pa).norm() <= tol.abs_tol;
}

bool is_psd(const Matrix& M, const ToleranceConfig& tol) {
    tol.validate();
    require_square(M, "is_psd");
    const Matrix sym = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -tol.psd_eig_tol;
}

std::pair<Matrix, Matrix> sym_antisym_split(const Matrix& M) {
    require_square(M, "sym_antisym_split");
    Matrix sym = 0.5 * (M + M.transpose());
    Matrix anti = 0.5 * (M - M.transpose());
    return {std::move(sym), std::move(anti)};
}

Vector fix_column_signs(Matrix& M) {
    Vector signs = Vector::Ones(M.cols());
    for (Index j = 0; j < M.cols(); ++j) {
        const double scale = M.col(j).cwiseAbs().maxCoeff();
        if (scale == 0.0) continue;
        for (Index i = 0; i < M.rows(); ++i) {
            if (std::abs(M(i, j)) > 1e-12 * scale) {
                if (M(i, j) < 0.0) {
                    M.col(j) *= -1.0;
                    signs(j) = -1.0;
                }
                break;
            }
        }
    }
    return signs;
}

Matrix random_orthogonal(Index n, std::uint64_t seed) {
    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix G(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) G(i, j) = gauss(rng);
    Eigen::HouseholderQR<Matrix> qr(G);
    Matrix Q = qr.householderQ() * Matrix::Identity(n, n);
    fix_column_signs(Q);
    return Q;
}

double relative_residual(const Matrix& X, const Matrix& Y) {
    return (X - Y).norm() / std::max(1.0, X.norm());
}

JointDiagonalization simultaneous_diagonalize_symmetric(const std::vector<Matrix>& mats,
                                                        const ToleranceConfig& tol,
                                                        std::uint64_t seed) {
    tol.validate();
    if (mats.empty()) throw Error("simultaneous_diagonalize_symmetric: empty input");
    const Index n = mats.front().rows();
    for (std::size_t i = 0; i < mats.size(); ++i) {
        require_square(mats[i], "simultaneous_diagonalize_symmetric");
        if (mats[i].rows() != n) {
            throw DimensionError("simultaneous_diagonalize_symmetric: matrices differ in dimension");
        }
        const double asym = (mats[i] - mats[i].transpose()).norm();
        if (asym > tol.scaled(mats[i].norm())) {
            std::ostringstream os;
            os << "simultaneous_diagonalize_symmetric: matrix " << i << " is not symmetric (residual " << asym
               << ")";
            throw Error(os.str());
        }
    }
    for (std::size_t i = 0; i < mats.size(); ++i) {
        for (std::size_t j = i + 1; j < mats.size(); ++j) {
            const double comm = (mats[i] * mats[j] - mats[j] * mats[i]).norm();
            const double limit = tol.scaled(mats[i].norm() * mats[j].norm());
            if (comm > limit) {
                std::ostringstream os;
                os << "simultaneous_diagonalize_symmetric: matrices " << i << " and " << j
                   << " do not commute (||[A_i,A_j]||_F = " << comm << " > " << limit << ")";
                throw NotCommutingError(os.str(), static_cast<int>(i), static_cast<int>(j));
            }
        }
    }

    auto diagonal_in_basis = [&](const Matrix& P) {
        for (const Matrix& A : mats) {
            Matrix rotated = P.transpose() * A * P;
            rotated.diagonal().setZero();
            if (rotated.norm() > tol.scaled(A.norm())) return false;
        }
        return true;
    };

    Matrix P;
    bool found = false;
    for (int attempt = 0; attempt < 5 && !found; ++attempt) {
        auto rng = make_rng(seed, static_cast<std::uint64_t>(attempt));
        std::uniform_real_distribution<double> weight(0.5, 1.5);
        Matrix combo = Matrix::Zero(n, n);
        for (const Matrix& A : mats) combo += weight(rng) * A;
        combo = 0.5 * (combo + combo.transpose());
        Eigen::SelfAdjointEigenSolver<Matrix> es(combo);
        if (es.info() != Eigen::Success) continue;
        P = es.eigenvectors();
        found = diagonal_in_basis(P);
    }
    if (!found) {
        throw Error("simultaneous_diagonalize_symmetric: no shared eigenbasis found within tolerance after 5 "
                    "weighted attempts");
    }

    // Deterministic ordering: sort columns by the diagonals, first matrix
    // dominant, descending; then fix signs.
    std::vector<Vector> diags(mats.size());
    for (std::size_t i = 0; i < mats.size(); ++i) diags[i] = (P.transpose() * mats[i] * P).diagonal();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        for (const Vector& d : diags) {
            if (std::abs(d(a) - d(b)) > 1e-12 * (1.0 + std::abs(d(a)) + std::abs(d(b)))) return d(a) > d(b);
        }
        return false;
    });
    Matrix sorted(n, n);
    for (Index j = 0; j < n; ++j) sorted.col(j) = P.col(order[static_cast<std::size_t>(j)]);
    fix_column_signs(sorted);

    JointDiagonalization result;
    result.basis = std::move(sorted);
    result.diagonals.resize(mats.size());
    for (std::size_t i = 0; i < mats.size(); ++i) {
        result.diagonals[i] = (result.basis.transpose() * mats[i] * result.basis).diagonal();
    }
    return result;
}

bool check_svd_compatibility(const Matrix& A, const Matrix& B, const ToleranceConfig& tol) {
    tol.validate();
    if (A.rows() != B.rows() || A.cols() != B.cols()) {
        throw DimensionError("check_svd_compatibility: shape mismatch");
    }
    const Matrix left = A.transpose() * B;
    const Matrix right = A * B.transpose();
    const bool left_ok = (left - left.transpose()).norm() <= tol.scaled(left.norm());
    const bool right_ok = (right - right.transpose()).norm() <= tol.scaled(right.norm());
    return left_ok && right_ok;
}

PairSVD simultaneous_svd_pair(const Matrix& A, const Matrix& B, const ToleranceConfig& tol) {
    tol.validate();
    if (A.rows() != B.rows() || A.cols() != B.cols()) {
        throw DimensionError("simultaneous_svd_pair: shape mismatch");
    }
    if (!check_svd_compatibility(A, B, tol)) {
        throw Error("simultaneous_svd_pair: A^T B or A B^T is not symmetric, no shared factorization exists");
    }
    const Index m = A.rows();
    const Index n = A.cols();
    const Index k = std::min(m, n);

    Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Matrix P = svd.matrixU();
    Matrix Q = svd.matrixV();
    Vector D = Vector::Zero(k);
    D.head(svd.singularValues().size()) = svd.singularValues();

    const double sigma_scale = (k > 0) ? std::max(D.maxCoeff(), 1.0) : 1.0;
    const double zero_cut = tol.scaled(sigma_scale);

    Matrix M = P.transpose() * B * Q;  // m x n
    Vector E = Vector::Zero(k);

    // Group the positive singular values into near-degenerate blocks.
    Index start = 0;
    while (start < k && D(start) > zero_cut) {
        Index stop = start + 1;
        while (stop < k && D(stop) > zero_cut && D(stop - 1) - D(stop) <= zero_cut) ++stop;
        const Index len = stop - start;
        Matrix Mb = M.block(start, start, len, len);
        const double asym = (Mb - Mb.transpose()).norm();
        if (asym > tol.scaled(std::max(1.0, B.norm()))) {
            std::ostringstream os;
            os << "simultaneous_svd_pair: B restricted to the degenerate singular block [" << start << ","
               << stop << ") of A is not symmetric (residual " << asym
               << "); shared subspaces cannot be aligned";
            throw DegenerateSpectrumError(os.str());
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (Mb + Mb.transpose()));
        // descending within the block for determinism
        Matrix O(len, len);
        Vector evals(len);
        for (Index j = 0; j < len; ++j) {
            O.col(j) = es.eigenvectors().col(len - 1 - j);
            evals(j) = es.eigenvalues()(len - 1 - j);
        }
        P.middleCols(start, len) = P.middleCols(start, len) * O;
        Q.middleCols(start, len) = Q.middleCols(start, len) * O;
        E.segment(start, len) = evals;
        start = stop;
    }

    // Null block of A: left and right bases are independent, so an SVD of the
    // restriction of B aligns them.
    const Index zero_begin = start;
    const Index zp = m - zero_begin;  // trailing P columns
    const Index zq = n - zero_begin;  // trailing Q columns
    if (zp > 0 && zq > 0) {
        Matrix Mz = M.block(zero_begin, zero_begin, zp, zq);
        Eigen::JacobiSVD<Matrix> zsvd(Mz, Eigen::ComputeFullU | Eigen::ComputeFullV);
        P.rightCols(zp) = P.rightCols(zp) * zsvd.matrixU();
        Q.rightCols(zq) = Q.rightCols(zq) * zsvd.matrixV();
        const Index zk = std::min(zp, zq);
        for (Index j = 0; j < zk && zero_begin + j < k; ++j) E(zero_begin + j) = zsvd.singularValues()(j);
    }

    // Paired sign convention: flipping a P column together with its Q partner
    // leaves both reconstructions unchanged.
    for (Index j = 0; j < k; ++j) {
        const double scale = P.col(j).cwiseAbs().maxCoeff();
        if (scale == 0.0) continue;
        for (Index i = 0; i < m; ++i) {
            if (std::abs(P(i, j)) > 1e-12 * scale) {
                if (P(i, j) < 0.0) {
                    P.col(j) *= -1.0;
                    Q.col(j) *= -1.0;
                }
                break;
            }
        }
    }

    Matrix Dm = Matrix::Zero(m, n);
    Matrix Em = Matrix::Zero(m, n);
    for (Index j = 0; j < k; ++j) {
        Dm(j, j) = D(j);
        Em(j, j) = E(j);
    }
    const double res_a = (A - P * Dm * Q.transpose()).norm();
    const double res_b = (B - P * Em * Q.transpose()).norm();
    if (res_a > tol.scaled(std::max(1.0, A.norm())) || res_b > tol.scaled(std::max(1.0, B.norm()))) {
        std::ostringstream os;
        os << "simultaneous_svd_pair: reconstruction failed (residuals " << res_a << ", " << res_b << ")";
        throw Error(os.str());
    }
    return PairSVD{std::move(P), std::move(D), std::move(Q), std::move(E)};
}

}  // namespace safegame
