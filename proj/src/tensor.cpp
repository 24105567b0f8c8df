#include "safegame/tensor.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace safegame {

namespace {

Index product(const std::vector<Index>& dims) {
    Index p = 1;
    for (Index d : dims) p *= d;
    return p;
}

void require_valid_mode(const DenseTensor& T, int mode, const char* who) {
    if (mode < 0 || mode >= T.order()) {
        std::ostringstream os;
        os << who << ": mode " << mode << " out of range for an order-" << T.order() << " tensor";
        throw DimensionError(os.str());
    }
}

/// Column strides of the cyclic (mode+1, ..., N, 1, ..., mode-1) ordering.
/// strides[m] is the step one increment of index m takes in the flattened
/// column; stride of the mode itself is unused.
std::vector<Index> cyclic_strides(const std::vector<Index>& dims, int mode) {
    const int N = static_cast<int>(dims.size());
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(N) - 1);
    for (int m = mode + 1; m < N; ++m) order.push_back(m);
    for (int m = 0; m < mode; ++m) order.push_back(m);
    std::vector<Index> strides(static_cast<std::size_t>(N), 0);
    Index stride = 1;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        strides[static_cast<std::size_t>(*it)] = stride;
        stride *= dims[static_cast<std::size_t>(*it)];
    }
    return strides;
}

}  // namespace

DenseTensor::DenseTensor(std::vector<Index> dims, Vector entries)
    : dims_(std::move(dims)), entries_(std::move(entries)) {
    if (dims_.empty()) throw DimensionError("DenseTensor: at least one mode required");
    for (Index d : dims_) {
        if (d <= 0) throw DimensionError("DenseTensor: all dimensions must be positive");
    }
    if (entries_.size() != product(dims_)) {
        std::ostringstream os;
        os << "DenseTensor: entry count " << entries_.size() << " does not match dims product "
           << product(dims_);
        throw DimensionError(os.str());
    }
    if (!entries_.allFinite()) throw Error("DenseTensor: entries must be finite");
}

DenseTensor DenseTensor::zeros(std::vector<Index> dims) {
    const Index n = product(dims);
    return DenseTensor(std::move(dims), Vector::Zero(n));
}

Index DenseTensor::offset(const std::vector<Index>& idx) const {
    if (idx.size() != dims_.size()) throw DimensionError("DenseTensor: index arity mismatch");
    Index off = 0;
    for (std::size_t m = 0; m < dims_.size(); ++m) {
        if (idx[m] < 0 || idx[m] >= dims_[m]) throw DimensionError("DenseTensor: index out of range");
        off = off * dims_[m] + idx[m];
    }
    return off;
}

bool DenseTensor::next_index(std::vector<Index>& idx) const {
    for (int m = static_cast<int>(dims_.size()) - 1; m >= 0; --m) {
        const auto um = static_cast<std::size_t>(m);
        if (++idx[um] < dims_[um]) return true;
        idx[um] = 0;
    }
    return false;
}

DenseTensor n_mode_product(const DenseTensor& T, const Matrix& M, int mode) {
    require_valid_mode(T, mode, "n_mode_product");
    const auto umode = static_cast<std::size_t>(mode);
    if (M.cols() != T.dims()[umode]) {
        std::ostringstream os;
        os << "n_mode_product: matrix has " << M.cols() << " columns but mode " << mode << " has extent "
           << T.dims()[umode];
        throw DimensionError(os.str());
    }
    std::vector<Index> out_dims = T.dims();
    out_dims[umode] = M.rows();
    DenseTensor out = DenseTensor::zeros(out_dims);

    // Direct summation over the contracted index; kept independent of
    // matricize so the two routes can be checked against each other.
    std::vector<Index> idx(static_cast<std::size_t>(T.order()), 0);
    std::vector<Index> out_idx = idx;
    do {
        out_idx = idx;
        const double value = T.at(idx);
        if (value == 0.0) continue;
        for (Index r = 0; r < M.rows(); ++r) {
            out_idx[umode] = r;
            out.at(out_idx) += M(r, idx[umode]) * value;
        }
    } while (T.next_index(idx));
    return out;
}

Matrix matricize(const DenseTensor& T, int mode) {
    require_valid_mode(T, mode, "matricize");
    const auto umode = static_cast<std::size_t>(mode);
    const std::vector<Index> strides = cyclic_strides(T.dims(), mode);
    const Index rows = T.dims()[umode];
    const Index cols = T.size() / rows;
    Matrix M(rows, cols);
    std::vector<Index> idx(static_cast<std::size_t>(T.order()), 0);
    do {
        Index col = 0;
        for (std::size_t m = 0; m < idx.size(); ++m) {
            if (m == umode) continue;
            col += idx[m] * strides[m];
        }
        M(idx[umode], col) = T.at(idx);
    } while (T.next_index(idx));
    return M;
}

DenseTensor dematricize(const Matrix& M, const std::vector<Index>& dims, int mode) {
    DenseTensor out = DenseTensor::zeros(dims);
    require_valid_mode(out, mode, "dematricize");
    const auto umode = static_cast<std::size_t>(mode);
    if (M.rows() != dims[umode] || M.cols() != out.size() / dims[umode]) {
        throw DimensionError("dematricize: matrix shape does not match dims/mode");
    }
    const std::vector<Index> strides = cyclic_strides(dims, mode);
    std::vector<Index> idx(dims.size(), 0);
    do {
        Index col = 0;
        for (std::size_t m = 0; m < idx.size(); ++m) {
            if (m == umode) continue;
            col += idx[m] * strides[m];
        }
        out.at(idx) = M(idx[umode], col);
    } while (out.next_index(idx));
    return out;
}

double multilinear_eval(const DenseTensor& T, const std::vector<Vector>& actions) {
    if (static_cast<int>(actions.size()) != T.order()) {
        throw DimensionError("multilinear_eval: need one vector per mode");
    }
    for (std::size_t m = 0; m < actions.size(); ++m) {
        if (actions[m].size() != T.dims()[m]) {
            throw DimensionError("multilinear_eval: action length mismatch");
        }
    }
    double total = 0.0;
    std::vector<Index> idx(actions.size(), 0);
    do {
        double w = T.at(idx);
        for (std::size_t m = 0; m < actions.size() && w != 0.0; ++m) w *= actions[m](idx[m]);
        total += w;
    } while (T.next_index(idx));
    return total;
}

Vector partial_contract(const DenseTensor& T, const std::vector<Vector>& actions, int skip_mode) {
    require_valid_mode(T, skip_mode, "partial_contract");
    if (static_cast<int>(actions.size()) != T.order() - 1) {
        throw DimensionError("partial_contract: need one vector per non-skipped mode");
    }
    const auto uskip = static_cast<std::size_t>(skip_mode);
    std::vector<const Vector*> per_mode(static_cast<std::size_t>(T.order()), nullptr);
    std::size_t a = 0;
    for (std::size_t m = 0; m < per_mode.size(); ++m) {
        if (m == uskip) continue;
        per_mode[m] = &actions[a++];
        if (per_mode[m]->size() != T.dims()[m]) {
            throw DimensionError("partial_contract: action length mismatch");
        }
    }
    Vector out = Vector::Zero(T.dims()[uskip]);
    std::vector<Index> idx(per_mode.size(), 0);
    do {
        double w = T.at(idx);
        for (std::size_t m = 0; m < per_mode.size() && w != 0.0; ++m) {
            if (m == uskip) continue;
            w *= (*per_mode[m])(idx[m]);
        }
        out(idx[uskip]) += w;
    } while (T.next_index(idx));
    return out;
}

Matrix kronecker(const Matrix& A, const Matrix& B) {
    Matrix K(A.rows() * B.rows(), A.cols() * B.cols());
    for (Index i = 0; i < A.rows(); ++i)
        for (Index j = 0; j < A.cols(); ++j) K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return K;
}

Vector vec_except_mode(const std::vector<Vector>& actions, int mode) {
    const int N = static_cast<int>(actions.size());
    if (mode < 0 || mode >= N) throw DimensionError("vec_except_mode: bad mode");
    std::vector<int> order;
    for (int m = mode + 1; m < N; ++m) order.push_back(m);
    for (int m = 0; m < mode; ++m) order.push_back(m);
    Vector v = Vector::Ones(1);
    for (int m : order) {
        const Vector& w = actions[static_cast<std::size_t>(m)];
        Vector next(v.size() * w.size());
        for (Index i = 0; i < v.size(); ++i)
            for (Index j = 0; j < w.size(); ++j) next(i * w.size() + j) = v(i) * w(j);
        v = std::move(next);
    }
    return v;
}

DenseTensor compose_tensor_svd(const TensorSVDFactors& f) {
    if (f.factors.empty()) throw DimensionError("compose_tensor_svd: no factor matrices");
    const Index L = f.rank();
    std::vector<Index> dims;
    for (const Matrix& U : f.factors) {
        if (U.cols() != L) throw DimensionError("compose_tensor_svd: factor rank mismatch");
        dims.push_back(U.rows());
    }
    DenseTensor out = DenseTensor::zeros(dims);
    std::vector<Index> idx(dims.size(), 0);
    if (L == 0) return out;
    do {
        double acc = 0.0;
        for (Index l = 0; l < L; ++l) {
            double w = f.d(l);
            for (std::size_t m = 0; m < dims.size() && w != 0.0; ++m) w *= f.factors[m](idx[m], l);
            acc += w;
        }
        out.at(idx) = acc;
    } while (out.next_index(idx));
    return out;
}

bool verify_tensor_svd(const DenseTensor& T, const TensorSVDFactors& f, double tol,
                       const ToleranceConfig& cfg) {
    if (static_cast<int>(f.factors.size()) != T.order()) {
        throw DimensionError("verify_tensor_svd: factor count does not match tensor order");
    }
    for (std::size_t m = 0; m < f.factors.size(); ++m) {
        if (f.factors[m].rows() != T.dims()[m]) {
            throw DimensionError("verify_tensor_svd: factor row count does not match tensor dims");
        }
        if (f.factors[m].cols() != f.rank()) {
            throw DimensionError("verify_tensor_svd: factor rank mismatch");
        }
    }
    for (const Matrix& U : f.factors) {
        const Matrix gram = U.transpose() * U;
        if ((gram - Matrix::Identity(U.cols(), U.cols())).norm() > cfg.scaled(1.0)) return false;
    }
    const DenseTensor rebuilt = compose_tensor_svd(f);
    return (T.entries() - rebuilt.entries()).norm() <= tol;
}

HOSVDResult hosvd(const DenseTensor& T) {
    HOSVDResult result;
    const int N = T.order();
    result.factors.resize(static_cast<std::size_t>(N));
    result.singular_values.resize(static_cast<std::size_t>(N));
    for (int n = 0; n < N; ++n) {
        const auto un = static_cast<std::size_t>(n);
        Matrix flat = matricize(T, n);
        Eigen::JacobiSVD<Matrix> svd(flat, Eigen::ComputeFullU);
        Matrix U = svd.matrixU();
        fix_column_signs(U);
        Vector sigma = Vector::Zero(T.dims()[un]);
        sigma.head(svd.singularValues().size()) = svd.singularValues();
        result.factors[un] = std::move(U);
        result.singular_values[un] = std::move(sigma);
    }
    DenseTensor core = T;
    for (int n = 0; n < N; ++n) {
        core = n_mode_product(core, result.factors[static_cast<std::size_t>(n)].transpose(), n);
    }
    result.core = std::move(core);
    return result;
}

DenseTensor hosvd_reconstruct(const HOSVDResult& r) {
    DenseTensor out = r.core;
    for (int n = 0; n < out.order(); ++n) {
        out = n_mode_product(out, r.factors[static_cast<std::size_t>(n)], n);
    }
    return out;
}

Matrix hosvd_right_factor(const HOSVDResult& r, int mode) {
    const int N = r.core.order();
    if (mode < 0 || mode >= N) throw DimensionError("hosvd_right_factor: bad mode");
    Matrix core_flat = matricize(r.core, mode);
    const Vector& sigma = r.singular_values[static_cast<std::size_t>(mode)];
    const double cutoff = 1e-14 * std::max(1.0, sigma.maxCoeff());
    Matrix normalized = Matrix::Zero(core_flat.rows(), core_flat.cols());
    for (Index i = 0; i < core_flat.rows(); ++i) {
        if (sigma(i) > cutoff) normalized.row(i) = core_flat.row(i) / sigma(i);
    }
    Matrix kron(1, 1);
    kron(0, 0) = 1.0;
    for (int m = mode + 1; m < N; ++m) kron = kronecker(kron, r.factors[static_cast<std::size_t>(m)]);
    for (int m = 0; m < mode; ++m) kron = kronecker(kron, r.factors[static_cast<std::size_t>(m)]);
    return kron * normalized.transpose();
}

SymmetricRecovery recover_symmetric_tensor_svd(const DenseTensor& T, Index rank,
                                               const ToleranceConfig& tol, bool verify) {
    tol.validate();
    const int N = T.order();
    const Index D = T.dims()[0];
    for (Index d : T.dims()) {
        if (d != D) throw DimensionError("recover_symmetric_tensor_svd: tensor modes have unequal extents");
    }
    if (rank < 0 || rank > D) throw DimensionError("recover_symmetric_tensor_svd: rank out of range");

    SymmetricRecovery out;
    out.factors.factors.assign(static_cast<std::size_t>(N), Matrix(D, rank));
    out.factors.d = Vector::Zero(rank);
    if (rank == 0) {
        for (auto& U : out.factors.factors) U = Matrix(D, 0);
        out.residual = T.norm();
        if (verify && out.residual > tol.scaled(std::max(1.0, T.norm()))) {
            throw Error("recover_symmetric_tensor_svd: nonzero tensor cannot have rank 0");
        }
        return out;
    }

    Eigen::JacobiSVD<Matrix> svd(matricize(T, 0), Eigen::ComputeFullU);
    const Vector& sv = svd.singularValues();
    const double sv_max = sv.size() > 0 ? sv(0) : 0.0;
    const double degen_tol = tol.scaled(std::max(1.0, sv_max));
    for (Index i = 0; i < rank; ++i) {
        for (Index j = i + 1; j < std::min<Index>(rank + 1, sv.size()); ++j) {
            if (std::abs(sv(i) - sv(j)) <= degen_tol) {
                std::ostringstream os;
                os << "recover_symmetric_tensor_svd: singular values " << i << " and " << j
                   << " coincide (" << sv(i) << " vs " << sv(j) << "), columns are not identifiable";
                throw DegenerateSpectrumError(os.str());
            }
        }
    }

    Matrix P = svd.matrixU().leftCols(rank);
    fix_column_signs(P);
    for (Index l = 0; l < rank; ++l) {
        std::vector<Vector> column(static_cast<std::size_t>(N), P.col(l));
        out.factors.d(l) = multilinear_eval(T, column);
    }
    for (auto& U : out.factors.factors) U = P;

    const DenseTensor rebuilt = compose_tensor_svd(out.factors);
    out.residual = (T.entries() - rebuilt.entries()).norm();
    if (verify && out.residual > tol.scaled(std::max(1.0, T.norm()))) {
        std::ostringstream os;
        os << "recover_symmetric_tensor_svd: tensor does not admit the assumed symmetric decomposition "
              "(residual "
           << out.residual << ")";
        throw Error(os.str());
    }
    return out;
}

}  // namespace safegame
