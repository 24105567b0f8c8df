#include "safegame/second_order.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace safegame {

// --- ConvexPotential -----------------------------------------------------------

ConvexPotential ConvexPotential::quadratic(Matrix Q, const ToleranceConfig& tol) {
    if (Q.rows() != Q.cols()) throw DimensionError("ConvexPotential: Q must be square");
    Q = 0.5 * (Q + Q.transpose().eval());
    Eigen::SelfAdjointEigenSolver<Matrix> es(Q, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= tol.psd_eig_tol) {
        throw Error("ConvexPotential: Q must be positive definite");
    }
    ConvexPotential psi;
    psi.kind = Kind::QuadraticForm;
    psi.dim = Q.rows();
    psi.Q = std::move(Q);
    return psi;
}

ConvexPotential ConvexPotential::neg_entropy(Index dim) {
    if (dim <= 0) throw DimensionError("ConvexPotential: dimension must be positive");
    ConvexPotential psi;
    psi.kind = Kind::NegEntropy;
    psi.dim = dim;
    return psi;
}

namespace {

void require_positive(const Vector& w, const char* who) {
    if ((w.array() <= 0.0).any()) {
        throw DomainError(std::string(who) + ": negative-entropy domain requires strictly positive coordinates");
    }
}

}  // namespace

double ConvexPotential::value(const Vector& w) const {
    if (w.size() != dim) throw DimensionError("ConvexPotential: dimension mismatch");
    if (kind == Kind::QuadraticForm) return 0.5 * w.dot(Q * w);
    require_positive(w, "ConvexPotential::value");
    return (w.array() * w.array().log()).sum();
}

Vector ConvexPotential::grad(const Vector& w) const {
    if (w.size() != dim) throw DimensionError("ConvexPotential: dimension mismatch");
    if (kind == Kind::QuadraticForm) return Q * w;
    require_positive(w, "ConvexPotential::grad");
    return (1.0 + w.array().log()).matrix();
}

Matrix ConvexPotential::hess(const Vector& w) const {
    if (w.size() != dim) throw DimensionError("ConvexPotential: dimension mismatch");
    if (kind == Kind::QuadraticForm) return Q;
    require_positive(w, "ConvexPotential::hess");
    return w.cwiseInverse().asDiagonal();
}

// --- Legendre ---------------------------------------------------------------------

LegendrePair legendre(const ConvexPotential& psi) { return LegendrePair{psi}; }

Vector LegendrePair::to_dual(const Vector& w) const { return psi.grad(w); }

Vector LegendrePair::to_primal(const Vector& theta) const {
    if (theta.size() != psi.dim) throw DimensionError("LegendrePair: dimension mismatch");
    if (psi.kind == ConvexPotential::Kind::QuadraticForm) {
        return psi.Q.ldlt().solve(theta);
    }
    // shift-invariant on the simplex; normalized exponentials invert the map
    const Vector shifted = theta.array() - theta.maxCoeff();
    Vector w = shifted.array().exp();
    w /= w.sum();
    return w;
}

double LegendrePair::dual_value(const Vector& theta) const {
    if (theta.size() != psi.dim) throw DimensionError("LegendrePair: dimension mismatch");
    if (psi.kind == ConvexPotential::Kind::QuadraticForm) {
        return 0.5 * theta.dot(psi.Q.ldlt().solve(theta));
    }
    return (theta.array() - 1.0).exp().sum();
}

Matrix LegendrePair::dual_hess(const Vector& theta) const {
    if (theta.size() != psi.dim) throw DimensionError("LegendrePair: dimension mismatch");
    if (psi.kind == ConvexPotential::Kind::QuadraticForm) {
        return psi.Q.ldlt().solve(Matrix::Identity(psi.dim, psi.dim));
    }
    return Matrix((theta.array() - 1.0).exp().matrix().asDiagonal());
}

double LegendrePair::duality_residual(const Vector& w) const {
    const Vector theta = to_dual(w);
    return std::abs(psi.value(w) + dual_value(theta) - w.dot(theta));
}

double bregman(const ConvexPotential& psi, const Vector& v, const Vector& w) {
    if (psi.kind == ConvexPotential::Kind::NegEntropy) {
        require_positive(v, "bregman");
        require_positive(w, "bregman");
    }
    return psi.value(v) - psi.value(w) - psi.grad(w).dot(v - w);
}

// --- Loss Hessians -------------------------------------------------------------------

Matrix hessian(const LossSpec& loss, const Vector& w) {
    return std::visit(
        [&](const auto& l) -> Matrix {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, QuadraticLoss>) {
                (void)w;
                return l.A;
            } else if constexpr (std::is_same_v<L, BilinearLoss>) {
                const Index D = w.size();
                Matrix H = Matrix::Zero(D, D);
                H.block(0, l.left_dim, l.left_dim, D - l.left_dim) = l.A;
                H.block(l.left_dim, 0, D - l.left_dim, l.left_dim) = l.A.transpose();
                return H;
            } else if constexpr (std::is_same_v<L, MultilinearLoss>) {
                // Linear in each block, so diagonal blocks vanish; the cross
                // block (m, n) contracts every other mode.
                const DenseTensor& T = l.tensor;
                const int order = T.order();
                std::vector<Vector> blocks;
                std::vector<Index> offsets;
                Index off = 0;
                for (Index d : T.dims()) {
                    blocks.push_back(w.segment(off, d));
                    offsets.push_back(off);
                    off += d;
                }
                if (off != w.size()) throw DimensionError("hessian: action does not match tensor dims");
                Matrix H = Matrix::Zero(w.size(), w.size());
                for (int m = 0; m < order; ++m) {
                    for (int n = m + 1; n < order; ++n) {
                        DenseTensor reduced = T;
                        // contract all modes except m and n, highest first so
                        // mode indices stay valid
                        for (int k = order - 1; k >= 0; --k) {
                            if (k == m || k == n) continue;
                            reduced = n_mode_product(
                                reduced, blocks[static_cast<std::size_t>(k)].transpose(), k);
                        }
                        // reduced now has extent 1 in every contracted mode
                        Matrix cross(T.dims()[static_cast<std::size_t>(m)],
                                     T.dims()[static_cast<std::size_t>(n)]);
                        std::vector<Index> idx(static_cast<std::size_t>(order), 0);
                        for (Index i = 0; i < cross.rows(); ++i) {
                            for (Index j = 0; j < cross.cols(); ++j) {
                                idx[static_cast<std::size_t>(m)] = i;
                                idx[static_cast<std::size_t>(n)] = j;
                                cross(i, j) = reduced.at(idx);
                            }
                        }
                        H.block(offsets[static_cast<std::size_t>(m)], offsets[static_cast<std::size_t>(n)],
                                cross.rows(), cross.cols()) = cross;
                        H.block(offsets[static_cast<std::size_t>(n)], offsets[static_cast<std::size_t>(m)],
                                cross.cols(), cross.rows()) = cross.transpose();
                    }
                }
                return H;
            } else {
                // central second differences, symmetrized
                const double h0 = 1e-4;
                const Index D = w.size();
                Matrix H(D, D);
                Vector probe = w;
                const double base = l.f(w);
                std::vector<double> hs(static_cast<std::size_t>(D));
                for (Index i = 0; i < D; ++i) {
                    hs[static_cast<std::size_t>(i)] = h0 * std::max(1.0, std::abs(w(i)));
                }
                for (Index i = 0; i < D; ++i) {
                    const double hi = hs[static_cast<std::size_t>(i)];
                    probe = w;
                    probe(i) = w(i) + hi;
                    const double up = l.f(probe);
                    probe(i) = w(i) - hi;
                    const double down = l.f(probe);
                    H(i, i) = (up - 2.0 * base + down) / (hi * hi);
                    for (Index j = i + 1; j < D; ++j) {
                        const double hj = hs[static_cast<std::size_t>(j)];
                        probe = w;
                        probe(i) = w(i) + hi;
                        probe(j) = w(j) + hj;
                        const double pp = l.f(probe);
                        probe(j) = w(j) - hj;
                        const double pm = l.f(probe);
                        probe(i) = w(i) - hi;
                        const double mm = l.f(probe);
                        probe(j) = w(j) + hj;
                        const double mp = l.f(probe);
                        H(i, j) = (pp - pm - mp + mm) / (4.0 * hi * hj);
                        H(j, i) = H(i, j);
                    }
                }
                return 0.5 * (H + H.transpose().eval());
            }
        },
        loss);
}

NewtonStep newton_step(const LossSpec& loss, const Vector& w, double eta, const ToleranceConfig& tol) {
    const Matrix H = hessian(loss, w);
    Eigen::JacobiSVD<Matrix> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double smallest = svd.singularValues().minCoeff();
    const double largest = svd.singularValues().maxCoeff();
    if (smallest <= tol.scaled(largest)) {
        std::ostringstream os;
        os << "newton_step: Hessian is singular (smallest singular value " << smallest << ")";
        throw Error(os.str());
    }
    NewtonStep out;
    out.condition = largest / smallest;
    out.step = eta * svd.solve(loss_gradient(loss, w));
    return out;
}

double newton_safety(const LossSpec& loss, const Vector& w, const ToleranceConfig& tol) {
    const Vector g = loss_gradient(loss, w);
    return newton_step(loss, w, 1.0, tol).step.dot(g);
}

Vector natural_gradient_step(const Vector& grad, const Matrix& metric, double eta,
                             const ToleranceConfig& tol) {
    if (metric.rows() != metric.cols() || metric.rows() != grad.size()) {
        throw DimensionError("natural_gradient_step: metric/gradient dimension mismatch");
    }
    const Matrix sym = 0.5 * (metric + metric.transpose());
    if ((metric - sym).norm() > tol.scaled(metric.norm())) {
        throw Error("natural_gradient_step: metric is not symmetric");
    }
    Eigen::LDLT<Matrix> ldlt(sym);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw Error("natural_gradient_step: metric is not positive definite");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= tol.psd_eig_tol) {
        throw Error("natural_gradient_step: metric is not positive definite");
    }
    return eta * ldlt.solve(grad);
}

Vector mirror_step(const LossSpec& loss, const ConvexPotential& psi, const Vector& w, double eta) {
    const Vector g = loss_gradient(loss, w);
    if (psi.kind == ConvexPotential::Kind::QuadraticForm) {
        return psi.Q.ldlt().solve(psi.Q * w - eta * g);
    }
    require_positive(w, "mirror_step");
    Vector scaled = w.array() * (-eta * g.array()).exp();
    const double total = scaled.sum();
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw DomainError("mirror_step: multiplicative update left the simplex domain");
    }
    return scaled / total;
}

MirrorDualReport verify_md_ng_equivalence(const LossSpec& loss, const ConvexPotential& psi,
                                          const Vector& w0, double eta, int rounds) {
    const LegendrePair pair = legendre(psi);
    const bool entropy = (psi.kind == ConvexPotential::Kind::NegEntropy);
    auto canonical = [&](const Vector& theta) -> Vector {
        if (!entropy) return theta;
        return theta.array() - theta.mean();
    };

    Vector w_md = w0;
    Vector theta_ng = canonical(pair.to_dual(w0));
    MirrorDualReport report;
    report.rounds = rounds;
    report.max_deviation = (canonical(pair.to_dual(w_md)) - theta_ng).norm();

    for (int t = 0; t < rounds; ++t) {
        w_md = mirror_step(loss, psi, w_md, eta);

        // dual-side recursion, metric solve against the chain-rule gradient
        const Vector w_ng = pair.to_primal(theta_ng);
        const Matrix dual_metric = pair.dual_hess(theta_ng);
        const Vector grad_theta = dual_metric * loss_gradient(loss, w_ng);
        theta_ng = canonical(theta_ng - eta * dual_metric.ldlt().solve(grad_theta));

        const double gap = (canonical(pair.to_dual(w_md)) - theta_ng).norm();
        report.max_deviation = std::max(report.max_deviation, gap);
    }
    return report;
}

}  // namespace safegame
