#include "safegame/nn.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace safegame::nn {

Matrix pseudoinverse(const Matrix& W, double rel_cutoff) {
    Eigen::JacobiSVD<Matrix> svd(W, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sigma = svd.singularValues();
    const double cutoff = sigma.size() > 0 ? rel_cutoff * sigma.maxCoeff() : 0.0;
    Vector inv = Vector::Zero(sigma.size());
    for (Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > cutoff) inv(i) = 1.0 / sigma(i);
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

LayerPair::LayerPair(Matrix W_in, Matrix B_in) : W(std::move(W_in)), B(std::move(B_in)) {
    if (B.rows() != W.cols() || B.cols() != W.rows()) {
        throw DimensionError("LayerPair: B must map error signals to the same space as W^T");
    }
}

std::pair<Vector, Vector> deltas(const LayerPair& pair, const Vector& e) {
    if (e.size() != pair.W.rows()) throw DimensionError("deltas: error signal length mismatch");
    return {pair.W.transpose() * e, pair.B * e};
}

double fa_safety(const LayerPair& pair, const Vector& e) {
    const auto [bp, fa] = deltas(pair, e);
    return fa.dot(bp);
}

double alignment_angle(const LayerPair& pair, const Vector& e) {
    const auto [bp, fa] = deltas(pair, e);
    const double nbp = bp.norm();
    const double nfa = fa.norm();
    if (nbp == 0.0 || nfa == 0.0) {
        throw Error("alignment_angle: undefined for a vanishing error signal");
    }
    const double cosine = std::clamp(fa.dot(bp) / (nbp * nfa), -1.0, 1.0);
    return std::acos(cosine) * 180.0 / M_PI;
}

}  // namespace safegame::nn
