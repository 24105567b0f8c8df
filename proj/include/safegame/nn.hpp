#pragma once

#include "safegame/linalg.hpp"

#include <utility>

namespace safegame::nn {

/// Moore-Penrose pseudoinverse via SVD with a relative singular-value cutoff.
Matrix pseudoinverse(const Matrix& W, double rel_cutoff = 1e-12);

/// One layer's forward weights W (out x in) and feedback weights B (in x out).
struct LayerPair {
    Matrix W;
    Matrix B;

    LayerPair(Matrix W_in, Matrix B_in);
};

/// (delta_BP, delta_FA) = (W^T e, B e) for an error signal e of length out.
std::pair<Vector, Vector> deltas(const LayerPair& pair, const Vector& e);

/// <delta_FA, delta_BP>; nonnegative whenever B is a positive multiple of
/// the pseudoinverse of W.
double fa_safety(const LayerPair& pair, const Vector& e);

/// Angle between the two error signals in [0, 180] degrees; throws if either
/// delta vanishes.
double alignment_angle(const LayerPair& pair, const Vector& e);

}  // namespace safegame::nn
