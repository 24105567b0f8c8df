#pragma once

#include "safegame/game.hpp"

namespace safegame {

/// Twice-differentiable strictly convex reference function for Bregman
/// geometry. Two variants ship: quadratic forms (Euclidean geometry up to a
/// metric) and negative entropy (simplex geometry).
struct ConvexPotential {
    enum class Kind { QuadraticForm, NegEntropy };
    Kind kind = Kind::QuadraticForm;
    Matrix Q;       // symmetric positive definite, QuadraticForm only
    Index dim = 0;

    static ConvexPotential quadratic(Matrix Q, const ToleranceConfig& tol = {});
    static ConvexPotential neg_entropy(Index dim);

    double value(const Vector& w) const;
    Vector grad(const Vector& w) const;
    Matrix hess(const Vector& w) const;
};

/// Closed-form Legendre data for a ConvexPotential. For negative entropy the
/// primal map normalizes exponentials onto the simplex (the dual gradient map
/// is shift-invariant there; dual representatives are canonicalized to zero
/// mean where a unique representative is needed).
struct LegendrePair {
    ConvexPotential psi;

    Vector to_dual(const Vector& w) const;        // theta = grad psi(w)
    Vector to_primal(const Vector& theta) const;  // w = grad psi*(theta)
    double dual_value(const Vector& theta) const; // psi*(theta)
    Matrix dual_hess(const Vector& theta) const;  // grad^2 psi*(theta)
    /// |psi(w) + psi*(grad psi(w)) - w . grad psi(w)|
    double duality_residual(const Vector& w) const;
};

LegendrePair legendre(const ConvexPotential& psi);

/// D_psi(v, w) = psi(v) - psi(w) - <grad psi(w), v - w>; nonnegative, zero
/// iff v = w.
double bregman(const ConvexPotential& psi, const Vector& v, const Vector& w);

/// Loss Hessian: analytic for quadratic, bilinear, and multilinear losses,
/// symmetric central differences for black boxes.
Matrix hessian(const LossSpec& loss, const Vector& w);

struct NewtonStep {
    Vector step;              // eta * H^{-1} grad
    double condition = 0.0;   // spectral condition number of H at w
};

/// Throws when H is singular (reports the smallest singular value).
NewtonStep newton_step(const LossSpec& loss, const Vector& w, double eta,
                       const ToleranceConfig& tol = {});

/// <H^{-1} grad, grad>; strictly positive for strictly convex losses away
/// from the minimizer.
double newton_safety(const LossSpec& loss, const Vector& w, const ToleranceConfig& tol = {});

/// eta * G^{-1} grad for a symmetric positive definite metric G.
Vector natural_gradient_step(const Vector& grad, const Matrix& metric, double eta,
                             const ToleranceConfig& tol = {});

/// One mirror-descent step via duality: grad psi(w') = grad psi(w) - eta grad l(w).
/// Quadratic psi solves the metric system; negative entropy yields the
/// renormalized multiplicative update.
Vector mirror_step(const LossSpec& loss, const ConvexPotential& psi, const Vector& w, double eta);

struct MirrorDualReport {
    double max_deviation = 0.0;  // max_t || grad psi(w_MD^t) - theta_NG^t ||
    int rounds = 0;
};

/// Runs mirror descent in the primal and the natural-gradient recursion
/// theta' = theta - eta [grad^2 psi*(theta)]^{-1} grad_theta l(theta) in the
/// dual, and reports the largest gap between the two dual trajectories.
MirrorDualReport verify_md_ng_equivalence(const LossSpec& loss, const ConvexPotential& psi,
                                          const Vector& w0, double eta, int rounds);

}  // namespace safegame
