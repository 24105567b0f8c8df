#pragma once

#include "safegame/game.hpp"

#include <optional>
#include <string>

namespace safegame {

// --- Empirical safety --------------------------------------------------------

/// Entry (m, n) = <pi_rho(m) grad l_m(w), grad l_n(w)>. Diagonal entries are
/// the squared norms of the projected own-gradients, hence never negative.
Matrix pairwise_safety_at(const Game& game, const Vector& w);

struct SamplerConfig {
    int count = 1000;
    std::uint64_t seed = 0x5a11ULL;
    /// Explicit sampling region; when absent, points are drawn from the
    /// feasible set (uniform box for Box, rejection for Ball, Dirichlet per
    /// simplex block, default unit box when unconstrained).
    std::optional<Box> region;
};

struct SafetyReport {
    int samples = 0;
    std::uint64_t seed = 0;
    Matrix pair_min;          // per-pair minimum over all samples
    Vector worst_point;
    double worst_value = 0.0;
    int worst_row = -1;
    int worst_col = -1;
    enum class Verdict { Safe, ViolationFound } verdict = Verdict::Safe;

    bool safe() const { return verdict == Verdict::Safe; }
};

/// Draws the sample with the given index; deterministic per (seed, index)
/// regardless of evaluation order.
Vector sample_region_point(const FeasibleSet& set, Index dim, const SamplerConfig& cfg, int index);

SafetyReport empirical_safety(const Game& game, const SamplerConfig& cfg = {},
                              const ToleranceConfig& tol = {});

// --- Factorization specs (simultaneous factorization of the losses) ---------

struct InnerMap {
    enum class Kind { AffineQuadratic, Product, BlackBox };
    Kind kind = Kind::Product;
    Vector r;  // AffineQuadratic: f(x) = (r . (x/2 - b)) * (r . x)
    Vector b;
    std::function<double(const Vector&)> fn;

    static InnerMap affine_quadratic(Vector r, Vector b);
    static InnerMap product();
    static InnerMap black_box(std::function<double(const Vector&)> fn);

    double eval(const Vector& x) const;
};

struct OuterMap {
    enum class Kind { Linear, BlackBox };
    Kind kind = Kind::Linear;
    Vector d;  // linear coefficients over the latent factors
    std::function<double(const Vector&)> fn;

    static OuterMap linear(Vector d);
    static OuterMap black_box(std::function<double(const Vector&)> fn);

    double eval(const Vector& z) const;
};

struct FactorizationSpec {
    std::vector<Matrix> latent_bases;  // P_l, jointly orthonormal columns
    std::vector<InnerMap> inner;       // f_l
    std::vector<OuterMap> outer;       // g_n, one per player
};

// --- Certificates -------------------------------------------------------------

enum class CertificateVerdict {
    Certified,           // every condition verified
    CertifiedEmpirical,  // conditions verified only at sampled points (black-box maps)
    Refuted,             // a condition is definitively violated
    Inconclusive         // the certificate's hypothesis could not be established
};

struct CertificateResult {
    CertificateVerdict verdict = CertificateVerdict::Inconclusive;
    std::string reason;
    int violating_index = -1;  // coordinate for sign-condition refutations

    // Witness data, populated by the certificate that produced the result.
    Matrix P;
    Matrix Q;
    Matrix R;
    std::vector<Vector> diagonals;
    Vector common_b;
    Vector pair_D;
    Vector pair_E;
    std::optional<bool> psd_left;   // bilinear cross-check: A^T B psd
    std::optional<bool> psd_right;  // bilinear cross-check: B A^T psd

    bool certified() const {
        return verdict == CertificateVerdict::Certified || verdict == CertificateVerdict::CertifiedEmpirical;
    }
};

/// Strong-typing certificate: joint orthonormality of the latent bases,
/// commutation of the latent projections with the player projections, loss
/// reconstruction at sampled points, and monotonic covariation of the outer
/// maps (exact for linear outers, sampled for black boxes).
CertificateResult certify_strong_typing(const Game& game, const FactorizationSpec& spec,
                                        const SamplerConfig& sampler = {}, const ToleranceConfig& tol = {});

/// Two-player bilinear certificate: shared-factor diagonalization of (A, B)
/// plus the coordinatewise sign condition D*E >= 0. Positive-semidefiniteness
/// of A^T B and B A^T is reported alongside as an independent check.
CertificateResult certify_bilinear(const Matrix& A, const Matrix& B, const ToleranceConfig& tol = {});

/// Open quadratic certificate: joint diagonalization of the loss Hessians,
/// pairwise sign condition on the diagonals, and a common offset b solving
/// b^(n) = A^(n) b for every player (least squares plus residual check).
CertificateResult certify_quadratic_open(const std::vector<Matrix>& mats, const std::vector<Vector>& vecs,
                                         const ToleranceConfig& tol = {},
                                         std::uint64_t seed = 0x0c0511ULL);

struct BlockGameWitness {
    Matrix P;                       // block-diagonal orthogonal
    Matrix R;                       // D x L with diagonal row-blocks
    std::vector<Vector> diagonals;  // D^(n), length L each
    Vector b;
};

/// Block quadratic certificate. With a witness supplied, verifies the four
/// structural conditions and the reconstruction; without one, attempts the
/// constructive recovery (per-block joint diagonalization, cross-block
/// alignment against the largest block, rank-one latent factorization) and
/// then verifies what it found.
CertificateResult certify_quadratic_block(const std::vector<Matrix>& mats, const std::vector<Vector>& vecs,
                                          const std::vector<Index>& blocks, const ToleranceConfig& tol = {},
                                          std::uint64_t seed = 0xb10cULL,
                                          const std::optional<BlockGameWitness>& witness = std::nullopt);

/// Multilinear certificate: every tensor must pass verification against the
/// shared factor matrices with its own diagonal, and the diagonals must agree
/// in sign coordinatewise.
CertificateResult certify_multilinear(const std::vector<DenseTensor>& tensors,
                                      const std::vector<Matrix>& shared_factors,
                                      const std::vector<Vector>& diagonals,
                                      const ToleranceConfig& tol = {});

// --- Potential-game comparison -------------------------------------------------

struct PotentialCheck {
    bool is_potential = false;
    double ratio = 0.0;  // cross term of player 2 = ratio * cross term of player 1
    Vector weights;      // per-player weights alpha when a potential exists
    std::string note;
};

/// Closed-form criterion for the two-player bilinear family l_1 = x^T A y,
/// l_2 = x^T B y: a weighted potential exists iff B = c A with c > 0.
PotentialCheck potential_check_bilinear(const Matrix& A, const Matrix& B, const ToleranceConfig& tol = {});

/// Same criterion applied to a two-player block game with bilinear,
/// quadratic, or order-2 multilinear losses; linear terms are allowed and do
/// not affect the criterion.
PotentialCheck potential_check_two_player(const Game& game, const ToleranceConfig& tol = {});

// --- HOSVD insufficiency ---------------------------------------------------------

struct InsufficiencyWitness {
    DenseTensor first;
    DenseTensor second;
    std::vector<Matrix> shared_factors;
    std::vector<Vector> point;  // one action block per mode
    int mode = 0;
    double value = 0.0;  // the negative pairwise inner product found
};

/// Probes a given tensor pair for a Def-3 violation over sampled unit-sphere
/// action blocks. Returns the most negative witness found, if any.
std::optional<InsufficiencyWitness> pair_violation_search(const DenseTensor& first,
                                                          const DenseTensor& second, std::uint64_t seed,
                                                          int trials);

/// Randomized search for two tensors that share HOSVD-style factor matrices
/// (non-diagonal cores) yet violate safety at some sampled point.
std::optional<InsufficiencyWitness> hosvd_insufficiency_search(const std::vector<Index>& dims,
                                                               std::uint64_t seed, int trials);

}  // namespace safegame
