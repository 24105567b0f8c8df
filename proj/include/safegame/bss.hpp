#pragma once

#include "safegame/safety.hpp"

namespace safegame::bss {

enum class SourceDist { Uniform, Laplace, TwoPoint };

/// D channels recorded for T timepoints.
struct SignalBatch {
    Matrix data;  // D x T

    Index channels() const { return data.rows(); }
    Index samples() const { return data.cols(); }
};

/// Zero-mean unit-variance i.i.d. rows, deterministic per seed.
/// Excess kurtosis: -1.2 (uniform), 3 (Laplace), -2 (two-point).
SignalBatch generate_sources(Index L, Index T, SourceDist dist, std::uint64_t seed);

struct MixingModel {
    enum class Structure { Orthogonal, BlockView, General };
    Matrix mixing;  // D x L
    Structure structure = Structure::General;
    double noise = 0.0;  // iid Gaussian noise level added after mixing
    std::uint64_t seed = 0;
    std::vector<Index> view_sizes;  // BlockView row blocks

    static MixingModel orthogonal(Matrix M, double noise = 0.0, std::uint64_t seed = 0,
                                  const ToleranceConfig& tol = {});
    /// Stacks M_n = P_nn * R_n with P_nn orthogonal and R_n a rectangular
    /// diagonal row block (view_scales[n] holds its diagonal entries).
    static MixingModel block_view(const std::vector<Matrix>& view_bases,
                                  const std::vector<Vector>& view_scales, Index latent,
                                  double noise = 0.0, std::uint64_t seed = 0,
                                  const ToleranceConfig& tol = {});
    static MixingModel general(Matrix M, double noise = 0.0, std::uint64_t seed = 0);
};

/// X = M S (+ noise).
SignalBatch mix(const MixingModel& model, const SignalBatch& sources);

/// Gram matrix X X^T; optionally normalized by the sample count.
Matrix covariance(const SignalBatch& batch, bool normalized = false);

/// Order-4 joint cumulant tensor of the (centered) channels:
/// cum_ijkl = m4_ijkl - C_ij C_kl - C_ik C_jl - C_il C_jk with sample moments.
/// Exactly symmetric under all index permutations.
DenseTensor fourth_cumulant_tensor(const SignalBatch& batch);

/// First-principal-component game over shared channels: open quadratic game
/// with losses -1/2 w^T X^(n) (X^(n))^T w on the unit ball.
Game pca_game(const std::vector<SignalBatch>& batches, bool normalized = false);

struct RecoveryResult {
    Matrix mixing;        // D x L, columns up to permutation and sign
    Vector kurtosis;      // estimated excess kurtosis per latent source
    Matrix whitener;      // L x D
    double residual_rel = 0.0;  // cumulant-tensor fit residual, relative
    bool reliable = false;
    std::string note;
};

/// Whitens, estimates the 4th-order cumulant tensor, and recovers the mixing
/// columns through the symmetric tensor decomposition. Near-Gaussian inputs
/// are returned flagged unreliable rather than rejected; genuinely degenerate
/// kurtosis spectra raise DegenerateSpectrumError.
RecoveryResult recover_mixing(const SignalBatch& batch, Index latent = 0,
                              const ToleranceConfig& tol = {});

/// Greedy column matching against a ground-truth mixing; returns the angle in
/// degrees between each true column and its best remaining recovered match.
Vector column_angles_degrees(const Matrix& truth, const Matrix& recovered);

struct BlockViewReport {
    CertificateResult certificate;
    SafetyReport safety;
    int dynamics_rounds = 0;
    bool dynamics_converged = false;
    double terminal_displacement = 0.0;
};

/// Generates one latent set per view owner, builds the block quadratic PCA
/// game, and runs the block certificate, the empirical safety check, and a
/// short dynamics run.
BlockViewReport block_view_demo(const MixingModel& model, Index T, SourceDist dist,
                                std::uint64_t seed, const ToleranceConfig& tol);

}  // namespace safegame::bss
