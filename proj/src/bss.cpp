#include "safegame/bss.hpp"

#include "safegame/dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace safegame::bss {

SignalBatch generate_sources(Index L, Index T, SourceDist dist, std::uint64_t seed) {
    if (L <= 0 || T <= 0) throw DimensionError("generate_sources: L and T must be positive");
    Matrix S(L, T);
    for (Index r = 0; r < L; ++r) {
        auto rng = make_rng(seed, static_cast<std::uint64_t>(r));
        switch (dist) {
            case SourceDist::Uniform: {
                const double half = std::sqrt(3.0);
                std::uniform_real_distribution<double> u(-half, half);
                for (Index t = 0; t < T; ++t) S(r, t) = u(rng);
                break;
            }
            case SourceDist::Laplace: {
                const double b = 1.0 / std::sqrt(2.0);
                std::uniform_real_distribution<double> u(-0.5, 0.5);
                for (Index t = 0; t < T; ++t) {
                    const double x = u(rng);
                    S(r, t) = -b * (x >= 0 ? 1.0 : -1.0) * std::log1p(-2.0 * std::abs(x));
                }
                break;
            }
            case SourceDist::TwoPoint: {
                std::bernoulli_distribution coin(0.5);
                for (Index t = 0; t < T; ++t) S(r, t) = coin(rng) ? 1.0 : -1.0;
                break;
            }
        }
    }
    return SignalBatch{std::move(S)};
}

MixingModel MixingModel::orthogonal(Matrix M, double noise, std::uint64_t seed,
                                    const ToleranceConfig& tol) {
    const Matrix gram = M.transpose() * M;
    if ((gram - Matrix::Identity(M.cols(), M.cols())).norm() > tol.scaled(1.0)) {
        throw Error("MixingModel: columns are not orthonormal");
    }
    MixingModel model;
    model.mixing = std::move(M);
    model.structure = Structure::Orthogonal;
    model.noise = noise;
    model.seed = seed;
    return model;
}

MixingModel MixingModel::block_view(const std::vector<Matrix>& view_bases,
                                    const std::vector<Vector>& view_scales, Index latent, double noise,
                                    std::uint64_t seed, const ToleranceConfig& tol) {
    if (view_bases.size() != view_scales.size() || view_bases.empty()) {
        throw DimensionError("MixingModel: one scale vector per view basis");
    }
    MixingModel model;
    model.structure = Structure::BlockView;
    model.noise = noise;
    model.seed = seed;
    Index total = 0;
    for (const Matrix& P : view_bases) total += P.rows();
    model.mixing = Matrix::Zero(total, latent);
    Index offset = 0;
    for (std::size_t n = 0; n < view_bases.size(); ++n) {
        const Matrix& P = view_bases[n];
        if (P.rows() != P.cols()) throw DimensionError("MixingModel: view bases must be square");
        if ((P.transpose() * P - Matrix::Identity(P.rows(), P.cols())).norm() > tol.scaled(1.0)) {
            throw Error("MixingModel: view basis is not orthogonal");
        }
        const Index k = std::min(P.rows(), latent);
        if (view_scales[n].size() != k) {
            throw DimensionError("MixingModel: scale vector length must be min(view dim, latent)");
        }
        Matrix R = Matrix::Zero(P.rows(), latent);
        for (Index i = 0; i < k; ++i) R(i, i) = view_scales[n](i);
        model.mixing.middleRows(offset, P.rows()) = P * R;
        model.view_sizes.push_back(P.rows());
        offset += P.rows();
    }
    return model;
}

MixingModel MixingModel::general(Matrix M, double noise, std::uint64_t seed) {
    MixingModel model;
    model.mixing = std::move(M);
    model.structure = Structure::General;
    model.noise = noise;
    model.seed = seed;
    return model;
}

SignalBatch mix(const MixingModel& model, const SignalBatch& sources) {
    if (model.mixing.cols() != sources.channels()) {
        throw DimensionError("mix: mixing columns must match source channels");
    }
    Matrix X = model.mixing * sources.data;
    if (model.noise > 0.0) {
        auto rng = make_rng(model.seed, 0x0015eULL);
        std::normal_distribution<double> gauss(0.0, model.noise);
        for (Index i = 0; i < X.rows(); ++i)
            for (Index t = 0; t < X.cols(); ++t) X(i, t) += gauss(rng);
    }
    return SignalBatch{std::move(X)};
}

Matrix covariance(const SignalBatch& batch, bool normalized) {
    Matrix gram = batch.data * batch.data.transpose();
    if (normalized) gram /= static_cast<double>(batch.samples());
    return gram;
}

DenseTensor fourth_cumulant_tensor(const SignalBatch& batch) {
    const Index D = batch.channels();
    const Index T = batch.samples();
    Matrix X = batch.data;
    for (Index i = 0; i < D; ++i) X.row(i).array() -= X.row(i).mean();
    const Matrix C = (X * X.transpose()) / static_cast<double>(T);

    DenseTensor cum = DenseTensor::zeros({D, D, D, D});
    std::vector<Index> idx(4);
    // accumulate the symmetric fourth moment on i <= j <= k <= l, then scatter
    for (Index i = 0; i < D; ++i) {
        for (Index j = i; j < D; ++j) {
            for (Index k = j; k < D; ++k) {
                for (Index l = k; l < D; ++l) {
                    double m4 = 0.0;
                    for (Index t = 0; t < T; ++t) m4 += X(i, t) * X(j, t) * X(k, t) * X(l, t);
                    m4 /= static_cast<double>(T);
                    const double value = m4 - C(i, j) * C(k, l) - C(i, k) * C(j, l) - C(i, l) * C(j, k);
                    idx = {i, j, k, l};
                    std::sort(idx.begin(), idx.end());
                    do {
                        cum.at(idx) = value;
                    } while (std::next_permutation(idx.begin(), idx.end()));
                }
            }
        }
    }
    return cum;
}

Game pca_game(const std::vector<SignalBatch>& batches, bool normalized) {
    if (batches.empty()) throw DimensionError("pca_game: need at least one batch");
    const Index D = batches.front().channels();
    std::vector<LossSpec> losses;
    for (const SignalBatch& batch : batches) {
        if (batch.channels() != D) throw DimensionError("pca_game: mismatched channel counts");
        losses.emplace_back(QuadraticLoss(-covariance(batch, normalized), Vector::Zero(D)));
    }
    std::vector<int> assignment(batches.size(), 0);
    return Game(TypeStructure::open(D), std::move(assignment), std::move(losses),
                Ball{Vector::Zero(D), 1.0});
}

RecoveryResult recover_mixing(const SignalBatch& batch, Index latent, const ToleranceConfig& tol) {
    tol.validate();
    const Index D = batch.channels();
    const Index T = batch.samples();
    Matrix X = batch.data;
    for (Index i = 0; i < D; ++i) X.row(i).array() -= X.row(i).mean();

    const Matrix C = (X * X.transpose()) / static_cast<double>(T);
    Eigen::SelfAdjointEigenSolver<Matrix> es(C);
    const Vector evals_asc = es.eigenvalues();
    const double top = evals_asc.maxCoeff();
    Index numerical_rank = 0;
    for (Index i = 0; i < D; ++i) {
        if (evals_asc(i) > 1e-10 * std::max(top, 1e-300)) ++numerical_rank;
    }
    if (latent <= 0) latent = numerical_rank;
    if (latent > numerical_rank) {
        std::ostringstream os;
        os << "recover_mixing: covariance has numerical rank " << numerical_rank << " < requested latent "
           << latent;
        throw Error(os.str());
    }
    Matrix V(D, latent);
    Vector lam(latent);
    for (Index i = 0; i < latent; ++i) {  // descending order
        V.col(i) = es.eigenvectors().col(D - 1 - i);
        lam(i) = evals_asc(D - 1 - i);
    }
    RecoveryResult result;
    result.whitener = lam.cwiseSqrt().cwiseInverse().asDiagonal() * V.transpose();
    const SignalBatch whitened{result.whitener * X};

    const DenseTensor cum = fourth_cumulant_tensor(whitened);
    const double cum_scale = matricize(cum, 0).jacobiSvd().singularValues().maxCoeff();
    if (cum_scale < 0.1) {
        // kurtosis spectrum indistinguishable from Gaussian noise
        Eigen::JacobiSVD<Matrix> svd(matricize(cum, 0), Eigen::ComputeFullU);
        Matrix P = svd.matrixU().leftCols(latent);
        fix_column_signs(P);
        result.mixing = V * lam.cwiseSqrt().asDiagonal() * P;
        result.kurtosis = Vector::Zero(latent);
        for (Index l = 0; l < latent; ++l) {
            std::vector<Vector> column(4, P.col(l));
            result.kurtosis(l) = multilinear_eval(cum, column);
        }
        result.residual_rel = 1.0;
        result.reliable = false;
        result.note = "near-zero fourth cumulants; sources look Gaussian and the recovery is unreliable";
        return result;
    }

    const SymmetricRecovery rec = recover_symmetric_tensor_svd(cum, latent, tol, /*verify=*/false);
    result.kurtosis = rec.factors.d;
    result.mixing = V * lam.cwiseSqrt().asDiagonal() * rec.factors.factors.front();
    result.residual_rel = rec.residual / std::max(1e-300, cum.norm());
    result.reliable = result.residual_rel <= 0.5;
    result.note = result.reliable ? "cumulant tensor fits the shared-factor decomposition"
                                  : "cumulant tensor fits the decomposition poorly; treat with caution";
    return result;
}

Vector column_angles_degrees(const Matrix& truth, const Matrix& recovered) {
    if (truth.rows() != recovered.rows()) throw DimensionError("column_angles_degrees: row mismatch");
    const Index L = truth.cols();
    if (recovered.cols() < L) throw DimensionError("column_angles_degrees: not enough recovered columns");
    std::vector<bool> used(static_cast<std::size_t>(recovered.cols()), false);
    Vector angles(L);
    for (Index c = 0; c < L; ++c) {
        double best = -1.0;
        Index pick = -1;
        for (Index r = 0; r < recovered.cols(); ++r) {
            if (used[static_cast<std::size_t>(r)]) continue;
            const double denom = truth.col(c).norm() * recovered.col(r).norm();
            if (denom == 0.0) continue;
            const double cosine = std::abs(truth.col(c).dot(recovered.col(r))) / denom;
            if (cosine > best) {
                best = cosine;
                pick = r;
            }
        }
        if (pick < 0) throw Error("column_angles_degrees: degenerate recovered columns");
        used[static_cast<std::size_t>(pick)] = true;
        angles(c) = std::acos(std::clamp(best, 0.0, 1.0)) * 180.0 / M_PI;
    }
    return angles;
}

BlockViewReport block_view_demo(const MixingModel& model, Index T, SourceDist dist, std::uint64_t seed,
                                const ToleranceConfig& tol) {
    if (model.structure != MixingModel::Structure::BlockView) {
        throw Error("block_view_demo: model must have BlockView structure");
    }
    const Index L = model.mixing.cols();
    const std::size_t views = model.view_sizes.size();

    std::vector<Matrix> mats;
    std::vector<Vector> vecs;
    std::vector<LossSpec> losses;
    for (std::size_t n = 0; n < views; ++n) {
        const SignalBatch sources = generate_sources(L, T, dist, derive_seed(seed, n));
        const SignalBatch X = mix(model, sources);
        Matrix A = -covariance(X);
        mats.push_back(A);
        vecs.push_back(Vector::Zero(A.rows()));
        losses.emplace_back(QuadraticLoss(A, Vector::Zero(A.rows())));
    }

    BlockViewReport report;
    report.certificate = certify_quadratic_block(mats, vecs, model.view_sizes, tol, derive_seed(seed, 99));

    std::vector<int> assignment(views);
    for (std::size_t n = 0; n < views; ++n) assignment[n] = static_cast<int>(n);
    Game game(TypeStructure::blocks(model.view_sizes), assignment, std::move(losses),
              Ball{Vector::Zero(model.mixing.rows()), 1.0});

    double safety_scale = 1.0;
    for (const Matrix& A : mats) safety_scale = std::max(safety_scale, A.squaredNorm());
    ToleranceConfig safety_tol = tol;
    safety_tol.abs_tol = std::max(tol.abs_tol, 1e-9 * safety_scale);
    report.safety = empirical_safety(game, SamplerConfig{500, derive_seed(seed, 7), std::nullopt},
                                     safety_tol);

    DynamicsConfig dyn;
    dyn.max_rounds = 2000;
    dyn.convergence_tol = 1e-8;
    Vector start = Vector::Constant(game.dim(), 0.1);
    Trajectory traj = simulate(game, start, dyn);
    report.dynamics_rounds = traj.rounds();
    report.dynamics_converged = traj.reason == Trajectory::Termination::Converged;
    if (traj.points.size() >= 2) {
        report.terminal_displacement =
            (traj.points.back() - traj.points[traj.points.size() - 2]).norm();
    }
    return report;
}

}  // namespace safegame::bss
