#include "safegame/safety.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace safegame {

// --- Empirical safety ----------------------------------------------------------

Matrix pairwise_safety_at(const Game& game, const Vector& w) {
    const int N = game.players();
    std::vector<Vector> grads(static_cast<std::size_t>(N));
    for (int n = 0; n < N; ++n) grads[static_cast<std::size_t>(n)] = gradient(game, n, w);
    Matrix out(N, N);
    for (int m = 0; m < N; ++m) {
        const Vector projected = game.player_projection(m).apply(grads[static_cast<std::size_t>(m)]);
        for (int n = 0; n < N; ++n) out(m, n) = projected.dot(grads[static_cast<std::size_t>(n)]);
    }
    return out;
}

namespace {

Vector sample_box(const Box& box, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vector x(box.lo.size());
    for (Index i = 0; i < x.size(); ++i) x(i) = box.lo(i) + unit(rng) * (box.hi(i) - box.lo(i));
    return x;
}

}  // namespace

Vector sample_region_point(const FeasibleSet& set, Index dim, const SamplerConfig& cfg, int index) {
    auto rng = make_rng(cfg.seed, static_cast<std::uint64_t>(index));
    if (cfg.region) return sample_box(*cfg.region, rng);
    return std::visit(
        [&](const auto& s) -> Vector {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Unconstrained>) {
                Box unit_box{Vector::Constant(dim, -1.0), Vector::Constant(dim, 1.0)};
                return sample_box(unit_box, rng);
            } else if constexpr (std::is_same_v<S, Ball>) {
                Box bound{s.center.array() - s.radius, s.center.array() + s.radius};
                for (int attempt = 0; attempt < 100000; ++attempt) {
                    Vector x = sample_box(bound, rng);
                    if ((x - s.center).norm() <= s.radius) return x;
                }
                return s.center;  // unreachable at desk-scale dimensions
            } else if constexpr (std::is_same_v<S, Box>) {
                return sample_box(s, rng);
            } else {
                std::exponential_distribution<double> expo(1.0);
                Vector x(dim);
                Index offset = 0;
                for (Index bs : s.block_sizes) {
                    double total = 0.0;
                    for (Index j = 0; j < bs; ++j) {
                        x(offset + j) = expo(rng);
                        total += x(offset + j);
                    }
                    x.segment(offset, bs) /= total;
                    offset += bs;
                }
                return x;
            }
        },
        set);
}

SafetyReport empirical_safety(const Game& game, const SamplerConfig& cfg, const ToleranceConfig& tol) {
    tol.validate();
    const int N = game.players();
    SafetyReport report;
    report.samples = cfg.count;
    report.seed = cfg.seed;
    report.pair_min = Matrix::Constant(N, N, std::numeric_limits<double>::infinity());
    report.worst_value = std::numeric_limits<double>::infinity();

    for (int s = 0; s < cfg.count; ++s) {
        const Vector w = sample_region_point(game.feasible, game.dim(), cfg, s);
        const Matrix pair = pairwise_safety_at(game, w);
        for (int m = 0; m < N; ++m) {
            for (int n = 0; n < N; ++n) {
                if (pair(m, n) < report.pair_min(m, n)) report.pair_min(m, n) = pair(m, n);
                if (pair(m, n) < report.worst_value) {
                    report.worst_value = pair(m, n);
                    report.worst_point = w;
                    report.worst_row = m;
                    report.worst_col = n;
                }
            }
        }
    }
    if (cfg.count == 0) {
        report.pair_min = Matrix::Zero(N, N);
        report.worst_value = 0.0;
    }
    report.verdict = (report.pair_min.minCoeff() < -tol.abs_tol) ? SafetyReport::Verdict::ViolationFound
                                                                 : SafetyReport::Verdict::Safe;
    return report;
}

// --- Factorization maps -----------------------------------------------------------

InnerMap InnerMap::affine_quadratic(Vector r, Vector b) {
    InnerMap f;
    f.kind = Kind::AffineQuadratic;
    f.r = std::move(r);
    f.b = std::move(b);
    return f;
}

InnerMap InnerMap::product() {
    InnerMap f;
    f.kind = Kind::Product;
    return f;
}

InnerMap InnerMap::black_box(std::function<double(const Vector&)> fn) {
    InnerMap f;
    f.kind = Kind::BlackBox;
    f.fn = std::move(fn);
    return f;
}

double InnerMap::eval(const Vector& x) const {
    switch (kind) {
        case Kind::AffineQuadratic: {
            if (r.size() != x.size() || b.size() != x.size()) {
                throw DimensionError("InnerMap: coefficient dimension mismatch");
            }
            return r.dot(0.5 * x - b) * r.dot(x);
        }
        case Kind::Product: {
            double p = 1.0;
            for (Index i = 0; i < x.size(); ++i) p *= x(i);
            return p;
        }
        case Kind::BlackBox:
            return fn(x);
    }
    throw Error("InnerMap: unknown kind");
}

OuterMap OuterMap::linear(Vector d) {
    OuterMap g;
    g.kind = Kind::Linear;
    g.d = std::move(d);
    return g;
}

OuterMap OuterMap::black_box(std::function<double(const Vector&)> fn) {
    OuterMap g;
    g.kind = Kind::BlackBox;
    g.fn = std::move(fn);
    return g;
}

double OuterMap::eval(const Vector& z) const {
    switch (kind) {
        case Kind::Linear:
            if (d.size() != z.size()) throw DimensionError("OuterMap: coefficient dimension mismatch");
            return d.dot(z);
        case Kind::BlackBox:
            return fn(z);
    }
    throw Error("OuterMap: unknown kind");
}

// --- Strong typing -----------------------------------------------------------------

CertificateResult certify_strong_typing(const Game& game, const FactorizationSpec& spec,
                                        const SamplerConfig& sampler, const ToleranceConfig& tol) {
    tol.validate();
    CertificateResult result;
    const Index D = game.dim();
    const std::size_t L = spec.latent_bases.size();
    if (spec.inner.size() != L) throw DimensionError("certify_strong_typing: one inner map per latent basis");
    if (spec.outer.size() != static_cast<std::size_t>(game.players())) {
        throw DimensionError("certify_strong_typing: one outer map per player");
    }
    for (const Matrix& P : spec.latent_bases) {
        if (P.rows() != D) throw DimensionError("certify_strong_typing: latent basis dimension mismatch");
    }

    // (a) joint orthonormality of the latent bases
    Index total_cols = 0;
    for (const Matrix& P : spec.latent_bases) total_cols += P.cols();
    Matrix stacked(D, total_cols);
    Index col = 0;
    for (const Matrix& P : spec.latent_bases) {
        stacked.middleCols(col, P.cols()) = P;
        col += P.cols();
    }
    const Matrix gram = stacked.transpose() * stacked;
    const double gram_residual = (gram - Matrix::Identity(total_cols, total_cols)).norm();
    if (gram_residual > tol.scaled(1.0)) {
        result.verdict = CertificateVerdict::Refuted;
        std::ostringstream os;
        os << "latent basis columns are not jointly orthonormal (Gram residual " << gram_residual << ")";
        result.reason = os.str();
        return result;
    }

    // (b) latent projections commute with every player projection
    std::vector<int> distinct_rho = game.assignment;
    std::sort(distinct_rho.begin(), distinct_rho.end());
    distinct_rho.erase(std::unique(distinct_rho.begin(), distinct_rho.end()), distinct_rho.end());
    for (std::size_t l = 0; l < L; ++l) {
        const Matrix tau = spec.latent_bases[l] * spec.latent_bases[l].transpose();
        for (int r : distinct_rho) {
            const Matrix pi = game.types.projection(r).matrix();
            const double comm = (tau * pi - pi * tau).norm();
            if (comm > tol.scaled(1.0)) {
                result.verdict = CertificateVerdict::Refuted;
                std::ostringstream os;
                os << "latent projection " << l << " does not commute with player projection " << r
                   << " (commutator norm " << comm << ")";
                result.reason = os.str();
                result.violating_index = static_cast<int>(l);
                return result;
            }
        }
    }

    // (c) loss reconstruction at sampled points
    std::vector<Vector> latent_samples;
    for (int s = 0; s < sampler.count; ++s) {
        const Vector w = sample_region_point(game.feasible, D, sampler, s);
        Vector z(static_cast<Index>(L));
        for (std::size_t l = 0; l < L; ++l) {
            z(static_cast<Index>(l)) = spec.inner[l].eval(spec.latent_bases[l].transpose() * w);
        }
        latent_samples.push_back(z);
        for (int n = 0; n < game.players(); ++n) {
            const double actual = loss_eval(game, n, w);
            const double rebuilt = spec.outer[static_cast<std::size_t>(n)].eval(z);
            if (std::abs(actual - rebuilt) > tol.scaled(std::max(1.0, std::abs(actual)))) {
                result.verdict = CertificateVerdict::Refuted;
                std::ostringstream os;
                os << "loss " << n << " does not match the factorization at a sampled point (" << actual
                   << " vs " << rebuilt << ")";
                result.reason = os.str();
                return result;
            }
        }
    }

    // (d) monotonic covariation of the outer maps
    bool all_linear = true;
    for (const OuterMap& g : spec.outer) all_linear = all_linear && (g.kind == OuterMap::Kind::Linear);

    if (all_linear) {
        for (std::size_t l = 0; l < L; ++l) {
            for (int m = 0; m < game.players(); ++m) {
                for (int n = m + 1; n < game.players(); ++n) {
                    const double dm = spec.outer[static_cast<std::size_t>(m)].d(static_cast<Index>(l));
                    const double dn = spec.outer[static_cast<std::size_t>(n)].d(static_cast<Index>(l));
                    if (dm * dn < -tol.scaled(std::abs(dm * dn))) {
                        result.verdict = CertificateVerdict::Refuted;
                        std::ostringstream os;
                        os << "outer maps " << m << " and " << n << " anti-covary on latent factor " << l
                           << " (coefficient product " << dm * dn << ")";
                        result.reason = os.str();
                        result.violating_index = static_cast<int>(l);
                        return result;
                    }
                }
            }
        }
        result.verdict = CertificateVerdict::Certified;
        result.reason = "joint orthonormality, commutation, reconstruction, and covariation verified";
    } else {
        // black-box outer maps: finite-difference sign checks at the sampled latents
        const double h = 1e-5;
        for (const Vector& z : latent_samples) {
            Matrix partials(game.players(), static_cast<Index>(L));
            for (int n = 0; n < game.players(); ++n) {
                const auto& g = spec.outer[static_cast<std::size_t>(n)];
                partials.row(n) =
                    finite_difference_gradient([&](const Vector& v) { return g.eval(v); }, z, h).transpose();
            }
            for (Index l = 0; l < static_cast<Index>(L); ++l) {
                for (int m = 0; m < game.players(); ++m) {
                    for (int n = m + 1; n < game.players(); ++n) {
                        const double prod = partials(m, l) * partials(n, l);
                        if (prod < -tol.scaled(std::abs(prod))) {
                            result.verdict = CertificateVerdict::Refuted;
                            std::ostringstream os;
                            os << "black-box outer maps " << m << " and " << n
                               << " anti-covary on latent factor " << l << " at a sampled point";
                            result.reason = os.str();
                            result.violating_index = static_cast<int>(l);
                            return result;
                        }
                    }
                }
            }
        }
        result.verdict = CertificateVerdict::CertifiedEmpirical;
        result.reason = "covariation verified only at sampled latent values (black-box outer maps)";
    }
    return result;
}

// --- Bilinear ------------------------------------------------------------------------

CertificateResult certify_bilinear(const Matrix& A, const Matrix& B, const ToleranceConfig& tol) {
    tol.validate();
    CertificateResult result;
    result.psd_left = is_psd(A.transpose() * B, tol);
    result.psd_right = is_psd(A * B.transpose(), tol);

    PairSVD pair;
    try {
        pair = simultaneous_svd_pair(A, B, tol);
    } catch (const DimensionError&) {
        throw;
    } catch (const Error& e) {
        result.verdict = CertificateVerdict::Inconclusive;
        result.reason = std::string("shared-factor diagonalization unavailable: ") + e.what();
        return result;
    }
    result.P = pair.P;
    result.Q = pair.Q;
    result.pair_D = pair.D;
    result.pair_E = pair.E;
    for (Index l = 0; l < pair.D.size(); ++l) {
        const double product = pair.D(l) * pair.E(l);
        if (product < -tol.scaled(std::abs(product))) {
            result.verdict = CertificateVerdict::Refuted;
            std::ostringstream os;
            os << "diagonal sign condition fails at coordinate " << l << " (D*E = " << product << ")";
            result.reason = os.str();
            result.violating_index = static_cast<int>(l);
            return result;
        }
    }
    result.verdict = CertificateVerdict::Certified;
    result.reason = "shared factorization found with coordinatewise nonnegative D*E";
    return result;
}

// --- Quadratic, open ---------------------------------------------------------------------

namespace {

/// Least-squares solve for a common offset with per-player residual check.
bool solve_common_offset(const std::vector<Matrix>& mats, const std::vector<Vector>& vecs,
                         const ToleranceConfig& tol, Vector& b_out, std::string& why_not) {
    const Index D = mats.front().rows();
    const Index N = static_cast<Index>(mats.size());
    Matrix stacked(N * D, D);
    Vector rhs(N * D);
    for (Index n = 0; n < N; ++n) {
        stacked.middleRows(n * D, D) = mats[static_cast<std::size_t>(n)];
        rhs.segment(n * D, D) = vecs[static_cast<std::size_t>(n)];
    }
    b_out = stacked.colPivHouseholderQr().solve(rhs);
    for (Index n = 0; n < N; ++n) {
        const Matrix& A = mats[static_cast<std::size_t>(n)];
        const Vector& v = vecs[static_cast<std::size_t>(n)];
        const double residual = (A * b_out - v).norm();
        const double scale = std::max({1.0, v.norm(), A.norm() * std::max(1.0, b_out.norm())});
        if (residual > tol.scaled(scale)) {
            std::ostringstream os;
            os << "no common offset: player " << n << " residual ||A b - b^(n)|| = " << residual;
            why_not = os.str();
            return false;
        }
    }
    return true;
}

bool sign_condition(const std::vector<Vector>& diagonals, const ToleranceConfig& tol, int& bad_index,
                    std::string& message, std::string& zero_note) {
    const Index L = diagonals.front().size();
    std::vector<Index> zero_coords;
    for (Index l = 0; l < L; ++l) {
        for (std::size_t m = 0; m < diagonals.size(); ++m) {
            for (std::size_t n = m + 1; n < diagonals.size(); ++n) {
                const double product = diagonals[m](l) * diagonals[n](l);
                const double limit = tol.scaled(std::abs(product));
                if (product < -limit) {
                    bad_index = static_cast<int>(l);
                    std::ostringstream os;
                    os << "diagonal sign condition fails for players " << m << ", " << n << " at coordinate "
                       << l << " (product " << product << ")";
                    message = os.str();
                    return false;
                }
                if (std::abs(product) <= limit &&
                    std::find(zero_coords.begin(), zero_coords.end(), l) == zero_coords.end()) {
                    zero_coords.push_back(l);
                }
            }
        }
    }
    if (!zero_coords.empty()) {
        std::ostringstream os;
        os << "coordinates with vanishing diagonal product (strict positivity not established):";
        for (Index l : zero_coords) os << ' ' << l;
        zero_note = os.str();
    }
    return true;
}

}  // namespace

CertificateResult certify_quadratic_open(const std::vector<Matrix>& mats, const std::vector<Vector>& vecs,
                                         const ToleranceConfig& tol, std::uint64_t seed) {
    tol.validate();
    if (mats.empty() || mats.size() != vecs.size()) {
        throw DimensionError("certify_quadratic_open: need one matrix and one vector per player");
    }
    CertificateResult result;
    JointDiagonalization joint;
    try {
        joint = simultaneous_diagonalize_symmetric(mats, tol, seed);
    } catch (const NotCommutingError& e) {
        result.verdict = CertificateVerdict::Inconclusive;
        result.reason = std::string("Hessians do not commute: ") + e.what();
        return result;
    }
    result.P = joint.basis;
    result.diagonals = joint.diagonals;

    std::string message;
    std::string zero_note;
    int bad = -1;
    if (!sign_condition(joint.diagonals, tol, bad, message, zero_note)) {
        result.verdict = CertificateVerdict::Refuted;
        result.reason = message;
        result.violating_index = bad;
        return result;
    }

    std::string why_not;
    if (!solve_common_offset(mats, vecs, tol, result.common_b, why_not)) {
        result.verdict = CertificateVerdict::Inconclusive;
        result.reason = why_not;
        return result;
    }
    result.verdict = CertificateVerdict::Certified;
    result.reason = "shared eigenbasis, sign-aligned diagonals, and common offset verified";
    if (!zero_note.empty()) result.reason += "; " + zero_note;
    return result;
}

// --- Quadratic, block ---------------------------------------------------------------------

namespace {

struct BlockLayout {
    std::vector<Index> sizes;
    std::vector<Index> offsets;
    Index total = 0;
};

BlockLayout make_layout(const std::vector<Index>& blocks) {
    BlockLayout layout;
    layout.sizes = blocks;
    Index off = 0;
    for (Index s : blocks) {
        if (s <= 0) throw DimensionError("certify_quadratic_block: block sizes must be positive");
        layout.offsets.push_back(off);
        off += s;
    }
    layout.total = off;
    return layout;
}

bool verify_block_witness(const std::vector<Matrix>& mats, const std::vector<Vector>& vecs,
                          const BlockLayout& layout, const BlockGameWitness& w, const ToleranceConfig& tol,
                          CertificateResult& result) {
    const Index D = layout.total;
    const std::size_t N = mats.size();
    const Index L = w.R.cols();

    // (i) orthogonal and block-diagonal P
    if (w.P.rows() != D || w.P.cols() != D) throw DimensionError("block witness: P must be D x D");
    if ((w.P.transpose() * w.P - Matrix::Identity(D, D)).norm() > tol.scaled(1.0)) {
        result.verdict = CertificateVerdict::Inconclusive;
        result.reason = "witness P is not orthogonal";
        return false;
    }
    for (std::size_t m = 0; m < layout.sizes.size(); ++m) {
        for (std::size_t n = 0; n < layout.sizes.size(); ++n) {
            if (m == n) continue;
            const double off = w.P
                                   .block(layout.offsets[m], layout.offsets[n], layout.sizes[m],
                                          layout.sizes[n])
                                   .norm();
            if (off > tol.scaled(1.0)) {
                result.verdict = CertificateVerdict::Inconclusive;
                result.reason = "witness P has nonzero off-diagonal blocks";
                return false;
            }
        }
    }
    // (ii) diagonal row-blocks of R
    if (w.R.rows() != D) throw DimensionError("block witness: R must have D rows");
    for (std::size_t m = 0; m < layout.sizes.size(); ++m) {
        for (Index i = 0; i < layout.sizes[m]; ++i) {
            for (Index l = 0; l < L; ++l) {
                if (i != l && std::abs(w.R(layout.offsets[m] + i, l)) > tol.scaled(1.0)) {
                    result.verdict = CertificateVerdict::Inconclusive;
                    result.reason = "witness R row-blocks are not diagonal";
                    return false;
                }
            }
        }
    }
    // (iii) sign condition
    if (w.diagonals.size() != N) throw DimensionError("block witness: one diagonal per player");
    std::string message;
    std::string zero_note;
    int bad = -1;
    if (!sign_condition(w.diagonals, tol, bad, message, zero_note)) {
        result.verdict = CertificateVerdict::Refuted;
        result.reason = message;
        result.violating_index = bad;
        return false;
    }
    // (iv) reconstruction with the common offset
    for (std::size_t n = 0; n < N; ++n) {
        Matrix Dl = Matrix::Zero(L, L);
        Dl.diagonal() = w.diagonals[n];
        const Matrix rebuilt = w.P * w.R * Dl * w.R.transpose() * w.P.transpose();
        const double residual = (mats[n] - rebuilt).norm();
        if (residual > tol.scaled(std::max(1.0, mats[n].norm()))) {
            result.verdict = CertificateVerdict::Inconclusive;
            std::ostringstream os;
            os << "witness does not reconstruct A^(" << n << ") (residual " << residual << ")";
            result.reason = os.str();
            return false;
        }
        const double b_residual = (mats[n] * w.b - vecs[n]).norm();
        if (b_residual > tol.scaled(std::max(1.0, vecs[n].norm()))) {
            result.verdict = CertificateVerdict::Inconclusive;
            std::ostringstream os;
            os << "witness offset does not reproduce b^(" << n << ") (residual " << b_residual << ")";
            result.reason = os.str();
            return false;
        }
    }
    result.P = w.P;
    result.R = w.R;
    result.diagonals = w.diagonals;
    result.common_b = w.b;
    result.verdict = CertificateVerdict::Certified;
    result.reason = "witness verified: block structure, sign condition, reconstruction, and common offset";
    if (!zero_note.empty()) result.reason += "; " + zero_note;
    return true;
}

}  // namespace

CertificateResult certify_quadratic_block(const std::vector<Matrix>& mats, const std::vector<Vector>& vecs,
                                          const std::vector<Index>& blocks, const ToleranceConfig& tol,
                                          std::uint64_t seed, const std::optional<BlockGameWitness>& witness) {
    tol.validate();
    if (mats.empty() || mats.size() != vecs.size()) {
        throw DimensionError("certify_quadratic_block: need one matrix and one vector per player");
    }
    if (blocks.size() != mats.size()) {
        throw DimensionError("certify_quadratic_block: one coordinate block per player expected");
    }
    const BlockLayout layout = make_layout(blocks);
    if (layout.total != mats.front().rows()) {
        throw DimensionError("certify_quadratic_block: blocks do not partition the coordinates");
    }
    CertificateResult result;
    if (witness) {
        verify_block_witness(mats, vecs, layout, *witness, tol, result);
        return result;
    }

    const std::size_t n_blocks = blocks.size();
    const std::size_t N = mats.size();

    // Per-block joint diagonalization of the diagonal sub-blocks.
    std::vector<Matrix> block_bases(n_blocks);
    for (std::size_t m = 0; m < n_blocks; ++m) {
        std::vector<Matrix> subs;
        for (std::size_t n = 0; n < N; ++n) {
            subs.push_back(mats[n].block(layout.offsets[m], layout.offsets[m], layout.sizes[m],
                                         layout.sizes[m]));
        }
        try {
            block_bases[m] = simultaneous_diagonalize_symmetric(subs, tol, derive_seed(seed, m)).basis;
        } catch (const Error& e) {
            result.verdict = CertificateVerdict::Inconclusive;
            std::ostringstream os;
            os << "block " << m << " sub-Hessians cannot be jointly diagonalized: " << e.what();
            result.reason = os.str();
            return result;
        }
    }

    // Align every block's latent ordering against the largest block.
    std::size_t ref = 0;
    for (std::size_t m = 1; m < n_blocks; ++m) {
        if (layout.sizes[m] > layout.sizes[ref]) ref = m;
    }
    double scale = 1.0;
    for (const Matrix& A : mats) scale = std::max(scale, A.norm());
    for (std::size_t m = 0; m < n_blocks; ++m) {
        if (m == ref) continue;
        Matrix cross_abs = Matrix::Zero(layout.sizes[ref], layout.sizes[m]);
        for (std::size_t n = 0; n < N; ++n) {
            const Matrix cross = block_bases[ref].transpose() *
                                 mats[n].block(layout.offsets[ref], layout.offsets[m], layout.sizes[ref],
                                               layout.sizes[m]) *
                                 block_bases[m];
            cross_abs += cross.cwiseAbs();
        }
        std::vector<Index> target(static_cast<std::size_t>(layout.sizes[m]), Index{-1});
        std::vector<bool> used(static_cast<std::size_t>(layout.sizes[m]), false);
        for (Index j = 0; j < layout.sizes[m]; ++j) {
            Index best = -1;
            double best_value = tol.scaled(scale);
            for (Index i = 0; i < std::min(layout.sizes[ref], layout.sizes[m]); ++i) {
                if (used[static_cast<std::size_t>(i)]) continue;
                if (cross_abs(i, j) > best_value) {
                    best_value = cross_abs(i, j);
                    best = i;
                }
            }
            if (best >= 0) {
                target[static_cast<std::size_t>(j)] = best;
                used[static_cast<std::size_t>(best)] = true;
            }
        }
        // unmatched columns take the remaining slots in order
        for (Index j = 0; j < layout.sizes[m]; ++j) {
            if (target[static_cast<std::size_t>(j)] >= 0) continue;
            for (Index i = 0; i < layout.sizes[m]; ++i) {
                if (!used[static_cast<std::size_t>(i)]) {
                    target[static_cast<std::size_t>(j)] = i;
                    used[static_cast<std::size_t>(i)] = true;
                    break;
                }
            }
        }
        Matrix permuted(layout.sizes[m], layout.sizes[m]);
        for (Index j = 0; j < layout.sizes[m]; ++j) {
            permuted.col(target[static_cast<std::size_t>(j)]) = block_bases[m].col(j);
        }
        block_bases[m] = std::move(permuted);
    }

    Matrix P = Matrix::Zero(layout.total, layout.total);
    for (std::size_t m = 0; m < n_blocks; ++m) {
        P.block(layout.offsets[m], layout.offsets[m], layout.sizes[m], layout.sizes[m]) = block_bases[m];
    }

    // In the recovered basis every block of every Hessian must be diagonal.
    std::vector<Matrix> rotated(N);
    for (std::size_t n = 0; n < N; ++n) {
        rotated[n] = P.transpose() * mats[n] * P;
        Matrix off = rotated[n];
        for (std::size_t m = 0; m < n_blocks; ++m) {
            for (std::size_t mm = 0; mm < n_blocks; ++mm) {
                auto block = off.block(layout.offsets[m], layout.offsets[mm], layout.sizes[m],
                                       layout.sizes[mm]);
                for (Index i = 0; i < std::min(layout.sizes[m], layout.sizes[mm]); ++i) block(i, i) = 0.0;
            }
        }
        if (off.norm() > tol.scaled(std::max(1.0, mats[n].norm()))) {
            result.verdict = CertificateVerdict::Inconclusive;
            std::ostringstream os;
            os << "recovered block basis does not make A^(" << n
               << ") blockwise diagonal (residual " << off.norm() << ")";
            result.reason = os.str();
            return result;
        }
    }

    // Latent-wise rank-one factorization over the blocks.
    const Index L = *std::max_element(layout.sizes.begin(), layout.sizes.end());
    Matrix R = Matrix::Zero(layout.total, L);
    std::vector<Vector> diagonals(N, Vector::Zero(L));
    const Index nb = static_cast<Index>(n_blocks);
    for (Index l = 0; l < L; ++l) {
        std::vector<Index> present;
        for (Index m = 0; m < nb; ++m) {
            if (l < layout.sizes[static_cast<std::size_t>(m)]) present.push_back(m);
        }
        const Index p = static_cast<Index>(present.size());
        std::vector<Matrix> H(N, Matrix::Zero(p, p));
        double magnitude = 0.0;
        std::size_t lead = 0;
        for (std::size_t n = 0; n < N; ++n) {
            for (Index a = 0; a < p; ++a) {
                for (Index c = 0; c < p; ++c) {
                    const Index ma = present[static_cast<std::size_t>(a)];
                    const Index mc = present[static_cast<std::size_t>(c)];
                    H[n](a, c) = rotated[n](layout.offsets[static_cast<std::size_t>(ma)] + l,
                                            layout.offsets[static_cast<std::size_t>(mc)] + l);
                }
            }
            if (H[n].norm() > magnitude) {
                magnitude = H[n].norm();
                lead = n;
            }
        }
        if (magnitude <= tol.scaled(scale)) continue;  // latent absent from every loss

        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (H[lead] + H[lead].transpose()));
        Index top = 0;
        es.eigenvalues().cwiseAbs().maxCoeff(&top);
        Vector v = es.eigenvectors().col(top);
        for (Index i = 0; i < v.size(); ++i) {
            if (std::abs(v(i)) > 1e-12) {
                if (v(i) < 0.0) v = -v;
                break;
            }
        }
        for (Index a = 0; a < p; ++a) {
            const Index m = present[static_cast<std::size_t>(a)];
            R(layout.offsets[static_cast<std::size_t>(m)] + l, l) = v(a);
        }
        for (std::size_t n = 0; n < N; ++n) diagonals[n](l) = v.dot(H[n] * v);
    }

    BlockGameWitness recovered{P, R, diagonals, Vector()};
    std::string why_not;
    if (!solve_common_offset(mats, vecs, tol, recovered.b, why_not)) {
        result.verdict = CertificateVerdict::Inconclusive;
        result.reason = why_not;
        return result;
    }
    verify_block_witness(mats, vecs, layout, recovered, tol, result);
    if (result.verdict == CertificateVerdict::Inconclusive) {
        result.reason = "constructive recovery failed verification: " + result.reason;
    }
    return result;
}

// --- Multilinear ---------------------------------------------------------------

CertificateResult certify_multilinear(const std::vector<DenseTensor>& tensors,
                                      const std::vector<Matrix>& shared_factors,
                                      const std::vector<Vector>& diagonals, const ToleranceConfig& tol) {
    tol.validate();
    if (tensors.empty() || tensors.size() != diagonals.size()) {
        throw DimensionError("certify_multilinear: need one diagonal per tensor");
    }
    const auto& dims = tensors.front().dims();
    for (const DenseTensor& T : tensors) {
        if (T.dims() != dims) throw DimensionError("certify_multilinear: tensors have unequal dims");
    }
    CertificateResult result;
    for (std::size_t n = 0; n < tensors.size(); ++n) {
        TensorSVDFactors f{shared_factors, diagonals[n]};
        const double limit = tol.scaled(std::max(1.0, tensors[n].norm()));
        if (!verify_tensor_svd(tensors[n], f, limit, tol)) {
            result.verdict = CertificateVerdict::Refuted;
            std::ostringstream os;
            os << "tensor " << n << " fails verification against the shared factors";
            result.reason = os.str();
            return result;
        }
    }
    std::string message;
    std::string zero_note;
    int bad = -1;
    if (!sign_condition(diagonals, tol, bad, message, zero_note)) {
        result.verdict = CertificateVerdict::Refuted;
        result.reason = message;
        result.violating_index = bad;
        return result;
    }
    result.diagonals = diagonals;
    result.verdict = CertificateVerdict::Certified;
    result.reason = "shared tensor factorization and sign-aligned diagonals verified";
    if (!zero_note.empty()) result.reason += "; " + zero_note;
    return result;
}

// --- Potential games ---------------------------------------------------------------------

PotentialCheck potential_check_bilinear(const Matrix& A, const Matrix& B, const ToleranceConfig& tol) {
    tol.validate();
    if (A.rows() != B.rows() || A.cols() != B.cols()) {
        throw DimensionError("potential_check_bilinear: shape mismatch");
    }
    PotentialCheck check;
    const double a2 = A.squaredNorm();
    const double b2 = B.squaredNorm();
    if (a2 == 0.0 && b2 == 0.0) {
        check.is_potential = true;
        check.ratio = 1.0;
        check.weights = Vector::Ones(2);
        check.note = "both cross terms vanish; any potential works";
        return check;
    }
    if (a2 == 0.0 || b2 == 0.0) {
        check.is_potential = false;
        check.note = "exactly one cross term vanishes; no positive proportionality exists";
        return check;
    }
    const double c = (A.cwiseProduct(B)).sum() / a2;
    const double residual = (B - c * A).norm();
    if (residual <= tol.scaled(B.norm()) && c > 0.0) {
        check.is_potential = true;
        check.ratio = c;
        check.weights = Vector(2);
        check.weights << 1.0, c;
        check.note = "B = c A with c > 0; the first player's bilinear term serves as the potential";
    } else {
        check.is_potential = false;
        check.ratio = c;
        std::ostringstream os;
        os << "cross terms are not positively proportional (best c = " << c << ", residual " << residual
           << ")";
        check.note = os.str();
    }
    return check;
}

namespace {

std::vector<std::vector<Index>> owned_coordinates(const Game& game) {
    std::vector<std::vector<Index>> owned(2);
    for (int n = 0; n < 2; ++n) {
        const Matrix pi = game.player_projection(n).matrix();
        for (Index i = 0; i < game.dim(); ++i) {
            Vector e = Vector::Zero(game.dim());
            e(i) = 1.0;
            if ((pi * e - e).norm() <= 1e-12) owned[static_cast<std::size_t>(n)].push_back(i);
        }
    }
    if (owned[0].size() + owned[1].size() != static_cast<std::size_t>(game.dim())) {
        throw Error("potential_check_two_player: players must own axis-aligned complementary blocks");
    }
    return owned;
}

Matrix cross_block_of_loss(const LossSpec& loss, const std::vector<Index>& rows,
                           const std::vector<Index>& cols, Index dim) {
    return std::visit(
        [&](const auto& l) -> Matrix {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, BilinearLoss>) {
                if (l.left_dim != static_cast<Index>(rows.size())) {
                    throw DimensionError("potential check: bilinear split does not match player blocks");
                }
                return l.A;
            } else if constexpr (std::is_same_v<L, QuadraticLoss>) {
                Matrix cross(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
                for (std::size_t i = 0; i < rows.size(); ++i)
                    for (std::size_t j = 0; j < cols.size(); ++j) cross(static_cast<Index>(i),
                                                                        static_cast<Index>(j)) =
                        l.A(rows[i], cols[j]);
                return cross;
            } else if constexpr (std::is_same_v<L, MultilinearLoss>) {
                if (l.tensor.order() != 2) {
                    throw Error("potential check: only order-2 multilinear losses supported");
                }
                (void)dim;
                return matricize(l.tensor, 0);
            } else {
                throw Error("potential check: black-box losses are not supported");
            }
        },
        loss);
}

}  // namespace

PotentialCheck potential_check_two_player(const Game& game, const ToleranceConfig& tol) {
    if (game.players() != 2 || !game.is_block_game()) {
        throw Error("potential_check_two_player: requires a two-player block game");
    }
    const auto owned = owned_coordinates(game);
    const Matrix cross1 = cross_block_of_loss(game.losses[0], owned[0], owned[1], game.dim());
    const Matrix cross2 = cross_block_of_loss(game.losses[1], owned[0], owned[1], game.dim());
    return potential_check_bilinear(cross1, cross2, tol);
}

// --- HOSVD insufficiency -----------------------------------------------------------------

std::optional<InsufficiencyWitness> pair_violation_search(const DenseTensor& first,
                                                          const DenseTensor& second, std::uint64_t seed,
                                                          int trials) {
    if (first.dims() != second.dims()) throw DimensionError("pair_violation_search: dims mismatch");
    const int N = first.order();
    std::optional<InsufficiencyWitness> best;
    for (int t = 0; t < trials; ++t) {
        auto rng = make_rng(seed, static_cast<std::uint64_t>(t));
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<Vector> point;
        for (Index d : first.dims()) {
            Vector v(d);
            for (Index i = 0; i < d; ++i) v(i) = gauss(rng);
            const double norm = v.norm();
            point.push_back(norm > 0 ? Vector(v / norm) : Vector(Vector::Unit(d, 0)));
        }
        for (int n = 0; n < N; ++n) {
            std::vector<Vector> rest;
            for (int m = 0; m < N; ++m) {
                if (m != n) rest.push_back(point[static_cast<std::size_t>(m)]);
            }
            const Vector ga = partial_contract(first, rest, n);
            const Vector gb = partial_contract(second, rest, n);
            const double value = ga.dot(gb);
            const double limit = -1e-9 * std::max(1.0, ga.norm() * gb.norm());
            if (value < limit && (!best || value < best->value)) {
                best = InsufficiencyWitness{first, second, {}, point, n, value};
            }
        }
    }
    return best;
}

std::optional<InsufficiencyWitness> hosvd_insufficiency_search(const std::vector<Index>& dims,
                                                               std::uint64_t seed, int trials) {
    for (Index d : dims) {
        if (d <= 0) throw DimensionError("hosvd_insufficiency_search: bad dims");
    }
    const int points_per_pair = 8;
    for (int t = 0; t < trials; ++t) {
        const std::uint64_t trial_seed = derive_seed(seed, static_cast<std::uint64_t>(t));
        auto rng = make_rng(trial_seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<Matrix> factors;
        for (std::size_t m = 0; m < dims.size(); ++m) {
            factors.push_back(random_orthogonal(dims[m], derive_seed(trial_seed, 100 + m)));
        }
        auto random_core = [&]() {
            DenseTensor core = DenseTensor::zeros(dims);
            for (Index i = 0; i < core.size(); ++i) core.entries()(i) = gauss(rng);
            return core;
        };
        DenseTensor first = random_core();
        DenseTensor second = random_core();
        for (std::size_t m = 0; m < dims.size(); ++m) {
            first = n_mode_product(first, factors[m], static_cast<int>(m));
            second = n_mode_product(second, factors[m], static_cast<int>(m));
        }
        auto witness = pair_violation_search(first, second, derive_seed(trial_seed, 7), points_per_pair);
        if (witness) {
            witness->shared_factors = factors;
            return witness;
        }
    }
    return std::nullopt;
}

}  // namespace safegame
