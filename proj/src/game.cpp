#include "safegame/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace safegame {

// --- TypeStructure ----------------------------------------------------------

TypeStructure::TypeStructure(Index dim, std::vector<Matrix> bases, const ToleranceConfig& tol)
    : dim_(dim) {
    if (bases.empty()) throw DimensionError("TypeStructure: at least one projection required");
    Index total_cols = 0;
    for (std::size_t r = 0; r < bases.size(); ++r) {
        if (bases[r].rows() != dim) {
            throw DimensionError("TypeStructure: projection basis row count does not match dim");
        }
        projections_.push_back(make_projection(bases[r], tol));
        total_cols += bases[r].cols();
    }
    if (total_cols != dim) {
        std::ostringstream os;
        os << "TypeStructure: basis columns sum to " << total_cols << ", expected " << dim;
        throw DimensionError(os.str());
    }
    for (std::size_t r = 0; r < bases.size(); ++r) {
        for (std::size_t s = r + 1; s < bases.size(); ++s) {
            const double cross = (bases[r].transpose() * bases[s]).norm();
            if (cross > tol.scaled(1.0)) {
                std::ostringstream os;
                os << "TypeStructure: projections " << r << " and " << s
                   << " are not mutually annihilating (cross Gram norm " << cross << ")";
                throw Error(os.str());
            }
        }
    }
    Matrix sum = Matrix::Zero(dim, dim);
    for (const Projection& p : projections_) sum += p.matrix();
    if ((sum - Matrix::Identity(dim, dim)).norm() > tol.scaled(1.0)) {
        throw Error("TypeStructure: projections do not sum to the identity");
    }
}

TypeStructure TypeStructure::blocks(const std::vector<Index>& sizes) {
    Index dim = std::accumulate(sizes.begin(), sizes.end(), Index{0});
    std::vector<Matrix> bases;
    Index offset = 0;
    for (Index s : sizes) {
        Matrix P = Matrix::Zero(dim, s);
        for (Index j = 0; j < s; ++j) P(offset + j, j) = 1.0;
        bases.push_back(std::move(P));
        offset += s;
    }
    return TypeStructure(dim, std::move(bases));
}

TypeStructure TypeStructure::open(Index dim) {
    std::vector<Matrix> bases{Matrix::Identity(dim, dim)};
    return TypeStructure(dim, std::move(bases));
}

// --- Feasible sets -----------------------------------------------------------

Vector project_simplex(const Vector& x) {
    const Index n = x.size();
    std::vector<double> u(x.data(), x.data() + n);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cumsum = 0.0;
    double tau = 0.0;
    Index rho = 0;
    for (Index i = 0; i < n; ++i) {
        cumsum += u[static_cast<std::size_t>(i)];
        const double candidate = (cumsum - 1.0) / static_cast<double>(i + 1);
        if (u[static_cast<std::size_t>(i)] - candidate > 0.0) {
            rho = i + 1;
            tau = candidate;
        }
    }
    (void)rho;
    Vector out(n);
    for (Index i = 0; i < n; ++i) out(i) = std::max(x(i) - tau, 0.0);
    return out;
}

Vector project_feasible(const FeasibleSet& set, const Vector& x) {
    return std::visit(
        [&](const auto& s) -> Vector {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Unconstrained>) {
                return x;
            } else if constexpr (std::is_same_v<S, Ball>) {
                Vector delta = x - s.center;
                const double norm = delta.norm();
                if (norm <= s.radius) return x;
                return s.center + (s.radius / norm) * delta;
            } else if constexpr (std::is_same_v<S, Box>) {
                return x.cwiseMax(s.lo).cwiseMin(s.hi);
            } else {
                Vector out(x.size());
                Index offset = 0;
                for (Index bs : s.block_sizes) {
                    out.segment(offset, bs) = project_simplex(x.segment(offset, bs));
                    offset += bs;
                }
                return out;
            }
        },
        set);
}

bool feasible_contains(const FeasibleSet& set, const Vector& x, double tol) {
    return std::visit(
        [&](const auto& s) -> bool {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Unconstrained>) {
                return true;
            } else if constexpr (std::is_same_v<S, Ball>) {
                return (x - s.center).norm() <= s.radius + tol;
            } else if constexpr (std::is_same_v<S, Box>) {
                return (x.array() >= s.lo.array() - tol).all() && (x.array() <= s.hi.array() + tol).all();
            } else {
                Index offset = 0;
                for (Index bs : s.block_sizes) {
                    const auto seg = x.segment(offset, bs);
                    if ((seg.array() < -tol).any()) return false;
                    if (std::abs(seg.sum() - 1.0) > tol) return false;
                    offset += bs;
                }
                return true;
            }
        },
        set);
}

double feasible_diameter(const FeasibleSet& set, Index dim) {
    return std::visit(
        [&](const auto& s) -> double {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Unconstrained>) {
                (void)dim;
                return std::numeric_limits<double>::infinity();
            } else if constexpr (std::is_same_v<S, Ball>) {
                return 2.0 * s.radius;
            } else if constexpr (std::is_same_v<S, Box>) {
                return (s.hi - s.lo).norm();
            } else {
                // each simplex has Euclidean diameter sqrt(2)
                return std::sqrt(2.0 * static_cast<double>(s.block_sizes.size()));
            }
        },
        set);
}

void validate_feasible(const FeasibleSet& set, Index dim) {
    std::visit(
        [&](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Ball>) {
                if (s.center.size() != dim) throw DimensionError("Ball: center dimension mismatch");
                if (!(s.radius > 0.0)) throw Error("Ball: radius must be strictly positive");
            } else if constexpr (std::is_same_v<S, Box>) {
                if (s.lo.size() != dim || s.hi.size() != dim) {
                    throw DimensionError("Box: bound dimension mismatch");
                }
                if ((s.lo.array() > s.hi.array()).any()) throw Error("Box: lo must not exceed hi");
            } else if constexpr (std::is_same_v<S, BlockSimplex>) {
                Index total = 0;
                for (Index bs : s.block_sizes) {
                    if (bs <= 0) throw Error("BlockSimplex: block sizes must be positive");
                    total += bs;
                }
                if (total != dim) throw DimensionError("BlockSimplex: blocks do not partition the coordinates");
            }
        },
        set);
}

// --- Loss families ------------------------------------------------------------

QuadraticLoss::QuadraticLoss(Matrix A_in, Vector b_in) : A(std::move(A_in)), b(std::move(b_in)) {
    if (A.rows() != A.cols()) throw DimensionError("QuadraticLoss: A must be square");
    if (b.size() != A.rows()) throw DimensionError("QuadraticLoss: b dimension mismatch");
    A = 0.5 * (A + A.transpose().eval());
}

namespace {

std::vector<Vector> split_blocks(const DenseTensor& T, const Vector& w) {
    std::vector<Vector> blocks;
    Index offset = 0;
    for (Index d : T.dims()) {
        if (offset + d > w.size()) throw DimensionError("multilinear loss: action too short for tensor dims");
        blocks.push_back(w.segment(offset, d));
        offset += d;
    }
    if (offset != w.size()) throw DimensionError("multilinear loss: action length does not match tensor dims");
    return blocks;
}

}  // namespace

Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& w,
                                  double h) {
    Vector g(w.size());
    Vector probe = w;
    for (Index i = 0; i < w.size(); ++i) {
        const double step = h * std::max(1.0, std::abs(w(i)));
        probe(i) = w(i) + step;
        const double up = f(probe);
        probe(i) = w(i) - step;
        const double down = f(probe);
        probe(i) = w(i);
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw Error("finite_difference_gradient: loss evaluation returned a non-finite value");
        }
        g(i) = (up - down) / (2.0 * step);
    }
    return g;
}

double loss_value(const LossSpec& loss, const Vector& w) {
    return std::visit(
        [&](const auto& l) -> double {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, BilinearLoss>) {
                if (l.left_dim <= 0 || l.left_dim >= w.size()) {
                    throw DimensionError("BilinearLoss: invalid left block size");
                }
                if (l.A.rows() != l.left_dim || l.A.cols() != w.size() - l.left_dim) {
                    throw DimensionError("BilinearLoss: matrix shape does not match blocks");
                }
                return w.head(l.left_dim).dot(l.A * w.tail(w.size() - l.left_dim));
            } else if constexpr (std::is_same_v<L, QuadraticLoss>) {
                if (w.size() != l.A.rows()) throw DimensionError("QuadraticLoss: action dimension mismatch");
                return 0.5 * w.dot(l.A * w) + w.dot(l.b);
            } else if constexpr (std::is_same_v<L, MultilinearLoss>) {
                return multilinear_eval(l.tensor, split_blocks(l.tensor, w));
            } else {
                const double v = l.f(w);
                if (!std::isfinite(v)) throw Error("BlackBoxLoss: evaluation returned a non-finite value");
                return v;
            }
        },
        loss);
}

Vector loss_gradient(const LossSpec& loss, const Vector& w) {
    return std::visit(
        [&](const auto& l) -> Vector {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, BilinearLoss>) {
                const Index ld = l.left_dim;
                Vector g(w.size());
                g.head(ld) = l.A * w.tail(w.size() - ld);
                g.tail(w.size() - ld) = l.A.transpose() * w.head(ld);
                return g;
            } else if constexpr (std::is_same_v<L, QuadraticLoss>) {
                return l.A * w + l.b;
            } else if constexpr (std::is_same_v<L, MultilinearLoss>) {
                const auto blocks = split_blocks(l.tensor, w);
                Vector g(w.size());
                Index offset = 0;
                for (int n = 0; n < l.tensor.order(); ++n) {
                    std::vector<Vector> rest;
                    for (int m = 0; m < l.tensor.order(); ++m) {
                        if (m != n) rest.push_back(blocks[static_cast<std::size_t>(m)]);
                    }
                    const Vector block_grad = partial_contract(l.tensor, rest, n);
                    g.segment(offset, block_grad.size()) = block_grad;
                    offset += block_grad.size();
                }
                return g;
            } else {
                return finite_difference_gradient(l.f, w, l.fd_step);
            }
        },
        loss);
}

// --- Game ------------------------------------------------------------------

Game::Game(TypeStructure t, std::vector<int> rho, std::vector<LossSpec> l, FeasibleSet h)
    : types(std::move(t)), assignment(std::move(rho)), losses(std::move(l)), feasible(std::move(h)) {
    if (assignment.size() != losses.size()) {
        throw DimensionError("Game: assignment and loss counts differ");
    }
    if (losses.empty()) throw DimensionError("Game: at least one player required");
    for (int r : assignment) {
        if (r < 0 || r >= types.rank()) throw DimensionError("Game: assignment index out of range");
    }
    validate_feasible(feasible, types.dim());
}

bool Game::is_block_game() const {
    if (types.rank() != players()) return false;
    for (int n = 0; n < players(); ++n) {
        if (assignment[static_cast<std::size_t>(n)] != n) return false;
    }
    return true;
}

double loss_eval(const Game& game, int player, const Vector& w) {
    if (w.size() != game.dim()) throw DimensionError("loss_eval: action dimension mismatch");
    return loss_value(game.losses.at(static_cast<std::size_t>(player)), w);
}

Vector gradient(const Game& game, int player, const Vector& w) {
    if (w.size() != game.dim()) throw DimensionError("gradient: action dimension mismatch");
    return loss_gradient(game.losses.at(static_cast<std::size_t>(player)), w);
}

Vector projected_player_gradient(const Game& game, int player, const Vector& w) {
    return game.player_projection(player).apply(gradient(game, player, w));
}

bool is_decomposable(const Game& game, int samples, double tol, std::uint64_t seed) {
    if (!game.is_block_game()) {
        throw Error("is_decomposable: only block games decompose player-wise");
    }
    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    for (int s = 0; s < samples; ++s) {
        Vector w(game.dim());
        for (Index i = 0; i < w.size(); ++i) w(i) = coord(rng);
        for (int m = 0; m < game.players(); ++m) {
            const Vector projected = game.player_projection(m).apply(w);
            if (std::abs(loss_eval(game, m, w) - loss_eval(game, m, projected)) > tol) return false;
        }
    }
    return true;
}

}  // namespace safegame
