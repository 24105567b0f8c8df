#pragma once

#include "safegame/tensor.hpp"

#include <functional>
#include <optional>
#include <variant>
#include <vector>

namespace safegame {

/// Mutually annihilating orthogonal projections summing to the identity.
/// A rank-R structure on a D-dimensional space; rank D is an orthogonal
/// basis, rank 1 is a single identity projection.
class TypeStructure {
  public:
    TypeStructure(Index dim, std::vector<Matrix> bases, const ToleranceConfig& tol = {});

    /// One axis-aligned projection per contiguous coordinate block.
    static TypeStructure blocks(const std::vector<Index>& sizes);
    /// Single identity projection.
    static TypeStructure open(Index dim);

    Index dim() const { return dim_; }
    int rank() const { return static_cast<int>(projections_.size()); }
    const Projection& projection(int r) const { return projections_.at(static_cast<std::size_t>(r)); }
    const std::vector<Projection>& projections() const { return projections_; }

  private:
    Index dim_ = 0;
    std::vector<Projection> projections_;
};

// --- Feasible sets ---------------------------------------------------------

struct Unconstrained {};

struct Ball {
    Vector center;
    double radius = 1.0;
};

struct Box {
    Vector lo;
    Vector hi;
};

/// Product of probability simplices over contiguous coordinate blocks.
struct BlockSimplex {
    std::vector<Index> block_sizes;
};

using FeasibleSet = std::variant<Unconstrained, Ball, Box, BlockSimplex>;

/// Euclidean projection onto the feasible set. Idempotent; feasible points
/// are returned unchanged.
Vector project_feasible(const FeasibleSet& set, const Vector& x);
bool feasible_contains(const FeasibleSet& set, const Vector& x, double tol = 1e-9);
/// Euclidean diameter; +infinity when unconstrained.
double feasible_diameter(const FeasibleSet& set, Index dim);
void validate_feasible(const FeasibleSet& set, Index dim);

/// Euclidean projection of a vector onto the probability simplex
/// (sort-and-threshold).
Vector project_simplex(const Vector& x);

// --- Loss families ----------------------------------------------------------

/// Two-player bilinear loss l(w) = w_left^T A w_right where the joint action
/// splits as (w_left, w_right) with left_dim leading coordinates.
struct BilinearLoss {
    Matrix A;
    Index left_dim = 0;
};

/// l(w) = 1/2 w^T A w + w^T b; A is symmetrized on construction.
struct QuadraticLoss {
    QuadraticLoss(Matrix A_in, Vector b_in);
    Matrix A;
    Vector b;
};

/// l(w) = T x_1 w_1 ... x_N w_N with w split into blocks matching the
/// tensor dims.
struct MultilinearLoss {
    DenseTensor tensor;
};

struct BlackBoxLoss {
    std::function<double(const Vector&)> f;
    bool thread_safe = true;
    double fd_step = 1e-5;  // scaled by max(1, |w_i|) per coordinate
};

using LossSpec = std::variant<BilinearLoss, QuadraticLoss, MultilinearLoss, BlackBoxLoss>;

double loss_value(const LossSpec& loss, const Vector& w);
Vector loss_gradient(const LossSpec& loss, const Vector& w);

/// Central finite differences with per-coordinate step h*max(1, |w_i|).
Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& w,
                                  double h = 1e-5);

// --- Game -------------------------------------------------------------------

/// A game: type structure, player-to-projection assignment, one loss per
/// player, and a feasible set. Immutable after construction.
struct Game {
    TypeStructure types;
    std::vector<int> assignment;   // rho, 0-based projection index per player
    std::vector<LossSpec> losses;  // one per player
    FeasibleSet feasible;

    Game(TypeStructure t, std::vector<int> rho, std::vector<LossSpec> l, FeasibleSet h);

    int players() const { return static_cast<int>(losses.size()); }
    Index dim() const { return types.dim(); }
    const Projection& player_projection(int n) const {
        return types.projection(assignment.at(static_cast<std::size_t>(n)));
    }
    /// True when the structure is the classical one: one projection per
    /// player with rho the identity.
    bool is_block_game() const;
};

double loss_eval(const Game& game, int player, const Vector& w);
Vector gradient(const Game& game, int player, const Vector& w);
Vector projected_player_gradient(const Game& game, int player, const Vector& w);

/// Lemma-3 test: the game decomposes iff every loss depends only on the
/// player's own coordinates, checked at seeded sample points.
bool is_decomposable(const Game& game, int samples, double tol, std::uint64_t seed = 0x10ca1ULL);

}  // namespace safegame
