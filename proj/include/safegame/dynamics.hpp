#pragma once

#include "safegame/safety.hpp"

#include <iosfwd>

namespace safegame {

struct DynamicsConfig {
    enum class Schedule { Constant, Decaying };  // eta or c / sqrt(t), t = 1, 2, ...
    Schedule schedule = Schedule::Decaying;
    /// Constant step, or the decay constant c. Zero picks
    /// c = 0.1 * diam(feasible set) (fallback 0.1 when unbounded).
    double eta = 0.0;
    int max_rounds = 10000;
    /// Converged when ||w^{t+1} - w^t|| <= convergence_tol * eta_t.
    double convergence_tol = 1e-9;
    /// Strictly positive per-player potential weights; empty means all ones.
    Vector weights;
    /// Round-robin applies one projected step (and projection) per player in
    /// turn; the default updates all players simultaneously with a single
    /// projection per round.
    bool round_robin = false;
    std::uint64_t seed = 0;
};

struct Trajectory {
    std::vector<Vector> points;  // w^0 .. w^T
    Matrix losses;               // (T+1) x N
    Vector potential;            // (T+1)
    Vector min_safety;           // (T+1), min entry of the pairwise matrix
    std::vector<double> steps;   // eta_t used at round t (size T)
    enum class Termination { MaxRounds, Converged } reason = Termination::MaxRounds;

    int rounds() const { return static_cast<int>(points.size()) - 1; }
    const Vector& terminal() const { return points.back(); }
};

double step_size(const DynamicsConfig& cfg, const Game& game, int round);

/// Simultaneous projected gradient descent: every player applies its
/// projected gradient, then one Euclidean projection returns the joint
/// action to the feasible set.
Trajectory simulate(const Game& game, const Vector& w0, const DynamicsConfig& cfg);

std::vector<double> potential_trace(const Game& game, const Trajectory& trajectory, const Vector& alpha);

/// min over players m of <pi_m grad Phi, grad l_m> - alpha_m ||pi_m grad l_m||^2
/// with Phi = sum alpha_n l_n; nonnegative up to tolerance in safe games.
double descent_direction_check(const Game& game, const Vector& w, const Vector& alpha);

struct NashProbeConfig {
    double tol = 1e-3;
    int random_probes = 64;
    int magnitudes = 8;  // geometric ladder from tol to the feasible diameter
    std::uint64_t seed = 0x4a5bULL;
};

struct NashVerdict {
    std::vector<bool> player_ok;
    std::vector<double> projected_gradient_norm;  // first-order proxy per player
    Vector best_deviation;                        // most-improving probe found
    int violating_player = -1;
    double best_improvement = 0.0;

    bool all_ok() const {
        for (bool ok : player_ok) {
            if (!ok) return false;
        }
        return true;
    }
};

/// Brute-force Nash probe: unilateral perturbations in each player's
/// projection range, kept when feasible (a projected candidate is accepted
/// only when projecting did not move the other players' coordinates).
NashVerdict nash_check(const Game& game, const Vector& w, const NashProbeConfig& cfg = {});

/// Header `round,w_1..w_D,loss_1..loss_N,potential,min_safety`, one row per
/// recorded round, floats with 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory);

}  // namespace safegame
