#include "safegame/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

namespace safegame {

namespace {

Vector resolve_weights(const Game& game, const Vector& weights) {
    if (weights.size() == 0) return Vector::Ones(game.players());
    if (weights.size() != game.players()) {
        throw DimensionError("dynamics: one weight per player required");
    }
    if ((weights.array() <= 0.0).any()) throw Error("dynamics: weights must be strictly positive");
    return weights;
}

}  // namespace

double step_size(const DynamicsConfig& cfg, const Game& game, int round) {
    double base = cfg.eta;
    if (base <= 0.0) {
        const double diam = feasible_diameter(game.feasible, game.dim());
        base = std::isfinite(diam) ? 0.1 * diam : 0.1;
    }
    if (cfg.schedule == DynamicsConfig::Schedule::Constant) return base;
    return base / std::sqrt(static_cast<double>(round));
}

Trajectory simulate(const Game& game, const Vector& w0, const DynamicsConfig& cfg) {
    if (w0.size() != game.dim()) throw DimensionError("simulate: start dimension mismatch");
    if (!feasible_contains(game.feasible, w0, 1e-9)) {
        throw Error("simulate: starting point is infeasible");
    }
    if (cfg.max_rounds < 0) throw Error("simulate: max_rounds must be nonnegative");
    const Vector alpha = resolve_weights(game, cfg.weights);
    const int N = game.players();

    Trajectory traj;
    traj.losses.resize(cfg.max_rounds + 1, N);
    traj.potential.resize(cfg.max_rounds + 1);
    traj.min_safety.resize(cfg.max_rounds + 1);

    auto record = [&](const Vector& w, int t) {
        for (int n = 0; n < N; ++n) {
            const double value = loss_eval(game, n, w);
            if (!std::isfinite(value)) throw Error("simulate: loss became non-finite");
            traj.losses(t, n) = value;
        }
        traj.potential(t) = alpha.dot(traj.losses.row(t).transpose());
        traj.min_safety(t) = pairwise_safety_at(game, w).minCoeff();
        traj.points.push_back(w);
    };

    Vector w = w0;
    record(w, 0);
    int t = 0;
    for (; t < cfg.max_rounds; ++t) {
        const double eta = step_size(cfg, game, t + 1);
        traj.steps.push_back(eta);
        Vector next;
        if (cfg.round_robin) {
            next = w;
            for (int n = 0; n < N; ++n) {
                const Vector move = game.player_projection(n).apply(eta * gradient(game, n, next));
                next = project_feasible(game.feasible, next - move);
            }
        } else {
            Vector move = Vector::Zero(game.dim());
            for (int n = 0; n < N; ++n) {
                move += game.player_projection(n).apply(eta * gradient(game, n, w));
            }
            next = project_feasible(game.feasible, w - move);
        }
        record(next, t + 1);
        const double displacement = (next - w).norm();
        w = next;
        if (displacement <= cfg.convergence_tol * eta) {
            traj.reason = Trajectory::Termination::Converged;
            ++t;
            break;
        }
    }
    const int recorded = static_cast<int>(traj.points.size());
    traj.losses.conservativeResize(recorded, N);
    traj.potential.conservativeResize(recorded);
    traj.min_safety.conservativeResize(recorded);
    return traj;
}

std::vector<double> potential_trace(const Game& game, const Trajectory& trajectory, const Vector& alpha) {
    const Vector weights = resolve_weights(game, alpha);
    std::vector<double> out;
    out.reserve(trajectory.points.size());
    for (const Vector& w : trajectory.points) {
        double phi = 0.0;
        for (int n = 0; n < game.players(); ++n) phi += weights(n) * loss_eval(game, n, w);
        out.push_back(phi);
    }
    return out;
}

double descent_direction_check(const Game& game, const Vector& w, const Vector& alpha) {
    const Vector weights = resolve_weights(game, alpha);
    const int N = game.players();
    std::vector<Vector> grads(static_cast<std::size_t>(N));
    Vector potential_grad = Vector::Zero(game.dim());
    for (int n = 0; n < N; ++n) {
        grads[static_cast<std::size_t>(n)] = gradient(game, n, w);
        potential_grad += weights(n) * grads[static_cast<std::size_t>(n)];
    }
    double worst = std::numeric_limits<double>::infinity();
    for (int m = 0; m < N; ++m) {
        const Projection& pi = game.player_projection(m);
        const Vector own = pi.apply(grads[static_cast<std::size_t>(m)]);
        const double value = pi.apply(potential_grad).dot(grads[static_cast<std::size_t>(m)]) -
                             weights(m) * own.squaredNorm();
        worst = std::min(worst, value);
    }
    return worst;
}

NashVerdict nash_check(const Game& game, const Vector& w, const NashProbeConfig& cfg) {
    if (!feasible_contains(game.feasible, w, 1e-9)) throw Error("nash_check: point is infeasible");
    const int N = game.players();
    NashVerdict verdict;
    verdict.player_ok.assign(static_cast<std::size_t>(N), true);
    verdict.projected_gradient_norm.assign(static_cast<std::size_t>(N), 0.0);

    double diam = feasible_diameter(game.feasible, game.dim());
    if (!std::isfinite(diam)) diam = 2.0 * std::max(1.0, w.norm());

    for (int n = 0; n < N; ++n) {
        verdict.projected_gradient_norm[static_cast<std::size_t>(n)] =
            projected_player_gradient(game, n, w).norm();
        const double base = loss_eval(game, n, w);
        const Projection& pi = game.player_projection(n);
        const Index k = pi.rank();

        std::vector<Vector> directions;
        for (Index j = 0; j < k; ++j) {
            directions.push_back(pi.basis.col(j));
            directions.push_back(-pi.basis.col(j));
        }
        auto rng = make_rng(cfg.seed, static_cast<std::uint64_t>(n));
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int p = 0; p < cfg.random_probes; ++p) {
            Vector coeff(k);
            for (Index j = 0; j < k; ++j) coeff(j) = gauss(rng);
            Vector dir = pi.basis * coeff;
            const double norm = dir.norm();
            if (norm > 0) directions.push_back(dir / norm);
        }

        for (const Vector& dir : directions) {
            for (int s = 0; s < cfg.magnitudes; ++s) {
                const double frac = static_cast<double>(s) / std::max(1, cfg.magnitudes - 1);
                const double magnitude = cfg.tol * std::pow(diam / cfg.tol, frac);
                Vector candidate = w + magnitude * dir;
                if (!feasible_contains(game.feasible, candidate, 1e-12)) {
                    // A projected candidate only counts when projecting kept
                    // the move unilateral.
                    const Vector projected = project_feasible(game.feasible, candidate);
                    const Vector off_block =
                        (projected - w) - pi.apply(projected - w);
                    if (off_block.norm() > 1e-9 * (1.0 + w.norm())) continue;
                    candidate = projected;
                }
                const double value = loss_eval(game, n, candidate);
                const double improvement = base - value;
                if (improvement > cfg.tol) {
                    verdict.player_ok[static_cast<std::size_t>(n)] = false;
                    if (improvement > verdict.best_improvement) {
                        verdict.best_improvement = improvement;
                        verdict.best_deviation = candidate;
                        verdict.violating_player = n;
                    }
                }
            }
        }
    }
    return verdict;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory) {
    if (trajectory.points.empty()) throw Error("write_trajectory_csv: empty trajectory");
    const Index D = trajectory.points.front().size();
    const Index N = trajectory.losses.cols();
    os << "round";
    for (Index i = 1; i <= D; ++i) os << ",w_" << i;
    for (Index n = 1; n <= N; ++n) os << ",loss_" << n;
    os << ",potential,min_safety\n";
    char buffer[64];
    auto put = [&](double x) {
        std::snprintf(buffer, sizeof(buffer), "%.17g", x);
        os << ',' << buffer;
    };
    for (std::size_t t = 0; t < trajectory.points.size(); ++t) {
        os << t;
        for (Index i = 0; i < D; ++i) put(trajectory.points[t](i));
        for (Index n = 0; n < N; ++n) put(trajectory.losses(static_cast<Index>(t), n));
        put(trajectory.potential(static_cast<Index>(t)));
        put(trajectory.min_safety(static_cast<Index>(t)));
        os << '\n';
    }
}

}  // namespace safegame
