#include "safegame/gallery.hpp"

#include <sstream>

namespace safegame::gallery {

namespace {

Vector vec2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

Scenario make_ex3() {
    // Two linear losses on the unit disk; player 1 moves x, player 2 moves y.
    std::vector<LossSpec> losses;
    losses.emplace_back(QuadraticLoss(Matrix::Zero(2, 2), vec2(1.0, 2.0)));
    losses.emplace_back(QuadraticLoss(Matrix::Zero(2, 2), vec2(2.0, 1.0)));
    Game game(TypeStructure::blocks({1, 1}), {0, 1}, std::move(losses), Ball{Vector::Zero(2), 1.0});
    Scenario s{"ex3",
               "safe convex game on the unit disk; gradient descent reaches the Nash arc",
               std::move(game),
               vec2(0.5, 0.5),
               SamplerConfig{},
               DynamicsConfig{},
               std::nullopt};
    s.dynamics.schedule = DynamicsConfig::Schedule::Decaying;
    s.dynamics.max_rounds = 10000;
    s.dynamics.convergence_tol = 1e-9;
    return s;
}

Scenario make_ex4() {
    // Zero-sum bilinear game; the flow rotates around the origin.
    std::vector<LossSpec> losses;
    losses.emplace_back(BilinearLoss{Matrix::Constant(1, 1, 1.0), 1});
    losses.emplace_back(BilinearLoss{Matrix::Constant(1, 1, -1.0), 1});
    Game game(TypeStructure::blocks({1, 1}), {0, 1}, std::move(losses), Unconstrained{});
    Scenario s{"ex4",
               "zero-sum game whose simultaneous gradient flow spirals outward",
               std::move(game),
               vec2(1.0, 0.0),
               SamplerConfig{},
               DynamicsConfig{},
               std::nullopt};
    s.sampler.region = Box{vec2(-1.0, -1.0), vec2(1.0, 1.0)};
    s.dynamics.schedule = DynamicsConfig::Schedule::Constant;
    s.dynamics.eta = 0.1;
    s.dynamics.max_rounds = 200;
    return s;
}

Scenario make_ex5() {
    // Coordinatewise products with positively covarying coefficients.
    Matrix A = Matrix::Zero(2, 2);
    A.diagonal() << 1.0, 2.0;
    Matrix B = Matrix::Zero(2, 2);
    B.diagonal() << 3.0, 4.0;
    std::vector<LossSpec> losses;
    losses.emplace_back(BilinearLoss{A, 2});
    losses.emplace_back(BilinearLoss{B, 2});
    Game game(TypeStructure::blocks({2, 2}), {0, 1}, std::move(losses), Unconstrained{});

    FactorizationSpec spec;
    Matrix P1 = Matrix::Zero(4, 2);
    P1(0, 0) = 1.0;  // x_1
    P1(2, 1) = 1.0;  // y_1
    Matrix P2 = Matrix::Zero(4, 2);
    P2(1, 0) = 1.0;  // x_2
    P2(3, 1) = 1.0;  // y_2
    spec.latent_bases = {P1, P2};
    spec.inner = {InnerMap::product(), InnerMap::product()};
    spec.outer = {OuterMap::linear(vec2(1.0, 2.0)), OuterMap::linear(vec2(3.0, 4.0))};

    Scenario s{"ex5",
               "strongly-typed bilinear game that is not a weighted potential game",
               std::move(game),
               Vector::Constant(4, 0.25),
               SamplerConfig{},
               DynamicsConfig{},
               std::move(spec)};
    s.sampler.region = Box{Vector::Constant(4, -1.0), Vector::Constant(4, 1.0)};
    s.dynamics.schedule = DynamicsConfig::Schedule::Constant;
    s.dynamics.eta = 0.05;
    s.dynamics.max_rounds = 500;
    return s;
}

Scenario make_ex6() {
    // Potential game with a linear tilt that breaks safety for y in (0, 9).
    Matrix A(2, 2);
    A << 0.0, 1.0, 1.0, 0.0;
    std::vector<LossSpec> losses;
    losses.emplace_back(QuadraticLoss(A, Vector::Zero(2)));
    losses.emplace_back(QuadraticLoss(A, vec2(-9.0, 0.0)));
    Game game(TypeStructure::blocks({1, 1}), {0, 1}, std::move(losses), Unconstrained{});
    Scenario s{"ex6",
               "weighted potential game that fails the safety condition",
               std::move(game),
               vec2(1.0, 1.0),
               SamplerConfig{},
               DynamicsConfig{},
               std::nullopt};
    s.sampler.region = Box{vec2(-10.0, -10.0), vec2(10.0, 10.0)};
    s.dynamics.schedule = DynamicsConfig::Schedule::Constant;
    s.dynamics.eta = 0.05;
    s.dynamics.max_rounds = 500;
    return s;
}

Scenario make_saddle() {
    // Single-player open game on a saddle; Newton's method is unsafe here.
    Matrix A = Matrix::Zero(2, 2);
    A.diagonal() << 1.0, -1.0;
    std::vector<LossSpec> losses;
    losses.emplace_back(QuadraticLoss(A, Vector::Zero(2)));
    Game game(TypeStructure::open(2), {0}, std::move(losses), Unconstrained{});
    Scenario s{"saddle",
               "single-player saddle objective used by the second-order checks",
               std::move(game),
               vec2(1.0, 2.0),
               SamplerConfig{},
               DynamicsConfig{},
               std::nullopt};
    s.sampler.region = Box{vec2(-2.0, -2.0), vec2(2.0, 2.0)};
    s.dynamics.schedule = DynamicsConfig::Schedule::Constant;
    s.dynamics.eta = 0.1;
    s.dynamics.max_rounds = 200;
    return s;
}

}  // namespace

std::vector<std::string> scenario_names() { return {"ex3", "ex4", "ex5", "ex6", "saddle"}; }

bool is_game_scenario(const std::string& name) {
    for (const std::string& n : scenario_names()) {
        if (n == name) return true;
    }
    return false;
}

Scenario make_scenario(const std::string& name) {
    if (name == "ex3") return make_ex3();
    if (name == "ex4") return make_ex4();
    if (name == "ex5") return make_ex5();
    if (name == "ex6") return make_ex6();
    if (name == "saddle") return make_saddle();
    std::ostringstream os;
    os << "unknown scenario '" << name << "'; available:";
    for (const std::string& n : scenario_names()) os << ' ' << n;
    throw Error(os.str());
}

FeedbackFixture make_feedback_fixture(std::uint64_t seed, double alpha) {
    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix W(4, 3);
    for (Index i = 0; i < W.rows(); ++i)
        for (Index j = 0; j < W.cols(); ++j) W(i, j) = gauss(rng);
    Vector e(4);
    for (Index i = 0; i < e.size(); ++i) e(i) = gauss(rng);
    Matrix B = alpha * nn::pseudoinverse(W);
    return FeedbackFixture{nn::LayerPair(std::move(W), std::move(B)), std::move(e), alpha};
}

}  // namespace safegame::gallery
