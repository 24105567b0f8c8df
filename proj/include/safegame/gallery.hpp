#pragma once

#include "safegame/dynamics.hpp"
#include "safegame/nn.hpp"

#include <optional>
#include <string>

namespace safegame::gallery {

/// A named game scenario with sensible defaults for simulation, safety
/// sampling, and (when one exists) a strong-typing factorization.
struct Scenario {
    std::string name;
    std::string description;
    Game game;
    Vector start;
    SamplerConfig sampler;
    DynamicsConfig dynamics;
    std::optional<FactorizationSpec> strong_typing;
};

/// Game scenarios: ex3, ex4, ex5, ex6, saddle.
Scenario make_scenario(const std::string& name);
std::vector<std::string> scenario_names();
bool is_game_scenario(const std::string& name);

/// Seeded feedback-alignment fixture with B = alpha * pinv(W).
struct FeedbackFixture {
    nn::LayerPair pair;
    Vector error;
    double alpha = 1.0;
};
FeedbackFixture make_feedback_fixture(std::uint64_t seed, double alpha = 1.0);

}  // namespace safegame::gallery
