#pragma once

#include "marlns/env.hpp"
#include "marlns/rng.hpp"

namespace marlns {

// Cooperative gridworld: n agents, n landmarks on a grid_size x grid_size
// board. Shared reward each step is minus the mean over landmarks of the
// Manhattan distance to the closest agent, plus a +1 bonus (ending the
// episode) once every landmark has an agent standing on it.
//
// Observation layout (per agent): [own_x, own_y, lm0_x, lm0_y, ..., lm(n-1)_x,
// lm(n-1)_y] as raw coordinates. Other agents' positions are not observed;
// they reach the critic through the concatenated global state.
// Actions: 0 stay, 1 up (+y), 2 down (-y), 3 left (-x), 4 right (+x),
// clamped at the walls.
class TeamSpreadEnv final : public Env {
public:
    TeamSpreadEnv(int n_agents, int grid_size = 7, int episode_limit = 50);

    const DecPomdpSpec& spec() const override { return spec_; }
    void seed(uint64_t s) override { rng_.reseed(s); }
    EnvStep reset() override;
    EnvStep step(const std::vector<int>& joint_action) override;

    const std::vector<std::pair<int, int>>& agent_positions() const { return agents_; }
    const std::vector<std::pair<int, int>>& landmark_positions() const { return landmarks_; }

    // Test hook: place agents/landmarks explicitly.
    void force_positions(std::vector<std::pair<int, int>> agents,
                         std::vector<std::pair<int, int>> landmarks);

    double shaped_reward() const;  // the distance term alone
    bool all_covered() const;

private:
    DecPomdpSpec spec_;
    int grid_size_;
    std::vector<std::pair<int, int>> agents_;
    std::vector<std::pair<int, int>> landmarks_;
    int step_count_ = 0;
    Rng rng_;

    EnvStep observe() const;
};

// One-shot coordination game with 3 actions per agent. The default payoff
// generalizes the climb structure: all-equal joint actions pay {11, 7, 5};
// mixing actions 0 and 1 pays -2; every other miscoordination pays 0. The
// maximum must be unique (checked at construction).
class ClimbGameEnv final : public OneShotEnv {
public:
    explicit ClimbGameEnv(int n_agents);
    // Explicit payoff tensor with 3^n entries indexed lexicographically
    // (agent 0 slowest).
    ClimbGameEnv(int n_agents, std::vector<double> payoff);

    const DecPomdpSpec& spec() const override { return spec_; }
    double payoff(const std::vector<int>& joint_action) const override;

    static constexpr int kActions = 3;

private:
    DecPomdpSpec spec_;
    std::vector<double> payoff_;
};

// Gaussian squeeze with several modes: agents pick contribution levels 0..9,
// x = sum_i u_i * a_i, reward = sum_k x * exp(-(x - mu_k)^2 / sigma_k^2).
// Requires tight cooperation from every agent, which is exactly what makes
// small neighborhoods struggle here.
//
// Defaults for n agents: u_i = (i+1)/n, modes {(0.25 * 9 * sum(u), 1),
// (0.75 * 9 * sum(u), 2)}.
class GaussianSqueezeEnv final : public OneShotEnv {
public:
    GaussianSqueezeEnv(int n_agents, std::vector<double> unit_weights = {},
                       std::vector<std::pair<double, double>> modes = {});

    const DecPomdpSpec& spec() const override { return spec_; }
    double payoff(const std::vector<int>& joint_action) const override;

    const std::vector<double>& unit_weights() const { return weights_; }
    const std::vector<std::pair<double, double>>& modes() const { return modes_; }

    static constexpr int kActions = 10;

private:
    DecPomdpSpec spec_;
    std::vector<double> weights_;
    std::vector<std::pair<double, double>> modes_;
};

}  // namespace marlns
