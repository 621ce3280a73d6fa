#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "marlns/core.hpp"

namespace marlns {

// What the environment returns from reset() and step(). reward/done are
// meaningful only for step(). truncated marks an episode cut off at the
// episode limit: the trainer bootstraps such steps with the critic's value
// of the final state instead of zero.
struct EnvStep {
    std::vector<Vec> obs;
    Vec global_state;
    double reward = 0.0;
    bool done = false;
    bool truncated = false;
};

class Env {
public:
    virtual ~Env() = default;

    virtual const DecPomdpSpec& spec() const = 0;
    virtual void seed(uint64_t s) = 0;
    virtual EnvStep reset() = 0;
    // joint_action must have n entries within the action cardinality.
    virtual EnvStep step(const std::vector<int>& joint_action) = 0;
};

// Environments whose whole episode is one simultaneous move and whose payoff
// is a pure function of the joint action. Supports exact brute force.
class OneShotEnv : public Env {
public:
    virtual double payoff(const std::vector<int>& joint_action) const = 0;

    EnvStep reset() override;
    EnvStep step(const std::vector<int>& joint_action) override;
    void seed(uint64_t) override {}

protected:
    EnvStep make_initial() const;
};

struct BruteForceResult {
    std::vector<int> joint_action;
    double value = 0.0;
};

// Exact argmax over all A^n joint actions. Refuses when the joint action
// space exceeds 1e6 entries. Ties go to the lexicographically smallest
// joint action.
BruteForceResult brute_force_optimum(const OneShotEnv& env);

struct EnvParams {
    // team_spread
    int grid_size = 7;
    int episode_limit = 50;
    // gaussian_squeeze; empty means the documented defaults for n agents
    std::vector<double> unit_weights;
    std::vector<std::pair<double, double>> modes;  // (mu, sigma)
};

// Environment ids: team_spread | climb_game | gaussian_squeeze.
std::unique_ptr<Env> make_env(const std::string& id, int n_agents, const EnvParams& params = {});

}  // namespace marlns
