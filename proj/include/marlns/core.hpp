#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace marlns {

using Vec = std::vector<double>;

// Static description of a cooperative Dec-POMDP instance: n agents acting on
// local observations, one shared scalar reward, discount gamma.
struct DecPomdpSpec {
    int n_agents = 0;
    int obs_dim = 0;
    int global_state_dim = 0;
    int n_actions = 0;  // discrete cardinality per agent
    double gamma = 0.99;
    int episode_limit = 1;

    // Throws std::invalid_argument on violated invariants. The formalism
    // targets n_agents >= 2 but the degenerate n = 1 case is accepted; the
    // trajectory ops and one-shot environments are well defined there.
    void validate() const;
};

// One environment step as the trainer sees it. reward is shared by all
// agents; value_estimate is the centralized critic's V(global_state).
struct Transition {
    Vec global_state;
    std::vector<Vec> per_agent_obs;
    std::vector<int> joint_action;
    double reward = 0.0;
    bool done = false;
    std::vector<double> per_agent_action_logprob;
    double value_estimate = 0.0;
};

struct Trajectory {
    std::vector<Transition> transitions;
    double episode_return = 0.0;  // undiscounted sum of rewards
};

// Per-agent view of a Trajectory. global_state_seq is the parent's global
// states, kept whole so the centralized value path always sees every agent.
struct AgentTrajectory {
    int agent_id = -1;
    std::vector<Vec> obs_seq;
    std::vector<int> action_seq;
    std::vector<double> logprob_seq;
    std::vector<double> reward_seq;
    std::vector<double> value_seq;
    std::vector<uint8_t> done_seq;
    std::vector<Vec> global_state_seq;

    std::size_t length() const { return action_seq.size(); }
};

// Split a trajectory into the n per-agent views. Throws on transitions whose
// arity disagrees with spec.n_agents.
std::vector<AgentTrajectory> decompose(const Trajectory& traj, const DecPomdpSpec& spec);

// Inverse of decompose for consistency checks: re-zip n agent views into the
// joint trajectory. Throws if the views are not mutually consistent.
Trajectory rezip(const std::vector<AgentTrajectory>& agents, const DecPomdpSpec& spec);

// sum_t gamma^t * r_t, t zero-based; empty sequence -> 0.
double discounted_return(std::span<const double> rewards, double gamma);

// Global state convention: concatenation of all agents' observations in
// agent-index order, followed by any environment-private state vector.
Vec build_global_state(const std::vector<Vec>& per_agent_obs, const Vec& env_private);

}  // namespace marlns
