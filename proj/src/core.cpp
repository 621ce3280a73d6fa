#include "marlns/core.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>

namespace marlns {

void DecPomdpSpec::validate() const {
    if (n_agents < 1) throw std::invalid_argument("DecPomdpSpec: n_agents must be >= 1");
    if (obs_dim < 1) throw std::invalid_argument("DecPomdpSpec: obs_dim must be >= 1");
    if (global_state_dim < 1)
        throw std::invalid_argument("DecPomdpSpec: global_state_dim must be >= 1");
    if (n_actions < 2) throw std::invalid_argument("DecPomdpSpec: action cardinality must be >= 2");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("DecPomdpSpec: gamma must be in (0, 1]");
    if (episode_limit < 1) throw std::invalid_argument("DecPomdpSpec: episode_limit must be >= 1");
}

namespace {

void check_transition_arity(const Transition& tr, const DecPomdpSpec& spec, std::size_t t) {
    const auto n = static_cast<std::size_t>(spec.n_agents);
    if (tr.per_agent_obs.size() != n || tr.joint_action.size() != n ||
        tr.per_agent_action_logprob.size() != n) {
        throw std::invalid_argument("decompose: transition " + std::to_string(t) +
                                    " arity disagrees with spec.n_agents");
    }
}

}  // namespace

std::vector<AgentTrajectory> decompose(const Trajectory& traj, const DecPomdpSpec& spec) {
    spec.validate();
    if (traj.transitions.empty()) throw std::invalid_argument("decompose: empty trajectory");

    const int n = spec.n_agents;
    const std::size_t len = traj.transitions.size();
    std::vector<AgentTrajectory> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto& at = out[static_cast<std::size_t>(i)];
        at.agent_id = i;
        at.obs_seq.reserve(len);
        at.action_seq.reserve(len);
        at.logprob_seq.reserve(len);
        at.reward_seq.reserve(len);
        at.value_seq.reserve(len);
        at.done_seq.reserve(len);
        at.global_state_seq.reserve(len);
    }

    for (std::size_t t = 0; t < len; ++t) {
        const Transition& tr = traj.transitions[t];
        check_transition_arity(tr, spec, t);
        for (int i = 0; i < n; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            auto& at = out[ui];
            at.obs_seq.push_back(tr.per_agent_obs[ui]);
            at.action_seq.push_back(tr.joint_action[ui]);
            at.logprob_seq.push_back(tr.per_agent_action_logprob[ui]);
            at.reward_seq.push_back(tr.reward);
            at.value_seq.push_back(tr.value_estimate);
            at.done_seq.push_back(tr.done ? 1 : 0);
            at.global_state_seq.push_back(tr.global_state);
        }
    }
    return out;
}

Trajectory rezip(const std::vector<AgentTrajectory>& agents, const DecPomdpSpec& spec) {
    spec.validate();
    const auto n = static_cast<std::size_t>(spec.n_agents);
    if (agents.size() != n) throw std::invalid_argument("rezip: wrong number of agent views");
    const std::size_t len = agents[0].length();
    for (const auto& at : agents) {
        if (at.length() != len || at.obs_seq.size() != len || at.reward_seq.size() != len ||
            at.global_state_seq.size() != len) {
            throw std::invalid_argument("rezip: agent views disagree on length");
        }
    }

    Trajectory traj;
    traj.transitions.resize(len);
    for (std::size_t t = 0; t < len; ++t) {
        Transition& tr = traj.transitions[t];
        tr.global_state = agents[0].global_state_seq[t];
        tr.reward = agents[0].reward_seq[t];
        tr.done = agents[0].done_seq[t] != 0;
        tr.value_estimate = agents[0].value_seq[t];
        tr.per_agent_obs.resize(n);
        tr.joint_action.resize(n);
        tr.per_agent_action_logprob.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (agents[i].reward_seq[t] != tr.reward || agents[i].global_state_seq[t] != tr.global_state)
                throw std::invalid_argument("rezip: shared fields disagree between agents");
            tr.per_agent_obs[i] = agents[i].obs_seq[t];
            tr.joint_action[i] = agents[i].action_seq[t];
            tr.per_agent_action_logprob[i] = agents[i].logprob_seq[t];
        }
        traj.episode_return += tr.reward;
    }
    return traj;
}

double discounted_return(std::span<const double> rewards, double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("discounted_return: gamma must be in (0, 1]");
    double acc = 0.0;
    double scale = 1.0;
    for (double r : rewards) {
        acc += scale * r;
        scale *= gamma;
    }
    return acc;
}

Vec build_global_state(const std::vector<Vec>& per_agent_obs, const Vec& env_private) {
    Vec state;
    std::size_t total = env_private.size();
    for (const auto& o : per_agent_obs) total += o.size();
    state.reserve(total);
    for (const auto& o : per_agent_obs) state.insert(state.end(), o.begin(), o.end());
    state.insert(state.end(), env_private.begin(), env_private.end());
    return state;
}

}  // namespace marlns
