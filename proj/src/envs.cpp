#include "marlns/envs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace marlns {

namespace {

void check_joint_action(const std::vector<int>& joint, const DecPomdpSpec& spec) {
    if (static_cast<int>(joint.size()) != spec.n_agents)
        throw std::invalid_argument("step: joint action arity mismatch");
    for (int a : joint)
        if (a < 0 || a >= spec.n_actions)
            throw std::invalid_argument("step: action index out of range");
}

}  // namespace

// --- OneShotEnv ---------------------------------------------------------

EnvStep OneShotEnv::make_initial() const {
    EnvStep s;
    const auto& sp = spec();
    s.obs.assign(static_cast<std::size_t>(sp.n_agents), Vec(static_cast<std::size_t>(sp.obs_dim), 0.0));
    s.global_state = build_global_state(s.obs, {});
    return s;
}

EnvStep OneShotEnv::reset() { return make_initial(); }

EnvStep OneShotEnv::step(const std::vector<int>& joint_action) {
    check_joint_action(joint_action, spec());
    EnvStep s = make_initial();
    s.reward = payoff(joint_action);
    s.done = true;
    return s;
}

BruteForceResult brute_force_optimum(const OneShotEnv& env) {
    const int n = env.spec().n_agents;
    const int a = env.spec().n_actions;
    double entries = 1.0;
    for (int i = 0; i < n; ++i) {
        entries *= a;
        if (entries > 1e6)
            throw std::invalid_argument("brute_force_optimum: joint action space exceeds 1e6 entries");
    }

    std::vector<int> joint(static_cast<std::size_t>(n), 0);
    BruteForceResult best;
    best.joint_action = joint;
    best.value = env.payoff(joint);
    // lexicographic enumeration; strict > keeps the first (smallest) argmax
    for (;;) {
        int i = n - 1;
        while (i >= 0 && joint[static_cast<std::size_t>(i)] == a - 1) {
            joint[static_cast<std::size_t>(i)] = 0;
            --i;
        }
        if (i < 0) break;
        ++joint[static_cast<std::size_t>(i)];
        const double v = env.payoff(joint);
        if (v > best.value) {
            best.value = v;
            best.joint_action = joint;
        }
    }
    return best;
}

// --- TeamSpreadEnv ------------------------------------------------------

TeamSpreadEnv::TeamSpreadEnv(int n_agents, int grid_size, int episode_limit)
    : grid_size_(grid_size) {
    if (n_agents < 2) throw std::invalid_argument("TeamSpreadEnv: n_agents must be >= 2");
    if (grid_size < 2) throw std::invalid_argument("TeamSpreadEnv: grid_size must be >= 2");
    if (static_cast<long long>(grid_size) * grid_size < n_agents)
        throw std::invalid_argument("TeamSpreadEnv: grid too small for distinct positions");
    spec_.n_agents = n_agents;
    spec_.obs_dim = 2 + 2 * n_agents;
    spec_.global_state_dim = n_agents * spec_.obs_dim;
    spec_.n_actions = 5;
    spec_.gamma = 0.99;
    spec_.episode_limit = episode_limit;
    spec_.validate();
    agents_.assign(static_cast<std::size_t>(n_agents), {0, 0});
    landmarks_.assign(static_cast<std::size_t>(n_agents), {0, 0});
}

EnvStep TeamSpreadEnv::reset() {
    const int n = spec_.n_agents;
    auto sample_distinct = [&](std::vector<std::pair<int, int>>& out) {
        out.clear();
        while (static_cast<int>(out.size()) < n) {
            const int x = rng_.below_int(grid_size_);
            const int y = rng_.below_int(grid_size_);
            if (std::find(out.begin(), out.end(), std::make_pair(x, y)) == out.end())
                out.emplace_back(x, y);
        }
    };
    sample_distinct(landmarks_);
    sample_distinct(agents_);
    step_count_ = 0;
    return observe();
}

void TeamSpreadEnv::force_positions(std::vector<std::pair<int, int>> agents,
                                    std::vector<std::pair<int, int>> landmarks) {
    if (static_cast<int>(agents.size()) != spec_.n_agents ||
        static_cast<int>(landmarks.size()) != spec_.n_agents)
        throw std::invalid_argument("force_positions: arity mismatch");
    agents_ = std::move(agents);
    landmarks_ = std::move(landmarks);
    step_count_ = 0;
}

double TeamSpreadEnv::shaped_reward() const {
    double total = 0.0;
    for (const auto& lm : landmarks_) {
        int best = std::abs(lm.first - agents_[0].first) + std::abs(lm.second - agents_[0].second);
        for (const auto& ag : agents_) {
            const int d = std::abs(lm.first - ag.first) + std::abs(lm.second - ag.second);
            best = std::min(best, d);
        }
        total += best;
    }
    return -total / static_cast<double>(spec_.n_agents);
}

bool TeamSpreadEnv::all_covered() const {
    for (const auto& lm : landmarks_) {
        bool covered = false;
        for (const auto& ag : agents_)
            if (ag == lm) {
                covered = true;
                break;
            }
        if (!covered) return false;
    }
    return true;
}

EnvStep TeamSpreadEnv::observe() const {
    EnvStep s;
    s.obs.reserve(static_cast<std::size_t>(spec_.n_agents));
    for (const auto& ag : agents_) {
        Vec o;
        o.reserve(static_cast<std::size_t>(spec_.obs_dim));
        o.push_back(static_cast<double>(ag.first));
        o.push_back(static_cast<double>(ag.second));
        for (const auto& lm : landmarks_) {
            o.push_back(static_cast<double>(lm.first));
            o.push_back(static_cast<double>(lm.second));
        }
        s.obs.push_back(std::move(o));
    }
    s.global_state = build_global_state(s.obs, {});
    return s;
}

EnvStep TeamSpreadEnv::step(const std::vector<int>& joint_action) {
    check_joint_action(joint_action, spec_);
    for (int i = 0; i < spec_.n_agents; ++i) {
        auto& [x, y] = agents_[static_cast<std::size_t>(i)];
        switch (joint_action[static_cast<std::size_t>(i)]) {
            case 1: y = std::min(y + 1, grid_size_ - 1); break;
            case 2: y = std::max(y - 1, 0); break;
            case 3: x = std::max(x - 1, 0); break;
            case 4: x = std::min(x + 1, grid_size_ - 1); break;
            default: break;  // 0 = stay
        }
    }
    ++step_count_;

    EnvStep s = observe();
    s.reward = shaped_reward();
    if (all_covered()) {
        s.reward += 1.0;
        s.done = true;
    } else if (step_count_ >= spec_.episode_limit) {
        s.done = true;
        s.truncated = true;
    }
    return s;
}

// --- ClimbGameEnv -------------------------------------------------------

namespace {

std::vector<double> default_climb_payoff(int n) {
    std::size_t entries = 1;
    for (int i = 0; i < n; ++i) entries *= 3;
    std::vector<double> payoff(entries);
    std::vector<int> joint(static_cast<std::size_t>(n), 0);
    for (std::size_t idx = 0; idx < entries; ++idx) {
        std::size_t rem = idx;
        bool all_equal = true;
        bool has0 = false, has1 = false;
        for (int i = n - 1; i >= 0; --i) {
            const int a = static_cast<int>(rem % 3);
            rem /= 3;
            joint[static_cast<std::size_t>(i)] = a;
            has0 |= a == 0;
            has1 |= a == 1;
        }
        for (int i = 1; i < n; ++i) all_equal &= joint[static_cast<std::size_t>(i)] == joint[0];
        if (all_equal) {
            constexpr double diag[3] = {11.0, 7.0, 5.0};
            payoff[idx] = diag[joint[0]];
        } else {
            // mild penalty for mixing the two high actions; other
            // miscoordinations are merely unrewarded
            payoff[idx] = (has0 && has1) ? -2.0 : 0.0;
        }
    }
    return payoff;
}

}  // namespace

ClimbGameEnv::ClimbGameEnv(int n_agents) : ClimbGameEnv(n_agents, default_climb_payoff(n_agents)) {}

ClimbGameEnv::ClimbGameEnv(int n_agents, std::vector<double> payoff) : payoff_(std::move(payoff)) {
    if (n_agents < 2) throw std::invalid_argument("ClimbGameEnv: n_agents must be >= 2");
    std::size_t entries = 1;
    for (int i = 0; i < n_agents; ++i) entries *= 3;
    if (payoff_.size() != entries)
        throw std::invalid_argument("ClimbGameEnv: payoff tensor must have 3^n entries");
    const double mx = *std::max_element(payoff_.begin(), payoff_.end());
    if (std::count(payoff_.begin(), payoff_.end(), mx) != 1)
        throw std::invalid_argument("ClimbGameEnv: payoff maximum must be unique");
    spec_.n_agents = n_agents;
    spec_.obs_dim = 1;
    spec_.global_state_dim = n_agents;
    spec_.n_actions = kActions;
    spec_.gamma = 0.99;
    spec_.episode_limit = 1;
    spec_.validate();
}

double ClimbGameEnv::payoff(const std::vector<int>& joint_action) const {
    std::size_t idx = 0;
    for (int a : joint_action) idx = idx * 3 + static_cast<std::size_t>(a);
    return payoff_[idx];
}

// --- GaussianSqueezeEnv -------------------------------------------------

GaussianSqueezeEnv::GaussianSqueezeEnv(int n_agents, std::vector<double> unit_weights,
                                       std::vector<std::pair<double, double>> modes)
    : weights_(std::move(unit_weights)), modes_(std::move(modes)) {
    if (n_agents < 1) throw std::invalid_argument("GaussianSqueezeEnv: n_agents must be >= 1");
    if (weights_.empty()) {
        weights_.resize(static_cast<std::size_t>(n_agents));
        for (int i = 0; i < n_agents; ++i)
            weights_[static_cast<std::size_t>(i)] = static_cast<double>(i + 1) / n_agents;
    }
    if (static_cast<int>(weights_.size()) != n_agents)
        throw std::invalid_argument("GaussianSqueezeEnv: unit_weights arity mismatch");
    for (double u : weights_)
        if (!(u > 0.0 && u <= 1.0))
            throw std::invalid_argument("GaussianSqueezeEnv: unit weights must lie in (0, 1]");
    if (modes_.empty()) {
        double usum = 0.0;
        for (double u : weights_) usum += u;
        modes_ = {{0.25 * usum * (kActions - 1), 1.0}, {0.75 * usum * (kActions - 1), 2.0}};
    }
    for (const auto& [mu, sigma] : modes_) {
        (void)mu;
        if (!(sigma > 0.0)) throw std::invalid_argument("GaussianSqueezeEnv: sigma must be > 0");
    }
    spec_.n_agents = n_agents;
    spec_.obs_dim = 1;
    spec_.global_state_dim = std::max(1, n_agents);
    spec_.n_actions = kActions;
    spec_.gamma = 0.99;
    spec_.episode_limit = 1;
    spec_.validate();
}

double GaussianSqueezeEnv::payoff(const std::vector<int>& joint_action) const {
    double x = 0.0;
    for (std::size_t i = 0; i < joint_action.size(); ++i)
        x += weights_[i] * static_cast<double>(joint_action[i]);
    double r = 0.0;
    for (const auto& [mu, sigma] : modes_) {
        const double z = (x - mu) / sigma;
        r += x * std::exp(-z * z);
    }
    return r;
}

// --- factory ------------------------------------------------------------

std::unique_ptr<Env> make_env(const std::string& id, int n_agents, const EnvParams& params) {
    if (id == "team_spread")
        return std::make_unique<TeamSpreadEnv>(n_agents, params.grid_size, params.episode_limit);
    if (id == "climb_game") return std::make_unique<ClimbGameEnv>(n_agents);
    if (id == "gaussian_squeeze")
        return std::make_unique<GaussianSqueezeEnv>(n_agents, params.unit_weights, params.modes);
    throw std::invalid_argument("make_env: unknown environment id '" + id + "'");
}

}  // namespace marlns
