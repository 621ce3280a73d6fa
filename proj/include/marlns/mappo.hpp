#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "marlns/core.hpp"
#include "marlns/nn.hpp"
#include "marlns/rng.hpp"

namespace marlns {

struct PpoConfig {
    double clip_eps = 0.2;
    double gae_lambda = 0.95;
    double gamma = 0.99;
    double huber_delta = 10.0;
    int ppo_epochs = 5;
    int minibatch_count = 1;
    double value_loss_coef = 1.0;
    double entropy_coef = 0.01;
    double max_grad_norm = 10.0;
    int hidden_dim = 64;
    int num_fc = 2;        // trunk hidden layers
    int num_fc_after = 1;  // extra hidden layers before each output head
    bool use_reward_norm = true;
    bool use_feature_norm = true;
    bool lr_decay = false;  // optional linear decay, off by default
    AdamConfig adam;

    void validate() const;
};

// Welford accumulators, per-dimension. Feature path subtracts the mean;
// the reward path divides by the running std only, preserving sign.
class RunningNormalizer {
public:
    explicit RunningNormalizer(int dim = 1);

    void update(std::span<const double> x);
    void update_batch(const double* x, int rows);

    // (x - mean) / (std + 1e-8); identity until two samples are seen
    void normalize(std::span<const double> in, std::span<double> out) const;
    // r / (std + 1e-8), no mean subtraction
    double scale_reward(double r) const;

    int dim() const { return dim_; }
    long long count() const { return count_; }
    double mean(int i) const { return mean_[static_cast<std::size_t>(i)]; }
    double variance(int i) const;

private:
    int dim_;
    long long count_ = 0;
    Vec mean_, m2_;
};

struct GaeResult {
    Vec advantages;
    Vec returns;
};

// delta_t = r_t + gamma * V_{t+1} * (1 - done_t) - V_t
// A_t = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
// returns_t = A_t + V_t, with V at one past the end given by bootstrap_value.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      double bootstrap_value, std::span<const uint8_t> dones, double gamma,
                      double lambda);

// In-place zero-mean/unit-std over the batch (std floor 1e-8). A batch of
// size one is returned unchanged; the return value flags that case.
bool normalize_advantages(std::span<double> advantages);

// -min(ratio * A, clip(ratio, 1-eps, 1+eps) * A), ratio = exp(new - old).
double ppo_policy_loss(double new_logprob, double old_logprob, double advantage, double clip_eps);

double huber(double x, double delta);

// Clipped value loss: max of the huber losses of the raw and clipped
// predictions against the target return.
double value_loss(double value, double old_value, double target_return, double clip_eps,
                  double huber_delta);

// Composite per-minibatch objectives with analytic gradients; update() runs
// on these and the gradient-check tests differentiate through them.
struct PolicyLossStats {
    double surrogate_loss = 0.0;  // mean of the clipped surrogate
    double entropy = 0.0;         // mean entropy
    long long clipped = 0;        // rows with ratio outside the clip range
};
// logits: rows x n_actions; dlogits must be zero-filled by the caller.
PolicyLossStats policy_minibatch_grad(const double* logits, std::span<const int> actions,
                                      std::span<const double> old_logprobs,
                                      std::span<const double> advantages, int rows, int n_actions,
                                      double clip_eps, double entropy_coef, double* dlogits);
// values: rows. Returns mean value loss; writes dvalues.
double value_minibatch_grad(const double* values, std::span<const double> old_values,
                            std::span<const double> targets, int rows, double clip_eps,
                            double huber_delta, double value_loss_coef, double* dvalues);

// Filtered per-agent transition storage for one neighborhood. Capacity is
// num_envs * steps_per_env * m rows; each worker owns its env's slice so
// concurrent sampling needs no locking. Rewards, values and segment
// bookkeeping are shared per (env, t).
class RolloutBuffer {
public:
    RolloutBuffer() = default;
    RolloutBuffer(int num_envs, int steps_per_env, std::vector<int> agent_ids, int n_agents,
                  int obs_dim, int state_dim);

    int num_envs() const { return num_envs_; }
    int steps_per_env() const { return steps_; }
    int m() const { return static_cast<int>(agent_ids_.size()); }
    int entry_count() const { return num_envs_ * steps_ * m(); }
    const std::vector<int>& agent_ids() const { return agent_ids_; }
    int obs_dim() const { return obs_dim_; }
    int state_dim() const { return state_dim_; }

    // Stores step t of env `env`, keeping only the neighborhood agents'
    // observations, actions and logprobs (trajectory filtering applied
    // streaming).
    void put_step(int env, int t, const std::vector<Vec>& all_obs, const Vec& state,
                  const std::vector<int>& joint_action, const std::vector<double>& all_logprobs,
                  double reward, double value);
    // Marks step t as the end of an episode segment. Terminal ends bootstrap
    // with 0; truncated ends pass the critic's value of the next state.
    void mark_segment_end(int env, int t, bool terminal, double bootstrap_value);
    // Bootstrap for an env whose last segment is still open at phase end.
    void set_tail_bootstrap(int env, double value);

    bool is_full() const;
    bool is_finalized() const { return finalized_; }

    // Per-env GAE over episode segments; reward_norm (may be null) rescales
    // rewards with the stats frozen at phase start.
    void finalize(double gamma, double lambda, const RunningNormalizer* reward_norm);

    void clear();

    // Flat row layout: row = (env * steps + t) * m + j, j indexing agent_ids.
    const std::vector<double>& obs() const { return obs_; }            // rows x obs_dim
    const std::vector<int>& actions() const { return action_; }        // rows
    const std::vector<double>& logprobs() const { return logprob_; }   // rows
    const std::vector<double>& states() const { return state_; }       // (env*steps) x state_dim
    const std::vector<double>& rewards_raw() const { return reward_; } // env*steps
    const std::vector<double>& values() const { return value_; }       // env*steps
    const std::vector<double>& advantages() const { return adv_; }     // env*steps
    const std::vector<double>& returns() const { return ret_; }        // env*steps

    int state_index_of_row(int row) const { return row / m(); }
    int agent_slot_of_row(int row) const { return row % m(); }

private:
    int num_envs_ = 0, steps_ = 0, n_agents_ = 0, obs_dim_ = 0, state_dim_ = 0;
    std::vector<int> agent_ids_;
    std::vector<double> obs_, state_, logprob_, reward_, value_, adv_, ret_;
    std::vector<int> action_;
    std::vector<uint8_t> closes_, terminal_;
    std::vector<double> boot_;
    std::vector<double> tail_boot_;
    std::vector<uint8_t> tail_open_;
    std::vector<int> filled_;  // per env: steps written
    bool finalized_ = false;
};

struct TrainStats {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double grad_norm_policy = 0.0;  // pre-clip, averaged over minibatches
    double grad_norm_value = 0.0;
    double clip_fraction = 0.0;
    int minibatches = 0;

    bool operator==(const TrainStats&) const = default;
};

// Parameter-shared policy + centralized value function with their Adam
// states and input normalizers. The policy input is the normalized local
// observation with a one-hot agent id appended; the value input is the full
// global state, whose width never depends on the neighborhood.
class ActorCritic {
public:
    ActorCritic(const DecPomdpSpec& env_spec, const PpoConfig& cfg, uint64_t init_seed);

    int sample_action(std::span<const double> obs, int agent_id, Rng& rng,
                      double* logprob = nullptr) const;
    int greedy_action(std::span<const double> obs, int agent_id) const;
    double value(std::span<const double> state) const;

    // One PPO update over a full, finalized buffer: ppo_epochs passes of
    // minibatched gradient steps, then normalizer refresh and buffer clear.
    TrainStats update(RolloutBuffer& buffer, double lr_scale = 1.0);

    const DecPomdpSpec& env_spec() const { return spec_; }
    const PpoConfig& config() const { return cfg_; }
    Mlp& policy() { return policy_; }
    Mlp& value_net() { return value_; }
    const RunningNormalizer& obs_normalizer() const { return obs_norm_; }
    const RunningNormalizer& reward_normalizer() const { return reward_norm_; }

    void save_params(const std::string& path);
    void load_params(const std::string& path);

private:
    DecPomdpSpec spec_;
    PpoConfig cfg_;
    Mlp policy_, value_;
    AdamState opt_policy_, opt_value_;
    RunningNormalizer obs_norm_, state_norm_, reward_norm_;
    Rng update_rng_;

    int policy_input_dim() const { return spec_.obs_dim + spec_.n_agents; }
    void build_policy_input(std::span<const double> obs, int agent_id, std::span<double> out) const;
    std::vector<double> policy_logits(std::span<const double> obs, int agent_id) const;
};

}  // namespace marlns
