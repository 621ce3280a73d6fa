#include "marlns/mappo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace marlns {

void PpoConfig::validate() const {
    if (!(clip_eps > 0.0 && clip_eps < 1.0))
        throw std::invalid_argument("PpoConfig: clip_eps must be in (0, 1)");
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0))
        throw std::invalid_argument("PpoConfig: gae_lambda must be in [0, 1]");
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw std::invalid_argument("PpoConfig: gamma must be in [0, 1]");
    if (huber_delta <= 0.0) throw std::invalid_argument("PpoConfig: huber_delta must be > 0");
    if (ppo_epochs < 1) throw std::invalid_argument("PpoConfig: ppo_epochs must be >= 1");
    if (minibatch_count < 1) throw std::invalid_argument("PpoConfig: minibatch_count must be >= 1");
    if (max_grad_norm <= 0.0) throw std::invalid_argument("PpoConfig: max_grad_norm must be > 0");
    if (hidden_dim < 1 || num_fc < 1 || num_fc_after < 0)
        throw std::invalid_argument("PpoConfig: bad network dims");
}

// --- RunningNormalizer ---------------------------------------------------

RunningNormalizer::RunningNormalizer(int dim) : dim_(dim) {
    if (dim < 1) throw std::invalid_argument("RunningNormalizer: dim must be >= 1");
    mean_.assign(static_cast<std::size_t>(dim), 0.0);
    m2_.assign(static_cast<std::size_t>(dim), 0.0);
}

void RunningNormalizer::update(std::span<const double> x) {
    if (static_cast<int>(x.size()) != dim_)
        throw std::invalid_argument("RunningNormalizer: width mismatch");
    ++count_;
    for (int i = 0; i < dim_; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double delta = x[ui] - mean_[ui];
        mean_[ui] += delta / static_cast<double>(count_);
        m2_[ui] += delta * (x[ui] - mean_[ui]);
    }
}

void RunningNormalizer::update_batch(const double* x, int rows) {
    for (int r = 0; r < rows; ++r)
        update({x + static_cast<std::size_t>(r) * static_cast<std::size_t>(dim_),
                static_cast<std::size_t>(dim_)});
}

double RunningNormalizer::variance(int i) const {
    if (count_ < 2) return 0.0;
    return m2_[static_cast<std::size_t>(i)] / static_cast<double>(count_);
}

void RunningNormalizer::normalize(std::span<const double> in, std::span<double> out) const {
    if (in.size() != out.size() || static_cast<int>(in.size()) != dim_)
        throw std::invalid_argument("RunningNormalizer: width mismatch");
    if (count_ < 2) {
        std::copy(in.begin(), in.end(), out.begin());
        return;
    }
    for (int i = 0; i < dim_; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        out[ui] = (in[ui] - mean_[ui]) / (std::sqrt(variance(i)) + 1e-8);
    }
}

double RunningNormalizer::scale_reward(double r) const {
    if (dim_ != 1) throw std::logic_error("scale_reward: scalar normalizer expected");
    if (count_ < 2) return r;
    const double sd = std::sqrt(variance(0));
    if (sd < 1e-6) return r;  // constant rewards so far: leave the scale alone
    return r / (sd + 1e-8);
}

// --- GAE and losses ------------------------------------------------------

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      double bootstrap_value, std::span<const uint8_t> dones, double gamma,
                      double lambda) {
    const std::size_t len = rewards.size();
    if (values.size() != len || dones.size() != len)
        throw std::invalid_argument("compute_gae: sequence length mismatch");
    if (!(gamma >= 0.0 && gamma <= 1.0) || !(lambda >= 0.0 && lambda <= 1.0))
        throw std::invalid_argument("compute_gae: gamma/lambda must be in [0, 1]");

    GaeResult out;
    out.advantages.resize(len);
    out.returns.resize(len);
    double next_adv = 0.0;
    double next_value = bootstrap_value;
    for (std::size_t t = len; t-- > 0;) {
        const double not_done = dones[t] ? 0.0 : 1.0;
        const double delta = rewards[t] + gamma * next_value * not_done - values[t];
        next_adv = delta + gamma * lambda * not_done * next_adv;
        out.advantages[t] = next_adv;
        out.returns[t] = next_adv + values[t];
        next_value = values[t];
    }
    return out;
}

bool normalize_advantages(std::span<double> advantages) {
    if (advantages.empty()) throw std::invalid_argument("normalize_advantages: empty batch");
    if (advantages.size() == 1) return true;  // returned unchanged, warn
    double mean = 0.0;
    for (double a : advantages) mean += a;
    mean /= static_cast<double>(advantages.size());
    double var = 0.0;
    for (double a : advantages) var += (a - mean) * (a - mean);
    var /= static_cast<double>(advantages.size());
    const double denom = std::sqrt(var) + 1e-8;
    for (double& a : advantages) a = (a - mean) / denom;
    return false;
}

double ppo_policy_loss(double new_logprob, double old_logprob, double advantage, double clip_eps) {
    const double ratio = std::exp(new_logprob - old_logprob);
    if (!std::isfinite(ratio)) throw std::runtime_error("ppo_policy_loss: non-finite ratio");
    const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    return -std::min(ratio * advantage, clipped * advantage);
}

double huber(double x, double delta) {
    const double ax = std::abs(x);
    if (ax <= delta) return 0.5 * x * x;
    return delta * (ax - 0.5 * delta);
}

double value_loss(double value, double old_value, double target_return, double clip_eps,
                  double huber_delta) {
    const double clipped = old_value + std::clamp(value - old_value, -clip_eps, clip_eps);
    return std::max(huber(value - target_return, huber_delta),
                    huber(clipped - target_return, huber_delta));
}

PolicyLossStats policy_minibatch_grad(const double* logits, std::span<const int> actions,
                                      std::span<const double> old_logprobs,
                                      std::span<const double> advantages, int rows, int n_actions,
                                      double clip_eps, double entropy_coef, double* dlogits) {
    PolicyLossStats stats;
    const double inv_rows = 1.0 / static_cast<double>(rows);
    std::vector<double> p(static_cast<std::size_t>(n_actions));
    std::vector<double> ls(static_cast<std::size_t>(n_actions));
    for (int r = 0; r < rows; ++r) {
        const double* z = logits + static_cast<std::size_t>(r) * static_cast<std::size_t>(n_actions);
        double* dz = dlogits + static_cast<std::size_t>(r) * static_cast<std::size_t>(n_actions);
        double zmax = z[0];
        for (int k = 1; k < n_actions; ++k) zmax = std::max(zmax, z[k]);
        double sum = 0.0;
        for (int k = 0; k < n_actions; ++k) sum += std::exp(z[k] - zmax);
        const double logz = zmax + std::log(sum);
        double entropy = 0.0;
        for (int k = 0; k < n_actions; ++k) {
            const auto uk = static_cast<std::size_t>(k);
            ls[uk] = z[k] - logz;
            p[uk] = std::exp(ls[uk]);
            entropy -= p[uk] * ls[uk];
        }

        const int a = actions[static_cast<std::size_t>(r)];
        const double adv = advantages[static_cast<std::size_t>(r)];
        const double new_lp = ls[static_cast<std::size_t>(a)];
        const double ratio = std::exp(new_lp - old_logprobs[static_cast<std::size_t>(r)]);
        if (!std::isfinite(ratio)) throw std::runtime_error("policy_minibatch_grad: non-finite ratio");
        const double clipped_ratio = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
        const double surr_raw = ratio * adv;
        const double surr_clip = clipped_ratio * adv;
        stats.surrogate_loss += -std::min(surr_raw, surr_clip) * inv_rows;
        stats.entropy += entropy * inv_rows;
        if (ratio < 1.0 - clip_eps || ratio > 1.0 + clip_eps) ++stats.clipped;

        // d(-min)/d new_lp: the raw branch carries -A*ratio, the saturated
        // clip branch carries zero.
        const double dlp = (surr_raw <= surr_clip) ? -adv * ratio : 0.0;
        for (int k = 0; k < n_actions; ++k) {
            const auto uk = static_cast<std::size_t>(k);
            const double ind = (k == a) ? 1.0 : 0.0;
            const double dent = -p[uk] * (ls[uk] + entropy);  // dH/dz_k
            dz[k] += (dlp * (ind - p[uk]) - entropy_coef * dent) * inv_rows;
        }
    }
    return stats;
}

double value_minibatch_grad(const double* values, std::span<const double> old_values,
                            std::span<const double> targets, int rows, double clip_eps,
                            double huber_delta, double value_loss_coef, double* dvalues) {
    double loss = 0.0;
    const double inv_rows = 1.0 / static_cast<double>(rows);
    auto huber_grad = [huber_delta](double x) {
        if (std::abs(x) <= huber_delta) return x;
        return x > 0.0 ? huber_delta : -huber_delta;
    };
    for (int r = 0; r < rows; ++r) {
        const auto ur = static_cast<std::size_t>(r);
        const double v = values[ur];
        const double old_v = old_values[ur];
        const double target = targets[ur];
        const double dv_raw = v - old_v;
        const double v_clip = old_v + std::clamp(dv_raw, -clip_eps, clip_eps);
        const double h_raw = huber(v - target, huber_delta);
        const double h_clip = huber(v_clip - target, huber_delta);
        double g;
        if (h_raw >= h_clip) {
            loss += h_raw * inv_rows;
            g = huber_grad(v - target);
        } else {
            loss += h_clip * inv_rows;
            g = (std::abs(dv_raw) < clip_eps) ? huber_grad(v_clip - target) : 0.0;
        }
        dvalues[ur] = value_loss_coef * g * inv_rows;
    }
    return loss * value_loss_coef;
}

// --- RolloutBuffer -------------------------------------------------------

RolloutBuffer::RolloutBuffer(int num_envs, int steps_per_env, std::vector<int> agent_ids,
                             int n_agents, int obs_dim, int state_dim)
    : num_envs_(num_envs),
      steps_(steps_per_env),
      n_agents_(n_agents),
      obs_dim_(obs_dim),
      state_dim_(state_dim),
      agent_ids_(std::move(agent_ids)) {
    if (num_envs < 1 || steps_per_env < 1)
        throw std::invalid_argument("RolloutBuffer: bad capacity");
    if (agent_ids_.empty()) throw std::invalid_argument("RolloutBuffer: empty neighborhood");
    for (int id : agent_ids_)
        if (id < 0 || id >= n_agents)
            throw std::invalid_argument("RolloutBuffer: agent id out of range");

    const std::size_t rows = static_cast<std::size_t>(entry_count());
    const std::size_t et = static_cast<std::size_t>(num_envs_) * static_cast<std::size_t>(steps_);
    obs_.assign(rows * static_cast<std::size_t>(obs_dim_), 0.0);
    action_.assign(rows, 0);
    logprob_.assign(rows, 0.0);
    state_.assign(et * static_cast<std::size_t>(state_dim_), 0.0);
    reward_.assign(et, 0.0);
    value_.assign(et, 0.0);
    adv_.assign(et, 0.0);
    ret_.assign(et, 0.0);
    closes_.assign(et, 0);
    terminal_.assign(et, 0);
    boot_.assign(et, 0.0);
    tail_boot_.assign(static_cast<std::size_t>(num_envs_), 0.0);
    tail_open_.assign(static_cast<std::size_t>(num_envs_), 0);
    filled_.assign(static_cast<std::size_t>(num_envs_), 0);
}

void RolloutBuffer::put_step(int env, int t, const std::vector<Vec>& all_obs, const Vec& state,
                             const std::vector<int>& joint_action,
                             const std::vector<double>& all_logprobs, double reward, double value) {
    if (env < 0 || env >= num_envs_ || t < 0 || t >= steps_)
        throw std::invalid_argument("RolloutBuffer::put_step: index out of range");
    if (static_cast<int>(all_obs.size()) != n_agents_ ||
        static_cast<int>(joint_action.size()) != n_agents_ ||
        static_cast<int>(all_logprobs.size()) != n_agents_)
        throw std::invalid_argument("RolloutBuffer::put_step: arity mismatch");
    if (static_cast<int>(state.size()) != state_dim_)
        throw std::invalid_argument("RolloutBuffer::put_step: state width mismatch");

    const std::size_t et = static_cast<std::size_t>(env) * static_cast<std::size_t>(steps_) +
                           static_cast<std::size_t>(t);
    std::copy(state.begin(), state.end(), state_.begin() + static_cast<std::ptrdiff_t>(et * static_cast<std::size_t>(state_dim_)));
    reward_[et] = reward;
    value_[et] = value;

    for (int j = 0; j < m(); ++j) {
        const auto agent = static_cast<std::size_t>(agent_ids_[static_cast<std::size_t>(j)]);
        const std::size_t row = et * static_cast<std::size_t>(m()) + static_cast<std::size_t>(j);
        const Vec& o = all_obs[agent];
        if (static_cast<int>(o.size()) != obs_dim_)
            throw std::invalid_argument("RolloutBuffer::put_step: obs width mismatch");
        std::copy(o.begin(), o.end(),
                  obs_.begin() + static_cast<std::ptrdiff_t>(row * static_cast<std::size_t>(obs_dim_)));
        action_[row] = joint_action[agent];
        logprob_[row] = all_logprobs[agent];
    }
    filled_[static_cast<std::size_t>(env)] = std::max(filled_[static_cast<std::size_t>(env)], t + 1);
}

void RolloutBuffer::mark_segment_end(int env, int t, bool terminal, double bootstrap_value) {
    const std::size_t et = static_cast<std::size_t>(env) * static_cast<std::size_t>(steps_) +
                           static_cast<std::size_t>(t);
    closes_[et] = 1;
    terminal_[et] = terminal ? 1 : 0;
    boot_[et] = terminal ? 0.0 : bootstrap_value;
}

void RolloutBuffer::set_tail_bootstrap(int env, double value) {
    tail_boot_[static_cast<std::size_t>(env)] = value;
    tail_open_[static_cast<std::size_t>(env)] = 1;
}

bool RolloutBuffer::is_full() const {
    for (int f : filled_)
        if (f != steps_) return false;
    return true;
}

void RolloutBuffer::finalize(double gamma, double lambda, const RunningNormalizer* reward_norm) {
    if (!is_full()) throw std::logic_error("RolloutBuffer::finalize: buffer not full");
    std::vector<double> seg_r, seg_v;
    std::vector<uint8_t> seg_d;
    for (int e = 0; e < num_envs_; ++e) {
        const std::size_t base = static_cast<std::size_t>(e) * static_cast<std::size_t>(steps_);
        int start = 0;
        for (int t = 0; t < steps_; ++t) {
            const std::size_t et = base + static_cast<std::size_t>(t);
            const bool last = (t == steps_ - 1);
            if (!closes_[et] && !last) continue;

            double bootstrap;
            if (closes_[et])
                bootstrap = boot_[et];
            else if (tail_open_[static_cast<std::size_t>(e)])
                bootstrap = tail_boot_[static_cast<std::size_t>(e)];
            else
                throw std::logic_error("RolloutBuffer::finalize: open tail without bootstrap");

            const int len = t - start + 1;
            seg_r.resize(static_cast<std::size_t>(len));
            seg_v.resize(static_cast<std::size_t>(len));
            seg_d.assign(static_cast<std::size_t>(len), 0);
            for (int k = 0; k < len; ++k) {
                const std::size_t src = base + static_cast<std::size_t>(start + k);
                const double r = reward_[src];
                seg_r[static_cast<std::size_t>(k)] = reward_norm ? reward_norm->scale_reward(r) : r;
                seg_v[static_cast<std::size_t>(k)] = value_[src];
            }
            const GaeResult g = compute_gae(seg_r, seg_v, bootstrap, seg_d, gamma, lambda);
            for (int k = 0; k < len; ++k) {
                const std::size_t dst = base + static_cast<std::size_t>(start + k);
                adv_[dst] = g.advantages[static_cast<std::size_t>(k)];
                ret_[dst] = g.returns[static_cast<std::size_t>(k)];
            }
            start = t + 1;
        }
    }
    finalized_ = true;
}

void RolloutBuffer::clear() {
    std::fill(filled_.begin(), filled_.end(), 0);
    std::fill(closes_.begin(), closes_.end(), 0);
    std::fill(terminal_.begin(), terminal_.end(), 0);
    std::fill(tail_open_.begin(), tail_open_.end(), 0);
    finalized_ = false;
}

// --- ActorCritic ---------------------------------------------------------

namespace {

std::vector<int> net_dims(int in, int hidden, int n_hidden, int out) {
    std::vector<int> dims;
    dims.push_back(in);
    for (int i = 0; i < n_hidden; ++i) dims.push_back(hidden);
    dims.push_back(out);
    return dims;
}

}  // namespace

ActorCritic::ActorCritic(const DecPomdpSpec& env_spec, const PpoConfig& cfg, uint64_t init_seed)
    : spec_(env_spec),
      cfg_(cfg),
      policy_(net_dims(env_spec.obs_dim + env_spec.n_agents, cfg.hidden_dim,
                       cfg.num_fc + cfg.num_fc_after, env_spec.n_actions),
              "policy"),
      value_(net_dims(env_spec.global_state_dim, cfg.hidden_dim, cfg.num_fc + cfg.num_fc_after, 1),
             "value"),
      obs_norm_(env_spec.obs_dim),
      state_norm_(env_spec.global_state_dim),
      reward_norm_(1) {
    spec_.validate();
    cfg_.validate();
    Rng pol_rng(derive_seed(init_seed, 1));
    Rng val_rng(derive_seed(init_seed, 2));
    policy_.init_orthogonal(std::sqrt(2.0), 0.01, pol_rng);
    value_.init_orthogonal(std::sqrt(2.0), 1.0, val_rng);
    opt_policy_ = AdamState(policy_.n_params());
    opt_value_ = AdamState(value_.n_params());
    update_rng_.reseed(derive_seed(init_seed, 3));
}

void ActorCritic::build_policy_input(std::span<const double> obs, int agent_id,
                                     std::span<double> out) const {
    if (static_cast<int>(obs.size()) != spec_.obs_dim)
        throw std::invalid_argument("ActorCritic: obs width mismatch");
    if (agent_id < 0 || agent_id >= spec_.n_agents)
        throw std::invalid_argument("ActorCritic: agent id out of range");
    if (cfg_.use_feature_norm)
        obs_norm_.normalize(obs, out.subspan(0, static_cast<std::size_t>(spec_.obs_dim)));
    else
        std::copy(obs.begin(), obs.end(), out.begin());
    // one-hot agent id, appended unnormalized
    for (int i = 0; i < spec_.n_agents; ++i)
        out[static_cast<std::size_t>(spec_.obs_dim + i)] = (i == agent_id) ? 1.0 : 0.0;
}

std::vector<double> ActorCritic::policy_logits(std::span<const double> obs, int agent_id) const {
    std::vector<double> input(static_cast<std::size_t>(policy_input_dim()));
    build_policy_input(obs, agent_id, input);
    return policy_.forward_one(input);
}

int ActorCritic::sample_action(std::span<const double> obs, int agent_id, Rng& rng,
                               double* logprob) const {
    const auto logits = policy_logits(obs, agent_id);
    const int n = spec_.n_actions;
    double zmax = logits[0];
    for (int k = 1; k < n; ++k) zmax = std::max(zmax, logits[static_cast<std::size_t>(k)]);
    double sum = 0.0;
    std::vector<double> p(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        p[static_cast<std::size_t>(k)] = std::exp(logits[static_cast<std::size_t>(k)] - zmax);
        sum += p[static_cast<std::size_t>(k)];
    }
    const double u = rng.uniform01() * sum;
    double acc = 0.0;
    int action = n - 1;
    for (int k = 0; k < n; ++k) {
        acc += p[static_cast<std::size_t>(k)];
        if (u < acc) {
            action = k;
            break;
        }
    }
    if (logprob) *logprob = std::log(p[static_cast<std::size_t>(action)] / sum);
    return action;
}

int ActorCritic::greedy_action(std::span<const double> obs, int agent_id) const {
    const auto logits = policy_logits(obs, agent_id);
    int best = 0;
    for (int k = 1; k < spec_.n_actions; ++k)
        if (logits[static_cast<std::size_t>(k)] > logits[static_cast<std::size_t>(best)]) best = k;
    return best;
}

double ActorCritic::value(std::span<const double> state) const {
    if (static_cast<int>(state.size()) != spec_.global_state_dim)
        throw std::invalid_argument("ActorCritic: state width mismatch");
    std::vector<double> input(state.size());
    if (cfg_.use_feature_norm)
        state_norm_.normalize(state, input);
    else
        std::copy(state.begin(), state.end(), input.begin());
    return value_.forward_one(input)[0];
}

TrainStats ActorCritic::update(RolloutBuffer& buffer, double lr_scale) {
    if (buffer.entry_count() == 0 || !buffer.is_full())
        throw std::logic_error("update: buffer must be full to its declared capacity");
    if (!buffer.is_finalized()) throw std::logic_error("update: buffer must be finalized first");

    const int rows = buffer.entry_count();
    const int m = buffer.m();
    const int pol_in = policy_input_dim();
    const int n_act = spec_.n_actions;
    const int val_in = spec_.global_state_dim;

    // inputs are built once with the stats frozen at phase start, so the
    // first minibatch sees exactly the sampling-time distribution
    std::vector<double> pol_x(static_cast<std::size_t>(rows) * static_cast<std::size_t>(pol_in));
    std::vector<double> val_x(static_cast<std::size_t>(rows) * static_cast<std::size_t>(val_in));
    std::vector<double> row_adv(static_cast<std::size_t>(rows));
    std::vector<double> row_ret(static_cast<std::size_t>(rows));
    std::vector<double> row_old_v(static_cast<std::size_t>(rows));
    for (int r = 0; r < rows; ++r) {
        const auto ur = static_cast<std::size_t>(r);
        const int et = buffer.state_index_of_row(r);
        const int j = buffer.agent_slot_of_row(r);
        const int agent = buffer.agent_ids()[static_cast<std::size_t>(j)];
        std::span<const double> obs{buffer.obs().data() + ur * static_cast<std::size_t>(buffer.obs_dim()),
                                    static_cast<std::size_t>(buffer.obs_dim())};
        build_policy_input(obs, agent,
                           {pol_x.data() + ur * static_cast<std::size_t>(pol_in),
                            static_cast<std::size_t>(pol_in)});
        std::span<const double> st{buffer.states().data() + static_cast<std::size_t>(et) * static_cast<std::size_t>(val_in),
                                   static_cast<std::size_t>(val_in)};
        if (cfg_.use_feature_norm)
            state_norm_.normalize(st, {val_x.data() + ur * static_cast<std::size_t>(val_in),
                                       static_cast<std::size_t>(val_in)});
        else
            std::copy(st.begin(), st.end(), val_x.begin() + static_cast<std::ptrdiff_t>(ur * static_cast<std::size_t>(val_in)));
        row_adv[ur] = buffer.advantages()[static_cast<std::size_t>(et)];
        row_ret[ur] = buffer.returns()[static_cast<std::size_t>(et)];
        row_old_v[ur] = buffer.values()[static_cast<std::size_t>(et)];
    }
    normalize_advantages(row_adv);

    std::vector<int> perm(static_cast<std::size_t>(rows));
    std::vector<double> mb_pol_x, mb_val_x, mb_logits, mb_dlogits, mb_values, mb_dvalues;
    std::vector<double> mb_old_lp, mb_adv, mb_ret, mb_old_v;
    std::vector<int> mb_act;
    std::vector<double> pol_grad(policy_.n_params());
    std::vector<double> val_grad(value_.n_params());
    ForwardCache pol_cache, val_cache;

    TrainStats stats;
    long long clipped_total = 0;
    long long rows_total = 0;

    for (int epoch = 0; epoch < cfg_.ppo_epochs; ++epoch) {
        for (int i = 0; i < rows; ++i) perm[static_cast<std::size_t>(i)] = i;
        // Fisher-Yates with the update stream
        for (int i = rows - 1; i > 0; --i) {
            const int k = static_cast<int>(update_rng_.below(static_cast<uint64_t>(i) + 1));
            std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(k)]);
        }

        const int mb_count = cfg_.minibatch_count;
        for (int mb = 0; mb < mb_count; ++mb) {
            const int lo = static_cast<int>(static_cast<long long>(rows) * mb / mb_count);
            const int hi = static_cast<int>(static_cast<long long>(rows) * (mb + 1) / mb_count);
            const int b = hi - lo;
            if (b == 0) continue;

            mb_pol_x.resize(static_cast<std::size_t>(b) * static_cast<std::size_t>(pol_in));
            mb_val_x.resize(static_cast<std::size_t>(b) * static_cast<std::size_t>(val_in));
            mb_old_lp.resize(static_cast<std::size_t>(b));
            mb_adv.resize(static_cast<std::size_t>(b));
            mb_ret.resize(static_cast<std::size_t>(b));
            mb_old_v.resize(static_cast<std::size_t>(b));
            mb_act.resize(static_cast<std::size_t>(b));
            for (int i = 0; i < b; ++i) {
                const int src = perm[static_cast<std::size_t>(lo + i)];
                const auto us = static_cast<std::size_t>(src);
                const auto ui = static_cast<std::size_t>(i);
                std::copy_n(pol_x.begin() + static_cast<std::ptrdiff_t>(us * static_cast<std::size_t>(pol_in)),
                            pol_in, mb_pol_x.begin() + static_cast<std::ptrdiff_t>(ui * static_cast<std::size_t>(pol_in)));
                std::copy_n(val_x.begin() + static_cast<std::ptrdiff_t>(us * static_cast<std::size_t>(val_in)),
                            val_in, mb_val_x.begin() + static_cast<std::ptrdiff_t>(ui * static_cast<std::size_t>(val_in)));
                mb_old_lp[ui] = buffer.logprobs()[us];
                mb_adv[ui] = row_adv[us];
                mb_ret[ui] = row_ret[us];
                mb_old_v[ui] = row_old_v[us];
                mb_act[ui] = buffer.actions()[us];
            }

            // policy pass
            mb_logits.resize(static_cast<std::size_t>(b) * static_cast<std::size_t>(n_act));
            mb_dlogits.assign(mb_logits.size(), 0.0);
            policy_.forward(mb_pol_x.data(), b, mb_logits.data(), &pol_cache);
            const PolicyLossStats pl =
                policy_minibatch_grad(mb_logits.data(), mb_act, mb_old_lp, mb_adv, b, n_act,
                                      cfg_.clip_eps, cfg_.entropy_coef, mb_dlogits.data());
            std::fill(pol_grad.begin(), pol_grad.end(), 0.0);
            policy_.backward(pol_cache, mb_dlogits.data(), pol_grad);
            const double pol_norm = clip_grad_norm(pol_grad, cfg_.max_grad_norm);
            opt_policy_.step(policy_.params(), pol_grad, cfg_.adam, lr_scale, &policy_.tensors());

            // value pass
            mb_values.resize(static_cast<std::size_t>(b));
            mb_dvalues.assign(static_cast<std::size_t>(b), 0.0);
            value_.forward(mb_val_x.data(), b, mb_values.data(), &val_cache);
            const double vl =
                value_minibatch_grad(mb_values.data(), mb_old_v, mb_ret, b, cfg_.clip_eps,
                                     cfg_.huber_delta, cfg_.value_loss_coef, mb_dvalues.data());
            std::fill(val_grad.begin(), val_grad.end(), 0.0);
            value_.backward(val_cache, mb_dvalues.data(), val_grad);
            const double val_norm = clip_grad_norm(val_grad, cfg_.max_grad_norm);
            opt_value_.step(value_.params(), val_grad, cfg_.adam, lr_scale, &value_.tensors());

            stats.policy_loss += pl.surrogate_loss;
            stats.entropy += pl.entropy;
            stats.value_loss += vl;
            stats.grad_norm_policy += pol_norm;
            stats.grad_norm_value += val_norm;
            clipped_total += pl.clipped;
            rows_total += b;
            ++stats.minibatches;
        }
    }

    const double inv_mb = stats.minibatches > 0 ? 1.0 / stats.minibatches : 0.0;
    stats.policy_loss *= inv_mb;
    stats.value_loss *= inv_mb;
    stats.entropy *= inv_mb;
    stats.grad_norm_policy *= inv_mb;
    stats.grad_norm_value *= inv_mb;
    stats.clip_fraction = rows_total > 0 ? static_cast<double>(clipped_total) / static_cast<double>(rows_total) : 0.0;

    // refresh normalizers from the raw batch, then release the buffer
    if (cfg_.use_feature_norm) {
        obs_norm_.update_batch(buffer.obs().data(), rows);
        const int et_rows = buffer.num_envs() * buffer.steps_per_env();
        state_norm_.update_batch(buffer.states().data(), et_rows);
    }
    if (cfg_.use_reward_norm) {
        const int et_rows = buffer.num_envs() * buffer.steps_per_env();
        reward_norm_.update_batch(buffer.rewards_raw().data(), et_rows);
    }
    buffer.clear();
    return stats;
}

void ActorCritic::save_params(const std::string& path) {
    auto tensors = named_tensors(policy_, "");
    auto vt = named_tensors(value_, "");
    tensors.insert(tensors.end(), vt.begin(), vt.end());
    save_tensors(path, tensors);
}

void ActorCritic::load_params(const std::string& path) {
    auto tensors = named_tensors(policy_, "");
    auto vt = named_tensors(value_, "");
    tensors.insert(tensors.end(), vt.begin(), vt.end());
    load_tensors(path, tensors);
}

}  // namespace marlns
