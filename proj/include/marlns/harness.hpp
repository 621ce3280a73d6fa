#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "marlns/config.hpp"
#include "marlns/env.hpp"
#include "marlns/lns.hpp"
#include "marlns/mappo.hpp"

namespace marlns {

enum class EvalProtocol { MedianFinalTen, Mean100 };

EvalProtocol eval_protocol_from_string(const std::string& id);
std::string to_string(EvalProtocol p);

struct RunConfig {
    std::string env_id = "team_spread";
    EnvParams env_params;
    std::string scheduler_id = "full";
    int n_agents = 2;
    std::optional<int> m;
    int n_t = 8;  // number of LNS iterations
    long long total_env_steps = 0;
    int num_envs = 8;
    int buffer_length = 400;
    uint64_t seed = 1;
    int eval_episodes = 32;
    EvalProtocol eval_protocol = EvalProtocol::MedianFinalTen;
    std::string out_path;
    PpoConfig ppo;

    bool identity_permutation = false;  // BLNS test hook
    std::optional<std::vector<int>> alns_size_list;
    bool eval_per_update = false;  // fidelity runs: also evaluate after each update

    void validate() const;
    long long rounds_total() const { return total_env_steps / (static_cast<long long>(num_envs) * buffer_length); }

    static RunConfig from_kv(const KvConfig& kv);
};

struct IterationRow {
    int lns_iteration = 0;
    int m = 0;
    std::vector<int> neighborhood;
    long long env_steps = 0;
    double eval_metric = 0.0;
    double sampling_time_s = 0.0;
    double updating_time_s = 0.0;
    double cumulative_wall_s = 0.0;
};

struct RunMetrics {
    std::vector<IterationRow> rows;
    EvalProtocol protocol = EvalProtocol::MedianFinalTen;
    double baseline_metric = 0.0;  // untrained policy, seeds the ALNS watermark
    double final_metric = 0.0;
    long long total_env_steps = 0;
    std::vector<TrainStats> update_stats;   // one entry per update
    std::vector<double> per_update_eval;    // filled when eval_per_update

    double sampling_total_s() const;
    double updating_total_s() const;
};

// Owns the num_envs environment workers. Each worker holds one env, one RNG
// stream and the env's live episode state across phases; sample_phase fills
// the buffer with buffer_length steps per env, in parallel over envs. The
// result is bit-identical across thread counts because workers share
// nothing.
class SamplerPool {
public:
    SamplerPool(const RunConfig& cfg, const DecPomdpSpec& spec);

    void sample_phase(const ActorCritic& ac, RolloutBuffer& buffer);
    long long env_steps_sampled() const { return steps_sampled_; }

private:
    struct Worker {
        std::unique_ptr<Env> env;
        Rng rng;
        EnvStep current;
        bool started = false;
    };
    std::vector<Worker> workers_;
    int buffer_length_;
    long long steps_sampled_ = 0;

    void run_worker(int e, const ActorCritic& ac, RolloutBuffer& buffer);
};

using EnvFactory = std::function<std::unique_ptr<Env>()>;
using ActionFn = std::function<int(const Vec& obs, int agent_id)>;

// Mean episode return over `episodes` rollouts; env reseeded per episode
// from eval_seed so the metric is deterministic.
double evaluate_rollouts(const ActionFn& act, const EnvFactory& factory, int episodes,
                         uint64_t eval_seed);
double evaluate_policy(const ActorCritic& ac, const EnvFactory& factory, int episodes,
                       uint64_t eval_seed);

// Optional early-stop hook, checked after each LNS iteration.
using StopCallback = std::function<bool(const ActorCritic& ac, int lns_iteration)>;

// The full training loop: per LNS iteration select a neighborhood, run
// sample/update rounds on the filtered buffer, evaluate, feed the scheduler.
RunMetrics train(const RunConfig& cfg, const StopCallback& stop = {},
                 ActorCritic* trained_out = nullptr);

// Dedicated plain trainer with no neighborhood machinery: every agent's
// trajectory is kept every round. Evaluation cadence mirrors train() so the
// two are directly comparable.
RunMetrics train_plain_mappo(const RunConfig& cfg, const StopCallback& stop = {},
                             ActorCritic* trained_out = nullptr);

struct BenchReport {
    bool load_check_passed = false;
    double load_check_spread = 0.0;  // relative spread across warmup probes
    RunMetrics baseline, candidate;
    double sampling_reduction_pct = 0.0;
    double updating_reduction_pct = 0.0;
    double total_reduction_pct = 0.0;
    bool sampling_dominates = false;  // in the baseline run

    std::string to_text() const;
};

// Runs both configs under identical seeds/budgets and reports per-phase
// times and total wall-clock reduction. The configs may differ only in
// scheduler id, m and ALNS options. Three warmup probes of a fixed kernel
// gauge machine-load noise first; spread > 20% flags the report unreliable.
BenchReport benchmark_time(const RunConfig& baseline, const RunConfig& candidate);

// Header: lns_iteration,m,neighborhood,env_steps,eval_metric,
// sampling_time_s,updating_time_s,cumulative_wall_s. Reals use 6 significant
// digits; the neighborhood field is the id list joined with spaces.
void emit_csv(const RunMetrics& metrics, const std::string& path);
RunMetrics parse_csv(const std::string& path);

// Per-update training statistics sidecar (written next to the main CSV as
// <path>.updates.csv by train when an output path is set).
void emit_update_stats_csv(const RunMetrics& metrics, const std::string& path);

}  // namespace marlns
