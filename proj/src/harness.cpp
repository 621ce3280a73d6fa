#include "marlns/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "marlns/parallel.hpp"

namespace marlns {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// seed stream ids, derived from the master seed via derive_seed
constexpr uint64_t kInitStream = 1;
constexpr uint64_t kSchedulerStream = 2;
constexpr uint64_t kWorkerRngBase = 100;
constexpr uint64_t kEnvSeedBase = 10000;
constexpr uint64_t kEvalBase = 20000;       // + lns iteration (0 = baseline)
constexpr uint64_t kEvalUpdateBase = 30000; // + update index, fidelity runs

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 0) return 0.0;
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

EvalProtocol eval_protocol_from_string(const std::string& id) {
    if (id == "median_final_ten") return EvalProtocol::MedianFinalTen;
    if (id == "mean_100") return EvalProtocol::Mean100;
    throw std::invalid_argument("unknown eval protocol '" + id + "'");
}

std::string to_string(EvalProtocol p) {
    return p == EvalProtocol::MedianFinalTen ? "median_final_ten" : "mean_100";
}

void RunConfig::validate() const {
    if (env_id != "team_spread" && env_id != "climb_game" && env_id != "gaussian_squeeze")
        throw std::invalid_argument("RunConfig: unknown environment id '" + env_id + "'");
    scheduler_from_string(scheduler_id);  // throws on unknown ids
    if (n_agents < 1) throw std::invalid_argument("RunConfig: n_agents must be >= 1");
    if (m && (*m < 1 || *m > n_agents))
        throw std::invalid_argument("RunConfig: m must be in [1, n_agents]");
    if (n_t < 1) throw std::invalid_argument("RunConfig: n_t must be >= 1");
    if (num_envs < 1 || buffer_length < 1)
        throw std::invalid_argument("RunConfig: num_envs and buffer_length must be >= 1");
    const long long phase = static_cast<long long>(num_envs) * buffer_length;
    if (total_env_steps <= 0 || total_env_steps % phase != 0)
        throw std::invalid_argument(
            "RunConfig: total_env_steps must be a positive multiple of num_envs * buffer_length");
    if (rounds_total() < n_t)
        throw std::invalid_argument("RunConfig: too few training rounds for n_t LNS iterations");
    if (eval_episodes < 1) throw std::invalid_argument("RunConfig: eval_episodes must be >= 1");
    ppo.validate();
}

RunConfig RunConfig::from_kv(const KvConfig& kv) {
    RunConfig cfg;
    cfg.env_id = kv.get_str("run.env", cfg.env_id);
    cfg.scheduler_id = kv.get_str("run.algo", cfg.scheduler_id);
    cfg.n_agents = kv.get_int("run.n_agents", cfg.n_agents);
    if (kv.has("run.m")) cfg.m = kv.get_int("run.m", 0);
    cfg.n_t = kv.get_int("run.n_t", cfg.n_t);
    cfg.total_env_steps = kv.get_ll("run.total_steps", cfg.total_env_steps);
    cfg.num_envs = kv.get_int("run.num_envs", cfg.num_envs);
    cfg.buffer_length = kv.get_int("run.buffer_length", cfg.buffer_length);
    cfg.seed = static_cast<uint64_t>(kv.get_ll("run.seed", static_cast<long long>(cfg.seed)));
    cfg.eval_episodes = kv.get_int("run.eval_episodes", cfg.eval_episodes);
    cfg.eval_protocol = eval_protocol_from_string(
        kv.get_str("run.eval_protocol", to_string(cfg.eval_protocol)));
    cfg.out_path = kv.get_str("run.out", cfg.out_path);
    cfg.eval_per_update = kv.get_bool("run.eval_per_update", cfg.eval_per_update);
    if (kv.has("run.alns_size_list")) {
        std::vector<int> sizes;
        for (double d : kv.get_doubles("run.alns_size_list")) sizes.push_back(static_cast<int>(d));
        cfg.alns_size_list = sizes;
    }

    cfg.env_params.grid_size = kv.get_int("env.grid_size", cfg.env_params.grid_size);
    cfg.env_params.episode_limit = kv.get_int("env.episode_limit", cfg.env_params.episode_limit);
    if (kv.has("env.unit_weights")) cfg.env_params.unit_weights = kv.get_doubles("env.unit_weights");
    if (kv.has("env.mode_mus")) {
        const auto mus = kv.get_doubles("env.mode_mus");
        const auto sigmas = kv.get_doubles("env.mode_sigmas");
        if (mus.size() != sigmas.size())
            throw std::invalid_argument("config: env.mode_mus and env.mode_sigmas differ in length");
        cfg.env_params.modes.clear();
        for (std::size_t i = 0; i < mus.size(); ++i)
            cfg.env_params.modes.emplace_back(mus[i], sigmas[i]);
    }

    PpoConfig& p = cfg.ppo;
    p.clip_eps = kv.get_double("ppo.clip_eps", p.clip_eps);
    p.gae_lambda = kv.get_double("ppo.gae_lambda", p.gae_lambda);
    p.gamma = kv.get_double("ppo.gamma", p.gamma);
    p.huber_delta = kv.get_double("ppo.huber_delta", p.huber_delta);
    p.ppo_epochs = kv.get_int("ppo.ppo_epochs", p.ppo_epochs);
    p.minibatch_count = kv.get_int("ppo.minibatch_count", p.minibatch_count);
    p.value_loss_coef = kv.get_double("ppo.value_loss_coef", p.value_loss_coef);
    p.entropy_coef = kv.get_double("ppo.entropy_coef", p.entropy_coef);
    p.max_grad_norm = kv.get_double("ppo.max_grad_norm", p.max_grad_norm);
    p.hidden_dim = kv.get_int("ppo.hidden_dim", p.hidden_dim);
    p.num_fc = kv.get_int("ppo.num_fc", p.num_fc);
    p.num_fc_after = kv.get_int("ppo.num_fc_after", p.num_fc_after);
    p.use_reward_norm = kv.get_bool("ppo.use_reward_norm", p.use_reward_norm);
    p.use_feature_norm = kv.get_bool("ppo.use_feature_norm", p.use_feature_norm);
    p.lr_decay = kv.get_bool("ppo.lr_decay", p.lr_decay);
    p.adam.lr = kv.get_double("ppo.lr", p.adam.lr);
    p.adam.eps = kv.get_double("ppo.adam_eps", p.adam.eps);
    p.adam.weight_decay = kv.get_double("ppo.weight_decay", p.adam.weight_decay);
    return cfg;
}

double RunMetrics::sampling_total_s() const {
    double s = 0.0;
    for (const auto& r : rows) s += r.sampling_time_s;
    return s;
}

double RunMetrics::updating_total_s() const {
    double s = 0.0;
    for (const auto& r : rows) s += r.updating_time_s;
    return s;
}

// --- SamplerPool ----------------------------------------------------------

SamplerPool::SamplerPool(const RunConfig& cfg, const DecPomdpSpec& spec)
    : buffer_length_(cfg.buffer_length) {
    workers_.resize(static_cast<std::size_t>(cfg.num_envs));
    for (int e = 0; e < cfg.num_envs; ++e) {
        auto& w = workers_[static_cast<std::size_t>(e)];
        w.env = make_env(cfg.env_id, cfg.n_agents, cfg.env_params);
        if (w.env->spec().n_agents != spec.n_agents || w.env->spec().obs_dim != spec.obs_dim)
            throw std::logic_error("SamplerPool: env spec mismatch");
        w.env->seed(derive_seed(cfg.seed, kEnvSeedBase + static_cast<uint64_t>(e)));
        w.rng.reseed(derive_seed(cfg.seed, kWorkerRngBase + static_cast<uint64_t>(e)));
    }
}

void SamplerPool::run_worker(int e, const ActorCritic& ac, RolloutBuffer& buffer) {
    Worker& w = workers_[static_cast<std::size_t>(e)];
    if (!w.started) {
        w.current = w.env->reset();
        w.started = true;
    }
    const int n = ac.env_spec().n_agents;
    std::vector<int> joint(static_cast<std::size_t>(n));
    std::vector<double> logprobs(static_cast<std::size_t>(n));

    for (int t = 0; t < buffer_length_; ++t) {
        const double v = ac.value(w.current.global_state);
        for (int i = 0; i < n; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            joint[ui] = ac.sample_action(w.current.obs[ui], i, w.rng, &logprobs[ui]);
        }
        EnvStep next = w.env->step(joint);
        buffer.put_step(e, t, w.current.obs, w.current.global_state, joint, logprobs, next.reward, v);
        if (next.done) {
            const double boot = next.truncated ? ac.value(next.global_state) : 0.0;
            buffer.mark_segment_end(e, t, !next.truncated, boot);
            w.current = w.env->reset();
        } else {
            w.current = std::move(next);
        }
    }
    // open tail: bootstrap with the critic's view of the state we stopped in
    buffer.set_tail_bootstrap(e, ac.value(w.current.global_state));
}

void SamplerPool::sample_phase(const ActorCritic& ac, RolloutBuffer& buffer) {
    const int n_envs = static_cast<int>(workers_.size());
    if (buffer.num_envs() != n_envs || buffer.steps_per_env() != buffer_length_)
        throw std::logic_error("sample_phase: buffer shape mismatch");
#ifdef _OPENMP
    if (exec_mode() == ExecMode::OpenMP) {
#pragma omp parallel for schedule(static, 1)
        for (int e = 0; e < n_envs; ++e) run_worker(e, ac, buffer);
    } else
#endif
    {
        for (int e = 0; e < n_envs; ++e) run_worker(e, ac, buffer);
    }
    steps_sampled_ += static_cast<long long>(n_envs) * buffer_length_;
}

// --- evaluation ------------------------------------------------------------

double evaluate_rollouts(const ActionFn& act, const EnvFactory& factory, int episodes,
                         uint64_t eval_seed) {
    if (episodes < 1) throw std::invalid_argument("evaluate_rollouts: episodes must be >= 1");
    auto env = factory();
    const int n = env->spec().n_agents;
    double total = 0.0;
    std::vector<int> joint(static_cast<std::size_t>(n));
    for (int ep = 0; ep < episodes; ++ep) {
        env->seed(derive_seed(eval_seed, static_cast<uint64_t>(ep)));
        EnvStep cur = env->reset();
        double ret = 0.0;
        for (;;) {
            for (int i = 0; i < n; ++i)
                joint[static_cast<std::size_t>(i)] = act(cur.obs[static_cast<std::size_t>(i)], i);
            EnvStep next = env->step(joint);
            ret += next.reward;
            if (next.done) break;
            cur = std::move(next);
        }
        total += ret;
    }
    return total / episodes;
}

double evaluate_policy(const ActorCritic& ac, const EnvFactory& factory, int episodes,
                       uint64_t eval_seed) {
    return evaluate_rollouts(
        [&ac](const Vec& obs, int agent_id) { return ac.greedy_action(obs, agent_id); }, factory,
        episodes, eval_seed);
}

// --- training loops ---------------------------------------------------------

namespace {

struct RoundRunner {
    const RunConfig& cfg;
    EnvFactory factory;
    ActorCritic& ac;
    SamplerPool& pool;
    RunMetrics& metrics;
    long long rounds_total = 0;
    long long updates_done = 0;

    void run_rounds(RolloutBuffer& buffer, long long rounds, double& sampling_s,
                    double& updating_s) {
        for (long long r = 0; r < rounds; ++r) {
            const auto ts = Clock::now();
            pool.sample_phase(ac, buffer);
            buffer.finalize(cfg.ppo.gamma, cfg.ppo.gae_lambda,
                            cfg.ppo.use_reward_norm ? &ac.reward_normalizer() : nullptr);
            sampling_s += seconds_since(ts);

            const auto tu = Clock::now();
            const double lr_scale =
                cfg.ppo.lr_decay
                    ? 1.0 - static_cast<double>(updates_done) / static_cast<double>(rounds_total)
                    : 1.0;
            TrainStats stats;
            try {
                stats = ac.update(buffer, lr_scale);
            } catch (const std::exception& ex) {
                throw std::runtime_error("training aborted at update " +
                                         std::to_string(updates_done + 1) + ": " + ex.what());
            }
            updating_s += seconds_since(tu);
            metrics.update_stats.push_back(stats);
            ++updates_done;

            if (cfg.eval_per_update) {
                metrics.per_update_eval.push_back(evaluate_policy(
                    ac, factory, cfg.eval_episodes,
                    derive_seed(cfg.seed, kEvalUpdateBase + static_cast<uint64_t>(updates_done))));
            }
        }
    }
};

double finalize_metric(RunMetrics& metrics) {
    if (metrics.rows.empty()) return 0.0;
    if (metrics.protocol == EvalProtocol::Mean100) return metrics.rows.back().eval_metric;
    std::vector<double> tail;
    const std::size_t n = metrics.rows.size();
    for (std::size_t i = n > 10 ? n - 10 : 0; i < n; ++i)
        tail.push_back(metrics.rows[i].eval_metric);
    return median_of(std::move(tail));
}

}  // namespace

RunMetrics train(const RunConfig& cfg, const StopCallback& stop, ActorCritic* trained_out) {
    cfg.validate();
    const auto probe_env = make_env(cfg.env_id, cfg.n_agents, cfg.env_params);
    const DecPomdpSpec spec = probe_env->spec();

    ActorCritic ac(spec, cfg.ppo, derive_seed(cfg.seed, kInitStream));
    SamplerPool pool(cfg, spec);
    SchedulerState sched =
        make_scheduler(scheduler_from_string(cfg.scheduler_id), cfg.n_agents, cfg.m,
                       derive_seed(cfg.seed, kSchedulerStream), cfg.identity_permutation,
                       cfg.alns_size_list);
    EnvFactory factory = [&cfg] { return make_env(cfg.env_id, cfg.n_agents, cfg.env_params); };

    RunMetrics metrics;
    metrics.protocol = cfg.eval_protocol;
    RoundRunner runner{cfg, factory, ac, pool, metrics, cfg.rounds_total()};

    const auto t0 = Clock::now();
    metrics.baseline_metric =
        evaluate_policy(ac, factory, cfg.eval_episodes, derive_seed(cfg.seed, kEvalBase));
    record_baseline(sched, metrics.baseline_metric);

    const long long base_rounds = cfg.rounds_total() / cfg.n_t;
    const long long remainder = cfg.rounds_total() % cfg.n_t;

    for (int iter = 1; iter <= cfg.n_t; ++iter) {
        const Neighborhood nb = select_neighborhood(sched);
        RolloutBuffer buffer(cfg.num_envs, cfg.buffer_length, nb.agent_ids, cfg.n_agents,
                             spec.obs_dim, spec.global_state_dim);
        const long long rounds = base_rounds + (iter == cfg.n_t ? remainder : 0);

        double sampling_s = 0.0, updating_s = 0.0;
        try {
            runner.run_rounds(buffer, rounds, sampling_s, updating_s);
        } catch (const std::exception&) {
            // diagnostic dump: whatever completed before the abort
            if (!cfg.out_path.empty()) emit_csv(metrics, cfg.out_path + ".abort.csv");
            throw;
        }

        const double metric = evaluate_policy(
            ac, factory, cfg.eval_episodes, derive_seed(cfg.seed, kEvalBase + static_cast<uint64_t>(iter)));
        record_evaluation(sched, metric);

        IterationRow row;
        row.lns_iteration = iter;
        row.m = nb.size();
        row.neighborhood = nb.agent_ids;
        row.env_steps = pool.env_steps_sampled();
        row.eval_metric = metric;
        row.sampling_time_s = sampling_s;
        row.updating_time_s = updating_s;
        row.cumulative_wall_s = seconds_since(t0);
        metrics.rows.push_back(std::move(row));

        if (stop && stop(ac, iter)) break;
    }

    metrics.total_env_steps = pool.env_steps_sampled();
    metrics.final_metric = finalize_metric(metrics);
    if (!cfg.out_path.empty()) {
        emit_csv(metrics, cfg.out_path);
        emit_update_stats_csv(metrics, cfg.out_path + ".updates.csv");
    }
    if (trained_out) *trained_out = ac;
    return metrics;
}

RunMetrics train_plain_mappo(const RunConfig& cfg, const StopCallback& stop,
                             ActorCritic* trained_out) {
    cfg.validate();
    const auto probe_env = make_env(cfg.env_id, cfg.n_agents, cfg.env_params);
    const DecPomdpSpec spec = probe_env->spec();

    ActorCritic ac(spec, cfg.ppo, derive_seed(cfg.seed, kInitStream));
    SamplerPool pool(cfg, spec);
    EnvFactory factory = [&cfg] { return make_env(cfg.env_id, cfg.n_agents, cfg.env_params); };

    RunMetrics metrics;
    metrics.protocol = cfg.eval_protocol;
    RoundRunner runner{cfg, factory, ac, pool, metrics, cfg.rounds_total()};

    std::vector<int> all_agents(static_cast<std::size_t>(cfg.n_agents));
    for (int i = 0; i < cfg.n_agents; ++i) all_agents[static_cast<std::size_t>(i)] = i;
    RolloutBuffer buffer(cfg.num_envs, cfg.buffer_length, all_agents, cfg.n_agents, spec.obs_dim,
                         spec.global_state_dim);

    const auto t0 = Clock::now();
    metrics.baseline_metric =
        evaluate_policy(ac, factory, cfg.eval_episodes, derive_seed(cfg.seed, kEvalBase));

    const long long base_rounds = cfg.rounds_total() / cfg.n_t;
    const long long remainder = cfg.rounds_total() % cfg.n_t;

    for (int span = 1; span <= cfg.n_t; ++span) {
        const long long rounds = base_rounds + (span == cfg.n_t ? remainder : 0);
        double sampling_s = 0.0, updating_s = 0.0;
        try {
            runner.run_rounds(buffer, rounds, sampling_s, updating_s);
        } catch (const std::exception&) {
            if (!cfg.out_path.empty()) emit_csv(metrics, cfg.out_path + ".abort.csv");
            throw;
        }

        const double metric = evaluate_policy(
            ac, factory, cfg.eval_episodes, derive_seed(cfg.seed, kEvalBase + static_cast<uint64_t>(span)));

        IterationRow row;
        row.lns_iteration = span;
        row.m = cfg.n_agents;
        row.neighborhood = all_agents;
        row.env_steps = pool.env_steps_sampled();
        row.eval_metric = metric;
        row.sampling_time_s = sampling_s;
        row.updating_time_s = updating_s;
        row.cumulative_wall_s = seconds_since(t0);
        metrics.rows.push_back(std::move(row));

        if (stop && stop(ac, span)) break;
    }

    metrics.total_env_steps = pool.env_steps_sampled();
    metrics.final_metric = finalize_metric(metrics);
    if (!cfg.out_path.empty()) {
        emit_csv(metrics, cfg.out_path);
        emit_update_stats_csv(metrics, cfg.out_path + ".updates.csv");
    }
    if (trained_out) *trained_out = ac;
    return metrics;
}

// --- benchmark --------------------------------------------------------------

namespace {

double probe_kernel_seconds() {
    Rng rng(12345);
    Mlp net({64, 64, 64, 1}, "probe");
    net.init_orthogonal(std::sqrt(2.0), 1.0, rng);
    const int rows = 2048;
    std::vector<double> x(static_cast<std::size_t>(rows) * 64);
    for (auto& v : x) v = rng.normal();
    std::vector<double> y(static_cast<std::size_t>(rows));
    std::vector<double> dy(static_cast<std::size_t>(rows), 1.0);
    std::vector<double> grad(net.n_params());
    ForwardCache cache;
    const auto t0 = Clock::now();
    for (int rep = 0; rep < 10; ++rep) {
        net.forward(x.data(), rows, y.data(), &cache);
        std::fill(grad.begin(), grad.end(), 0.0);
        net.backward(cache, dy.data(), grad);
    }
    return seconds_since(t0);
}

void check_comparable(const RunConfig& a, const RunConfig& b) {
    const bool same = a.env_id == b.env_id && a.n_agents == b.n_agents &&
                      a.total_env_steps == b.total_env_steps && a.num_envs == b.num_envs &&
                      a.buffer_length == b.buffer_length && a.seed == b.seed &&
                      a.n_t == b.n_t && a.eval_episodes == b.eval_episodes;
    if (!same)
        throw std::invalid_argument(
            "benchmark_time: configs may differ only in scheduler, m and ALNS options");
}

}  // namespace

BenchReport benchmark_time(const RunConfig& baseline, const RunConfig& candidate) {
    check_comparable(baseline, candidate);

    BenchReport report;
    double lo = 1e300, hi = 0.0, sum = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double s = probe_kernel_seconds();
        lo = std::min(lo, s);
        hi = std::max(hi, s);
        sum += s;
    }
    report.load_check_spread = (hi - lo) / (sum / 3.0);
    report.load_check_passed = report.load_check_spread <= 0.20;

    report.baseline = baseline.scheduler_id == "full" ? train_plain_mappo(baseline) : train(baseline);
    report.candidate = train(candidate);

    const double bs = report.baseline.sampling_total_s();
    const double bu = report.baseline.updating_total_s();
    const double bt = report.baseline.rows.empty() ? 0.0 : report.baseline.rows.back().cumulative_wall_s;
    const double cs = report.candidate.sampling_total_s();
    const double cu = report.candidate.updating_total_s();
    const double ct = report.candidate.rows.empty() ? 0.0 : report.candidate.rows.back().cumulative_wall_s;
    report.sampling_reduction_pct = bs > 0.0 ? 100.0 * (bs - cs) / bs : 0.0;
    report.updating_reduction_pct = bu > 0.0 ? 100.0 * (bu - cu) / bu : 0.0;
    report.total_reduction_pct = bt > 0.0 ? 100.0 * (bt - ct) / bt : 0.0;
    report.sampling_dominates = bs > bu;
    return report;
}

std::string BenchReport::to_text() const {
    std::ostringstream os;
    os << "load check: " << (load_check_passed ? "passed" : "FLAGGED UNRELIABLE")
       << " (relative spread " << load_check_spread * 100.0 << "%)\n";
    auto line = [&os](const char* name, const RunMetrics& m) {
        os << name << ": sampling " << m.sampling_total_s() << " s, updating "
           << m.updating_total_s() << " s, total "
           << (m.rows.empty() ? 0.0 : m.rows.back().cumulative_wall_s) << " s\n";
    };
    line("baseline ", baseline);
    line("candidate", candidate);
    os << "reduction: sampling " << sampling_reduction_pct << "%, updating "
       << updating_reduction_pct << "%, total " << total_reduction_pct << "%\n";
    os << "sampling dominates baseline: " << (sampling_dominates ? "yes" : "no") << "\n";
    return os.str();
}

// --- CSV ---------------------------------------------------------------------

namespace {

std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

constexpr const char* kCsvHeader =
    "lns_iteration,m,neighborhood,env_steps,eval_metric,sampling_time_s,updating_time_s,"
    "cumulative_wall_s";

}  // namespace

void emit_csv(const RunMetrics& metrics, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("emit_csv: cannot open " + path);
    f << kCsvHeader << "\n";
    for (const auto& r : metrics.rows) {
        f << r.lns_iteration << "," << r.m << ",";
        for (std::size_t i = 0; i < r.neighborhood.size(); ++i)
            f << (i ? " " : "") << r.neighborhood[i];
        f << "," << r.env_steps << "," << fmt_real(r.eval_metric) << ","
          << fmt_real(r.sampling_time_s) << "," << fmt_real(r.updating_time_s) << ","
          << fmt_real(r.cumulative_wall_s) << "\n";
    }
    if (!f) throw std::runtime_error("emit_csv: write failed for " + path);
}

void emit_update_stats_csv(const RunMetrics& metrics, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("emit_update_stats_csv: cannot open " + path);
    const bool with_eval = metrics.per_update_eval.size() == metrics.update_stats.size();
    f << "update,policy_loss,value_loss,entropy,grad_norm_policy,grad_norm_value,clip_fraction";
    if (with_eval) f << ",eval_metric";
    f << "\n";
    for (std::size_t i = 0; i < metrics.update_stats.size(); ++i) {
        const TrainStats& s = metrics.update_stats[i];
        f << (i + 1) << "," << fmt_real(s.policy_loss) << "," << fmt_real(s.value_loss) << ","
          << fmt_real(s.entropy) << "," << fmt_real(s.grad_norm_policy) << ","
          << fmt_real(s.grad_norm_value) << "," << fmt_real(s.clip_fraction);
        if (with_eval) f << "," << fmt_real(metrics.per_update_eval[i]);
        f << "\n";
    }
    if (!f) throw std::runtime_error("emit_update_stats_csv: write failed for " + path);
}

RunMetrics parse_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("parse_csv: cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("parse_csv: empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) throw std::runtime_error("parse_csv: unexpected header in " + path);

    RunMetrics metrics;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream in(line);
        std::string field;
        IterationRow row;
        std::getline(in, field, ',');
        row.lns_iteration = std::stoi(field);
        std::getline(in, field, ',');
        row.m = std::stoi(field);
        std::getline(in, field, ',');
        {
            std::istringstream ids(field);
            int id;
            while (ids >> id) row.neighborhood.push_back(id);
        }
        std::getline(in, field, ',');
        row.env_steps = std::stoll(field);
        std::getline(in, field, ',');
        row.eval_metric = std::stod(field);
        std::getline(in, field, ',');
        row.sampling_time_s = std::stod(field);
        std::getline(in, field, ',');
        row.updating_time_s = std::stod(field);
        std::getline(in, field, ',');
        row.cumulative_wall_s = std::stod(field);
        metrics.rows.push_back(std::move(row));
    }
    metrics.final_metric = finalize_metric(metrics);
    if (!metrics.rows.empty()) metrics.total_env_steps = metrics.rows.back().env_steps;
    return metrics;
}

}  // namespace marlns
