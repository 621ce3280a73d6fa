// Times the OpenMP kernels against the serial reference: batched policy-net
// forward/backward at several batch sizes, and one full sampling phase.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "marlns/harness.hpp"
#include "marlns/nn.hpp"
#include "marlns/parallel.hpp"
#include "marlns/rng.hpp"

using namespace marlns;

namespace {

using Clock = std::chrono::steady_clock;

double time_net_pass(ExecMode mode, int batch, int reps) {
    set_exec_mode(mode);
    Rng rng(42);
    Mlp net({26, 64, 64, 64, 5}, "bench");
    net.init_orthogonal(std::sqrt(2.0), 0.01, rng);
    std::vector<double> x(static_cast<std::size_t>(batch) * 26);
    for (auto& v : x) v = rng.normal();
    std::vector<double> y(static_cast<std::size_t>(batch) * 5);
    std::vector<double> dy(y.size(), 0.1);
    std::vector<double> grad(net.n_params());
    ForwardCache cache;

    const auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r) {
        net.forward(x.data(), batch, y.data(), &cache);
        std::fill(grad.begin(), grad.end(), 0.0);
        net.backward(cache, dy.data(), grad);
    }
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double time_sampling(ExecMode mode, int steps_per_env) {
    set_exec_mode(mode);
    RunConfig cfg;
    cfg.env_id = "team_spread";
    cfg.n_agents = 8;
    cfg.num_envs = 8;
    cfg.buffer_length = steps_per_env;
    cfg.total_env_steps = static_cast<long long>(cfg.num_envs) * cfg.buffer_length;
    cfg.n_t = 1;
    cfg.seed = 7;

    const auto env = make_env(cfg.env_id, cfg.n_agents, cfg.env_params);
    const DecPomdpSpec spec = env->spec();
    ActorCritic ac(spec, cfg.ppo, 11);
    SamplerPool pool(cfg, spec);
    std::vector<int> all(static_cast<std::size_t>(cfg.n_agents));
    for (int i = 0; i < cfg.n_agents; ++i) all[static_cast<std::size_t>(i)] = i;
    RolloutBuffer buffer(cfg.num_envs, cfg.buffer_length, all, cfg.n_agents, spec.obs_dim,
                         spec.global_state_dim);

    const auto t0 = Clock::now();
    pool.sample_phase(ac, buffer);
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

int main() {
    std::printf("threads available: %d\n\n", exec_threads());
    std::printf("%-28s %10s %10s %8s\n", "kernel", "serial(s)", "openmp(s)", "speedup");

    for (int batch : {256, 2048, 16384}) {
        const int reps = 131072 / batch;
        const double ts = time_net_pass(ExecMode::Serial, batch, reps);
        const double tp = time_net_pass(ExecMode::OpenMP, batch, reps);
        std::printf("net fwd+bwd, batch %-6d    %10.4f %10.4f %7.2fx\n", batch, ts, tp, ts / tp);
    }

    for (int steps : {100, 400}) {
        const double ts = time_sampling(ExecMode::Serial, steps);
        const double tp = time_sampling(ExecMode::OpenMP, steps);
        std::printf("sampling, 8 envs x %-5d    %10.4f %10.4f %7.2fx\n", steps, ts, tp, ts / tp);
    }

    set_exec_mode(ExecMode::OpenMP);
    return 0;
}
