#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "marlns/bcd.hpp"
#include "marlns/harness.hpp"
#include "marlns/parallel.hpp"
#include "marlns/plot.hpp"

namespace {

struct RunFlags {
    std::string config_path;
    std::optional<std::string> env, algo, eval_protocol, out;
    std::optional<int> n_agents, m, nt, num_envs, buffer_length, eval_episodes;
    std::optional<long long> total_steps;
    std::optional<long long> seed;
    bool serial = false;
    std::string save_params;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--config", f.config_path, "config file (key = value sections)");
    cmd->add_option("--env", f.env, "environment id: team_spread|climb_game|gaussian_squeeze");
    cmd->add_option("--algo", f.algo, "scheduler id: full|rlns|blns|alns");
    cmd->add_option("--n-agents", f.n_agents, "number of agents");
    cmd->add_option("--m", f.m, "neighborhood size (RLNS/BLNS)");
    cmd->add_option("--nt", f.nt, "number of LNS iterations");
    cmd->add_option("--total-steps", f.total_steps, "total environment steps");
    cmd->add_option("--seed", f.seed, "master seed");
    cmd->add_option("--num-envs", f.num_envs, "parallel sampling workers");
    cmd->add_option("--buffer-length", f.buffer_length, "steps per env per sampling phase");
    cmd->add_option("--eval-episodes", f.eval_episodes, "episodes per evaluation");
    cmd->add_option("--eval-protocol", f.eval_protocol, "median_final_ten|mean_100");
    cmd->add_option("--out", f.out, "metrics CSV path");
    cmd->add_flag("--serial", f.serial, "run the serial reference kernels");
    cmd->add_option("--save-params", f.save_params, "write the trained parameters to this file");
}

marlns::RunConfig build_config(const RunFlags& f) {
    std::string path = f.config_path;
    if (path.empty()) {
        // the one environment variable override: the config path
        if (const char* env_path = std::getenv("MARLNS_CONFIG")) path = env_path;
    }
    marlns::KvConfig kv;
    if (!path.empty()) kv = marlns::KvConfig::from_file(path);
    marlns::RunConfig cfg = marlns::RunConfig::from_kv(kv);

    if (f.env) cfg.env_id = *f.env;
    if (f.algo) cfg.scheduler_id = *f.algo;
    if (f.n_agents) cfg.n_agents = *f.n_agents;
    if (f.m) cfg.m = *f.m;
    if (f.nt) cfg.n_t = *f.nt;
    if (f.total_steps) cfg.total_env_steps = *f.total_steps;
    if (f.seed) cfg.seed = static_cast<uint64_t>(*f.seed);
    if (f.num_envs) cfg.num_envs = *f.num_envs;
    if (f.buffer_length) cfg.buffer_length = *f.buffer_length;
    if (f.eval_episodes) cfg.eval_episodes = *f.eval_episodes;
    if (f.eval_protocol) cfg.eval_protocol = marlns::eval_protocol_from_string(*f.eval_protocol);
    if (f.out) cfg.out_path = *f.out;
    if (f.serial) marlns::set_exec_mode(marlns::ExecMode::Serial);
    return cfg;
}

int cmd_train(const RunFlags& flags) {
    const marlns::RunConfig cfg = build_config(flags);
    marlns::ActorCritic* trained = nullptr;
    std::optional<marlns::ActorCritic> holder;
    if (!flags.save_params.empty()) {
        // construct lazily through train()'s out parameter
        holder.emplace(marlns::make_env(cfg.env_id, cfg.n_agents, cfg.env_params)->spec(), cfg.ppo,
                       0);
        trained = &*holder;
    }
    const marlns::RunMetrics metrics = marlns::train(cfg, {}, trained);
    std::printf("final metric (%s): %.6g\n", marlns::to_string(metrics.protocol).c_str(),
                metrics.final_metric);
    std::printf("env steps: %lld, updates: %zu, sampling %.3f s, updating %.3f s\n",
                metrics.total_env_steps, metrics.update_stats.size(), metrics.sampling_total_s(),
                metrics.updating_total_s());
    if (!cfg.out_path.empty()) std::printf("metrics written to %s\n", cfg.out_path.c_str());
    if (trained) {
        trained->save_params(flags.save_params);
        std::printf("parameters written to %s\n", flags.save_params.c_str());
    }
    return 0;
}

int cmd_bench(const RunFlags& flags, const std::string& baseline_algo,
              const std::optional<int>& baseline_m) {
    marlns::RunConfig candidate = build_config(flags);
    marlns::RunConfig baseline = candidate;
    baseline.scheduler_id = baseline_algo;
    baseline.m = baseline_m;
    baseline.out_path.clear();
    candidate.out_path.clear();

    const marlns::BenchReport report = marlns::benchmark_time(baseline, candidate);
    std::fputs(report.to_text().c_str(), stdout);

    if (flags.out) {
        marlns::emit_csv(report.baseline, *flags.out + ".baseline.csv");
        marlns::emit_csv(report.candidate, *flags.out + ".candidate.csv");
        std::printf("per-run metrics written to %s.{baseline,candidate}.csv\n", flags.out->c_str());
    }
    return 0;
}

int cmd_verify_bcd(const std::string& family, int dim, int blocks, double cond, int iterations,
                   const std::string& rule, uint64_t seed, const std::string& out) {
    using namespace marlns::bcd;

    SmoothObjective obj;
    StepRule step;
    std::function<double(int)> schedule;
    QuadraticObjective quad;

    if (family == "quadratic") {
        quad = make_spd_quadratic(dim, cond, seed);
        obj = quad.objective;
        if (rule == "exact") {
            step = quad.exact_block_rule();
            schedule = [](int) { return 1.0; };
        } else if (rule == "bounded") {
            step = quad.bounded_step_rule();
            schedule = [](int k) { return 1.0 / k; };
        } else {
            std::fprintf(stderr, "unknown step rule '%s' (exact|bounded)\n", rule.c_str());
            return 1;
        }
    } else if (family == "cosine") {
        obj = cosine_objective(dim);
        step = cosine_bounded_step_rule();
        schedule = [](int k) { return 5.0 / k; };
    } else {
        std::fprintf(stderr, "unknown family '%s' (quadratic|cosine)\n", family.c_str());
        return 1;
    }

    marlns::Rng rng(seed ^ 0x5bf0365cULL);
    marlns::Vec x0(static_cast<std::size_t>(dim));
    for (auto& v : x0) v = rng.normal();
    if (family == "quadratic" && rule == "bounded") {
        // the bounded regime covers a finite path; start a unit step from x*
        const marlns::Vec x_star = quad.solve();
        double norm = 0.0;
        for (double v : x0) norm += v * v;
        norm = std::sqrt(norm);
        for (int i = 0; i < dim; ++i)
            x0[static_cast<std::size_t>(i)] = x_star[static_cast<std::size_t>(i)] + x0[static_cast<std::size_t>(i)] / norm;
    }

    const auto partition = partition_blocks(dim, blocks);
    const BcdTrace trace = bcd_run(obj, partition, step, x0, iterations, schedule);
    const RateBoundResult bound = check_rate_bound(trace);

    std::ofstream f(out);
    if (!f) {
        std::fprintf(stderr, "cannot open %s\n", out.c_str());
        return 1;
    }
    f << "iteration,block_id,w_k,objective,gap,bound_product\n";
    char buf[128];
    for (std::size_t i = 0; i < trace.gaps.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%d,%.6g,%.10g,%.10g,%.10g\n", i + 1,
                      trace.block_ids[i], trace.step_bounds[i], trace.objective_values[i],
                      trace.gaps[i], bound.bound_products[i]);
        f << buf;
    }
    std::printf("%s d=%d blocks=%d rule=%s: final gap %.3g, fitted c %.6g, rate bound %s\n",
                family.c_str(), dim, blocks, family == "cosine" ? "bounded" : rule.c_str(),
                trace.gaps.back(), bound.fitted_c, bound.pass ? "PASS" : "FAIL");
    if (trace.aborted) std::printf("run aborted: %s\n", trace.abort_reason.c_str());
    std::printf("trace written to %s\n", out.c_str());
    return bound.pass && !trace.aborted ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cooperative MARL trainer with large-neighborhood scheduling"};
    app.require_subcommand(1);

    RunFlags train_flags;
    CLI::App* train_cmd = app.add_subcommand("train", "run one training configuration");
    add_run_flags(train_cmd, train_flags);

    RunFlags bench_flags;
    std::string baseline_algo = "full";
    std::optional<int> baseline_m;
    CLI::App* bench_cmd =
        app.add_subcommand("bench", "compare two configs differing only in scheduler/m");
    add_run_flags(bench_cmd, bench_flags);
    bench_cmd->add_option("--baseline-algo", baseline_algo, "baseline scheduler id");
    bench_cmd->add_option("--baseline-m", baseline_m, "baseline neighborhood size");

    std::string family = "quadratic", rule = "exact", bcd_out = "bcd_trace.csv";
    int dim = 16, blocks = 4, iterations = 0;
    double cond = 10.0;
    long long bcd_seed = 7;
    CLI::App* bcd_cmd = app.add_subcommand("verify-bcd", "block-coordinate-descent verifier");
    bcd_cmd->add_option("--family", family, "objective family: quadratic|cosine");
    bcd_cmd->add_option("--dim", dim, "dimension");
    bcd_cmd->add_option("--blocks", blocks, "number of coordinate blocks");
    bcd_cmd->add_option("--cond", cond, "condition number (quadratic family)");
    bcd_cmd->add_option("--iterations", iterations, "block steps (default 200 sweeps)");
    bcd_cmd->add_option("--rule", rule, "step rule: exact|bounded");
    bcd_cmd->add_option("--seed", bcd_seed, "instance seed");
    bcd_cmd->add_option("--out", bcd_out, "trace CSV path");

    std::string plot_in, plot_out;
    CLI::App* plot_cmd = app.add_subcommand("plot", "render a metrics CSV as SVG figures");
    plot_cmd->add_option("--in", plot_in, "metrics CSV from train/bench")->required();
    plot_cmd->add_option("--out", plot_out, "output SVG path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(train_flags);
        if (bench_cmd->parsed()) return cmd_bench(bench_flags, baseline_algo, baseline_m);
        if (bcd_cmd->parsed()) {
            if (iterations <= 0) iterations = 200 * blocks;
            return cmd_verify_bcd(family, dim, blocks, cond, iterations, rule,
                                  static_cast<uint64_t>(bcd_seed), bcd_out);
        }
        if (plot_cmd->parsed()) {
            marlns::write_run_svg(marlns::parse_csv(plot_in), plot_out);
            std::printf("figures written to %s\n", plot_out.c_str());
            return 0;
        }
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 1;
    }
    return 0;
}
