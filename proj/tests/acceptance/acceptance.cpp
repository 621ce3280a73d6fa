// Acceptance suite: one criterion per function, one PASS/FAIL line each.
// Run all: ./acceptance          Run a subset: ./acceptance 1 4 8
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <set>
#include <string>
#include <vector>

#include "marlns/bcd.hpp"
#include "marlns/envs.hpp"
#include "marlns/harness.hpp"
#include "marlns/lns.hpp"
#include "marlns/parallel.hpp"

using namespace marlns;

namespace {

int g_checked = 0, g_failed = 0;

void report(int id, bool pass, const std::string& detail) {
    ++g_checked;
    if (!pass) ++g_failed;
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_var(const std::vector<double>& v) {
    const double mu = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return s / static_cast<double>(v.size() - 1);
}

// ---------------------------------------------------------------- criterion 1

bool criterion1() {
    bool ok = true;
    std::string detail = "scheduler conformance:";

    auto alns = make_scheduler(SchedulerKind::Alns, 27, std::nullopt, 5);
    record_baseline(alns, 0.5);  // permanent stagnation: nothing ever beats this
    std::vector<int> sizes;
    for (int i = 0; i < 8; ++i) {
        sizes.push_back(select_alns(alns, 27).size());
        record_evaluation(alns, 0.5);
    }
    const std::vector<int> expect = {2, 3, 4, 6, 8, 12, 14, 14};
    ok &= sizes == expect;
    detail += " ALNS n=27 stagnant sizes {";
    for (std::size_t i = 0; i < sizes.size(); ++i)
        detail += (i ? "," : "") + std::to_string(sizes[i]);
    detail += "}";

    auto blns = make_scheduler(SchedulerKind::Blns, 5, 2, 0, /*identity=*/true);
    const std::vector<std::vector<int>> expect_blns = {{0, 1}, {2, 3}, {4, 0}, {1, 2}, {3, 4}};
    bool blns_ok = true;
    for (const auto& e : expect_blns) blns_ok &= select_blns(blns, 5, 2).agent_ids == e;
    ok &= blns_ok;
    detail += blns_ok ? "; BLNS n=5 m=2 cycle exact" : "; BLNS cycle WRONG";
    return ok ? (report(1, true, detail), true) : (report(1, false, detail), false);
}

// ---------------------------------------------------------------- criterion 2

bool criterion2() {
    RunConfig cfg;
    cfg.env_id = "team_spread";
    cfg.scheduler_id = "full";
    cfg.n_agents = 4;
    cfg.num_envs = 4;
    cfg.buffer_length = 50;
    cfg.total_env_steps = 4LL * 50 * 50;  // 50 updates
    cfg.n_t = 5;
    cfg.seed = 20240601;
    cfg.eval_episodes = 8;

    const RunMetrics lns = train(cfg);
    const RunMetrics plain = train_plain_mappo(cfg);

    bool ok = lns.update_stats.size() == 50 && plain.update_stats.size() == 50;
    std::size_t first_diff = 0;
    for (std::size_t i = 0; ok && i < 50; ++i) {
        if (!(lns.update_stats[i] == plain.update_stats[i])) {
            ok = false;
            first_diff = i;
        }
    }
    bool metrics_ok = lns.baseline_metric == plain.baseline_metric;
    for (std::size_t i = 0; i < lns.rows.size(); ++i)
        metrics_ok &= lns.rows[i].eval_metric == plain.rows[i].eval_metric;

    std::string detail = "MAPPO equivalence over 50 updates: ";
    if (ok && metrics_ok)
        detail += "all update stats and eval metrics bit-identical";
    else if (!ok)
        detail += "stats diverge at update " + std::to_string(first_diff + 1);
    else
        detail += "eval metrics diverge";
    report(2, ok && metrics_ok, detail);
    return ok && metrics_ok;
}

// ---------------------------------------------------------------- criterion 3

struct ProbeData {
    int rows, n_act, in_dim;
    std::vector<double> x;
    std::vector<int> actions;
    std::vector<double> old_lp, adv, old_v, targets;
};

bool probe_near_kink(const Mlp& pol, const Mlp& val, const ProbeData& d, double clip_eps,
                     double delta) {
    std::vector<double> logits(static_cast<std::size_t>(d.rows) * d.n_act);
    pol.forward(d.x.data(), d.rows, logits.data());
    std::vector<double> v(static_cast<std::size_t>(d.rows));
    val.forward(d.x.data(), d.rows, v.data());
    for (int r = 0; r < d.rows; ++r) {
        const double* z = logits.data() + static_cast<std::size_t>(r) * d.n_act;
        double zmax = z[0];
        for (int k = 1; k < d.n_act; ++k) zmax = std::max(zmax, z[k]);
        double sum = 0.0;
        for (int k = 0; k < d.n_act; ++k) sum += std::exp(z[k] - zmax);
        const double lp = z[d.actions[static_cast<std::size_t>(r)]] - zmax - std::log(sum);
        const double ratio = std::exp(lp - d.old_lp[static_cast<std::size_t>(r)]);
        if (std::abs(ratio - (1.0 - clip_eps)) < 1e-3) return true;
        if (std::abs(ratio - (1.0 + clip_eps)) < 1e-3) return true;
        const double dv = v[static_cast<std::size_t>(r)] - d.old_v[static_cast<std::size_t>(r)];
        if (std::abs(std::abs(dv) - clip_eps) < 1e-3) return true;
        const double e_raw = v[static_cast<std::size_t>(r)] - d.targets[static_cast<std::size_t>(r)];
        const double vclip = d.old_v[static_cast<std::size_t>(r)] + std::clamp(dv, -clip_eps, clip_eps);
        const double e_clip = vclip - d.targets[static_cast<std::size_t>(r)];
        if (std::abs(std::abs(e_raw) - delta) < 1e-3) return true;
        if (std::abs(std::abs(e_clip) - delta) < 1e-3) return true;
        if (std::abs(dv) > clip_eps &&
            std::abs(huber(e_raw, delta) - huber(e_clip, delta)) < 1e-8)
            return true;
    }
    return false;
}

bool criterion3() {
    Rng rng(777);
    const double clip_eps = 0.2, ent_coef = 0.01, delta = 1.0, vcoef = 1.0;
    double worst = 0.0;
    int probes_done = 0;

    while (probes_done < 100) {
        const int in_dim = 2 + rng.below_int(3);
        const int hidden = 4 + rng.below_int(4);
        const int n_act = 2 + rng.below_int(3);
        const int rows = 3 + rng.below_int(5);

        Mlp pol({in_dim, hidden, n_act}, "p");
        pol.init_orthogonal(std::sqrt(2.0), 0.5, rng);
        Mlp val({in_dim, hidden, 1}, "v");
        val.init_orthogonal(std::sqrt(2.0), 1.0, rng);

        ProbeData d;
        d.rows = rows;
        d.n_act = n_act;
        d.in_dim = in_dim;
        d.x.resize(static_cast<std::size_t>(rows) * in_dim);
        for (auto& x : d.x) x = rng.normal();
        d.actions.resize(static_cast<std::size_t>(rows));
        d.old_lp.resize(static_cast<std::size_t>(rows));
        d.adv.resize(static_cast<std::size_t>(rows));
        d.old_v.resize(static_cast<std::size_t>(rows));
        d.targets.resize(static_cast<std::size_t>(rows));
        for (int r = 0; r < rows; ++r) {
            d.actions[static_cast<std::size_t>(r)] = rng.below_int(n_act);
            d.old_lp[static_cast<std::size_t>(r)] = -0.3 - 1.5 * rng.uniform01();
            d.adv[static_cast<std::size_t>(r)] = rng.normal();
            d.old_v[static_cast<std::size_t>(r)] = 0.5 * rng.normal();
            d.targets[static_cast<std::size_t>(r)] = 0.5 * rng.normal();
        }
        // finite differences need a locally smooth objective: stay away from
        // the clip/huber kinks (measure-zero in real batches)
        if (probe_near_kink(pol, val, d, clip_eps, delta)) continue;
        ++probes_done;

        auto scalar_loss = [&](Mlp& p, Mlp& v) {
            std::vector<double> logits(static_cast<std::size_t>(rows) * n_act);
            p.forward(d.x.data(), rows, logits.data());
            std::vector<double> dl(logits.size(), 0.0);
            const auto st = policy_minibatch_grad(logits.data(), d.actions, d.old_lp, d.adv, rows,
                                                  n_act, clip_eps, ent_coef, dl.data());
            std::vector<double> vals(static_cast<std::size_t>(rows));
            v.forward(d.x.data(), rows, vals.data());
            std::vector<double> dvv(static_cast<std::size_t>(rows), 0.0);
            const double vl = value_minibatch_grad(vals.data(), d.old_v, d.targets, rows, clip_eps,
                                                   delta, vcoef, dvv.data());
            return st.surrogate_loss - ent_coef * st.entropy + vl;
        };

        // analytic gradient of the composite loss
        std::vector<double> logits(static_cast<std::size_t>(rows) * n_act);
        ForwardCache pc, vc;
        pol.forward(d.x.data(), rows, logits.data(), &pc);
        std::vector<double> dlogits(logits.size(), 0.0);
        policy_minibatch_grad(logits.data(), d.actions, d.old_lp, d.adv, rows, n_act, clip_eps,
                              ent_coef, dlogits.data());
        std::vector<double> pol_grad(pol.n_params(), 0.0);
        pol.backward(pc, dlogits.data(), pol_grad);

        std::vector<double> vals(static_cast<std::size_t>(rows));
        val.forward(d.x.data(), rows, vals.data(), &vc);
        std::vector<double> dvals(static_cast<std::size_t>(rows), 0.0);
        value_minibatch_grad(vals.data(), d.old_v, d.targets, rows, clip_eps, delta, vcoef,
                             dvals.data());
        std::vector<double> val_grad(val.n_params(), 0.0);
        val.backward(vc, dvals.data(), val_grad);

        const double eps = 1e-6;
        double diff_sq = 0.0, ref_sq = 0.0;
        auto fd_accumulate = [&](Mlp& net, const std::vector<double>& analytic) {
            for (std::size_t k = 0; k < net.n_params(); ++k) {
                const double orig = net.params()[k];
                net.params()[k] = orig + eps;
                const double fp = scalar_loss(pol, val);
                net.params()[k] = orig - eps;
                const double fm = scalar_loss(pol, val);
                net.params()[k] = orig;
                const double fd = (fp - fm) / (2.0 * eps);
                diff_sq += (analytic[k] - fd) * (analytic[k] - fd);
                ref_sq += fd * fd;
            }
        };
        fd_accumulate(pol, pol_grad);
        fd_accumulate(val, val_grad);
        worst = std::max(worst, std::sqrt(diff_sq) / std::max(std::sqrt(ref_sq), 1e-12));
    }

    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "gradient fidelity: 100 probes, worst relative error %.3g (limit 1e-4)", worst);
    const bool ok = worst <= 1e-4;
    report(3, ok, buf);
    return ok;
}

// ---------------------------------------------------------------- criterion 4

bool criterion4() {
    const auto climb = ClimbGameEnv(2);
    const auto optimum = brute_force_optimum(climb);

    bool all_ok = true;
    std::string detail = "oracle optimality on the climb game:";
    for (const std::string algo : {"full", "rlns", "blns", "alns"}) {
        int successes = 0;
        long long steps_used_max = 0;
        for (uint64_t seed = 1; seed <= 5; ++seed) {
            RunConfig cfg;
            cfg.env_id = "climb_game";
            cfg.scheduler_id = algo;
            cfg.n_agents = 2;
            cfg.num_envs = 8;
            cfg.buffer_length = 25;
            cfg.total_env_steps = 200000;  // budget; stops early once optimal
            cfg.n_t = 8;
            cfg.seed = 900 + seed;
            cfg.eval_episodes = 4;

            const Vec zero_obs = {0.0};
            auto is_optimal = [&](const ActorCritic& ac) {
                std::vector<int> joint(2);
                for (int i = 0; i < 2; ++i) joint[static_cast<std::size_t>(i)] = ac.greedy_action(zero_obs, i);
                return joint == optimum.joint_action;
            };

            bool reached = false;
            const RunMetrics run = train(cfg, [&](const ActorCritic& ac, int) {
                reached = is_optimal(ac);
                return reached;
            });
            if (reached) ++successes;
            steps_used_max = std::max(steps_used_max, run.total_env_steps);
        }
        char buf[96];
        std::snprintf(buf, sizeof(buf), " %s %d/5 (<=%lldk steps)", algo.c_str(), successes,
                      steps_used_max / 1000);
        detail += buf;
        all_ok &= successes >= 4;
    }
    report(4, all_ok, detail);
    return all_ok;
}

// ---------------------------------------------------------------- criterion 5

RunConfig c5_config(const std::string& algo, std::optional<int> m) {
    RunConfig cfg;
    cfg.env_id = "team_spread";
    cfg.scheduler_id = algo;
    cfg.m = m;
    cfg.n_agents = 8;
    cfg.num_envs = 8;
    cfg.buffer_length = 125;
    cfg.total_env_steps = 500000;
    cfg.n_t = 8;
    cfg.seed = 4242;
    cfg.eval_episodes = 16;
    return cfg;
}

bool criterion5() {
    const BenchReport report_data = benchmark_time(c5_config("full", std::nullopt),
                                                   c5_config("blns", 4));
    const bool updating_ok = report_data.updating_reduction_pct >= 25.0;
    const bool wall_ok = report_data.total_reduction_pct >= 10.0;
    const bool ok = updating_ok && (wall_ok || report_data.sampling_dominates ||
                                    !report_data.load_check_passed);
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "time reduction (BLNS m=4 vs full, 500k steps): updating %.1f%% (need >=25), "
                  "wall %.1f%% (need >=10), sampling dominates: %s, load check: %s",
                  report_data.updating_reduction_pct, report_data.total_reduction_pct,
                  report_data.sampling_dominates ? "yes" : "no",
                  report_data.load_check_passed ? "passed" : "FLAGGED");
    report(5, ok, buf);
    return ok;
}

// ---------------------------------------------------------------- criterion 6

bool criterion6() {
    std::vector<double> updating;
    for (int m : {1, 2, 4, 8}) {
        RunConfig cfg;
        cfg.env_id = "team_spread";
        cfg.scheduler_id = "rlns";
        cfg.m = m;
        cfg.n_agents = 8;
        cfg.num_envs = 8;
        cfg.buffer_length = 125;
        cfg.total_env_steps = 60000;
        cfg.n_t = 4;
        cfg.seed = 777;
        cfg.eval_episodes = 8;
        updating.push_back(train(cfg).updating_total_s());
    }
    bool ok = true;
    for (std::size_t i = 1; i < updating.size(); ++i) ok &= updating[i] >= updating[i - 1];
    char buf[192];
    std::snprintf(buf, sizeof(buf),
                  "updating time non-decreasing in m: %.2fs (m=1) %.2fs (m=2) %.2fs (m=4) %.2fs "
                  "(m=8)",
                  updating[0], updating[1], updating[2], updating[3]);
    report(6, ok, buf);
    return ok;
}

// ---------------------------------------------------------------- criterion 7

bool criterion7() {
    auto run_final = [](const std::string& algo, uint64_t seed) {
        RunConfig cfg;
        cfg.env_id = "team_spread";
        cfg.scheduler_id = algo;
        cfg.n_agents = 8;
        cfg.num_envs = 8;
        cfg.buffer_length = 100;
        cfg.total_env_steps = 120000;
        cfg.n_t = 8;
        cfg.seed = 3000 + seed;
        cfg.eval_episodes = 16;
        return train(cfg).final_metric;
    };

    std::vector<double> full;
    for (uint64_t s = 1; s <= 5; ++s) full.push_back(run_final("full", s));
    const double mu_full = mean_of(full);
    const double var_full = sample_var(full);

    bool ok = true;
    char buf[256];
    std::string detail = "performance parity on team_spread n=8 (final metric, 5 seeds): full " +
                         std::to_string(mu_full);
    for (const std::string algo : {"rlns", "blns", "alns"}) {
        std::vector<double> vals;
        for (uint64_t s = 1; s <= 5; ++s) vals.push_back(run_final(algo, s));
        const double mu = mean_of(vals);
        const double pooled = std::sqrt(0.5 * (var_full + sample_var(vals)));
        const bool within = std::abs(mu - mu_full) <= pooled;
        ok &= within;
        std::snprintf(buf, sizeof(buf), ", %s %.4g (|diff| %.4g vs pooled sd %.4g%s)",
                      algo.c_str(), mu, std::abs(mu - mu_full), pooled, within ? "" : " OUT");
        detail += buf;
    }
    report(7, ok, detail);
    return ok;
}

// ---------------------------------------------------------------- criterion 8

bool criterion8() {
    using namespace marlns::bcd;
    bool ok = true;
    double worst_gap = 0.0;
    for (const auto& member : spd_test_family()) {
        const auto qo = make_family_instance(member);
        const Vec x0 = family_start_point(member);
        const auto blocks = partition_blocks(member.dim, member.n_blocks);
        const auto trace = bcd_run(qo.objective, blocks, qo.exact_block_rule(), x0,
                                   200 * static_cast<int>(blocks.size()), nullptr);
        const auto bound = check_rate_bound(trace);
        ok &= trace.gaps.back() < 1e-8;
        ok &= bound.pass && std::isfinite(bound.fitted_c);
        worst_gap = std::max(worst_gap, trace.gaps.back());
    }

    // inexact regime: steps bounded by w_k = 1/k, gap tail below 1e-4; the
    // bounded path budget means the run starts a unit distance from x*
    const auto qo = make_spd_quadratic(16, 10.0, 999);
    const Vec x_star = qo.solve();
    Rng rng(4321);
    Vec x0 = x_star;
    Vec d(16);
    double norm = 0.0;
    for (auto& v : d) v = rng.normal();
    for (double v : d) norm += v * v;
    norm = std::sqrt(norm);
    for (int i = 0; i < 16; ++i) x0[static_cast<std::size_t>(i)] += d[static_cast<std::size_t>(i)] / norm;
    const auto trace = bcd_run(qo.objective, partition_blocks(16, 4), qo.bounded_step_rule(), x0,
                               4000, [](int k) { return 1.0 / k; });
    const double inexact_tail = trace.gaps.back();
    ok &= inexact_tail < 1e-4;

    char buf[192];
    std::snprintf(buf, sizeof(buf),
                  "theorem verification: exact-BCD worst gap %.2e (<1e-8) across the 9 pinned SPD "
                  "instances, rate bound fitted on all; w_k=1/k tail gap %.2e (<1e-4)",
                  worst_gap, inexact_tail);
    report(8, ok, buf);
    return ok;
}

// ---------------------------------------------------------------- criterion 9

bool criterion9() {
    auto run_final = [](const std::string& algo, std::optional<int> m, uint64_t seed) {
        RunConfig cfg;
        cfg.env_id = "gaussian_squeeze";
        cfg.scheduler_id = algo;
        cfg.m = m;
        cfg.n_agents = 10;
        cfg.num_envs = 8;
        cfg.buffer_length = 60;
        // long enough for the full-neighborhood baseline to settle on a mode;
        // the instability of tiny neighborhoods is what remains
        cfg.total_env_steps = 144000;
        cfg.n_t = 8;
        cfg.seed = 6000 + seed;
        cfg.eval_episodes = 100;
        cfg.eval_protocol = EvalProtocol::Mean100;
        return train(cfg).final_metric;
    };

    std::vector<double> full, rlns;
    for (uint64_t s = 1; s <= 5; ++s) {
        full.push_back(run_final("full", std::nullopt, s));
        rlns.push_back(run_final("rlns", 2, s));
    }
    const double var_full = sample_var(full);
    const double var_rlns = sample_var(rlns);
    const double ratio = var_rlns / std::max(var_full, 1e-12);
    const bool ratio_ok = ratio >= 1.5;

    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "gaussian squeeze instability: across-seed final-metric variance rlns(m=2) %.4g "
                  "vs full %.4g, ratio %.2f (want >=1.5)%s",
                  var_rlns, var_full, ratio,
                  ratio_ok ? "" : " -- FLAGGED: qualitative claim not met on this host");
    report(9, ratio_ok, buf);
    return ratio_ok;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
    auto want = [&selected](int id) { return selected.empty() || selected.count(id) > 0; };

    if (want(1)) criterion1();
    if (want(2)) criterion2();
    if (want(3)) criterion3();
    if (want(4)) criterion4();
    if (want(5)) criterion5();
    if (want(6)) criterion6();
    if (want(7)) criterion7();
    if (want(8)) criterion8();
    if (want(9)) criterion9();

    std::printf("%d/%d acceptance criteria passed\n", g_checked - g_failed, g_checked);
    return g_failed == 0 ? 0 : 1;
}
