#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "marlns/harness.hpp"
#include "marlns/plot.hpp"

using namespace marlns;

namespace {

RunConfig tiny_team_spread(const std::string& algo, int n_agents, uint64_t seed) {
    RunConfig cfg;
    cfg.env_id = "team_spread";
    cfg.scheduler_id = algo;
    cfg.n_agents = n_agents;
    cfg.num_envs = 2;
    cfg.buffer_length = 25;
    cfg.n_t = 2;
    cfg.total_env_steps = 2LL * 25 * 4;  // 4 rounds
    cfg.seed = seed;
    cfg.eval_episodes = 4;
    cfg.env_params.episode_limit = 20;
    return cfg;
}

}  // namespace

TEST_CASE("config file parsing with sections, comments and overrides") {
    const std::string text = R"(
# run section
[run]
env = climb_game
algo = blns
n_agents = 4
m = 2
total_steps = 800
num_envs = 2
buffer_length = 25
seed = 42
eval_protocol = mean_100

[ppo]
clip_eps = 0.3
lr = 1e-3
use_reward_norm = false
)";
    const KvConfig kv = KvConfig::from_string(text);
    CHECK(kv.get_str("run.env", "") == "climb_game");
    CHECK(kv.get_int("run.m", 0) == 2);
    CHECK_FALSE(kv.has("run.missing"));

    const RunConfig cfg = RunConfig::from_kv(kv);
    CHECK(cfg.env_id == "climb_game");
    CHECK(cfg.scheduler_id == "blns");
    CHECK(cfg.n_agents == 4);
    CHECK(cfg.m == 2);
    CHECK(cfg.total_env_steps == 800);
    CHECK(cfg.seed == 42);
    CHECK(cfg.eval_protocol == EvalProtocol::Mean100);
    CHECK(cfg.ppo.clip_eps == doctest::Approx(0.3));
    CHECK(cfg.ppo.adam.lr == doctest::Approx(1e-3));
    CHECK_FALSE(cfg.ppo.use_reward_norm);
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("run config validation") {
    RunConfig cfg = tiny_team_spread("full", 2, 1);
    CHECK_NOTHROW(cfg.validate());
    SUBCASE("unknown env id") {
        cfg.env_id = "starcraft";
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
    SUBCASE("unknown scheduler id") {
        cfg.scheduler_id = "qmix";
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
    SUBCASE("steps must divide into whole sampling phases") {
        cfg.total_env_steps += 1;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
    SUBCASE("too few rounds for n_t") {
        cfg.n_t = 100;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
}

TEST_CASE("seed derivation is deterministic and stream-separated") {
    CHECK(derive_seed(7, 1) == derive_seed(7, 1));
    CHECK(derive_seed(7, 1) != derive_seed(7, 2));
    CHECK(derive_seed(7, 1) != derive_seed(8, 1));
}

TEST_CASE("csv emission") {
    RunMetrics metrics;
    metrics.protocol = EvalProtocol::MedianFinalTen;

    SUBCASE("empty run emits a header-only file") {
        emit_csv(metrics, "metrics_empty.tmp");
        std::ifstream f("metrics_empty.tmp");
        std::string line;
        int lines = 0;
        while (std::getline(f, line)) ++lines;
        CHECK(lines == 1);
        std::remove("metrics_empty.tmp");
    }

    SUBCASE("eight iterations give nine lines and round-trip") {
        for (int i = 1; i <= 8; ++i) {
            IterationRow row;
            row.lns_iteration = i;
            row.m = 2;
            row.neighborhood = {i % 4, (i + 1) % 4};
            row.env_steps = 100LL * i;
            row.eval_metric = 0.125 * i - 0.4;
            row.sampling_time_s = 0.001 * i;
            row.updating_time_s = 0.002 * i;
            row.cumulative_wall_s = 0.004 * i;
            metrics.rows.push_back(row);
        }
        emit_csv(metrics, "metrics8.tmp");
        std::ifstream f("metrics8.tmp");
        std::string line;
        int lines = 0;
        std::string header;
        while (std::getline(f, line)) {
            if (lines == 0) header = line;
            ++lines;
        }
        CHECK(lines == 9);
        CHECK(header ==
              "lns_iteration,m,neighborhood,env_steps,eval_metric,sampling_time_s,updating_time_s,"
              "cumulative_wall_s");

        const RunMetrics back = parse_csv("metrics8.tmp");
        REQUIRE(back.rows.size() == 8);
        for (std::size_t i = 0; i < 8; ++i) {
            CHECK(back.rows[i].lns_iteration == metrics.rows[i].lns_iteration);
            CHECK(back.rows[i].m == metrics.rows[i].m);
            CHECK(back.rows[i].neighborhood == metrics.rows[i].neighborhood);
            CHECK(back.rows[i].env_steps == metrics.rows[i].env_steps);
            CHECK(back.rows[i].eval_metric ==
                  doctest::Approx(metrics.rows[i].eval_metric).epsilon(1e-5));
            CHECK(back.rows[i].sampling_time_s ==
                  doctest::Approx(metrics.rows[i].sampling_time_s).epsilon(1e-5));
        }
        std::remove("metrics8.tmp");
    }
}

TEST_CASE("rolling median of the final ten evaluations") {
    RunMetrics metrics;
    for (int i = 0; i < 12; ++i) {
        IterationRow row;
        row.lns_iteration = i + 1;
        row.m = 1;
        row.neighborhood = {0};
        row.env_steps = i + 1;
        // first two fall out of the window; last ten are five 0.1 then five 0.9
        row.eval_metric = (i < 2) ? 55.0 : (i < 7 ? 0.1 : 0.9);
        metrics.rows.push_back(row);
    }
    emit_csv(metrics, "metrics_median.tmp");
    const RunMetrics back = parse_csv("metrics_median.tmp");
    CHECK(back.final_metric == doctest::Approx(0.5));
    std::remove("metrics_median.tmp");
}

TEST_CASE("uniform policy on the climb game matches the payoff-table mean") {
    Rng rng(2024);
    const ActionFn uniform = [&rng](const Vec&, int) { return rng.below_int(3); };
    const EnvFactory factory = [] { return make_env("climb_game", 2); };
    const double metric = evaluate_rollouts(uniform, factory, 100, 7);
    // exact expectation over the fixed table: (11 + 7 + 5 - 2 - 2) / 9
    const double mean = 19.0 / 9.0;
    const double ex2 = (121.0 + 49.0 + 25.0 + 4.0 + 4.0) / 9.0;
    const double sigma_mean = std::sqrt((ex2 - mean * mean) / 100.0);
    CHECK(std::abs(metric - mean) <= 3.0 * sigma_mean);
}

TEST_CASE("greedy evaluation on a deterministic one-shot env repeats one episode") {
    RunConfig cfg;
    cfg.env_id = "climb_game";
    cfg.n_agents = 2;
    PpoConfig ppo;
    const auto env = make_env(cfg.env_id, cfg.n_agents);
    ActorCritic ac(env->spec(), ppo, 5);
    const EnvFactory factory = [&cfg] { return make_env(cfg.env_id, cfg.n_agents); };
    const double m32 = evaluate_policy(ac, factory, 32, 11);
    const double m1 = evaluate_policy(ac, factory, 1, 11);
    CHECK(m32 == doctest::Approx(m1));  // all 32 episodes identical
}

TEST_CASE("blns run records the expected iteration structure") {
    RunConfig cfg = tiny_team_spread("blns", 4, 9);
    cfg.m = 2;
    cfg.identity_permutation = true;
    cfg.n_t = 4;
    cfg.total_env_steps = 2LL * 25 * 4;  // one round per iteration
    const RunMetrics metrics = train(cfg);

    REQUIRE(metrics.rows.size() == 4);
    CHECK(metrics.rows[0].neighborhood == std::vector<int>{0, 1});
    CHECK(metrics.rows[1].neighborhood == std::vector<int>{2, 3});
    CHECK(metrics.rows[2].neighborhood == std::vector<int>{0, 1});
    CHECK(metrics.rows[3].neighborhood == std::vector<int>{2, 3});
    for (const auto& row : metrics.rows) CHECK(row.m == 2);

    // env step accounting is exact
    CHECK(metrics.total_env_steps == cfg.total_env_steps);
    for (std::size_t i = 0; i < metrics.rows.size(); ++i)
        CHECK(metrics.rows[i].env_steps == 50LL * static_cast<long long>(i + 1));
    // update accounting: one update per round
    CHECK(metrics.update_stats.size() == 4);
    // buffer rows processed = num_envs * buffer_length * m each round
    CHECK(metrics.rows[0].sampling_time_s + metrics.rows[0].updating_time_s <=
          metrics.rows[0].cumulative_wall_s + 1e-9);
}

TEST_CASE("identical config and seed reproduce the run exactly") {
    RunConfig cfg = tiny_team_spread("rlns", 4, 31);
    cfg.m = 2;
    const RunMetrics a = train(cfg);
    const RunMetrics b = train(cfg);
    REQUIRE(a.rows.size() == b.rows.size());
    CHECK(a.baseline_metric == b.baseline_metric);
    CHECK(a.final_metric == b.final_metric);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].neighborhood == b.rows[i].neighborhood);
        CHECK(a.rows[i].eval_metric == b.rows[i].eval_metric);
        CHECK(a.rows[i].env_steps == b.rows[i].env_steps);
    }
    REQUIRE(a.update_stats.size() == b.update_stats.size());
    for (std::size_t i = 0; i < a.update_stats.size(); ++i)
        CHECK(a.update_stats[i] == b.update_stats[i]);
}

TEST_CASE("full scheduler is observationally identical to the plain loop") {
    RunConfig cfg = tiny_team_spread("full", 2, 77);
    const RunMetrics lns = train(cfg);
    const RunMetrics plain = train_plain_mappo(cfg);

    CHECK(lns.baseline_metric == plain.baseline_metric);
    REQUIRE(lns.update_stats.size() == plain.update_stats.size());
    for (std::size_t i = 0; i < lns.update_stats.size(); ++i)
        CHECK(lns.update_stats[i] == plain.update_stats[i]);
    REQUIRE(lns.rows.size() == plain.rows.size());
    for (std::size_t i = 0; i < lns.rows.size(); ++i) {
        CHECK(lns.rows[i].eval_metric == plain.rows[i].eval_metric);
        CHECK(lns.rows[i].env_steps == plain.rows[i].env_steps);
        CHECK(lns.rows[i].m == plain.rows[i].m);
    }
    CHECK(lns.final_metric == plain.final_metric);
}

TEST_CASE("per-update evaluation flag records one metric per update") {
    RunConfig cfg = tiny_team_spread("full", 2, 13);
    cfg.eval_per_update = true;
    cfg.eval_episodes = 2;
    const RunMetrics metrics = train(cfg);
    CHECK(metrics.per_update_eval.size() == metrics.update_stats.size());
}

TEST_CASE("update stats sidecar is written next to the metrics csv") {
    RunConfig cfg = tiny_team_spread("full", 2, 14);
    cfg.out_path = "sidecar.tmp.csv";
    const RunMetrics metrics = train(cfg);
    std::ifstream f("sidecar.tmp.csv.updates.csv");
    REQUIRE(f.good());
    std::string line;
    int lines = 0;
    while (std::getline(f, line)) ++lines;
    CHECK(lines == static_cast<int>(metrics.update_stats.size()) + 1);
    std::remove("sidecar.tmp.csv");
    std::remove("sidecar.tmp.csv.updates.csv");
}

TEST_CASE("linear lr decay and the mean_100 protocol run end to end") {
    RunConfig cfg = tiny_team_spread("alns", 4, 15);
    cfg.ppo.lr_decay = true;
    cfg.eval_protocol = EvalProtocol::Mean100;
    cfg.eval_episodes = 100;
    const RunMetrics metrics = train(cfg);
    REQUIRE_FALSE(metrics.rows.empty());
    // mean_100: the run's final metric is the last evaluation
    CHECK(metrics.final_metric == metrics.rows.back().eval_metric);
}

TEST_CASE("early-stop callback ends the run at an iteration boundary") {
    RunConfig cfg = tiny_team_spread("full", 2, 3);
    cfg.n_t = 4;
    cfg.total_env_steps = 2LL * 25 * 4;
    int calls = 0;
    const RunMetrics metrics = train(cfg, [&calls](const ActorCritic&, int) {
        ++calls;
        return calls >= 2;
    });
    CHECK(metrics.rows.size() == 2);
    CHECK(calls == 2);
}

TEST_CASE("benchmark self-comparison is near zero and checks machine load") {
    RunConfig cfg = tiny_team_spread("full", 2, 5);
    const BenchReport report = benchmark_time(cfg, cfg);
    CHECK(std::abs(report.total_reduction_pct) < 60.0);  // identical work, timing noise only
    CHECK(report.load_check_spread >= 0.0);
    CHECK(!report.to_text().empty());

    RunConfig other = cfg;
    other.total_env_steps *= 2;
    CHECK_THROWS_AS(benchmark_time(cfg, other), std::invalid_argument);
}

TEST_CASE("trained parameters can be saved and restored through the harness") {
    RunConfig cfg = tiny_team_spread("full", 2, 21);
    ActorCritic trained(make_env(cfg.env_id, cfg.n_agents, cfg.env_params)->spec(), cfg.ppo, 0);
    train(cfg, {}, &trained);
    trained.save_params("harness_params.tmp");

    ActorCritic restored(make_env(cfg.env_id, cfg.n_agents, cfg.env_params)->spec(), cfg.ppo, 999);
    restored.load_params("harness_params.tmp");
    CHECK(restored.policy().params() == trained.policy().params());
    std::remove("harness_params.tmp");
}

TEST_CASE("plot writes a well-formed svg") {
    RunConfig cfg = tiny_team_spread("full", 2, 55);
    cfg.out_path = "plot_metrics.tmp.csv";
    train(cfg);
    write_run_svg(parse_csv("plot_metrics.tmp.csv"), "plot_out.tmp.svg");
    std::ifstream f("plot_out.tmp.svg");
    std::string content((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    CHECK(content.find("<svg") != std::string::npos);
    CHECK(content.find("polyline") != std::string::npos);
    CHECK(content.find("</svg>") != std::string::npos);
    std::remove("plot_metrics.tmp.csv");
    std::remove("plot_out.tmp.svg");
}
