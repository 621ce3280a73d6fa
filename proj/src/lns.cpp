#include "marlns/lns.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace marlns {

SchedulerKind scheduler_from_string(const std::string& id) {
    if (id == "full") return SchedulerKind::Full;
    if (id == "rlns") return SchedulerKind::Rlns;
    if (id == "blns") return SchedulerKind::Blns;
    if (id == "alns") return SchedulerKind::Alns;
    throw std::invalid_argument("unknown scheduler id '" + id + "'");
}

std::string to_string(SchedulerKind kind) {
    switch (kind) {
        case SchedulerKind::Full: return "full";
        case SchedulerKind::Rlns: return "rlns";
        case SchedulerKind::Blns: return "blns";
        case SchedulerKind::Alns: return "alns";
    }
    return "?";
}

SchedulerState make_scheduler(SchedulerKind kind, int n_agents, std::optional<int> m,
                              uint64_t seed, bool identity_permutation,
                              std::optional<std::vector<int>> alns_size_list) {
    if (n_agents < 1) throw std::invalid_argument("make_scheduler: n_agents must be >= 1");
    SchedulerState st;
    st.kind = kind;
    st.n_agents = n_agents;
    st.rng.reseed(seed);

    const int half_up = (n_agents + 1) / 2;
    switch (kind) {
        case SchedulerKind::Full:
            st.m = n_agents;
            break;
        case SchedulerKind::Rlns:
        case SchedulerKind::Blns:
            st.m = m.value_or(std::max(1, n_agents / 2));
            if (st.m < 1 || st.m > n_agents)
                throw std::invalid_argument("make_scheduler: m must be in [1, n]");
            break;
        case SchedulerKind::Alns:
            st.m = 2;
            if (n_agents < 2) throw std::invalid_argument("make_scheduler: ALNS needs n >= 2");
            break;
    }

    if (kind == SchedulerKind::Blns) {
        st.permutation.resize(static_cast<std::size_t>(n_agents));
        std::iota(st.permutation.begin(), st.permutation.end(), 0);
        if (!identity_permutation) {
            for (int i = n_agents - 1; i > 0; --i) {
                const int k = static_cast<int>(st.rng.below(static_cast<uint64_t>(i) + 1));
                std::swap(st.permutation[static_cast<std::size_t>(i)],
                          st.permutation[static_cast<std::size_t>(k)]);
            }
        }
    }

    if (alns_size_list) {
        if (kind != SchedulerKind::Alns)
            throw std::invalid_argument("make_scheduler: size list is an ALNS option");
        const auto& sizes = *alns_size_list;
        if (sizes.empty()) throw std::invalid_argument("make_scheduler: empty ALNS size list");
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            if (sizes[i] < 2)  // the growth exponent is undefined at m = 1
                throw std::invalid_argument("make_scheduler: ALNS sizes must be >= 2");
            if (sizes[i] > half_up)
                throw std::invalid_argument("make_scheduler: ALNS sizes must not exceed ceil(n/2)");
            if (i > 0 && sizes[i] <= sizes[i - 1])
                throw std::invalid_argument("make_scheduler: ALNS size list must be increasing");
        }
        st.size_list = sizes;
        st.m = sizes.front();
    }
    return st;
}

namespace {

std::vector<int> sample_subset(Rng& rng, int n, int m) {
    std::vector<int> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), 0);
    // partial Fisher-Yates: first m entries are a uniform m-subset
    for (int i = 0; i < m; ++i) {
        const int k = i + static_cast<int>(rng.below(static_cast<uint64_t>(n - i)));
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(k)]);
    }
    pool.resize(static_cast<std::size_t>(m));
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace

Neighborhood select_rlns(SchedulerState& state, int n, int m) {
    if (m < 1 || m > n) throw std::invalid_argument("select_rlns: need 1 <= m <= n");
    Neighborhood nb;
    nb.agent_ids = sample_subset(state.rng, n, m);
    nb.lns_iteration = ++state.lns_iteration;
    nb.scheduler_tag = SchedulerKind::Rlns;
    return nb;
}

Neighborhood select_blns(SchedulerState& state, int n, int m) {
    if (m < 1 || m > n) throw std::invalid_argument("select_blns: need 1 <= m <= n");
    if (static_cast<int>(state.permutation.size()) != n)
        throw std::invalid_argument("select_blns: permutation not initialized for n");
    Neighborhood nb;
    nb.agent_ids.reserve(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        const int pos = (state.cursor + j) % n;
        nb.agent_ids.push_back(state.permutation[static_cast<std::size_t>(pos)]);
    }
    state.cursor = (state.cursor + m) % n;
    nb.lns_iteration = ++state.lns_iteration;
    nb.scheduler_tag = SchedulerKind::Blns;
    return nb;
}

int alns_next_size(int m, int n, const std::vector<bool>& improved_last_two) {
    if (m < 2) throw std::invalid_argument("alns_next_size: m must be >= 2");
    if (improved_last_two.empty()) return m;
    for (bool improved : improved_last_two)
        if (improved) return m;
    const int exponent = static_cast<int>(std::floor(std::log2(static_cast<double>(m)))) - 1;
    const int increment = exponent >= 0 ? (1 << exponent) : 0;
    const int cap = (n + 1) / 2;
    // never shrink: for tiny teams the cap can sit below the initial m = 2
    return std::max(m, std::min(m + increment, cap));
}

namespace {

std::vector<bool> last_two_improved(const SchedulerState& state) {
    std::vector<bool> window;
    const std::size_t h = state.history.size();
    for (std::size_t i = h > 2 ? h - 2 : 0; i < h; ++i) window.push_back(state.history[i].second);
    return window;
}

}  // namespace

Neighborhood select_alns(SchedulerState& state, int n) {
    if (state.m < 2) throw std::invalid_argument("select_alns: state must start at m = 2");
    if (state.size_list) {
        const auto& sizes = *state.size_list;
        const auto window = last_two_improved(state);
        bool stagnant = !window.empty();
        for (bool improved : window) stagnant = stagnant && !improved;
        if (stagnant && state.size_index + 1 < static_cast<int>(sizes.size())) ++state.size_index;
        state.m = sizes[static_cast<std::size_t>(state.size_index)];
    } else {
        state.m = alns_next_size(state.m, n, last_two_improved(state));
    }
    Neighborhood nb;
    nb.agent_ids = sample_subset(state.rng, n, state.m);
    nb.lns_iteration = ++state.lns_iteration;
    nb.scheduler_tag = SchedulerKind::Alns;
    return nb;
}

Neighborhood select_neighborhood(SchedulerState& state) {
    switch (state.kind) {
        case SchedulerKind::Full: {
            Neighborhood nb;
            nb.agent_ids.resize(static_cast<std::size_t>(state.n_agents));
            std::iota(nb.agent_ids.begin(), nb.agent_ids.end(), 0);
            nb.lns_iteration = ++state.lns_iteration;
            nb.scheduler_tag = SchedulerKind::Full;
            return nb;
        }
        case SchedulerKind::Rlns: return select_rlns(state, state.n_agents, state.m);
        case SchedulerKind::Blns: return select_blns(state, state.n_agents, state.m);
        case SchedulerKind::Alns: return select_alns(state, state.n_agents);
    }
    throw std::logic_error("select_neighborhood: bad kind");
}

void record_evaluation(SchedulerState& state, double metric) {
    if (!std::isfinite(metric)) throw std::invalid_argument("record_evaluation: non-finite metric");
    const bool improved = !state.watermark_set || metric > state.watermark;
    state.history.emplace_back(metric, improved);
    if (improved || !state.watermark_set) {
        state.watermark = state.watermark_set ? std::max(state.watermark, metric) : metric;
        state.watermark_set = true;
    }
}

void record_baseline(SchedulerState& state, double metric) {
    if (!std::isfinite(metric)) throw std::invalid_argument("record_baseline: non-finite metric");
    if (!state.history.empty()) throw std::logic_error("record_baseline: history already started");
    state.watermark = state.watermark_set ? std::max(state.watermark, metric) : metric;
    state.watermark_set = true;
}

std::vector<AgentTrajectory> filter_trajectories(const std::vector<Trajectory>& trajs,
                                                 const Neighborhood& R, const DecPomdpSpec& spec) {
    for (int id : R.agent_ids)
        if (id < 0 || id >= spec.n_agents)
            throw std::invalid_argument("filter_trajectories: agent id out of range");
    std::vector<AgentTrajectory> out;
    out.reserve(trajs.size() * R.agent_ids.size());
    for (const auto& traj : trajs) {
        auto all = decompose(traj, spec);
        for (int id : R.agent_ids) out.push_back(std::move(all[static_cast<std::size_t>(id)]));
    }
    return out;
}

}  // namespace marlns
