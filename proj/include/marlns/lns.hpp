#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "marlns/core.hpp"
#include "marlns/rng.hpp"

namespace marlns {

enum class SchedulerKind { Full, Rlns, Blns, Alns };

SchedulerKind scheduler_from_string(const std::string& id);
std::string to_string(SchedulerKind kind);

// The subset of agents whose trajectories are kept for training during one
// LNS iteration, with its provenance.
struct Neighborhood {
    std::vector<int> agent_ids;  // distinct, in selection order
    int lns_iteration = 0;
    SchedulerKind scheduler_tag = SchedulerKind::Full;

    int size() const { return static_cast<int>(agent_ids.size()); }
};

// Mutable per-algorithm scheduler state. BLNS owns a permutation and a
// cursor; ALNS owns the current size, the evaluation history and the best
// metric watermark.
struct SchedulerState {
    SchedulerKind kind = SchedulerKind::Full;
    int n_agents = 0;
    int m = 0;  // fixed size for RLNS/BLNS, current size for ALNS
    Rng rng;

    // BLNS
    std::vector<int> permutation;
    int cursor = 0;

    // ALNS
    std::optional<std::vector<int>> size_list;  // optional explicit override
    int size_index = 0;
    double watermark = 0.0;
    bool watermark_set = false;
    std::vector<std::pair<double, bool>> history;  // (metric, improved) per LNS iteration

    int lns_iteration = 0;  // completed selections
};

// RLNS/BLNS default m is floor(n/2); ALNS starts at 2 regardless of m.
// BLNS draws a random permutation from the scheduler stream unless
// identity_permutation is set.
SchedulerState make_scheduler(SchedulerKind kind, int n_agents, std::optional<int> m,
                              uint64_t seed, bool identity_permutation = false,
                              std::optional<std::vector<int>> alns_size_list = std::nullopt);

// Uniform m-subset of [0, n) without replacement, ids sorted ascending.
Neighborhood select_rlns(SchedulerState& state, int n, int m);

// Next m entries of the cyclic permutation starting at the cursor; the
// cursor advances by m modulo n, so a neighborhood that includes the last
// permutation entry wraps around to the front.
Neighborhood select_blns(SchedulerState& state, int n, int m);

// Growth rule: if either of the last two LNS iterations improved, keep m;
// otherwise m' = min(m + 2^(floor(log2 m) - 1), ceil(n / 2)). With fewer
// than two completed iterations the window shrinks accordingly; no history
// means no growth.
int alns_next_size(int m, int n, const std::vector<bool>& improved_last_two);

// Applies alns_next_size to the recorded history, then samples uniformly
// like RLNS at the (possibly grown) size.
Neighborhood select_alns(SchedulerState& state, int n);

// Unified entry point used by the training loop.
Neighborhood select_neighborhood(SchedulerState& state);

// Records one LNS iteration's evaluation metric. An iteration counts as
// improved iff its metric strictly exceeds the best metric seen before it
// (including the baseline, which does not itself enter the window).
void record_evaluation(SchedulerState& state, double metric);

// Seeds the improvement watermark with the untrained policy's evaluation,
// without appending a history entry.
void record_baseline(SchedulerState& state, double metric);

// Keeps the per-agent trajectories of the agents in R only, each with the
// full global state sequence. Output is grouped per input trajectory.
std::vector<AgentTrajectory> filter_trajectories(const std::vector<Trajectory>& trajs,
                                                 const Neighborhood& R, const DecPomdpSpec& spec);

}  // namespace marlns
