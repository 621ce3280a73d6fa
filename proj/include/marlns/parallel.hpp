#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace marlns {

// Execution mode for the data-parallel kernels (batched net passes, env
// sampling, evaluation rollouts). Serial is the reference implementation;
// tests compare the two and bench_kernels times them.
enum class ExecMode { Serial, OpenMP };

ExecMode exec_mode();
void set_exec_mode(ExecMode mode);

// Number of worker threads the OpenMP path would use right now (1 in
// Serial mode or when built without OpenMP).
int exec_threads();

}  // namespace marlns
