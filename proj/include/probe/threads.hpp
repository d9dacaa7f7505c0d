#pragma once

namespace probe {

// Worker-thread cap shared by all parallel loops. Resolution order:
// set_worker_threads() override, then the CONFLICT_PROBE_THREADS environment
// variable, then the OpenMP default. Thread count never changes results;
// every parallel loop in the codebase assigns whole output elements to
// threads and keeps per-element arithmetic order fixed.
int worker_threads();
void set_worker_threads(int n);  // n <= 0 resets to environment default

}  // namespace probe
