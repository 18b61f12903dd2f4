#pragma once

#include <cstdint>
#include <functional>

namespace slda {

// Thread count resolution: explicit request > SLDA_THREADS env var > OpenMP
// default (1 when built without OpenMP).
int resolve_threads(int requested);

// Runs fn(i) for i in [0, n). With threads == 1 this is a plain loop (the
// serial reference path); otherwise iterations are distributed with OpenMP.
// fn must not touch shared mutable state. Exceptions are captured and the
// first one rethrown after the loop.
void parallel_for(int64_t n, int threads, const std::function<void(int64_t)>& fn);

}  // namespace slda
