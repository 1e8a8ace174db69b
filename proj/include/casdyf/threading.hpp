// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0
//
// Internal data parallelism. CASDYF_THREADS caps the worker count; the
// default of 1 keeps every reduction order fixed. Work is split into
// static contiguous blocks, so results are identical for any fixed
// thread count.
#pragma once

#include <cstdint>
#include <functional>

namespace casdyf {

// Value of CASDYF_THREADS clamped to [1, hardware_concurrency]; 1 if unset.
int max_threads();

// Calls fn(i) for i in [begin, end). Serial when max_threads() == 1.
void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t)>& fn);

}  // namespace casdyf
