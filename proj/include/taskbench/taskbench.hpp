// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// Convenience umbrella. Pulls in the whole library; include the
// individual headers instead if compile time matters to you.

#ifndef TASKBENCH_TASKBENCH_HPP
#define TASKBENCH_TASKBENCH_HPP

#include "taskbench/annotate.hpp"
#include "taskbench/bench/experiment.hpp"
#include "taskbench/common.hpp"
#include "taskbench/events.hpp"
#include "taskbench/executor.hpp"
#include "taskbench/executor_factory.hpp"
#include "taskbench/ising/exact.hpp"
#include "taskbench/ising/lattice.hpp"
#include "taskbench/ising/workload.hpp"
#include "taskbench/measure/counters.hpp"
#include "taskbench/measure/env.hpp"
#include "taskbench/measure/record.hpp"
#include "taskbench/measure/sampler.hpp"
#include "taskbench/measure/session.hpp"
#include "taskbench/os_pool.hpp"
#include "taskbench/sync.hpp"
#include "taskbench/trace/chrome.hpp"
#include "taskbench/trace/format.hpp"
#include "taskbench/trace/reader.hpp"
#include "taskbench/trace/writer.hpp"
#include "taskbench/user_tasks.hpp"

#endif  // TASKBENCH_TASKBENCH_HPP
