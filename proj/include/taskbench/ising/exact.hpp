// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TASKBENCH_ISING_EXACT_HPP
#define TASKBENCH_ISING_EXACT_HPP

#include <cmath>
#include <cstdint>

#include "taskbench/common.hpp"

namespace taskbench::ising {

struct ExactResult {
  double mean_energy = 0;
  double mean_abs_m = 0;
  std::uint64_t states = 0;
};

//! Exact Boltzmann averages by brute-force enumeration of all 2^(L*L)
//! configurations, with the same doubled-bond energy convention as
//! measure_state. Weights are shifted by the ground-state energy so
//! every exponent is non-positive. Small lattices only (L*L <= 20).
inline ExactResult enumerate_exact(int length, double beta) {
  const int n = length * length;
  if (length < 1 || n > 20)
    throw ConfigError("exact enumeration supports L*L <= 20");
  const std::uint64_t total = 1ull << n;
  const double e_min = -2.0 * n;
  long double z = 0, e_acc = 0, m_acc = 0;
  for (std::uint64_t bits = 0; bits < total; ++bits) {
    long long e = 0, m = 0;
    for (int site = 0; site < n; ++site) {
      int s = (bits >> site) & 1 ? 1 : -1;
      int col = site % length;
      int right_site = col + 1 == length ? site + 1 - length : site + 1;
      int down_site = site + length >= n ? site + length - n : site + length;
      int right = (bits >> right_site) & 1 ? 1 : -1;
      int down = (bits >> down_site) & 1 ? 1 : -1;
      e -= s * (right + down);
      m += s;
    }
    long double w = std::exp(static_cast<long double>(
        -beta * (static_cast<double>(e) - e_min)));
    z += w;
    e_acc += w * static_cast<long double>(e);
    m_acc += w * static_cast<long double>(m < 0 ? -m : m);
  }
  ExactResult r;
  r.mean_energy = static_cast<double>(e_acc / z);
  r.mean_abs_m = static_cast<double>(m_acc / z);
  r.states = total;
  return r;
}

}  // namespace taskbench::ising

#endif  // TASKBENCH_ISING_EXACT_HPP
