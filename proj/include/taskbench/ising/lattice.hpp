// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TASKBENCH_ISING_LATTICE_HPP
#define TASKBENCH_ISING_LATTICE_HPP

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <vector>

#include "taskbench/common.hpp"

namespace taskbench::ising {

//! Lattice copy handed from a walker to an accumulator. Small enough
//! (L*L bytes) that the walker continues immediately after the copy.
struct LatticeSnapshot {
  int walker_id = 0;
  long long update_index = 0;
  int length = 0;
  std::vector<std::int8_t> spins;
};

struct Measurement {
  int walker_id = 0;
  long long update_index = 0;
  long long energy = 0;             // doubled-bond convention, see below
  long long abs_magnetization = 0;

  friend bool operator==(const Measurement&, const Measurement&) = default;
};

//! E = -sum over sites of s*(right + down) on the periodic square
//! lattice (each of the 2*L*L bonds counted once), M = sum of spins.
//! This is the accumulator's work: derive observables from raw spins.
inline Measurement measure_state(const LatticeSnapshot& snap) {
  const int L = snap.length;
  long long e = 0, m = 0;
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < L; ++j) {
      int s = snap.spins[static_cast<std::size_t>(i) * L + j];
      int right = snap.spins[static_cast<std::size_t>(i) * L + (j + 1) % L];
      int down = snap.spins[static_cast<std::size_t>((i + 1) % L) * L + j];
      e -= s * (right + down);
      m += s;
    }
  }
  return {snap.walker_id, snap.update_index, e, std::llabs(m)};
}

//! One independent Metropolis chain on a 2D periodic Ising lattice.
//! Cold start (all spins up); a sweep is L*L single-site proposals.
//! The RNG draw order is fixed (site draw always, acceptance draw only
//! for uphill moves), so a chain's entire history is a pure function of
//! (seed, length, beta) regardless of where its sweeps are scheduled.
class WalkerState {
 public:
  WalkerState(int walker_id, int length, double beta, std::uint64_t seed)
      : id_(walker_id),
        L_(length),
        spins_(static_cast<std::size_t>(length) * length, 1),
        rng_(seed) {
    accept_[0] = std::exp(-4.0 * beta);
    accept_[1] = std::exp(-8.0 * beta);
  }

  void sweep() {
    const int n = L_ * L_;
    for (int k = 0; k < n; ++k) {
      int site = static_cast<int>(rng_() % static_cast<std::uint64_t>(n));
      int i = site / L_, j = site % L_;
      int nb = spins_[static_cast<std::size_t>((i + 1) % L_) * L_ + j] +
               spins_[static_cast<std::size_t>((i + L_ - 1) % L_) * L_ + j] +
               spins_[static_cast<std::size_t>(i) * L_ + (j + 1) % L_] +
               spins_[static_cast<std::size_t>(i) * L_ + (j + L_ - 1) % L_];
      int s = spins_[site];
      int d_e = 2 * s * nb;  // positive values are 4 or 8
      if (d_e <= 0) {
        spins_[site] = static_cast<std::int8_t>(-s);
      } else {
        double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
        if (u < accept_[d_e == 4 ? 0 : 1])
          spins_[site] = static_cast<std::int8_t>(-s);
      }
    }
    ++update_index_;
  }

  LatticeSnapshot snapshot() const {
    return {id_, update_index_, L_, spins_};
  }

  long long update_index() const { return update_index_; }
  int id() const { return id_; }

 private:
  int id_;
  int L_;
  std::vector<std::int8_t> spins_;
  std::mt19937_64 rng_;
  long long update_index_ = 0;
  double accept_[2];
};

}  // namespace taskbench::ising

#endif  // TASKBENCH_ISING_LATTICE_HPP
