// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TASKBENCH_QUEUE_HPP
#define TASKBENCH_QUEUE_HPP

#include <cstddef>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>

namespace taskbench {

//! Per-worker ready queue. The owner pops FCFS from the front; thieves
//! take from the back. A single mutex covers both ends, which keeps the
//! no-double-pop property trivial to reason about.
//!
//! `capacity` bounds admission-side pushes only (spawn backpressure);
//! internal re-enqueues (yield, wake) always succeed, because refusing
//! them would wedge the scheduler on its own queue.
template <typename T>
class WorkerQueue {
 public:
  explicit WorkerQueue(std::size_t capacity = 0) : capacity_(capacity) {}

  //! Admission-side push. Returns false when the queue is at capacity.
  bool try_push_back(T item) {
    std::lock_guard<std::mutex> lk(m_);
    if (capacity_ != 0 && q_.size() >= capacity_) return false;
    q_.push_back(item);
    ++enqueues_;
    return true;
  }

  //! Internal push, never refused.
  void push_back(T item) {
    std::lock_guard<std::mutex> lk(m_);
    q_.push_back(item);
    ++enqueues_;
  }

  std::optional<T> pop_front() {
    std::lock_guard<std::mutex> lk(m_);
    if (q_.empty()) return std::nullopt;
    T item = q_.front();
    q_.pop_front();
    return item;
  }

  std::optional<T> steal_back() {
    std::lock_guard<std::mutex> lk(m_);
    if (q_.empty()) return std::nullopt;
    T item = q_.back();
    q_.pop_back();
    return item;
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lk(m_);
    return q_.size();
  }

  bool empty() const { return size() == 0; }

  //! Cumulative number of pushes (admitted + internal).
  std::uint64_t enqueues() const {
    std::lock_guard<std::mutex> lk(m_);
    return enqueues_;
  }

 private:
  mutable std::mutex m_;
  std::deque<T> q_;
  std::size_t capacity_;
  std::uint64_t enqueues_ = 0;
};

}  // namespace taskbench

#endif  // TASKBENCH_QUEUE_HPP
