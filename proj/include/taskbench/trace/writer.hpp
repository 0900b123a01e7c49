// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TASKBENCH_TRACE_WRITER_HPP
#define TASKBENCH_TRACE_WRITER_HPP

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>
#include <utility>

#include "taskbench/trace/format.hpp"

namespace taskbench::trace {

//! Streaming JSON-lines writer with a bounded in-memory queue and a
//! background serializer thread. The meta line is written synchronously
//! in the constructor, so it is always first. Backpressure policy: task
//! records must not be lost, so push_task blocks when the queue is full;
//! counter samples are droppable telemetry, so push_counter sheds them
//! and counts the drops instead of stalling the sampler.
class TraceWriter {
 public:
  struct Stats {
    std::uint64_t task_records = 0;
    std::uint64_t counter_records = 0;
    std::uint64_t dropped_counters = 0;
    bool io_error = false;
  };

  TraceWriter(const std::filesystem::path& path, const TraceMeta& meta,
              std::size_t capacity = 65536)
      : capacity_(capacity), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw TraceError("cannot open trace file " + path.string());
    out_ << to_line(meta) << '\n';
    if (!out_) stats_.io_error = true;
    th_ = std::thread([this] { loop(); });
  }

  ~TraceWriter() { close(); }

  void push_task(const measure::TimerRecord& r) {
    std::unique_lock<std::mutex> lk(m_);
    not_full_.wait(lk, [&] { return q_.size() < capacity_ || closing_; });
    if (closing_) return;
    q_.emplace_back(r);
    not_empty_.notify_one();
  }

  void push_counter(const measure::CounterSample& s) {
    std::lock_guard<std::mutex> lk(m_);
    if (closing_) return;
    if (q_.size() >= capacity_) {
      ++stats_.dropped_counters;
      return;
    }
    q_.emplace_back(s);
    not_empty_.notify_one();
  }

  //! Drains the queue, joins the thread, flushes the file. Idempotent;
  //! returns final statistics.
  Stats close() {
    {
      std::lock_guard<std::mutex> lk(m_);
      if (closing_) return stats_;
      closing_ = true;
      not_empty_.notify_all();
      not_full_.notify_all();
    }
    if (th_.joinable()) th_.join();
    out_.flush();
    if (!out_) stats_.io_error = true;
    out_.close();
    return stats_;
  }

 private:
  void loop() {
    std::deque<TraceRecord> batch;
    for (;;) {
      {
        std::unique_lock<std::mutex> lk(m_);
        not_empty_.wait(lk, [&] { return !q_.empty() || closing_; });
        if (q_.empty() && closing_) return;
        batch.swap(q_);
        not_full_.notify_all();
      }
      for (auto& r : batch) {
        if (std::holds_alternative<measure::TimerRecord>(r))
          ++stats_.task_records;
        else
          ++stats_.counter_records;
        if (!stats_.io_error) {
          out_ << to_line(r) << '\n';
          if (!out_) stats_.io_error = true;
        }
      }
      batch.clear();
    }
  }

  std::size_t capacity_;
  std::ofstream out_;
  std::thread th_;
  std::mutex m_;
  std::condition_variable not_empty_, not_full_;
  std::deque<TraceRecord> q_;
  bool closing_ = false;
  Stats stats_;
};

}  // namespace taskbench::trace

#endif  // TASKBENCH_TRACE_WRITER_HPP
