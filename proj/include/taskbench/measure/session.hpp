// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TASKBENCH_MEASURE_SESSION_HPP
#define TASKBENCH_MEASURE_SESSION_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "taskbench/events.hpp"
#include "taskbench/measure/record.hpp"

namespace taskbench::measure {

struct ProfileRow {
  std::string name;
  std::uint64_t count = 0;
  std::uint64_t inclusive_ns = 0;
  std::uint64_t exclusive_ns = 0;
  double share = 0.0;  // of total exclusive time
};

//! Event-driven measurement: subscribes to an executor, turns lifecycle
//! events into closed TimerRecords, folds nested scopes into per-name
//! totals, and stores counter samples pushed by a sampler. Completed
//! records stream to registered sinks on the worker thread that closed
//! them. Guid-sharded locking keeps the event path short; a task's own
//! events are already ordered, so each shard sees consistent state.
class MeasurementSession : public ExecutorListener {
 public:
  MeasurementSession() = default;

  //! Sinks run synchronously on worker threads; keep them cheap or
  //! internally buffered.
  void add_record_sink(std::function<void(const TimerRecord&)> sink) {
    record_sinks_.push_back(std::move(sink));
  }

  void on_task_event(const TaskEvent& e) override {
    counts_[static_cast<std::size_t>(e.kind)].fetch_add(
        1, std::memory_order_relaxed);
    switch (e.kind) {
      case EventKind::created: {
        Shard& sh = shard(e.guid);
        std::lock_guard<std::mutex> lk(sh.m);
        Live* lv;
        if (!sh.pool.empty()) {
          auto nh = std::move(sh.pool.back());
          sh.pool.pop_back();
          nh.key() = e.guid;
          lv = &sh.live.insert(std::move(nh)).position->second;
        } else {
          lv = &sh.live[e.guid];
        }
        lv->rec.guid = e.guid;
        lv->rec.parent_guid = e.parent_guid;
        lv->rec.annotation.assign(e.annotation);
        break;
      }
      case EventKind::enqueued:
        break;
      case EventKind::started: {
        Shard& sh = shard(e.guid);
        std::lock_guard<std::mutex> lk(sh.m);
        auto it = sh.live.find(e.guid);
        if (it == sh.live.end()) break;
        it->second.rec.worker = e.worker;
        it->second.rec.start_ns = e.t_ns;
        break;
      }
      case EventKind::yielded: {
        Shard& sh = shard(e.guid);
        std::lock_guard<std::mutex> lk(sh.m);
        auto it = sh.live.find(e.guid);
        if (it == sh.live.end()) break;
        it->second.open_yield = e.t_ns;
        it->second.has_open_yield = true;
        break;
      }
      case EventKind::resumed: {
        Shard& sh = shard(e.guid);
        std::lock_guard<std::mutex> lk(sh.m);
        auto it = sh.live.find(e.guid);
        if (it == sh.live.end()) break;
        Live& lv = it->second;
        if (lv.has_open_yield) {
          lv.rec.yields.emplace_back(lv.open_yield, e.t_ns);
          lv.has_open_yield = false;
        }
        break;
      }
      case EventKind::stopped: {
        TimerRecord done;
        std::uint64_t scope_child_ns = 0;
        {
          Shard& sh = shard(e.guid);
          std::lock_guard<std::mutex> lk(sh.m);
          auto it = sh.live.find(e.guid);
          if (it == sh.live.end()) break;
          it->second.rec.stop_ns = e.t_ns;
          done = std::move(it->second.rec);
          scope_child_ns = it->second.root_child_ns;
          // Recycle the node instead of freeing it; the event path stays
          // allocation-free once each shard's pool has warmed up.
          auto nh = sh.live.extract(it);
          Live& lv = nh.mapped();
          lv.rec.annotation.clear();
          lv.rec.yields.clear();
          lv.has_open_yield = false;
          lv.scopes.clear();
          lv.root_child_ns = 0;
          if (sh.pool.size() < kPoolMax) sh.pool.push_back(std::move(nh));
        }
        for (auto& s : record_sinks_) s(done);
        {
          std::lock_guard<std::mutex> lk(completed_m_);
          TaskAgg& agg = task_agg_[done.annotation];
          agg.count += 1;
          agg.inclusive_ns += done.inclusive_ns();
          std::uint64_t active = done.active_ns();
          agg.exclusive_ns +=
              active > scope_child_ns ? active - scope_child_ns : 0;
          completed_.push_back(std::move(done));
        }
        break;
      }
      case EventKind::warning:
        break;
    }
  }

  void on_scope_enter(Guid guid, std::string_view name,
                      std::uint64_t t_ns) override {
    Shard& sh = shard(guid);
    std::lock_guard<std::mutex> lk(sh.m);
    auto it = sh.live.find(guid);
    if (it == sh.live.end()) return;
    it->second.scopes.push_back({std::string(name), t_ns, 0});
  }

  void on_scope_exit(Guid guid, std::string_view name,
                     std::uint64_t t_ns) override {
    std::string nm;
    std::uint64_t dur = 0, child = 0;
    {
      Shard& sh = shard(guid);
      std::lock_guard<std::mutex> lk(sh.m);
      auto it = sh.live.find(guid);
      if (it == sh.live.end()) return;
      Live& lv = it->second;
      if (lv.scopes.empty() || lv.scopes.back().name != name) return;
      ScopeFrame fr = lv.scopes.back();
      lv.scopes.pop_back();
      dur = t_ns - fr.enter_ns;
      child = fr.child_ns;
      nm = fr.name;
      if (!lv.scopes.empty())
        lv.scopes.back().child_ns += dur;
      else
        lv.root_child_ns += dur;
    }
    std::lock_guard<std::mutex> lk(scope_m_);
    ScopeAgg& agg = scope_agg_[nm];
    agg.count += 1;
    agg.inclusive_ns += dur;
    agg.exclusive_ns += dur > child ? dur - child : 0;
  }

  void add_counter_sample(const CounterSample& s) {
    std::lock_guard<std::mutex> lk(samples_m_);
    samples_.push_back(s);
  }

  std::uint64_t count(EventKind k) const {
    return counts_[static_cast<std::size_t>(k)].load(
        std::memory_order_relaxed);
  }

  std::vector<TimerRecord> records() const {
    std::lock_guard<std::mutex> lk(completed_m_);
    return completed_;
  }

  std::size_t live_count() const {
    std::size_t n = 0;
    for (auto& sh : shards_) {
      std::lock_guard<std::mutex> lk(sh.m);
      n += sh.live.size();
    }
    return n;
  }

  std::vector<CounterSample> counter_samples() const {
    std::lock_guard<std::mutex> lk(samples_m_);
    return samples_;
  }

  //! Task and scope rows merged by name, ordered by total exclusive time
  //! (descending). Unnamed tasks group under "(unnamed)".
  std::vector<ProfileRow> profile() const {
    std::map<std::string, ProfileRow> rows;
    {
      std::lock_guard<std::mutex> lk(completed_m_);
      for (auto& [name, agg] : task_agg_) {
        ProfileRow& r = rows[name.empty() ? "(unnamed)" : name];
        r.count += agg.count;
        r.inclusive_ns += agg.inclusive_ns;
        r.exclusive_ns += agg.exclusive_ns;
      }
    }
    {
      std::lock_guard<std::mutex> lk(scope_m_);
      for (auto& [name, agg] : scope_agg_) {
        ProfileRow& r = rows[name];
        r.count += agg.count;
        r.inclusive_ns += agg.inclusive_ns;
        r.exclusive_ns += agg.exclusive_ns;
      }
    }
    std::vector<ProfileRow> out;
    double total = 0;
    for (auto& [name, r] : rows) {
      ProfileRow row = r;
      row.name = name;
      total += static_cast<double>(row.exclusive_ns);
      out.push_back(std::move(row));
    }
    for (auto& r : out)
      r.share = total > 0 ? static_cast<double>(r.exclusive_ns) / total : 0.0;
    std::sort(out.begin(), out.end(), [](const ProfileRow& a,
                                         const ProfileRow& b) {
      if (a.exclusive_ns != b.exclusive_ns)
        return a.exclusive_ns > b.exclusive_ns;
      return a.name < b.name;
    });
    return out;
  }

  void render_profile(std::ostream& os) const {
    auto rows = profile();
    os << std::left << std::setw(24) << "annotation" << std::right
       << std::setw(10) << "count" << std::setw(16) << "inclusive_ms"
       << std::setw(16) << "exclusive_ms" << std::setw(10) << "share"
       << "\n";
    os << std::string(76, '-') << "\n";
    for (auto& r : rows) {
      os << std::left << std::setw(24) << r.name << std::right
         << std::setw(10) << r.count << std::setw(16) << std::fixed
         << std::setprecision(3) << r.inclusive_ns / 1e6 << std::setw(16)
         << r.exclusive_ns / 1e6 << std::setw(9) << std::setprecision(1)
         << r.share * 100.0 << "%"
         << "\n";
    }
  }

  void render_counters_csv(std::ostream& os) const {
    auto samples = counter_samples();
    std::stable_sort(samples.begin(), samples.end(),
                     [](const CounterSample& a, const CounterSample& b) {
                       return a.t_ns < b.t_ns;
                     });
    os << "name,t_ns,value\n";
    for (auto& s : samples) {
      os << s.name << "," << s.t_ns << ",";
      double r = s.value;
      if (r == static_cast<double>(static_cast<std::int64_t>(r)))
        os << static_cast<std::int64_t>(r);
      else
        os << std::setprecision(10) << r;
      os << "\n";
    }
  }

 private:
  struct ScopeFrame {
    std::string name;
    std::uint64_t enter_ns = 0;
    std::uint64_t child_ns = 0;
  };

  struct Live {
    TimerRecord rec;
    bool has_open_yield = false;
    std::uint64_t open_yield = 0;
    std::vector<ScopeFrame> scopes;
    std::uint64_t root_child_ns = 0;
  };

  struct TaskAgg {
    std::uint64_t count = 0, inclusive_ns = 0, exclusive_ns = 0;
  };
  struct ScopeAgg {
    std::uint64_t count = 0, inclusive_ns = 0, exclusive_ns = 0;
  };

  struct Shard {
    mutable std::mutex m;
    std::unordered_map<Guid, Live> live;
    std::vector<std::unordered_map<Guid, Live>::node_type> pool;
  };

  static constexpr std::size_t kPoolMax = 128;

  Shard& shard(Guid g) { return shards_[g % shards_.size()]; }

  std::array<Shard, 16> shards_;
  std::array<std::atomic<std::uint64_t>, 7> counts_{};

  mutable std::mutex completed_m_;
  std::vector<TimerRecord> completed_;
  std::map<std::string, TaskAgg> task_agg_;

  mutable std::mutex scope_m_;
  std::map<std::string, ScopeAgg> scope_agg_;

  mutable std::mutex samples_m_;
  std::vector<CounterSample> samples_;

  std::vector<std::function<void(const TimerRecord&)>> record_sinks_;
};

}  // namespace taskbench::measure

#endif  // TASKBENCH_MEASURE_SESSION_HPP
