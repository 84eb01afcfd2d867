// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "burstpar/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <map>
#include <queue>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "burstpar/cost_model.hpp"
#include "burstpar/error.hpp"
#include "json_io.hpp"

namespace burstpar {

using nlohmann::json;

Tick to_ticks(double us) {
  if (!(us >= 0.0) || !std::isfinite(us)) {
    throw Error(ErrorKind::kValidation, "op duration must be finite and >= 0");
  }
  // The epsilon keeps exact multiples of a tick from rounding up.
  return static_cast<Tick>(std::ceil(us * kTicksPerUs - 1e-9));
}

const char* op_kind_name(OpKind kind) {
  switch (kind) {
    case OpKind::kCompute: return "compute";
    case OpKind::kAllreduce: return "allreduce";
    case OpKind::kTransfer: return "transfer";
  }
  return "?";
}

int op_class(int intensity, double isolated_us) {
  int latency = isolated_us < kShortOpUs ? 0 : isolated_us < kLongOpUs ? 1 : 2;
  return intensity * kLatencyBuckets + latency;
}

std::string op_class_label(int cls) {
  static const char* kIntensity[] = {"comm", "light", "heavy"};
  static const char* kLatency[] = {"short", "medium", "long"};
  return std::string(kIntensity[cls / kLatencyBuckets]) + "-" + kLatency[cls % kLatencyBuckets];
}

// ---------------------------------------------------------------------------
// Interference tables

void InterferenceTable::validate() const {
  for (const InterferenceMatrix* m : {&prioritized, &shared}) {
    for (const auto* side : {&m->high, &m->low}) {
      for (const auto& row : *side) {
        for (double f : row) {
          if (!(f >= 1.0) || !std::isfinite(f)) {
            throw Error(ErrorKind::kValidation, "interference factors must be finite and >= 1");
          }
        }
      }
    }
  }
}

InterferenceTable InterferenceTable::synthetic() {
  InterferenceTable t;
  static const double kLowUnderPrio[] = {1.1, 1.6, 2.2};
  static const double kLowUnderShared[] = {1.1, 1.5, 2.0};
  for (int h = 0; h < kOpClasses; ++h) {
    for (int l = 0; l < kOpClasses; ++l) {
      const int ih = h / kLatencyBuckets, lh = h % kLatencyBuckets;
      const int il = l / kLatencyBuckets, ll = l % kLatencyBuckets;
      // A running op is not preempted, so a longer neighbour holds the
      // device across more of a short op's lifetime.
      double hold = (il > 0 && ll > lh) ? 0.35 * (ll - lh) : 0.0;
      double prio = 1.0 + 0.04 * il + hold;
      double fair = 1.0 + 0.5 * il + hold;
      if (ih == 0 && il > 0) {
        prio = std::max(prio, 2.2);
        fair = std::max(fair, 2.4);
      }
      t.prioritized.high[h][l] = prio;
      t.shared.high[h][l] = fair;
      t.prioritized.low[l][h] = kLowUnderPrio[ih];
      t.shared.low[l][h] = kLowUnderShared[ih];
    }
  }
  return t;
}

InterferenceTable InterferenceTable::none() {
  InterferenceTable t;
  for (InterferenceMatrix* m : {&t.prioritized, &t.shared}) {
    for (auto& row : m->high) row.fill(1.0);
    for (auto& row : m->low) row.fill(1.0);
  }
  return t;
}

namespace {

json matrix_json(const std::array<std::array<double, kOpClasses>, kOpClasses>& m) {
  json rows = json::array();
  for (const auto& r : m) rows.push_back(std::vector<double>(r.begin(), r.end()));
  return rows;
}

void matrix_from(const json& doc, const char* key, const std::string& where,
                 std::array<std::array<double, kOpClasses>, kOpClasses>& out) {
  auto rows = detail::field<std::vector<std::vector<double>>>(doc, key, where);
  if (rows.size() != kOpClasses) {
    throw Error(ErrorKind::kParse, where + "." + key + " needs " +
                                       std::to_string(kOpClasses) + " rows");
  }
  for (int i = 0; i < kOpClasses; ++i) {
    if (rows[i].size() != kOpClasses) {
      throw Error(ErrorKind::kParse, where + "." + key + " row " + std::to_string(i) +
                                         " needs " + std::to_string(kOpClasses) + " values");
    }
    std::copy(rows[i].begin(), rows[i].end(), out[i].begin());
  }
}

}  // namespace

json interference_to_json(const InterferenceTable& table) {
  json classes = json::array();
  for (int c = 0; c < kOpClasses; ++c) classes.push_back(op_class_label(c));
  auto side = [](const InterferenceMatrix& m) {
    return json{{"high", matrix_json(m.high)}, {"low", matrix_json(m.low)}};
  };
  return {{"classes", classes},
          {"prioritized", side(table.prioritized)},
          {"shared", side(table.shared)}};
}

InterferenceTable interference_from_json(const json& doc) {
  InterferenceTable t;
  json p = detail::field<json>(doc, "prioritized", "interference");
  json s = detail::field<json>(doc, "shared", "interference");
  matrix_from(p, "high", "interference.prioritized", t.prioritized.high);
  matrix_from(p, "low", "interference.prioritized", t.prioritized.low);
  matrix_from(s, "high", "interference.shared", t.shared.high);
  matrix_from(s, "low", "interference.shared", t.shared.low);
  t.validate();
  return t;
}

InterferenceTable load_interference(const std::filesystem::path& path) {
  return interference_from_json(detail::read_json_file(path, "interference"));
}

// ---------------------------------------------------------------------------
// Configuration

void SimConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorKind::kValidation, m); };
  if (launch_pace_limit < 0) bad("launch pace limit must be >= 0");
  if (graph_split_size < 1) bad("graph split size must be >= 1");
  if (bg_batch_size < 1) bad("background batch must be >= 1");
  if (!(slowdown_ban_threshold > 1.0)) bad("slowdown ban threshold must be > 1");
  if (contexts < 1) bad("contexts must be >= 1");
  if (!(launch_overhead_us >= 0.0)) bad("launch overhead must be >= 0");
  if (stream_queue_depth < 1) bad("stream queue depth must be >= 1");
  if (device_queue_capacity < 1) bad("device queue capacity must be >= 1");
  if (!(bg_start_jitter_us >= 0.0)) bad("background start jitter must be >= 0");
  if (warmup_iterations < 0) bad("warmup iterations must be >= 0");
}

json config_to_json(const SimConfig& c) {
  return {{"launch_pace_limit", c.launch_pace_limit},
          {"graph_split_size", c.graph_split_size},
          {"bg_batch_size", c.bg_batch_size},
          {"slowdown_ban_threshold", c.slowdown_ban_threshold},
          {"priority_scheduling_enabled", c.priority_scheduling_enabled},
          {"rng_seed", c.rng_seed},
          {"contexts", c.contexts},
          {"launch_overhead_us", c.launch_overhead_us},
          {"stream_queue_depth", c.stream_queue_depth},
          {"device_queue_capacity", c.device_queue_capacity},
          {"bg_start_jitter_us", c.bg_start_jitter_us},
          {"warmup_iterations", c.warmup_iterations},
          {"record_trace", c.record_trace}};
}

SimConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::kParse, "sim config must be an object");
  SimConfig c;
  auto opt = [&](const char* key, auto& out) {
    if (doc.contains(key)) out = detail::field<std::decay_t<decltype(out)>>(doc, key, "sim config");
  };
  opt("launch_pace_limit", c.launch_pace_limit);
  opt("graph_split_size", c.graph_split_size);
  opt("bg_batch_size", c.bg_batch_size);
  opt("slowdown_ban_threshold", c.slowdown_ban_threshold);
  opt("priority_scheduling_enabled", c.priority_scheduling_enabled);
  opt("rng_seed", c.rng_seed);
  opt("contexts", c.contexts);
  opt("launch_overhead_us", c.launch_overhead_us);
  opt("stream_queue_depth", c.stream_queue_depth);
  opt("device_queue_capacity", c.device_queue_capacity);
  opt("bg_start_jitter_us", c.bg_start_jitter_us);
  opt("warmup_iterations", c.warmup_iterations);
  opt("record_trace", c.record_trace);
  c.validate();
  return c;
}

SimConfig load_config(const std::filesystem::path& path) {
  return config_from_json(detail::read_json_file(path, "sim config"));
}

// ---------------------------------------------------------------------------
// Timeline compilation

namespace {

struct FwdBwd {
  double fwd;
  double bwd;
};

// Same clamped linear interpolation as profile_time_at_batch, per pass.
FwdBwd passes_at_batch(const LayerProfile& p, int b) {
  const auto& es = p.entries;
  if (es.empty()) return {0.0, 0.0};
  if (b <= es.front().batch) return {es.front().fwd_us, es.front().bwd_us};
  if (b >= es.back().batch) return {es.back().fwd_us, es.back().bwd_us};
  auto hi = std::lower_bound(es.begin(), es.end(), b,
                             [](const ProfileEntry& e, int x) { return e.batch < x; });
  if (hi->batch == b) return {hi->fwd_us, hi->bwd_us};
  auto lo = hi - 1;
  double t = static_cast<double>(b - lo->batch) / (hi->batch - lo->batch);
  return {lo->fwd_us + t * (hi->fwd_us - lo->fwd_us), lo->bwd_us + t * (hi->bwd_us - lo->bwd_us)};
}

int compute_intensity(const Layer& l) {
  const std::string& k = l.kind;
  if (k == "conv" || k == "matmul" || k == "attention") return 2;
  return 1;
}

OpRecord compute_op(const Layer& l, double us, int task, Priority prio) {
  OpRecord r;
  r.task_id = task;
  r.kind = OpKind::kCompute;
  r.isolated_duration_us = us;
  r.stream_priority = prio;
  r.layer_id = l.id;
  r.op_class = op_class(compute_intensity(l), us);
  return r;
}

TaskTimeline background_task(const CompGraph& bg, int gpus, int batch, int split, int task_id) {
  if (batch < 1) throw Error(ErrorKind::kValidation, "background batch must be >= 1");
  if (split < 1) throw Error(ErrorKind::kValidation, "graph split size must be >= 1");
  TaskTimeline t;
  t.task_id = task_id;
  t.name = "background";
  t.priority = Priority::kLow;
  t.replicated = true;
  t.samples_per_iteration = batch;
  std::vector<OpRecord> ops;
  const int n = static_cast<int>(bg.size());
  for (int i = 0; i < n; ++i) {
    if (bg.layer(i).is_virtual()) continue;
    ops.push_back(compute_op(bg.layer(i), passes_at_batch(bg.profile(i), batch).fwd, task_id,
                             Priority::kLow));
  }
  for (int i = n - 1; i >= 0; --i) {
    if (bg.layer(i).is_virtual()) continue;
    ops.push_back(compute_op(bg.layer(i), passes_at_batch(bg.profile(i), batch).bwd, task_id,
                             Priority::kLow));
  }
  for (std::size_t k = 0; k < ops.size(); ++k) {
    ops[k].op_id = static_cast<int>(k);
    ops[k].group_id = static_cast<int>(k) / split;
  }
  t.per_gpu.assign(gpus, ops);
  return t;
}

}  // namespace

Timelines compile_timeline(const TrainingPlan& plan, const CompGraph& graph,
                           const TimelineOptions& options) {
  const int G = options.num_gpus;
  if (G < 1) throw Error(ErrorKind::kValidation, "GPU count must be >= 1");
  if (plan.total_gpus > G) {
    throw Error(ErrorKind::kValidation, "plan needs " + std::to_string(plan.total_gpus) +
                                            " GPUs, timeline has " + std::to_string(G));
  }
  const int n = static_cast<int>(graph.size());
  const int B = graph.global_batch();
  std::vector<int> off(n, 0), gs(n, 1);
  for (int i = 0; i < n; ++i) {
    const Layer& l = graph.layer(i);
    if (l.is_virtual()) continue;
    const Assignment& a = (static_cast<int>(plan.assignments.size()) == n &&
                           plan.assignments[i].layer_id == l.id)
                              ? plan.assignments[i]
                              : plan.assignment_of(l.id);
    if (a.g < 1 || a.device_offset < 0 || a.device_offset + a.g > G) {
      throw Error(ErrorKind::kValidation,
                  "layer " + std::to_string(l.id) + " is placed outside the cluster");
    }
    gs[i] = a.g;
    off[i] = a.device_offset;
  }

  Timelines tl;
  tl.num_gpus = G;
  TaskTimeline fg;
  fg.task_id = 0;
  fg.name = "foreground";
  fg.priority = Priority::kHigh;
  fg.samples_per_iteration = B;
  fg.per_gpu.resize(G);

  int next_op = 0, group = 0;
  auto emit_local = [&](OpRecord rec, int i) {
    rec.op_id = next_op++;
    rec.group_id = group;
    for (int d = off[i]; d < off[i] + gs[i]; ++d) fg.per_gpu[d].push_back(rec);
  };
  auto emit_collective = [&](OpRecord rec, std::vector<int> parts) {
    std::sort(parts.begin(), parts.end());
    parts.erase(std::unique(parts.begin(), parts.end()), parts.end());
    rec.op_id = next_op++;
    rec.group_id = group;
    rec.participants = parts;
    for (int d : parts) fg.per_gpu[d].push_back(rec);
  };
  auto range = [&](int i) {
    std::vector<int> r;
    for (int d = off[i]; d < off[i] + gs[i]; ++d) r.push_back(d);
    return r;
  };
  // One direction of the edge p -> i; same samples as the cost model counts.
  auto transfer = [&](int p, int i) {
    std::int64_t samples =
        off[p] == off[i] ? moved_samples(B, gs[p], gs[i]) : static_cast<std::int64_t>(B);
    std::int64_t bytes = samples * graph.layer(p).activation_bytes_per_sample;
    OpRecord r;
    r.kind = OpKind::kTransfer;
    r.payload_bytes = bytes;
    r.isolated_duration_us = bytes > 0 ? comm_time(static_cast<double>(bytes), graph.network()) : 0.0;
    r.layer_id = graph.layer(i).id;
    r.op_class = op_class(0, r.isolated_duration_us);
    std::vector<int> parts = range(p);
    for (int d : range(i)) parts.push_back(d);
    emit_collective(r, parts);
  };
  auto moves = [&](int p, int i) {
    return !graph.layer(p).is_virtual() && (off[p] != off[i] || gs[p] != gs[i]);
  };

  for (int i = 0; i < n; ++i) {
    if (graph.layer(i).is_virtual()) continue;
    for (int p : graph.pred(i)) {
      if (moves(p, i)) transfer(p, i);
    }
    const int b = per_device_batch(B, gs[i]);
    emit_local(compute_op(graph.layer(i), passes_at_batch(graph.profile(i), b).fwd, 0,
                          Priority::kHigh), i);
    ++group;
  }
  for (int i = n - 1; i >= 0; --i) {
    if (graph.layer(i).is_virtual()) continue;
    const int b = per_device_batch(B, gs[i]);
    emit_local(compute_op(graph.layer(i), passes_at_batch(graph.profile(i), b).bwd, 0,
                          Priority::kHigh), i);
    const Layer& l = graph.layer(i);
    if (gs[i] > 1 && l.params_bytes > 0) {
      OpRecord r;
      r.kind = OpKind::kAllreduce;
      r.payload_bytes = l.params_bytes;
      r.isolated_duration_us = sync_time(graph, i, gs[i]);
      r.layer_id = l.id;
      r.op_class = op_class(0, r.isolated_duration_us);
      emit_collective(r, range(i));
    }
    for (int p : graph.pred(i)) {
      if (moves(p, i)) transfer(p, i);
    }
    ++group;
  }
  tl.tasks.push_back(std::move(fg));
  if (options.background != nullptr) {
    tl.tasks.push_back(background_task(*options.background, G, options.bg_batch,
                                       options.graph_split_size, 1));
  }
  return tl;
}

TrainingPlan data_parallel_plan(const CompGraph& graph, int gpus) {
  if (gpus < 1) throw Error(ErrorKind::kValidation, "GPU count must be >= 1");
  CostContext ctx(graph, gpus, gpus == 1 ? std::vector<int>{1} : std::vector<int>{1, gpus});
  const int gi = ctx.candidate_index(gpus);
  TrainingPlan p;
  p.total_gpus = gpus;
  double total = 0.0, max_amp = 0.0;
  for (std::size_t k = 0; k < graph.size(); ++k) {
    const int i = static_cast<int>(k);
    LayerCost c;
    c.layer_id = graph.layer(i).id;
    c.g = gpus;
    c.comp_us = ctx.comp(i, gi);
    c.sync_us = ctx.sync(i, gi);
    c.amp = ctx.amp(i, c.comp_us + c.sync_us, gi);
    total += c.comp_us + c.sync_us;
    max_amp = std::max(max_amp, c.amp);
    p.costs.push_back(c);
    p.assignments.push_back({c.layer_id, gpus, 0});
  }
  p.predicted_iteration_us = total;
  p.amp_limit = max_amp;
  return p;
}

void mark_sensitive(Timelines& timelines, const std::set<int>& op_ids) {
  for (TaskTimeline& t : timelines.tasks) {
    if (t.priority != Priority::kHigh) continue;
    for (auto& ops : t.per_gpu) {
      for (OpRecord& op : ops) {
        if (op_ids.count(op.op_id)) op.sensitive = true;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Engine

namespace {

constexpr std::int64_t kWorkScale = 1000;  // work units per isolated tick
constexpr std::int64_t kNoLimit = std::numeric_limits<std::int64_t>::max();
// Events without a foreground completion before the run is declared stuck.
constexpr std::int64_t kMaxIdleEvents = 10'000'000;

class Engine {
 public:
  Engine(const Timelines& tl, const SimConfig& cfg, const InterferenceTable& table,
         int iterations)
      : tl_(tl),
        cfg_(cfg),
        m_(cfg.priority_scheduling_enabled ? table.prioritized : table.shared),
        iterations_(iterations) {
    const int G = tl.num_gpus;
    const int T = static_cast<int>(tl.tasks.size());
    primary_ = 0;
    for (int t = 0; t < T; ++t) {
      if (tl.tasks[t].priority == Priority::kHigh) {
        primary_ = t;
        break;
      }
    }
    gpus_.resize(G);
    busy_.resize(G);
    completions_.resize(T);
    std::mt19937_64 rng(cfg.rng_seed);
    const Tick jitter = to_ticks(cfg.bg_start_jitter_us);
    for (int x = 0; x < G; ++x) {
      Gpu& gpu = gpus_[x];
      gpu.free_ctx = cfg.contexts;
      gpu.streams.resize(T);
      Tick offset = jitter > 0 ? static_cast<Tick>(rng() % static_cast<std::uint64_t>(jitter + 1)) : 0;
      for (int t = 0; t < T; ++t) {
        const TaskTimeline& task = tl.tasks[t];
        Stream& st = gpu.streams[t];
        st.ops = &task.per_gpu[x];
        st.n = static_cast<int>(st.ops->size());
        st.group_end.assign(st.n, 0);
        for (int k = st.n - 1; k >= 0; --k) {
          bool last = k + 1 == st.n || (*st.ops)[k + 1].group_id != (*st.ops)[k].group_id;
          st.group_end[k] = last ? k + 1 : st.group_end[k + 1];
        }
        st.limit = t == primary_ || !task.replicated ? static_cast<std::int64_t>(iterations) * st.n
                                                     : kNoLimit;
        if (task.replicated && task.priority == Priority::kLow) st.host_start = offset;
        if (st.host_start > 0 && st.n > 0) push(st.host_start, kWake, x, t);
      }
    }
    for (int t = 0; t < T; ++t) {
      for (int x = 0; x < G; ++x) active_[t] += gpus_[x].streams[t].n > 0 ? 1 : 0;
    }
    overhead_ = to_ticks(cfg.launch_overhead_us);
  }

  SimResult run() {
    if (iterations_ < 1) throw Error(ErrorKind::kValidation, "iterations must be >= 1");
    if (tl_.tasks.empty() || active_[primary_] == 0) {
      throw Error(ErrorKind::kValidation, "timeline has no work for the measured task");
    }
    for (int x = 0; x < tl_.num_gpus; ++x) mark(x);
    settle();
    while (static_cast<int>(completions_[primary_].size()) < iterations_) {
      if (events_.empty()) throw Error(ErrorKind::kDeadlock, snapshot("no pending events"));
      Event e = events_.top();
      events_.pop();
      now_ = e.t;
      switch (e.type) {
        case kLaunchDone: on_launch_done(e.a, e.b); break;
        case kWake: mark(e.a); break;
        case kComplete:
          if (execs_[e.a].version != e.b || execs_[e.a].done) continue;
          on_complete(e.a);
          break;
      }
      settle();
      if (++idle_events_ > kMaxIdleEvents) {
        throw Error(ErrorKind::kDeadlock, snapshot("no foreground progress"));
      }
      if (running_primary_ == 0 && stuck()) {
        throw Error(ErrorKind::kDeadlock, snapshot("collectives wait on each other"));
      }
    }
    result_.iteration_end.assign(completions_[primary_].begin(),
                                 completions_[primary_].begin() + iterations_);
    result_.metrics = metrics();
    return std::move(result_);
  }

 private:
  enum EventType { kLaunchDone, kWake, kComplete };
  struct Event {
    Tick t;
    std::uint64_t seq;
    int type;
    int a;
    int b;
    bool operator>(const Event& o) const { return t != o.t ? t > o.t : seq > o.seq; }
  };
  struct Stream {
    const std::vector<OpRecord>* ops = nullptr;
    int n = 0;
    std::vector<int> group_end;
    std::int64_t limit = 0;
    std::int64_t launch_pos = 0;  // next op to hand to the host
    std::int64_t avail_pos = 0;   // ops before this left the shared queue
    std::int64_t exec_pos = 0;    // next op to run
    std::int64_t inflight_first = 0, inflight_end = 0;
    int outstanding = 0;  // groups launched and not yet complete
    int dequeued = 0;     // groups holding a stream slot
    bool host_busy = false;
    Tick host_start = 0;
    int running = -1;
    bool waiting = false;  // collective head holding a context for its peers
    Tick ready_since = 0;
    const OpRecord& head() const { return (*ops)[exec_pos % n]; }
    bool at_head() const { return running < 0 && exec_pos < avail_pos; }
    bool head_ready() const { return at_head() && !waiting; }
  };
  struct Queued {
    int task;
    std::int64_t first, end;
  };
  struct Gpu {
    std::vector<Stream> streams;
    std::deque<Queued> fifo;
    int pending = 0;
    int free_ctx = 0;
    std::vector<int> running;
  };
  struct Exec {
    int task = 0;
    const OpRecord* op = nullptr;
    std::vector<int> gpus;
    int iteration = 0;
    Tick start = 0, last = 0, isolated = 0;
    std::int64_t remaining = 0, rate = kWorkScale;
    int version = 0;
    bool done = false;
  };

  Priority prio(int task) const { return tl_.tasks[task].priority; }

  void push(Tick t, int type, int a, int b) { events_.push({t, seq_++, type, a, b}); }

  void mark(int x) {
    if (dirty_flag_.size() < gpus_.size()) dirty_flag_.assign(gpus_.size(), 0);
    if (!dirty_flag_[x]) {
      dirty_flag_[x] = 1;
      dirty_.push_back(x);
    }
  }

  void trace(int x, int task, int op, int iteration, TraceEvent::Kind kind) {
    if (cfg_.record_trace) result_.trace.push_back({now_, x, task, op, iteration, kind});
  }

  void settle() {
    while (!dirty_.empty()) {
      int x = dirty_.front();
      dirty_.pop_front();
      dirty_flag_[x] = 0;
      for (int t = 0; t < static_cast<int>(tl_.tasks.size()); ++t) try_launch(x, t);
      dequeue(x);
      dispatch(x);
    }
  }

  void try_launch(int x, int t) {
    Gpu& gpu = gpus_[x];
    Stream& st = gpu.streams[t];
    if (st.n == 0 || st.host_busy || now_ < st.host_start || st.launch_pos >= st.limit) return;
    if (cfg_.launch_pace_limit > 0 && st.outstanding >= cfg_.launch_pace_limit) return;
    if (static_cast<int>(gpu.fifo.size()) + gpu.pending >= cfg_.device_queue_capacity) return;
    const int idx = static_cast<int>(st.launch_pos % st.n);
    st.inflight_first = st.launch_pos;
    st.inflight_end = st.launch_pos - idx + st.group_end[idx];
    st.launch_pos = st.inflight_end;
    st.host_busy = true;
    ++st.outstanding;
    ++gpu.pending;
    push(now_ + overhead_, kLaunchDone, x, t);
  }

  void on_launch_done(int x, int t) {
    Gpu& gpu = gpus_[x];
    Stream& st = gpu.streams[t];
    st.host_busy = false;
    --gpu.pending;
    gpu.fifo.push_back({t, st.inflight_first, st.inflight_end});
    trace(x, t, (*st.ops)[st.inflight_first % st.n].op_id,
          static_cast<int>(st.inflight_first / st.n), TraceEvent::kLaunch);
    mark(x);
  }

  void dequeue(int x) {
    Gpu& gpu = gpus_[x];
    while (!gpu.fifo.empty()) {
      Queued q = gpu.fifo.front();
      Stream& st = gpu.streams[q.task];
      // Head-of-line: a full stream blocks every group queued behind it.
      if (st.dequeued >= cfg_.stream_queue_depth) break;
      gpu.fifo.pop_front();
      ++st.dequeued;
      if (st.running < 0 && st.exec_pos == st.avail_pos) st.ready_since = now_;
      st.avail_pos = q.end;
      trace(x, q.task, (*st.ops)[q.first % st.n].op_id, static_cast<int>(q.first / st.n),
            TraceEvent::kDequeue);
    }
  }

  bool sensitive_fg_active(int x) const {
    const Gpu& gpu = gpus_[x];
    for (std::size_t t = 0; t < gpu.streams.size(); ++t) {
      const Stream& st = gpu.streams[t];
      if (st.n == 0 || prio(static_cast<int>(t)) != Priority::kHigh) continue;
      if (st.running >= 0 && execs_[st.running].op->sensitive) return true;
      // Queued sensitive ops drain the device ahead of time.
      for (std::int64_t p = st.exec_pos; p < st.avail_pos; ++p) {
        if ((*st.ops)[p % st.n].sensitive) return true;
      }
    }
    return false;
  }

  bool low_running(int x) const {
    for (int id : gpus_[x].running) {
      if (prio(execs_[id].task) == Priority::kLow) return true;
    }
    return false;
  }

  bool may_start(int x, int t, const OpRecord& op) const {
    if (gpus_[x].free_ctx <= 0) return false;
    if (prio(t) == Priority::kLow && sensitive_fg_active(x)) return false;
    if (op.sensitive && low_running(x)) return false;
    return true;
  }

  void dispatch(int x) {
    Gpu& gpu = gpus_[x];
    const int T = static_cast<int>(gpu.streams.size());
    while (gpu.free_ctx > 0) {
      std::vector<int> cand;
      for (int t = 0; t < T; ++t) {
        if (gpu.streams[t].n > 0 && gpu.streams[t].head_ready()) cand.push_back(t);
      }
      std::sort(cand.begin(), cand.end(), [&](int a, int b) {
        if (cfg_.priority_scheduling_enabled && prio(a) != prio(b)) {
          return prio(a) == Priority::kHigh;
        }
        const Tick ra = gpu.streams[a].ready_since, rb = gpu.streams[b].ready_since;
        return ra != rb ? ra < rb : a < b;
      });
      bool started = false;
      for (int t : cand) {
        const Stream& st = gpu.streams[t];
        const OpRecord& op = st.head();
        if (!may_start(x, t, op)) continue;
        if (!op.is_collective()) {
          start(t, &op, {x});
          started = true;
          break;
        }
        // A collective occupies a context from its arrival and starts once
        // every participant has arrived.
        --gpu.free_ctx;
        gpu.streams[t].waiting = true;
        started = true;
        const std::int64_t iter = st.exec_pos / st.n;
        bool all = true;
        for (int y : op.participants) {
          const Stream& sy = gpus_[y].streams[t];
          if (!sy.waiting || sy.head().op_id != op.op_id || sy.exec_pos / sy.n != iter) {
            all = false;
            break;
          }
        }
        if (all) start(t, &op, op.participants);
        break;
      }
      if (!started) break;
    }
  }

  void touched(const std::vector<int>& gpus, std::vector<int>& out) const {
    for (int y : gpus) {
      for (int id : gpus_[y].running) {
        if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
      }
    }
  }

  void progress(Exec& e) {
    e.remaining -= e.rate * (now_ - e.last);
    e.last = now_;
  }

  void reschedule(int id) {
    Exec& e = execs_[id];
    std::int64_t factor = kWorkScale;
    const Priority pe = prio(e.task);
    for (int y : e.gpus) {
      for (int r : gpus_[y].running) {
        if (r == id || prio(execs_[r].task) == pe) continue;
        const int ce = e.op->op_class, cr = execs_[r].op->op_class;
        double f = pe == Priority::kHigh ? m_.high[ce][cr] : m_.low[ce][cr];
        factor = std::max(factor, static_cast<std::int64_t>(std::llround(f * kWorkScale)));
      }
    }
    e.rate = kWorkScale * kWorkScale / factor;
    Tick left = e.remaining <= 0 ? 0 : (e.remaining + e.rate - 1) / e.rate;
    ++e.version;
    push(now_ + left, kComplete, id, e.version);
  }

  void start(int t, const OpRecord* op, const std::vector<int>& gpus) {
    std::vector<int> affected;
    touched(gpus, affected);
    for (int id : affected) progress(execs_[id]);
    const int id = static_cast<int>(execs_.size());
    Exec e;
    e.task = t;
    e.op = op;
    e.gpus = gpus;
    const Stream& s0 = gpus_[gpus[0]].streams[t];
    e.iteration = static_cast<int>(s0.exec_pos / s0.n);
    e.start = e.last = now_;
    e.isolated = to_ticks(op->isolated_duration_us);
    e.remaining = e.isolated * kWorkScale;
    execs_.push_back(e);
    for (int y : gpus) {
      Gpu& gpu = gpus_[y];
      gpu.running.push_back(id);
      if (gpu.streams[t].waiting) {
        gpu.streams[t].waiting = false;
      } else {
        --gpu.free_ctx;
      }
      gpu.streams[t].running = id;
      trace(y, t, op->op_id, e.iteration, TraceEvent::kStart);
      if (y != gpus[0]) mark(y);
    }
    if (t == primary_) ++running_primary_;
    affected.push_back(id);
    for (int a : affected) reschedule(a);
  }

  void on_complete(int id) {
    progress(execs_[id]);
    Exec& e = execs_[id];
    e.done = true;
    const int t = e.task;
    if (t == primary_) {
      --running_primary_;
      idle_events_ = 0;
    }
    for (int y : e.gpus) {
      Gpu& gpu = gpus_[y];
      gpu.running.erase(std::find(gpu.running.begin(), gpu.running.end(), id));
      ++gpu.free_ctx;
      busy_[y].emplace_back(e.start, now_);
      Stream& st = gpu.streams[t];
      st.running = -1;
      const int idx = static_cast<int>(st.exec_pos % st.n);
      ++st.exec_pos;
      st.ready_since = now_;
      if (idx + 1 == st.group_end[idx]) {
        --st.dequeued;
        --st.outstanding;
      }
      trace(y, t, e.op->op_id, e.iteration, TraceEvent::kEnd);
      if (idx + 1 == st.n) iteration_done(y, t, e.iteration);
      mark(y);
    }
    result_.ops.push_back({t, e.op->op_id, e.iteration, e.gpus, e.start, now_, e.isolated});
    std::vector<int> affected;
    touched(e.gpus, affected);
    for (int a : affected) {
      progress(execs_[a]);
      reschedule(a);
    }
  }

  void iteration_done(int x, int t, int iteration) {
    const TaskTimeline& task = tl_.tasks[t];
    if (task.replicated) {
      if (t != primary_ || x == first_active(t)) completions_[t].push_back(now_);
      else other_gpu_done_.push_back({t, now_});
      return;
    }
    auto& c = gang_done_[{t, iteration}];
    if (++c == active_[t]) {
      completions_[t].push_back(now_);
      gang_done_.erase({t, iteration});
    }
  }

  int first_active(int t) const {
    for (int x = 0; x < tl_.num_gpus; ++x) {
      if (gpus_[x].streams[t].n > 0) return x;
    }
    return 0;
  }

  // True when no primary op can ever start: every unfinished GPU holds a
  // collective at its head that some participant will never reach.
  bool stuck() const {
    const int t = primary_;
    bool any = false;
    for (int x = 0; x < tl_.num_gpus; ++x) {
      const Stream& st = gpus_[x].streams[t];
      if (st.n == 0 || st.exec_pos >= st.limit) continue;
      any = true;
      if (!st.at_head()) return false;
      const OpRecord& op = st.head();
      if (!op.is_collective()) return false;
      bool ready = true;
      for (int y : op.participants) {
        const Stream& sy = gpus_[y].streams[t];
        if (sy.n == 0 || sy.exec_pos >= sy.limit || !sy.at_head() ||
            sy.head().op_id != op.op_id || sy.exec_pos / sy.n != st.exec_pos / st.n) {
          ready = false;
          break;
        }
      }
      if (ready) return false;
    }
    return any;
  }

  std::string snapshot(const std::string& why) const {
    std::ostringstream os;
    os << "deadlock at tick " << now_ << " (" << why << ")";
    for (int x = 0; x < tl_.num_gpus; ++x) {
      const Gpu& gpu = gpus_[x];
      os << "\n  gpu " << x << ": queue " << gpu.fifo.size() << ", free contexts "
         << gpu.free_ctx;
      for (std::size_t t = 0; t < gpu.streams.size(); ++t) {
        const Stream& st = gpu.streams[t];
        if (st.n == 0) continue;
        os << "; " << tl_.tasks[t].name << " at op ";
        if (st.exec_pos < st.limit) {
          os << st.head().op_id << " iter " << st.exec_pos / st.n
             << (st.waiting ? " (waiting for peers)"
                 : st.head_ready() ? " (ready)"
                 : st.running >= 0 ? " (running)"
                                   : " (queued)");
        } else {
          os << "end";
        }
      }
    }
    return os.str();
  }

  SimMetrics metrics() const {
    SimMetrics m;
    const auto& c = completions_[primary_];
    const int n = iterations_;
    const int w = std::min(cfg_.warmup_iterations, n - 1);
    const Tick lo = w == 0 ? 0 : c[w - 1];
    const Tick hi = c[n - 1];
    std::vector<Tick> d;
    for (int k = w; k < n; ++k) d.push_back(c[k] - (k == 0 ? 0 : c[k - 1]));
    m.measured_iterations = static_cast<int>(d.size());
    double sum = 0.0;
    for (Tick v : d) sum += static_cast<double>(v);
    m.fg_iteration_mean_us = sum / d.size() / kTicksPerUs;
    std::vector<Tick> sorted = d;
    std::sort(sorted.begin(), sorted.end());
    std::size_t rank = static_cast<std::size_t>(std::ceil(0.99 * sorted.size()));
    m.fg_iteration_p99_us = static_cast<double>(sorted[std::max<std::size_t>(rank, 1) - 1]) / kTicksPerUs;
    const double window_s = static_cast<double>(hi - lo) / kTicksPerUs / 1e6;
    double fg = 0.0, bg = 0.0;
    for (int t = 0; t < static_cast<int>(tl_.tasks.size()); ++t) {
      double samples = 0.0;
      if (t == primary_) {
        samples = tl_.tasks[t].samples_per_iteration * m.measured_iterations;
        if (tl_.tasks[t].replicated) {
          for (const auto& [task, tick] : other_gpu_done_) {
            if (task == t && tick > lo && tick <= hi) samples += tl_.tasks[t].samples_per_iteration;
          }
        }
      } else {
        for (Tick tick : completions_[t]) {
          if (tick > lo && tick <= hi) samples += tl_.tasks[t].samples_per_iteration;
        }
      }
      double thr = window_s > 0.0 ? samples / window_s : 0.0;
      (prio(t) == Priority::kHigh ? fg : bg) += thr;
    }
    m.fg_throughput_samples_per_s = fg;
    m.bg_throughput_samples_per_s = bg;
    m.cluster_total_throughput = fg + bg;
    for (int x = 0; x < tl_.num_gpus; ++x) {
      std::vector<std::pair<Tick, Tick>> iv;
      for (auto [s, e] : busy_[x]) {
        s = std::max(s, lo);
        e = std::min(e, hi);
        if (e > s) iv.emplace_back(s, e);
      }
      // Still running at the end of the window.
      for (int id : gpus_[x].running) {
        Tick s = std::max(execs_[id].start, lo);
        if (hi > s) iv.emplace_back(s, hi);
      }
      std::sort(iv.begin(), iv.end());
      Tick covered = 0, cur_s = 0, cur_e = -1;
      for (auto [s, e] : iv) {
        if (s > cur_e) {
          if (cur_e > cur_s) covered += cur_e - cur_s;
          cur_s = s;
          cur_e = e;
        } else {
          cur_e = std::max(cur_e, e);
        }
      }
      if (cur_e > cur_s) covered += cur_e - cur_s;
      m.gpu_utilization.push_back(hi > lo ? static_cast<double>(covered) / (hi - lo) : 0.0);
    }
    m.isolated_fg_iteration_us = m.fg_iteration_mean_us;
    return m;
  }

  const Timelines& tl_;
  const SimConfig& cfg_;
  const InterferenceMatrix& m_;
  const int iterations_;
  int primary_ = 0;
  Tick overhead_ = 0;
  Tick now_ = 0;
  std::uint64_t seq_ = 0;
  int running_primary_ = 0;
  std::int64_t idle_events_ = 0;
  std::vector<Gpu> gpus_;
  std::vector<Exec> execs_;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events_;
  std::deque<int> dirty_;
  std::vector<char> dirty_flag_;
  std::map<int, int> active_;
  std::map<std::pair<int, int>, int> gang_done_;
  std::vector<std::vector<Tick>> completions_;
  std::vector<std::pair<int, Tick>> other_gpu_done_;
  std::vector<std::vector<std::pair<Tick, Tick>>> busy_;
  SimResult result_;
};

void validate_timelines(const Timelines& tl) {
  if (tl.num_gpus < 1) throw Error(ErrorKind::kValidation, "timeline needs >= 1 GPU");
  for (const TaskTimeline& t : tl.tasks) {
    if (static_cast<int>(t.per_gpu.size()) != tl.num_gpus) {
      throw Error(ErrorKind::kValidation, "task " + t.name + " has the wrong GPU count");
    }
    std::vector<std::unordered_set<int>> ids(tl.num_gpus);
    for (int x = 0; x < tl.num_gpus; ++x) {
      for (const OpRecord& op : t.per_gpu[x]) ids[x].insert(op.op_id);
    }
    for (int x = 0; x < tl.num_gpus; ++x) {
      for (const OpRecord& op : t.per_gpu[x]) {
        if (!(op.isolated_duration_us >= 0.0) || !std::isfinite(op.isolated_duration_us)) {
          throw Error(ErrorKind::kValidation, "op " + std::to_string(op.op_id) +
                                                  " has an invalid duration");
        }
        if (op.op_class < 0 || op.op_class >= kOpClasses) {
          throw Error(ErrorKind::kValidation, "op " + std::to_string(op.op_id) +
                                                  " has an invalid class");
        }
        if (!op.is_collective()) continue;
        if (std::find(op.participants.begin(), op.participants.end(), x) ==
            op.participants.end()) {
          throw Error(ErrorKind::kValidation, "collective " + std::to_string(op.op_id) +
                                                  " listed on a non-participant");
        }
        for (int y : op.participants) {
          if (y < 0 || y >= tl.num_gpus || !ids[y].count(op.op_id)) {
            throw Error(ErrorKind::kValidation,
                        "collective " + std::to_string(op.op_id) + " is missing on GPU " +
                            std::to_string(y));
          }
        }
      }
    }
  }
}

}  // namespace

SimResult simulate(const Timelines& timelines, const SimConfig& config,
                   const InterferenceTable& interference, int iterations) {
  config.validate();
  interference.validate();
  validate_timelines(timelines);
  SimResult r = Engine(timelines, config, interference, iterations).run();
  bool has_low = false, has_high = false;
  for (const TaskTimeline& t : timelines.tasks) {
    (t.priority == Priority::kLow ? has_low : has_high) = true;
  }
  if (has_low && has_high) {
    Timelines alone = timelines;
    alone.tasks.erase(std::remove_if(alone.tasks.begin(), alone.tasks.end(),
                                     [](const TaskTimeline& t) {
                                       return t.priority == Priority::kLow;
                                     }),
                      alone.tasks.end());
    SimConfig quiet = config;
    quiet.record_trace = false;
    SimResult base = Engine(alone, quiet, interference, iterations).run();
    r.metrics.isolated_fg_iteration_us = base.metrics.fg_iteration_mean_us;
    r.metrics.qos_degradation = r.metrics.fg_iteration_mean_us / base.metrics.fg_iteration_mean_us;
  }
  return r;
}

std::set<int> feedback_update(const SimResult& result, const Timelines& timelines,
                              const SimConfig& config) {
  std::map<int, std::pair<double, int>> acc;
  for (const OpExec& e : result.ops) {
    if (e.task < 0 || e.task >= static_cast<int>(timelines.tasks.size())) continue;
    if (timelines.tasks[e.task].priority != Priority::kHigh) continue;
    if (e.iteration < config.warmup_iterations || e.isolated <= 0) continue;
    auto& [sum, count] = acc[e.op_id];
    sum += static_cast<double>(e.end - e.start) / static_cast<double>(e.isolated);
    ++count;
  }
  std::set<int> flagged;
  for (const auto& [id, sc] : acc) {
    if (sc.first / sc.second > config.slowdown_ban_threshold) flagged.insert(id);
  }
  return flagged;
}

FeedbackRun simulate_with_feedback(Timelines timelines, const SimConfig& config,
                                   const InterferenceTable& interference, int iterations,
                                   int max_rounds) {
  if (max_rounds < 1) throw Error(ErrorKind::kValidation, "feedback needs >= 1 round");
  FeedbackRun fr;
  for (const TaskTimeline& t : timelines.tasks) {
    if (t.priority != Priority::kHigh) continue;
    for (const auto& ops : t.per_gpu) {
      for (const OpRecord& op : ops) {
        if (op.sensitive) fr.sensitive.insert(op.op_id);
      }
    }
  }
  for (int round = 1; round <= max_rounds; ++round) {
    fr.result = simulate(timelines, config, interference, iterations);
    fr.rounds = round;
    std::size_t before = fr.sensitive.size();
    for (int id : feedback_update(fr.result, timelines, config)) fr.sensitive.insert(id);
    if (fr.sensitive.size() == before) {
      fr.converged = true;
      break;
    }
    if (round < max_rounds) mark_sensitive(timelines, fr.sensitive);
  }
  return fr;
}

std::string trace_to_csv(const SimResult& result) {
  static const char* kKinds[] = {"launch", "dequeue", "start", "end"};
  std::ostringstream os;
  os << "tick,gpu,task,op,iteration,event\n";
  for (const TraceEvent& e : result.trace) {
    os << e.tick << ',' << e.gpu << ',' << e.task << ',' << e.op << ',' << e.iteration << ','
       << kKinds[e.kind] << '\n';
  }
  return os.str();
}

json metrics_to_json(const SimMetrics& m) {
  return {{"fg_iteration_mean_us", m.fg_iteration_mean_us},
          {"fg_iteration_p99_us", m.fg_iteration_p99_us},
          {"fg_throughput_samples_per_s", m.fg_throughput_samples_per_s},
          {"bg_throughput_samples_per_s", m.bg_throughput_samples_per_s},
          {"cluster_total_throughput", m.cluster_total_throughput},
          {"gpu_utilization", m.gpu_utilization},
          {"qos_degradation", m.qos_degradation},
          {"isolated_fg_iteration_us", m.isolated_fg_iteration_us},
          {"measured_iterations", m.measured_iterations}};
}

// ---------------------------------------------------------------------------
// Scenarios and sweeps

Scenario parse_scenario(const std::string& name) {
  if (name == "dp") return Scenario::kDp;
  if (name == "bp") return Scenario::kBp;
  if (name == "bp+col") return Scenario::kBpCol;
  throw Error(ErrorKind::kUsage, "unknown scenario: " + name + " (dp, bp, bp+col)");
}

const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::kDp: return "dp";
    case Scenario::kBp: return "bp";
    case Scenario::kBpCol: return "bp+col";
  }
  return "?";
}

ScenarioResult run_scenario(Scenario scenario, const CompGraph& graph, int gpus,
                            double amp_limit, const SimConfig& config,
                            const InterferenceTable& interference, int iterations) {
  return run_planned_scenario(scenario, graph,
                              scenario == Scenario::kDp ? data_parallel_plan(graph, gpus)
                                                        : plan(graph, gpus, amp_limit),
                              gpus, config, interference, iterations);
}

ScenarioResult run_planned_scenario(Scenario scenario, const CompGraph& graph,
                                    TrainingPlan plan, int gpus, const SimConfig& config,
                                    const InterferenceTable& interference, int iterations) {
  ScenarioResult r;
  r.plan = std::move(plan);
  TimelineOptions o;
  o.num_gpus = gpus;
  o.background = scenario == Scenario::kBpCol ? &graph : nullptr;
  o.bg_batch = config.bg_batch_size;
  o.graph_split_size = config.graph_split_size;
  Timelines tl = compile_timeline(r.plan, graph, o);
  if (scenario == Scenario::kBpCol) {
    r.run = simulate_with_feedback(std::move(tl), config, interference, iterations);
  } else {
    r.run.result = simulate(tl, config, interference, iterations);
    r.run.rounds = 1;
    r.run.converged = true;
  }
  return r;
}

json sweep_spec_to_json(const SweepSpec& s) {
  return {{"amp_limits", s.amp_limits},
          {"bg_batches", s.bg_batches},
          {"partitions", s.partitions},
          {"iterations", s.iterations}};
}

SweepSpec sweep_spec_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::kParse, "sweep spec must be an object");
  SweepSpec s;
  if (doc.contains("amp_limits")) s.amp_limits = detail::field<std::vector<double>>(doc, "amp_limits", "sweep");
  if (doc.contains("bg_batches")) s.bg_batches = detail::field<std::vector<int>>(doc, "bg_batches", "sweep");
  if (doc.contains("partitions")) s.partitions = detail::field<std::vector<int>>(doc, "partitions", "sweep");
  if (doc.contains("iterations")) s.iterations = detail::field<int>(doc, "iterations", "sweep");
  if (s.iterations < 1) throw Error(ErrorKind::kValidation, "sweep iterations must be >= 1");
  return s;
}

std::vector<SweepRow> pareto_sweep(const CompGraph& graph, int gpus, const SweepSpec& spec,
                                   const SimConfig& config,
                                   const InterferenceTable& interference) {
  if (gpus < 1) throw Error(ErrorKind::kValidation, "GPU count must be >= 1");
  SimConfig quiet = config;
  quiet.record_trace = false;
  auto alone = [&](int k) {
    TimelineOptions o;
    o.num_gpus = k;
    return simulate(compile_timeline(data_parallel_plan(graph, k), graph, o), quiet,
                    interference, spec.iterations)
        .metrics;
  };
  const double one_gpu = alone(1).fg_throughput_samples_per_s;
  std::vector<SweepRow> rows;
  for (double amp : spec.amp_limits) {
    TrainingPlan p = plan(graph, gpus, amp);
    for (int b : spec.bg_batches) {
      SimConfig cfg = quiet;
      cfg.bg_batch_size = b;
      TimelineOptions o{gpus, &graph, b, cfg.graph_split_size};
      FeedbackRun run =
          simulate_with_feedback(compile_timeline(p, graph, o), cfg, interference, spec.iterations);
      const SimMetrics& m = run.result.metrics;
      rows.push_back({"bp+col", amp, b, gpus, m.fg_iteration_mean_us, m.fg_throughput_samples_per_s,
                      m.bg_throughput_samples_per_s, m.cluster_total_throughput,
                      m.fg_throughput_samples_per_s / one_gpu});
    }
  }
  std::map<int, double> bg_alone;
  for (int b : spec.bg_batches) {
    Timelines tl;
    tl.num_gpus = 1;
    tl.tasks.push_back(background_task(graph, 1, b, config.graph_split_size, 0));
    SimConfig cfg = quiet;
    cfg.bg_start_jitter_us = 0.0;
    bg_alone[b] = simulate(tl, cfg, interference, spec.iterations).metrics.bg_throughput_samples_per_s;
  }
  for (int k : spec.partitions) {
    if (k < 1 || k > gpus) continue;
    SimMetrics fg = alone(k);
    for (int b : spec.bg_batches) {
      double bg = (gpus - k) * bg_alone[b];
      rows.push_back({"partition", 0.0, b, k, fg.fg_iteration_mean_us,
                      fg.fg_throughput_samples_per_s, bg, fg.fg_throughput_samples_per_s + bg,
                      fg.fg_throughput_samples_per_s / one_gpu});
    }
  }
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "label,amp_limit,bg_batch,fg_gpus,fg_iter_us,fg_throughput,bg_throughput,"
        "cluster_throughput,fg_speedup\n";
  char buf[320];
  for (const SweepRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.4f,%d,%d,%.4f,%.4f,%.4f,%.4f,%.6f\n", r.label.c_str(),
                  r.amp_limit, r.bg_batch, r.fg_gpus, r.fg_iteration_us, r.fg_throughput,
                  r.bg_throughput, r.cluster_throughput, r.fg_speedup);
    os << buf;
  }
  return os.str();
}

}  // namespace burstpar
