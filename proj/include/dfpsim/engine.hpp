#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <queue>
#include <vector>

#include "dfpsim/config.hpp"
#include "dfpsim/metrics.hpp"
#include "dfpsim/placement.hpp"
#include "dfpsim/routing.hpp"
#include "dfpsim/topology.hpp"
#include "dfpsim/types.hpp"
#include "dfpsim/workload.hpp"

namespace dfp {

// Wire time for `size` bytes at `bandwidth` bytes/sec, rounded up to ns.
Ns transmit_time(std::int64_t size, double bandwidth);

// Queue occupancy normalized by queue length.
double port_score(std::int64_t occupancy, std::int64_t capacity);

struct Chunk;
struct Message;

enum class EventKind : std::uint8_t {
  message_issue,  // workload injects one iteration's messages
  chunk_arrive,   // chunk fully received at a router or terminal
  chunk_depart,   // transmission completed, wire and buffer freed
  port_retry,     // blocked output port re-evaluates after a credit release
  inject_done,    // terminal injection wire freed
  inject_retry,   // blocked terminal injection re-evaluates
};

struct Event {
  Ns time = 0;
  std::uint64_t seq = 0;  // schedule-order tie break
  EventKind kind = EventKind::message_issue;
  RouterId router = -1;
  int port = -1;
  TerminalId terminal = -1;
  Chunk* chunk = nullptr;
  JobId job = -1;
  int rank = -1;
  std::int64_t index = -1;  // plan entry / iteration
};

// (time, seq) lexicographic execution order; seq is unique per event.
class EventQueue {
 public:
  // `now` is the caller's clock; scheduling into the past is a model bug.
  void schedule(Ns now, Event e) {
    if (e.time < now) {
      throw SimulationError("event scheduled in the past: t=" +
                            std::to_string(e.time) + " < now=" +
                            std::to_string(now));
    }
    e.seq = next_seq_++;
    heap_.push(e);
  }
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  const Event& top() const { return heap_.top(); }
  Event pop() {
    Event e = heap_.top();
    heap_.pop();
    return e;
  }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::uint64_t next_seq_ = 0;
};

struct SimReport {
  std::uint64_t events_executed = 0;
  Ns final_time = 0;
  std::int64_t messages_issued = 0;
  std::int64_t messages_delivered = 0;
  bool quiescent = false;

  std::int64_t undelivered() const {
    return messages_issued - messages_delivered;
  }
};

// Deterministic sequential event loop over the router/link timing model:
// virtual cut-through at chunk granularity, per-(port, VL) output queues
// with credit backpressure (a chunk leaves upstream only once its chosen
// downstream queue has room, reserved at transmission start), fixed
// per-router pipeline delay, FPAR decisions evaluated per chunk.
class Simulation {
 public:
  Simulation(const Topology& topo, const EngineConfig& engine,
             const RoutingConfig& routing, MetricsCollector* metrics);
  ~Simulation();

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  // Registers a job and schedules its injection schedule. The allocation
  // must map every rank onto a distinct terminal of this topology.
  void add_job(const JobSpec& spec, const Allocation& alloc);

  // Executes until quiescence, or past `limit` ns when limit >= 0.
  SimReport run(Ns limit = -1);

  Ns now() const { return now_; }
  double port_score_at(RouterId router, int port, Vl vl) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  Ns now_ = 0;
};

}  // namespace dfp
