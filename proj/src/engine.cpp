#include "dfpsim/engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace dfp {

Ns transmit_time(std::int64_t size, double bandwidth) {
  if (bandwidth <= 0) {
    throw ArgumentError("transmit_time: bandwidth must be positive");
  }
  if (size < 0) throw ArgumentError("transmit_time: negative size");
  if (size == 0) return 0;
  return Ns(std::ceil(double(size) * 1e9 / bandwidth));
}

double port_score(std::int64_t occupancy, std::int64_t capacity) {
  if (capacity <= 0) throw ArgumentError("port_score: empty queue capacity");
  return double(occupancy) / double(capacity);
}

struct Message {
  JobId job = -1;
  std::int64_t msg_id = 0;
  int src_rank = 0, dst_rank = 0;
  TerminalId src = -1, dst = -1;
  std::int64_t size = 0;
  Ns issue_time = 0;
  int chunk_count = 0;
  int chunks_delivered = 0;
  int next_chunk = 0;
  std::int64_t iteration = 0;
};

struct Chunk {
  Message* msg = nullptr;
  int index = 0;
  std::int64_t size = 0;
  Vl vl = Vl::vl0;
  PathClass path_class = PathClass::minimal;
  // queue reserved for the hop in progress
  RouterId next_router = -1;
  int next_port = -1;
  Vl next_vl = Vl::vl0;
  PathClass next_class = PathClass::minimal;
  std::uint64_t queue_seq = 0;  // reservation order, cross-VL port FIFO
  std::array<RouterId, 8> trace{};
  int trace_len = 0;
  Chunk* free_next = nullptr;
};

namespace {

struct Waiter {
  bool is_terminal = false;
  RouterId router = -1;
  int port = -1;
  TerminalId terminal = -1;

  bool operator==(const Waiter&) const = default;
};

struct VlQueue {
  std::deque<Chunk*> q;
  std::int64_t occupancy = 0;  // queued + transmitting + reserved inbound
  std::vector<Waiter> waiters;
};

struct PortState {
  bool to_terminal = false;
  RouterId peer_router = -1;
  TerminalId peer_terminal = -1;
  double bandwidth = 0;
  Chunk* in_flight = nullptr;
  bool retry_pending = false;
  std::array<VlQueue, 2> vls;
};

struct RouterState {
  std::vector<PortState> ports;
};

struct TerminalState {
  std::deque<Message*> sendq;  // injection FIFO, unbounded (app-side queue)
  Chunk* in_flight = nullptr;
  bool retry_pending = false;
  JobId owner = -1;
};

struct JobRuntime {
  JobSpec spec;
  Allocation alloc;
  TrafficEventPlan plan;
  std::int64_t next_msg_id = 0;
  // broadcast closed loop
  std::int64_t iterations_issued = 0;
  std::int64_t outstanding = 0;
  Ns last_issue = 0;
};

}  // namespace

struct Simulation::Impl {
  const Topology& topo;
  EngineConfig engine;
  RoutingConfig routing;
  MetricsCollector* metrics;

  std::vector<RouterState> routers;
  std::vector<TerminalState> terminals;
  std::vector<JobRuntime> jobs;
  EventQueue eq;
  Ns now = 0;

  std::deque<Message> message_arena;
  std::deque<Chunk> chunk_arena;
  Chunk* free_chunks = nullptr;
  std::uint64_t queue_seq = 0;

  std::int64_t messages_issued = 0;
  std::int64_t messages_delivered = 0;
  std::int64_t chunks_live = 0;

  Impl(const Topology& t, const EngineConfig& e, const RoutingConfig& r,
       MetricsCollector* m)
      : topo(t), engine(e), routing(r), metrics(m) {
    e.check();
    r.check();
    build_network();
  }

  void build_network() {
    const auto& p = topo.params();
    routers.resize(p.router_count());
    terminals.resize(p.terminal_count());
    for (RouterId r = 0; r < p.router_count(); ++r) {
      auto& ports = routers[r].ports;
      ports.resize(topo.port_count(r));
      const GroupId g = topo.group_of_router(r);
      if (topo.role(r) == RouterRole::leaf) {
        for (int k = 0; k < p.spines_per_group; ++k) {
          ports[k].peer_router = topo.spine_id(g, k);
          ports[k].bandwidth = p.bw_local;
        }
        for (int slot = 0; slot < p.terminals_per_leaf; ++slot) {
          auto& port = ports[topo.leaf_terminal_port(slot)];
          port.to_terminal = true;
          port.peer_terminal = topo.terminal_id(g, topo.leaf_index(r), slot);
          port.bandwidth = p.bw_terminal;
        }
      } else {
        for (int l = 0; l < p.leaves_per_group; ++l) {
          ports[l].peer_router = topo.leaf_id(g, l);
          ports[l].bandwidth = p.bw_local;
        }
        const auto& gports = topo.global_ports(r);
        for (std::size_t i = 0; i < gports.size(); ++i) {
          auto& port = ports[p.leaves_per_group + i];
          port.peer_router = gports[i].peer;
          port.bandwidth = p.bw_global;
        }
      }
    }
  }

  // --- chunk pool ----------------------------------------------------------

  Chunk* alloc_chunk() {
    Chunk* c;
    if (free_chunks != nullptr) {
      c = free_chunks;
      free_chunks = c->free_next;
      *c = Chunk{};
    } else {
      c = &chunk_arena.emplace_back();
    }
    ++chunks_live;
    return c;
  }

  void free_chunk(Chunk* c) {
    c->free_next = free_chunks;
    free_chunks = c;
    --chunks_live;
  }

  // --- jobs ----------------------------------------------------------------

  JobRuntime& job(JobId id) {
    for (auto& jr : jobs) {
      if (jr.spec.job_id == id) return jr;
    }
    throw SimulationError("unknown job " + std::to_string(id));
  }

  void add_job(const JobSpec& spec, const Allocation& alloc) {
    spec.check();
    if (alloc.nprocs() != spec.nprocs) {
      throw ConfigError("job " + std::to_string(spec.job_id) +
                        ": allocation size mismatch");
    }
    for (TerminalId t : alloc.rank_to_terminal) {
      if (t < 0 || t >= int(terminals.size())) {
        throw AllocationError("job " + std::to_string(spec.job_id) +
                              ": terminal " + std::to_string(t) +
                              " does not exist");
      }
      if (terminals[t].owner != -1) {
        throw AllocationError("terminal " + std::to_string(t) +
                              " already owned by job " +
                              std::to_string(terminals[t].owner));
      }
      terminals[t].owner = spec.job_id;
    }
    JobRuntime jr;
    jr.spec = spec;
    jr.alloc = alloc;
    if (spec.pattern == Pattern::broadcast) {
      Event e;
      e.time = 0;
      e.kind = EventKind::message_issue;
      e.job = spec.job_id;
      e.rank = spec.broadcast_root;
      e.index = 0;
      eq.schedule(now, e);
    } else {
      jr.plan = make_plan(spec, topo, alloc);
      for (int rank = 0; rank < spec.nprocs; ++rank) {
        const auto& entries = jr.plan.per_rank[rank];
        for (std::size_t i = 0; i < entries.size(); ++i) {
          Event e;
          e.time = entries[i].issue_time;
          e.kind = EventKind::message_issue;
          e.job = spec.job_id;
          e.rank = rank;
          e.index = std::int64_t(i);
          eq.schedule(now, e);
        }
      }
    }
    jobs.push_back(std::move(jr));
  }

  Message* create_message(JobRuntime& jr, int src_rank, int dst_rank) {
    Message& m = message_arena.emplace_back();
    m.job = jr.spec.job_id;
    m.msg_id = jr.next_msg_id++;
    m.src_rank = src_rank;
    m.dst_rank = dst_rank;
    m.src = jr.alloc.terminal(src_rank);
    m.dst = jr.alloc.terminal(dst_rank);
    m.size = jr.spec.msg_size;
    m.issue_time = now;
    m.chunk_count =
        int((m.size + engine.chunk_bytes - 1) / engine.chunk_bytes);
    m.iteration = jr.iterations_issued;
    ++messages_issued;
    terminals[m.src].sendq.push_back(&m);
    return &m;
  }

  // --- events --------------------------------------------------------------

  void on_message_issue(const Event& e) {
    JobRuntime& jr = job(e.job);
    if (jr.spec.pattern == Pattern::broadcast) {
      for (int dst : broadcast_targets(jr.spec.broadcast_root,
                                       jr.spec.nprocs)) {
        create_message(jr, jr.spec.broadcast_root, dst);
      }
      jr.outstanding = jr.spec.nprocs - 1;
      jr.iterations_issued = e.index + 1;
      jr.last_issue = now;
      try_inject(jr.alloc.terminal(jr.spec.broadcast_root));
    } else {
      const PlanEntry& entry = jr.plan.per_rank[e.rank][e.index];
      create_message(jr, e.rank, entry.dst_rank);
      try_inject(jr.alloc.terminal(e.rank));
    }
  }

  struct Pick {
    bool ok = false;
    RouteCandidate chosen;
  };

  std::int64_t queue_room(RouterId r, int port, Vl vl) const {
    return engine.buffer_bytes - routers[r].ports[port].vls[int(vl)].occupancy;
  }

  void score_candidates(RouterId at, std::vector<RouteCandidate>& cands) const {
    for (auto& c : cands) {
      c.score = port_score(
          routers[at].ports[c.out_port].vls[int(c.vl_after)].occupancy,
          engine.buffer_bytes);
    }
  }

  // The selection rule runs over every legal candidate; a full queue only
  // repels traffic through its score. When the chosen queue cannot hold the
  // chunk, the chunk waits for that queue's credits (re-deciding once space
  // frees), which keeps the congestion visible instead of spraying around it.
  Pick pick_route(RouterId at, const std::vector<RouteCandidate>& cands,
                  std::int64_t size) const {
    Pick p;
    p.chosen = choose_port(cands, routing);
    p.ok = queue_room(at, p.chosen.out_port, p.chosen.vl_after) >= size;
    return p;
  }

  void register_waiter(RouterId at, const RouteCandidate& chosen,
                       const Waiter& w) {
    auto& waiters =
        routers[at].ports[chosen.out_port].vls[int(chosen.vl_after)].waiters;
    if (std::find(waiters.begin(), waiters.end(), w) == waiters.end()) {
      waiters.push_back(w);
    }
  }

  void reserve(Chunk* c, RouterId at, const RouteCandidate& chosen) {
    c->next_router = at;
    c->next_port = chosen.out_port;
    c->next_vl = vl_transition(c->vl, chosen);
    c->next_class = chosen.path_class;
    c->queue_seq = ++queue_seq;
    routers[at].ports[chosen.out_port].vls[int(c->next_vl)].occupancy +=
        c->size;
  }

  void try_inject(TerminalId t) {
    TerminalState& ts = terminals[t];
    if (ts.in_flight != nullptr || ts.sendq.empty()) return;
    Message* m = ts.sendq.front();
    const std::int64_t csize =
        std::min<std::int64_t>(engine.chunk_bytes,
                               m->size - std::int64_t(m->next_chunk) *
                                             engine.chunk_bytes);
    const RouterId leaf = topo.leaf_of_terminal(t);
    ChunkRouteView view;
    view.src = m->src;
    view.dst = m->dst;
    auto cands = enumerate_candidates(topo, leaf, view, routing);
    score_candidates(leaf, cands);
    const Pick pick = pick_route(leaf, cands, csize);
    if (!pick.ok) {
      Waiter w;
      w.is_terminal = true;
      w.terminal = t;
      register_waiter(leaf, pick.chosen, w);
      return;
    }
    Chunk* c = alloc_chunk();
    c->msg = m;
    c->index = m->next_chunk;
    c->size = csize;
    reserve(c, leaf, pick.chosen);
    ts.in_flight = c;
    const Ns wire = transmit_time(csize, topo.params().bw_terminal);
    Event done;
    done.time = now + wire;
    done.kind = EventKind::inject_done;
    done.terminal = t;
    eq.schedule(now, done);
    Event arrive;
    arrive.time = now + wire + engine.router_delay_ns;
    arrive.kind = EventKind::chunk_arrive;
    arrive.router = leaf;
    arrive.chunk = c;
    eq.schedule(now, arrive);
    if (++m->next_chunk == m->chunk_count) ts.sendq.pop_front();
  }

  void on_inject_done(const Event& e) {
    terminals[e.terminal].in_flight = nullptr;
    try_inject(e.terminal);
  }

  void try_transmit(RouterId r, int port) {
    PortState& ps = routers[r].ports[port];
    if (ps.in_flight != nullptr) return;

    int best_vl = -1;
    std::uint64_t best_seq = 0;
    Pick best_pick;
    for (int vl = 0; vl < 2; ++vl) {
      auto& vq = ps.vls[vl];
      if (vq.q.empty()) continue;
      Chunk* c = vq.q.front();
      Pick pick;
      if (!ps.to_terminal) {
        ChunkRouteView view;
        view.src = c->msg->src;
        view.dst = c->msg->dst;
        view.vl = c->vl;
        view.prev_router = r;
        view.path_class = c->path_class;
        auto cands = enumerate_candidates(topo, ps.peer_router, view, routing);
        score_candidates(ps.peer_router, cands);
        pick = pick_route(ps.peer_router, cands, c->size);
        if (!pick.ok) {
          Waiter w;
          w.router = r;
          w.port = port;
          register_waiter(ps.peer_router, pick.chosen, w);
          continue;
        }
      } else {
        pick.ok = true;  // ejection channel, terminal always sinks
      }
      if (best_vl < 0 || c->queue_seq < best_seq) {
        best_vl = vl;
        best_seq = c->queue_seq;
        best_pick = pick;
      }
    }
    if (best_vl < 0) return;

    auto& vq = ps.vls[best_vl];
    Chunk* c = vq.q.front();
    vq.q.pop_front();
    ps.in_flight = c;  // occupancy stays until the wire is done
    const Ns wire = transmit_time(c->size, ps.bandwidth);
    Event depart;
    depart.time = now + wire;
    depart.kind = EventKind::chunk_depart;
    depart.router = r;
    depart.port = port;
    eq.schedule(now, depart);
    Event arrive;
    arrive.kind = EventKind::chunk_arrive;
    arrive.chunk = c;
    if (ps.to_terminal) {
      arrive.time = now + wire;  // no pipeline delay into a terminal
      arrive.terminal = ps.peer_terminal;
    } else {
      reserve(c, ps.peer_router, best_pick.chosen);
      arrive.time = now + wire + engine.router_delay_ns;
      arrive.router = ps.peer_router;
    }
    eq.schedule(now, arrive);
  }

  void on_chunk_depart(const Event& e) {
    PortState& ps = routers[e.router].ports[e.port];
    Chunk* c = ps.in_flight;
    if (c == nullptr) throw SimulationError("depart with no chunk in flight");
    ps.in_flight = nullptr;
    auto& vq = ps.vls[int(c->vl)];
    vq.occupancy -= c->size;
    if (vq.occupancy < 0) {
      throw SimulationError("negative occupancy at router " +
                            std::to_string(e.router));
    }
    wake(vq);
    try_transmit(e.router, e.port);
  }

  void wake(VlQueue& vq) {
    for (const Waiter& w : vq.waiters) {
      if (w.is_terminal) {
        TerminalState& ts = terminals[w.terminal];
        if (ts.retry_pending) continue;
        ts.retry_pending = true;
        Event e;
        e.time = now;
        e.kind = EventKind::inject_retry;
        e.terminal = w.terminal;
        eq.schedule(now, e);
      } else {
        PortState& ps = routers[w.router].ports[w.port];
        if (ps.retry_pending) continue;
        ps.retry_pending = true;
        Event e;
        e.time = now;
        e.kind = EventKind::port_retry;
        e.router = w.router;
        e.port = w.port;
        eq.schedule(now, e);
      }
    }
    vq.waiters.clear();
  }

  void on_chunk_arrive_router(const Event& e) {
    Chunk* c = e.chunk;
    if (c->next_router != e.router) {
      throw SimulationError("chunk arrived at unexpected router");
    }
    c->vl = c->next_vl;
    c->path_class = c->next_class;
    if (c->trace_len >= int(c->trace.size())) {
      throw SimulationError("hop trace overflow");
    }
    c->trace[c->trace_len++] = e.router;
    if (metrics != nullptr && topo.role(e.router) == RouterRole::spine &&
        topo.group_of_terminal(c->msg->src) !=
            topo.group_of_terminal(c->msg->dst)) {
      metrics->spine_arrival(c->msg->job, topo.group_of_router(e.router), now,
                             c->size);
    }
    routers[e.router].ports[c->next_port].vls[int(c->vl)].q.push_back(c);
    try_transmit(e.router, c->next_port);
  }

  void on_chunk_arrive_terminal(const Event& e) {
    Chunk* c = e.chunk;
    Message* m = c->msg;
    const std::string shape_error = check_trace_legality(
        topo, m->src, m->dst, std::span<const RouterId>(c->trace.data(),
                                                        std::size_t(c->trace_len)));
    if (!shape_error.empty()) {
      throw SimulationError("illegal delivered path for job " +
                            std::to_string(m->job) + " message " +
                            std::to_string(m->msg_id) + ": " + shape_error);
    }
    if (++m->chunks_delivered == m->chunk_count) {
      ++messages_delivered;
      if (metrics != nullptr) {
        LatencyRecord rec;
        rec.job_id = m->job;
        rec.message_id = m->msg_id;
        rec.src_terminal = m->src;
        rec.dst_terminal = m->dst;
        rec.size_bytes = m->size;
        rec.issue_ns = m->issue_time;
        rec.delivery_ns = now;
        rec.hops = c->trace_len;
        rec.path_class = c->path_class;
        rec.vl = c->vl;
        metrics->record_delivery(rec);
      }
      JobRuntime& jr = job(m->job);
      if (jr.spec.pattern == Pattern::broadcast) {
        if (--jr.outstanding == 0 &&
            jr.iterations_issued < jr.spec.msg_count) {
          Event next;
          next.time = std::max(now, jr.last_issue + jr.spec.interval);
          next.kind = EventKind::message_issue;
          next.job = jr.spec.job_id;
          next.rank = jr.spec.broadcast_root;
          next.index = jr.iterations_issued;
          eq.schedule(now, next);
        }
      }
    }
    free_chunk(c);
  }

  void dispatch(const Event& e) {
    switch (e.kind) {
      case EventKind::message_issue:
        on_message_issue(e);
        break;
      case EventKind::chunk_arrive:
        if (e.router >= 0) {
          on_chunk_arrive_router(e);
        } else {
          on_chunk_arrive_terminal(e);
        }
        break;
      case EventKind::chunk_depart:
        on_chunk_depart(e);
        break;
      case EventKind::port_retry:
        routers[e.router].ports[e.port].retry_pending = false;
        try_transmit(e.router, e.port);
        break;
      case EventKind::inject_done:
        on_inject_done(e);
        break;
      case EventKind::inject_retry:
        terminals[e.terminal].retry_pending = false;
        try_inject(e.terminal);
        break;
    }
  }

  SimReport run(Ns limit) {
    SimReport rep;
    while (!eq.empty()) {
      if (limit >= 0 && eq.top().time > limit) break;
      const Event e = eq.pop();
      now = e.time;
      dispatch(e);
      ++rep.events_executed;
    }
    rep.final_time = now;
    rep.messages_issued = messages_issued;
    rep.messages_delivered = messages_delivered;
    rep.quiescent = eq.empty();
    if (rep.quiescent) check_quiescent();
    if (metrics != nullptr) metrics->close_run(now);
    return rep;
  }

  // Conservation: with no events left, nothing may remain buffered anywhere.
  void check_quiescent() const {
    if (messages_issued != messages_delivered) {
      throw SimulationError("quiescent with " +
                            std::to_string(messages_issued -
                                           messages_delivered) +
                            " undelivered messages");
    }
    if (chunks_live != 0) {
      throw SimulationError("quiescent with live chunks");
    }
    for (const auto& ts : terminals) {
      if (!ts.sendq.empty() || ts.in_flight != nullptr) {
        throw SimulationError("quiescent with pending injection");
      }
    }
    for (const auto& rs : routers) {
      for (const auto& ps : rs.ports) {
        for (const auto& vq : ps.vls) {
          if (!vq.q.empty() || vq.occupancy != 0) {
            throw SimulationError("quiescent with occupied queues");
          }
        }
        if (ps.in_flight != nullptr) {
          throw SimulationError("quiescent with a busy wire");
        }
      }
    }
  }
};

Simulation::Simulation(const Topology& topo, const EngineConfig& engine,
                       const RoutingConfig& routing, MetricsCollector* metrics)
    : impl_(std::make_unique<Impl>(topo, engine, routing, metrics)) {}

Simulation::~Simulation() = default;

void Simulation::add_job(const JobSpec& spec, const Allocation& alloc) {
  impl_->add_job(spec, alloc);
}

SimReport Simulation::run(Ns limit) {
  SimReport rep = impl_->run(limit);
  now_ = impl_->now;
  return rep;
}

double Simulation::port_score_at(RouterId router, int port, Vl vl) const {
  if (router < 0 || router >= RouterId(impl_->routers.size()) || port < 0 ||
      port >= int(impl_->routers[router].ports.size())) {
    throw ArgumentError("port_score_at: unknown port");
  }
  return port_score(impl_->routers[router].ports[port].vls[int(vl)].occupancy,
                    impl_->engine.buffer_bytes);
}

}  // namespace dfp
