#include "asjr/runtime.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <chrono>
#include <cmath>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <queue>
#include <stdexcept>
#include <thread>
#include <utility>

namespace asjr {

namespace {

double l2_norm(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double rel_error_vs(const std::vector<double>& x,
                    const std::vector<double>& x_star, double norm_x_star) {
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - x_star[k];
    acc += d * d;
  }
  return std::sqrt(acc) / norm_x_star;
}

std::vector<std::vector<int>> subscriber_lists(const Partition& part) {
  std::vector<std::vector<int>> subs(part.agents);
  for (int i = 0; i < part.agents; ++i)
    for (int j : part.neighbors[i]) subs[j].push_back(i);
  for (auto& s : subs) std::sort(s.begin(), s.end());
  return subs;
}

void validate_config(const NetworkConfig& cfg, const Partition& part) {
  if (cfg.caps.wall_cap <= 0.0 || cfg.caps.max_iterations == 0)
    throw std::invalid_argument("NetworkConfig: caps must be positive");
  if (cfg.convergence_duration <= 0.0)
    throw std::invalid_argument(
        "NetworkConfig: convergence_duration must be positive");
  if (cfg.sample_interval <= 0.0)
    throw std::invalid_argument(
        "NetworkConfig: sample_interval must be positive");
  if (cfg.timing.link_delay_min < 0.0 ||
      cfg.timing.link_delay_max < cfg.timing.link_delay_min ||
      cfg.timing.compute_min < 0.0 ||
      cfg.timing.compute_max < cfg.timing.compute_min)
    throw std::invalid_argument("NetworkConfig: bad timing ranges");
  if (cfg.corruption.kind == CorruptionKind::BitFlip)
    cfg.corruption.bitflip.validate();
  if (cfg.corruption.kind == CorruptionKind::Malevolent) {
    cfg.corruption.malevolent.validate();
    if (cfg.corruption.malevolent.target_agent >= part.agents)
      throw std::invalid_argument(
          "NetworkConfig: malevolent target_agent out of range");
  }
  if (!cfg.initial_guess.empty() &&
      static_cast<int>(cfg.initial_guess.size()) != part.m)
    throw std::invalid_argument("NetworkConfig: initial_guess size mismatch");
}

/* ------------------------------------------------------------------ */
/* Virtual clock: single-threaded discrete-event simulation.           */

class VirtualEngine {
 public:
  VirtualEngine(const SparseSystem& sys, const Partition& part,
                const NetworkConfig& cfg,
                const std::map<std::pair<int, int>, double>& delay_overrides)
      : sys_(sys), part_(part), cfg_(cfg), subs_(subscriber_lists(part)) {
    const int n = part.agents;
    norm_x_star_ = l2_norm(sys.x_star);
    hosts_.reserve(n);
    for (int i = 0; i < n; ++i) {
      hosts_.push_back(Host{
          Agent(sys, part, i, cfg.variant, cfg.epsilon),
          {},
          std::vector<std::uint64_t>(n, 0),
          std::vector<std::uint8_t>(n, 0),
          -1.0,
          false,
          0.0,
          true,
          false,
          derive_stream(cfg.seed, StreamKind::Compute, i),
      });
      if (!cfg.initial_guess.empty())
        hosts_[i].agent.set_initial_state(cfg.initial_guess);
      if (cfg.instrument) hosts_[i].agent.set_instrument(true);
      if (cfg.corruption.kind == CorruptionKind::Malevolent &&
          cfg.corruption.malevolent.target_agent == i)
        hosts_[i].agent.set_malevolent(
            cfg.corruption.malevolent,
            mix_seed(cfg.seed,
                     static_cast<std::uint64_t>(StreamKind::Malevolent), i));
    }
    delay_rng_.reserve(static_cast<std::size_t>(n) * n);
    corrupt_rng_.reserve(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        delay_rng_.push_back(derive_stream(cfg.seed, StreamKind::LinkDelay, i, j));
        corrupt_rng_.push_back(
            derive_stream(cfg.seed, StreamKind::LinkCorrupt, i, j));
      }
    last_deliver_.assign(static_cast<std::size_t>(n) * n, 0.0);
    fixed_delay_.assign(static_cast<std::size_t>(n) * n, -1.0);
    for (const auto& [link, d] : delay_overrides)
      fixed_delay_[link.first * n + link.second] = d;
    if (cfg.instrument) dag_series_.assign(n, {});
  }

  RunResult run() {
    schedule(0.0, -1, Kind::Monitor);
    for (int i = 0; i < part_.agents; ++i)
      schedule(hosts_[i].compute_rng.uniform(cfg_.timing.compute_min,
                                             cfg_.timing.compute_max),
               i, Kind::Produce);
    while (!finished_) {
      if (queue_.empty()) {
        finish(RunStatus::TimeCap, cfg_.caps.wall_cap);
        break;
      }
      Event ev = queue_.top();
      if (ev.t > cfg_.caps.wall_cap) {
        finish(RunStatus::TimeCap, cfg_.caps.wall_cap);
        break;
      }
      queue_.pop();
      dispatch(ev);
    }
    return std::move(result_);
  }

 private:
  enum class Kind { Monitor, Gossip, Deliver, Produce, WindowCheck };

  struct Event {
    double t;
    int owner;  // acted-upon agent; -1 for monitor (sorts first on ties)
    std::uint64_t seq;
    Kind kind;
    std::shared_ptr<const UpdateMessage> msg;
    FlagGossip gossip;
  };
  struct EventAfter {
    bool operator()(const Event& a, const Event& b) const {
      if (a.t != b.t) return a.t > b.t;
      if (a.owner != b.owner) return a.owner > b.owner;
      return a.seq > b.seq;
    }
  };

  struct Host {
    Agent agent;
    std::deque<std::shared_ptr<const UpdateMessage>> inbox;
    std::vector<std::uint64_t> flag_seq;  // latest sequence seen per peer
    std::vector<std::uint8_t> flag_val;
    double window_start;
    bool done;
    double done_time;
    bool active;
    bool last_flag_broadcast;
    Rng compute_rng;
  };

  void schedule(double t, int owner, Kind kind,
                std::shared_ptr<const UpdateMessage> msg = nullptr,
                FlagGossip g = {}) {
    queue_.push(Event{t, owner, next_seq_++, kind, std::move(msg), g});
  }

  void dispatch(const Event& ev) {
    switch (ev.kind) {
      case Kind::Monitor: {
        sample(ev.t);
        schedule(ev.t + cfg_.sample_interval, -1, Kind::Monitor);
        break;
      }
      case Kind::Deliver: {
        Host& h = hosts_[ev.owner];
        note_flag(ev.owner, ev.msg->sender, ev.msg->sequence,
                  ev.msg->locally_converged, ev.t);
        if (h.active) h.inbox.push_back(ev.msg);
        break;
      }
      case Kind::Gossip: {
        note_flag(ev.owner, ev.gossip.sender, ev.gossip.sequence,
                  ev.gossip.locally_converged, ev.t);
        break;
      }
      case Kind::Produce:
        handle_produce(ev.owner, ev.t);
        break;
      case Kind::WindowCheck: {
        Host& h = hosts_[ev.owner];
        if (h.done || h.window_start < 0.0) break;
        if (ev.t + 1e-12 >= h.window_start + cfg_.convergence_duration) {
          h.done = true;
          h.active = false;
          h.done_time = ev.t;
          if (++done_count_ == part_.agents)
            finish(RunStatus::Converged, ev.t);
        } else {
          schedule(h.window_start + cfg_.convergence_duration, ev.owner,
                   Kind::WindowCheck);
        }
        break;
      }
    }
  }

  void note_flag(int at, int from, std::uint64_t seq, bool flag, double now) {
    Host& h = hosts_[at];
    if (h.done) return;
    if (seq <= h.flag_seq[from]) return;
    h.flag_seq[from] = seq;
    h.flag_val[from] = flag ? 1 : 0;
    reeval_window(at, now);
  }

  void reeval_window(int i, double now) {
    Host& h = hosts_[i];
    if (h.done) return;
    bool all = h.agent.locally_converged();
    for (int q = 0; all && q < part_.agents; ++q)
      if (q != i && !h.flag_val[q]) all = false;
    if (all && h.window_start < 0.0) {
      h.window_start = now;
      schedule(now + cfg_.convergence_duration, i, Kind::WindowCheck);
    } else if (!all) {
      h.window_start = -1.0;
    }
  }

  void handle_produce(int i, double now) {
    Host& h = hosts_[i];
    if (!h.active) return;

    while (!h.inbox.empty()) {
      h.agent.absorb(*h.inbox.front());
      h.inbox.pop_front();
    }
    if (cfg_.instrument)
      for (const RefreshEvent& re : h.agent.take_refresh_events())
        check_refresh(now, re);

    UpdateMessage out = h.agent.produce(now);
    if (cfg_.instrument)
      dag_series_[i].push_back({now, out.dag_shortest});

    const bool flag_changed = out.locally_converged != h.last_flag_broadcast;
    h.last_flag_broadcast = out.locally_converged;
    const int n = part_.agents;
    const bool corrupting =
        cfg_.corruption.kind == CorruptionKind::BitFlip &&
        cfg_.corruption.bitflip.probability > 0.0;
    auto shared = std::make_shared<const UpdateMessage>(std::move(out));
    for (int j : subs_[i]) {
      std::shared_ptr<const UpdateMessage> payload = shared;
      if (corrupting)
        payload = std::make_shared<const UpdateMessage>(corrupt_broadcast(
            *shared, cfg_.corruption.bitflip, corrupt_rng_[i * n + j]));
      schedule(next_delivery_time(i, j, now), j, Kind::Deliver,
               std::move(payload));
    }
    if (flag_changed)
      for (int q = 0; q < n; ++q) {
        if (q == i) continue;
        schedule(next_delivery_time(i, q, now), q, Kind::Gossip, nullptr,
                 FlagGossip{i, shared->locally_converged, shared->sequence});
      }

    if (h.agent.kappa() >= cfg_.caps.max_iterations) {
      finish(RunStatus::IterationCap, now);
      return;
    }
    reeval_window(i, now);
    schedule(now + h.compute_rng.uniform(cfg_.timing.compute_min,
                                         cfg_.timing.compute_max),
             i, Kind::Produce);
  }

  double next_delivery_time(int i, int j, double now) {
    const int n = part_.agents;
    const double fixed = fixed_delay_[i * n + j];
    const double d = fixed >= 0.0
                         ? fixed
                         : delay_rng_[i * n + j].uniform(
                               cfg_.timing.link_delay_min,
                               cfg_.timing.link_delay_max);
    double& last = last_deliver_[i * n + j];
    last = std::max(now + d, last);  // FIFO per directed link
    return last;
  }

  /* True global shortest path at time tau: the minimum over agents of the
   * path length of the iterate each held at tau (0 before any production). */
  std::int32_t s_global(double tau) const {
    std::int32_t s = INT32_MAX;
    for (const auto& series : dag_series_) {
      std::int32_t v = 0;
      auto it = std::upper_bound(
          series.begin(), series.end(), tau,
          [](double t, const std::pair<double, std::int32_t>& e) {
            return t < e.first;
          });
      if (it != series.begin()) v = std::prev(it)->second;
      s = std::min(s, v);
    }
    return s == INT32_MAX ? 0 : s;
  }

  /* The protocol claims every refreshed estimate lower-bounds the shortest
   * dependency path over the iterates the network holds at that moment. */
  void check_refresh(double now, const RefreshEvent& re) {
    ++result_.dag_refresh_checks;
    if (re.s_tilde > s_global(now)) ++result_.dag_refresh_violations;
  }

  void sample(double t) {
    MonitorSample s;
    s.t = t;
    const int n = part_.agents;
    s.kappa.resize(n);
    s.accepted.resize(n);
    s.rejected.resize(n);
    s.s_tilde.resize(n);
    s.locally_converged.resize(n);
    std::vector<double> x(part_.m);
    for (int i = 0; i < n; ++i) {
      const Agent& a = hosts_[i].agent;
      std::memcpy(x.data() + part_.block_start[i], a.block_data(),
                  sizeof(double) * a.block_rows());
      s.kappa[i] = a.kappa();
      s.accepted[i] = a.counters().accepted;
      s.rejected[i] = a.counters().rejected();
      s.s_tilde[i] = a.s_tilde();
      s.locally_converged[i] = a.locally_converged() ? 1 : 0;
    }
    s.rel_error = rel_error_vs(x, sys_.x_star, norm_x_star_);
    last_x_ = std::move(x);
    result_.samples.push_back(std::move(s));
  }

  void finish(RunStatus status, double t) {
    finished_ = true;
    sample(t);
    result_.status = status;
    result_.t_end = t;
    if (status == RunStatus::Converged)
      result_.time_to_converge = t - cfg_.convergence_duration;
    result_.final_x = last_x_;
    result_.final_rel_error = result_.samples.back().rel_error;
    result_.agents.resize(part_.agents);
    for (int i = 0; i < part_.agents; ++i) {
      const Agent& a = hosts_[i].agent;
      result_.agents[i] =
          AgentSummary{a.kappa(), a.counters(), a.s_tilde(),
                       a.locally_converged()};
    }
  }

  const SparseSystem& sys_;
  const Partition& part_;
  NetworkConfig cfg_;
  std::vector<std::vector<int>> subs_;
  std::vector<Host> hosts_;
  std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
  std::uint64_t next_seq_ = 0;
  std::vector<Rng> delay_rng_, corrupt_rng_;
  std::vector<double> last_deliver_, fixed_delay_;
  std::vector<std::vector<std::pair<double, std::int32_t>>> dag_series_;
  double norm_x_star_ = 0.0;
  int done_count_ = 0;
  bool finished_ = false;
  std::vector<double> last_x_;
  RunResult result_;
};

/* ------------------------------------------------------------------ */
/* Real-time clock: one thread per agent plus a monitor thread.        */

class RealTimeEngine {
 public:
  RealTimeEngine(const SparseSystem& sys, const Partition& part,
                 const NetworkConfig& cfg,
                 const std::map<std::pair<int, int>, double>& delay_overrides)
      : sys_(sys), part_(part), cfg_(cfg), subs_(subscriber_lists(part)) {
    norm_x_star_ = l2_norm(sys.x_star);
    const int n = part.agents;
    hosts_ = std::vector<RtHost>(n);
    for (int i = 0; i < n; ++i) {
      RtHost& h = hosts_[i];
      h.agent = std::make_unique<Agent>(sys, part, i, cfg.variant, cfg.epsilon);
      if (!cfg.initial_guess.empty())
        h.agent->set_initial_state(cfg.initial_guess);
      if (cfg.corruption.kind == CorruptionKind::Malevolent &&
          cfg.corruption.malevolent.target_agent == i)
        h.agent->set_malevolent(
            cfg.corruption.malevolent,
            mix_seed(cfg.seed,
                     static_cast<std::uint64_t>(StreamKind::Malevolent), i));
      h.flag_seq.assign(n, 0);
      h.flag_val.assign(n, 0);
      h.compute_rng = derive_stream(cfg.seed, StreamKind::Compute, i);
      h.last_deliver.assign(n, 0.0);
      h.snap_block.assign(part.block_size(i), 0.0);
      for (int j = 0; j < n; ++j) {
        h.delay_rng.push_back(derive_stream(cfg.seed, StreamKind::LinkDelay, i, j));
        h.corrupt_rng.push_back(
            derive_stream(cfg.seed, StreamKind::LinkCorrupt, i, j));
        h.fixed_delay.push_back(-1.0);
      }
      for (const auto& [link, d] : delay_overrides)
        if (link.first == i) h.fixed_delay[link.second] = d;
    }
  }

  RunResult run() {
    start_ = std::chrono::steady_clock::now();
    std::vector<std::thread> threads;
    threads.reserve(part_.agents + 1);
    for (int i = 0; i < part_.agents; ++i)
      threads.emplace_back([this, i] { agent_loop(i); });
    threads.emplace_back([this] { monitor_loop(); });

    RunStatus status = RunStatus::TimeCap;
    double t_end = 0.0;
    for (;;) {
      std::this_thread::sleep_for(std::chrono::microseconds(200));
      const double now = elapsed();
      if (capped_.load(std::memory_order_relaxed)) {
        status = RunStatus::IterationCap;
        t_end = now;
        break;
      }
      if (done_count_.load(std::memory_order_relaxed) == part_.agents) {
        status = RunStatus::Converged;
        t_end = 0.0;
        for (const RtHost& h : hosts_) t_end = std::max(t_end, h.done_time);
        break;
      }
      if (now >= cfg_.caps.wall_cap) {
        status = RunStatus::TimeCap;
        t_end = now;
        break;
      }
    }
    stop_.store(true, std::memory_order_relaxed);
    for (auto& t : threads) t.join();

    RunResult res;
    res.status = status;
    res.t_end = t_end;
    if (status == RunStatus::Converged)
      res.time_to_converge = t_end - cfg_.convergence_duration;
    {
      std::lock_guard<std::mutex> lk(samples_mu_);
      res.samples = std::move(samples_);
    }
    std::vector<double> x(part_.m);
    res.agents.resize(part_.agents);
    for (int i = 0; i < part_.agents; ++i) {
      const Agent& a = *hosts_[i].agent;
      std::memcpy(x.data() + part_.block_start[i], a.block_data(),
                  sizeof(double) * a.block_rows());
      res.agents[i] = AgentSummary{a.kappa(), a.counters(), a.s_tilde(),
                                   a.locally_converged()};
    }
    res.final_rel_error = rel_error_vs(x, sys_.x_star, norm_x_star_);
    res.final_x = std::move(x);
    /* append a final observation so the series covers the whole run */
    MonitorSample fin = make_sample_from(res.final_x, t_end, res.agents);
    res.samples.push_back(std::move(fin));
    return res;
  }

 private:
  struct UpdateEnvelope {
    double deliver_at;
    std::shared_ptr<const UpdateMessage> msg;
  };
  struct GossipEnvelope {
    double deliver_at;
    FlagGossip gossip;
  };

  struct RtHost {
    std::unique_ptr<Agent> agent;
    std::mutex inbox_mu;
    std::vector<UpdateEnvelope> inbox;
    std::mutex gossip_mu;
    std::vector<GossipEnvelope> gossip;
    std::mutex snap_mu;
    std::vector<double> snap_block;
    AgentSummary snap_sum;
    std::vector<std::uint64_t> flag_seq;
    std::vector<std::uint8_t> flag_val;
    Rng compute_rng;
    std::vector<Rng> delay_rng, corrupt_rng;
    std::vector<double> fixed_delay;
    std::vector<double> last_deliver;
    double window_start = -1.0;
    double done_time = 0.0;
    bool last_flag_broadcast = false;
  };

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

  void agent_loop(int i) {
    RtHost& h = hosts_[i];
    Agent& agent = *h.agent;
    const int n = part_.agents;
    const bool corrupting =
        cfg_.corruption.kind == CorruptionKind::BitFlip &&
        cfg_.corruption.bitflip.probability > 0.0;
    std::vector<std::shared_ptr<const UpdateMessage>> ready;
    while (!stop_.load(std::memory_order_relaxed)) {
      std::this_thread::sleep_for(std::chrono::duration<double>(
          h.compute_rng.uniform(cfg_.timing.compute_min,
                                cfg_.timing.compute_max)));
      const double now = elapsed();

      {
        std::lock_guard<std::mutex> lk(h.gossip_mu);
        std::size_t kept = 0;
        for (auto& g : h.gossip) {
          if (g.deliver_at <= now) {
            if (g.gossip.sequence > h.flag_seq[g.gossip.sender]) {
              h.flag_seq[g.gossip.sender] = g.gossip.sequence;
              h.flag_val[g.gossip.sender] = g.gossip.locally_converged;
            }
          } else {
            h.gossip[kept++] = g;
          }
        }
        h.gossip.resize(kept);
      }
      ready.clear();
      {
        std::lock_guard<std::mutex> lk(h.inbox_mu);
        std::size_t kept = 0;
        for (auto& env : h.inbox) {
          if (env.deliver_at <= now)
            ready.push_back(std::move(env.msg));
          else
            h.inbox[kept++] = std::move(env);
        }
        h.inbox.resize(kept);
      }
      for (const auto& msg : ready) {
        if (msg->sequence > h.flag_seq[msg->sender]) {
          h.flag_seq[msg->sender] = msg->sequence;
          h.flag_val[msg->sender] = msg->locally_converged;
        }
        agent.absorb(*msg);
      }

      UpdateMessage out = agent.produce(now);
      if (agent.kappa() >= cfg_.caps.max_iterations) {
        capped_.store(true, std::memory_order_relaxed);
        return;
      }
      const bool flag = out.locally_converged;
      const std::uint64_t seq = out.sequence;
      const bool flag_changed = flag != h.last_flag_broadcast;
      h.last_flag_broadcast = flag;
      auto shared = std::make_shared<const UpdateMessage>(std::move(out));
      for (int j : subs_[i]) {
        std::shared_ptr<const UpdateMessage> payload = shared;
        if (corrupting)
          payload = std::make_shared<const UpdateMessage>(corrupt_broadcast(
              *shared, cfg_.corruption.bitflip, h.corrupt_rng[j]));
        const double at = delivery_time(h, i, j, now);
        std::lock_guard<std::mutex> lk(hosts_[j].inbox_mu);
        hosts_[j].inbox.push_back(UpdateEnvelope{at, std::move(payload)});
      }
      if (flag_changed)
        for (int q = 0; q < n; ++q) {
          if (q == i) continue;
          const double at = delivery_time(h, i, q, now);
          std::lock_guard<std::mutex> lk(hosts_[q].gossip_mu);
          hosts_[q].gossip.push_back(
              GossipEnvelope{at, FlagGossip{i, flag, seq}});
        }

      {
        std::lock_guard<std::mutex> lk(h.snap_mu);
        std::memcpy(h.snap_block.data(), agent.block_data(),
                    sizeof(double) * agent.block_rows());
        h.snap_sum = AgentSummary{agent.kappa(), agent.counters(),
                                  agent.s_tilde(), agent.locally_converged()};
      }

      bool all = agent.locally_converged();
      for (int q = 0; all && q < n; ++q)
        if (q != i && !h.flag_val[q]) all = false;
      if (all && h.window_start < 0.0) h.window_start = now;
      if (!all) h.window_start = -1.0;
      if (all && now - h.window_start >= cfg_.convergence_duration) {
        h.done_time = now;
        done_count_.fetch_add(1, std::memory_order_relaxed);
        return;
      }
    }
  }

  MonitorSample make_sample_from(const std::vector<double>& x, double t,
                                 const std::vector<AgentSummary>& sums) {
    MonitorSample s;
    s.t = t;
    const int n = part_.agents;
    s.kappa.resize(n);
    s.accepted.resize(n);
    s.rejected.resize(n);
    s.s_tilde.resize(n);
    s.locally_converged.resize(n);
    for (int i = 0; i < n; ++i) {
      s.kappa[i] = sums[i].kappa;
      s.accepted[i] = sums[i].counters.accepted;
      s.rejected[i] = sums[i].counters.rejected();
      s.s_tilde[i] = sums[i].s_tilde;
      s.locally_converged[i] = sums[i].locally_converged ? 1 : 0;
    }
    s.rel_error = rel_error_vs(x, sys_.x_star, norm_x_star_);
    return s;
  }

  void monitor_loop() {
    std::vector<double> x(part_.m);
    std::vector<AgentSummary> sums(part_.agents);
    for (std::uint64_t k = 0; !stop_.load(std::memory_order_relaxed); ++k) {
      std::this_thread::sleep_until(
          start_ + std::chrono::duration_cast<
                       std::chrono::steady_clock::duration>(
                       std::chrono::duration<double>(k * cfg_.sample_interval)));
      if (stop_.load(std::memory_order_relaxed)) break;
      const double t = elapsed();
      for (int i = 0; i < part_.agents; ++i) {
        RtHost& h = hosts_[i];
        std::lock_guard<std::mutex> lk(h.snap_mu);
        std::memcpy(x.data() + part_.block_start[i], h.snap_block.data(),
                    sizeof(double) * h.snap_block.size());
        sums[i] = h.snap_sum;
      }
      MonitorSample s = make_sample_from(x, t, sums);
      std::lock_guard<std::mutex> lk(samples_mu_);
      samples_.push_back(std::move(s));
    }
  }

  double delivery_time(RtHost& h, int i, int j, double now) {
    const double fixed = h.fixed_delay[j];
    const double d =
        fixed >= 0.0 ? fixed
                     : h.delay_rng[j].uniform(cfg_.timing.link_delay_min,
                                              cfg_.timing.link_delay_max);
    h.last_deliver[j] = std::max(now + d, h.last_deliver[j]);
    (void)i;
    return h.last_deliver[j];
  }

  const SparseSystem& sys_;
  const Partition& part_;
  NetworkConfig cfg_;
  std::vector<std::vector<int>> subs_;
  std::vector<RtHost> hosts_;
  std::chrono::steady_clock::time_point start_;
  std::atomic<bool> stop_{false};
  std::atomic<bool> capped_{false};
  std::atomic<int> done_count_{0};
  std::mutex samples_mu_;
  std::vector<MonitorSample> samples_;
  double norm_x_star_ = 0.0;
};

}  // namespace

const char* run_status_name(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "converged";
    case RunStatus::IterationCap: return "iteration-cap";
    case RunStatus::TimeCap: return "time-cap";
  }
  return "?";
}

Network::Network(const SparseSystem& sys, const Partition& part,
                 const NetworkConfig& config)
    : sys_(sys), part_(part), config_(config) {
  validate_config(config, part);
}

void Network::set_link_delay(int from, int to, double fixed_delay) {
  if (from < 0 || from >= part_.agents || to < 0 || to >= part_.agents ||
      from == to || fixed_delay < 0.0)
    throw std::invalid_argument("set_link_delay: bad link");
  delay_overrides_[{from, to}] = fixed_delay;
}

RunResult Network::run() {
  if (config_.clock == ClockKind::Virtual)
    return VirtualEngine(sys_, part_, config_, delay_overrides_).run();
  return RealTimeEngine(sys_, part_, config_, delay_overrides_).run();
}

std::vector<std::vector<double>> lockstep_trajectory(const SparseSystem& sys,
                                                     const Partition& part,
                                                     Variant variant,
                                                     double epsilon,
                                                     int rounds) {
  std::vector<Agent> agents;
  agents.reserve(part.agents);
  for (int i = 0; i < part.agents; ++i)
    agents.emplace_back(sys, part, i, variant, epsilon);

  std::vector<std::vector<double>> trajectory;
  trajectory.reserve(rounds);
  for (int round = 0; round < rounds; ++round) {
    std::vector<UpdateMessage> outbox;
    outbox.reserve(part.agents);
    for (int i = 0; i < part.agents; ++i)
      outbox.push_back(agents[i].produce(static_cast<double>(round)));
    std::vector<double> x(part.m);
    for (int i = 0; i < part.agents; ++i)
      std::copy(outbox[i].block.begin(), outbox[i].block.end(),
                x.begin() + part.block_start[i]);
    for (int i = 0; i < part.agents; ++i)
      for (int j : part.neighbors[i]) agents[i].absorb(outbox[j]);
    trajectory.push_back(std::move(x));
  }
  return trajectory;
}

}  // namespace asjr
