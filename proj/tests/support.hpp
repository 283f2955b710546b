#pragma once

// Instance fuzzing and brute-force oracles shared by the unit and
// acceptance suites. The oracles deliberately avoid the engine's calendar
// and scheduler code paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <staffsim/attributes.hpp>
#include <staffsim/criteria.hpp>
#include <staffsim/domain.hpp>
#include <staffsim/scheduler.hpp>

namespace support {

using namespace staffsim;

/// Attribute levels from an explicit table; anything absent is unknown.
class MapSource final : public AttributeSource
{
public:
  std::map<std::pair<WorkerId, AttributeKey>, int> levels;

  void set(const WorkerId& w, AttributeKind kind, const std::string& name, int level)
  {
    levels[{w, AttributeKey{kind, name}}] = level;
  }

  std::optional<int> level(const WorkerId& w, const AttributeKey& a) const override
  {
    const auto it = levels.find({w, a});
    if (it == levels.end())
      return std::nullopt;
    return it->second;
  }
};

inline int rand_int(std::mt19937_64& g, int lo, int hi)
{
  return std::uniform_int_distribution<int>(lo, hi)(g);
}

inline double rand_real(std::mt19937_64& g, double lo, double hi)
{
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline bool coin(std::mt19937_64& g, double p) { return rand_real(g, 0.0, 1.0) < p; }

//==============================================================================
// Independent feasibility checker

struct Load
{
  double rate = 0.0;
  bool full_time = false;
  Interval interval;
};

/// Per-worker commitments: base entries the schedule does not govern, plus
/// the schedule's own assignments.
inline std::map<WorkerId, std::vector<Load>> commitments(
  const Schedule& s, const TaskBook& tasks, const Roster& workers, const TaskId& skip = {})
{
  std::map<WorkerId, std::vector<Load>> out;
  for (const auto& w : workers)
  {
    for (const auto& e : w.calendar.entries)
    {
      if (e.task_id == skip || s.contains(e.task_id))
        continue;
      out[w.id].push_back({e.workload_rate, e.timing == Timing::full_time, e.interval});
    }
  }
  for (const auto& [id, tso] : s.assignments)
  {
    if (id == skip)
      continue;
    const TaskSpec& t = tasks.at(id);
    for (const auto& w : tso.team)
      out[w].push_back({t.workload / static_cast<double>(t.duration), t.full_time(), tso.interval});
  }
  return out;
}

/// Every hard-constraint breach, as text. Empty iff the schedule is feasible
/// (deadlines ignored).
inline std::vector<std::string> independent_violations(
  const Schedule& s, const TaskBook& tasks, const Roster& workers)
{
  std::vector<std::string> out;
  for (const auto& [id, tso] : s.assignments)
  {
    if (!tasks.count(id))
    {
      out.push_back(id + ": unknown task");
      continue;
    }
    const TaskSpec& t = tasks.at(id);
    if (tso.interval.beta - tso.interval.alpha != t.duration)
      out.push_back(id + ": duration");
    std::map<std::string, int> roles;
    std::set<WorkerId> members(tso.team.begin(), tso.team.end());
    if (members.size() != tso.team.size() || members.empty())
      out.push_back(id + ": duplicate or empty team");
    for (const auto& w : tso.team)
    {
      const auto* ws = workers.find(w);
      if (!ws)
        out.push_back(id + ": unknown worker " + w);
      else
        ++roles[ws->role];
    }
    if (roles != t.required_roles)
      out.push_back(id + ": roles");
    for (const auto& w : t.must_include)
      if (!members.count(w))
        out.push_back(id + ": missing " + w);
    for (const auto& w : t.must_exclude)
      if (members.count(w))
        out.push_back(id + ": excluded " + w);
  }
  for (const auto& [w, loads] : commitments(s, tasks, workers))
  {
    const auto* ws = workers.find(w);
    if (!ws)
      continue;
    Timestep lo = std::numeric_limits<Timestep>::max(), hi = std::numeric_limits<Timestep>::min();
    for (const auto& l : loads)
    {
      lo = std::min(lo, l.interval.alpha);
      hi = std::max(hi, l.interval.beta);
    }
    for (Timestep h = lo; h < hi; ++h)
    {
      double sum = 0.0;
      int ft = 0;
      for (const auto& l : loads)
      {
        if (l.interval.alpha <= h && h < l.interval.beta)
        {
          sum += l.rate;
          ft += l.full_time ? 1 : 0;
        }
      }
      if (sum > ws->work_capacity + 1e-9)
        out.push_back(w + ": workload at " + std::to_string(h));
      if (ft > 1)
        out.push_back(w + ": full-time overlap at " + std::to_string(h));
    }
  }
  return out;
}

//==============================================================================
// Brute-force option search

inline void subsets(const std::vector<WorkerId>& pool, std::size_t k, std::size_t from,
  std::vector<WorkerId>& cur, std::vector<std::vector<WorkerId>>& out)
{
  if (cur.size() == k)
  {
    out.push_back(cur);
    return;
  }
  for (std::size_t i = from; i < pool.size(); ++i)
  {
    cur.push_back(pool[i]);
    subsets(pool, k, i + 1, cur, out);
    cur.pop_back();
  }
}

/// Teams by filtering every subset of the right size.
inline std::vector<std::vector<WorkerId>> brute_teams(const TaskSpec& t, const Roster& workers)
{
  std::size_t size = 0;
  for (const auto& [r, c] : t.required_roles)
    size += static_cast<std::size_t>(c);
  std::vector<WorkerId> ids;
  for (const auto& w : workers)
    ids.push_back(w.id);
  std::sort(ids.begin(), ids.end());
  std::vector<std::vector<WorkerId>> all, out;
  std::vector<WorkerId> cur;
  subsets(ids, size, 0, cur, all);
  for (const auto& team : all)
  {
    std::map<std::string, int> roles;
    for (const auto& w : team)
      ++roles[workers.at(w).role];
    if (roles != t.required_roles)
      continue;
    bool ok = true;
    for (const auto& w : t.must_exclude)
      ok = ok && std::find(team.begin(), team.end(), w) == team.end();
    for (const auto& w : t.must_include)
    {
      const auto* ws = workers.find(w);
      if (ws && t.required_roles.count(ws->role))
        ok = ok && std::find(team.begin(), team.end(), w) != team.end();
      else
        ok = false;
    }
    if (ok)
      out.push_back(team);
  }
  return out;
}

/// One option per team at its earliest start, by direct per-step scan.
inline std::vector<TSO> brute_tsos(const TaskSpec& t, const Roster& workers,
  const Schedule& overlay, const TaskBook& tasks, Timestep now, Timestep horizon_end)
{
  const auto loads = commitments(overlay, tasks, workers, t.id);
  const double rate = t.workload / static_cast<double>(t.duration);
  auto fits = [&](const WorkerId& w, Timestep h)
  {
    double sum = rate;
    const auto it = loads.find(w);
    if (it != loads.end())
    {
      for (const auto& l : it->second)
      {
        if (l.interval.alpha <= h && h < l.interval.beta)
        {
          sum += l.rate;
          if (l.full_time && t.full_time())
            return false;
        }
      }
    }
    return sum <= workers.at(w).work_capacity + 1e-9;
  };

  std::vector<TSO> out;
  for (const auto& team : brute_teams(t, workers))
  {
    for (Timestep a = now; a + t.duration <= horizon_end; ++a)
    {
      bool ok = true;
      for (Timestep h = a; ok && h < a + t.duration; ++h)
        for (const auto& w : team)
          ok = ok && fits(w, h);
      if (ok)
      {
        out.push_back(TSO{team, Interval{a, a + t.duration}});
        break;
      }
    }
  }
  std::stable_sort(out.begin(), out.end(),
    [](const TSO& a, const TSO& b) { return a.interval.alpha < b.interval.alpha; });
  return out;
}

//==============================================================================
// Conditional enumeration

/// Best aggregate score over the full conditional planning tree.
inline double exhaustive_best(const std::vector<TaskSpec>& batch, const Schedule& previous,
  const TaskBook& known, const PlanningContext& ctx)
{
  const TaskBook book = planning_scope(batch, previous, known);
  const CriteriaContext cctx = ctx.criteria(book);
  std::vector<TaskSpec> order = batch;
  std::sort(order.begin(), order.end(), precedes);
  double best = -std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, const Schedule&)> walk = [&](std::size_t i, const Schedule& s)
  {
    if (i == order.size())
    {
      best = std::max(best, score_schedule(s, cctx, ctx.weights));
      return;
    }
    const auto opts = brute_tsos(order[i], *ctx.workers, s, book, ctx.now, ctx.horizon_end());
    if (opts.empty())
      walk(i + 1, s);
    for (const auto& o : opts)
    {
      Schedule next = s;
      next.assign(order[i].id, o);
      walk(i + 1, next);
    }
  };
  walk(0, previous);
  return best;
}

/// Per-task argmax over brute-force options, first maximum wins.
inline Schedule greedy_oracle(const std::vector<TaskSpec>& batch, const Schedule& previous,
  const TaskBook& known, const PlanningContext& ctx)
{
  const TaskBook book = planning_scope(batch, previous, known);
  const CriteriaContext cctx = ctx.criteria(book);
  std::vector<TaskSpec> order = batch;
  std::sort(order.begin(), order.end(), precedes);
  Schedule s = previous;
  for (const auto& t : order)
  {
    const auto opts = brute_tsos(t, *ctx.workers, s, book, ctx.now, ctx.horizon_end());
    double best = -std::numeric_limits<double>::infinity();
    Schedule pick = s;
    for (const auto& o : opts)
    {
      Schedule next = s;
      next.assign(t.id, o);
      const double v = score_schedule(next, cctx, ctx.weights);
      if (v > best)
      {
        best = v;
        pick = next;
      }
    }
    s = pick;
  }
  return s;
}

//==============================================================================
// Cancellation oracle

/// Earliest start of t over brute-force options, or horizon_end if none.
inline Timestep brute_alpha_min(const TaskSpec& t, const Roster& workers, const Schedule& s,
  const TaskBook& tasks, Timestep now, Timestep horizon_end)
{
  const auto opts = brute_tsos(t, workers, s, tasks, now, horizon_end);
  return opts.empty() ? horizon_end : opts.front().interval.alpha;
}

/// Tasks whose cancellation is allowed on t's behalf: not started, strictly
/// lower priority, sharing a role.
inline std::vector<TaskId> cancelable_for(
  const TaskSpec& t, const Schedule& s, const TaskBook& tasks, Timestep now)
{
  std::vector<TaskId> out;
  for (const auto& [id, tso] : s.assignments)
  {
    const TaskSpec& o = tasks.at(id);
    bool shared = false;
    for (const auto& [r, c] : o.required_roles)
      shared = shared || t.required_roles.count(r) > 0;
    if (tso.interval.alpha >= now && o.priority < t.priority && shared)
      out.push_back(id);
  }
  return out;
}

/// Smallest number of cancelable tasks whose removal lets t start strictly
/// earlier than it can now, by trying every subset up to `max_size`.
inline std::optional<std::size_t> minimal_cancellation(const TaskSpec& t, const Schedule& s,
  const TaskBook& tasks, const Roster& workers, Timestep now, Timestep horizon_end,
  std::size_t max_size = 4)
{
  const Timestep alpha_min = brute_alpha_min(t, workers, s, tasks, now, horizon_end);
  const auto pool = cancelable_for(t, s, tasks, now);
  for (std::size_t k = 1; k <= std::min(max_size, pool.size()); ++k)
  {
    std::vector<std::vector<WorkerId>> combos;
    std::vector<WorkerId> cur;
    subsets(pool, k, 0, cur, combos);
    for (const auto& c : combos)
    {
      Schedule without = s;
      for (const auto& id : c)
        without.remove(id);
      if (brute_alpha_min(t, workers, without, tasks, now, horizon_end) < alpha_min)
        return k;
    }
  }
  return std::nullopt;
}

//==============================================================================
// Fuzzing

struct FuzzLimits
{
  int max_workers = 20;
  int max_tasks = 10;
  int max_previous = 4;
  int roles = 3;
  int max_count = 2;
  Timestep max_duration = 6;
  Timestep horizon = 40;
  bool base_entries = true;
  double constraint_probability = 0.15;
};

struct Instance
{
  Roster workers;
  TaskBook known;
  Schedule previous;
  std::vector<TaskSpec> batch;
  MapSource attributes;
  std::vector<std::string> soft_skills{"s1", "s2", "s3"};
  Timestep now = 0;
  Timestep horizon = 40;

  PlanningContext context(int beam) const
  {
    PlanningContext ctx;
    ctx.now = now;
    ctx.workers = &workers;
    ctx.attributes = &attributes;
    ctx.soft_skills = soft_skills;
    ctx.config.beam_width = beam;
    ctx.config.planning_horizon = horizon;
    return ctx;
  }
};

inline std::string role_name(int i) { return std::string(1, static_cast<char>('A' + i)); }

inline TaskSpec random_task(std::mt19937_64& g, const std::string& id, const Roster& workers,
  const FuzzLimits& lim, Timestep arrival)
{
  TaskSpec t;
  t.id = id;
  t.arrival_time = arrival;
  t.priority = rand_int(g, 1, 5);
  std::set<std::string> present;
  for (const auto& w : workers)
    present.insert(w.role);
  std::vector<std::string> roles(present.begin(), present.end());
  const int n_roles = rand_int(g, 1, std::min<int>(2, static_cast<int>(roles.size())));
  std::shuffle(roles.begin(), roles.end(), g);
  for (int i = 0; i < n_roles; ++i)
  {
    t.required_roles[roles[static_cast<std::size_t>(i)]] = rand_int(g, 1, lim.max_count);
    for (int k = 1; k <= 4; ++k)
      if (coin(g, 0.5))
        t.required_skills[roles[static_cast<std::size_t>(i)]].insert(
          roles[static_cast<std::size_t>(i)] + std::to_string(k));
  }
  for (const char* topic : {"x", "y", "z"})
    if (coin(g, 0.5))
      t.topics.insert(topic);
  t.duration = rand_int(g, 1, static_cast<int>(lim.max_duration));
  const double cap = workers.max_capacity();
  t.workload = rand_real(g, 0.1, 1.0) * cap * static_cast<double>(t.duration);
  t.timing = coin(g, 0.6) ? Timing::full_time : Timing::part_time;
  if (coin(g, lim.constraint_probability))
  {
    const auto& all = workers.workers();
    t.must_include.insert(all[static_cast<std::size_t>(rand_int(g, 0, static_cast<int>(all.size()) - 1))].id);
  }
  if (coin(g, lim.constraint_probability))
  {
    const auto& all = workers.workers();
    const auto& w = all[static_cast<std::size_t>(rand_int(g, 0, static_cast<int>(all.size()) - 1))].id;
    if (!t.must_include.count(w))
      t.must_exclude.insert(w);
  }
  if (coin(g, 0.2))
    t.deadline = arrival + t.duration + rand_int(g, 0, 10);
  return t;
}

inline Instance fuzz_instance(std::mt19937_64& g, const FuzzLimits& lim = {})
{
  Instance in;
  in.horizon = lim.horizon;
  const int n_workers = rand_int(g, 1, lim.max_workers);
  const int n_roles = rand_int(g, 1, lim.roles);
  std::vector<WorkerState> ws;
  for (int i = 0; i < n_workers; ++i)
  {
    WorkerState w;
    w.id = "w" + std::to_string(10 + i);
    w.role = role_name(i < n_roles ? i : rand_int(g, 0, n_roles - 1));
    w.seniority = coin(g, 0.5) ? Seniority::senior : Seniority::junior;
    w.salary = std::round(rand_real(g, 5.0, 40.0));
    w.work_capacity = rand_real(g, 0.5, 1.5);
    ws.push_back(std::move(w));
  }

  // Fixed base commitments, kept feasible per worker.
  if (lim.base_entries)
  {
    int ext = 0;
    for (auto& w : ws)
    {
      const int n = rand_int(g, 0, 2);
      for (int k = 0; k < n; ++k)
      {
        CalendarEntry e;
        e.task_id = "ext" + std::to_string(ext++);
        const Timestep a = rand_int(g, 0, 15);
        e.interval = {a, a + rand_int(g, 1, 6)};
        e.timing = coin(g, 0.5) ? Timing::full_time : Timing::part_time;
        e.workload_rate = rand_real(g, 0.1, 0.8) * w.work_capacity;
        WorkerState trial = w;
        trial.calendar.entries.push_back(e);
        if (independent_violations({}, {}, Roster({trial})).empty())
          w = std::move(trial);
      }
    }
  }
  in.workers = Roster(std::move(ws));

  for (const auto& w : in.workers)
  {
    for (int r = 0; r < lim.roles; ++r)
      for (int k = 1; k <= 4; ++k)
        if (coin(g, 0.5))
          in.attributes.set(w.id, AttributeKind::hard_skill, role_name(r) + std::to_string(k), rand_int(g, 0, 6));
    for (const auto& s : in.soft_skills)
      if (coin(g, 0.6))
        in.attributes.set(w.id, AttributeKind::soft_skill, s, rand_int(g, 0, 6));
    for (const char* topic : {"x", "y", "z"})
      if (coin(g, 0.5))
        in.attributes.set(w.id, AttributeKind::task_pref, topic, rand_int(g, -2, 2));
    for (const auto& o : in.workers)
      if (o.id != w.id && coin(g, 0.5))
        in.attributes.set(w.id, AttributeKind::teammate_pref, o.id, rand_int(g, -2, 2));
  }

  // A previous schedule planned from step 0.
  const int n_prev = rand_int(g, 0, lim.max_previous);
  std::vector<TaskSpec> prev;
  for (int i = 0; i < n_prev; ++i)
    prev.push_back(random_task(g, "p" + std::to_string(i), in.workers, lim, 0));
  for (const auto& t : prev)
    in.known.emplace(t.id, t);
  if (!prev.empty())
  {
    PlanningContext ctx = in.context(1);
    ctx.now = 0;
    in.previous = schedule(prev, {}, in.known, ctx).front().schedule;
  }

  in.now = rand_int(g, 0, 3);
  const int n_tasks = rand_int(g, 0, lim.max_tasks);
  for (int i = 0; i < n_tasks; ++i)
    in.batch.push_back(random_task(g, "t" + std::to_string(i), in.workers, lim, rand_int(g, 0, static_cast<int>(in.now))));
  return in;
}

} // namespace support
