#include <staffsim/scheduler.hpp>

#include <algorithm>
#include <limits>
#include <memory>

#include <staffsim/calendar.hpp>

namespace staffsim {

//==============================================================================
void PlannerConfig::validate() const
{
  if (beam_width < 1)
    throw ValidationError("beam_width must be >= 1");
  if (planning_horizon < 1)
    throw ValidationError("planning_horizon must be >= 1");
  if (team_enumeration_cap < 1)
    throw ValidationError("team_enumeration_cap must be >= 1");
  if (max_priority < 1)
    throw ValidationError("max_priority must be >= 1");
  if (max_attempts < 1)
    throw ValidationError("max_attempts must be >= 1");
}

void to_json(json& j, const PlannerConfig& v)
{
  j = json{
    {"beam_width", v.beam_width},
    {"planning_horizon", v.planning_horizon},
    {"team_enumeration_cap", v.team_enumeration_cap},
    {"max_priority", v.max_priority},
    {"max_attempts", v.max_attempts},
  };
}

CriteriaContext PlanningContext::criteria(const TaskBook& tasks) const
{
  CriteriaContext c;
  c.tasks = &tasks;
  c.workers = workers;
  c.attributes = attributes;
  c.soft_skills = soft_skills;
  c.max_priority = config.max_priority;
  c.horizon_length = config.planning_horizon;
  return c;
}

//==============================================================================
namespace {

/// All size-k subsets of `pool` (already sorted), in lexicographic order.
void combinations(
  const std::vector<WorkerId>& pool,
  std::size_t k,
  std::vector<std::vector<WorkerId>>& out)
{
  if (k > pool.size())
    return;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i)
    idx[i] = i;
  while (true)
  {
    std::vector<WorkerId> c;
    c.reserve(k);
    for (auto i : idx)
      c.push_back(pool[i]);
    out.push_back(std::move(c));

    std::size_t i = k;
    while (i > 0 && idx[i - 1] == pool.size() - k + (i - 1))
      --i;
    if (i == 0)
      return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j)
      idx[j] = idx[j - 1] + 1;
  }
}

double binomial(std::size_t n, std::size_t k)
{
  if (k > n)
    return 0.0;
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i)
    r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

} // namespace

std::vector<std::vector<WorkerId>> enumerate_teams(
  const TaskSpec& task, const Roster& workers, std::size_t cap)
{
  if (task.required_roles.empty())
    return {};
  // Every forced worker must fill one of the required role slots.
  for (const auto& w : task.must_include)
  {
    const WorkerState* worker = workers.find(w);
    if (!worker || !task.required_roles.count(worker->role))
      return {};
  }

  std::vector<std::vector<std::vector<WorkerId>>> per_role;
  double total = 1.0;
  for (const auto& [role, count] : task.required_roles)
  {
    std::vector<WorkerId> forced;
    std::vector<WorkerId> free;
    for (const auto& w : workers)
    {
      if (w.role != role || task.must_exclude.count(w.id))
        continue;
      (task.must_include.count(w.id) ? forced : free).push_back(w.id);
    }
    if (forced.size() > static_cast<std::size_t>(count))
      return {};
    const std::size_t need = static_cast<std::size_t>(count) - forced.size();
    total *= binomial(free.size(), need);
    if (total == 0.0)
      return {};
    if (total > static_cast<double>(cap))
    {
      throw TeamEnumerationError(
        "task '" + task.id + "' admits more than " + std::to_string(cap) +
        " team combinations");
    }

    std::vector<std::vector<WorkerId>> options;
    combinations(free, need, options);
    for (auto& o : options)
    {
      o.insert(o.end(), forced.begin(), forced.end());
      std::sort(o.begin(), o.end());
    }
    per_role.push_back(std::move(options));
  }

  std::vector<std::vector<WorkerId>> teams;
  std::vector<std::size_t> odometer(per_role.size(), 0);
  while (true)
  {
    std::vector<WorkerId> team;
    for (std::size_t r = 0; r < per_role.size(); ++r)
    {
      const auto& part = per_role[r][odometer[r]];
      team.insert(team.end(), part.begin(), part.end());
    }
    std::sort(team.begin(), team.end());
    teams.push_back(std::move(team));

    std::size_t r = per_role.size();
    while (r > 0)
    {
      --r;
      if (++odometer[r] < per_role[r].size())
        break;
      odometer[r] = 0;
      if (r == 0)
      {
        std::sort(teams.begin(), teams.end());
        return teams;
      }
    }
  }
}

//==============================================================================
std::map<WorkerId, CalendarView> effective_calendars(
  const Roster& workers,
  const Schedule& overlay,
  const TaskBook& tasks,
  const TaskId& task_id)
{
  std::map<WorkerId, CalendarView> cals;
  for (const auto& w : workers)
  {
    auto& cal = cals[w.id];
    for (const auto& e : w.calendar.entries)
    {
      if (e.task_id == task_id || overlay.contains(e.task_id))
        continue;
      cal.entries.push_back(e);
    }
  }
  for (auto& [w, cal] : calendars_from(overlay, tasks))
  {
    auto& target = cals[w];
    target.entries.insert(target.entries.end(), cal.entries.begin(), cal.entries.end());
  }
  return cals;
}

namespace {

/// Occupancy of every worker under one overlay, built lazily per worker.
class LeafOccupancy
{
public:
  LeafOccupancy(
    const Roster& workers,
    const Schedule& overlay,
    const TaskBook& tasks,
    const TaskId& task_id,
    Timestep from,
    Timestep horizon)
  : _workers(&workers),
    _calendars(effective_calendars(workers, overlay, tasks, task_id)),
    _from(from),
    _horizon(horizon)
  {
  }

  const Availability& of(const WorkerId& w)
  {
    auto it = _cache.find(w);
    if (it == _cache.end())
    {
      it = _cache.emplace(
        w, std::make_unique<Availability>(
          _calendars[w], _workers->at(w).work_capacity, _from, _horizon)).first;
    }
    return *it->second;
  }

private:
  const Roster* _workers;
  std::map<WorkerId, CalendarView> _calendars;
  Timestep _from;
  Timestep _horizon;
  std::map<WorkerId, std::unique_ptr<Availability>> _cache;
};

std::vector<TSO> tsos_for_teams(
  const TaskSpec& task,
  const std::vector<std::vector<WorkerId>>& teams,
  LeafOccupancy& occupancy,
  Timestep now,
  Timestep horizon_end)
{
  std::vector<TSO> out;
  std::vector<const Availability*> members;
  for (const auto& team : teams)
  {
    members.clear();
    for (const auto& w : team)
      members.push_back(&occupancy.of(w));
    const auto alpha = earliest_team_start(members, task, now, horizon_end);
    if (alpha)
      out.push_back(TSO{team, Interval{*alpha, *alpha + task.duration}});
  }
  std::stable_sort(out.begin(), out.end(),
    [](const TSO& a, const TSO& b) { return a.interval.alpha < b.interval.alpha; });
  return out;
}

} // namespace

std::vector<TSO> feasible_tsos(
  const TaskSpec& task,
  const Roster& workers,
  const Schedule& overlay,
  const TaskBook& tasks,
  Timestep now,
  Timestep horizon_end,
  std::size_t cap)
{
  const auto teams = enumerate_teams(task, workers, cap);
  if (teams.empty())
    return {};
  LeafOccupancy occupancy(workers, overlay, tasks, task.id, now, horizon_end);
  return tsos_for_teams(task, teams, occupancy, now, horizon_end);
}

//==============================================================================
TaskBook planning_scope(
  const std::vector<TaskSpec>& batch, const Schedule& previous, const TaskBook& known)
{
  TaskBook book;
  for (const auto& [id, tso] : previous.assignments)
  {
    const auto it = known.find(id);
    if (it == known.end())
      throw ValidationError("previous schedule references unknown task '" + id + "'");
    book.emplace(id, it->second);
  }
  for (const auto& t : batch)
  {
    if (previous.contains(t.id))
      throw ValidationError("task '" + t.id + "' is both pending and scheduled");
    if (!book.emplace(t.id, t).second)
      throw ValidationError("duplicate pending task '" + t.id + "'");
  }
  return book;
}

namespace {

void score_leaves(
  std::vector<PlanLeaf>& leaves, const CriteriaContext& cctx, const PlanningContext& ctx)
{
  if (ctx.on_queries && ctx.weights.weighted(8))
  {
    std::vector<SkillQuery> queries;
    for (const auto& leaf : leaves)
    {
      auto score = eval_hard_skill_match(leaf.schedule, cctx);
      queries.insert(queries.end(), score.queries_raised.begin(), score.queries_raised.end());
    }
    std::sort(queries.begin(), queries.end());
    queries.erase(std::unique(queries.begin(), queries.end()), queries.end());
    if (!queries.empty())
      ctx.on_queries(queries);
  }
  for (auto& leaf : leaves)
    leaf.score = score_schedule(leaf.schedule, cctx, ctx.weights);
}

void prune(std::vector<PlanLeaf>& leaves, std::size_t k)
{
  std::sort(leaves.begin(), leaves.end(),
    [](const PlanLeaf& a, const PlanLeaf& b)
    {
      if (a.score != b.score)
        return a.score > b.score;
      return a.birth_order < b.birth_order;
    });
  if (leaves.size() > k)
    leaves.resize(k);
}

} // namespace

std::vector<PlanLeaf> schedule(
  const std::vector<TaskSpec>& batch,
  const Schedule& previous,
  const TaskBook& known,
  const PlanningContext& ctx)
{
  if (!ctx.workers || !ctx.attributes)
    throw ValidationError("planning context needs workers and an attribute source");
  ctx.config.validate();
  ctx.weights.validate();

  const TaskBook book = planning_scope(batch, previous, known);
  const CriteriaContext cctx = ctx.criteria(book);
  const Timestep horizon_end = ctx.horizon_end();

  std::vector<TaskSpec> order = batch;
  std::sort(order.begin(), order.end(), precedes);

  std::vector<PlanLeaf> leaves{PlanLeaf{previous, 0.0, 0}};
  std::int64_t next_birth = 1;

  for (const auto& task : order)
  {
    const auto teams = enumerate_teams(task, *ctx.workers, ctx.config.team_enumeration_cap);

    std::vector<PlanLeaf> grown;
    for (const auto& leaf : leaves)
    {
      std::vector<TSO> options;
      if (!teams.empty())
      {
        LeafOccupancy occupancy(
          *ctx.workers, leaf.schedule, book, task.id, ctx.now, horizon_end);
        options = tsos_for_teams(task, teams, occupancy, ctx.now, horizon_end);
      }
      if (options.empty())
      {
        grown.push_back(leaf);
        continue;
      }
      for (auto& tso : options)
      {
        PlanLeaf child{leaf.schedule, 0.0, next_birth++};
        child.schedule.assign(task.id, std::move(tso));
        grown.push_back(std::move(child));
      }
    }

    score_leaves(grown, cctx, ctx);
    prune(grown, static_cast<std::size_t>(ctx.config.beam_width));
    leaves = std::move(grown);
  }

  if (order.empty())
    score_leaves(leaves, cctx, ctx);
  return leaves;
}

//==============================================================================
std::string to_string(ViolationKind kind)
{
  switch (kind)
  {
    case ViolationKind::duration: return "duration";
    case ViolationKind::deadline: return "deadline";
    case ViolationKind::requirements: return "requirements";
    case ViolationKind::workload: return "workload";
    case ViolationKind::fulltime_overlap: return "fulltime_overlap";
    case ViolationKind::team_constraint: return "team_constraint";
  }
  return "unknown";
}

void to_json(json& j, const Violation& v)
{
  j = json{
    {"kind", to_string(v.kind)},
    {"task_id", v.task_id},
    {"detail", v.detail},
    {"involved", v.involved},
  };
}

namespace {

/// Among the schedule's tasks in `involved`, the one that yields first:
/// lowest priority, latest arrival, largest id.
TaskId weakest(
  const std::vector<TaskId>& involved, const Schedule& s, const TaskBook& tasks)
{
  const TaskSpec* pick = nullptr;
  for (const auto& id : involved)
  {
    if (!s.contains(id))
      continue;
    const auto it = tasks.find(id);
    if (it == tasks.end())
      continue;
    if (!pick || precedes(*pick, it->second))
      pick = &it->second;
  }
  if (pick)
    return pick->id;
  return involved.empty() ? TaskId{} : involved.front();
}

} // namespace

std::vector<Violation> check_feasibility(
  const Schedule& s, const TaskBook& tasks, const Roster& workers)
{
  std::vector<Violation> out;

  for (const auto& [id, tso] : s.assignments)
  {
    const auto it = tasks.find(id);
    if (it == tasks.end())
    {
      out.push_back({ViolationKind::requirements, id, "task not in task book", {id}});
      continue;
    }
    const TaskSpec& t = it->second;

    if (tso.interval.beta != tso.interval.alpha + t.duration)
    {
      out.push_back({ViolationKind::duration, id,
        "beta " + std::to_string(tso.interval.beta) + " != alpha + duration " +
        std::to_string(tso.interval.alpha + t.duration), {id}});
    }
    if (t.deadline && tso.interval.beta > *t.deadline)
    {
      out.push_back({ViolationKind::deadline, id,
        "beta " + std::to_string(tso.interval.beta) + " > deadline " +
        std::to_string(*t.deadline), {id}});
    }

    std::map<std::string, int> roles;
    bool unknown = tso.team.empty();
    std::set<WorkerId> seen;
    for (const auto& w : tso.team)
    {
      const WorkerState* worker = workers.find(w);
      if (!worker || !seen.insert(w).second)
      {
        unknown = true;
        continue;
      }
      ++roles[worker->role];
    }
    if (unknown || roles != t.required_roles)
    {
      out.push_back({ViolationKind::requirements, id,
        "team composition does not match required roles", {id}});
    }

    for (const auto& w : t.must_include)
    {
      if (!seen.count(w))
      {
        out.push_back({ViolationKind::team_constraint, id,
          "required worker '" + w + "' missing", {id}});
      }
    }
    for (const auto& w : t.must_exclude)
    {
      if (seen.count(w))
      {
        out.push_back({ViolationKind::team_constraint, id,
          "excluded worker '" + w + "' assigned", {id}});
      }
    }
  }

  // Per-step load. Only entries whose task is known can be resolved.
  Schedule resolvable;
  for (const auto& [id, tso] : s.assignments)
  {
    if (tasks.count(id))
      resolvable.assignments.emplace(id, tso);
  }
  const auto cals = effective_calendars(workers, resolvable, tasks);
  for (const auto& [w, cal] : cals)
  {
    const WorkerState* worker = workers.find(w);
    if (!worker || cal.entries.empty())
      continue;

    Timestep lo = std::numeric_limits<Timestep>::max();
    Timestep hi = std::numeric_limits<Timestep>::min();
    for (const auto& e : cal.entries)
    {
      lo = std::min(lo, e.interval.alpha);
      hi = std::max(hi, e.interval.beta);
    }

    bool workload_reported = false;
    bool overlap_reported = false;
    for (Timestep h = lo; h < hi; ++h)
    {
      double load = 0.0;
      int full_time = 0;
      std::vector<TaskId> active;
      std::vector<TaskId> active_full;
      for (const auto& e : cal.entries)
      {
        if (!e.interval.contains(h))
          continue;
        load += e.workload_rate;
        active.push_back(e.task_id);
        if (e.timing == Timing::full_time)
        {
          ++full_time;
          active_full.push_back(e.task_id);
        }
      }
      if (!workload_reported && load > worker->work_capacity + 1e-9)
      {
        workload_reported = true;
        out.push_back({ViolationKind::workload, weakest(active, s, tasks),
          "worker '" + w + "' load " + std::to_string(load) + " exceeds capacity " +
          std::to_string(worker->work_capacity) + " at step " + std::to_string(h),
          active});
      }
      if (!overlap_reported && full_time > 1)
      {
        overlap_reported = true;
        out.push_back({ViolationKind::fulltime_overlap, weakest(active_full, s, tasks),
          "worker '" + w + "' has " + std::to_string(full_time) +
          " full-time tasks at step " + std::to_string(h),
          active_full});
      }
      if (workload_reported && overlap_reported)
        break;
    }
  }
  return out;
}

std::vector<Violation> hard_violations(
  const Schedule& s, const TaskBook& tasks, const Roster& workers)
{
  auto all = check_feasibility(s, tasks, workers);
  std::erase_if(all, [](const Violation& v) { return v.kind == ViolationKind::deadline; });
  return all;
}

} // namespace staffsim
