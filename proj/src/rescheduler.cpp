#include <staffsim/rescheduler.hpp>

#include <algorithm>

namespace staffsim {

void to_json(json& j, const CancellationEvent& v)
{
  j = json{
    {"advanced", v.advanced},
    {"canceled", v.canceled},
    {"window_start", v.window_start},
  };
}

void to_json(json& j, const RescheduleResult& v)
{
  j = json{
    {"schedule", v.schedule},
    {"stripped", v.stripped},
    {"cancellations", v.cancellations},
    {"unscheduled", v.unscheduled},
    {"processed", v.processed},
    {"attempts", v.attempts},
  };
}

//==============================================================================
namespace {

bool shares_role(const TaskSpec& a, const TaskSpec& b)
{
  for (const auto& [role, count] : a.required_roles)
  {
    if (b.required_roles.count(role))
      return true;
  }
  return false;
}

void combinations(
  const std::vector<TaskId>& pool,
  std::size_t k,
  std::vector<std::vector<TaskId>>& out)
{
  if (k == 0 || k > pool.size())
    return;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i)
    idx[i] = i;
  while (true)
  {
    std::vector<TaskId> c;
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

} // namespace

std::vector<TaskId> build_P_h(
  const Schedule& s, const TaskBook& tasks, const TaskSpec& t, Timestep h, Timestep now)
{
  const Interval window{h, h + t.duration};
  std::vector<TaskId> out;
  for (const auto& [id, tso] : s.assignments)
  {
    if (id == t.id || tso.interval.alpha < now || !tso.interval.overlaps(window))
      continue;
    const auto it = tasks.find(id);
    if (it == tasks.end())
      continue;
    const TaskSpec& other = it->second;
    if (other.priority < t.priority && shares_role(other, t))
      out.push_back(id);
  }
  return out;
}

std::optional<TSO> can_schedule_in_place(
  const TaskSpec& t,
  const std::vector<TaskId>& c,
  const Schedule& s,
  const TaskBook& tasks,
  const Roster& workers,
  Timestep now,
  Timestep horizon_end,
  Timestep alpha_min,
  std::size_t cap)
{
  if (c.empty())
    return std::nullopt;
  Schedule without = s;
  for (const auto& id : c)
    without.remove(id);
  auto options = feasible_tsos(t, workers, without, tasks, now, horizon_end, cap);
  if (options.empty() || options.front().interval.alpha >= alpha_min)
    return std::nullopt;
  return std::move(options.front());
}

bool cheaper_to_cancel(
  const std::vector<TaskId>& a, const std::vector<TaskId>& b, const TaskBook& tasks)
{
  auto key = [&](const std::vector<TaskId>& c)
  {
    int priority = 0;
    int slots = 0;
    for (const auto& id : c)
    {
      const TaskSpec& t = tasks.at(id);
      priority += t.priority;
      slots += t.team_size();
    }
    return std::make_pair(priority, slots);
  };
  const auto ka = key(a);
  const auto kb = key(b);
  if (ka != kb)
    return ka < kb;
  return a < b;
}

//==============================================================================
namespace {

/// Searches the cancellation combinations for one pending task. Returns the
/// combination that lets it start before alpha_min, if one is found within
/// the attempt budget.
std::optional<std::pair<std::vector<TaskId>, Timestep>> find_cancellation(
  const TaskSpec& t,
  const Schedule& s,
  const TaskBook& book,
  const Roster& roster,
  const PlanningContext& ctx,
  Timestep alpha_min,
  int& attempts)
{
  const Timestep now = ctx.now;
  const Timestep horizon_end = ctx.horizon_end();
  if (alpha_min <= now)
    return std::nullopt;

  std::vector<std::vector<TaskId>> windows;
  std::size_t largest = 0;
  for (Timestep h = now; h < alpha_min; ++h)
  {
    windows.push_back(build_P_h(s, book, t, h, now));
    largest = std::max(largest, windows.back().size());
  }

  int j = 0;
  for (std::size_t i = 1; i <= largest; ++i)
  {
    std::set<std::vector<TaskId>> tried;
    for (Timestep h = now; h < alpha_min; ++h)
    {
      std::vector<std::vector<TaskId>> combos;
      combinations(windows[static_cast<std::size_t>(h - now)], i, combos);

      std::vector<std::vector<TaskId>> fresh;
      for (auto& c : combos)
      {
        if (!tried.count(c))
          fresh.push_back(c);
      }
      std::sort(fresh.begin(), fresh.end(),
        [&](const auto& a, const auto& b) { return cheaper_to_cancel(a, b, book); });

      for (const auto& c : fresh)
      {
        ++j;
        ++attempts;
        if (can_schedule_in_place(t, c, s, book, roster, now, horizon_end, alpha_min,
              ctx.config.team_enumeration_cap))
          return std::make_pair(c, h);
        if (j >= ctx.config.max_attempts)
          return std::nullopt;
      }
      tried.insert(combos.begin(), combos.end());
    }
  }
  return std::nullopt;
}

} // namespace

RescheduleResult reschedule(
  const std::vector<TaskSpec>& pending_in,
  const Schedule& previous,
  const TaskBook& known,
  const PlanningContext& ctx)
{
  if (!ctx.workers || !ctx.attributes)
    throw ValidationError("planning context needs workers and an attribute source");
  ctx.config.validate();

  const TaskBook book = planning_scope(pending_in, previous, known);

  // The schedule governs every task it holds and every pending task.
  std::vector<WorkerState> stripped_workers = ctx.workers->workers();
  for (auto& w : stripped_workers)
  {
    std::erase_if(w.calendar.entries,
      [&](const CalendarEntry& e) { return book.count(e.task_id) > 0; });
  }
  const Roster roster(std::move(stripped_workers));

  PlanningContext local = ctx;
  local.workers = &roster;
  local.config.beam_width = 1;

  RescheduleResult result;
  Schedule s = previous;
  std::map<TaskId, TaskSpec> pending;
  for (const auto& t : pending_in)
    pending.emplace(t.id, t);

  // Drop assignments that break a hard constraint under the current roster.
  while (true)
  {
    const auto violations = hard_violations(s, book, roster);
    if (violations.empty())
      break;
    bool removed = false;
    for (const auto& v : violations)
    {
      if (!s.contains(v.task_id))
        continue;
      s.remove(v.task_id);
      pending.emplace(v.task_id, book.at(v.task_id));
      result.stripped.push_back(v.task_id);
      removed = true;
    }
    if (!removed)
      throw InvariantError("infeasibility not attributable to any scheduled task");
  }

  const std::size_t bound = pending_in.size() + previous.size();
  while (!pending.empty())
  {
    if (result.processed.size() >= bound)
      throw InvariantError("rescheduling exceeded its recursion bound");

    auto pick = pending.begin();
    for (auto it = pending.begin(); it != pending.end(); ++it)
    {
      if (precedes(it->second, pick->second))
        pick = it;
    }
    const TaskSpec t = pick->second;
    pending.erase(pick);
    result.processed.push_back(t.id);

    const auto options = feasible_tsos(
      t, roster, s, book, ctx.now, ctx.horizon_end(), ctx.config.team_enumeration_cap);
    const Timestep alpha_min =
      options.empty() ? ctx.horizon_end() : options.front().interval.alpha;

    const auto found =
      find_cancellation(t, s, book, roster, local, alpha_min, result.attempts);
    if (found)
    {
      for (const auto& id : found->first)
      {
        s.remove(id);
        pending.emplace(id, book.at(id));
      }
      result.cancellations.push_back({t.id, found->first, found->second});
    }

    // Place t on top of the current schedule without further cancellations.
    Schedule others = s;
    const auto leaves = schedule({t}, others, book, local);
    s = leaves.front().schedule;
    if (!s.contains(t.id))
      result.unscheduled.push_back(t.id);
  }

  result.schedule = std::move(s);
  return result;
}

} // namespace staffsim
