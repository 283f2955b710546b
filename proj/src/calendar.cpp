#include <staffsim/calendar.hpp>

#include <algorithm>

namespace staffsim {

namespace {
constexpr double capacity_tolerance = 1e-9;
} // namespace

//==============================================================================
double daily_workload(const CalendarView& cal, Timestep day)
{
  double load = 0.0;
  for (const auto& e : cal.entries)
  {
    if (e.interval.contains(day))
      load += e.workload_rate;
  }
  return load;
}

//==============================================================================
bool fulltime_free(const CalendarView& cal, const Interval& interval)
{
  return std::none_of(cal.entries.begin(), cal.entries.end(),
    [&](const CalendarEntry& e)
    {
      return e.timing == Timing::full_time && e.interval.overlaps(interval);
    });
}

//==============================================================================
Availability::Availability(
  const CalendarView& cal, double capacity, Timestep from, Timestep horizon)
: _from(from),
  _horizon(std::max(from, horizon)),
  _capacity(capacity),
  _load(static_cast<std::size_t>(_horizon - _from), 0.0),
  _busy_full_time(static_cast<std::size_t>(_horizon - _from), 0)
{
  for (const auto& e : cal.entries)
  {
    const Timestep lo = std::max(e.interval.alpha, _from);
    const Timestep hi = std::min(e.interval.beta, _horizon);
    for (Timestep h = lo; h < hi; ++h)
    {
      const auto i = static_cast<std::size_t>(h - _from);
      _load[i] += e.workload_rate;
      if (e.timing == Timing::full_time)
        _busy_full_time[i] = 1;
    }
  }
}

bool Availability::admits(Timestep h, double rate, bool full_time) const
{
  if (h < _from || h >= _horizon)
    return false;
  const auto i = static_cast<std::size_t>(h - _from);
  if (full_time && _busy_full_time[i])
    return false;
  return _load[i] + rate <= _capacity + capacity_tolerance;
}

//==============================================================================
std::optional<Timestep> earliest_team_start(
  std::span<const Availability* const> members,
  const TaskSpec& task,
  Timestep from,
  Timestep horizon)
{
  if (task.duration < 1 || horizon - from < task.duration)
    return std::nullopt;

  const double rate = task.workload_rate();
  const bool full_time = task.full_time();
  Timestep run = 0;
  for (Timestep h = from; h < horizon; ++h)
  {
    const bool ok = std::all_of(members.begin(), members.end(),
      [&](const Availability* a) { return a->admits(h, rate, full_time); });
    run = ok ? run + 1 : 0;
    if (run == task.duration)
      return h - task.duration + 1;
  }
  return std::nullopt;
}

std::optional<Timestep> earliest_team_start(
  std::span<const CalendarView> cals,
  const TaskSpec& task,
  std::span<const double> capacities,
  Timestep from,
  Timestep horizon)
{
  if (cals.size() != capacities.size())
    throw ValidationError("earliest_team_start: one capacity per calendar required");

  std::vector<Availability> avail;
  avail.reserve(cals.size());
  for (std::size_t i = 0; i < cals.size(); ++i)
    avail.emplace_back(cals[i], capacities[i], from, horizon);

  std::vector<const Availability*> members;
  members.reserve(avail.size());
  for (const auto& a : avail)
    members.push_back(&a);

  return earliest_team_start(members, task, from, horizon);
}

} // namespace staffsim
