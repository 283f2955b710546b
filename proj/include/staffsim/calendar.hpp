#pragma once

// Interval arithmetic over worker calendars.
//
// One timestep is one workday, so the daily workload bound is checked per
// step. Full-time entries are mutually exclusive; part-time entries only
// count against work capacity.

#include <optional>
#include <span>
#include <vector>

#include <staffsim/domain.hpp>

namespace staffsim {

/// Sum of workload rates of the entries active on `day`.
double daily_workload(const CalendarView& cal, Timestep day);

/// True iff no full-time entry overlaps `interval`.
bool fulltime_free(const CalendarView& cal, const Interval& interval);

/// Dense per-step occupancy of one worker over [from, horizon).
class Availability
{
public:
  Availability(const CalendarView& cal, double capacity, Timestep from, Timestep horizon);

  /// Whether the worker can take on `rate` more effort at step h, and, for
  /// full-time work, is not already committed full-time.
  bool admits(Timestep h, double rate, bool full_time) const;

  Timestep from() const { return _from; }
  Timestep horizon() const { return _horizon; }

private:
  Timestep _from;
  Timestep _horizon;
  double _capacity;
  std::vector<double> _load;
  std::vector<char> _busy_full_time;
};

/// Smallest alpha in [from, horizon - duration] at which every member can
/// work the task for `duration` consecutive steps; empty if there is none.
std::optional<Timestep> earliest_team_start(
  std::span<const CalendarView> cals,
  const TaskSpec& task,
  std::span<const double> capacities,
  Timestep from,
  Timestep horizon);

/// Same search over precomputed availabilities.
std::optional<Timestep> earliest_team_start(
  std::span<const Availability* const> members,
  const TaskSpec& task,
  Timestep from,
  Timestep horizon);

} // namespace staffsim
