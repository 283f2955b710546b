#pragma once

// Recursive rescheduling. Pending tasks are taken in priority order; for
// each one the rescheduler looks for the smallest set of not-yet-started,
// lower-priority tasks whose cancellation lets it start strictly earlier,
// trying single tasks first and then larger combinations, for at most m
// attempts. Canceled tasks go back to the pending list.

#include <optional>
#include <set>
#include <vector>

#include <staffsim/scheduler.hpp>

namespace staffsim {

struct CancellationEvent
{
  /// The pending task the cancellation made room for.
  TaskId advanced;
  std::vector<TaskId> canceled;
  /// Window start at which the combination was found.
  Timestep window_start = 0;
};

void to_json(json& j, const CancellationEvent& v);

struct RescheduleResult
{
  Schedule schedule;
  /// Assignments dropped up front because they violated a hard constraint.
  std::vector<TaskId> stripped;
  std::vector<CancellationEvent> cancellations;
  /// Tasks for which no option existed; they remain pending.
  std::vector<TaskId> unscheduled;
  /// Order in which pending tasks were processed (one recursion level each).
  std::vector<TaskId> processed;
  int attempts = 0;
};

void to_json(json& j, const RescheduleResult& v);

/// Scheduled tasks that have not started (alpha >= now), overlap
/// [h, h + t.duration), have strictly lower priority than t, and share at
/// least one required role with t. Sorted by id.
std::vector<TaskId> build_P_h(
  const Schedule& s, const TaskBook& tasks, const TaskSpec& t, Timestep h, Timestep now);

/// The earliest option for t once the tasks in `c` are removed from s, if
/// it starts strictly before alpha_min. Empty for an empty c.
std::optional<TSO> can_schedule_in_place(
  const TaskSpec& t,
  const std::vector<TaskId>& c,
  const Schedule& s,
  const TaskBook& tasks,
  const Roster& workers,
  Timestep now,
  Timestep horizon_end,
  Timestep alpha_min,
  std::size_t cap = 10000);

/// Order in which same-size combinations are tried: ascending total
/// priority, then total team size, then ids.
bool cheaper_to_cancel(
  const std::vector<TaskId>& a, const std::vector<TaskId>& b, const TaskBook& tasks);

/// `known` must hold every task in `previous`. Uses ctx.config.max_attempts
/// as m. Worker calendar entries for tasks in `previous` or `pending` are
/// ignored; the schedule is authoritative for them.
RescheduleResult reschedule(
  const std::vector<TaskSpec>& pending,
  const Schedule& previous,
  const TaskBook& known,
  const PlanningContext& ctx);

} // namespace staffsim
