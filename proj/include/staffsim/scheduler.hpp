#pragma once

// Beam search over partial schedules: tasks are placed one at a time in
// priority order, every surviving partial schedule (leaf) branches on each
// feasible team/interval option, and after each task only the K best leaves
// by aggregate score are kept.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <staffsim/criteria.hpp>
#include <staffsim/domain.hpp>

namespace staffsim {

struct PlannerConfig
{
  /// K: leaves kept after each task.
  int beam_width = 3;
  /// Length of the planning window; starts must satisfy alpha + duration <= now + this.
  Timestep planning_horizon = 200;
  std::size_t team_enumeration_cap = 10000;
  int max_priority = 5;
  /// m: rescheduling attempts per pending task.
  int max_attempts = 50;

  void validate() const;
};

void to_json(json& j, const PlannerConfig& v);

/// Receives the (worker, skill) pairs criterion 8 had no data for. Returns
/// true if it recorded new information, in which case the leaves are
/// re-scored before pruning.
using QueryHandler = std::function<bool(const std::vector<SkillQuery>&)>;

/// Non-owning view of everything a planning call reads.
struct PlanningContext
{
  Timestep now = 0;
  const Roster* workers = nullptr;
  const AttributeSource* attributes = nullptr;
  std::vector<std::string> soft_skills;
  WeightVector weights;
  PlannerConfig config;
  QueryHandler on_queries;

  Timestep horizon_end() const { return now + config.planning_horizon; }
  CriteriaContext criteria(const TaskBook& tasks) const;
};

struct PlanLeaf
{
  Schedule schedule;
  double score = 0.0;
  std::int64_t birth_order = 0;
};

/// Thrown when a task admits more team combinations than the configured cap.
class TeamEnumerationError : public ValidationError
{
public:
  using ValidationError::ValidationError;
};

/// Every team made of exactly the required number of workers per role that
/// honors must_include/must_exclude. Teams are sorted id vectors, returned
/// in lexicographic order.
std::vector<std::vector<WorkerId>> enumerate_teams(
  const TaskSpec& task, const Roster& workers, std::size_t cap = 10000);

/// Base calendars with every entry the overlay governs (or that belongs to
/// `task_id`) replaced by the overlay's own assignments.
std::map<WorkerId, CalendarView> effective_calendars(
  const Roster& workers,
  const Schedule& overlay,
  const TaskBook& tasks,
  const TaskId& task_id = {});

/// One TSO per team at that team's earliest feasible start in
/// [now, horizon_end - duration], ordered by start then team.
std::vector<TSO> feasible_tsos(
  const TaskSpec& task,
  const Roster& workers,
  const Schedule& overlay,
  const TaskBook& tasks,
  Timestep now,
  Timestep horizon_end,
  std::size_t cap = 10000);

/// Plans `batch` on top of `previous`. `known` must hold every task that
/// `previous` assigns. Returns up to K leaves sorted best first; an empty
/// batch (or one with nothing placeable) returns the previous schedule.
std::vector<PlanLeaf> schedule(
  const std::vector<TaskSpec>& batch,
  const Schedule& previous,
  const TaskBook& known,
  const PlanningContext& ctx);

/// The task book a planning call scores against: the tasks `previous`
/// assigns plus the batch.
TaskBook planning_scope(
  const std::vector<TaskSpec>& batch, const Schedule& previous, const TaskBook& known);

//==============================================================================
enum class ViolationKind {
  duration,
  deadline,
  requirements,
  workload,
  fulltime_overlap,
  team_constraint
};

std::string to_string(ViolationKind kind);

struct Violation
{
  ViolationKind kind = ViolationKind::duration;
  /// The assignment to drop first to resolve the violation.
  TaskId task_id;
  std::string detail;
  /// Every task taking part in a per-step workload or overlap breach.
  std::vector<TaskId> involved;
};

void to_json(json& j, const Violation& v);

/// Exhaustive per-step, per-worker check of an entire schedule against the
/// duration, deadline, role, workload, full-time and team constraints.
/// Base calendar entries not governed by the schedule count as fixed load.
std::vector<Violation> check_feasibility(
  const Schedule& s, const TaskBook& tasks, const Roster& workers);

/// Violations excluding the deadline kind, which the planner never enforces.
std::vector<Violation> hard_violations(
  const Schedule& s, const TaskBook& tasks, const Roster& workers);

} // namespace staffsim
