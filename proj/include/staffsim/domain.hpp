#pragma once

// Core data model: attribute scales, tasks, workers, and schedules.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace staffsim {

using Timestep = std::int64_t;
using WorkerId = std::string;
using TaskId = std::string;
using json = nlohmann::json;

/// Input that violates a documented precondition or schema.
class ValidationError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// A state the engine should never reach; signals a bug, not bad input.
class InvariantError : public std::logic_error
{
public:
  using std::logic_error::logic_error;
};

//==============================================================================
// Attribute scales

enum class Scale { skill, preference };

template <int Lo, int Hi, class Tag>
class BoundedLevel
{
public:
  static constexpr int min = Lo;
  static constexpr int max = Hi;
  static constexpr int count = Hi - Lo + 1;

  constexpr BoundedLevel() = default;

  explicit BoundedLevel(int value) : _value(value)
  {
    if (value < Lo || value > Hi)
      throw ValidationError(
        "level " + std::to_string(value) + " outside [" + std::to_string(Lo) +
        ", " + std::to_string(Hi) + "]");
  }

  constexpr int value() const { return _value; }

  friend constexpr auto operator<=>(BoundedLevel, BoundedLevel) = default;

private:
  int _value = (Lo + Hi) / 2;
};

struct SkillTag {};
struct PreferenceTag {};

/// 0 = "No competence" ... 6 = "Expert".
using SkillLevel = BoundedLevel<0, 6, SkillTag>;
/// -2 = "Strong aversion" ... +2 = "Strong preference".
using PreferenceLevel = BoundedLevel<-2, 2, PreferenceTag>;

int scale_min(Scale scale);
int scale_max(Scale scale);
/// Median level of the scale, used as the default for unknown attributes.
int scale_median(Scale scale);
bool in_scale(int level, Scale scale);

double skill_to_unit(SkillLevel level);
double preference_to_unit(PreferenceLevel level);
/// Maps any in-scale level onto [0,1] (skill: v/6, preference: (v+2)/4).
double level_to_unit(int level, Scale scale);
/// Inverse of level_to_unit; not clamped.
double unit_to_level(double unit, Scale scale);

/// Clamp to the scale, then round half away from zero.
int round_to_level(double x, Scale scale);

std::string skill_level_name(SkillLevel level);
std::string preference_level_name(PreferenceLevel level);

//==============================================================================
// Time

/// Half-open interval [alpha, beta) of timesteps.
struct Interval
{
  Timestep alpha = 0;
  Timestep beta = 0;

  Timestep length() const { return beta - alpha; }
  bool contains(Timestep h) const { return alpha <= h && h < beta; }
  bool overlaps(const Interval& other) const
  {
    return alpha < other.beta && other.alpha < beta;
  }
  bool valid() const { return alpha < beta; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

enum class Timing { full_time, part_time };
enum class Seniority { junior, senior };

std::string to_string(Timing timing);
std::string to_string(Seniority seniority);

//==============================================================================
// Tasks

struct TaskSpec
{
  TaskId id;
  Timestep arrival_time = 0;
  int priority = 1;
  std::map<std::string, int> required_roles;
  std::map<std::string, std::set<std::string>> required_skills;
  std::set<std::string> topics;
  Timestep duration = 1;
  double workload = 1.0;
  std::set<WorkerId> must_include;
  std::set<WorkerId> must_exclude;
  std::optional<Timestep> deadline;
  Timing timing = Timing::full_time;

  /// Effort per timestep placed on each team member.
  double workload_rate() const { return workload / static_cast<double>(duration); }
  int team_size() const;
  bool full_time() const { return timing == Timing::full_time; }

  /// Throws ValidationError on a broken invariant. Pass the largest worker
  /// capacity in the environment to also check generability.
  void validate(int max_priority, std::optional<double> max_capacity = {}) const;

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

/// Lookup of every task known to a planning call, keyed by id.
using TaskBook = std::map<TaskId, TaskSpec>;

/// Highest priority first, then earliest arrival, then id.
bool precedes(const TaskSpec& a, const TaskSpec& b);

//==============================================================================
// Workers

struct CalendarEntry
{
  TaskId task_id;
  Interval interval;
  Timing timing = Timing::full_time;
  double workload_rate = 0.0;

  friend bool operator==(const CalendarEntry&, const CalendarEntry&) = default;
};

struct CalendarView
{
  std::vector<CalendarEntry> entries;

  friend bool operator==(const CalendarView&, const CalendarView&) = default;
};

struct HistoryEntry
{
  TaskId task_id;
  double outcome = 0.0;

  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

struct WorkerState
{
  WorkerId id;
  std::string role;
  Seniority seniority = Seniority::junior;
  double salary = 1.0;
  double work_capacity = 1.0;
  CalendarView calendar;
  std::vector<HistoryEntry> history;

  void validate() const;

  friend bool operator==(const WorkerState&, const WorkerState&) = default;
};

/// Hidden ground truth about a worker. Only the simulator reads it.
struct TrueAttributes
{
  std::map<std::string, SkillLevel> hard_skills;
  std::map<std::string, SkillLevel> soft_skills;
  std::map<std::string, PreferenceLevel> task_preferences;
  std::map<WorkerId, PreferenceLevel> teammate_preferences;

  friend bool operator==(const TrueAttributes&, const TrueAttributes&) = default;
};

/// Workers sorted by id with keyed lookup.
class Roster
{
public:
  Roster() = default;
  explicit Roster(std::vector<WorkerState> workers);

  const std::vector<WorkerState>& workers() const { return _workers; }
  std::size_t size() const { return _workers.size(); }
  bool empty() const { return _workers.empty(); }

  /// nullptr if absent.
  const WorkerState* find(const WorkerId& id) const;
  const WorkerState& at(const WorkerId& id) const;
  WorkerState& at(const WorkerId& id);

  double max_capacity() const;
  double max_salary() const;

  auto begin() const { return _workers.begin(); }
  auto end() const { return _workers.end(); }

private:
  std::vector<WorkerState> _workers;
  std::map<WorkerId, std::size_t> _index;
};

//==============================================================================
// Schedules

/// Task scheduling option: a team and the interval it works on the task.
struct TSO
{
  std::vector<WorkerId> team;  // sorted ascending
  Interval interval;

  friend bool operator==(const TSO&, const TSO&) = default;
};

struct Schedule
{
  std::map<TaskId, TSO> assignments;

  bool contains(const TaskId& id) const { return assignments.count(id) > 0; }
  std::size_t size() const { return assignments.size(); }
  bool empty() const { return assignments.empty(); }

  /// Throws InvariantError if the task is already assigned.
  void assign(const TaskId& id, TSO tso);
  void remove(const TaskId& id) { assignments.erase(id); }

  friend bool operator==(const Schedule&, const Schedule&) = default;
};

/// Calendar entries for every worker given by a schedule, resolved against
/// the task book.
std::map<WorkerId, CalendarView> calendars_from(
  const Schedule& schedule, const TaskBook& tasks);

//==============================================================================
// JSON

template <int Lo, int Hi, class Tag>
void to_json(json& j, BoundedLevel<Lo, Hi, Tag> v)
{
  j = v.value();
}

template <int Lo, int Hi, class Tag>
void from_json(const json& j, BoundedLevel<Lo, Hi, Tag>& v)
{
  v = BoundedLevel<Lo, Hi, Tag>(j.get<int>());
}

void to_json(json& j, Timing v);
void from_json(const json& j, Timing& v);
void to_json(json& j, Seniority v);
void from_json(const json& j, Seniority& v);

void to_json(json& j, const Interval& v);
void from_json(const json& j, Interval& v);
void to_json(json& j, const TaskSpec& v);
void from_json(const json& j, TaskSpec& v);
void to_json(json& j, const CalendarEntry& v);
void from_json(const json& j, CalendarEntry& v);
void to_json(json& j, const CalendarView& v);
void from_json(const json& j, CalendarView& v);
void to_json(json& j, const HistoryEntry& v);
void from_json(const json& j, HistoryEntry& v);
void to_json(json& j, const WorkerState& v);
void from_json(const json& j, WorkerState& v);
void to_json(json& j, const TrueAttributes& v);
void from_json(const json& j, TrueAttributes& v);
void to_json(json& j, const TSO& v);
void from_json(const json& j, TSO& v);
void to_json(json& j, const Schedule& v);
void from_json(const json& j, Schedule& v);

} // namespace staffsim
