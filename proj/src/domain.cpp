#include <staffsim/domain.hpp>

#include <algorithm>
#include <cmath>

namespace staffsim {

//==============================================================================
int scale_min(Scale scale)
{
  return scale == Scale::skill ? SkillLevel::min : PreferenceLevel::min;
}

int scale_max(Scale scale)
{
  return scale == Scale::skill ? SkillLevel::max : PreferenceLevel::max;
}

int scale_median(Scale scale)
{
  return (scale_min(scale) + scale_max(scale)) / 2;
}

bool in_scale(int level, Scale scale)
{
  return level >= scale_min(scale) && level <= scale_max(scale);
}

double skill_to_unit(SkillLevel level)
{
  return level_to_unit(level.value(), Scale::skill);
}

double preference_to_unit(PreferenceLevel level)
{
  return level_to_unit(level.value(), Scale::preference);
}

double level_to_unit(int level, Scale scale)
{
  const double lo = scale_min(scale);
  const double hi = scale_max(scale);
  return (static_cast<double>(level) - lo) / (hi - lo);
}

double unit_to_level(double unit, Scale scale)
{
  const double lo = scale_min(scale);
  const double hi = scale_max(scale);
  return lo + unit * (hi - lo);
}

int round_to_level(double x, Scale scale)
{
  const double clamped = std::clamp(
    x, static_cast<double>(scale_min(scale)), static_cast<double>(scale_max(scale)));
  // std::round rounds halfway cases away from zero.
  return static_cast<int>(std::round(clamped));
}

std::string skill_level_name(SkillLevel level)
{
  static const char* names[] = {
    "No competence", "Novice", "Beginner", "Intermediate",
    "Proficient", "Advanced", "Expert"};
  return names[level.value()];
}

std::string preference_level_name(PreferenceLevel level)
{
  static const char* names[] = {
    "Strong aversion", "Slight aversion", "Neutral",
    "Slight preference", "Strong preference"};
  return names[level.value() + 2];
}

std::string to_string(Timing timing)
{
  return timing == Timing::full_time ? "full_time" : "part_time";
}

std::string to_string(Seniority seniority)
{
  return seniority == Seniority::senior ? "senior" : "junior";
}

//==============================================================================
int TaskSpec::team_size() const
{
  int n = 0;
  for (const auto& [role, count] : required_roles)
    n += count;
  return n;
}

void TaskSpec::validate(int max_priority, std::optional<double> max_capacity) const
{
  const std::string where = "task '" + id + "': ";
  if (id.empty())
    throw ValidationError("task id must not be empty");
  if (arrival_time < 0)
    throw ValidationError(where + "arrival_time must be >= 0");
  if (priority < 1 || priority > max_priority)
    throw ValidationError(
      where + "priority must be in [1, " + std::to_string(max_priority) + "]");
  if (required_roles.empty())
    throw ValidationError(where + "required_roles must not be empty");
  for (const auto& [role, count] : required_roles)
  {
    if (count < 1)
      throw ValidationError(where + "required_roles[" + role + "] must be >= 1");
  }
  for (const auto& [role, skills] : required_skills)
  {
    if (!required_roles.count(role))
      throw ValidationError(
        where + "required_skills names role '" + role + "' that is not required");
  }
  if (duration < 1)
    throw ValidationError(where + "duration must be >= 1");
  if (!(workload > 0.0) || !std::isfinite(workload))
    throw ValidationError(where + "workload must be > 0");
  for (const auto& w : must_include)
  {
    if (must_exclude.count(w))
      throw ValidationError(
        where + "worker '" + w + "' is in both must_include and must_exclude");
  }
  if (deadline && *deadline < arrival_time + duration)
    throw ValidationError(where + "deadline earlier than arrival_time + duration");
  if (max_capacity && workload_rate() > *max_capacity + 1e-12)
    throw ValidationError(where + "workload/duration exceeds every worker's capacity");
}

bool precedes(const TaskSpec& a, const TaskSpec& b)
{
  if (a.priority != b.priority)
    return a.priority > b.priority;
  if (a.arrival_time != b.arrival_time)
    return a.arrival_time < b.arrival_time;
  return a.id < b.id;
}

//==============================================================================
void WorkerState::validate() const
{
  if (id.empty())
    throw ValidationError("worker id must not be empty");
  if (!(salary > 0.0))
    throw ValidationError("worker '" + id + "': salary must be > 0");
  if (!(work_capacity > 0.0))
    throw ValidationError("worker '" + id + "': work_capacity must be > 0");
  for (const auto& e : calendar.entries)
  {
    if (!e.interval.valid())
      throw ValidationError("worker '" + id + "': calendar interval must have alpha < beta");
  }
}

//==============================================================================
Roster::Roster(std::vector<WorkerState> workers)
: _workers(std::move(workers))
{
  std::sort(_workers.begin(), _workers.end(),
    [](const WorkerState& a, const WorkerState& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < _workers.size(); ++i)
  {
    if (!_index.emplace(_workers[i].id, i).second)
      throw ValidationError("duplicate worker id '" + _workers[i].id + "'");
  }
}

const WorkerState* Roster::find(const WorkerId& id) const
{
  const auto it = _index.find(id);
  return it == _index.end() ? nullptr : &_workers[it->second];
}

const WorkerState& Roster::at(const WorkerId& id) const
{
  const auto* w = find(id);
  if (!w)
    throw ValidationError("unknown worker '" + id + "'");
  return *w;
}

WorkerState& Roster::at(const WorkerId& id)
{
  const auto it = _index.find(id);
  if (it == _index.end())
    throw ValidationError("unknown worker '" + id + "'");
  return _workers[it->second];
}

double Roster::max_capacity() const
{
  double m = 0.0;
  for (const auto& w : _workers)
    m = std::max(m, w.work_capacity);
  return m;
}

double Roster::max_salary() const
{
  double m = 0.0;
  for (const auto& w : _workers)
    m = std::max(m, w.salary);
  return m;
}

//==============================================================================
void Schedule::assign(const TaskId& id, TSO tso)
{
  if (!assignments.emplace(id, std::move(tso)).second)
    throw InvariantError("task '" + id + "' assigned twice");
}

std::map<WorkerId, CalendarView> calendars_from(
  const Schedule& schedule, const TaskBook& tasks)
{
  std::map<WorkerId, CalendarView> out;
  for (const auto& [task_id, tso] : schedule.assignments)
  {
    const auto it = tasks.find(task_id);
    if (it == tasks.end())
      throw ValidationError("schedule references unknown task '" + task_id + "'");
    const TaskSpec& task = it->second;
    for (const auto& w : tso.team)
    {
      out[w].entries.push_back(
        CalendarEntry{task_id, tso.interval, task.timing, task.workload_rate()});
    }
  }
  return out;
}

//==============================================================================
void to_json(json& j, Timing v) { j = to_string(v); }

void from_json(const json& j, Timing& v)
{
  const auto s = j.get<std::string>();
  if (s == "full_time")
    v = Timing::full_time;
  else if (s == "part_time")
    v = Timing::part_time;
  else
    throw ValidationError("timing must be 'full_time' or 'part_time', got '" + s + "'");
}

void to_json(json& j, Seniority v) { j = to_string(v); }

void from_json(const json& j, Seniority& v)
{
  const auto s = j.get<std::string>();
  if (s == "junior")
    v = Seniority::junior;
  else if (s == "senior")
    v = Seniority::senior;
  else
    throw ValidationError("seniority must be 'junior' or 'senior', got '" + s + "'");
}

void to_json(json& j, const Interval& v)
{
  j = json{{"alpha", v.alpha}, {"beta", v.beta}};
}

void from_json(const json& j, Interval& v)
{
  j.at("alpha").get_to(v.alpha);
  j.at("beta").get_to(v.beta);
}

void to_json(json& j, const TaskSpec& v)
{
  j = json{
    {"id", v.id},
    {"arrival_time", v.arrival_time},
    {"priority", v.priority},
    {"required_roles", v.required_roles},
    {"required_skills", v.required_skills},
    {"topics", v.topics},
    {"duration", v.duration},
    {"workload", v.workload},
    {"must_include", v.must_include},
    {"must_exclude", v.must_exclude},
    {"deadline", v.deadline ? json(*v.deadline) : json(nullptr)},
    {"timing", v.timing},
  };
}

namespace {

template <class T>
void get_optional(const json& j, const char* key, T& out)
{
  const auto it = j.find(key);
  if (it != j.end() && !it->is_null())
    it->get_to(out);
}

} // namespace

void from_json(const json& j, TaskSpec& v)
{
  v = TaskSpec{};
  j.at("id").get_to(v.id);
  get_optional(j, "arrival_time", v.arrival_time);
  j.at("priority").get_to(v.priority);
  j.at("required_roles").get_to(v.required_roles);
  get_optional(j, "required_skills", v.required_skills);
  get_optional(j, "topics", v.topics);
  j.at("duration").get_to(v.duration);
  j.at("workload").get_to(v.workload);
  get_optional(j, "must_include", v.must_include);
  get_optional(j, "must_exclude", v.must_exclude);
  if (const auto it = j.find("deadline"); it != j.end() && !it->is_null())
    v.deadline = it->get<Timestep>();
  get_optional(j, "timing", v.timing);
}

void to_json(json& j, const CalendarEntry& v)
{
  j = json{
    {"task_id", v.task_id},
    {"interval", v.interval},
    {"timing", v.timing},
    {"workload_rate", v.workload_rate},
  };
}

void from_json(const json& j, CalendarEntry& v)
{
  j.at("task_id").get_to(v.task_id);
  j.at("interval").get_to(v.interval);
  j.at("timing").get_to(v.timing);
  j.at("workload_rate").get_to(v.workload_rate);
}

void to_json(json& j, const CalendarView& v)
{
  j = json{{"entries", v.entries}};
}

void from_json(const json& j, CalendarView& v)
{
  v.entries.clear();
  get_optional(j, "entries", v.entries);
}

void to_json(json& j, const HistoryEntry& v)
{
  j = json{{"task_id", v.task_id}, {"outcome", v.outcome}};
}

void from_json(const json& j, HistoryEntry& v)
{
  j.at("task_id").get_to(v.task_id);
  j.at("outcome").get_to(v.outcome);
}

void to_json(json& j, const WorkerState& v)
{
  j = json{
    {"id", v.id},
    {"role", v.role},
    {"seniority", v.seniority},
    {"salary", v.salary},
    {"work_capacity", v.work_capacity},
    {"calendar", v.calendar},
    {"history", v.history},
  };
}

void from_json(const json& j, WorkerState& v)
{
  v = WorkerState{};
  j.at("id").get_to(v.id);
  j.at("role").get_to(v.role);
  get_optional(j, "seniority", v.seniority);
  j.at("salary").get_to(v.salary);
  j.at("work_capacity").get_to(v.work_capacity);
  get_optional(j, "calendar", v.calendar);
  get_optional(j, "history", v.history);
}

void to_json(json& j, const TrueAttributes& v)
{
  j = json{
    {"hard_skills", v.hard_skills},
    {"soft_skills", v.soft_skills},
    {"task_preferences", v.task_preferences},
    {"teammate_preferences", v.teammate_preferences},
  };
}

void from_json(const json& j, TrueAttributes& v)
{
  v = TrueAttributes{};
  j.at("hard_skills").get_to(v.hard_skills);
  j.at("soft_skills").get_to(v.soft_skills);
  j.at("task_preferences").get_to(v.task_preferences);
  j.at("teammate_preferences").get_to(v.teammate_preferences);
}

void to_json(json& j, const TSO& v)
{
  j = json{{"team", v.team}, {"interval", v.interval}};
}

void from_json(const json& j, TSO& v)
{
  j.at("team").get_to(v.team);
  std::sort(v.team.begin(), v.team.end());
  j.at("interval").get_to(v.interval);
}

void to_json(json& j, const Schedule& v)
{
  j = json{{"assignments", v.assignments}};
}

void from_json(const json& j, Schedule& v)
{
  v.assignments.clear();
  j.at("assignments").get_to(v.assignments);
}

} // namespace staffsim
