#pragma once

// Discrete-time staffing environment: synthetic workers with hidden
// attributes, Poisson task arrivals, batch staffing rounds, the four
// feedback channels, and per-step metric logging.

#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <staffsim/criteria.hpp>
#include <staffsim/domain.hpp>
#include <staffsim/profiling.hpp>
#include <staffsim/scheduler.hpp>

namespace staffsim {

struct EnvConfig
{
  std::uint64_t seed = 42;
  std::vector<std::string> roles{"developer", "designer", "analyst", "tester", "manager"};
  int workers_per_role_per_seniority = 2;
  int hard_skills_per_role = 10;
  std::vector<std::string> soft_skill_names{
    "communication", "teamwork", "leadership", "creativity",
    "adaptability", "problem_solving", "time_management", "empathy",
    "negotiation", "critical_thinking", "conflict_resolution", "mentoring"};
  std::vector<std::string> topic_names{
    "backend", "frontend", "mobile", "data", "security",
    "cloud", "testing", "ux", "research", "documentation",
    "devops", "analytics", "payments", "search", "ml",
    "infrastructure", "support", "compliance", "marketing", "onboarding"};

  double sigma_b = 1.5;
  double sigma_v = 1.5;
  /// Noise applied when turning feedback back into a level; 0 disables it.
  double sigma_r = 0.0;
  double gamma = 0.99;
  ObserverWeights observer_weights;

  double arrival_rate = 0.6;
  Timestep min_duration = 2;
  Timestep max_duration = 10;
  int max_team_size = 3;
  int batch_trigger = 5;
  Timestep total_steps = 400;
  std::optional<Timestep> bias_off_at;
  double reject_scale = 0.5;
  double full_time_probability = 0.8;
  /// Probability of keeping each topic in proposal feedback.
  double proposal_mask_rate = 1.0;
  /// Probability of a must_include (and, separately, a must_exclude) constraint.
  double constraint_probability = 0.1;

  WeightVector weights;
  int beam_width = 3;
  Timestep planning_horizon = 200;
  int max_attempts = 50;
  int max_priority = 5;
  std::size_t team_enumeration_cap = 10000;

  /// Throws ValidationError naming the offending field.
  void validate() const;
  PlannerConfig planner() const;

  friend bool operator==(const EnvConfig&, const EnvConfig&) = default;
};

void to_json(json& j, const EnvConfig& v);
/// Missing fields keep their defaults; unknown fields are rejected.
void from_json(const json& j, EnvConfig& v);

/// Sets one field from its textual form, e.g. ("sigma_b", "0.5") or
/// ("roles", "[\"a\",\"b\"]"). Throws ValidationError for unknown keys or
/// unparsable values.
void apply_override(EnvConfig& cfg, const std::string& key, const std::string& value);

/// Fields that shape the generated workers and cannot change after generation.
bool is_structural_field(const std::string& key);

//==============================================================================
/// Per-(observer, target, skill) Gaussian bias, a pure function of the seed
/// and the triple; memoized.
class BiasTable
{
public:
  BiasTable(std::uint64_t seed, double sigma_b) : _seed(seed), _sigma(sigma_b) {}

  double bias(const WorkerId& observer, const WorkerId& target, const std::string& skill);
  std::size_t size() const { return _cache.size(); }

private:
  std::uint64_t _seed;
  double _sigma;
  std::map<std::tuple<WorkerId, WorkerId, std::string>, double> _cache;
};

/// Independent named random streams, so changing one knob leaves unrelated
/// draws untouched.
struct RngStreams
{
  std::mt19937_64 arrivals;
  std::mt19937_64 tasks;
  std::mt19937_64 noise;
  std::mt19937_64 acceptance;
  std::mt19937_64 feedback;
  std::mt19937_64 reconstruction;

  explicit RngStreams(std::uint64_t seed = 0);
};

void to_json(json& j, const RngStreams& v);
void from_json(const json& j, RngStreams& v);

std::uint64_t stable_hash(std::string_view text, std::uint64_t seed = 0);

//==============================================================================
struct MetricRow
{
  Timestep step = 0;
  double mae_hard = 0.0;
  double mae_soft = 0.0;
  double mae_task_pref = 0.0;
  double mae_teammate_pref = 0.0;
  int unknown = 0;
  int correct = 0;
  int incorrect = 0;
  int questions = 0;
  /// Empty when nothing was assigned this step.
  std::optional<double> mean_optimality;
  int tasks_scheduled = 0;
};

struct AssignmentRecord
{
  Timestep step = 0;
  TaskId task_id;
  std::vector<WorkerId> team;
  Interval interval;
  double outcome = 0.0;
  double optimality = 1.0;
  int alternatives = 1;
  int rejections = 0;
};

struct EventCounts
{
  int arrivals = 0;
  int staffing_rounds = 0;
  int completions = 0;
  int reviews_emitted = 0;
  int peer_observations = 0;
  int proposal_observations = 0;
  int self_evaluations = 0;
  int rejections = 0;
};

void to_json(json& j, const MetricRow& v);
void to_json(json& j, const AssignmentRecord& v);
void to_json(json& j, const EventCounts& v);

extern const char* const metrics_csv_header;
extern const char* const assignments_csv_header;
std::string to_csv_line(const MetricRow& row);
std::string to_csv_line(const AssignmentRecord& rec);

//==============================================================================
struct SimState
{
  EnvConfig cfg;
  Timestep clock = 0;
  Roster workers;
  std::map<WorkerId, TrueAttributes> truth;
  /// Hard skills of each role.
  std::map<std::string, std::vector<std::string>> role_skills;

  ProfileStore profile;
  TaskBook tasks;
  std::vector<TaskId> pending;
  /// Assignments not yet completed.
  Schedule confirmed;
  std::set<TaskId> completed;
  std::set<SkillQuery> asked;
  std::int64_t task_counter = 0;

  BiasTable bias{0, 0.0};
  RngStreams rng;

  std::vector<MetricRow> metrics;
  std::vector<AssignmentRecord> assignments;
  EventCounts events;
};

/// Environment snapshot: config, clock, workers (with calendars and
/// history), truth, role skills, and the agent's profile.
json environment_json(const SimState& state);
/// Full state including pending work, RNG positions and logs.
json state_json(const SimState& state);
/// Rebuilds a state from either snapshot. Runtime streams and the bias table
/// are re-seeded from cfg.seed unless the snapshot carries RNG state.
SimState state_from_json(const json& j);

SimState generate_environment(const EnvConfig& cfg);

/// Re-seeds the runtime streams and bias table from cfg.seed and, when no
/// observation has been ingested yet, rebuilds the profile with cfg's
/// discount and observer weights. Call after overriding config fields.
void prepare_run(SimState& state);

/// Draws one task arriving at state.clock from the task stream.
TaskSpec generate_task(SimState& state);

/// clamp(round(true + b + v)) on the skill scale.
int corrupt_skill_level(int true_level, double bias, double noise_sd, std::mt19937_64& rng);

/// p_reject = reject_scale * max(0, -mean topic preference) / 2.
double rejection_probability(const TrueAttributes& truth, const TaskSpec& task, double reject_scale);
bool decide_acceptance(
  const TrueAttributes& truth, const TaskSpec& task, double reject_scale, std::mt19937_64& rng);

/// Feedback channels. They append to `out` and touch only the streams
/// they need.
void emit_task_proposal_feedback(
  SimState& state, const WorkerId& worker, const TaskSpec& task, bool accepted,
  std::vector<ObservationRecord>& out);
void emit_performance_review(
  SimState& state, const TaskSpec& task, const std::vector<WorkerId>& team,
  std::vector<ObservationRecord>& out);
void emit_peer_feedback(
  SimState& state, const TaskSpec& task, const std::vector<WorkerId>& team,
  std::vector<ObservationRecord>& out);
/// Empty when the pair was asked before or the worker lacks the skill.
std::optional<ObservationRecord> emit_self_evaluation(
  SimState& state, const WorkerId& worker, const std::string& skill);

struct OutcomeScore
{
  double outcome = 0.0;
  double optimality = 1.0;
  int alternatives = 1;
};

/// Mean of the soft-skill diversity, teammate compatibility and hard-skill
/// criteria for `team` on `task`, using the true attributes.
double true_outcome(
  const TaskSpec& task, const std::vector<WorkerId>& team, const SimState& state);

/// Outcome of the chosen team, and its ratio to the best outcome among
/// `candidates`. Optimality is 1 when the best outcome is 0.
OutcomeScore task_outcome_oracle(
  const TaskSpec& task,
  const std::vector<WorkerId>& team,
  const std::vector<std::vector<WorkerId>>& candidates,
  const SimState& state);

/// Advances the clock by one step and appends exactly one metric row.
void step(SimState& state);

/// Least-squares line through (x, y). Slope 0 for fewer than two distinct x.
struct LinearFit
{
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t n = 0;
};

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

} // namespace staffsim
