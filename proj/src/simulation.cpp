#include <staffsim/simulation.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include <staffsim/attributes.hpp>

namespace staffsim {

//==============================================================================
// EnvConfig

namespace {

template <class T>
void read_field(const json& value, const std::string& key, T& out)
{
  try
  {
    value.get_to(out);
  }
  catch (const json::exception& e)
  {
    throw ValidationError("field '" + key + "': " + e.what());
  }
}

using FieldSetter = std::function<void(EnvConfig&, const json&, const std::string&)>;

template <class T>
FieldSetter setter(T EnvConfig::*member)
{
  return [member](EnvConfig& cfg, const json& v, const std::string& key)
  { read_field(v, key, cfg.*member); };
}

const std::map<std::string, FieldSetter>& field_setters()
{
  static const std::map<std::string, FieldSetter> table = {
    {"seed", setter(&EnvConfig::seed)},
    {"roles", setter(&EnvConfig::roles)},
    {"workers_per_role_per_seniority", setter(&EnvConfig::workers_per_role_per_seniority)},
    {"hard_skills_per_role", setter(&EnvConfig::hard_skills_per_role)},
    {"soft_skill_names", setter(&EnvConfig::soft_skill_names)},
    {"topic_names", setter(&EnvConfig::topic_names)},
    {"sigma_b", setter(&EnvConfig::sigma_b)},
    {"sigma_v", setter(&EnvConfig::sigma_v)},
    {"sigma_r", setter(&EnvConfig::sigma_r)},
    {"gamma", setter(&EnvConfig::gamma)},
    {"observer_weights", setter(&EnvConfig::observer_weights)},
    {"arrival_rate", setter(&EnvConfig::arrival_rate)},
    {"min_duration", setter(&EnvConfig::min_duration)},
    {"max_duration", setter(&EnvConfig::max_duration)},
    {"max_team_size", setter(&EnvConfig::max_team_size)},
    {"batch_trigger", setter(&EnvConfig::batch_trigger)},
    {"total_steps", setter(&EnvConfig::total_steps)},
    {"bias_off_at",
      [](EnvConfig& cfg, const json& v, const std::string& key)
      {
        if (v.is_null())
          cfg.bias_off_at.reset();
        else
        {
          Timestep t = 0;
          read_field(v, key, t);
          cfg.bias_off_at = t;
        }
      }},
    {"reject_scale", setter(&EnvConfig::reject_scale)},
    {"full_time_probability", setter(&EnvConfig::full_time_probability)},
    {"proposal_mask_rate", setter(&EnvConfig::proposal_mask_rate)},
    {"constraint_probability", setter(&EnvConfig::constraint_probability)},
    {"weights", setter(&EnvConfig::weights)},
    {"beam_width", setter(&EnvConfig::beam_width)},
    {"planning_horizon", setter(&EnvConfig::planning_horizon)},
    {"max_attempts", setter(&EnvConfig::max_attempts)},
    {"max_priority", setter(&EnvConfig::max_priority)},
    {"team_enumeration_cap", setter(&EnvConfig::team_enumeration_cap)},
  };
  return table;
}

void require(bool ok, const std::string& field, const std::string& what)
{
  if (!ok)
    throw ValidationError("field '" + field + "': " + what);
}

bool probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

void require_unique(const std::vector<std::string>& names, const std::string& field)
{
  require(!names.empty(), field, "must not be empty");
  std::set<std::string> seen;
  for (const auto& n : names)
  {
    require(!n.empty(), field, "names must not be empty");
    require(seen.insert(n).second, field, "duplicate name '" + n + "'");
  }
}

} // namespace

void EnvConfig::validate() const
{
  require_unique(roles, "roles");
  require(workers_per_role_per_seniority >= 1, "workers_per_role_per_seniority", "must be >= 1");
  require(hard_skills_per_role >= 1, "hard_skills_per_role", "must be >= 1");
  require_unique(soft_skill_names, "soft_skill_names");
  require_unique(topic_names, "topic_names");
  for (const auto& [name, sd] : {std::pair{"sigma_b", sigma_b}, {"sigma_v", sigma_v}, {"sigma_r", sigma_r}})
    require(std::isfinite(sd) && sd >= 0.0, name, "must be finite and >= 0");
  require(gamma > 0.0 && gamma <= 1.0, "gamma", "must lie in (0, 1]");
  try
  {
    observer_weights.validate();
  }
  catch (const ValidationError& e)
  {
    throw ValidationError(std::string("field 'observer_weights': ") + e.what());
  }
  require(std::isfinite(arrival_rate) && arrival_rate >= 0.0, "arrival_rate", "must be >= 0");
  require(min_duration >= 1, "min_duration", "must be >= 1");
  require(max_duration >= min_duration, "max_duration", "must be >= min_duration");
  require(max_duration <= planning_horizon, "max_duration", "must not exceed planning_horizon");
  require(max_team_size >= 1, "max_team_size", "must be >= 1");
  require(max_team_size <= 2 * workers_per_role_per_seniority * static_cast<int>(roles.size()),
    "max_team_size", "exceeds the number of workers");
  require(batch_trigger >= 1, "batch_trigger", "must be >= 1");
  require(total_steps >= 0, "total_steps", "must be >= 0");
  if (bias_off_at)
    require(*bias_off_at >= 0 && *bias_off_at <= total_steps, "bias_off_at",
      "must lie in [0, total_steps]");
  require(probability(reject_scale), "reject_scale", "must lie in [0, 1]");
  require(probability(full_time_probability), "full_time_probability", "must lie in [0, 1]");
  require(probability(proposal_mask_rate), "proposal_mask_rate", "must lie in [0, 1]");
  require(probability(constraint_probability), "constraint_probability", "must lie in [0, 1]");
  try
  {
    weights.validate();
  }
  catch (const ValidationError& e)
  {
    throw ValidationError(std::string("field 'weights': ") + e.what());
  }
  require(beam_width >= 1, "beam_width", "must be >= 1");
  require(planning_horizon >= 1, "planning_horizon", "must be >= 1");
  require(max_attempts >= 1, "max_attempts", "must be >= 1");
  require(max_priority >= 1, "max_priority", "must be >= 1");
  require(team_enumeration_cap >= 1, "team_enumeration_cap", "must be >= 1");
}

PlannerConfig EnvConfig::planner() const
{
  PlannerConfig p;
  p.beam_width = beam_width;
  p.planning_horizon = planning_horizon;
  p.team_enumeration_cap = team_enumeration_cap;
  p.max_priority = max_priority;
  p.max_attempts = max_attempts;
  return p;
}

void to_json(json& j, const EnvConfig& v)
{
  j = json{
    {"seed", v.seed},
    {"roles", v.roles},
    {"workers_per_role_per_seniority", v.workers_per_role_per_seniority},
    {"hard_skills_per_role", v.hard_skills_per_role},
    {"soft_skill_names", v.soft_skill_names},
    {"topic_names", v.topic_names},
    {"sigma_b", v.sigma_b},
    {"sigma_v", v.sigma_v},
    {"sigma_r", v.sigma_r},
    {"gamma", v.gamma},
    {"observer_weights", v.observer_weights},
    {"arrival_rate", v.arrival_rate},
    {"min_duration", v.min_duration},
    {"max_duration", v.max_duration},
    {"max_team_size", v.max_team_size},
    {"batch_trigger", v.batch_trigger},
    {"total_steps", v.total_steps},
    {"bias_off_at", v.bias_off_at ? json(*v.bias_off_at) : json(nullptr)},
    {"reject_scale", v.reject_scale},
    {"full_time_probability", v.full_time_probability},
    {"proposal_mask_rate", v.proposal_mask_rate},
    {"constraint_probability", v.constraint_probability},
    {"weights", v.weights},
    {"beam_width", v.beam_width},
    {"planning_horizon", v.planning_horizon},
    {"max_attempts", v.max_attempts},
    {"max_priority", v.max_priority},
    {"team_enumeration_cap", v.team_enumeration_cap},
  };
}

void from_json(const json& j, EnvConfig& v)
{
  if (!j.is_object())
    throw ValidationError("config must be a JSON object");
  EnvConfig cfg;
  const auto& table = field_setters();
  for (const auto& [key, value] : j.items())
  {
    const auto it = table.find(key);
    if (it == table.end())
      throw ValidationError("unknown config field '" + key + "'");
    it->second(cfg, value, key);
  }
  v = std::move(cfg);
}

void apply_override(EnvConfig& cfg, const std::string& key, const std::string& value)
{
  const auto& table = field_setters();
  const auto it = table.find(key);
  if (it == table.end())
    throw ValidationError("unknown config field '" + key + "'");
  json parsed = json::parse(value, nullptr, false);
  if (parsed.is_discarded())
    parsed = value;
  it->second(cfg, parsed, key);
}

bool is_structural_field(const std::string& key)
{
  static const std::set<std::string> structural{
    "roles", "workers_per_role_per_seniority", "hard_skills_per_role",
    "soft_skill_names", "topic_names"};
  return structural.count(key) > 0;
}

//==============================================================================
// Randomness

std::uint64_t stable_hash(std::string_view text, std::uint64_t seed)
{
  // FNV-1a, then a splitmix64 finalizer to spread the seed.
  std::uint64_t h = 0xcbf29ce484222325ULL ^ (seed * 0x9e3779b97f4a7c15ULL);
  for (unsigned char c : text)
  {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return h;
}

double BiasTable::bias(const WorkerId& observer, const WorkerId& target, const std::string& skill)
{
  if (_sigma == 0.0)
    return 0.0;
  auto key = std::make_tuple(observer, target, skill);
  const auto it = _cache.find(key);
  if (it != _cache.end())
    return it->second;
  std::string text = observer;
  text.push_back('\0');
  text += target;
  text.push_back('\0');
  text += skill;
  std::mt19937_64 gen(stable_hash(text, _seed));
  const double b = std::normal_distribution<double>(0.0, _sigma)(gen);
  _cache.emplace(std::move(key), b);
  return b;
}

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint32_t index)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), index};
  return std::mt19937_64(seq);
}

std::string engine_state(const std::mt19937_64& g)
{
  std::ostringstream os;
  os << g;
  return os.str();
}

void load_engine(const json& j, std::mt19937_64& g)
{
  std::istringstream is(j.get<std::string>());
  is >> g;
  if (!is)
    throw ValidationError("corrupt random stream state");
}

} // namespace

RngStreams::RngStreams(std::uint64_t seed)
: arrivals(stream(seed, 1)),
  tasks(stream(seed, 2)),
  noise(stream(seed, 3)),
  acceptance(stream(seed, 4)),
  feedback(stream(seed, 5)),
  reconstruction(stream(seed, 6))
{
}

void to_json(json& j, const RngStreams& v)
{
  j = json{
    {"arrivals", engine_state(v.arrivals)},
    {"tasks", engine_state(v.tasks)},
    {"noise", engine_state(v.noise)},
    {"acceptance", engine_state(v.acceptance)},
    {"feedback", engine_state(v.feedback)},
    {"reconstruction", engine_state(v.reconstruction)},
  };
}

void from_json(const json& j, RngStreams& v)
{
  load_engine(j.at("arrivals"), v.arrivals);
  load_engine(j.at("tasks"), v.tasks);
  load_engine(j.at("noise"), v.noise);
  load_engine(j.at("acceptance"), v.acceptance);
  load_engine(j.at("feedback"), v.feedback);
  load_engine(j.at("reconstruction"), v.reconstruction);
}

//==============================================================================
// Logs

void to_json(json& j, const MetricRow& v)
{
  j = json{
    {"step", v.step},
    {"mae_hard", v.mae_hard},
    {"mae_soft", v.mae_soft},
    {"mae_task_pref", v.mae_task_pref},
    {"mae_teammate_pref", v.mae_teammate_pref},
    {"unknown", v.unknown},
    {"correct", v.correct},
    {"incorrect", v.incorrect},
    {"questions", v.questions},
    {"mean_optimality", v.mean_optimality ? json(*v.mean_optimality) : json(nullptr)},
    {"tasks_scheduled", v.tasks_scheduled},
  };
}

static void from_json(const json& j, MetricRow& v)
{
  j.at("step").get_to(v.step);
  j.at("mae_hard").get_to(v.mae_hard);
  j.at("mae_soft").get_to(v.mae_soft);
  j.at("mae_task_pref").get_to(v.mae_task_pref);
  j.at("mae_teammate_pref").get_to(v.mae_teammate_pref);
  j.at("unknown").get_to(v.unknown);
  j.at("correct").get_to(v.correct);
  j.at("incorrect").get_to(v.incorrect);
  j.at("questions").get_to(v.questions);
  if (!j.at("mean_optimality").is_null())
    v.mean_optimality = j.at("mean_optimality").get<double>();
  j.at("tasks_scheduled").get_to(v.tasks_scheduled);
}

void to_json(json& j, const AssignmentRecord& v)
{
  j = json{
    {"step", v.step},
    {"task_id", v.task_id},
    {"team", v.team},
    {"interval", v.interval},
    {"outcome", v.outcome},
    {"optimality", v.optimality},
    {"alternatives", v.alternatives},
    {"rejections", v.rejections},
  };
}

static void from_json(const json& j, AssignmentRecord& v)
{
  j.at("step").get_to(v.step);
  j.at("task_id").get_to(v.task_id);
  j.at("team").get_to(v.team);
  j.at("interval").get_to(v.interval);
  j.at("outcome").get_to(v.outcome);
  j.at("optimality").get_to(v.optimality);
  j.at("alternatives").get_to(v.alternatives);
  j.at("rejections").get_to(v.rejections);
}

void to_json(json& j, const EventCounts& v)
{
  j = json{
    {"arrivals", v.arrivals},
    {"staffing_rounds", v.staffing_rounds},
    {"completions", v.completions},
    {"reviews_emitted", v.reviews_emitted},
    {"peer_observations", v.peer_observations},
    {"proposal_observations", v.proposal_observations},
    {"self_evaluations", v.self_evaluations},
    {"rejections", v.rejections},
  };
}

static void from_json(const json& j, EventCounts& v)
{
  v.arrivals = j.value("arrivals", 0);
  v.staffing_rounds = j.value("staffing_rounds", 0);
  v.completions = j.value("completions", 0);
  v.reviews_emitted = j.value("reviews_emitted", 0);
  v.peer_observations = j.value("peer_observations", 0);
  v.proposal_observations = j.value("proposal_observations", 0);
  v.self_evaluations = j.value("self_evaluations", 0);
  v.rejections = j.value("rejections", 0);
}

const char* const metrics_csv_header =
  "step,mae_hard,mae_soft,mae_task_pref,mae_teammate_pref,unknown,correct,incorrect,"
  "questions,mean_optimality,tasks_scheduled";

const char* const assignments_csv_header =
  "step,task_id,team,alpha,beta,outcome,optimality,alternatives,rejections";

namespace {

std::string fmt_double(double x)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

} // namespace

std::string to_csv_line(const MetricRow& r)
{
  std::string s = std::to_string(r.step);
  for (double x : {r.mae_hard, r.mae_soft, r.mae_task_pref, r.mae_teammate_pref})
    s += "," + fmt_double(x);
  for (int x : {r.unknown, r.correct, r.incorrect, r.questions})
    s += "," + std::to_string(x);
  s += ",";
  if (r.mean_optimality)
    s += fmt_double(*r.mean_optimality);
  s += "," + std::to_string(r.tasks_scheduled);
  return s;
}

std::string to_csv_line(const AssignmentRecord& r)
{
  std::string team;
  for (const auto& w : r.team)
    team += (team.empty() ? "" : ";") + w;
  return std::to_string(r.step) + "," + r.task_id + "," + team + "," +
    std::to_string(r.interval.alpha) + "," + std::to_string(r.interval.beta) + "," +
    fmt_double(r.outcome) + "," + fmt_double(r.optimality) + "," +
    std::to_string(r.alternatives) + "," + std::to_string(r.rejections);
}

//==============================================================================
// Snapshots

json environment_json(const SimState& s)
{
  return json{
    {"config", s.cfg},
    {"clock", s.clock},
    {"workers", s.workers.workers()},
    {"truth", s.truth},
    {"role_skills", s.role_skills},
    {"profile", s.profile},
  };
}

json state_json(const SimState& s)
{
  json j = environment_json(s);
  json asked = json::array();
  for (const auto& q : s.asked)
    asked.push_back(json::array({q.worker, q.skill}));
  json tasks = json::array();
  for (const auto& [id, t] : s.tasks)
    tasks.push_back(t);
  j["tasks"] = tasks;
  j["pending"] = s.pending;
  j["confirmed"] = s.confirmed;
  j["completed"] = s.completed;
  j["asked"] = asked;
  j["task_counter"] = s.task_counter;
  j["rng"] = s.rng;
  j["metrics"] = s.metrics;
  j["assignments"] = s.assignments;
  j["events"] = s.events;
  return j;
}

SimState state_from_json(const json& j)
{
  SimState s;
  try
  {
    s.cfg = j.at("config").get<EnvConfig>();
    s.clock = j.value("clock", Timestep{0});
    s.workers = Roster(j.at("workers").get<std::vector<WorkerState>>());
    j.at("truth").get_to(s.truth);
    j.at("role_skills").get_to(s.role_skills);
    if (j.contains("profile"))
      s.profile = j.at("profile").get<ProfileStore>();
    else
      s.profile = ProfileStore(s.cfg.gamma, s.cfg.observer_weights);
    if (j.contains("tasks"))
    {
      for (auto& t : j.at("tasks").get<std::vector<TaskSpec>>())
        s.tasks.emplace(t.id, std::move(t));
    }
    s.pending = j.value("pending", std::vector<TaskId>{});
    if (j.contains("confirmed"))
      j.at("confirmed").get_to(s.confirmed);
    s.completed = j.value("completed", std::set<TaskId>{});
    if (j.contains("asked"))
    {
      for (const auto& q : j.at("asked"))
        s.asked.insert({q.at(0).get<WorkerId>(), q.at(1).get<std::string>()});
    }
    s.task_counter = j.value("task_counter", std::int64_t{0});
    if (j.contains("metrics"))
      j.at("metrics").get_to(s.metrics);
    if (j.contains("assignments"))
      j.at("assignments").get_to(s.assignments);
    if (j.contains("events"))
      j.at("events").get_to(s.events);
  }
  catch (const json::exception& e)
  {
    throw ValidationError(std::string("malformed state: ") + e.what());
  }
  s.cfg.validate();
  for (const auto& w : s.workers)
  {
    w.validate();
    if (!s.truth.count(w.id))
      throw ValidationError("worker '" + w.id + "' has no ground truth");
    if (!s.role_skills.count(w.role))
      throw ValidationError("worker '" + w.id + "' has unknown role '" + w.role + "'");
  }
  for (const auto& id : s.pending)
  {
    if (!s.tasks.count(id))
      throw ValidationError("pending task '" + id + "' is not in the task list");
  }
  for (const auto& [id, tso] : s.confirmed.assignments)
  {
    if (!s.tasks.count(id))
      throw ValidationError("confirmed task '" + id + "' is not in the task list");
  }

  s.bias = BiasTable(s.cfg.seed, s.cfg.sigma_b);
  if (j.contains("rng"))
    j.at("rng").get_to(s.rng);
  else
    s.rng = RngStreams(s.cfg.seed);
  return s;
}

void prepare_run(SimState& state)
{
  state.cfg.validate();
  state.rng = RngStreams(state.cfg.seed);
  state.bias = BiasTable(state.cfg.seed, state.cfg.sigma_b);
  if (state.profile.observation_count() == 0)
    state.profile = ProfileStore(state.cfg.gamma, state.cfg.observer_weights);
}

//==============================================================================
// Generation

namespace {

std::string padded(std::int64_t n, int width)
{
  std::string s = std::to_string(n);
  if (static_cast<int>(s.size()) < width)
    s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
  return s;
}

int uniform_int(std::mt19937_64& g, int lo, int hi)
{
  return std::uniform_int_distribution<int>(lo, hi)(g);
}

double uniform_real(std::mt19937_64& g, double lo, double hi)
{
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

bool bernoulli(std::mt19937_64& g, double p)
{
  if (p <= 0.0)
    return false;
  if (p >= 1.0)
    return true;
  return std::bernoulli_distribution(p)(g);
}

double round_to(double x, double step) { return std::round(x / step) * step; }

template <class T>
std::vector<T> sample(const std::vector<T>& pool, std::size_t k, std::mt19937_64& g)
{
  std::vector<T> out;
  std::sample(pool.begin(), pool.end(), std::back_inserter(out), k, g);
  return out;
}

} // namespace

SimState generate_environment(const EnvConfig& cfg)
{
  cfg.validate();
  SimState s;
  s.cfg = cfg;
  std::mt19937_64 g = stream(cfg.seed, 0);

  const int total =
    static_cast<int>(cfg.roles.size()) * 2 * cfg.workers_per_role_per_seniority;
  const int width = std::max(2, static_cast<int>(std::to_string(total).size()));

  for (const auto& role : cfg.roles)
  {
    auto& skills = s.role_skills[role];
    for (int i = 1; i <= cfg.hard_skills_per_role; ++i)
      skills.push_back(role + "_" + padded(i, 2));
  }

  std::vector<WorkerState> workers;
  int n = 0;
  for (const auto& role : cfg.roles)
  {
    for (auto seniority : {Seniority::junior, Seniority::senior})
    {
      for (int i = 0; i < cfg.workers_per_role_per_seniority; ++i)
      {
        WorkerState w;
        w.id = "w" + padded(++n, width);
        w.role = role;
        w.seniority = seniority;
        const bool senior = seniority == Seniority::senior;
        w.salary = round_to(senior ? uniform_real(g, 25.0, 40.0) : uniform_real(g, 10.0, 20.0), 0.01);
        w.work_capacity =
          round_to(senior ? uniform_real(g, 1.0, 1.5) : uniform_real(g, 0.8, 1.2), 0.01);
        workers.push_back(std::move(w));
      }
    }
  }

  for (const auto& w : workers)
  {
    const bool senior = w.seniority == Seniority::senior;
    const int lo = senior ? 3 : 1;
    const int hi = senior ? 6 : 4;
    TrueAttributes t;
    for (const auto& skill : s.role_skills.at(w.role))
      t.hard_skills.emplace(skill, SkillLevel(uniform_int(g, lo, hi)));
    for (const auto& skill : cfg.soft_skill_names)
      t.soft_skills.emplace(skill, SkillLevel(uniform_int(g, lo, hi)));
    for (const auto& topic : cfg.topic_names)
      t.task_preferences.emplace(topic, PreferenceLevel(uniform_int(g, -2, 2)));
    for (const auto& other : workers)
    {
      if (other.id != w.id)
        t.teammate_preferences.emplace(other.id, PreferenceLevel(uniform_int(g, -2, 2)));
    }
    s.truth.emplace(w.id, std::move(t));
  }

  s.workers = Roster(std::move(workers));
  s.profile = ProfileStore(cfg.gamma, cfg.observer_weights);
  s.bias = BiasTable(cfg.seed, cfg.sigma_b);
  s.rng = RngStreams(cfg.seed);
  return s;
}

TaskSpec generate_task(SimState& state)
{
  const EnvConfig& cfg = state.cfg;
  auto& g = state.rng.tasks;

  TaskSpec t;
  t.id = "t" + padded(++state.task_counter, 5);
  t.arrival_time = state.clock;

  const int per_role = 2 * cfg.workers_per_role_per_seniority;
  const int size = uniform_int(g, 1, cfg.max_team_size);
  for (int i = 0; i < size; ++i)
  {
    const auto& role = cfg.roles[static_cast<std::size_t>(
      uniform_int(g, 0, static_cast<int>(cfg.roles.size()) - 1))];
    int& count = t.required_roles[role];
    count = std::min(count + 1, per_role);
  }
  for (const auto& [role, count] : t.required_roles)
  {
    const auto& skills = state.role_skills.at(role);
    const int k = uniform_int(g, 1, std::min<int>(3, static_cast<int>(skills.size())));
    for (auto& skill : sample(skills, static_cast<std::size_t>(k), g))
      t.required_skills[role].insert(std::move(skill));
  }
  const int topics = uniform_int(g, 1, std::min<int>(3, static_cast<int>(cfg.topic_names.size())));
  for (auto& topic : sample(cfg.topic_names, static_cast<std::size_t>(topics), g))
    t.topics.insert(std::move(topic));

  t.duration = std::uniform_int_distribution<Timestep>(cfg.min_duration, cfg.max_duration)(g);
  double min_capacity = state.workers.max_capacity();
  for (const auto& w : state.workers)
    min_capacity = std::min(min_capacity, w.work_capacity);
  const double rate = uniform_real(g, 0.2, 0.7) * min_capacity;
  t.workload = round_to(rate * static_cast<double>(t.duration), 0.001);
  t.priority = uniform_int(g, 1, cfg.max_priority);
  t.timing = bernoulli(g, cfg.full_time_probability) ? Timing::full_time : Timing::part_time;

  if (bernoulli(g, cfg.constraint_probability))
  {
    std::vector<WorkerId> eligible;
    for (const auto& w : state.workers)
    {
      if (t.required_roles.count(w.role))
        eligible.push_back(w.id);
    }
    t.must_include.insert(eligible[static_cast<std::size_t>(
      uniform_int(g, 0, static_cast<int>(eligible.size()) - 1))]);
  }
  if (bernoulli(g, cfg.constraint_probability))
  {
    const auto& all = state.workers.workers();
    const auto& pick = all[static_cast<std::size_t>(
      uniform_int(g, 0, static_cast<int>(all.size()) - 1))].id;
    if (!t.must_include.count(pick))
      t.must_exclude.insert(pick);
  }
  if (enumerate_teams(t, state.workers, cfg.team_enumeration_cap).empty())
    t.must_exclude.clear();

  t.validate(cfg.max_priority, state.workers.max_capacity());
  return t;
}

//==============================================================================
// Feedback

int corrupt_skill_level(int true_level, double bias, double noise_sd, std::mt19937_64& rng)
{
  double v = 0.0;
  if (noise_sd > 0.0)
    v = std::normal_distribution<double>(0.0, noise_sd)(rng);
  return round_to_level(static_cast<double>(true_level) + bias + v, Scale::skill);
}

double rejection_probability(const TrueAttributes& truth, const TaskSpec& task, double reject_scale)
{
  if (task.topics.empty())
    return 0.0;
  double sum = 0.0;
  for (const auto& topic : task.topics)
  {
    const auto it = truth.task_preferences.find(topic);
    if (it != truth.task_preferences.end())
      sum += it->second.value();
  }
  const double aversion = std::max(0.0, -sum / static_cast<double>(task.topics.size()));
  return reject_scale * aversion / 2.0;
}

bool decide_acceptance(
  const TrueAttributes& truth, const TaskSpec& task, double reject_scale, std::mt19937_64& rng)
{
  return !bernoulli(rng, rejection_probability(truth, task, reject_scale));
}

namespace {

bool bias_active(const SimState& state)
{
  return !(state.cfg.bias_off_at && state.clock >= *state.cfg.bias_off_at);
}

ObservationRecord make_obs(
  const WorkerId& target, const WorkerId& observer, AttributeKey key, int level,
  Timestep now, FeedbackSource source, std::string provenance)
{
  ObservationRecord o;
  o.target = target;
  o.observer = observer;
  o.attribute = std::move(key);
  o.level = level;
  o.timestamp = now;
  o.source = source;
  o.provenance = std::move(provenance);
  return o;
}

} // namespace

void emit_task_proposal_feedback(
  SimState& state, const WorkerId& worker, const TaskSpec& task, bool accepted,
  std::vector<ObservationRecord>& out)
{
  const TrueAttributes& truth = state.truth.at(worker);
  const std::string prov = "proposal:" + task.id + (accepted ? ":accept" : ":reject");
  for (const auto& topic : task.topics)
  {
    const auto it = truth.task_preferences.find(topic);
    if (it == truth.task_preferences.end())
      continue;
    if (state.cfg.proposal_mask_rate < 1.0 &&
        !bernoulli(state.rng.feedback, state.cfg.proposal_mask_rate))
      continue;
    out.push_back(make_obs(worker, worker, {AttributeKind::task_pref, topic},
      it->second.value(), state.clock, FeedbackSource::task_proposal, prov));
  }
}

void emit_performance_review(
  SimState& state, const TaskSpec& task, const std::vector<WorkerId>& team,
  std::vector<ObservationRecord>& out)
{
  for (const auto& w : team)
  {
    const auto& role = state.workers.at(w).role;
    const auto skills = task.required_skills.find(role);
    if (skills == task.required_skills.end())
      continue;
    const TrueAttributes& truth = state.truth.at(w);
    for (const auto& skill : skills->second)
    {
      const auto it = truth.hard_skills.find(skill);
      if (it == truth.hard_skills.end())
        continue;
      const int level =
        corrupt_skill_level(it->second.value(), 0.0, state.cfg.sigma_v, state.rng.noise);
      out.push_back(make_obs(w, review_observer, {AttributeKind::hard_skill, skill}, level,
        state.clock, FeedbackSource::performance_review, "review:" + task.id));
    }
  }
}

void emit_peer_feedback(
  SimState& state, const TaskSpec& task, const std::vector<WorkerId>& team,
  std::vector<ObservationRecord>& out)
{
  const bool biased = bias_active(state);
  const std::string prov = "peer:" + task.id;
  for (const auto& o : team)
  {
    for (const auto& w : team)
    {
      if (o == w)
        continue;
      const TrueAttributes& truth = state.truth.at(w);
      std::vector<AttributeKey> pool;
      for (const auto& [skill, level] : truth.hard_skills)
        pool.push_back({AttributeKind::hard_skill, skill});
      for (const auto& [skill, level] : truth.soft_skills)
        pool.push_back({AttributeKind::soft_skill, skill});
      if (!pool.empty())
      {
        const int k = uniform_int(state.rng.feedback, 1, std::min<int>(3, static_cast<int>(pool.size())));
        for (auto& key : sample(pool, static_cast<std::size_t>(k), state.rng.feedback))
        {
          const int true_level = key.kind == AttributeKind::hard_skill
            ? truth.hard_skills.at(key.name).value()
            : truth.soft_skills.at(key.name).value();
          const double b = biased ? state.bias.bias(o, w, key.name) : 0.0;
          const int level = corrupt_skill_level(true_level, b, state.cfg.sigma_v, state.rng.noise);
          out.push_back(make_obs(w, o, std::move(key), level, state.clock,
            FeedbackSource::peer_feedback, prov));
        }
      }
      const auto pref = state.truth.at(o).teammate_preferences.find(w);
      if (pref != state.truth.at(o).teammate_preferences.end())
      {
        out.push_back(make_obs(o, o, {AttributeKind::teammate_pref, w}, pref->second.value(),
          state.clock, FeedbackSource::peer_feedback, prov));
      }
    }
  }
}

std::optional<ObservationRecord> emit_self_evaluation(
  SimState& state, const WorkerId& worker, const std::string& skill)
{
  if (!state.asked.insert({worker, skill}).second)
    return std::nullopt;
  const auto t = state.truth.find(worker);
  if (t == state.truth.end())
    return std::nullopt;
  const auto it = t->second.hard_skills.find(skill);
  if (it == t->second.hard_skills.end())
    return std::nullopt;
  const double b = bias_active(state) ? state.bias.bias(worker, worker, skill) : 0.0;
  const int level = corrupt_skill_level(it->second.value(), b, state.cfg.sigma_v, state.rng.noise);
  return make_obs(worker, worker, {AttributeKind::hard_skill, skill}, level, state.clock,
    FeedbackSource::self_eval, "self:" + std::to_string(state.clock));
}

//==============================================================================
// Outcome oracle

double true_outcome(
  const TaskSpec& task, const std::vector<WorkerId>& team, const SimState& state)
{
  Schedule s;
  s.assign(task.id, TSO{team, Interval{task.arrival_time, task.arrival_time + task.duration}});
  const TaskBook book{{task.id, task}};
  const TruthSource truth(state.truth);
  CriteriaContext ctx;
  ctx.tasks = &book;
  ctx.workers = &state.workers;
  ctx.attributes = &truth;
  ctx.soft_skills = state.cfg.soft_skill_names;
  ctx.max_priority = state.cfg.max_priority;
  ctx.horizon_length = state.cfg.planning_horizon;
  return (eval_soft_skill_diversity(s, ctx).value + eval_teammate_compat(s, ctx).value +
           eval_hard_skill_match(s, ctx).value) / 3.0;
}

OutcomeScore task_outcome_oracle(
  const TaskSpec& task,
  const std::vector<WorkerId>& team,
  const std::vector<std::vector<WorkerId>>& candidates,
  const SimState& state)
{
  OutcomeScore r;
  r.outcome = true_outcome(task, team, state);
  r.alternatives = static_cast<int>(std::max<std::size_t>(1, candidates.size()));
  double best = r.outcome;
  for (const auto& c : candidates)
    best = std::max(best, c == team ? r.outcome : true_outcome(task, c, state));
  r.optimality = (candidates.size() <= 1 || best <= 0.0) ? 1.0 : r.outcome / best;
  return r;
}

//==============================================================================
// Step

namespace {

void ingest(SimState& state, std::vector<ObservationRecord>& batch)
{
  for (auto& obs : batch)
  {
    if (state.cfg.sigma_r > 0.0)
    {
      const double r = std::normal_distribution<double>(0.0, state.cfg.sigma_r)(state.rng.reconstruction);
      obs.level = round_to_level(obs.level + r, scale_of(obs.attribute.kind));
    }
    state.profile.ingest(obs, state.clock);
  }
  batch.clear();
}

void complete_tasks(SimState& state, std::vector<ObservationRecord>& obs)
{
  std::vector<TaskId> done;
  for (const auto& [id, tso] : state.confirmed.assignments)
  {
    if (tso.interval.beta <= state.clock)
      done.push_back(id);
  }
  for (const auto& id : done)
  {
    const TaskSpec& task = state.tasks.at(id);
    const std::vector<WorkerId> team = state.confirmed.assignments.at(id).team;
    const std::size_t before = obs.size();
    emit_performance_review(state, task, team, obs);
    state.events.reviews_emitted += static_cast<int>(obs.size() - before);
    const std::size_t mid = obs.size();
    emit_peer_feedback(state, task, team, obs);
    state.events.peer_observations += static_cast<int>(obs.size() - mid);

    const double outcome = true_outcome(task, team, state);
    for (const auto& w : team)
    {
      WorkerState& ws = state.workers.at(w);
      std::erase_if(ws.calendar.entries, [&](const CalendarEntry& e) { return e.task_id == id; });
      ws.history.push_back({id, outcome});
    }
    state.confirmed.remove(id);
    state.completed.insert(id);
    ++state.events.completions;
  }
}

} // namespace

void step(SimState& state)
{
  state.clock += 1;
  const Timestep now = state.clock;
  std::vector<ObservationRecord> obs;

  complete_tasks(state, obs);
  ingest(state, obs);

  if (state.cfg.arrival_rate > 0.0)
  {
    const int n = std::poisson_distribution<int>(state.cfg.arrival_rate)(state.rng.arrivals);
    for (int i = 0; i < n; ++i)
    {
      TaskSpec t = generate_task(state);
      state.pending.push_back(t.id);
      state.tasks.emplace(t.id, std::move(t));
      ++state.events.arrivals;
    }
  }

  MetricRow row;
  row.step = now;
  std::vector<double> optimality;

  if (!state.pending.empty() && static_cast<int>(state.pending.size()) >= state.cfg.batch_trigger)
  {
    ++state.events.staffing_rounds;
    std::vector<TaskSpec> batch;
    for (const auto& id : state.pending)
      batch.push_back(state.tasks.at(id));

    PlanningContext ctx;
    ctx.now = now;
    ctx.workers = &state.workers;
    ctx.attributes = &state.profile;
    ctx.soft_skills = state.cfg.soft_skill_names;
    ctx.weights = state.cfg.weights;
    ctx.config = state.cfg.planner();
    ctx.on_queries = [&](const std::vector<SkillQuery>& queries)
    {
      bool learned = false;
      std::vector<ObservationRecord> answers;
      for (const auto& q : queries)
      {
        if (auto o = emit_self_evaluation(state, q.worker, q.skill))
        {
          answers.push_back(std::move(*o));
          ++row.questions;
          ++state.events.self_evaluations;
          learned = true;
        }
      }
      ingest(state, answers);
      return learned;
    };

    const auto leaves = schedule(batch, state.confirmed, state.tasks, ctx);
    const Schedule& top = leaves.front().schedule;

    const TaskBook scope = planning_scope(batch, state.confirmed, state.tasks);
    const auto violations = hard_violations(top, scope, state.workers);
    if (!violations.empty())
      throw InvariantError("confirmed schedule violates " + to_string(violations.front().kind) +
        " for task '" + violations.front().task_id + "'");

    for (const auto& [id, tso] : top.assignments)
    {
      if (state.confirmed.contains(id))
        continue;
      const TaskSpec& task = state.tasks.at(id);

      Schedule others = top;
      others.remove(id);
      std::vector<std::vector<WorkerId>> candidates;
      for (auto& option : feasible_tsos(task, state.workers, others, scope, now,
             ctx.horizon_end(), state.cfg.team_enumeration_cap))
        candidates.push_back(std::move(option.team));

      AssignmentRecord rec;
      rec.step = now;
      rec.task_id = id;
      rec.team = tso.team;
      rec.interval = tso.interval;
      const auto score = task_outcome_oracle(task, tso.team, candidates, state);
      rec.outcome = score.outcome;
      rec.optimality = score.optimality;
      rec.alternatives = score.alternatives;

      for (const auto& w : tso.team)
      {
        const bool accepted =
          decide_acceptance(state.truth.at(w), task, state.cfg.reject_scale, state.rng.acceptance);
        if (!accepted)
        {
          ++rec.rejections;
          ++state.events.rejections;
        }
        const std::size_t before = obs.size();
        emit_task_proposal_feedback(state, w, task, accepted, obs);
        state.events.proposal_observations += static_cast<int>(obs.size() - before);
        state.workers.at(w).calendar.entries.push_back(
          {id, tso.interval, task.timing, task.workload_rate()});
      }

      optimality.push_back(rec.optimality);
      state.assignments.push_back(std::move(rec));
      ++row.tasks_scheduled;
    }
    for (const auto& [id, tso] : top.assignments)
    {
      if (!state.confirmed.contains(id))
        state.confirmed.assign(id, tso);
    }
    std::erase_if(state.pending, [&](const TaskId& id) { return state.confirmed.contains(id); });
  }

  ingest(state, obs);

  const auto report = accuracy_report(state.profile, state.truth);
  row.mae_hard = report.by_kind.at(AttributeKind::hard_skill).mae;
  row.mae_soft = report.by_kind.at(AttributeKind::soft_skill).mae;
  row.mae_task_pref = report.by_kind.at(AttributeKind::task_pref).mae;
  row.mae_teammate_pref = report.by_kind.at(AttributeKind::teammate_pref).mae;
  row.unknown = report.unknown;
  row.correct = report.correct;
  row.incorrect = report.incorrect;
  if (!optimality.empty())
  {
    double sum = 0.0;
    for (double x : optimality)
      sum += x;
    row.mean_optimality = sum / static_cast<double>(optimality.size());
  }
  state.metrics.push_back(row);
}

//==============================================================================
LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y)
{
  if (x.size() != y.size())
    throw ValidationError("least_squares needs equally long x and y");
  LinearFit fit;
  fit.n = x.size();
  if (x.empty())
    return fit;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
  {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
  {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

} // namespace staffsim
