#include <staffsim/cli.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include <staffsim/rescheduler.hpp>

namespace fs = std::filesystem;

namespace staffsim::cli {

//==============================================================================
// Files

std::string read_text_file(const fs::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad())
    throw IoError("error while reading '" + path.string() + "'");
  return ss.str();
}

json read_json_file(const fs::path& path)
{
  const std::string text = read_text_file(path);
  try
  {
    return json::parse(text);
  }
  catch (const json::parse_error& e)
  {
    throw IoError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_file_atomic(const fs::path& path, const std::string& content)
{
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out)
      throw IoError("error while writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec)
    throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

//==============================================================================
// Run

Overrides parse_overrides(const std::vector<std::string>& args)
{
  Overrides out;
  for (const auto& a : args)
  {
    const auto eq = a.find('=');
    if (a.rfind("--", 0) != 0 || eq == std::string::npos || eq <= 2)
      throw ValidationError("unexpected argument '" + a + "' (config overrides use --key=value)");
    out.emplace_back(a.substr(2, eq - 2), a.substr(eq + 1));
  }
  return out;
}

void configure_run(SimState& state, const RunOptions& options)
{
  if (state.clock != 0 || !state.metrics.empty())
    throw ValidationError("run expects a freshly generated environment (clock 0)");
  for (const auto& [key, value] : options.overrides)
  {
    if (is_structural_field(key))
      throw ValidationError("field '" + key + "' shapes the workers; set it with gen-env");
    apply_override(state.cfg, key, value);
  }
  if (options.steps)
    state.cfg.total_steps = *options.steps;
  if (options.bias_off_at)
    state.cfg.bias_off_at = *options.bias_off_at;
  if (options.beam)
    state.cfg.beam_width = *options.beam;
  if (options.seed)
    state.cfg.seed = *options.seed;
  prepare_run(state);
}

std::string metrics_csv(const SimState& state)
{
  std::string out = std::string(metrics_csv_header) + "\n";
  for (const auto& row : state.metrics)
    out += to_csv_line(row) + "\n";
  return out;
}

std::string assignments_csv(const SimState& state)
{
  std::string out = std::string(assignments_csv_header) + "\n";
  for (const auto& rec : state.assignments)
    out += to_csv_line(rec) + "\n";
  return out;
}

RunResult run_to_directory(SimState& state, const fs::path& out_dir, const std::string& env_source)
{
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec)
    throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());

  const auto start = std::chrono::steady_clock::now();
  const Timestep steps = state.cfg.total_steps;
  for (Timestep k = 0; k < steps; ++k)
  {
    step(state);
    if (state.clock % 50 == 0)
    {
      const auto& row = state.metrics.back();
      spdlog::info("step {}: mae_hard {:.3f}, unknown {}, pending {}, scheduled {}",
        state.clock, row.mae_hard, row.unknown, state.pending.size(), state.assignments.size());
    }
  }
  const double elapsed =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  RunResult r;
  r.metrics_csv = out_dir / "metrics.csv";
  r.assignments_csv = out_dir / "assignments.csv";
  r.final_state = out_dir / "final_state.json";
  r.manifest = out_dir / "manifest.json";
  r.steps = steps;
  r.wall_clock_seconds = elapsed;

  write_file_atomic(r.metrics_csv, metrics_csv(state));
  write_file_atomic(r.assignments_csv, assignments_csv(state));
  write_file_atomic(r.final_state, state_json(state).dump(1) + "\n");

  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f\n", elapsed);
  write_file_atomic(out_dir / "wall_clock.txt", buf);

  const json manifest{
    {"version", STAFFSIM_VERSION},
    {"seed", state.cfg.seed},
    {"steps", steps},
    {"environment", env_source},
    {"config", state.cfg},
    {"events", state.events},
    {"outputs",
      {{"metrics", "metrics.csv"},
        {"assignments", "assignments.csv"},
        {"final_state", "final_state.json"},
        {"wall_clock", "wall_clock.txt"}}},
  };
  write_file_atomic(r.manifest, manifest.dump(2) + "\n");
  return r;
}

//==============================================================================
// Rescheduling demo

namespace {

constexpr const char* criterion_names[criterion_count] = {
  "average_priority", "waiting_time", "tasks_scheduled", "cost", "active_time_balance",
  "soft_skill_diversity", "teammate_compatibility", "hard_skill_match", "task_preference_fit"};

template <class T>
T scenario_value(const json& scenario, const char* key, T fallback)
{
  if (!scenario.contains(key))
    return fallback;
  try
  {
    return scenario.at(key).get<T>();
  }
  catch (const json::exception& e)
  {
    throw ValidationError(std::string("scenario field '") + key + "': " + e.what());
  }
}

} // namespace

json reschedule_report(const SimState& env, const json& scenario)
{
  if (!scenario.is_object())
    throw ValidationError("scenario must be a JSON object");

  std::vector<TaskSpec> scheduled_tasks;
  std::vector<TaskSpec> pending;
  Schedule before;
  try
  {
    scheduled_tasks = scenario.value("tasks", std::vector<TaskSpec>{});
    pending = scenario.at("pending").get<std::vector<TaskSpec>>();
    before = scenario.value("schedule", Schedule{});
  }
  catch (const json::exception& e)
  {
    throw ValidationError(std::string("malformed scenario: ") + e.what());
  }

  PlanningContext ctx;
  ctx.now = scenario_value<Timestep>(scenario, "now", env.clock);
  ctx.workers = &env.workers;
  ctx.attributes = &env.profile;
  ctx.soft_skills = env.cfg.soft_skill_names;
  ctx.weights = scenario.contains("weights") ? scenario_value<WeightVector>(scenario, "weights", {})
                                             : env.cfg.weights;
  ctx.config = env.cfg.planner();
  ctx.config.max_attempts = scenario_value<int>(scenario, "max_attempts", ctx.config.max_attempts);
  ctx.config.planning_horizon =
    scenario_value<Timestep>(scenario, "planning_horizon", ctx.config.planning_horizon);
  ctx.config.validate();
  ctx.weights.validate();

  TaskBook known;
  for (const auto& t : scheduled_tasks)
  {
    t.validate(ctx.config.max_priority);
    if (!known.emplace(t.id, t).second)
      throw ValidationError("duplicate task id '" + t.id + "' in scenario");
  }
  for (const auto& t : pending)
    t.validate(ctx.config.max_priority);

  const auto result = reschedule(pending, before, known, ctx);
  const TaskBook scope = planning_scope(pending, before, known);

  const auto crit = ctx.criteria(scope);
  const auto u_before = evaluate_all(before, crit);
  const auto u_after = evaluate_all(result.schedule, crit);

  json criteria = json::array();
  std::map<int, double> sb, sa;
  for (int i = 0; i < criterion_count; ++i)
  {
    sb[i + 1] = u_before[i].value;
    sa[i + 1] = u_after[i].value;
    criteria.push_back({
      {"id", i + 1},
      {"name", criterion_names[i]},
      {"before", u_before[i].value},
      {"after", u_after[i].value},
      {"delta", u_after[i].value - u_before[i].value},
    });
  }

  std::set<TaskId> canceled;
  for (const auto& ev : result.cancellations)
    canceled.insert(ev.canceled.begin(), ev.canceled.end());

  json changes = json::array();
  for (const auto& [id, tso] : before.assignments)
  {
    const auto it = result.schedule.assignments.find(id);
    if (it == result.schedule.assignments.end())
    {
      changes.push_back({{"task", id}, {"before", tso}, {"after", nullptr}});
      continue;
    }
    if (it->second.interval.alpha != tso.interval.alpha || it->second.team != tso.team)
      changes.push_back({{"task", id}, {"before", tso}, {"after", it->second},
        {"shift", it->second.interval.alpha - tso.interval.alpha}});
  }

  json placed = json::array();
  for (const auto& t : pending)
  {
    const auto it = result.schedule.assignments.find(t.id);
    placed.push_back({{"task", t.id}, {"priority", t.priority},
      {"tso", it == result.schedule.assignments.end() ? json(nullptr) : json(it->second)}});
  }

  return json{
    {"now", ctx.now},
    {"before", before},
    {"after", result.schedule},
    {"pending", placed},
    {"canceled", canceled},
    {"cancellations", result.cancellations},
    {"stripped", result.stripped},
    {"unscheduled", result.unscheduled},
    {"start_changes", changes},
    {"criteria", criteria},
    {"V", {{"before", aggregate_V(sb, ctx.weights)}, {"after", aggregate_V(sa, ctx.weights)}}},
    {"attempts", result.attempts},
  };
}

std::string format_reschedule_report(const json& r)
{
  std::ostringstream os;
  char buf[160];
  os << "now: " << r.at("now").get<Timestep>() << "\n";
  os << "pending:\n";
  for (const auto& p : r.at("pending"))
  {
    os << "  " << p.at("task").get<std::string>() << " (priority " << p.at("priority").get<int>()
       << "): ";
    if (p.at("tso").is_null())
      os << "unscheduled\n";
    else
    {
      const auto& iv = p.at("tso").at("interval");
      os << "[" << iv.at("alpha").get<Timestep>() << ", " << iv.at("beta").get<Timestep>() << ")";
      for (const auto& w : p.at("tso").at("team"))
        os << " " << w.get<std::string>();
      os << "\n";
    }
  }
  os << "canceled:";
  if (r.at("canceled").empty())
    os << " none";
  for (const auto& id : r.at("canceled"))
    os << " " << id.get<std::string>();
  os << "\nstart changes:\n";
  if (r.at("start_changes").empty())
    os << "  none\n";
  for (const auto& c : r.at("start_changes"))
  {
    os << "  " << c.at("task").get<std::string>() << ": "
       << c.at("before").at("interval").at("alpha").get<Timestep>() << " -> ";
    if (c.at("after").is_null())
      os << "dropped\n";
    else
      os << c.at("after").at("interval").at("alpha").get<Timestep>() << "\n";
  }
  os << "criteria:\n";
  for (const auto& c : r.at("criteria"))
  {
    std::snprintf(buf, sizeof buf, "  %d %-24s %.4f -> %.4f (%+.4f)\n", c.at("id").get<int>(),
      c.at("name").get<std::string>().c_str(), c.at("before").get<double>(),
      c.at("after").get<double>(), c.at("delta").get<double>());
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "V: %.4f -> %.4f\n", r.at("V").at("before").get<double>(),
    r.at("V").at("after").get<double>());
  os << buf;
  return os.str();
}

//==============================================================================
// Report

namespace {

struct Table
{
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const
  {
    for (std::size_t i = 0; i < header.size(); ++i)
    {
      if (header[i] == name)
        return i;
    }
    throw IoError("missing column '" + name + "'");
  }
};

std::vector<std::string> split(const std::string& line, char sep)
{
  std::vector<std::string> out;
  std::string cur;
  for (char c : line)
  {
    if (c == sep)
    {
      out.push_back(cur);
      cur.clear();
    }
    else if (c != '\r')
      cur.push_back(c);
  }
  out.push_back(cur);
  return out;
}

Table read_csv(const fs::path& path)
{
  std::istringstream in(read_text_file(path));
  Table t;
  std::string line;
  if (!std::getline(in, line))
    throw IoError("'" + path.string() + "' is empty");
  t.header = split(line, ',');
  int n = 1;
  while (std::getline(in, line))
  {
    ++n;
    if (line.empty())
      continue;
    auto cells = split(line, ',');
    if (cells.size() != t.header.size())
      throw IoError("'" + path.string() + "' line " + std::to_string(n) + ": expected " +
        std::to_string(t.header.size()) + " fields");
    t.rows.push_back(std::move(cells));
  }
  return t;
}

double number(const std::string& cell, const fs::path& path)
{
  try
  {
    std::size_t used = 0;
    const double x = std::stod(cell, &used);
    if (used != cell.size())
      throw std::invalid_argument(cell);
    return x;
  }
  catch (const std::exception&)
  {
    throw IoError("'" + path.string() + "': '" + cell + "' is not a number");
  }
}

} // namespace

json metrics_report(const fs::path& dir, const std::optional<fs::path>& plot_dir)
{
  const fs::path mpath = dir / "metrics.csv";
  const fs::path apath = dir / "assignments.csv";
  const Table m = read_csv(mpath);
  const Table a = fs::exists(apath) ? read_csv(apath) : Table{{"step", "optimality"}, {}};

  const auto c_step = m.column("step");
  const auto c_q = m.column("questions");
  const std::vector<std::string> mae_cols{"mae_hard", "mae_soft", "mae_task_pref", "mae_teammate_pref"};
  const std::vector<std::string> count_cols{"unknown", "correct", "incorrect"};

  json summary;
  summary["steps"] = m.rows.size();
  long long questions = 0;
  for (const auto& r : m.rows)
    questions += static_cast<long long>(number(r[c_q], mpath));
  summary["total_questions"] = questions;

  if (!m.rows.empty())
  {
    const auto& last = m.rows.back();
    json mae = json::object();
    for (const auto& c : mae_cols)
      mae[c.substr(4)] = number(last[m.column(c)], mpath);
    summary["final_mae"] = mae;
    for (const auto& c : count_cols)
      summary["final_" + c] = static_cast<long long>(number(last[m.column(c)], mpath));
  }

  std::vector<double> xs, ys;
  const auto a_step = a.column("step");
  const auto a_opt = a.column("optimality");
  for (const auto& r : a.rows)
  {
    xs.push_back(number(r[a_step], apath));
    ys.push_back(number(r[a_opt], apath));
  }
  const LinearFit fit = least_squares(xs, ys);
  summary["optimality_fit"] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"n", fit.n}};

  if (plot_dir)
  {
    std::error_code ec;
    fs::create_directories(*plot_dir, ec);
    if (ec)
      throw IoError("cannot create '" + plot_dir->string() + "': " + ec.message());

    std::string q = "step,questions\n";
    std::string k = "step,unknown,correct,incorrect\n";
    std::string e = "step,mae_hard,mae_soft,mae_task_pref,mae_teammate_pref\n";
    for (const auto& r : m.rows)
    {
      q += r[c_step] + "," + r[c_q] + "\n";
      k += r[c_step];
      for (const auto& c : count_cols)
        k += "," + r[m.column(c)];
      k += "\n";
      e += r[c_step];
      for (const auto& c : mae_cols)
        e += "," + r[m.column(c)];
      e += "\n";
    }
    std::string o = "step,optimality,fitted\n";
    char buf[64];
    for (std::size_t i = 0; i < xs.size(); ++i)
    {
      std::snprintf(buf, sizeof buf, ",%.6f\n", fit.intercept + fit.slope * xs[i]);
      o += a.rows[i][a_step] + "," + a.rows[i][a_opt] + buf;
    }
    write_file_atomic(*plot_dir / "plot_questions.csv", q);
    write_file_atomic(*plot_dir / "plot_knowledge.csv", k);
    write_file_atomic(*plot_dir / "plot_mae.csv", e);
    write_file_atomic(*plot_dir / "plot_optimality.csv", o);
    write_file_atomic(*plot_dir / "summary.json", summary.dump(2) + "\n");
  }
  return summary;
}

std::string format_metrics_report(const json& s)
{
  std::ostringstream os;
  char buf[160];
  os << "steps: " << s.at("steps").get<std::size_t>() << "\n";
  if (s.contains("final_mae"))
  {
    os << "final MAE:\n";
    for (const auto& [kind, v] : s.at("final_mae").items())
    {
      std::snprintf(buf, sizeof buf, "  %-16s %.4f\n", kind.c_str(), v.get<double>());
      os << buf;
    }
    os << "attributes: unknown " << s.at("final_unknown").get<long long>() << ", correct "
       << s.at("final_correct").get<long long>() << ", incorrect "
       << s.at("final_incorrect").get<long long>() << "\n";
  }
  os << "questions: " << s.at("total_questions").get<long long>() << "\n";
  const auto& f = s.at("optimality_fit");
  std::snprintf(buf, sizeof buf, "optimality vs step: slope %.6g, intercept %.6g (n = %zu)\n",
    f.at("slope").get<double>(), f.at("intercept").get<double>(), f.at("n").get<std::size_t>());
  os << buf;
  return os.str();
}

//==============================================================================
// Entry point

namespace {

void setup_logging()
{
  auto logger = spdlog::stderr_color_mt("staffsim");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("STAFFSIM_LOG"))
    spdlog::set_level(spdlog::level::from_str(env));
}

int guarded(const std::function<void()>& body)
{
  try
  {
    body();
    return exit_ok;
  }
  catch (const IoError& e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return exit_io;
  }
  catch (const InvariantError& e)
  {
    std::cerr << "internal error: " << e.what() << "\n";
    return exit_internal;
  }
  catch (const ValidationError& e)
  {
    std::cerr << "invalid input: " << e.what() << "\n";
    return exit_validation;
  }
  catch (const json::exception& e)
  {
    std::cerr << "invalid input: " << e.what() << "\n";
    return exit_validation;
  }
  catch (const std::exception& e)
  {
    std::cerr << "internal error: " << e.what() << "\n";
    return exit_internal;
  }
}

SimState load_environment(const std::string& path)
{
  const json j = read_json_file(path);
  return state_from_json(j);
}

} // namespace

int main(int argc, char** argv)
{
  if (!spdlog::get("staffsim"))
    setup_logging();

  CLI::App app{"Workforce staffing and profiling simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(STAFFSIM_VERSION));

  // gen-env
  auto* gen = app.add_subcommand("gen-env", "Generate a synthetic environment");
  std::string gen_config;
  std::optional<std::uint64_t> gen_seed;
  std::string gen_out;
  gen->add_option("--config", gen_config, "Config JSON file");
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("--out", gen_out, "Output environment JSON")->required();
  gen->allow_extras();

  // run
  auto* run = app.add_subcommand("run", "Run the simulation on an environment");
  std::string run_env;
  std::string run_out;
  RunOptions run_opts;
  run->add_option("--env", run_env, "Environment JSON from gen-env")->required();
  run->add_option("--out-dir", run_out, "Output directory")->required();
  run->add_option("--steps", run_opts.steps, "Number of steps");
  run->add_option("--bias-off-at", run_opts.bias_off_at, "Step from which feedback is unbiased");
  run->add_option("--beam", run_opts.beam, "Beam width K");
  run->add_option("--seed", run_opts.seed, "Seed of the runtime random streams");
  run->allow_extras();

  // reschedule-demo
  auto* demo = app.add_subcommand("reschedule-demo", "Inject pending tasks and reschedule");
  std::string demo_env;
  std::string demo_scenario;
  std::string demo_out;
  demo->add_option("--env", demo_env, "Environment or final-state JSON")->required();
  demo->add_option("--scenario", demo_scenario, "Scenario JSON")->required();
  demo->add_option("--out", demo_out, "Write the full report as JSON");

  // report
  auto* rep = app.add_subcommand("report", "Summarize a run directory");
  std::string rep_dir;
  std::string rep_out;
  rep->add_option("metrics_dir", rep_dir, "Directory written by run")->required();
  rep->add_option("--out-dir", rep_out, "Where to write plot data (default: metrics_dir)");

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_validation;
  }

  if (*gen)
  {
    return guarded([&]
    {
      EnvConfig cfg;
      if (!gen_config.empty())
        cfg = read_json_file(gen_config).get<EnvConfig>();
      for (const auto& [key, value] : parse_overrides(gen->remaining()))
        apply_override(cfg, key, value);
      if (gen_seed)
        cfg.seed = *gen_seed;
      const SimState state = generate_environment(cfg);
      write_file_atomic(gen_out, environment_json(state).dump(1) + "\n");
      spdlog::info("wrote {} workers to {}", state.workers.size(), gen_out);
    });
  }

  if (*run)
  {
    return guarded([&]
    {
      run_opts.overrides = parse_overrides(run->remaining());
      SimState state = load_environment(run_env);
      configure_run(state, run_opts);
      const auto r = run_to_directory(state, run_out, run_env);
      std::cout << "ran " << r.steps << " steps in " << r.wall_clock_seconds << " s; wrote "
                << r.metrics_csv.string() << "\n";
    });
  }

  if (*demo)
  {
    return guarded([&]
    {
      const SimState env = load_environment(demo_env);
      const json scenario = read_json_file(demo_scenario);
      const json report = reschedule_report(env, scenario);
      std::cout << format_reschedule_report(report);
      if (!demo_out.empty())
        write_file_atomic(demo_out, report.dump(2) + "\n");
    });
  }

  if (*rep)
  {
    return guarded([&]
    {
      const fs::path out = rep_out.empty() ? fs::path(rep_dir) : fs::path(rep_out);
      const json summary = metrics_report(rep_dir, out);
      std::cout << format_metrics_report(summary);
    });
  }
  return exit_validation;
}

} // namespace staffsim::cli
