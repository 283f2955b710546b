// JSON-in, JSON-out bindings. The Python package wraps these with dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <staffsim/profiling.hpp>
#include <staffsim/rescheduler.hpp>
#include <staffsim/scheduler.hpp>
#include <staffsim/simulation.hpp>

namespace py = pybind11;
using namespace staffsim;

namespace {

/// Explicit levels: [{"worker", "kind", "name", "level"}, ...].
class TableSource final : public AttributeSource
{
public:
  explicit TableSource(const json& rows)
  {
    for (const auto& r : rows)
    {
      AttributeKey key{r.at("kind").get<AttributeKind>(), r.at("name").get<std::string>()};
      _levels[{r.at("worker").get<WorkerId>(), key}] = r.at("level").get<int>();
    }
  }

  std::optional<int> level(const WorkerId& w, const AttributeKey& a) const override
  {
    const auto it = _levels.find({w, a});
    if (it == _levels.end())
      return std::nullopt;
    return it->second;
  }

private:
  std::map<std::pair<WorkerId, AttributeKey>, int> _levels;
};

/// Shared fields of a planning request.
struct Request
{
  Roster workers;
  std::vector<TaskSpec> pending;
  Schedule previous;
  TaskBook known;
  TableSource attributes;
  PlanningContext ctx;

  explicit Request(const json& j)
    : workers(j.at("workers").get<std::vector<WorkerState>>()),
      pending(j.value("pending", std::vector<TaskSpec>{})),
      previous(j.value("previous", Schedule{})),
      attributes(j.value("attributes", json::array()))
  {
    for (const auto& t : j.value("known", std::vector<TaskSpec>{}))
      known.emplace(t.id, t);
    ctx.now = j.value("now", Timestep{0});
    ctx.workers = &workers;
    ctx.attributes = &attributes;
    ctx.soft_skills = j.value("soft_skills", std::vector<std::string>{});
    if (j.contains("weights"))
      ctx.weights = j.at("weights").get<WeightVector>();
    ctx.config.beam_width = j.value("beam_width", ctx.config.beam_width);
    ctx.config.planning_horizon = j.value("planning_horizon", ctx.config.planning_horizon);
    ctx.config.max_attempts = j.value("max_attempts", ctx.config.max_attempts);
  }
};

json parse(const std::string& text) { return json::parse(text); }

std::string generate_environment_json(const std::string& config)
{
  const EnvConfig cfg = parse(config).get<EnvConfig>();
  return environment_json(generate_environment(cfg)).dump();
}

std::string run_json(const std::string& env, Timestep steps, std::optional<Timestep> bias_off_at)
{
  SimState s = state_from_json(parse(env));
  if (bias_off_at)
    s.cfg.bias_off_at = bias_off_at;
  s.cfg.total_steps = std::max(s.cfg.total_steps, s.clock + steps);
  s.cfg.validate();
  {
    py::gil_scoped_release release;
    for (Timestep k = 0; k < steps; ++k)
      step(s);
  }
  return state_json(s).dump();
}

std::string schedule_json(const std::string& request)
{
  Request r(parse(request));
  json out = json::array();
  for (const auto& leaf : schedule(r.pending, r.previous, r.known, r.ctx))
    out.push_back({{"schedule", leaf.schedule}, {"score", leaf.score}});
  return out.dump();
}

std::string reschedule_json(const std::string& request)
{
  Request r(parse(request));
  return json(reschedule(r.pending, r.previous, r.known, r.ctx)).dump();
}

std::string check_feasibility_json(const std::string& request)
{
  const json j = parse(request);
  const Roster workers(j.at("workers").get<std::vector<WorkerState>>());
  TaskBook book;
  for (const auto& t : j.at("tasks").get<std::vector<TaskSpec>>())
    book.emplace(t.id, t);
  return json(check_feasibility(j.at("schedule").get<Schedule>(), book, workers)).dump();
}

std::optional<std::string> estimate_json(const std::string& history, const std::string& kind,
  Timestep now, double gamma, const std::string& weights)
{
  const auto records = parse(history).get<std::vector<ObservationRecord>>();
  const auto w = weights.empty() ? ObserverWeights{} : parse(weights).get<ObserverWeights>();
  const auto e = estimate_attribute(records, json(kind).get<AttributeKind>(), now, gamma, w);
  if (!e)
    return std::nullopt;
  return json(*e).dump();
}

} // namespace

PYBIND11_MODULE(_staffsim, m)
{
  m.doc() = "Staffing and profiling simulator core";
  m.attr("__version__") = STAFFSIM_VERSION;

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<InvariantError>(m, "InvariantError", PyExc_RuntimeError);
  py::register_exception<json::exception>(m, "JSONError", PyExc_ValueError);

  m.def("generate_environment", &generate_environment_json, py::arg("config"));
  m.def("run", &run_json, py::arg("env"), py::arg("steps"), py::arg("bias_off_at") = py::none());
  m.def("schedule", &schedule_json, py::arg("request"));
  m.def("reschedule", &reschedule_json, py::arg("request"));
  m.def("check_feasibility", &check_feasibility_json, py::arg("request"));
  m.def("estimate", &estimate_json, py::arg("history"), py::arg("kind"), py::arg("now"),
    py::arg("gamma"), py::arg("weights") = "");
}
