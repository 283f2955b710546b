#include "doctest.h"

#include <random>
#include <set>

#include <staffsim/rescheduler.hpp>

#include "support.hpp"

using namespace staffsim;
using support::MapSource;

namespace {

WorkerState worker(const std::string& id, const std::string& role)
{
  WorkerState w;
  w.id = id;
  w.role = role;
  w.salary = 10.0;
  return w;
}

TaskSpec task(const std::string& id, std::map<std::string, int> roles, Timestep duration,
  int priority)
{
  TaskSpec t;
  t.id = id;
  t.required_roles = std::move(roles);
  t.duration = duration;
  t.workload = 0.5 * static_cast<double>(duration);
  t.priority = priority;
  return t;
}

struct Fixture
{
  Roster roster;
  MapSource attrs;
  PlanningContext ctx;

  explicit Fixture(std::vector<WorkerState> ws, Timestep now = 0) : roster(std::move(ws))
  {
    ctx.now = now;
    ctx.workers = &roster;
    ctx.attributes = &attrs;
    ctx.config.planning_horizon = 50;
  }
};

} // namespace

TEST_SUITE("rescheduler")
{
  TEST_CASE("blocking set construction")
  {
    const auto t = task("t", {{"A", 1}}, 3, 4);
    TaskBook book{
      {"low", task("low", {{"A", 1}}, 4, 2)},
      {"started", task("started", {{"A", 1}}, 4, 1)},
      {"equal", task("equal", {{"A", 1}}, 4, 4)},
      {"other", task("other", {{"B", 1}}, 4, 1)},
      {"later", task("later", {{"A", 1}}, 2, 1)},
      {"t", t},
    };
    Schedule s;
    s.assign("low", TSO{{"a1"}, {5, 9}});
    s.assign("started", TSO{{"a2"}, {4, 8}});
    s.assign("equal", TSO{{"a3"}, {5, 9}});
    s.assign("other", TSO{{"b1"}, {5, 9}});
    s.assign("later", TSO{{"a4"}, {8, 10}});
    CHECK(build_P_h(s, book, t, 5, 5) == std::vector<TaskId>{"low"});
    CHECK(build_P_h(s, book, t, 6, 5) == std::vector<TaskId>{"later", "low"});
    CHECK(build_P_h(s, book, t, 9, 5) == std::vector<TaskId>{"later"});
  }

  TEST_CASE("in-place check")
  {
    Fixture f({worker("a1", "A")});
    const auto t = task("t", {{"A", 1}}, 2, 5);
    TaskBook book{{"low", task("low", {{"A", 1}}, 5, 1)}, {"t", t}};
    Schedule s;
    s.assign("low", TSO{{"a1"}, {0, 5}});
    CHECK_FALSE(can_schedule_in_place(t, {}, s, book, f.roster, 0, 50, 5));
    const auto tso = can_schedule_in_place(t, {"low"}, s, book, f.roster, 0, 50, 5);
    REQUIRE(tso);
    CHECK(tso->interval == Interval{0, 2});
    // Strictly earlier is required.
    CHECK_FALSE(can_schedule_in_place(t, {"low"}, s, book, f.roster, 0, 50, 0));
  }

  TEST_CASE("cancellation ordering")
  {
    TaskBook book{
      {"a", task("a", {{"A", 2}}, 3, 2)},
      {"b", task("b", {{"A", 1}}, 3, 2)},
      {"c", task("c", {{"A", 1}}, 3, 1)},
    };
    CHECK(cheaper_to_cancel({"c"}, {"b"}, book));
    CHECK(cheaper_to_cancel({"b"}, {"a"}, book));
    CHECK_FALSE(cheaper_to_cancel({"a"}, {"a"}, book));
    CHECK(cheaper_to_cancel({"b", "c"}, {"a", "c"}, book));
  }

  TEST_CASE("a single low-priority blocker is canceled and replanned")
  {
    Fixture f({worker("a1", "A")});
    const auto low = task("low", {{"A", 1}}, 5, 1);
    const auto high = task("high", {{"A", 1}}, 2, 5);
    Schedule prev;
    prev.assign("low", TSO{{"a1"}, {0, 5}});
    const auto r = reschedule({high}, prev, {{"low", low}}, f.ctx);
    REQUIRE(r.cancellations.size() == 1);
    CHECK(r.cancellations[0].advanced == "high");
    CHECK(r.cancellations[0].canceled == std::vector<TaskId>{"low"});
    CHECK(r.schedule.assignments.at("high").interval == Interval{0, 2});
    CHECK(r.schedule.assignments.at("low").interval == Interval{2, 7});
    CHECK(r.processed == std::vector<TaskId>{"high", "low"});
    CHECK(r.attempts == 1);
  }

  TEST_CASE("no conflict leaves the schedule alone")
  {
    Fixture f({worker("a1", "A"), worker("a2", "A")});
    const auto low = task("low", {{"A", 1}}, 5, 1);
    Schedule prev;
    prev.assign("low", TSO{{"a1"}, {0, 5}});
    const auto r = reschedule({task("high", {{"A", 1}}, 2, 5)}, prev, {{"low", low}}, f.ctx);
    CHECK(r.cancellations.empty());
    CHECK(r.attempts == 0);
    CHECK(r.schedule.assignments.at("low") == prev.assignments.at("low"));
    CHECK(r.schedule.assignments.at("high").interval.alpha == 0);
  }

  TEST_CASE("started and higher-priority tasks are protected")
  {
    Fixture f({worker("a1", "A")}, 2);
    const auto started = task("started", {{"A", 1}}, 5, 1);
    const auto peer = task("peer", {{"A", 1}}, 3, 5);
    Schedule prev;
    prev.assign("started", TSO{{"a1"}, {1, 6}});
    prev.assign("peer", TSO{{"a1"}, {6, 9}});
    const auto r = reschedule({task("new", {{"A", 1}}, 1, 5)}, prev,
      {{"started", started}, {"peer", peer}}, f.ctx);
    CHECK(r.cancellations.empty());
    CHECK(r.schedule.assignments.at("new").interval.alpha == 9);
  }

  TEST_CASE("two blockers need a pair and the attempt budget caps the search")
  {
    Fixture f({worker("a1", "A"), worker("a2", "A")});
    const TaskBook known{
      {"l1", task("l1", {{"A", 1}}, 6, 1)},
      {"l2", task("l2", {{"A", 1}}, 6, 2)},
    };
    Schedule prev;
    prev.assign("l1", TSO{{"a1"}, {0, 6}});
    prev.assign("l2", TSO{{"a2"}, {0, 6}});
    const auto high = task("high", {{"A", 2}}, 2, 5);

    const auto r = reschedule({high}, prev, known, f.ctx);
    REQUIRE(r.cancellations.size() == 1);
    CHECK(r.cancellations[0].canceled == std::vector<TaskId>{"l1", "l2"});
    CHECK(r.schedule.assignments.at("high").interval.alpha == 0);
    CHECK(r.attempts == 3);

    f.ctx.config.max_attempts = 1;
    const auto capped = reschedule({high}, prev, known, f.ctx);
    CHECK(capped.cancellations.empty());
    CHECK(capped.attempts == 1);
    CHECK(capped.schedule.assignments.at("high").interval.alpha == 6);
  }

  TEST_CASE("infeasible assignments are stripped and replanned")
  {
    Fixture f({worker("a1", "A")});
    const TaskBook known{
      {"x", task("x", {{"A", 1}}, 3, 3)},
      {"y", task("y", {{"A", 1}}, 3, 2)},
    };
    Schedule prev;
    prev.assign("x", TSO{{"a1"}, {0, 3}});
    prev.assign("y", TSO{{"a1"}, {1, 4}});
    const auto r = reschedule({}, prev, known, f.ctx);
    CHECK_FALSE(r.stripped.empty());
    CHECK(hard_violations(r.schedule, known, f.roster).empty());
    CHECK(r.schedule.size() == 2);
  }

  TEST_CASE("fuzzed rescheduling keeps every guarantee")
  {
    std::mt19937_64 g(404);
    int exercised = 0;
    for (int i = 0; i < 300; ++i)
    {
      auto in = support::fuzz_instance(g, {.max_workers = 8, .max_tasks = 4, .max_previous = 4});
      auto ctx = in.context(1);
      ctx.config.max_attempts = 100000;
      const TaskBook book = planning_scope(in.batch, in.previous, in.known);
      const auto r = reschedule(in.batch, in.previous, in.known, ctx);

      CHECK(hard_violations(r.schedule, book, in.workers).empty());
      CHECK(support::independent_violations(r.schedule, book, in.workers).empty());

      // Each task is processed at most once.
      const std::set<TaskId> unique(r.processed.begin(), r.processed.end());
      CHECK(unique.size() == r.processed.size());
      CHECK(r.processed.size() <= in.batch.size() + in.previous.size());

      // Every task ends up scheduled or reported unscheduled.
      for (const auto& [id, t] : book)
      {
        const bool unscheduled =
          std::find(r.unscheduled.begin(), r.unscheduled.end(), id) != r.unscheduled.end();
        CHECK(r.schedule.contains(id) != unscheduled);
      }

      for (const auto& ev : r.cancellations)
      {
        const TaskSpec& adv = book.at(ev.advanced);
        for (const auto& id : ev.canceled)
        {
          REQUIRE(in.previous.contains(id));
          CHECK(in.previous.assignments.at(id).interval.alpha >= in.now);
          CHECK(book.at(id).priority < adv.priority);
        }
      }

      // Minimality for the first task processed, against subset search.
      if (r.processed.empty() || !r.stripped.empty())
        continue;
      const TaskSpec& first = book.at(r.processed.front());
      if (in.previous.contains(first.id))
        continue;
      const auto want = support::minimal_cancellation(
        first, in.previous, book, in.workers, in.now, ctx.horizon_end(), 8);
      const bool got = !r.cancellations.empty() && r.cancellations.front().advanced == first.id;
      CHECK(got == want.has_value());
      if (got && want)
      {
        ++exercised;
        CHECK(r.cancellations.front().canceled.size() == *want);
      }
    }
    CHECK(exercised > 5);
  }

  TEST_CASE("rescheduling is deterministic")
  {
    std::mt19937_64 g(9);
    for (int i = 0; i < 30; ++i)
    {
      auto in = support::fuzz_instance(g, {.max_workers = 10, .max_tasks = 5});
      const auto ctx = in.context(1);
      const auto a = reschedule(in.batch, in.previous, in.known, ctx);
      const auto b = reschedule(in.batch, in.previous, in.known, ctx);
      CHECK(json(a).dump() == json(b).dump());
    }
  }
}
