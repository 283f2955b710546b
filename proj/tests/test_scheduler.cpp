#include "doctest.h"

#include <random>

#include <staffsim/scheduler.hpp>

#include "support.hpp"

using namespace staffsim;
using support::MapSource;

namespace {

WorkerState worker(const std::string& id, const std::string& role, double salary = 10.0)
{
  WorkerState w;
  w.id = id;
  w.role = role;
  w.salary = salary;
  return w;
}

TaskSpec task(const std::string& id, std::map<std::string, int> roles, Timestep duration = 3,
  int priority = 3, Timing timing = Timing::full_time)
{
  TaskSpec t;
  t.id = id;
  t.required_roles = std::move(roles);
  t.duration = duration;
  t.workload = 0.5 * static_cast<double>(duration);
  t.priority = priority;
  t.timing = timing;
  return t;
}

using Teams = std::vector<std::vector<WorkerId>>;

} // namespace

TEST_SUITE("scheduler")
{
  TEST_CASE("team enumeration")
  {
    const Roster r({worker("a1", "A"), worker("a2", "A"), worker("a3", "A"), worker("b1", "B")});
    CHECK(enumerate_teams(task("t", {{"A", 1}}), r) == Teams{{"a1"}, {"a2"}, {"a3"}});

    auto t = task("t", {{"A", 2}});
    t.must_exclude = {"a3"};
    CHECK(enumerate_teams(t, r) == Teams{{"a1", "a2"}});

    CHECK(enumerate_teams(task("t", {{"C", 1}}), r).empty());
    CHECK(enumerate_teams(task("t", {{"A", 4}}), r).empty());

    auto inc = task("t", {{"A", 1}, {"B", 1}});
    inc.must_include = {"a2"};
    CHECK(enumerate_teams(inc, r) == Teams{{"a2", "b1"}});

    // A required worker whose role the task does not need makes it unsatisfiable.
    auto wrong = task("t", {{"A", 1}});
    wrong.must_include = {"b1"};
    CHECK(enumerate_teams(wrong, r).empty());
  }

  TEST_CASE("team enumeration agrees with subset filtering")
  {
    std::mt19937_64 g(3);
    for (int i = 0; i < 200; ++i)
    {
      auto in = support::fuzz_instance(g, {.max_workers = 9, .max_tasks = 3, .max_previous = 0, .max_count = 3});
      for (const auto& t : in.batch)
        CHECK(enumerate_teams(t, in.workers) == support::brute_teams(t, in.workers));
    }
  }

  TEST_CASE("team enumeration cap")
  {
    std::vector<WorkerState> ws;
    for (int i = 0; i < 30; ++i)
      ws.push_back(worker("w" + std::to_string(100 + i), "A"));
    const Roster r(ws);
    CHECK_THROWS_AS(enumerate_teams(task("t", {{"A", 5}}), r, 10000), TeamEnumerationError);
    CHECK(enumerate_teams(task("t", {{"A", 2}}), r, 10000).size() == 435);
  }

  TEST_CASE("feasible options")
  {
    const Timestep k = 5;
    const Roster r({worker("a1", "A"), worker("a2", "A")});
    const auto t = task("t", {{"A", 1}}, 3);
    const TaskBook book{{"t", t}};

    const auto free = feasible_tsos(t, r, {}, book, k, k + 200);
    REQUIRE(free.size() == 2);
    CHECK(free[0].interval == Interval{k, k + 3});
    CHECK(free[1].interval == Interval{k, k + 3});

    auto blocker = task("b", {{"A", 1}}, 5);
    TaskBook book2{{"t", t}, {"b", blocker}};
    Schedule overlay;
    overlay.assign("b", TSO{{"a1"}, {k, k + 5}});
    const Roster solo({worker("a1", "A")});
    const auto blocked = feasible_tsos(t, solo, overlay, book2, k, k + 200);
    REQUIRE(blocked.size() == 1);
    CHECK(blocked[0].interval.alpha == k + 5);

    // Both options for the two-worker roster: a2 is free now, a1 after the blocker.
    const auto both = feasible_tsos(t, r, overlay, book2, k, k + 200);
    REQUIRE(both.size() == 2);
    CHECK(both[0].team == std::vector<WorkerId>{"a2"});
    CHECK(both[1].interval.alpha == k + 5);

    CHECK(feasible_tsos(t, r, {}, book, k, k + 2).empty());
  }

  TEST_CASE("feasible options match the brute-force search")
  {
    std::mt19937_64 g(21);
    for (int i = 0; i < 300; ++i)
    {
      auto in = support::fuzz_instance(g, {.max_workers = 7, .max_tasks = 3});
      const TaskBook book = planning_scope(in.batch, in.previous, in.known);
      for (const auto& t : in.batch)
      {
        const auto got = feasible_tsos(t, in.workers, in.previous, book, in.now, in.now + in.horizon);
        const auto want = support::brute_tsos(t, in.workers, in.previous, book, in.now, in.now + in.horizon);
        CHECK(got == want);
      }
    }
  }

  TEST_CASE("single task with K=1 picks the best option")
  {
    std::mt19937_64 g(8);
    for (int i = 0; i < 100; ++i)
    {
      auto in = support::fuzz_instance(g, {.max_workers = 4, .max_tasks = 1});
      if (in.batch.empty())
        continue;
      const auto ctx = in.context(1);
      const auto leaves = schedule(in.batch, in.previous, in.known, ctx);
      REQUIRE(leaves.size() == 1);
      const Schedule want = support::greedy_oracle(in.batch, in.previous, in.known, ctx);
      CHECK(leaves[0].schedule == want);
    }
  }

  TEST_CASE("empty batch returns the previous schedule")
  {
    const Roster r({worker("a1", "A")});
    const auto t = task("p", {{"A", 1}});
    Schedule prev;
    prev.assign("p", TSO{{"a1"}, {0, 3}});
    MapSource attrs;
    PlanningContext ctx;
    ctx.workers = &r;
    ctx.attributes = &attrs;
    const auto leaves = schedule({}, prev, {{"p", t}}, ctx);
    REQUIRE(leaves.size() == 1);
    CHECK(leaves[0].schedule == prev);
  }

  TEST_CASE("unplaceable tasks stay pending in their branch")
  {
    const Roster r({worker("a1", "A")});
    MapSource attrs;
    PlanningContext ctx;
    ctx.workers = &r;
    ctx.attributes = &attrs;
    ctx.config.planning_horizon = 10;
    const auto placeable = task("t1", {{"A", 1}}, 3, 5);
    const auto impossible = task("t2", {{"B", 1}}, 3, 4);
    const auto leaves = schedule({placeable, impossible}, {}, {}, ctx);
    REQUIRE(!leaves.empty());
    CHECK(leaves[0].schedule.contains("t1"));
    CHECK_FALSE(leaves[0].schedule.contains("t2"));

    const auto none = schedule({impossible}, {}, {}, ctx);
    REQUIRE(none.size() == 1);
    CHECK(none[0].schedule.empty());
  }

  TEST_CASE("two tasks competing for one worker with a wide beam match the exhaustive tree")
  {
    const Roster r({worker("a1", "A", 10.0), worker("a2", "A", 30.0)});
    MapSource attrs;
    PlanningContext ctx;
    ctx.workers = &r;
    ctx.attributes = &attrs;
    ctx.config.beam_width = 50;
    auto t1 = task("t1", {{"A", 1}}, 3, 4);
    auto t2 = task("t2", {{"A", 1}}, 2, 2);
    t2.must_include = {"a1"};
    const auto leaves = schedule({t1, t2}, {}, {}, ctx);
    CHECK(leaves.front().score == support::exhaustive_best({t1, t2}, {}, {}, ctx));
    for (std::size_t i = 1; i < leaves.size(); ++i)
      CHECK(leaves[i - 1].score >= leaves[i].score);
  }

  TEST_CASE("criterion 8 queries reach the handler before scoring")
  {
    const Roster r({worker("a1", "A"), worker("a2", "A")});
    MapSource attrs;
    auto t = task("t", {{"A", 1}});
    t.required_skills["A"] = {"cpp"};
    PlanningContext ctx;
    ctx.workers = &r;
    ctx.attributes = &attrs;
    std::vector<SkillQuery> seen;
    ctx.on_queries = [&](const std::vector<SkillQuery>& q)
    {
      seen.insert(seen.end(), q.begin(), q.end());
      attrs.set("a1", AttributeKind::hard_skill, "cpp", 1);
      attrs.set("a2", AttributeKind::hard_skill, "cpp", 6);
      return true;
    };
    const auto leaves = schedule({t}, {}, {}, ctx);
    CHECK(seen == std::vector<SkillQuery>{{"a1", "cpp"}, {"a2", "cpp"}});
    // The answers arrived in time to steer the choice.
    CHECK(leaves.front().schedule.assignments.at("t").team == std::vector<WorkerId>{"a2"});
  }

  TEST_CASE("planning is deterministic")
  {
    std::mt19937_64 g(17);
    for (int i = 0; i < 30; ++i)
    {
      auto in = support::fuzz_instance(g, {.max_workers = 10, .max_tasks = 6});
      const auto ctx = in.context(3);
      const auto a = schedule(in.batch, in.previous, in.known, ctx);
      const auto b = schedule(in.batch, in.previous, in.known, ctx);
      REQUIRE(a.size() == b.size());
      for (std::size_t j = 0; j < a.size(); ++j)
        CHECK(json(a[j].schedule).dump() == json(b[j].schedule).dump());
    }
  }

  TEST_CASE("feasibility checker examples")
  {
    const Roster r({worker("a1", "A"), worker("b1", "B")});
    auto t1 = task("t1", {{"A", 1}}, 3);
    auto t2 = task("t2", {{"A", 1}}, 3);
    TaskBook book{{"t1", t1}, {"t2", t2}};

    Schedule wrong_len;
    wrong_len.assign("t1", TSO{{"a1"}, {0, 5}});
    const auto v1 = check_feasibility(wrong_len, book, r);
    REQUIRE(v1.size() == 1);
    CHECK(v1[0].kind == ViolationKind::duration);

    Schedule overlap;
    overlap.assign("t1", TSO{{"a1"}, {0, 3}});
    overlap.assign("t2", TSO{{"a1"}, {2, 5}});
    const auto v2 = check_feasibility(overlap, book, r);
    REQUIRE(!v2.empty());
    bool has_overlap = false;
    for (const auto& v : v2)
      has_overlap = has_overlap || v.kind == ViolationKind::fulltime_overlap;
    CHECK(has_overlap);

    Schedule wrong_role;
    wrong_role.assign("t1", TSO{{"b1"}, {0, 3}});
    CHECK(check_feasibility(wrong_role, book, r).at(0).kind == ViolationKind::requirements);

    auto late = t1;
    late.deadline = 2;
    Schedule ok;
    ok.assign("t1", TSO{{"a1"}, {0, 3}});
    const auto v3 = check_feasibility(ok, {{"t1", late}}, r);
    REQUIRE(v3.size() == 1);
    CHECK(v3[0].kind == ViolationKind::deadline);
    CHECK(hard_violations(ok, {{"t1", late}}, r).empty());

    auto excl = t1;
    excl.must_exclude = {"a1"};
    CHECK(check_feasibility(ok, {{"t1", excl}}, r).at(0).kind == ViolationKind::team_constraint);

    auto heavy = t1;
    heavy.timing = Timing::part_time;
    heavy.workload = 3.3;
    CHECK(check_feasibility(ok, {{"t1", heavy}}, r).at(0).kind == ViolationKind::workload);
  }

  TEST_CASE("checker agrees with the independent per-step scan")
  {
    std::mt19937_64 g(77);
    for (int i = 0; i < 300; ++i)
    {
      auto in = support::fuzz_instance(g, {.max_workers = 6, .max_tasks = 4});
      const TaskBook book = planning_scope(in.batch, in.previous, in.known);
      // Random, mostly infeasible assignments.
      Schedule s = in.previous;
      for (const auto& t : in.batch)
      {
        std::vector<WorkerId> team;
        for (const auto& w : in.workers)
          if (support::coin(g, 0.4))
            team.push_back(w.id);
        if (team.empty())
          continue;
        const Timestep a = support::rand_int(g, 0, 10);
        s.assign(t.id, TSO{team, {a, a + t.duration + (support::coin(g, 0.1) ? 1 : 0)}});
      }
      CHECK(hard_violations(s, book, in.workers).empty() ==
        support::independent_violations(s, book, in.workers).empty());
    }
  }

  TEST_CASE("returned schedules are feasible")
  {
    std::mt19937_64 g(1234);
    for (int i = 0; i < 150; ++i)
    {
      auto in = support::fuzz_instance(g, {.max_workers = 12, .max_tasks = 6});
      const auto ctx = in.context(support::rand_int(g, 1, 4));
      const TaskBook book = planning_scope(in.batch, in.previous, in.known);
      for (const auto& leaf : schedule(in.batch, in.previous, in.known, ctx))
      {
        CHECK(hard_violations(leaf.schedule, book, in.workers).empty());
        CHECK(support::independent_violations(leaf.schedule, book, in.workers).empty());
        for (const auto& [id, tso] : leaf.schedule.assignments)
          if (!in.previous.contains(id))
            CHECK(tso.interval.alpha >= in.now);
      }
    }
  }

  TEST_CASE("planning scope rejects inconsistent input")
  {
    const auto t = task("t", {{"A", 1}});
    Schedule prev;
    prev.assign("t", TSO{{"a1"}, {0, 3}});
    CHECK_THROWS_AS(planning_scope({t}, prev, {{"t", t}}), ValidationError);
    CHECK_THROWS_AS(planning_scope({}, prev, {}), ValidationError);
    CHECK_THROWS_AS(planning_scope({t, t}, {}, {}), ValidationError);
  }
}
