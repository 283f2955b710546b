#pragma once

// The nine staffing objectives and their weighted aggregation.
//
// Every criterion is normalized to [0,1] with higher meaning better; the
// minimization objectives (waiting time, cost, workload imbalance) are
// inverted internally.
//
//   1 average priority          4 cost                    7 teammate compatibility
//   2 priority-weighted waiting 5 active-time balance     8 hard-skill match
//   3 fraction scheduled        6 soft-skill diversity    9 task-preference fit

#include <array>
#include <map>
#include <optional>
#include <vector>

#include <staffsim/attributes.hpp>
#include <staffsim/domain.hpp>

namespace staffsim {

constexpr int criterion_count = 9;

/// A (worker, hard skill) pair criterion 8 needed but had no observation for.
struct SkillQuery
{
  WorkerId worker;
  std::string skill;

  friend auto operator<=>(const SkillQuery&, const SkillQuery&) = default;
  friend bool operator==(const SkillQuery&, const SkillQuery&) = default;
};

struct CriterionScore
{
  int id = 0;
  double value = 0.0;
  std::vector<SkillQuery> queries_raised;
};

class WeightVector
{
public:
  /// All nine criteria weighted 1.
  WeightVector();
  explicit WeightVector(std::map<int, double> c);

  double operator[](int id) const;
  const std::map<int, double>& values() const { return _c; }
  bool weighted(int id) const { return (*this)[id] != 0.0; }

  /// Throws ValidationError unless every id is in 1..9, every weight finite,
  /// and at least one weight nonzero.
  void validate() const;

  friend bool operator==(const WeightVector&, const WeightVector&) = default;

private:
  std::map<int, double> _c;
};

void to_json(json& j, const WeightVector& v);
void from_json(const json& j, WeightVector& v);

/// Everything a criterion may read besides the schedule itself.
struct CriteriaContext
{
  /// T: the tasks in scope. Every scheduled task must be present.
  const TaskBook* tasks = nullptr;
  const Roster* workers = nullptr;
  const AttributeSource* attributes = nullptr;
  /// Order of the soft-skill vector used by criterion 6.
  std::vector<std::string> soft_skills;
  int max_priority = 5;
  /// H in the waiting-time normalization.
  Timestep horizon_length = 200;
};

CriterionScore eval_avg_priority(const Schedule& s, const CriteriaContext& ctx);
CriterionScore eval_waiting(const Schedule& s, const CriteriaContext& ctx);
CriterionScore eval_task_count(const Schedule& s, const CriteriaContext& ctx);
CriterionScore eval_cost(const Schedule& s, const CriteriaContext& ctx);
CriterionScore eval_balance(const Schedule& s, const CriteriaContext& ctx);
CriterionScore eval_soft_skill_diversity(const Schedule& s, const CriteriaContext& ctx);
CriterionScore eval_teammate_compat(const Schedule& s, const CriteriaContext& ctx);
CriterionScore eval_hard_skill_match(const Schedule& s, const CriteriaContext& ctx);
CriterionScore eval_task_pref_fit(const Schedule& s, const CriteriaContext& ctx);

CriterionScore evaluate_criterion(int id, const Schedule& s, const CriteriaContext& ctx);

/// Scores of every criterion, indexed by id - 1.
std::array<CriterionScore, criterion_count> evaluate_all(
  const Schedule& s, const CriteriaContext& ctx);

/// (1 - cosine similarity) / 2 for two soft-skill vectors; 0.5 when either
/// vector is zero.
double soft_skill_pair_value(const std::vector<double>& a, const std::vector<double>& b);

/// Sum(c_i * u_i) / Sum(|c_i|). Throws ValidationError for an all-zero weight
/// vector or when a weighted criterion has no score.
double aggregate_V(const std::map<int, double>& scores, const WeightVector& weights);

/// Evaluates only the weighted criteria and aggregates them. Queries raised
/// by criterion 8 are appended to `queries` when it is non-null.
double score_schedule(
  const Schedule& s,
  const CriteriaContext& ctx,
  const WeightVector& weights,
  std::vector<SkillQuery>* queries = nullptr);

} // namespace staffsim
