#include <staffsim/criteria.hpp>

#include <algorithm>
#include <cmath>

namespace staffsim {

namespace {

const TaskSpec& task_of(const CriteriaContext& ctx, const TaskId& id)
{
  const auto it = ctx.tasks->find(id);
  if (it == ctx.tasks->end())
    throw ValidationError("schedule references task '" + id + "' outside the task book");
  return it->second;
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

double unit_or_default(
  const CriteriaContext& ctx, const WorkerId& w, const AttributeKey& key, bool* known)
{
  const auto level = ctx.attributes->level(w, key);
  if (known)
    *known = level.has_value();
  const Scale scale = scale_of(key.kind);
  return level_to_unit(level.value_or(scale_median(scale)), scale);
}

std::vector<double> soft_vector(const CriteriaContext& ctx, const WorkerId& w)
{
  std::vector<double> v;
  v.reserve(ctx.soft_skills.size());
  for (const auto& name : ctx.soft_skills)
  {
    const auto level = ctx.attributes->level(w, {AttributeKind::soft_skill, name});
    v.push_back(static_cast<double>(level.value_or(scale_median(Scale::skill))));
  }
  return v;
}

} // namespace

//==============================================================================
WeightVector::WeightVector()
{
  for (int i = 1; i <= criterion_count; ++i)
    _c[i] = 1.0;
}

WeightVector::WeightVector(std::map<int, double> c) : _c(std::move(c)) {}

double WeightVector::operator[](int id) const
{
  const auto it = _c.find(id);
  return it == _c.end() ? 0.0 : it->second;
}

void WeightVector::validate() const
{
  bool any = false;
  for (const auto& [id, w] : _c)
  {
    if (id < 1 || id > criterion_count)
      throw ValidationError("weights: criterion id " + std::to_string(id) + " outside 1..9");
    if (!std::isfinite(w))
      throw ValidationError("weights: criterion " + std::to_string(id) + " weight not finite");
    any = any || w != 0.0;
  }
  if (!any)
    throw ValidationError("degenerate weight vector");
}

void to_json(json& j, const WeightVector& v)
{
  j = json::object();
  for (const auto& [id, w] : v.values())
    j[std::to_string(id)] = w;
}

void from_json(const json& j, WeightVector& v)
{
  std::map<int, double> c;
  for (const auto& [key, value] : j.items())
  {
    int id = 0;
    try
    {
      std::size_t pos = 0;
      id = std::stoi(key, &pos);
      if (pos != key.size())
        throw std::invalid_argument(key);
    }
    catch (const std::exception&)
    {
      throw ValidationError("weights: key '" + key + "' is not a criterion id");
    }
    c[id] = value.get<double>();
  }
  v = WeightVector(std::move(c));
  v.validate();
}

//==============================================================================
CriterionScore eval_avg_priority(const Schedule& s, const CriteriaContext& ctx)
{
  if (s.empty())
    return {1, 0.0, {}};
  double sum = 0.0;
  for (const auto& [id, tso] : s.assignments)
    sum += task_of(ctx, id).priority;
  const double mean = sum / static_cast<double>(s.size());
  return {1, clamp01(mean / ctx.max_priority), {}};
}

CriterionScore eval_waiting(const Schedule& s, const CriteriaContext& ctx)
{
  if (s.empty())
    return {2, 1.0, {}};
  double weighted_wait = 0.0;
  double weight = 0.0;
  for (const auto& [id, tso] : s.assignments)
  {
    const TaskSpec& t = task_of(ctx, id);
    weighted_wait += t.priority * static_cast<double>(tso.interval.alpha - t.arrival_time);
    weight += t.priority;
  }
  const double denom = weight * static_cast<double>(ctx.horizon_length);
  if (denom <= 0.0)
    return {2, 1.0, {}};
  return {2, 1.0 - clamp01(weighted_wait / denom), {}};
}

CriterionScore eval_task_count(const Schedule& s, const CriteriaContext& ctx)
{
  if (ctx.tasks->empty())
    return {3, 0.0, {}};
  std::size_t assigned = 0;
  for (const auto& [id, tso] : s.assignments)
    assigned += ctx.tasks->count(id);
  return {3, static_cast<double>(assigned) / static_cast<double>(ctx.tasks->size()), {}};
}

CriterionScore eval_cost(const Schedule& s, const CriteriaContext& ctx)
{
  double reference = 0.0;
  const double max_salary = ctx.workers->max_salary();
  for (const auto& [id, t] : *ctx.tasks)
    reference += static_cast<double>(t.duration) * t.team_size() * max_salary;

  double cost = 0.0;
  for (const auto& [id, tso] : s.assignments)
  {
    const TaskSpec& t = task_of(ctx, id);
    for (const auto& w : tso.team)
      cost += ctx.workers->at(w).salary * static_cast<double>(t.duration);
  }
  if (reference <= 0.0)
    return {4, 1.0, {}};
  return {4, 1.0 - clamp01(cost / reference), {}};
}

CriterionScore eval_balance(const Schedule& s, const CriteriaContext& ctx)
{
  std::map<WorkerId, double> active;
  for (const auto& w : *ctx.workers)
    active[w.id] = 0.0;
  for (const auto& [id, tso] : s.assignments)
  {
    const TaskSpec& t = task_of(ctx, id);
    for (const auto& w : tso.team)
      active[w] += static_cast<double>(t.duration);
  }
  if (active.empty())
    return {5, 1.0, {}};

  double mean = 0.0;
  for (const auto& [w, a] : active)
    mean += a;
  mean /= static_cast<double>(active.size());
  if (mean == 0.0)
    return {5, 1.0, {}};

  double var = 0.0;
  for (const auto& [w, a] : active)
    var += (a - mean) * (a - mean);
  var /= static_cast<double>(active.size());
  return {5, 1.0 - clamp01(std::sqrt(var) / (mean + 1e-9)), {}};
}

double soft_skill_pair_value(const std::vector<double>& a, const std::vector<double>& b)
{
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i)
  {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0)
    return 0.5;
  const double cosine = std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
  return (1.0 - cosine) / 2.0;
}

CriterionScore eval_soft_skill_diversity(const Schedule& s, const CriteriaContext& ctx)
{
  if (s.empty())
    return {6, 0.5, {}};
  double total = 0.0;
  for (const auto& [id, tso] : s.assignments)
  {
    const auto& team = tso.team;
    if (team.size() < 2)
    {
      total += 0.5;
      continue;
    }
    std::vector<std::vector<double>> vectors;
    vectors.reserve(team.size());
    for (const auto& w : team)
      vectors.push_back(soft_vector(ctx, w));

    double sum = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i < team.size(); ++i)
    {
      for (std::size_t j = i + 1; j < team.size(); ++j)
      {
        sum += soft_skill_pair_value(vectors[i], vectors[j]);
        ++pairs;
      }
    }
    total += sum / pairs;
  }
  return {6, total / static_cast<double>(s.size()), {}};
}

CriterionScore eval_teammate_compat(const Schedule& s, const CriteriaContext& ctx)
{
  if (s.empty())
    return {7, 0.5, {}};
  double total = 0.0;
  for (const auto& [id, tso] : s.assignments)
  {
    const auto& team = tso.team;
    if (team.size() < 2)
    {
      total += 0.5;
      continue;
    }
    double sum = 0.0;
    int pairs = 0;
    for (const auto& o : team)
    {
      for (const auto& w : team)
      {
        if (o == w)
          continue;
        sum += unit_or_default(ctx, o, {AttributeKind::teammate_pref, w}, nullptr);
        ++pairs;
      }
    }
    total += sum / pairs;
  }
  return {7, total / static_cast<double>(s.size()), {}};
}

CriterionScore eval_hard_skill_match(const Schedule& s, const CriteriaContext& ctx)
{
  CriterionScore out{8, 0.5, {}};
  double total = 0.0;
  int pairs = 0;
  for (const auto& [id, tso] : s.assignments)
  {
    const TaskSpec& t = task_of(ctx, id);
    for (const auto& w : tso.team)
    {
      const WorkerState& worker = ctx.workers->at(w);
      const auto skills = t.required_skills.find(worker.role);
      ++pairs;
      if (skills == t.required_skills.end() || skills->second.empty())
      {
        total += 0.5;
        continue;
      }
      double sum = 0.0;
      for (const auto& skill : skills->second)
      {
        bool known = false;
        sum += unit_or_default(ctx, w, {AttributeKind::hard_skill, skill}, &known);
        if (!known)
          out.queries_raised.push_back({w, skill});
      }
      total += sum / static_cast<double>(skills->second.size());
    }
  }
  if (pairs > 0)
    out.value = total / pairs;
  std::sort(out.queries_raised.begin(), out.queries_raised.end());
  out.queries_raised.erase(
    std::unique(out.queries_raised.begin(), out.queries_raised.end()),
    out.queries_raised.end());
  return out;
}

CriterionScore eval_task_pref_fit(const Schedule& s, const CriteriaContext& ctx)
{
  double total = 0.0;
  int pairs = 0;
  for (const auto& [id, tso] : s.assignments)
  {
    const TaskSpec& t = task_of(ctx, id);
    for (const auto& w : tso.team)
    {
      ++pairs;
      if (t.topics.empty())
      {
        total += 0.5;
        continue;
      }
      double sum = 0.0;
      for (const auto& topic : t.topics)
        sum += unit_or_default(ctx, w, {AttributeKind::task_pref, topic}, nullptr);
      total += sum / static_cast<double>(t.topics.size());
    }
  }
  return {9, pairs > 0 ? total / pairs : 0.5, {}};
}

//==============================================================================
CriterionScore evaluate_criterion(int id, const Schedule& s, const CriteriaContext& ctx)
{
  switch (id)
  {
    case 1: return eval_avg_priority(s, ctx);
    case 2: return eval_waiting(s, ctx);
    case 3: return eval_task_count(s, ctx);
    case 4: return eval_cost(s, ctx);
    case 5: return eval_balance(s, ctx);
    case 6: return eval_soft_skill_diversity(s, ctx);
    case 7: return eval_teammate_compat(s, ctx);
    case 8: return eval_hard_skill_match(s, ctx);
    case 9: return eval_task_pref_fit(s, ctx);
  }
  throw ValidationError("criterion id " + std::to_string(id) + " outside 1..9");
}

std::array<CriterionScore, criterion_count> evaluate_all(
  const Schedule& s, const CriteriaContext& ctx)
{
  std::array<CriterionScore, criterion_count> out;
  for (int id = 1; id <= criterion_count; ++id)
    out[id - 1] = evaluate_criterion(id, s, ctx);
  return out;
}

double aggregate_V(const std::map<int, double>& scores, const WeightVector& weights)
{
  double num = 0.0;
  double den = 0.0;
  for (const auto& [id, c] : weights.values())
  {
    if (c == 0.0)
      continue;
    const auto it = scores.find(id);
    if (it == scores.end())
      throw ValidationError("criterion " + std::to_string(id) + " is weighted but has no score");
    num += c * it->second;
    den += std::abs(c);
  }
  if (den == 0.0)
    throw ValidationError("degenerate weight vector");
  return num / den;
}

double score_schedule(
  const Schedule& s,
  const CriteriaContext& ctx,
  const WeightVector& weights,
  std::vector<SkillQuery>* queries)
{
  std::map<int, double> scores;
  for (const auto& [id, c] : weights.values())
  {
    if (c == 0.0)
      continue;
    CriterionScore score = evaluate_criterion(id, s, ctx);
    if (queries)
    {
      queries->insert(
        queries->end(), score.queries_raised.begin(), score.queries_raised.end());
    }
    scores[id] = score.value;
  }
  return aggregate_V(scores, weights);
}

} // namespace staffsim
