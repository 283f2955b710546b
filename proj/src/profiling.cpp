#include <staffsim/profiling.hpp>

#include <cmath>

namespace staffsim {

std::string to_string(FeedbackSource source)
{
  switch (source)
  {
    case FeedbackSource::self_eval: return "self_eval";
    case FeedbackSource::task_proposal: return "task_proposal";
    case FeedbackSource::performance_review: return "performance_review";
    case FeedbackSource::peer_feedback: return "peer_feedback";
  }
  return "unknown";
}

void to_json(json& j, FeedbackSource v) { j = to_string(v); }

void from_json(const json& j, FeedbackSource& v)
{
  const auto s = j.get<std::string>();
  for (auto src : {FeedbackSource::self_eval, FeedbackSource::task_proposal,
         FeedbackSource::performance_review, FeedbackSource::peer_feedback})
  {
    if (to_string(src) == s)
    {
      v = src;
      return;
    }
  }
  throw ValidationError("unknown feedback source '" + s + "'");
}

//==============================================================================
void ObservationRecord::validate() const
{
  if (target.empty() || observer.empty())
    throw ValidationError("observation needs a target and an observer");
  const Scale scale = scale_of(attribute.kind);
  if (!in_scale(level, scale))
  {
    throw ValidationError(
      "observation level " + std::to_string(level) + " outside the " +
      (scale == Scale::skill ? "skill" : "preference") + " scale for " +
      to_string(attribute.kind) + " '" + attribute.name + "'");
  }
  if (!is_skill(attribute.kind) && observer != target)
    throw ValidationError("preference observations must be reported by their owner");
}

void to_json(json& j, const ObservationRecord& v)
{
  j = json{
    {"target", v.target},
    {"observer", v.observer},
    {"attribute", v.attribute},
    {"level", v.level},
    {"timestamp", v.timestamp},
    {"source", v.source},
    {"provenance", v.provenance},
  };
}

void from_json(const json& j, ObservationRecord& v)
{
  j.at("target").get_to(v.target);
  j.at("observer").get_to(v.observer);
  j.at("attribute").get_to(v.attribute);
  j.at("level").get_to(v.level);
  j.at("timestamp").get_to(v.timestamp);
  j.at("source").get_to(v.source);
  v.provenance = j.value("provenance", std::string{});
}

void to_json(json& j, const AttributeEstimate& v)
{
  j = json{
    {"mean", v.mean},
    {"rounded", v.rounded},
    {"observation_count", v.observation_count},
    {"last_update", v.last_update},
  };
}

void from_json(const json& j, AttributeEstimate& v)
{
  j.at("mean").get_to(v.mean);
  j.at("rounded").get_to(v.rounded);
  j.at("observation_count").get_to(v.observation_count);
  j.at("last_update").get_to(v.last_update);
}

//==============================================================================
double ObserverWeights::weight(const WorkerId& observer, const WorkerId& target) const
{
  if (observer == review_observer)
    return review;
  if (observer == target)
    return self;
  return peer;
}

void ObserverWeights::validate() const
{
  for (double w : {review, self, peer})
  {
    if (!(w > 0.0) || !std::isfinite(w))
      throw ValidationError("observer weights must be positive and finite");
  }
}

void to_json(json& j, const ObserverWeights& v)
{
  j = json{{"review", v.review}, {"self", v.self}, {"peer", v.peer}};
}

void from_json(const json& j, ObserverWeights& v)
{
  v.review = j.value("review", 1.0);
  v.self = j.value("self", 0.8);
  v.peer = j.value("peer", 0.5);
  v.validate();
}

//==============================================================================
std::optional<AttributeEstimate> estimate_attribute(
  std::span<const ObservationRecord> history,
  AttributeKind kind,
  Timestep now,
  double gamma,
  const ObserverWeights& weights)
{
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw ValidationError("discount gamma must lie in (0, 1]");
  if (history.empty())
    return std::nullopt;

  double num = 0.0;
  double den = 0.0;
  Timestep last = history.front().timestamp;
  for (const auto& obs : history)
  {
    if (obs.timestamp > now)
      throw ValidationError("observation timestamp lies in the future");
    double w = std::pow(gamma, static_cast<double>(now - obs.timestamp));
    if (is_skill(kind))
      w *= weights.weight(obs.observer, obs.target);
    num += w * obs.level;
    den += w;
    last = std::max(last, obs.timestamp);
  }

  AttributeEstimate e;
  e.mean = num / den;
  e.rounded = round_to_level(e.mean, scale_of(kind));
  e.observation_count = static_cast<int>(history.size());
  e.last_update = last;
  return e;
}

//==============================================================================
ProfileStore::ProfileStore(double gamma, ObserverWeights weights)
: _gamma(gamma), _weights(weights)
{
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw ValidationError("discount gamma must lie in (0, 1]");
  _weights.validate();
}

const AttributeEstimate& ProfileStore::ingest(const ObservationRecord& obs, Timestep now)
{
  obs.validate();
  if (obs.timestamp > now)
    throw ValidationError("observation timestamp lies in the future");

  Entry& entry = _entries[Key{obs.target, obs.attribute}];
  entry.history.push_back(obs);
  entry.estimate =
    *estimate_attribute(entry.history, obs.attribute.kind, now, _gamma, _weights);
  return entry.estimate;
}

const AttributeEstimate* ProfileStore::estimate(
  const WorkerId& worker, const AttributeKey& key) const
{
  const auto it = _entries.find(Key{worker, key});
  return it == _entries.end() ? nullptr : &it->second.estimate;
}

std::span<const ObservationRecord> ProfileStore::history(
  const WorkerId& worker, const AttributeKey& key) const
{
  const auto it = _entries.find(Key{worker, key});
  if (it == _entries.end())
    return {};
  return it->second.history;
}

std::optional<int> ProfileStore::level(
  const WorkerId& worker, const AttributeKey& attribute) const
{
  const auto* e = estimate(worker, attribute);
  if (!e)
    return std::nullopt;
  return e->rounded;
}

DefaultedValue ProfileStore::query_or_default(
  const WorkerId& worker, const AttributeKey& key) const
{
  const Scale scale = scale_of(key.kind);
  const auto* e = estimate(worker, key);
  if (!e)
    return {level_to_unit(scale_median(scale), scale), false};
  return {level_to_unit(e->rounded, scale), true};
}

std::size_t ProfileStore::observation_count() const
{
  std::size_t n = 0;
  for (const auto& [key, entry] : _entries)
    n += entry.history.size();
  return n;
}

void to_json(json& j, const ProfileStore& v)
{
  json attrs = json::array();
  for (const auto& [key, entry] : v._entries)
  {
    attrs.push_back(json{
      {"worker", key.first},
      {"attribute", key.second},
      {"history", entry.history},
      {"estimate", entry.estimate},
    });
  }
  j = json{
    {"gamma", v._gamma},
    {"observer_weights", v._weights},
    {"attributes", attrs},
  };
}

void from_json(const json& j, ProfileStore& v)
{
  ProfileStore store(j.at("gamma").get<double>(), j.at("observer_weights").get<ObserverWeights>());
  for (const auto& a : j.at("attributes"))
  {
    ProfileStore::Entry entry;
    a.at("history").get_to(entry.history);
    for (const auto& obs : entry.history)
      obs.validate();
    a.at("estimate").get_to(entry.estimate);
    store._entries.emplace(
      ProfileStore::Key{a.at("worker").get<WorkerId>(), a.at("attribute").get<AttributeKey>()},
      std::move(entry));
  }
  v = std::move(store);
}

//==============================================================================
void to_json(json& j, const AccuracyReport& v)
{
  json kinds = json::object();
  for (const auto& [kind, acc] : v.by_kind)
  {
    kinds[to_string(kind)] = json{
      {"total", acc.total},
      {"unknown", acc.unknown},
      {"correct", acc.correct},
      {"incorrect", acc.incorrect},
      {"mae", acc.mae},
    };
  }
  j = json{
    {"by_kind", kinds},
    {"unknown", v.unknown},
    {"correct", v.correct},
    {"incorrect", v.incorrect},
  };
}

AccuracyReport accuracy_report(
  const ProfileStore& store, const std::map<WorkerId, TrueAttributes>& truth)
{
  AccuracyReport report;
  for (auto kind : {AttributeKind::hard_skill, AttributeKind::soft_skill,
         AttributeKind::task_pref, AttributeKind::teammate_pref})
    report.by_kind[kind] = KindAccuracy{};

  std::map<AttributeKind, double> abs_error;

  auto score = [&](const WorkerId& w, AttributeKind kind, const std::string& name, int truth_level)
  {
    KindAccuracy& acc = report.by_kind[kind];
    ++acc.total;
    const auto* e = store.estimate(w, {kind, name});
    int level = scale_median(scale_of(kind));
    if (!e)
    {
      ++acc.unknown;
      ++report.unknown;
    }
    else
    {
      level = e->rounded;
      if (level == truth_level)
      {
        ++acc.correct;
        ++report.correct;
      }
      else
      {
        ++acc.incorrect;
        ++report.incorrect;
      }
    }
    abs_error[kind] += std::abs(level - truth_level);
  };

  for (const auto& [w, t] : truth)
  {
    for (const auto& [name, level] : t.hard_skills)
      score(w, AttributeKind::hard_skill, name, level.value());
    for (const auto& [name, level] : t.soft_skills)
      score(w, AttributeKind::soft_skill, name, level.value());
    for (const auto& [name, level] : t.task_preferences)
      score(w, AttributeKind::task_pref, name, level.value());
    for (const auto& [name, level] : t.teammate_preferences)
      score(w, AttributeKind::teammate_pref, name, level.value());
  }

  for (auto& [kind, acc] : report.by_kind)
  {
    if (acc.total > 0)
      acc.mae = abs_error[kind] / acc.total;
  }
  return report;
}

} // namespace staffsim
