#pragma once

// Worker profiling: an annotated history of attribute observations per
// (worker, attribute) and a continuously maintained estimate for each.
//
// Estimates are discounted weighted averages of the observed levels,
// normalized by the weight sum. Each observation weighs gamma^(now - h);
// skill observations are further scaled by the authority of their observer.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <staffsim/attributes.hpp>
#include <staffsim/domain.hpp>

namespace staffsim {

/// Pseudo-observer id for performance reviews.
inline const WorkerId review_observer = "review";

enum class FeedbackSource { self_eval, task_proposal, performance_review, peer_feedback };

std::string to_string(FeedbackSource source);
void to_json(json& j, FeedbackSource v);
void from_json(const json& j, FeedbackSource& v);

struct ObservationRecord
{
  WorkerId target;
  WorkerId observer;
  AttributeKey attribute;
  int level = 0;
  Timestep timestamp = 0;
  FeedbackSource source = FeedbackSource::self_eval;
  /// Opaque reference to the event the observation was extracted from.
  std::string provenance;

  /// Throws ValidationError for an out-of-scale level or a preference
  /// observed by someone other than its owner.
  void validate() const;

  friend bool operator==(const ObservationRecord&, const ObservationRecord&) = default;
};

void to_json(json& j, const ObservationRecord& v);
void from_json(const json& j, ObservationRecord& v);

struct AttributeEstimate
{
  double mean = 0.0;
  int rounded = 0;
  int observation_count = 0;
  Timestep last_update = 0;

  friend bool operator==(const AttributeEstimate&, const AttributeEstimate&) = default;
};

void to_json(json& j, const AttributeEstimate& v);
void from_json(const json& j, AttributeEstimate& v);

/// Authority of each observer class when averaging skill observations.
struct ObserverWeights
{
  double review = 1.0;
  double self = 0.8;
  double peer = 0.5;

  double weight(const WorkerId& observer, const WorkerId& target) const;
  void validate() const;

  friend bool operator==(const ObserverWeights&, const ObserverWeights&) = default;
};

void to_json(json& j, const ObserverWeights& v);
void from_json(const json& j, ObserverWeights& v);

/// Weighted average of a history; empty when the history is empty (the
/// attribute is unknown). gamma must lie in (0, 1].
std::optional<AttributeEstimate> estimate_attribute(
  std::span<const ObservationRecord> history,
  AttributeKind kind,
  Timestep now,
  double gamma,
  const ObserverWeights& weights);

struct DefaultedValue
{
  double unit = 0.5;
  bool known = false;
};

class ProfileStore final : public AttributeSource
{
public:
  explicit ProfileStore(double gamma = 0.99, ObserverWeights weights = {});

  /// Appends the observation and recomputes that attribute's estimate.
  const AttributeEstimate& ingest(const ObservationRecord& obs, Timestep now);

  /// nullptr when nothing has been observed.
  const AttributeEstimate* estimate(const WorkerId& worker, const AttributeKey& key) const;
  std::span<const ObservationRecord> history(
    const WorkerId& worker, const AttributeKey& key) const;

  /// Rounded estimate, or empty when unknown.
  std::optional<int> level(
    const WorkerId& worker, const AttributeKey& attribute) const override;

  /// Unit value of the estimate; the scale's median when unknown.
  DefaultedValue query_or_default(const WorkerId& worker, const AttributeKey& key) const;

  double gamma() const { return _gamma; }
  const ObserverWeights& observer_weights() const { return _weights; }
  std::size_t attribute_count() const { return _entries.size(); }
  std::size_t observation_count() const;

  friend void to_json(json& j, const ProfileStore& v);
  friend void from_json(const json& j, ProfileStore& v);

private:
  struct Entry
  {
    std::vector<ObservationRecord> history;
    AttributeEstimate estimate;
  };

  using Key = std::pair<WorkerId, AttributeKey>;

  double _gamma;
  ObserverWeights _weights;
  std::map<Key, Entry> _entries;
};

//==============================================================================
struct KindAccuracy
{
  int total = 0;
  int unknown = 0;
  int correct = 0;
  int incorrect = 0;
  /// Mean |level - true level| with unknown attributes at the scale median.
  double mae = 0.0;
};

struct AccuracyReport
{
  std::map<AttributeKind, KindAccuracy> by_kind;
  int unknown = 0;
  int correct = 0;
  int incorrect = 0;
};

void to_json(json& j, const AccuracyReport& v);

/// Scores the store's rounded estimates against the ground truth of every
/// attribute the truth defines.
AccuracyReport accuracy_report(
  const ProfileStore& store, const std::map<WorkerId, TrueAttributes>& truth);

} // namespace staffsim
