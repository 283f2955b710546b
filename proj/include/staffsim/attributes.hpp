#pragma once

// Names latent worker attributes and abstracts where their levels come from:
// the agent's estimates during planning, or ground truth in the outcome oracle.

#include <compare>
#include <map>
#include <optional>
#include <string>

#include <staffsim/domain.hpp>

namespace staffsim {

enum class AttributeKind { hard_skill, soft_skill, task_pref, teammate_pref };

constexpr Scale scale_of(AttributeKind kind)
{
  return (kind == AttributeKind::hard_skill || kind == AttributeKind::soft_skill)
    ? Scale::skill
    : Scale::preference;
}

constexpr bool is_skill(AttributeKind kind) { return scale_of(kind) == Scale::skill; }

std::string to_string(AttributeKind kind);
void to_json(json& j, AttributeKind v);
void from_json(const json& j, AttributeKind& v);

/// `name` is a skill name, a topic tag, or a worker id for teammate_pref.
struct AttributeKey
{
  AttributeKind kind = AttributeKind::hard_skill;
  std::string name;

  friend auto operator<=>(const AttributeKey&, const AttributeKey&) = default;
  friend bool operator==(const AttributeKey&, const AttributeKey&) = default;
};

void to_json(json& j, const AttributeKey& v);
void from_json(const json& j, AttributeKey& v);

class AttributeSource
{
public:
  virtual ~AttributeSource() = default;

  /// Discrete level of `worker`'s attribute, or empty when unknown.
  virtual std::optional<int> level(
    const WorkerId& worker, const AttributeKey& attribute) const = 0;
};

/// Reads the hidden true attributes of every worker.
class TruthSource final : public AttributeSource
{
public:
  explicit TruthSource(const std::map<WorkerId, TrueAttributes>& truth) : _truth(&truth) {}

  std::optional<int> level(
    const WorkerId& worker, const AttributeKey& attribute) const override;

private:
  const std::map<WorkerId, TrueAttributes>* _truth;
};

/// Knows nothing; every attribute resolves to its default.
class EmptySource final : public AttributeSource
{
public:
  std::optional<int> level(const WorkerId&, const AttributeKey&) const override
  {
    return std::nullopt;
  }
};

} // namespace staffsim
