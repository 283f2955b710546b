#include <staffsim/attributes.hpp>

namespace staffsim {

std::string to_string(AttributeKind kind)
{
  switch (kind)
  {
    case AttributeKind::hard_skill: return "hard_skill";
    case AttributeKind::soft_skill: return "soft_skill";
    case AttributeKind::task_pref: return "task_pref";
    case AttributeKind::teammate_pref: return "teammate_pref";
  }
  return "unknown";
}

void to_json(json& j, AttributeKind v) { j = to_string(v); }

void from_json(const json& j, AttributeKind& v)
{
  const auto s = j.get<std::string>();
  for (auto kind : {AttributeKind::hard_skill, AttributeKind::soft_skill,
         AttributeKind::task_pref, AttributeKind::teammate_pref})
  {
    if (to_string(kind) == s)
    {
      v = kind;
      return;
    }
  }
  throw ValidationError("unknown attribute kind '" + s + "'");
}

void to_json(json& j, const AttributeKey& v)
{
  j = json{{"kind", v.kind}, {"name", v.name}};
}

void from_json(const json& j, AttributeKey& v)
{
  j.at("kind").get_to(v.kind);
  j.at("name").get_to(v.name);
}

std::optional<int> TruthSource::level(
  const WorkerId& worker, const AttributeKey& attribute) const
{
  const auto it = _truth->find(worker);
  if (it == _truth->end())
    return std::nullopt;
  const TrueAttributes& t = it->second;

  auto lookup = [&](const auto& map) -> std::optional<int>
  {
    const auto found = map.find(attribute.name);
    if (found == map.end())
      return std::nullopt;
    return found->second.value();
  };

  switch (attribute.kind)
  {
    case AttributeKind::hard_skill: return lookup(t.hard_skills);
    case AttributeKind::soft_skill: return lookup(t.soft_skills);
    case AttributeKind::task_pref: return lookup(t.task_preferences);
    case AttributeKind::teammate_pref: return lookup(t.teammate_preferences);
  }
  return std::nullopt;
}

} // namespace staffsim
