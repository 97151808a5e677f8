#include "aerje/relations.hpp"

namespace aerje {

namespace {
constexpr std::array<std::string_view, kRelationTypeCount> kNames = {
    "function similarity",  "behavior difference",   "logic constraint",
    "type conversion",      "function collaboration", "efficiency comparison",
    "function replace",
};
}  // namespace

const std::array<RelationType, kRelationTypeCount>& all_relation_types() {
  static const std::array<RelationType, kRelationTypeCount> all = {
      RelationType::FunctionSimilarity,    RelationType::BehaviorDifference,
      RelationType::LogicConstraint,       RelationType::TypeConversion,
      RelationType::FunctionCollaboration, RelationType::EfficiencyComparison,
      RelationType::FunctionReplace,
  };
  return all;
}

std::string_view relation_name(RelationType t) {
  return kNames[static_cast<size_t>(t)];
}

std::optional<RelationType> relation_from_name(std::string_view name) {
  for (size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<RelationType>(i);
  }
  return std::nullopt;
}

bool relation_is_symmetric(RelationType t) {
  switch (t) {
    case RelationType::FunctionSimilarity:
    case RelationType::BehaviorDifference:
    case RelationType::FunctionCollaboration:
      return true;
    default:
      return false;
  }
}

}  // namespace aerje
