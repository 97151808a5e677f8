#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace aerje {

// The closed set of API semantic relation types, in canonical order.
// Serialized names are the lowercase space-separated forms ("function replace").
enum class RelationType {
  FunctionSimilarity = 0,
  BehaviorDifference,
  LogicConstraint,
  TypeConversion,
  FunctionCollaboration,
  EfficiencyComparison,
  FunctionReplace,
};

inline constexpr int kRelationTypeCount = 7;

const std::array<RelationType, kRelationTypeCount>& all_relation_types();

std::string_view relation_name(RelationType t);
std::optional<RelationType> relation_from_name(std::string_view name);

// Symmetric types are stored and compared in one canonical direction.
// Similarity, difference and collaboration hold regardless of which mention
// is named first; the other four are directional.
bool relation_is_symmetric(RelationType t);

inline int relation_index(RelationType t) { return static_cast<int>(t); }

}  // namespace aerje
