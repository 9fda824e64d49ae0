#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "surrogate/graph.hpp"

namespace surrogate::criteria {

using graph::PathDiagram;
using graph::VertexId;
using graph::VertexSet;

/// Whether the unobserved vertex `y` is the response (X -> ... -> Y) or the
/// treatment (Y -> ... -> X) of the effect being identified.
enum class LatentRole { Response, Treatment };

/// Roles for the single-latent checks: `y` is unobserved, everything else
/// observed, all pairwise disjoint.
struct RoleAssignment {
  VertexId x;
  VertexId y;
  VertexId u;
  VertexId w;
  VertexSet z;
  VertexSet t;
  LatentRole latent_role = LatentRole::Response;

  VertexSet observed_set() const;  // {x,u,w} ∪ z ∪ t
  bool operator==(const RoleAssignment&) const = default;
};

/// Roles for the two-latent check. t1 and t2 may overlap.
struct DoubleRoleAssignment {
  VertexId x1;
  VertexId x2;
  VertexId u1;
  VertexId w1;
  VertexId u2;
  VertexId w2;
  VertexSet z;
  VertexSet t1;
  VertexSet t2;

  /// Single-latent embedding around x1: x=u1, y=x1, u=u2, w=w1, t=t1.
  RoleAssignment first_embedding() const;
  /// Single-latent embedding around x2: x=u1, y=x2, u=u2, w=w2, t={w1} ∪ t2.
  RoleAssignment second_embedding() const;
  bool operator==(const DoubleRoleAssignment&) const = default;
};

struct ConditionCheck {
  std::string label;
  bool passed = false;
  std::string detail;
};

/// Separation witnesses of a satisfied single-latent check.
struct Witnesses {
  VertexSet r1;            // rows of {x,u,w} separated from t
  VertexSet r2;            // rows of {x,u,w} ∪ t separated from z
  VertexSet r2_vertex_pivots;  // r2 ∩ {x,u,w}
  VertexSet r2_t_block;        // r2 ∩ t
};

struct CriterionCertificate {
  std::string criterion;
  bool satisfied = false;
  std::optional<std::string> failed_condition;
  std::optional<Witnesses> witnesses;
  std::vector<CriterionCertificate> embedded;
  std::vector<ConditionCheck> checks;
  std::vector<std::string> notes;
};

enum class Strategy {
  BackdoorLatentResponse,
  BackdoorLatentTreatment,
  CivLatentResponse,
  DoubleLatent,
};

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);

inline constexpr std::string_view kConditionOne = "condition (1)";
inline constexpr std::string_view kConditionTwo = "condition (2)";
inline constexpr std::string_view kConditionThree = "condition (3)";
inline constexpr std::string_view kNonzeroConcentration = "nonzero-concentration assumption";

bool single_door(const PathDiagram& g, const VertexId& i, const VertexId& j, const VertexSet& z);

bool back_door(const PathDiagram& g, const VertexId& x, const VertexId& y, const VertexSet& t);

/// z and t must also sit outside descendants(x); the ratio σ_yz·t / σ_xz·t
/// is then the total effect of x on y.
bool conditional_iv(const PathDiagram& g, const VertexId& x, const VertexId& y,
                    const VertexId& z, const VertexSet& t);

/// Separation conditions for identifying the cross-products of an unobserved
/// `y` with S = {x,u,w} ∪ z ∪ t, checked on the ancestral moral graph of
/// S ∪ {y}. Throws Error(MalformedRoles) when the roles do not fit `g`.
CriterionCertificate theorem1_check(const PathDiagram& g, const RoleAssignment& roles);

/// Two embedded single-latent checks plus "{x1} ∪ z d-separates u1 from x2"
/// (waived when u1 is a conditional instrument for (x1, x2) given z).
CriterionCertificate theorem2_check(const PathDiagram& g, const DoubleRoleAssignment& roles);

/// The graphical certificate a strategy needs: theorem1_check plus the
/// back-door or conditional-IV condition, or theorem2_check for DoubleLatent.
CriterionCertificate strategy_certificate(const PathDiagram& g, Strategy strategy,
                                          const std::variant<RoleAssignment, DoubleRoleAssignment>& roles);

struct StrategyCandidate {
  Strategy strategy;
  std::variant<RoleAssignment, DoubleRoleAssignment> roles;
};

inline constexpr std::size_t kDefaultMaxSetSize = 4;

/// Exhaustive search over role assignments for the effect of `treatment` on
/// `response`. Which strategies are tried depends on which of the two is
/// latent; results are sorted by strategy then by role names.
std::vector<StrategyCandidate> find_strategies(const PathDiagram& g, const VertexId& treatment,
                                               const VertexId& response,
                                               std::size_t max_set_size = kDefaultMaxSetSize);

std::string describe(const RoleAssignment& r);
std::string describe(const DoubleRoleAssignment& r);

}  // namespace surrogate::criteria
