#include "surrogate/fixtures.hpp"

namespace surrogate::fixtures {

using criteria::DoubleRoleAssignment;
using criteria::LatentRole;
using criteria::RoleAssignment;
using criteria::Strategy;

const Fixture& fixture_a() {
  static const Fixture f{
      "A",
      "# latent response with back-door set {Z}\n"
      "observed Z X U W T\n"
      "latent Y\n"
      "Z -> X : 0.5\n"
      "Z -> Y : 0.4\n"
      "X -> Y : 0.7\n"
      "Y -> U : 0.8\n"
      "Y -> W : 0.6\n"
      "Y -> T : 0.5\n",
      Strategy::BackdoorLatentResponse,
      RoleAssignment{"X", "Y", "U", "W", {"Z"}, {"T"}, LatentRole::Response},
      "X",
      "Y",
      0.49};
  return f;
}

const Fixture& fixture_b() {
  static const Fixture f{
      "B",
      "# latent treatment with back-door set {Z}\n"
      "observed Z X U W T\n"
      "latent Y\n"
      "Z -> Y : 0.6\n"
      "Z -> X : 0.3\n"
      "Y -> X : 0.7\n"
      "Y -> U : 0.8\n"
      "Y -> W : 0.6\n"
      "Y -> T : 0.5\n",
      Strategy::BackdoorLatentTreatment,
      RoleAssignment{"X", "Y", "U", "W", {"Z"}, {"T"}, LatentRole::Treatment},
      "Y",
      "X",
      0.49};
  return f;
}

const Fixture& fixture_c() {
  static const Fixture f{
      "C",
      "# latent response confounded with X; Z instruments X given T\n"
      "observed T Z X U W\n"
      "latent Y\n"
      "T -> Z : 0.5\n"
      "T -> Y : 0.4\n"
      "Z -> X : 0.6\n"
      "X -> Y : 0.7\n"
      "X <-> Y : 0.1\n"
      "Y -> U : 0.8\n"
      "Y -> W : 0.5\n",
      Strategy::CivLatentResponse,
      RoleAssignment{"X", "Y", "U", "W", {"Z"}, {"T"}, LatentRole::Response},
      "X",
      "Y",
      0.49};
  return f;
}

const Fixture& fixture_d() {
  static const Fixture f{
      "D",
      "# latent treatment X1 and latent response X2\n"
      "observed Z U1 W1 U2 W2\n"
      "latent X1 X2\n"
      "Z -> X1 : 0.5\n"
      "Z -> X2 : 0.3\n"
      "X1 -> X2 : 0.6\n"
      "X1 -> U1 : 0.8\n"
      "X1 -> W1 : 0.7\n"
      "X2 -> U2 : 0.8\n"
      "X2 -> W2 : 0.6\n",
      Strategy::DoubleLatent,
      DoubleRoleAssignment{"X1", "X2", "U1", "W1", "U2", "W2", {"Z"}, {}, {}},
      "X1",
      "X2",
      0.36};
  return f;
}

const std::vector<const Fixture*>& all() {
  static const std::vector<const Fixture*> v{&fixture_a(), &fixture_b(), &fixture_c(), &fixture_d()};
  return v;
}

std::string fixture_a_with_x_to_u() { return fixture_a().source + "X -> U : 0.3\n"; }

dsl::GraphDocument load(const Fixture& f) { return dsl::parse_graph(f.source); }

}  // namespace surrogate::fixtures
