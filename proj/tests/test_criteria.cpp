#include <doctest.h>

#include "support.hpp"
#include "surrogate/criteria.hpp"
#include "surrogate/error.hpp"
#include "surrogate/fixtures.hpp"

using namespace surrogate;
using namespace surrogate::criteria;
using graph::PathDiagram;
using graph::VertexSet;

namespace {

PathDiagram fx(const fixtures::Fixture& f) { return fixtures::load(f).diagram; }

RoleAssignment canonical_single() { return {"X", "Y", "U", "W", {"Z"}, {"T"}, LatentRole::Response}; }

DoubleRoleAssignment canonical_double() { return {"X1", "X2", "U1", "W1", "U2", "W2", {"Z"}, {}, {}}; }

VertexSet set_union(VertexSet a, const VertexSet& b) {
  a.insert(b.begin(), b.end());
  return a;
}

VertexSet set_minus(VertexSet a, const VertexSet& b) {
  for (const auto& v : b) a.erase(v);
  return a;
}

// Re-runs the separation statements that a satisfied certificate claims.
void replay(const PathDiagram& g, const RoleAssignment& r, const CriterionCertificate& c) {
  REQUIRE(c.satisfied);
  REQUIRE(c.witnesses.has_value());
  VertexSet s = set_union({r.x, r.y, r.u, r.w}, set_union(r.z, r.t));
  const auto m = graph::moralize(g, s);
  const VertexSet triple{r.x, r.u, r.w};
  for (const auto& a : triple)
    for (const auto& b : triple)
      if (a < b) {
        const auto sep = set_union({r.y}, set_union(r.z, r.t));
        CHECK(graph::u_separates(m, {a}, {b}, sep));
        CHECK(testsupport::usep_by_paths(m, {a}, {b}, sep));
      }
  const auto& w = *c.witnesses;
  if (!r.t.empty()) {
    CHECK_FALSE(w.r1.empty());
    const auto sep = set_minus(set_union({r.y, r.x, r.u, r.w}, r.z), w.r1);
    CHECK(graph::u_separates(m, w.r1, r.t, sep));
    CHECK(testsupport::usep_by_paths(m, w.r1, r.t, sep));
  }
  if (!r.z.empty()) {
    CHECK_FALSE(w.r2.empty());
    const auto sep = set_minus(set_union({r.y, r.x, r.u, r.w}, r.t), w.r2);
    CHECK(graph::u_separates(m, w.r2, r.z, sep));
    CHECK(testsupport::usep_by_paths(m, w.r2, r.z, sep));
  }
}

}  // namespace

TEST_CASE("single_door") {
  CHECK(single_door(fx(fixtures::fixture_d()), "X1", "X2", {"Z"}));
  const auto conf = PathDiagram::Builder().add_vertex("A").add_vertex("B").add_edge("A", "B").add_bidirected("A", "B").build();
  CHECK_FALSE(single_door(conf, "A", "B", {}));
  const auto lone = PathDiagram::Builder().add_vertex("A").add_vertex("B").add_edge("A", "B").build();
  CHECK(single_door(lone, "A", "B", {}));
  CHECK_THROWS_AS(single_door(lone, "B", "A", {}), Error);
}

TEST_CASE("back_door") {
  CHECK(back_door(fx(fixtures::fixture_a()), "X", "Y", {"Z"}));
  CHECK(back_door(fx(fixtures::fixture_b()), "Y", "X", {"Z"}));
  CHECK_FALSE(back_door(fx(fixtures::fixture_a()), "X", "Y", {"T"}));
  CHECK_FALSE(back_door(fx(fixtures::fixture_a()), "X", "Y", {}));
}

TEST_CASE("conditional_iv") {
  const auto c = fx(fixtures::fixture_c());
  CHECK(conditional_iv(c, "X", "Y", "Z", {"T"}));
  CHECK_FALSE(conditional_iv(c, "X", "Y", "T", {}));
  CHECK_FALSE(conditional_iv(c, "X", "Y", "Z", {}));  // Z <- T -> Y stays open
  const auto iv = PathDiagram::Builder()
                      .add_vertex("Z").add_vertex("X").add_vertex("Y")
                      .add_edge("Z", "X").add_edge("X", "Y").add_bidirected("X", "Y")
                      .build();
  CHECK(conditional_iv(iv, "X", "Y", "Z", {}));

  // a child of x separated from y only once x's edges are cut
  const auto child = PathDiagram::Builder()
                         .add_vertex("Y").add_vertex("X").add_vertex("Z")
                         .add_edge("Y", "X").add_edge("X", "Z")
                         .build();
  CHECK_FALSE(conditional_iv(child, "X", "Y", "Z", {}));
  // conditioning on a mediator
  const auto med = PathDiagram::Builder()
                       .add_vertex("Z").add_vertex("X").add_vertex("M").add_vertex("Y")
                       .add_edge("Z", "X").add_edge("X", "M").add_edge("M", "Y")
                       .build();
  CHECK(conditional_iv(med, "X", "Y", "Z", {}));
  CHECK_FALSE(conditional_iv(med, "X", "Y", "Z", {"M"}));
}

TEST_CASE("theorem1_check on fixtures") {
  const auto a = fx(fixtures::fixture_a());
  const auto ca = theorem1_check(a, canonical_single());
  CHECK(ca.satisfied);
  CHECK_FALSE(ca.failed_condition.has_value());
  REQUIRE(ca.witnesses.has_value());
  CHECK(ca.witnesses->r1 == VertexSet{"X", "U", "W"});
  CHECK(ca.witnesses->r2 == VertexSet{"U", "W", "T"});
  replay(a, canonical_single(), ca);

  const auto c = fx(fixtures::fixture_c());
  const auto cc = theorem1_check(c, canonical_single());
  CHECK(cc.satisfied);
  REQUIRE(cc.witnesses.has_value());
  CHECK(cc.witnesses->r1 == VertexSet{"U", "W"});
  replay(c, canonical_single(), cc);

  const auto b = fx(fixtures::fixture_b());
  RoleAssignment rb = canonical_single();
  rb.latent_role = LatentRole::Treatment;
  const auto cb = theorem1_check(b, rb);
  CHECK(cb.satisfied);
  replay(b, rb, cb);
}

TEST_CASE("theorem1_check failures") {
  const auto a = fx(fixtures::fixture_a());
  // U and T play symmetric parts in fixture A, so swapping them keeps the
  // check satisfied; swapping U into the Z slot breaks condition (1).
  RoleAssignment ut = canonical_single();
  ut.u = "T";
  ut.t = {"U"};
  CHECK(theorem1_check(a, ut).satisfied);

  RoleAssignment uz{"X", "Y", "Z", "W", {"U"}, {"T"}, LatentRole::Response};
  const auto c = theorem1_check(a, uz);
  CHECK_FALSE(c.satisfied);
  CHECK(c.failed_condition == std::string(kConditionOne));
  CHECK_FALSE(c.witnesses.has_value());

  const auto with_xu = fixtures::load(fixtures::fixture_a()).diagram;
  const auto bad = PathDiagram::Builder(with_xu).add_edge("X", "U").build();
  const auto cx = theorem1_check(bad, canonical_single());
  CHECK_FALSE(cx.satisfied);
  CHECK(cx.failed_condition == std::string(kConditionOne));

  RoleAssignment overlap = canonical_single();
  overlap.t = {"Z"};
  CHECK_THROWS_AS(theorem1_check(a, overlap), Error);
  RoleAssignment observed_y = canonical_single();
  observed_y.y = "Z";
  observed_y.z = {};
  CHECK_THROWS_AS(theorem1_check(a, observed_y), Error);
}

TEST_CASE("theorem1_check nonzero-concentration assumption") {
  // W measures an independent latent, so sigma^{xw} and sigma^{uw} vanish.
  const auto g = PathDiagram::Builder()
                     .add_vertex("X").add_vertex("U").add_vertex("W").add_latent("Y").add_latent("Q")
                     .add_edge("X", "Y").add_edge("Y", "U").add_edge("Q", "W")
                     .build();
  const auto c = theorem1_check(g, {"X", "Y", "U", "W", {}, {}, LatentRole::Response});
  CHECK_FALSE(c.satisfied);
  CHECK(c.failed_condition == std::string(kNonzeroConcentration));
}

TEST_CASE("theorem1_check is invariant under swapping u and w") {
  sem::Rng rng(11);
  int satisfied = 0;
  for (const auto* f : fixtures::all()) {
    if (f->strategy == Strategy::DoubleLatent) continue;
    const auto g = fx(*f);
    auto r = std::get<RoleAssignment>(f->roles);
    auto s = r;
    std::swap(s.u, s.w);
    CHECK(theorem1_check(g, r).satisfied == theorem1_check(g, s).satisfied);
  }
  // random role assignments over random diagrams with one latent vertex
  for (int rep = 0; rep < 300; ++rep) {
    const auto dag = sem::random_dag(rng, 6 + rng.index(3), 0.35);
    const auto names = testsupport::names_of(dag);
    const auto chosen = testsupport::pick(rng, names, names.size());
    PathDiagram::Builder b;
    for (const auto& v : names) b.add_vertex(v, v == chosen[1] ? graph::Observability::Latent
                                                               : graph::Observability::Observed);
    for (const auto& e : dag.directed_edges()) b.add_edge(e.from, e.to);
    const auto g = b.build();
    RoleAssignment r{chosen[0], chosen[1], chosen[2], chosen[3], {}, {}, LatentRole::Response};
    for (std::size_t i = 4; i < chosen.size(); ++i) {
      const auto roll = rng.index(3);
      if (roll == 0) r.z.insert(chosen[i]);
      if (roll == 1) r.t.insert(chosen[i]);
    }
    auto s = r;
    std::swap(s.u, s.w);
    const auto cr = theorem1_check(g, r);
    const auto cs = theorem1_check(g, s);
    CHECK(cr.satisfied == cs.satisfied);
    if (cr.satisfied) {
      ++satisfied;
      replay(g, r, cr);
      CHECK(cr.witnesses->r1 == cs.witnesses->r1);
      CHECK(cr.witnesses->r2 == cs.witnesses->r2);
    }
  }
  MESSAGE("random satisfied instances: " << satisfied);
}

TEST_CASE("theorem2_check") {
  const auto d = fx(fixtures::fixture_d());
  const auto c = theorem2_check(d, canonical_double());
  CHECK(c.satisfied);
  REQUIRE(c.embedded.size() == 2);
  CHECK(c.embedded[0].satisfied);
  CHECK(c.embedded[1].satisfied);
  replay(d, canonical_double().first_embedding(), c.embedded[0]);
  replay(d, canonical_double().second_embedding(), c.embedded[1]);

  auto swapped = canonical_double();
  std::swap(swapped.u1, swapped.u2);
  const auto cs = theorem2_check(d, swapped);
  CHECK_FALSE(cs.satisfied);
  REQUIRE(cs.failed_condition.has_value());
  // both embeddings still hold; U2 sits below X2, so {X1,Z} cannot cut it from X2
  CHECK(cs.failed_condition->find(std::string(kConditionThree)) != std::string::npos);

  const auto cut = graph::delete_edge(d, "X1", "X2");
  CHECK(theorem2_check(cut, canonical_double()).satisfied);

  const auto e1 = canonical_double().first_embedding();
  CHECK(e1.x == "U1");
  CHECK(e1.y == "X1");
  CHECK(e1.u == "U2");
  CHECK(e1.w == "W1");
  const auto e2 = canonical_double().second_embedding();
  CHECK(e2.y == "X2");
  CHECK(e2.w == "W2");
  CHECK(e2.t == VertexSet{"W1"});
}

TEST_CASE("find_strategies") {
  const auto a = fx(fixtures::fixture_a());
  const auto found = find_strategies(a, "X", "Y");
  bool canonical = false, swapped = false;
  for (const auto& c : found) {
    if (c.strategy != Strategy::BackdoorLatentResponse) continue;
    const auto& r = std::get<RoleAssignment>(c.roles);
    if (r.z != VertexSet{"Z"} || r.t != VertexSet{"T"} || r.x != "X") continue;
    if (r.u == "U" && r.w == "W") canonical = true;
    if (r.u == "W" && r.w == "U") swapped = true;
  }
  CHECK(canonical);
  CHECK(swapped);
  for (const auto& c : found) CHECK(strategy_certificate(a, c.strategy, c.roles).satisfied);
  CHECK(find_strategies(a, "X", "Y").size() == found.size());

  const auto d = fx(fixtures::fixture_d());
  bool dl = false;
  for (const auto& c : find_strategies(d, "X1", "X2"))
    if (c.strategy == Strategy::DoubleLatent && std::get<DoubleRoleAssignment>(c.roles) == canonical_double())
      dl = true;
  CHECK(dl);

  const auto ab = PathDiagram::Builder().add_vertex("A").add_latent("B").add_edge("A", "B").build();
  CHECK(find_strategies(ab, "A", "B").empty());
}

TEST_CASE("strategy names round-trip") {
  for (auto s : {Strategy::BackdoorLatentResponse, Strategy::BackdoorLatentTreatment,
                 Strategy::CivLatentResponse, Strategy::DoubleLatent})
    CHECK(parse_strategy(to_string(s)) == s);
  CHECK_THROWS_AS(parse_strategy("front-door"), Error);
}
