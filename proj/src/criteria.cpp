#include "surrogate/criteria.hpp"

#include <algorithm>
#include <functional>
#include <tuple>

#include "surrogate/error.hpp"

namespace surrogate::criteria {

using graph::d_separates;
using graph::u_separates;
using graph::UndirectedGraph;

namespace {

VertexSet unite(VertexSet a, const VertexSet& b) {
  a.insert(b.begin(), b.end());
  return a;
}

VertexSet minus(VertexSet a, const VertexSet& b) {
  for (const auto& v : b) a.erase(v);
  return a;
}

bool intersects(const VertexSet& a, const VertexSet& b) {
  return std::any_of(a.begin(), a.end(), [&](const VertexId& v) { return b.count(v) != 0; });
}

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorKind::MalformedRoles, what); }

void validate(const PathDiagram& g, const RoleAssignment& r) {
  for (const auto& v : {r.x, r.y, r.u, r.w})
    if (!g.has_vertex(v)) malformed("role vertex '" + v + "' is not in the diagram");
  for (const auto* set : {&r.z, &r.t})
    for (const auto& v : *set)
      if (!g.has_vertex(v)) malformed("role vertex '" + v + "' is not in the diagram");
  if (!g.is_latent(r.y)) malformed("y role '" + r.y + "' must be a latent vertex");
  for (const auto& v : r.observed_set())
    if (g.is_latent(v)) malformed("role vertex '" + v + "' must be observed");

  const VertexSet singles{r.x, r.y, r.u, r.w};
  if (singles.size() != 4) malformed("x, y, u, w must be distinct");
  if (intersects(singles, r.z) || intersects(singles, r.t) || intersects(r.z, r.t))
    malformed("role sets must be pairwise disjoint");
}

void validate(const PathDiagram& g, const DoubleRoleAssignment& r) {
  for (const auto& v : {r.x1, r.x2, r.u1, r.w1, r.u2, r.w2})
    if (!g.has_vertex(v)) malformed("role vertex '" + v + "' is not in the diagram");
  for (const auto* set : {&r.z, &r.t1, &r.t2})
    for (const auto& v : *set)
      if (!g.has_vertex(v)) malformed("role vertex '" + v + "' is not in the diagram");
  if (r.x1 == r.x2) malformed("x1 and x2 must differ");
  if (!g.is_latent(r.x1) || !g.is_latent(r.x2)) malformed("x1 and x2 must be latent vertices");
  const VertexSet named{r.u1, r.w1, r.u2, r.w2};
  if (named.size() != 4) malformed("u1, w1, u2, w2 must be distinct");
  for (const auto& v : unite(unite(unite(named, r.z), r.t1), r.t2))
    if (g.is_latent(v)) malformed("role vertex '" + v + "' must be observed");
  if (intersects(named, r.z) || intersects(named, r.t1) || intersects(named, r.t2) ||
      intersects(r.z, r.t1) || intersects(r.z, r.t2))
    malformed("role sets must be pairwise disjoint (t1 and t2 may overlap)");
}

void fail(CriterionCertificate& cert, std::string_view label) {
  cert.satisfied = false;
  cert.witnesses.reset();
  if (!cert.failed_condition) cert.failed_condition = std::string(label);
}

// Rows of `candidates` that are individually separated from `target` by
// (pool \ {row}). Satisfying sets are closed under subsets and unions, so the
// union of passing singletons is the unique maximal witness.
VertexSet maximal_witness(const UndirectedGraph& m, const VertexSet& candidates,
                          const VertexSet& target, const VertexSet& pool) {
  VertexSet r;
  for (const auto& v : candidates)
    if (u_separates(m, {v}, target, minus(pool, {v}))) r.insert(v);
  return r;
}

}  // namespace

VertexSet RoleAssignment::observed_set() const {
  VertexSet s{x, u, w};
  s.insert(z.begin(), z.end());
  s.insert(t.begin(), t.end());
  return s;
}

RoleAssignment DoubleRoleAssignment::first_embedding() const {
  return RoleAssignment{u1, x1, u2, w1, z, t1, LatentRole::Treatment};
}

RoleAssignment DoubleRoleAssignment::second_embedding() const {
  VertexSet t = t2;
  t.insert(w1);
  return RoleAssignment{u1, x2, u2, w2, z, t, LatentRole::Response};
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::BackdoorLatentResponse: return "backdoor-latent-response";
    case Strategy::BackdoorLatentTreatment: return "backdoor-latent-treatment";
    case Strategy::CivLatentResponse: return "civ-latent-response";
    case Strategy::DoubleLatent: return "double-latent";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (auto s : {Strategy::BackdoorLatentResponse, Strategy::BackdoorLatentTreatment,
                 Strategy::CivLatentResponse, Strategy::DoubleLatent})
    if (to_string(s) == name) return s;
  throw Error(ErrorKind::Parse, "unknown strategy '" + std::string(name) + "'");
}

bool single_door(const PathDiagram& g, const VertexId& i, const VertexId& j, const VertexSet& z) {
  if (!g.has_edge(i, j)) throw Error(ErrorKind::MissingEdge, "no edge " + i + " -> " + j);
  if (intersects(z, graph::relatives(g, j, graph::Relation::Descendants))) return false;
  return d_separates(graph::delete_edge(g, i, j), {i}, {j}, z);
}

bool back_door(const PathDiagram& g, const VertexId& x, const VertexId& y, const VertexSet& t) {
  if (intersects(t, graph::relatives(g, x, graph::Relation::Descendants))) return false;
  return d_separates(graph::delete_outgoing(g, {x}), {x}, {y}, t);
}

bool conditional_iv(const PathDiagram& g, const VertexId& x, const VertexId& y,
                    const VertexId& z, const VertexSet& t) {
  if (intersects(t, graph::relatives(g, y, graph::Relation::Descendants))) return false;
  // without this the ratio can pick up paths through x's own children
  const VertexSet below_x = graph::relatives(g, x, graph::Relation::Descendants);
  if (below_x.count(z) || intersects(t, below_x)) return false;
  const PathDiagram cut = graph::delete_outgoing(g, {x});
  return d_separates(cut, {z}, {y}, t) && !d_separates(cut, {z}, {x}, t);
}

CriterionCertificate theorem1_check(const PathDiagram& g, const RoleAssignment& r) {
  validate(g, r);
  CriterionCertificate cert;
  cert.criterion = "theorem1";
  cert.satisfied = true;

  const VertexSet triple{r.x, r.u, r.w};
  const VertexSet s = r.observed_set();
  const UndirectedGraph m = graph::moralize(g, unite(s, {r.y}));

  // (1) {y} ∪ z ∪ t separates each of x, u, w from the other two.
  const VertexSet sep1 = unite(unite({r.y}, r.z), r.t);
  bool cond1 = true;
  for (const auto& [a, b] : {std::pair{r.x, r.u}, std::pair{r.x, r.w}, std::pair{r.u, r.w}}) {
    bool ok = u_separates(m, {a}, {b}, sep1);
    cert.checks.push_back({std::string(kConditionOne), ok,
                           graph::to_string(sep1) + " separates " + a + " from " + b});
    cond1 = cond1 && ok;
  }
  if (!cond1) fail(cert, kConditionOne);

  // The triple's off-diagonal concentrations must not be forced to zero,
  // which happens when two of them fall into different components.
  bool linked = graph::connected(m, r.x, r.u) && graph::connected(m, r.x, r.w) &&
                graph::connected(m, r.u, r.w);
  cert.checks.push_back({std::string(kNonzeroConcentration), linked,
                         r.x + ", " + r.u + ", " + r.w + " connected in the moral graph"});
  if (!linked) fail(cert, kNonzeroConcentration);

  Witnesses wit;
  if (r.t.empty()) {
    cert.notes.push_back("condition (2) omitted: t is empty");
  } else {
    const VertexSet pool = unite(unite({r.y}, triple), r.z);
    wit.r1 = maximal_witness(m, triple, r.t, pool);
    bool ok = !wit.r1.empty() && u_separates(m, wit.r1, r.t, minus(pool, wit.r1));
    cert.checks.push_back({std::string(kConditionTwo), ok,
                           "R1 = " + graph::to_string(wit.r1) + " separated from t = " +
                               graph::to_string(r.t)});
    if (!ok) fail(cert, kConditionTwo);
  }

  if (r.z.empty()) {
    cert.notes.push_back("condition (3) omitted: z is empty");
  } else {
    const VertexSet pool = unite(unite({r.y}, triple), r.t);
    wit.r2 = maximal_witness(m, unite(triple, r.t), r.z, pool);
    bool ok = !wit.r2.empty() && u_separates(m, wit.r2, r.z, minus(pool, wit.r2));
    for (const auto& v : wit.r2) (triple.count(v) ? wit.r2_vertex_pivots : wit.r2_t_block).insert(v);
    cert.checks.push_back({std::string(kConditionThree), ok,
                           "R2 = " + graph::to_string(wit.r2) + " separated from z = " +
                               graph::to_string(r.z)});
    if (!ok) fail(cert, kConditionThree);
  }

  if (cert.satisfied) cert.witnesses = wit;
  return cert;
}

CriterionCertificate theorem2_check(const PathDiagram& g, const DoubleRoleAssignment& r) {
  validate(g, r);
  CriterionCertificate cert;
  cert.criterion = "theorem2";
  cert.satisfied = true;

  const RoleAssignment first = r.first_embedding();
  const RoleAssignment second = r.second_embedding();
  cert.embedded.push_back(theorem1_check(g, first));
  cert.embedded.push_back(theorem1_check(g, second));
  cert.notes.push_back("embedding around x1 uses u2 in the u role (triple {" + r.u1 + "," + r.u2 +
                       "," + r.w1 + "}); the alternative reading u = u1 would repeat the x vertex");

  const bool a = cert.embedded[0].satisfied;
  const bool b = cert.embedded[1].satisfied;
  cert.checks.push_back({"condition (1)", a, "single-latent check around " + r.x1 + ": " + describe(first)});
  cert.checks.push_back({"condition (2)", b, "single-latent check around " + r.x2 + ": " + describe(second)});

  const VertexSet sep = unite({r.x1}, r.z);
  const bool c = d_separates(g, {r.u1}, {r.x2}, sep);
  const bool civ = conditional_iv(g, r.x1, r.x2, r.u1, r.z);
  cert.checks.push_back({"condition (3)", c,
                         graph::to_string(sep) + " d-separates " + r.u1 + " from " + r.x2});
  cert.checks.push_back({"conditional instrument", civ,
                         r.u1 + " is a conditional instrument given " + graph::to_string(r.z) +
                             " relative to (" + r.x1 + ", " + r.x2 + ")"});
  if (!c && civ) cert.notes.push_back("condition (3) waived: u1 is a conditional instrument");

  if (!a) fail(cert, "condition (1)");
  if (!b) fail(cert, "condition (2)");
  if (!c && !civ) fail(cert, "condition (3)");
  return cert;
}

CriterionCertificate strategy_certificate(const PathDiagram& g, Strategy strategy,
                                          const std::variant<RoleAssignment, DoubleRoleAssignment>& roles) {
  if (strategy == Strategy::DoubleLatent) {
    const auto* dr = std::get_if<DoubleRoleAssignment>(&roles);
    if (!dr) malformed("double-latent needs a double role assignment");
    auto cert = theorem2_check(g, *dr);
    cert.criterion = std::string(to_string(strategy));
    return cert;
  }
  const auto* r = std::get_if<RoleAssignment>(&roles);
  if (!r) malformed(std::string(to_string(strategy)) + " needs a single role assignment");

  auto cert = theorem1_check(g, *r);
  cert.criterion = std::string(to_string(strategy));
  auto require = [&](const std::string& label, bool ok, const std::string& detail) {
    cert.checks.push_back({label, ok, detail});
    if (!ok) fail(cert, label);
  };
  switch (strategy) {
    case Strategy::BackdoorLatentResponse:
      require("back-door criterion", back_door(g, r->x, r->y, r->z),
              graph::to_string(r->z) + " satisfies the back-door criterion relative to (" + r->x +
                  ", " + r->y + ")");
      break;
    case Strategy::BackdoorLatentTreatment:
      require("back-door criterion", back_door(g, r->y, r->x, r->z),
              graph::to_string(r->z) + " satisfies the back-door criterion relative to (" + r->y +
                  ", " + r->x + ")");
      break;
    case Strategy::CivLatentResponse:
      if (r->z.size() != 1) {
        require("conditional instrument", false, "z must hold exactly one instrument");
      } else {
        const VertexId& inst = *r->z.begin();
        require("conditional instrument", conditional_iv(g, r->x, r->y, inst, r->t),
                inst + " is a conditional instrument given " + graph::to_string(r->t) +
                    " relative to (" + r->x + ", " + r->y + ")");
      }
      break;
    case Strategy::DoubleLatent: break;
  }
  return cert;
}

namespace {

// All subsets of `pool` with at most `k` elements, in lexicographic order of
// their sorted member lists.
std::vector<VertexSet> subsets_up_to(const VertexSet& pool, std::size_t k) {
  std::vector<VertexId> items(pool.begin(), pool.end());
  std::vector<VertexSet> out;
  VertexSet cur;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    out.push_back(cur);
    if (cur.size() == k) return;
    for (std::size_t i = start; i < items.size(); ++i) {
      cur.insert(items[i]);
      rec(i + 1);
      cur.erase(items[i]);
    }
  };
  rec(0);
  return out;
}

std::vector<VertexId> set_key(const VertexSet& s) { return {s.begin(), s.end()}; }

auto sort_key(const StrategyCandidate& c) {
  std::vector<std::vector<VertexId>> key;
  if (const auto* r = std::get_if<RoleAssignment>(&c.roles)) {
    key = {{r->x, r->y, r->u, r->w}, set_key(r->z), set_key(r->t)};
  } else {
    const auto& d = std::get<DoubleRoleAssignment>(c.roles);
    key = {{d.x1, d.x2, d.u1, d.w1, d.u2, d.w2}, set_key(d.z), set_key(d.t1), set_key(d.t2)};
  }
  return std::pair{std::string(to_string(c.strategy)), key};
}

void search_single(const PathDiagram& g, Strategy strategy, const VertexId& x_role,
                   const VertexId& latent, std::size_t k, std::vector<StrategyCandidate>& out) {
  const VertexSet pool = minus(g.observed(), {x_role});
  const LatentRole tag =
      strategy == Strategy::BackdoorLatentTreatment ? LatentRole::Treatment : LatentRole::Response;

  auto try_roles = [&](const VertexSet& z, const VertexSet& rest_after_z, bool t_fixed,
                       const VertexSet& fixed_t) {
    for (const auto& u : rest_after_z) {
      for (const auto& w : rest_after_z) {
        if (u == w) continue;
        const VertexSet rest = minus(rest_after_z, {u, w});
        std::vector<VertexSet> ts = t_fixed ? std::vector<VertexSet>{fixed_t} : subsets_up_to(rest, k);
        for (const auto& t : ts) {
          if (t_fixed && (t.count(u) || t.count(w))) continue;
          RoleAssignment r{x_role, latent, u, w, z, t, tag};
          if (strategy_certificate(g, strategy, r).satisfied) out.push_back({strategy, r});
        }
      }
    }
  };

  if (strategy == Strategy::CivLatentResponse) {
    for (const auto& inst : pool) {
      for (const auto& t : subsets_up_to(minus(pool, {inst}), k)) {
        if (!conditional_iv(g, x_role, latent, inst, t)) continue;
        try_roles({inst}, minus(minus(pool, {inst}), t), true, t);
      }
    }
    return;
  }
  for (const auto& z : subsets_up_to(pool, k)) {
    bool ok = strategy == Strategy::BackdoorLatentResponse ? back_door(g, x_role, latent, z)
                                                           : back_door(g, latent, x_role, z);
    if (ok) try_roles(z, minus(pool, z), false, {});
  }
}

void search_double(const PathDiagram& g, const VertexId& x1, const VertexId& x2, std::size_t k,
                   std::vector<StrategyCandidate>& out) {
  const VertexSet pool = g.observed();
  for (const auto& u1 : pool)
    for (const auto& w1 : pool)
      for (const auto& u2 : pool)
        for (const auto& w2 : pool) {
          if (VertexSet{u1, w1, u2, w2}.size() != 4) continue;
          const VertexSet rest = minus(pool, {u1, w1, u2, w2});
          for (const auto& z : subsets_up_to(rest, k)) {
            const VertexSet free = minus(rest, z);
            auto tsets = subsets_up_to(free, k);
            for (const auto& t1 : tsets) {
              // Cheap prefilter: the first embedding does not depend on t2.
              DoubleRoleAssignment probe{x1, x2, u1, w1, u2, w2, z, t1, {}};
              if (!theorem1_check(g, probe.first_embedding()).satisfied) continue;
              for (const auto& t2 : tsets) {
                DoubleRoleAssignment r{x1, x2, u1, w1, u2, w2, z, t1, t2};
                if (theorem2_check(g, r).satisfied) out.push_back({Strategy::DoubleLatent, r});
              }
            }
          }
        }
}

}  // namespace

std::vector<StrategyCandidate> find_strategies(const PathDiagram& g, const VertexId& treatment,
                                               const VertexId& response, std::size_t max_set_size) {
  g.require_vertex(treatment);
  g.require_vertex(response);
  if (treatment == response) return {};
  std::vector<StrategyCandidate> out;
  const bool lt = g.is_latent(treatment);
  const bool lr = g.is_latent(response);
  if (!lt && lr) {
    search_single(g, Strategy::BackdoorLatentResponse, treatment, response, max_set_size, out);
    search_single(g, Strategy::CivLatentResponse, treatment, response, max_set_size, out);
  } else if (lt && !lr) {
    search_single(g, Strategy::BackdoorLatentTreatment, response, treatment, max_set_size, out);
  } else if (lt && lr) {
    search_double(g, treatment, response, max_set_size, out);
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return sort_key(a) < sort_key(b); });
  return out;
}

std::string describe(const RoleAssignment& r) {
  return "x=" + r.x + " y=" + r.y + " u=" + r.u + " w=" + r.w + " z=" + graph::to_string(r.z) +
         " t=" + graph::to_string(r.t);
}

std::string describe(const DoubleRoleAssignment& r) {
  return "x1=" + r.x1 + " x2=" + r.x2 + " u1=" + r.u1 + " w1=" + r.w1 + " u2=" + r.u2 +
         " w2=" + r.w2 + " z=" + graph::to_string(r.z) + " t1=" + graph::to_string(r.t1) +
         " t2=" + graph::to_string(r.t2);
}

}  // namespace surrogate::criteria
