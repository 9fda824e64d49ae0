#include "surrogate/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "surrogate/dsl.hpp"
#include "surrogate/error.hpp"
#include "surrogate/fixtures.hpp"
#include "surrogate/sem.hpp"

namespace surrogate::cli {

namespace {

namespace fs = std::filesystem;
using criteria::CriterionCertificate;
using criteria::DoubleRoleAssignment;
using criteria::RoleAssignment;
using criteria::Strategy;
using graph::VertexSet;
using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Parse, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw Error(ErrorKind::Parse, "cannot write '" + path + "'");
  o << text;
}

VertexSet split_set(const std::string& s) {
  VertexSet out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto b = item.find_first_not_of(" \t");
    auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.insert(item.substr(b, e - b + 1));
  }
  return out;
}

json set_json(const VertexSet& s) { return json(std::vector<std::string>(s.begin(), s.end())); }

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::Parse:
    case ErrorKind::InvalidGraph:
    case ErrorKind::InvalidCovariance:
    case ErrorKind::MalformedRoles:
    case ErrorKind::UnknownVertex:
    case ErrorKind::UnknownLabel:
    case ErrorKind::InvalidModel:
    case ErrorKind::SampleTooSmall: return kExitUsage;
    default: return kExitFailed;
  }
}

void report_error(std::ostream& err, const Error& e) {
  err << json{{"error", std::string(to_string(e.kind()))}, {"detail", e.detail()}}.dump() << "\n";
}

struct RoleFlags {
  std::string x, y, u, w, z, t;
  std::string x1, x2, u1, w1, u2, w2, t1, t2;

  void attach(CLI::App* cmd) {
    cmd->add_option("--x", x, "X role (observed surrogate, treatment or response)");
    cmd->add_option("--y", y, "Y role (the latent vertex)");
    cmd->add_option("--u", u, "U role");
    cmd->add_option("--w", w, "W role");
    cmd->add_option("--z", z, "Z set, comma-separated");
    cmd->add_option("--t", t, "T set, comma-separated");
    cmd->add_option("--x1", x1, "latent treatment (double-latent)");
    cmd->add_option("--x2", x2, "latent response (double-latent)");
    cmd->add_option("--u1", u1, "surrogate of x1 that instruments x2");
    cmd->add_option("--w1", w1, "second surrogate of x1");
    cmd->add_option("--u2", u2, "surrogate of x2");
    cmd->add_option("--w2", w2, "second surrogate of x2");
    cmd->add_option("--t1", t1, "extra set for the x1 check, comma-separated");
    cmd->add_option("--t2", t2, "extra set for the x2 check, comma-separated");
  }

  RoleAssignment single(criteria::LatentRole tag = criteria::LatentRole::Response) const {
    for (const auto& [name, v] : {std::pair{"--x", &x}, std::pair{"--y", &y}, std::pair{"--u", &u},
                                   std::pair{"--w", &w}})
      if (v->empty()) throw Error(ErrorKind::MalformedRoles, std::string("missing ") + name);
    return RoleAssignment{x, y, u, w, split_set(z), split_set(t), tag};
  }

  DoubleRoleAssignment dual() const {
    for (const auto& [name, v] : {std::pair{"--x1", &x1}, std::pair{"--x2", &x2}, std::pair{"--u1", &u1},
                                   std::pair{"--w1", &w1}, std::pair{"--u2", &u2}, std::pair{"--w2", &w2}})
      if (v->empty()) throw Error(ErrorKind::MalformedRoles, std::string("missing ") + name);
    return DoubleRoleAssignment{x1, x2, u1, w1, u2, w2, split_set(z), split_set(t1), split_set(t2)};
  }

  gaussian::Roles for_strategy(Strategy s) const {
    if (s == Strategy::DoubleLatent) return dual();
    return single(s == Strategy::BackdoorLatentTreatment ? criteria::LatentRole::Treatment
                                                         : criteria::LatentRole::Response);
  }
};

CriterionCertificate boolean_certificate(const std::string& name, bool ok, const std::string& detail) {
  CriterionCertificate c;
  c.criterion = name;
  c.satisfied = ok;
  c.checks.push_back({name, ok, detail});
  if (!ok) c.failed_condition = name;
  return c;
}

CriterionCertificate run_check(const graph::PathDiagram& g, const std::string& criterion,
                               const RoleFlags& r) {
  if (criterion == "theorem1") return criteria::theorem1_check(g, r.single());
  if (criterion == "theorem2") return criteria::theorem2_check(g, r.dual());
  if (criterion == "backdoor") {
    bool ok = criteria::back_door(g, r.x, r.y, split_set(r.z));
    return boolean_certificate("back-door criterion", ok,
                               r.z + " relative to (" + r.x + ", " + r.y + ")");
  }
  if (criterion == "single-door") {
    bool ok = criteria::single_door(g, r.x, r.y, split_set(r.z));
    return boolean_certificate("single-door criterion", ok, r.x + " -> " + r.y + " given " + r.z);
  }
  if (criterion == "civ") {
    bool ok = criteria::conditional_iv(g, r.x, r.y, r.z, split_set(r.t));
    return boolean_certificate("conditional instrument", ok,
                               r.z + " given " + r.t + " relative to (" + r.x + ", " + r.y + ")");
  }
  const Strategy s = criteria::parse_strategy(criterion);
  return criteria::strategy_certificate(g, s, r.for_strategy(s));
}

json candidate_json(const criteria::StrategyCandidate& c) {
  json roles = std::visit([](const auto& r) { return to_json(r); }, c.roles);
  return json{{"strategy", std::string(criteria::to_string(c.strategy))}, {"roles", roles}};
}

}  // namespace

json to_json(const RoleAssignment& r) {
  return json{{"x", r.x},
              {"y", r.y},
              {"u", r.u},
              {"w", r.w},
              {"z", set_json(r.z)},
              {"t", set_json(r.t)},
              {"latent_role", r.latent_role == criteria::LatentRole::Response ? "response" : "treatment"}};
}

json to_json(const DoubleRoleAssignment& r) {
  return json{{"x1", r.x1}, {"x2", r.x2}, {"u1", r.u1},         {"w1", r.w1},         {"u2", r.u2},
              {"w2", r.w2}, {"z", set_json(r.z)}, {"t1", set_json(r.t1)}, {"t2", set_json(r.t2)}};
}

json to_json(const CriterionCertificate& c) {
  json j;
  j["criterion"] = c.criterion;
  j["satisfied"] = c.satisfied;
  j["failed_condition"] = c.failed_condition ? json(*c.failed_condition) : json(nullptr);
  if (c.witnesses) {
    j["witnesses"] = json{{"R1", set_json(c.witnesses->r1)},
                          {"R2", set_json(c.witnesses->r2)},
                          {"R2_vertex_pivots", set_json(c.witnesses->r2_vertex_pivots)},
                          {"R2_t_block", set_json(c.witnesses->r2_t_block)}};
  } else {
    j["witnesses"] = nullptr;
  }
  j["checks"] = json::array();
  for (const auto& ch : c.checks)
    j["checks"].push_back(json{{"label", ch.label}, {"passed", ch.passed}, {"detail", ch.detail}});
  j["notes"] = c.notes;
  if (!c.embedded.empty()) {
    j["embedded"] = json::array();
    for (const auto& e : c.embedded) j["embedded"].push_back(to_json(e));
  }
  return j;
}

json to_json(const gaussian::IdentificationResult& res) {
  json cond = json::object();
  for (const auto& [k, v] : res.diagnostics.condition_numbers) cond[k] = v;
  return json{{"strategy", std::string(criteria::to_string(res.strategy))},
              {"tau_squared", res.tau_squared},
              {"certificate", to_json(res.certificate)},
              {"diagnostics",
               {{"consistency_residual", res.diagnostics.consistency_residual},
                {"zero_pattern_residual", res.diagnostics.zero_pattern_residual},
                {"numerator", res.diagnostics.numerator},
                {"denominator", res.diagnostics.denominator},
                {"condition_numbers", cond}}}};
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Identify squared total effects through surrogates of unobserved variables", "surrogate"};
  app.require_subcommand(1);
  app.fallthrough();

  double tol = gaussian::kDefaultExactTol;
  double sample_tol = gaussian::kDefaultSampleTol;
  std::uint64_t seed = 1;
  std::size_t n = 0;
  bool exact = false;
  app.add_option("--tol", tol, "zero/agreement tolerance for exact covariances")->capture_default_str();
  app.add_option("--sample-tol", sample_tol, "relative tolerance for sample covariances")->capture_default_str();
  app.add_option("--seed", seed, "random seed")->capture_default_str();
  app.add_option("--n", n, "sample size for simulate");
  app.add_flag("--exact", exact, "simulate the exact implied covariance");

  std::string graph_path, cov_path, criterion, strategy_name, regime = "exact", dir;
  bool standardize = false;
  std::size_t max_set_size = criteria::kDefaultMaxSetSize;
  std::uint64_t replicate = 0;
  RoleFlags roles;

  auto* check = app.add_subcommand("check", "evaluate a graphical criterion");
  check->add_option("--graph", graph_path, "path diagram (.pd)")->required();
  check->add_option("--criterion", criterion,
                    "theorem1 | theorem2 | backdoor | single-door | civ | <strategy name>")
      ->required();
  roles.attach(check);

  auto* identify = app.add_subcommand("identify", "compute tau^2 from a covariance document");
  identify->add_option("--graph", graph_path, "path diagram (.pd)")->required();
  identify->add_option("--cov", cov_path, "covariance document (.json)")->required();
  identify->add_option("--strategy", strategy_name,
                       "backdoor-latent-response | backdoor-latent-treatment | civ-latent-response | double-latent")
      ->required();
  identify->add_option("--regime", regime, "exact | sample")->check(CLI::IsMember({"exact", "sample"}));
  identify->add_flag("--standardize", standardize, "rescale the covariance to unit diagonal first");
  roles.attach(identify);

  auto* simulate = app.add_subcommand("simulate", "emit a covariance document over the observed variables");
  simulate->add_option("--graph", graph_path, "annotated path diagram (.pd)")->required();
  simulate->add_option("--replicate", replicate, "replicate stream index")->capture_default_str();

  auto* strategies = app.add_subcommand("strategies", "list feasible role assignments");
  strategies->add_option("--graph", graph_path, "path diagram (.pd)")->required();
  strategies->add_option("--x", roles.x, "treatment vertex")->required();
  strategies->add_option("--y", roles.y, "response vertex")->required();
  strategies->add_option("--max-set-size", max_set_size, "largest z or t set to try")->capture_default_str();

  auto* self = app.add_subcommand("selftest", "run the four fixtures end to end");
  self->add_option("--dir", dir, "scratch directory (default: a fresh temporary directory)");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << json{{"error", "Usage"}, {"detail", std::string(e.what())}}.dump() << "\n";
    return kExitUsage;
  }

  try {
    if (*check) {
      const auto doc = dsl::parse_graph(read_file(graph_path));
      const auto cert = run_check(doc.diagram, criterion, roles);
      out << json{{"status", cert.satisfied ? "SATISFIED" : "NOT SATISFIED"},
                  {"certificate", to_json(cert)}}
                 .dump(2)
          << "\n";
      return cert.satisfied ? kExitOk : kExitFailed;
    }
    if (*identify) {
      const auto doc = dsl::parse_graph(read_file(graph_path));
      LabeledCovariance cov = dsl::read_covariance(read_file(cov_path));
      if (standardize) cov = cov.correlation();
      const Strategy s = criteria::parse_strategy(strategy_name);
      const gaussian::Tolerance t =
          regime == "sample" ? gaussian::Tolerance::sample(sample_tol) : gaussian::Tolerance::exact(tol);
      const auto res = gaussian::identify_tau_sq(cov, doc.diagram, roles.for_strategy(s), s, t);
      out << to_json(res).dump(2) << "\n";
      return kExitOk;
    }
    if (*simulate) {
      const auto doc = dsl::parse_graph(read_file(graph_path));
      const auto model = doc.to_sem();
      if (exact == (n != 0))
        throw Error(ErrorKind::Parse, "simulate needs exactly one of --exact or --n");
      LabeledCovariance cov;
      if (exact) {
        const auto full = sem::implied_covariance(model);
        Labels observed;
        for (const auto& v : model.order())
          if (!doc.diagram.is_latent(v)) observed.push_back(v);
        cov = full.marginal(observed);
      } else {
        cov = sem::sample_covariance(model, n, seed, replicate);
      }
      out << dsl::write_covariance(cov);
      return kExitOk;
    }
    if (*strategies) {
      const auto doc = dsl::parse_graph(read_file(graph_path));
      json list = json::array();
      for (const auto& c : criteria::find_strategies(doc.diagram, roles.x, roles.y, max_set_size))
        list.push_back(candidate_json(c));
      out << list.dump(2) << "\n";
      return kExitOk;
    }
    if (*self) {
      if (!dir.empty()) return selftest(dir, seed, out);
      const fs::path scratch =
          fs::temp_directory_path() / ("surrogate-selftest-" + std::to_string(::getpid()));
      const int code = selftest(scratch.string(), seed, out);
      std::error_code ec;
      fs::remove_all(scratch, ec);
      return code;
    }
  } catch (const Error& e) {
    report_error(err, e);
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << json{{"error", "Internal"}, {"detail", std::string(e.what())}}.dump() << "\n";
    return kExitFailed;
  }
  return kExitUsage;
}

namespace {

class Report {
 public:
  explicit Report(std::ostream& out) : out_(out) {}

  void line(bool ok, const std::string& what) {
    out_ << (ok ? "[PASS] " : "[FAIL] ") << what << "\n";
    (ok ? passed_ : failed_)++;
  }
  int finish() {
    out_ << "summary: " << passed_ << " passed, " << failed_ << " failed\n";
    return failed_ == 0 ? kExitOk : kExitFailed;
  }

 private:
  std::ostream& out_;
  int passed_ = 0;
  int failed_ = 0;
};

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12f", v);
  return buf;
}

// Rewrites a document with freshly drawn coefficients.
dsl::GraphDocument redraw(const dsl::GraphDocument& doc, sem::Rng& rng) {
  const auto m = sem::draw_standardized_model(doc.diagram, rng);
  dsl::GraphDocument out = doc;
  out.coefficients = m.coefficients();
  for (const auto& e : doc.diagram.bidirected_edges()) out.error_covariances[e] = m.error_cov(e.a, e.b);
  return out;
}

}  // namespace

int selftest(const std::string& dir, std::uint64_t seed, std::ostream& out) {
  Report rep(out);
  out << "selftest seed=" << seed << " rng=" << sem::Rng::kAlgorithm << "\n";
  const fs::path base(dir);
  fs::create_directories(base);

  for (const auto* f : fixtures::all()) {
    const std::string tag = "fixture " + f->name + " ";
    try {
      const fs::path pd = base / ("fixture" + f->name + ".pd");
      const fs::path cj = base / ("fixture" + f->name + "_exact.json");
      write_file(pd.string(), f->source);

      std::ostringstream sim_out, sim_err;
      const int sim = run({"surrogate", "simulate", "--graph", pd.string(), "--exact"}, sim_out, sim_err);
      rep.line(sim == kExitOk, tag + "simulate --exact");
      write_file(cj.string(), sim_out.str());

      const auto doc = dsl::parse_graph(read_file(pd.string()));
      const auto cov = dsl::read_covariance(read_file(cj.string()));
      const auto cert = criteria::strategy_certificate(doc.diagram, f->strategy, f->roles);
      rep.line(cert.satisfied, tag + std::string(criteria::to_string(f->strategy)) + " certificate satisfied");

      const auto res = gaussian::identify_tau_sq(cov, doc.diagram, f->roles, f->strategy);
      const double e = std::abs(res.tau_squared - f->truth_tau_sq);
      rep.line(e < 1e-9, tag + "tau_squared=" + fixed(res.tau_squared) + " truth=" + fixed(f->truth_tau_sq) +
                             " |err|<1e-9");

      std::vector<std::pair<criteria::RoleAssignment, const CriterionCertificate*>> parts;
      if (const auto* r = std::get_if<RoleAssignment>(&f->roles)) {
        parts.emplace_back(*r, &res.certificate);
      } else {
        const auto& d = std::get<DoubleRoleAssignment>(f->roles);
        parts.emplace_back(d.first_embedding(), &res.certificate.embedded.at(0));
        parts.emplace_back(d.second_embedding(), &res.certificate.embedded.at(1));
      }
      double worst = 0.0;
      for (const auto& [r, c] : parts)
        worst = std::max(worst, gaussian::recover_lambda(cov, r, *c).zero_pattern_residual);
      rep.line(worst < 1e-8, tag + "zero pattern of K + lambda lambda' within 1e-8");
    } catch (const Error& e) {
      rep.line(false, tag + std::string(to_string(e.kind())) + ": " + e.detail());
    }
  }

  // Soundness of the classical criteria on random coefficient draws,
  // round-tripped through annotated .pd files.
  struct Soundness {
    const fixtures::Fixture* fixture;
    std::string label;
    bool (*holds)(const graph::PathDiagram&);
    double (*implied)(const LabeledCovariance&);
    double (*truth)(const sem::LinearSEM&);
  };
  const Soundness checks[] = {
      {&fixtures::fixture_a(), "back-door (X,Y | {Z})",
       [](const graph::PathDiagram& g) { return criteria::back_door(g, "X", "Y", {"Z"}); },
       [](const LabeledCovariance& c) { return gaussian::regression_coef(c, "Y", "X", {"Z"}); },
       [](const sem::LinearSEM& m) { return sem::total_effect_oracle(m, "X", "Y"); }},
      {&fixtures::fixture_b(), "back-door (Y,X | {Z})",
       [](const graph::PathDiagram& g) { return criteria::back_door(g, "Y", "X", {"Z"}); },
       [](const LabeledCovariance& c) { return gaussian::regression_coef(c, "X", "Y", {"Z"}); },
       [](const sem::LinearSEM& m) { return sem::total_effect_oracle(m, "Y", "X"); }},
      {&fixtures::fixture_c(), "conditional instrument Z | {T} for (X,Y)",
       [](const graph::PathDiagram& g) { return criteria::conditional_iv(g, "X", "Y", "Z", {"T"}); },
       [](const LabeledCovariance& c) {
         return gaussian::conditional_cov(c, {"Y"}, {"Z"}, {"T"})(0, 0) /
                gaussian::conditional_cov(c, {"X"}, {"Z"}, {"T"})(0, 0);
       },
       [](const sem::LinearSEM& m) { return sem::total_effect_oracle(m, "X", "Y"); }},
      {&fixtures::fixture_d(), "single-door (X1 -> X2 | {Z})",
       [](const graph::PathDiagram& g) { return criteria::single_door(g, "X1", "X2", {"Z"}); },
       [](const LabeledCovariance& c) { return gaussian::regression_coef(c, "X2", "X1", {"Z"}); },
       [](const sem::LinearSEM& m) { return m.coefficient("X1", "X2"); }},
  };
  constexpr int kDraws = 25;
  sem::Rng rng(seed);
  for (const auto& s : checks) {
    const std::string tag = "soundness " + s.label + " ";
    try {
      const auto doc = fixtures::load(*s.fixture);
      rep.line(s.holds(doc.diagram), tag + "holds on fixture " + s.fixture->name);
      double worst = 0.0;
      for (int i = 0; i < kDraws; ++i) {
        const fs::path p = base / ("soundness" + s.fixture->name + ".pd");
        write_file(p.string(), dsl::print_graph(redraw(doc, rng)));
        const auto model = dsl::parse_graph(read_file(p.string())).to_sem();
        worst = std::max(worst, std::abs(s.implied(sem::implied_covariance(model)) - s.truth(model)));
      }
      rep.line(worst < 1e-9, tag + std::to_string(kDraws) + " random models agree within 1e-9");
    } catch (const Error& e) {
      rep.line(false, tag + std::string(to_string(e.kind())) + ": " + e.detail());
    }
  }

  const auto a = fixtures::load(fixtures::fixture_a()).diagram;
  const auto c = fixtures::load(fixtures::fixture_c()).diagram;
  const auto confounded =
      graph::PathDiagram::Builder().add_vertex("A").add_vertex("B").add_edge("A", "B").add_bidirected("A", "B").build();
  rep.line(!criteria::back_door(a, "X", "Y", {"T"}), "counter back-door (X,Y | {T}) on fixture A is false");
  rep.line(!criteria::conditional_iv(c, "X", "Y", "T", {}), "counter conditional instrument T for (X,Y) on fixture C is false");
  rep.line(!criteria::single_door(confounded, "A", "B", {}), "counter single-door A -> B with A <-> B is false");
  return rep.finish();
}

}  // namespace surrogate::cli
