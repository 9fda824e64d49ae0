#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <unistd.h>

#include "support.hpp"
#include "surrogate/cli.hpp"
#include "surrogate/dsl.hpp"
#include "surrogate/error.hpp"
#include "surrogate/fixtures.hpp"

using namespace surrogate;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string parse_error(const std::string& text) {
  try {
    dsl::parse_graph(text);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    return e.detail();
  }
  FAIL("parsed: " << text);
  return {};
}

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("surrogate-cli-test-" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string put(const std::string& name, const std::string& text) const {
    const auto p = (dir / name).string();
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }
};

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome call(std::vector<std::string> args) {
  args.insert(args.begin(), "surrogate");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("parse fixture A") {
  const auto doc = dsl::parse_graph(fixtures::fixture_a().source);
  CHECK(doc.diagram.vertices().size() == 6);
  CHECK(doc.diagram.directed_edges().size() == 6);
  CHECK(doc.diagram.is_latent("Y"));
  CHECK(doc.has_complete_coefficients());
  CHECK(doc.coefficients.at({"X", "Y"}) == 0.7);
}

TEST_CASE("parse errors carry locations") {
  CHECK(parse_error("observed A\nA -> A\n").find("line 2") != std::string::npos);
  const auto cyc = parse_error("observed X Y\nX -> Y\nY -> X\n");
  CHECK(cyc.find("line 3") != std::string::npos);
  CHECK(cyc.find("2") != std::string::npos);
  CHECK(cyc.find("cycle") != std::string::npos);
  CHECK(parse_error("observed A\nA -> B\n").find("line 2") != std::string::npos);
  CHECK(parse_error("observed A B\nA -> B : 0.5x\n").find("line 2") != std::string::npos);
  CHECK(parse_error("observed A B\nA -> B\nA -> B\n").find("line 3") != std::string::npos);
  CHECK(parse_error("observed A B\n\n# c\nA => B\n").find("line 4") != std::string::npos);
  CHECK(parse_error("observed A\nlatent A\n").find("line 2") != std::string::npos);
}

TEST_CASE("comments, blank lines and bidirected annotations") {
  const auto doc = dsl::parse_graph("# header\n\nobserved A B  # trailing\nA -> B : -0.25\nA <-> B : 0.1\n");
  CHECK(doc.diagram.has_bidirected("A", "B"));
  CHECK(doc.coefficients.at({"A", "B"}) == -0.25);
  CHECK(doc.error_covariances.at(graph::BidirectedEdge("B", "A")) == 0.1);
}

TEST_CASE("print then parse is the identity") {
  for (const auto* f : fixtures::all()) {
    const auto doc = fixtures::load(*f);
    const auto again = dsl::parse_graph(dsl::print_graph(doc));
    CHECK(again == doc);
    CHECK(dsl::print_graph(again) == dsl::print_graph(doc));
  }
  sem::Rng rng(55);
  for (int rep = 0; rep < 200; ++rep) {
    const auto g = testsupport::random_diagram(rng, 1 + rng.index(9), 0.4, 0.15);
    CHECK(dsl::parse_graph(dsl::print_graph(g)).diagram == g);
    if (rep % 2 == 0) {
      const auto m = sem::draw_standardized_model(g, rng);
      dsl::GraphDocument doc{"", g, m.coefficients(), {}};
      for (const auto& b : g.bidirected_edges()) doc.error_covariances[b] = m.error_cov(b.a, b.b);
      const auto back = dsl::parse_graph(dsl::print_graph(doc));
      CHECK(back == doc);
    }
  }
}

TEST_CASE("covariance documents round-trip exactly") {
  const auto cov = sem::implied_covariance(fixtures::load(fixtures::fixture_d()).to_sem());
  const auto back = dsl::read_covariance(dsl::write_covariance(cov));
  CHECK(back.labels() == cov.labels());
  CHECK(back.matrix() == cov.matrix());
  CHECK_THROWS_AS(dsl::read_covariance("{\"labels\": [\"A\"], \"matrix\": [[1, 2]]}"), Error);
  CHECK_THROWS_AS(dsl::read_covariance("{\"labels\": [\"A\", \"B\"], \"matrix\": [[1, 0.5], [0.4, 1]]}"), Error);
  CHECK_THROWS_AS(dsl::read_covariance("not json"), Error);
}

TEST_CASE("check subcommand") {
  Scratch s;
  const auto g = s.put("a.pd", fixtures::fixture_a().source);
  const auto ok = call({"check", "--graph", g, "--criterion", "theorem1", "--x", "X", "--y", "Y", "--u", "U",
                        "--w", "W", "--z", "Z", "--t", "T"});
  CHECK(ok.code == cli::kExitOk);
  const auto j = json::parse(ok.out);
  CHECK(j["status"] == "SATISFIED");
  CHECK(j["certificate"]["witnesses"]["R1"] == json({"U", "W", "X"}));
  CHECK(j["certificate"]["witnesses"]["R2"] == json({"T", "U", "W"}));

  const auto bad = call({"check", "--graph", g, "--criterion", "backdoor", "--x", "X", "--y", "Y", "--z", "T"});
  CHECK(bad.code == cli::kExitFailed);
  CHECK(json::parse(bad.out)["status"] == "NOT SATISFIED");

  const auto missing = call({"check", "--graph", (s.dir / "nope.pd").string(), "--criterion", "theorem1"});
  CHECK(missing.code == cli::kExitUsage);
  CHECK(json::parse(missing.err)["error"] == "Parse");
}

TEST_CASE("simulate and identify through files") {
  Scratch s;
  for (const auto* f : fixtures::all()) {
    CAPTURE(f->name);
    const auto g = s.put(f->name + ".pd", f->source);
    const auto sim = call({"simulate", "--graph", g, "--exact"});
    REQUIRE(sim.code == 0);
    const auto cov = dsl::read_covariance(sim.out);
    for (const auto& l : cov.labels()) CHECK_FALSE(fixtures::load(*f).diagram.is_latent(l));
    const auto c = s.put(f->name + ".json", sim.out);

    std::vector<std::string> args{"identify", "--graph", g, "--cov", c, "--strategy",
                                  std::string(criteria::to_string(f->strategy))};
    if (std::holds_alternative<criteria::RoleAssignment>(f->roles)) {
      const auto& r = std::get<criteria::RoleAssignment>(f->roles);
      for (const auto& [k, v] : std::vector<std::pair<std::string, std::string>>{
               {"--x", r.x}, {"--y", r.y}, {"--u", r.u}, {"--w", r.w}, {"--z", *r.z.begin()}, {"--t", *r.t.begin()}}) {
        args.push_back(k);
        args.push_back(v);
      }
    } else {
      const auto& r = std::get<criteria::DoubleRoleAssignment>(f->roles);
      for (const auto& [k, v] : std::vector<std::pair<std::string, std::string>>{
               {"--x1", r.x1}, {"--x2", r.x2}, {"--u1", r.u1}, {"--w1", r.w1}, {"--u2", r.u2}, {"--w2", r.w2}, {"--z", "Z"}}) {
        args.push_back(k);
        args.push_back(v);
      }
    }
    const auto id = call(args);
    REQUIRE(id.code == 0);
    const double tau = json::parse(id.out)["tau_squared"];
    CHECK(std::abs(tau - f->truth_tau_sq) < 1e-9);

    // file I/O matches the in-memory covariance exactly
    const auto doc = fixtures::load(*f);
    const auto mem = sem::implied_covariance(doc.to_sem()).marginal(cov.labels());
    CHECK(tau == gaussian::identify_tau_sq(mem, doc.diagram, f->roles, f->strategy).tau_squared);
  }
}

TEST_CASE("simulate flags") {
  Scratch s;
  const auto g = s.put("a.pd", fixtures::fixture_a().source);
  CHECK(call({"simulate", "--graph", g}).code == cli::kExitUsage);
  CHECK(call({"simulate", "--graph", g, "--exact", "--n", "100"}).code == cli::kExitUsage);
  const auto one = call({"--seed", "4", "simulate", "--graph", g, "--n", "200"});
  const auto two = call({"--seed", "4", "simulate", "--graph", g, "--n", "200"});
  CHECK(one.code == 0);
  CHECK(one.out == two.out);
  CHECK(call({"--seed", "5", "simulate", "--graph", g, "--n", "200"}).out != one.out);
}

TEST_CASE("identify on a sample covariance") {
  Scratch s;
  const auto g = s.put("a.pd", fixtures::fixture_a().source);
  // at 1e5 draws the redundant pivots can still disagree by more than 1%
  const auto sim = call({"--seed", "3", "simulate", "--graph", g, "--n", "1000000"});
  const auto c = s.put("a.json", sim.out);
  const std::vector<std::string> roles{"--x", "X", "--y", "Y", "--u", "U", "--w", "W", "--z", "Z", "--t", "T"};
  std::vector<std::string> plain{"identify", "--graph", g, "--cov", c, "--strategy", "backdoor-latent-response",
                                 "--regime", "sample"};
  plain.insert(plain.end(), roles.begin(), roles.end());
  const auto raw = call(plain);
  CHECK(raw.code == cli::kExitFailed);
  CHECK(json::parse(raw.err)["error"] == "NotStandardized");
  plain.push_back("--standardize");
  const auto std_run = call(plain);
  REQUIRE(std_run.code == 0);
  CHECK(std::abs(json::parse(std_run.out)["tau_squared"].get<double>() - 0.49) < 0.02);
}

TEST_CASE("strategies subcommand") {
  Scratch s;
  const auto g = s.put("d.pd", fixtures::fixture_d().source);
  const auto r = call({"strategies", "--graph", g, "--x", "X1", "--y", "X2"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  bool found = false;
  for (const auto& c : j)
    if (c["strategy"] == "double-latent" && c["roles"]["u1"] == "U1" && c["roles"]["u2"] == "U2" &&
        c["roles"]["w1"] == "W1" && c["roles"]["w2"] == "W2" && c["roles"]["z"] == json({"Z"}))
      found = true;
  CHECK(found);
}

TEST_CASE("usage errors") {
  CHECK(call({}).code == cli::kExitUsage);
  CHECK(call({"frobnicate"}).code == cli::kExitUsage);
  CHECK(call({"check", "--criterion", "theorem1"}).code == cli::kExitUsage);
}

TEST_CASE("selftest is deterministic") {
  Scratch s;
  std::ostringstream a, b;
  CHECK(cli::selftest((s.dir / "one").string(), 1, a) == 0);
  CHECK(cli::selftest((s.dir / "two").string(), 1, b) == 0);
  CHECK(a.str() == b.str());
  CHECK(a.str().find("[FAIL]") == std::string::npos);
}
