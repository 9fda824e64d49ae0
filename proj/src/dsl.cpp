#include "surrogate/dsl.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <json.hpp>
#include <set>
#include <vector>

#include "surrogate/error.hpp"

namespace surrogate::dsl {

namespace {

struct Token {
  std::string text;
  std::size_t column;  // 1-based
};

[[noreturn]] void parse_error(std::size_t line, std::size_t column, const std::string& what) {
  throw Error(ErrorKind::Parse,
              "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what);
}

// Splits a line into words, with "->", "<->" and ":" as standalone tokens.
std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (c == '#') break;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (line.substr(i, 3) == "<->") {
      out.push_back({"<->", i + 1});
      i += 3;
    } else if (line.substr(i, 2) == "->") {
      out.push_back({"->", i + 1});
      i += 2;
    } else if (c == ':') {
      out.push_back({":", i + 1});
      ++i;
    } else {
      std::size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])) && line[j] != '#' &&
             line[j] != ':' && line.substr(j, 2) != "->" && line.substr(j, 3) != "<->")
        ++j;
      out.push_back({std::string(line.substr(i, j - i)), i + 1});
      i = j;
    }
  }
  return out;
}

double parse_number(const Token& tok, std::size_t line) {
  double v = 0.0;
  const char* first = tok.text.data();
  const char* last = first + tok.text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v))
    parse_error(line, tok.column, "malformed number '" + tok.text + "'");
  return v;
}

}  // namespace

bool GraphDocument::has_complete_coefficients() const {
  for (const auto& e : diagram.directed_edges())
    if (!coefficients.count(e)) return false;
  return true;
}

sem::LinearSEM GraphDocument::to_sem() const {
  for (const auto& e : diagram.directed_edges())
    if (!coefficients.count(e))
      throw Error(ErrorKind::Parse, "edge " + e.from + " -> " + e.to +
                                        " has no coefficient; simulation needs every edge annotated");
  return sem::LinearSEM::with_unit_variances(diagram, coefficients, error_covariances);
}

GraphDocument parse_graph(std::string_view text) {
  GraphDocument doc;
  doc.source = std::string(text);

  std::map<std::string, std::size_t> declared_at;
  std::vector<std::pair<std::string, graph::Observability>> vertices;
  std::map<DirectedEdge, std::size_t> directed_at;
  std::map<BidirectedEdge, std::size_t> bidirected_at;
  std::map<std::string, std::set<std::string>> children;

  // Path from `from` to `to` along edges seen so far, as edge list, or empty.
  auto find_path = [&](const std::string& from, const std::string& to) {
    std::map<std::string, std::string> prev;
    std::vector<std::string> stack{from};
    std::set<std::string> seen{from};
    while (!stack.empty()) {
      std::string v = stack.back();
      stack.pop_back();
      if (v == to) break;
      for (const auto& c : children[v])
        if (seen.insert(c).second) {
          prev[c] = v;
          stack.push_back(c);
        }
    }
    std::vector<DirectedEdge> path;
    if (!seen.count(to)) return path;
    for (std::string v = to; v != from; v = prev[v]) path.push_back({prev[v], v});
    return path;
  };

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    start = end + 1;

    const auto toks = tokenize(line);
    if (toks.empty()) {
      if (end == text.size()) break;
      continue;
    }

    const std::string& head = toks[0].text;
    if (head == "observed" || head == "latent") {
      if (toks.size() < 2) parse_error(line_no, toks[0].column, "'" + head + "' needs at least one name");
      const auto o = head == "latent" ? graph::Observability::Latent : graph::Observability::Observed;
      for (std::size_t i = 1; i < toks.size(); ++i) {
        const auto& name = toks[i];
        if (!graph::is_valid_identifier(name.text))
          parse_error(line_no, name.column, "invalid name '" + name.text + "'");
        if (auto it = declared_at.find(name.text); it != declared_at.end())
          parse_error(line_no, name.column,
                      "'" + name.text + "' already declared on line " + std::to_string(it->second));
        declared_at[name.text] = line_no;
        vertices.emplace_back(name.text, o);
      }
    } else if (toks.size() >= 3 && (toks[1].text == "->" || toks[1].text == "<->")) {
      const Token& a = toks[0];
      const Token& arrow = toks[1];
      const Token& b = toks[2];
      for (const auto* t : {&a, &b})
        if (!declared_at.count(t->text)) parse_error(line_no, t->column, "undeclared name '" + t->text + "'");
      if (a.text == b.text) parse_error(line_no, a.column, "self-loop on '" + a.text + "'");

      std::optional<double> value;
      if (toks.size() > 3) {
        if (toks[3].text != ":") parse_error(line_no, toks[3].column, "expected ':' before annotation");
        if (toks.size() != 5) parse_error(line_no, toks[3].column, "expected exactly one number after ':'");
        value = parse_number(toks[4], line_no);
      }

      if (arrow.text == "->") {
        DirectedEdge e{a.text, b.text};
        if (auto it = directed_at.find(e); it != directed_at.end())
          parse_error(line_no, a.column, "duplicate edge " + a.text + " -> " + b.text + " (first on line " +
                                             std::to_string(it->second) + ")");
        if (auto back = find_path(b.text, a.text); !back.empty()) {
          std::string lines;
          for (const auto& pe : back) lines += (lines.empty() ? "" : ", ") + std::to_string(directed_at[pe]);
          parse_error(line_no, a.column,
                      "edge " + a.text + " -> " + b.text + " closes a cycle with line(s) " + lines);
        }
        directed_at[e] = line_no;
        children[a.text].insert(b.text);
        if (value) {
          if (*value == 0.0) parse_error(line_no, toks[4].column, "path coefficient must be nonzero");
          doc.coefficients[e] = *value;
        }
      } else {
        BidirectedEdge e(a.text, b.text);
        if (auto it = bidirected_at.find(e); it != bidirected_at.end())
          parse_error(line_no, a.column, "duplicate edge " + a.text + " <-> " + b.text + " (first on line " +
                                             std::to_string(it->second) + ")");
        bidirected_at[e] = line_no;
        if (value) doc.error_covariances[e] = *value;
      }
    } else {
      parse_error(line_no, toks[0].column, "expected 'observed', 'latent' or an edge, got '" + head + "'");
    }
    if (end == text.size()) break;
  }

  PathDiagram::Builder builder;
  for (const auto& [v, o] : vertices) builder.add_vertex(v, o);
  for (const auto& [e, _] : directed_at) builder.add_edge(e.from, e.to);
  for (const auto& [e, _] : bidirected_at) builder.add_bidirected(e.a, e.b);
  doc.diagram = builder.build();
  return doc;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string print_graph(const GraphDocument& doc) {
  const PathDiagram& g = doc.diagram;
  std::string out;
  for (const auto& [kw, set] : {std::pair{"observed", g.observed()}, std::pair{"latent", g.latent()}}) {
    if (set.empty()) continue;
    out += kw;
    for (const auto& v : set) out += " " + v;
    out += "\n";
  }
  for (const auto& e : g.directed_edges()) {
    out += e.from + " -> " + e.to;
    if (auto it = doc.coefficients.find(e); it != doc.coefficients.end()) out += " : " + format_double(it->second);
    out += "\n";
  }
  for (const auto& e : g.bidirected_edges()) {
    out += e.a + " <-> " + e.b;
    if (auto it = doc.error_covariances.find(e); it != doc.error_covariances.end())
      out += " : " + format_double(it->second);
    out += "\n";
  }
  return out;
}

std::string print_graph(const PathDiagram& g) {
  GraphDocument doc;
  doc.diagram = g;
  return print_graph(doc);
}

std::string write_covariance(const LabeledCovariance& cov) {
  std::string out = "{\n  \"labels\": [";
  for (std::size_t i = 0; i < cov.labels().size(); ++i)
    out += (i ? ", " : "") + nlohmann::json(cov.labels()[i]).dump();
  out += "],\n  \"matrix\": [\n";
  const auto& m = cov.matrix();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out += "    [";
    for (Eigen::Index j = 0; j < m.cols(); ++j) out += (j ? ", " : "") + format_double(m(i, j));
    out += i + 1 < m.rows() ? "],\n" : "]\n";
  }
  out += "  ]\n}\n";
  return out;
}

LabeledCovariance read_covariance(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("covariance document: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("labels") || !doc.contains("matrix"))
    throw Error(ErrorKind::Parse, "covariance document needs 'labels' and 'matrix'");
  const auto& jl = doc["labels"];
  const auto& jm = doc["matrix"];
  if (!jl.is_array() || !jm.is_array()) throw Error(ErrorKind::Parse, "'labels' and 'matrix' must be arrays");
  Labels labels;
  for (const auto& l : jl) {
    if (!l.is_string()) throw Error(ErrorKind::Parse, "labels must be strings");
    labels.push_back(l.get<std::string>());
  }
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (static_cast<Eigen::Index>(jm.size()) != n)
    throw Error(ErrorKind::Parse, "matrix must have one row per label");
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = jm[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
      throw Error(ErrorKind::Parse, "matrix row " + std::to_string(i) + " must have " + std::to_string(n) + " entries");
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& x = row[static_cast<std::size_t>(j)];
      if (!x.is_number()) throw Error(ErrorKind::Parse, "matrix entries must be numbers");
      m(i, j) = x.get<double>();
    }
  }
  return LabeledCovariance(labels, m);
}

}  // namespace surrogate::dsl
