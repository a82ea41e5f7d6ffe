#pragma once

// Command-line front end. Every command prints one canonical JSON report on
// stdout. Exit codes: 0 success, 1 law failure (with witness), 2 usage or
// parse error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "csheaf/constructions.hpp"
#include "csheaf/io.hpp"
#include "csheaf/laws.hpp"
#include "csheaf/parallel.hpp"
#include "csheaf/quasitopos.hpp"
#include "csheaf/simplicial.hpp"
#include "csheaf/site_validation.hpp"

namespace csheaf::cli {

namespace fs = std::filesystem;
using io::json;

/// Loaded artifacts, cached by resolved path so that every reference to the
/// same file yields the same object. Each file read is recorded with its hash.
class Workspace {
 public:
  struct Input {
    std::string ref;
    std::string kind;
    std::string hash;
  };

  const std::vector<Input>& inputs() const { return inputs_; }

  /// A site file, or a builtin function site "F<n>" / "F<n>sep".
  Site site(const std::string& ref, const fs::path& dir = {}, bool require_category = true) {
    Site s;
    if (auto path = locate(ref, dir)) {
      const auto key = path->generic_string();
      auto it = sites_.find(key);
      if (it == sites_.end()) {
        const auto& doc = load(*path, "site");
        auto data = io::site_from_json(doc, key, path->stem().string());
        it = sites_.emplace(key, Site::from_data(data)).first;
      }
      s = it->second;
    } else {
      s = builtin_site(ref);
    }
    if (require_category) {
      auto report = validate_category(s.category());
      if (!report.ok()) throw Error(ErrorKind::validation, "site '" + s.name() + "' is not a category", report);
    }
    return s;
  }

  Presheaf presheaf(const std::string& ref, const fs::path& dir = {}) {
    const auto path = require(ref, dir);
    const auto key = path.generic_string();
    if (auto it = presheaves_.find(key); it != presheaves_.end()) return it->second;
    const auto& doc = load(path, "presheaf");
    auto data = io::presheaf_from_json(doc, key);
    auto s = site(data.site, path.parent_path());
    auto x = Presheaf::from_data(s, data);
    auto report = check_presheaf(x);
    if (!report.ok()) throw Error(ErrorKind::validation, "'" + key + "' is not a presheaf", report);
    presheaves_.emplace(key, x);
    return x;
  }

  SheafMap map(const std::string& ref, const fs::path& dir = {}) {
    const auto path = require(ref, dir);
    const auto& doc = load(path, "map");
    auto data = io::map_from_json(doc, path.generic_string());
    auto x = presheaf(data.source, path.parent_path());
    auto y = presheaf(data.target, path.parent_path());
    auto m = map_from_data(x, y, data);
    check_map_shape(m);
    return m;
  }

  /// Map data read against given ends, for maps out of computed objects.
  SheafMap map_between(const std::string& ref, const Presheaf& x, const Presheaf& y) {
    const auto path = require(ref, {});
    auto data = io::map_from_json(load(path, "map"), path.generic_string());
    auto m = map_from_data(x, y, data);
    check_map_shape(m);
    return m;
  }

  SimplicialComplex complex(const std::string& ref, const fs::path& dir = {}) {
    const auto path = require(ref, dir);
    auto k = io::complex_from_json(load(path, "complex"), path.generic_string());
    auto report = validate_complex(k);
    if (!report.ok()) throw Error(ErrorKind::validation, "'" + path.generic_string() + "' is not a simplicial complex", report);
    return k;
  }

  FinCategory shape(const std::string& ref, const fs::path& dir = {}) {
    const auto path = require(ref, dir);
    auto cat = FinCategory::build(io::shape_from_json(load(path, ""), path.generic_string()));
    auto report = validate_category(cat);
    if (!report.ok()) throw Error(ErrorKind::validation, "shape '" + path.generic_string() + "' is not a category", report);
    return cat;
  }

  struct LoadedDiagram {
    Site site;
    Diagram diagram;
    io::DiagramSpec spec;
  };

  LoadedDiagram diagram(const std::string& ref) {
    const auto path = require(ref, {});
    const auto& doc = load(path, "diagram");
    auto spec = io::diagram_from_json(doc, path.generic_string());
    const auto dir = path.parent_path();
    auto shape_cat = shape(spec.shape, dir);
    std::vector<Presheaf> nodes;
    for (std::size_t j = 0; j < shape_cat.object_count(); ++j) {
      const auto& obj = shape_cat.object_id(static_cast<int>(j));
      auto it = spec.nodes.find(obj);
      if (it == spec.nodes.end()) fail(ErrorKind::schema, path.generic_string() + ": no node for shape object '" + obj + "'");
      nodes.push_back(presheaf(it->second, dir));
    }
    for (const auto& [obj, r] : spec.nodes)
      if (shape_cat.find_object(obj) < 0) fail(ErrorKind::schema, path.generic_string() + ": node for unknown object '" + obj + "'");
    std::map<std::string, SheafMap> edges;
    for (const auto& [mor, r] : spec.edges) {
      if (shape_cat.find_morphism(mor) < 0) fail(ErrorKind::schema, path.generic_string() + ": edge for unknown morphism '" + mor + "'");
      edges.emplace(mor, map(r, dir));
    }
    Site s;
    if (doc.contains("site"))
      s = site(io::detail::str(doc["site"], path.generic_string() + ".site"), dir);
    else if (!nodes.empty())
      s = nodes.front().site();
    else
      fail(ErrorKind::schema, path.generic_string() + ": an empty diagram needs a 'site' field");
    return {s, make_diagram(std::move(shape_cat), std::move(nodes), edges), spec};
  }

  /// A bundle file, or a presheaf file read as a space over the terminal space.
  SpaceOverBase bundle(const std::string& ref) {
    const auto path = require(ref, {});
    const auto& doc = load(path, "");
    const auto kind = io::kind_of(doc, path.generic_string());
    if (kind == "presheaf") return over_terminal(presheaf(ref));
    auto spec = io::bundle_from_json(doc, path.generic_string());
    const auto dir = path.parent_path();
    auto total = presheaf(spec.total, dir);
    if (spec.base == "terminal") return over_terminal(total);
    SpaceOverBase b{total, presheaf(spec.base, dir), map(spec.projection, dir)};
    check_over_base(b);
    return b;
  }

  std::string kind(const std::string& ref) {
    const auto path = require(ref, {});
    return io::kind_of(load(path, ""), path.generic_string());
  }

  Site builtin_site(const std::string& name) {
    static const std::regex pattern("F([0-9]+)(sep)?");
    std::smatch m;
    if (!std::regex_match(name, m, pattern)) fail(ErrorKind::usage, "cannot find '" + name + "'");
    auto it = builtins_.find(name);
    if (it == builtins_.end()) {
      const int n = std::stoi(m[1]);
      auto s = m[2].matched ? build_site_F_sep(n) : build_site_F(n);
      it = builtins_.emplace(name, s).first;
      inputs_.push_back({name, "site", io::content_hash(io::site_to_json(s.data()))});
    }
    return it->second;
  }

 private:
  static std::optional<fs::path> locate(const std::string& ref, const fs::path& dir) {
    const fs::path base = (dir.empty() || fs::path(ref).is_absolute()) ? fs::path(ref) : dir / ref;
    for (auto p : {base, fs::path(base.string() + ".json")}) {
      std::error_code ec;
      if (fs::is_regular_file(p, ec)) return p.lexically_normal();
    }
    return std::nullopt;
  }

  static fs::path require(const std::string& ref, const fs::path& dir) {
    auto p = locate(ref, dir);
    if (!p) fail(ErrorKind::usage, "cannot find '" + ref + "'");
    return *p;
  }

  const json& load(const fs::path& path, const std::string& kind) {
    const auto key = path.generic_string();
    auto it = files_.find(key);
    if (it == files_.end()) {
      std::ifstream in(path, std::ios::binary);
      if (!in) fail(ErrorKind::usage, "cannot read '" + key + "'");
      std::stringstream buf;
      buf << in.rdbuf();
      auto doc = io::parse(buf.str(), key);
      if (!doc.is_object()) fail(ErrorKind::schema, key + ": expected an object");
      it = files_.emplace(key, std::move(doc)).first;
      inputs_.push_back({key, io::kind_of(it->second, key), io::content_hash(it->second)});
    }
    if (!kind.empty()) io::detail::header(it->second, kind, key);
    return it->second;
  }

  std::map<std::string, json> files_;
  std::map<std::string, Site> sites_;
  std::map<std::string, Site> builtins_;
  std::map<std::string, Presheaf> presheaves_;
  std::vector<Input> inputs_;
};

inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::parse:
    case ErrorKind::schema:
    case ErrorKind::usage:
    case ErrorKind::unknown_id:
    case ErrorKind::size_bound:
    case ErrorKind::sieve_explosion:
      return 2;
    default:
      return 1;
  }
}

namespace detail {

inline json certificate(const Certificate& c) { return {{"pass", c.pass}, {"witness", c.witness}}; }

inline json certificates(const SiteCertificates& c) {
  return {{"coverage_axiom", certificate(c.coverage_axiom)},
          {"faithful", certificate(c.faithful)},
          {"jointly_surjective", certificate(c.jointly_surjective)},
          {"subcanonical", certificate(c.subcanonical)}};
}

inline json sheaf_check(const Presheaf& x, const SheafCheck& s) {
  json j = {{"pass", s.sheaf}};
  if (s.sheaf) return j;
  const auto& cat = x.category();
  const int d = s.family.codomain;
  j["failure"] = to_string(s.failure);
  j["object"] = cat.object_id(d);
  j["family"] = family_label(cat, s.family.members);
  json assignment = json::object();
  for (std::size_t k = 0; k < s.compatible.members.size(); ++k) {
    const int f = s.compatible.members[k];
    assignment[cat.morphism_id(f)] = x.plot_id(cat.dom(f), s.compatible.assignment[k]);
  }
  j["assignment"] = assignment;
  std::vector<std::string> gl;
  for (int g : s.gluings) gl.push_back(x.plot_id(d, g));
  j["gluings"] = gl;
  return j;
}

inline json strong(const StrongCheck& s) { return {{"pass", s.strong}, {"witness", s.witness}}; }

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string strip_label(const std::string& arg) {
  auto eq = arg.find('=');
  if (eq != std::string::npos && eq <= 2) return arg.substr(eq + 1);
  return arg;
}

inline void save(const std::string& path, const json& j) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::usage, "cannot write '" + path + "'");
  out << io::dump(j);
}

inline std::vector<int> point_indices(const Presheaf& x, const std::vector<std::string>& names) {
  const int t = x.site().terminal();
  std::vector<int> out;
  for (const auto& n : names) {
    const int p = x.find_plot(t, n);
    if (p < 0) fail(ErrorKind::unknown_id, "no point '" + n + "'");
    out.push_back(p);
  }
  return out;
}

inline json named_result(const NamedResult& r, const std::vector<std::string>& leg_names) {
  json legs = json::array();
  for (std::size_t j = 0; j < r.cone.legs.size(); ++j) {
    const auto& l = r.cone.legs[j];
    const bool out = r.kind == ShapeKind::product || r.kind == ShapeKind::equalizer || r.kind == ShapeKind::pullback ||
                     r.kind == ShapeKind::terminal;
    legs.push_back(out ? io::map_to_json(l, "result", leg_names[j]) : io::map_to_json(l, leg_names[j], "result"));
  }
  return {{"shape", to_string(r.kind)},
          {"result", io::presheaf_to_json(r.cone.apex)},
          {"legs", legs},
          {"cross_checked", r.cross_checked},
          {"counts", io::plot_counts(r.cone.apex)}};
}

}  // namespace detail

/// Parses arguments, runs one command, prints the report. Returns the exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Concrete sheaves on finite sites"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 1;
  std::uint64_t seed = 0;
  app.add_option("--threads", threads, "worker threads for per-object loops")->check(CLI::Range(1, 256));
  app.add_option("--seed", seed, "seed for randomized suites");

  Workspace ws;
  std::string command;
  std::function<json()> action;
  auto sub = [&](const char* name, const char* help) {
    auto* s = app.add_subcommand(name, help);
    s->callback([&command, name] { command = name; });
    return s;
  };

  std::string a1, a2, a3, site_ref, save_path, points, classes, map_ref, base = "terminal";
  std::vector<std::string> args;
  int n = 0, trials = 10;
  bool sep = false;

  auto* validate_site = sub("validate-site", "certify a concrete site");
  validate_site->add_option("site", a1)->required();
  auto* check_sheaf = sub("check-sheaf", "sheaf, separation and concreteness checks");
  check_sheaf->add_option("presheaf", a1)->required();
  auto* sheafify_cmd = sub("sheafify", "sheafification with its unit");
  auto* plus_cmd = sub("plus", "one plus construction");
  auto* concretize_cmd = sub("concretize", "identify plots with equal underlying functions");
  for (auto* s : {sheafify_cmd, plus_cmd, concretize_cmd}) {
    s->add_option("presheaf", a1)->required();
    s->add_option("--save", save_path, "write the result artifact");
  }
  auto* limit_cmd = sub("limit", "pointwise limit of a diagram");
  auto* colimit_cmd = sub("colimit", "colimit of a diagram");
  for (auto* s : {limit_cmd, colimit_cmd}) {
    s->add_option("diagram", a1)->required();
    s->add_option("--save", save_path, "write the result artifact");
  }
  auto* shape_cmd = sub("shape", "named limit or colimit");
  shape_cmd->add_option("kind", a1)->required();
  shape_cmd->add_option("args", args, "presheaves (product, coproduct) or two maps");
  shape_cmd->add_option("--site", site_ref, "site for terminal/initial");
  shape_cmd->add_option("--save", save_path, "write the result artifact");
  auto* omega_cmd = sub("omega", "the classifier space");
  omega_cmd->add_option("--site", site_ref)->required();
  omega_cmd->add_option("--save", save_path, "write the result artifact");
  auto* subspace_cmd = sub("subspace", "subspace structure on a set of points");
  subspace_cmd->add_option("presheaf", a1)->required();
  subspace_cmd->add_option("--points", points, "comma-separated points to keep")->required();
  subspace_cmd->add_option("--save", save_path, "write the result artifact");
  auto* quotient_cmd = sub("quotient", "quotient structure by an equivalence on points");
  quotient_cmd->add_option("presheaf", a1)->required();
  quotient_cmd->add_option("--classes", classes, "classes as a,b;c (unlisted points stay alone)")->required();
  quotient_cmd->add_option("--save", save_path, "write the result artifact");
  auto* classify_cmd = sub("classify", "mono, epi, strong mono, strong epi");
  classify_cmd->add_option("map", a1)->required();
  auto* chi_cmd = sub("chi", "characteristic map of a strong mono");
  chi_cmd->add_option("map", a1)->required();
  auto* exp_cmd = sub("exp", "exponential over a base");
  exp_cmd->add_option("X", a1)->required();
  exp_cmd->add_option("Y", a2)->required();
  exp_cmd->add_option("--base", base, "'terminal', or use bundle files");
  exp_cmd->add_option("--save", save_path, "write the result artifact");
  auto* curry_cmd = sub("curry", "currying bijection for Z x_B X -> Y");
  curry_cmd->add_option("Z", a1)->required();
  curry_cmd->add_option("X", a2)->required();
  curry_cmd->add_option("Y", a3)->required();
  curry_cmd->add_option("--map", map_ref, "a map Z x_B X -> Y to curry");
  auto* fsite_cmd = sub("fsite", "the finite-sets site F_n");
  fsite_cmd->add_option("--n", n)->required();
  fsite_cmd->add_flag("--sep", sep, "also cover by points");
  fsite_cmd->add_option("--save", save_path, "write the result artifact");
  auto* from_complex = sub("from-complex", "concrete sheaf of a simplicial complex");
  from_complex->add_option("complex", a1)->required();
  from_complex->add_option("--n", n, "largest object (default: largest simplex)");
  from_complex->add_option("--save", save_path, "write the result artifact");
  auto* to_complex = sub("to-complex", "simplicial complex of a concrete sheaf");
  to_complex->add_option("presheaf", a1)->required();
  to_complex->add_option("--save", save_path, "write the result artifact");
  auto* roundtrip_cmd = sub("roundtrip", "complex/sheaf round trip");
  roundtrip_cmd->add_option("file", a1)->required();
  roundtrip_cmd->add_option("--n", n, "largest object for complexes");
  auto* laws_cmd = sub("laws", "run the invariant suite on a site");
  laws_cmd->add_option("--site", site_ref)->required();
  laws_cmd->add_option("--trials", trials, "instances per law")->check(CLI::Range(1, 10000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "csheaf: " << e.what() << "\n";
    return 2;
  }
  set_threads(threads);

  json body;
  int code = 0;
  try {
    if (command == "validate-site") {
      auto s = ws.site(a1, {}, false);
      auto c = validate_concrete_site(s);
      body = {{"site", s.name()}, {"certificates", detail::certificates(c)}, {"violations", io::violations_to_json(c.report)}};
      json counts = {{"objects", s.category().object_count()}, {"morphisms", s.category().morphism_count()}};
      if (validate_category(s.category()).ok()) {
        json sieves = json::object();
        for (std::size_t d = 0; d < s.category().object_count(); ++d)
          sieves[s.category().object_id(static_cast<int>(d))] = covering_sieves(s, static_cast<int>(d)).size();
        counts["covering_sieves"] = sieves;
      }
      body["counts"] = counts;
      body["ok"] = c.ok();
    } else if (command == "check-sheaf") {
      auto x = ws.presheaf(a1);
      auto s = is_sheaf(x);
      body = {{"sheaf", detail::sheaf_check(x, s)},
              {"separated", detail::sheaf_check(x, is_separated(x))},
              {"counts", io::plot_counts(x)}};
      if (x.site().has_points()) {
        auto c = is_concrete(x);
        json cj = {{"pass", c.concrete}};
        if (!c.concrete)
          cj["witness"] = {x.category().object_id(c.object), x.plot_id(c.object, c.first), x.plot_id(c.object, c.second)};
        body["concrete"] = cj;
      }
      body["ok"] = s.sheaf;
    } else if (command == "sheafify") {
      auto x = ws.presheaf(a1);
      auto r = sheafify(x);
      body = {{"result", io::presheaf_to_json(r.sheaf)},
              {"unit", io::map_to_json(r.unit, a1, "result")},
              {"plus_steps", r.plus_steps},
              {"certificates", {{"sheaf", is_sheaf(r.sheaf).sheaf}}},
              {"counts", {{"input", io::plot_counts(x)}, {"result", io::plot_counts(r.sheaf)}}},
              {"ok", true}};
      if (x.site().has_points()) body["certificates"]["concrete"] = is_concrete(r.sheaf).concrete;
      detail::save(save_path, body["result"]);
    } else if (command == "plus") {
      auto x = ws.presheaf(a1);
      auto r = plus(x);
      body = {{"result", io::presheaf_to_json(r.presheaf)},
              {"unit", io::map_to_json(r.unit, a1, "result")},
              {"certificates", {{"separated", is_separated(r.presheaf).sheaf}, {"sheaf", is_sheaf(r.presheaf).sheaf}}},
              {"counts", {{"input", io::plot_counts(x)}, {"result", io::plot_counts(r.presheaf)}}},
              {"ok", true}};
      detail::save(save_path, body["result"]);
    } else if (command == "concretize") {
      auto x = ws.presheaf(a1);
      auto r = concretize(x);
      body = {{"result", io::presheaf_to_json(r.concrete)},
              {"quotient", io::map_to_json(r.quotient, a1, "result")},
              {"counts", {{"input", io::plot_counts(x)}, {"result", io::plot_counts(r.concrete)}}},
              {"ok", true}};
      detail::save(save_path, body["result"]);
    } else if (command == "limit" || command == "colimit") {
      auto d = ws.diagram(a1);
      std::vector<std::string> names;
      for (std::size_t j = 0; j < d.diagram.shape.object_count(); ++j)
        names.push_back(d.spec.nodes.at(d.diagram.shape.object_id(static_cast<int>(j))));
      json legs = json::object();
      Cone cone;
      if (command == "limit") {
        cone = limit(d.site, d.diagram);
        for (std::size_t j = 0; j < names.size(); ++j)
          legs[d.diagram.shape.object_id(static_cast<int>(j))] = io::map_to_json(cone.legs[j], "result", names[j]);
      } else {
        auto r = colimit_with_pointwise(d.site, d.diagram);
        cone = r.cocone;
        body["counts_pointwise"] = io::plot_counts(r.pointwise.apex);
        for (std::size_t j = 0; j < names.size(); ++j)
          legs[d.diagram.shape.object_id(static_cast<int>(j))] = io::map_to_json(cone.legs[j], names[j], "result");
      }
      body["result"] = io::presheaf_to_json(cone.apex);
      body["legs"] = legs;
      body["counts"] = io::plot_counts(cone.apex);
      body["certificates"] = {{"sheaf", is_sheaf(cone.apex).sheaf}};
      if (d.site.has_points()) body["certificates"]["concrete"] = is_concrete(cone.apex).concrete;
      body["ok"] = true;
      detail::save(save_path, body["result"]);
    } else if (command == "shape") {
      auto kind = shape_kind(a1);
      if (!kind) fail(ErrorKind::usage, "unknown shape '" + a1 + "'");
      std::vector<std::string> names = args;
      std::optional<NamedResult> r;
      switch (*kind) {
        case ShapeKind::terminal:
        case ShapeKind::initial: {
          if (site_ref.empty() || !args.empty()) fail(ErrorKind::usage, std::string(a1) + " takes only --site");
          auto s = ws.site(site_ref);
          r = *kind == ShapeKind::terminal ? terminal_object(s) : initial_object(s);
          break;
        }
        case ShapeKind::product:
        case ShapeKind::coproduct: {
          std::vector<Presheaf> xs;
          for (const auto& a : args) xs.push_back(ws.presheaf(a));
          Site s;
          if (!site_ref.empty())
            s = ws.site(site_ref);
          else if (!xs.empty())
            s = xs.front().site();
          else
            fail(ErrorKind::usage, "an empty " + a1 + " needs --site");
          r = *kind == ShapeKind::product ? product(s, xs) : coproduct(s, xs);
          break;
        }
        default: {
          if (args.size() != 2) fail(ErrorKind::usage, a1 + " takes two maps");
          auto f = ws.map(args[0]), g = ws.map(args[1]);
          names.clear();
          if (*kind == ShapeKind::equalizer)
            r = equalizer(f, g);
          else if (*kind == ShapeKind::coequalizer)
            r = coequalizer(f, g);
          else if (*kind == ShapeKind::pullback)
            r = pullback(f, g);
          else
            r = pushout(f, g);
          break;
        }
      }
      names.resize(r->cone.legs.size());
      for (std::size_t j = 0; j < names.size(); ++j)
        if (names[j].empty()) names[j] = r->diagram.shape.object_id(static_cast<int>(j));
      body = detail::named_result(*r, names);
      body["ok"] = r->cross_checked || !r->cone.apex.site().has_points();
      detail::save(save_path, body["result"]);
    } else if (command == "omega") {
      auto s = ws.site(site_ref);
      auto o = omega(s);
      body = {{"result", io::presheaf_to_json(o.sheaf)},
              {"top", io::map_to_json(o.top, "terminal", "result")},
              {"counts", io::plot_counts(o.sheaf)},
              {"points", o.sheaf.size(s.terminal())},
              {"certificates", {{"sheaf", is_sheaf(o.sheaf).sheaf}, {"concrete", is_concrete(o.sheaf).concrete}}},
              {"ok", true}};
      detail::save(save_path, body["result"]);
    } else if (command == "subspace") {
      auto x = ws.presheaf(a1);
      std::vector<bool> keep(static_cast<std::size_t>(x.size(x.site().terminal())), false);
      if (!points.empty())
        for (int p : detail::point_indices(x, detail::split(points, ','))) keep[p] = true;
      auto s = subspace_structure(x, keep);
      body = {{"result", io::presheaf_to_json(s.space)},
              {"inclusion", io::map_to_json(s.inclusion, "result", a1)},
              {"strong_mono", detail::strong(is_strong_mono(s.inclusion))},
              {"counts", io::plot_counts(s.space)},
              {"ok", true}};
      detail::save(save_path, body["result"]);
    } else if (command == "quotient") {
      auto x = ws.presheaf(a1);
      const int t = x.site().terminal();
      std::vector<int> label(static_cast<std::size_t>(x.size(t)), -1);
      int next = 0;
      for (const auto& group : detail::split(classes, ';')) {
        if (group.empty()) continue;
        for (int p : detail::point_indices(x, detail::split(group, ','))) {
          if (label[p] >= 0 && label[p] != next) fail(ErrorKind::usage, "point '" + x.plot_id(t, p) + "' is in two classes");
          label[p] = next;
        }
        ++next;
      }
      for (auto& l : label)
        if (l < 0) l = next++;
      auto q = quotient_structure(x, label);
      body = {{"result", io::presheaf_to_json(q.space)},
              {"projection", io::map_to_json(q.projection, a1, "result")},
              {"strong_epi", detail::strong(is_strong_epi(q.projection))},
              {"counts", io::plot_counts(q.space)},
              {"ok", true}};
      detail::save(save_path, body["result"]);
    } else if (command == "classify") {
      auto m = ws.map(a1);
      auto c = check_map(m);
      body = {{"natural", c.natural}, {"mono", c.mono}, {"epi", c.epi}};
      if (!c.natural) body["naturality_witness"] = c.naturality_witness;
      if (!c.mono) body["mono_witness"] = c.mono_witness;
      if (!c.epi) body["epi_witness"] = c.epi_witness;
      body["strong_mono"] = c.natural && c.mono ? detail::strong(is_strong_mono(m)) : json(nullptr);
      body["strong_epi"] = c.natural && c.epi ? detail::strong(is_strong_epi(m)) : json(nullptr);
      body["ok"] = c.natural;
    } else if (command == "chi") {
      auto m = ws.map(a1);
      auto c = characteristic_map(m);
      const int t = m.target.site().terminal();
      json ind = json::object();
      for (int p = 0; p < m.target.size(t); ++p)
        ind[m.target.plot_id(t, p)] = c.chi.target.plot_id(t, c.chi.underlying()[p]);
      body = {{"chi", io::map_to_json(c.chi, "target", "omega")},
              {"indicator", ind},
              {"qualifying", c.qualifying},
              {"pullback_iso", is_isomorphism(c.comparison)},
              {"ok", c.qualifying == 1}};
    } else if (command == "exp") {
      if (base != "terminal") fail(ErrorKind::usage, "--base takes 'terminal'; other bases come from bundle files");
      auto x = ws.bundle(detail::strip_label(a1));
      auto y = ws.bundle(detail::strip_label(a2));
      auto e = exponential_over_base(x, y);
      const int t = x.base.site().terminal();
      body = {{"result", io::presheaf_to_json(e.space.total)},
              {"projection", io::map_to_json(e.space.projection, "result", "base")},
              {"points", e.space.total.plots(t)},
              {"counts", {{"points", e.space.total.size(t)}, {"plots", io::plot_counts(e.space.total)}}},
              {"ok", true}};
      detail::save(save_path, body["result"]);
    } else if (command == "curry") {
      auto z = ws.bundle(detail::strip_label(a1));
      auto x = ws.bundle(detail::strip_label(a2));
      auto y = ws.bundle(detail::strip_label(a3));
      auto e = exponential_over_base(x, y);
      auto zx = fiber_product(z, x);
      auto over_zx = compose(z.projection, zx.cone.legs[0]);
      std::vector<SheafMap> flat, curried;
      for (auto& f : all_maps(zx.cone.apex, y.total))
        if (compose(y.projection, f).components == over_zx.components) flat.push_back(std::move(f));
      for (auto& g : all_maps(z.total, e.space.total))
        if (compose(e.space.projection, g).components == z.projection.components) curried.push_back(std::move(g));
      bool bijection = flat.size() == curried.size();
      std::set<std::vector<std::vector<int>>> images;
      for (const auto& f : flat) {
        auto g = curry(z, x, y, e, zx, f);
        images.insert(g.components);
        bijection = bijection && uncurry(y, e, zx, g) == f;
      }
      bijection = bijection && images.size() == curried.size();
      body = {{"counts", {{"maps_flat", flat.size()}, {"maps_curried", curried.size()}}}, {"bijection", bijection}};
      if (!map_ref.empty()) {
        auto f = ws.map_between(map_ref, zx.cone.apex, y.total);
        body["curried"] = io::map_to_json(curry(z, x, y, e, zx, f), "Z", "exponential");
      }
      body["ok"] = bijection;
    } else if (command == "fsite") {
      auto s = sep ? build_site_F_sep(n) : build_site_F(n);
      auto c = validate_concrete_site(s);
      body = {{"result", io::site_to_json(s.data())},
              {"certificates", detail::certificates(c)},
              {"counts", {{"objects", s.category().object_count()}, {"morphisms", s.category().morphism_count()}}},
              {"ok", c.ok()}};
      detail::save(save_path, body["result"]);
    } else if (command == "from-complex") {
      auto k = ws.complex(a1);
      const int need = std::max<int>(1, static_cast<int>(k.canonical().dimension_bound()));
      if (n == 0) n = need;
      auto x = complex_to_sheaf(k, ws.builtin_site("F" + std::to_string(n)));
      body = {{"result", io::presheaf_to_json(x)}, {"counts", io::plot_counts(x)}, {"ok", true}};
      detail::save(save_path, body["result"]);
    } else if (command == "to-complex") {
      auto x = ws.presheaf(a1);
      body = {{"result", io::complex_to_json(sheaf_to_complex(x))}, {"ok", true}};
      detail::save(save_path, body["result"]);
    } else if (command == "roundtrip") {
      RoundTrip r;
      if (ws.kind(a1) == "complex") {
        auto k = ws.complex(a1);
        if (n == 0) n = std::max<int>(1, static_cast<int>(k.canonical().dimension_bound()));
        r = equivalence_roundtrip(k, ws.builtin_site("F" + std::to_string(n)));
      } else {
        r = equivalence_roundtrip(ws.presheaf(a1));
      }
      body = {{"complex_equal", r.complex_equal}, {"isomorphism", r.isomorphism.has_value()},
              {"ok", r.complex_equal && r.isomorphism.has_value()}};
    } else if (command == "laws") {
      auto s = ws.site(site_ref);
      auto results = run_laws(s, seed, trials);
      json items = json::array();
      int passed = 0, failed = 0, skipped = 0;
      for (const auto& r : results) {
        json item = {{"name", r.name}, {"checked", r.checked}};
        if (r.skipped) {
          item["status"] = "skipped";
          ++skipped;
        } else if (r.pass) {
          item["status"] = "pass";
          ++passed;
        } else {
          item["status"] = "fail";
          item["witness"] = r.witness;
          ++failed;
        }
        items.push_back(item);
      }
      body = {{"site", s.name()}, {"seed", seed}, {"trials", trials}, {"items", items},
              {"counts", {{"passed", passed}, {"failed", failed}, {"skipped", skipped}}}, {"ok", failed == 0}};
    }
    code = body.value("ok", false) ? 0 : 1;
  } catch (const Error& e) {
    code = exit_code(e.kind());
    json error = {{"kind", to_string(e.kind())}, {"message", e.what()}};
    if (e.report()) error["violations"] = io::violations_to_json(*e.report());
    body = {{"ok", false}, {"error", error}};
    err << "csheaf: " << to_string(e.kind()) << ": " << e.what() << "\n";
  } catch (const std::exception& e) {
    code = 2;
    body = {{"ok", false}, {"error", {{"kind", "Error"}, {"message", e.what()}}}};
    err << "csheaf: " << e.what() << "\n";
  }
  body["command"] = command;
  json inputs = json::array();
  for (const auto& i : ws.inputs()) inputs.push_back({{"ref", i.ref}, {"kind", i.kind}, {"hash", i.hash}});
  body["inputs"] = inputs;
  out << io::dump(body);
  return code;
}

}  // namespace csheaf::cli
