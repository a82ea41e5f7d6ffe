#pragma once

// JSON file formats. Every artifact carries "kind" and "version"; output is
// canonical (sorted keys, sorted lists) so that bytes can be hashed.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "csheaf/constructions.hpp"
#include "csheaf/error.hpp"
#include "csheaf/fincat.hpp"
#include "csheaf/presheaf.hpp"
#include "csheaf/simplicial.hpp"
#include "csheaf/site.hpp"

namespace csheaf::io {

using json = nlohmann::json;

inline constexpr int format_version = 1;

inline json parse(std::string_view text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    fail(ErrorKind::parse, source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON");
  }
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

/// FNV-1a over the compact canonical serialization.
inline std::string content_hash(const json& j) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Schema helpers

namespace detail {

[[noreturn]] inline void schema(const std::string& where, const std::string& what) {
  fail(ErrorKind::schema, where + ": " + what);
}

inline const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) schema(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema(where, std::string("missing field '") + key + "'");
  return *it;
}

inline std::string str(const json& j, const std::string& where) {
  if (!j.is_string()) schema(where, "expected a string");
  return j.get<std::string>();
}

inline std::vector<std::string> strings(const json& j, const std::string& where) {
  if (!j.is_array()) schema(where, "expected a list of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(str(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

inline std::map<std::string, std::string> string_map(const json& j, const std::string& where) {
  if (!j.is_object()) schema(where, "expected an object of strings");
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : j.items()) out[k] = str(v, where + "." + k);
  return out;
}

inline void header(const json& j, const std::string& kind, const std::string& where) {
  const auto k = str(field(j, "kind", where), where + ".kind");
  if (k != kind) schema(where, "expected kind '" + kind + "', found '" + k + "'");
  const auto& v = field(j, "version", where);
  if (!v.is_number_integer() || v.get<int>() != format_version)
    schema(where, "unsupported version (expected " + std::to_string(format_version) + ")");
}

inline std::string kind_of(const json& j, const std::string& where) {
  return str(field(j, "kind", where), where + ".kind");
}

}  // namespace detail

inline std::string kind_of(const json& j, const std::string& where) { return detail::kind_of(j, where); }

// ---------------------------------------------------------------------------
// Categories and sites

inline CategoryData category_from_json(const json& j, const std::string& where) {
  using namespace detail;
  CategoryData d;
  d.objects = strings(field(j, "objects", where), where + ".objects");
  const auto& ms = field(j, "morphisms", where);
  if (!ms.is_array()) schema(where + ".morphisms", "expected a list");
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const auto w = where + ".morphisms[" + std::to_string(i) + "]";
    d.morphisms.push_back({str(field(ms[i], "id", w), w + ".id"), str(field(ms[i], "dom", w), w + ".dom"),
                           str(field(ms[i], "cod", w), w + ".cod")});
  }
  d.identities = string_map(field(j, "identities", where), where + ".identities");
  const auto& cs = field(j, "compose", where);
  if (!cs.is_array()) schema(where + ".compose", "expected a list of triples");
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const auto w = where + ".compose[" + std::to_string(i) + "]";
    auto t = strings(cs[i], w);
    if (t.size() != 3) schema(w, "expected [g, f, g∘f]");
    d.compose.push_back({t[0], t[1], t[2]});
  }
  return d;
}

inline json category_to_json(const CategoryData& d) {
  json j = json::object();
  auto objects = d.objects;
  std::sort(objects.begin(), objects.end());
  j["objects"] = objects;
  auto ms = d.morphisms;
  std::sort(ms.begin(), ms.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  j["morphisms"] = json::array();
  for (const auto& m : ms) j["morphisms"].push_back({{"id", m.id}, {"dom", m.dom}, {"cod", m.cod}});
  j["identities"] = d.identities;
  auto cs = d.compose;
  std::sort(cs.begin(), cs.end());
  j["compose"] = json::array();
  for (const auto& c : cs) j["compose"].push_back({c[0], c[1], c[2]});
  return j;
}

inline SiteData site_from_json(const json& j, const std::string& where, const std::string& default_name) {
  using namespace detail;
  header(j, "site", where);
  SiteData d;
  d.name = j.contains("name") ? str(j["name"], where + ".name") : default_name;
  d.category = category_from_json(j, where);
  if (j.contains("terminal") && !j["terminal"].is_null()) d.terminal = str(j["terminal"], where + ".terminal");
  const auto& covers = field(j, "covers", where);
  if (!covers.is_object()) schema(where + ".covers", "expected an object");
  for (const auto& [obj, fams] : covers.items()) {
    const auto w = where + ".covers." + obj;
    if (!fams.is_array()) schema(w, "expected a list of families");
    for (std::size_t i = 0; i < fams.size(); ++i) d.covers[obj].push_back(strings(fams[i], w + "[" + std::to_string(i) + "]"));
  }
  return d;
}

inline json site_to_json(const SiteData& d) {
  json j = category_to_json(d.category);
  j["kind"] = "site";
  j["version"] = format_version;
  j["name"] = d.name;
  if (d.terminal) j["terminal"] = *d.terminal;
  json covers = json::object();
  for (auto [obj, fams] : d.covers) {
    for (auto& f : fams) std::sort(f.begin(), f.end());
    std::sort(fams.begin(), fams.end());
    covers[obj] = fams;
  }
  j["covers"] = covers;
  return j;
}

/// Shapes may be given as a bare category or as a site (covers ignored).
inline CategoryData shape_from_json(const json& j, const std::string& where) {
  const auto k = detail::kind_of(j, where);
  if (k != "category" && k != "site") detail::schema(where, "expected kind 'category' or 'site'");
  detail::header(j, k, where);
  return category_from_json(j, where);
}

inline json shape_to_json(const CategoryData& d) {
  json j = category_to_json(d);
  j["kind"] = "category";
  j["version"] = format_version;
  return j;
}

// ---------------------------------------------------------------------------
// Presheaves, maps, complexes

inline PresheafData presheaf_from_json(const json& j, const std::string& where) {
  using namespace detail;
  header(j, "presheaf", where);
  PresheafData d;
  d.site = str(field(j, "site", where), where + ".site");
  const auto& plots = field(j, "plots", where);
  if (!plots.is_object()) schema(where + ".plots", "expected an object");
  for (const auto& [obj, list] : plots.items()) d.plots[obj] = strings(list, where + ".plots." + obj);
  const auto& rs = field(j, "restrict", where);
  if (!rs.is_array()) schema(where + ".restrict", "expected a list");
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const auto w = where + ".restrict[" + std::to_string(i) + "]";
    const auto mor = str(field(rs[i], "morphism", w), w + ".morphism");
    if (d.restrict.contains(mor)) schema(w, "second table for morphism '" + mor + "'");
    d.restrict[mor] = string_map(field(rs[i], "map", w), w + ".map");
  }
  return d;
}

inline json presheaf_to_json(const PresheafData& d) {
  json j = json::object();
  j["kind"] = "presheaf";
  j["version"] = format_version;
  j["site"] = d.site;
  json plots = json::object();
  for (auto [obj, list] : d.plots) {
    std::sort(list.begin(), list.end());
    plots[obj] = list;
  }
  j["plots"] = plots;
  j["restrict"] = json::array();
  for (const auto& [mor, table] : d.restrict) j["restrict"].push_back({{"morphism", mor}, {"map", table}});
  return j;
}

inline json presheaf_to_json(const Presheaf& x) { return presheaf_to_json(x.data()); }

inline MapData map_from_json(const json& j, const std::string& where) {
  using namespace detail;
  header(j, "map", where);
  MapData d;
  d.source = str(field(j, "source", where), where + ".source");
  d.target = str(field(j, "target", where), where + ".target");
  const auto& cs = field(j, "components", where);
  if (!cs.is_object()) schema(where + ".components", "expected an object");
  for (const auto& [obj, table] : cs.items()) d.components[obj] = string_map(table, where + ".components." + obj);
  return d;
}

inline json map_to_json(const MapData& d) {
  json j = json::object();
  j["kind"] = "map";
  j["version"] = format_version;
  j["source"] = d.source;
  j["target"] = d.target;
  j["components"] = d.components;
  return j;
}

inline json map_to_json(const SheafMap& m, const std::string& source, const std::string& target) {
  return map_to_json(map_data(m, source, target));
}

inline SimplicialComplex complex_from_json(const json& j, const std::string& where) {
  using namespace detail;
  header(j, "complex", where);
  SimplicialComplex k;
  k.vertices = strings(field(j, "vertices", where), where + ".vertices");
  const auto& ss = field(j, "simplices", where);
  if (!ss.is_array()) schema(where + ".simplices", "expected a list of vertex lists");
  for (std::size_t i = 0; i < ss.size(); ++i) k.simplices.push_back(strings(ss[i], where + ".simplices[" + std::to_string(i) + "]"));
  return k;
}

inline json complex_to_json(const SimplicialComplex& k) {
  const auto c = k.canonical();
  json j = json::object();
  j["kind"] = "complex";
  j["version"] = format_version;
  j["vertices"] = c.vertices;
  j["simplices"] = c.simplices;
  return j;
}

// ---------------------------------------------------------------------------
// References between files

struct DiagramSpec {
  std::string shape;
  std::map<std::string, std::string> nodes;  // shape object -> presheaf ref
  std::map<std::string, std::string> edges;  // shape morphism -> map ref
};

inline DiagramSpec diagram_from_json(const json& j, const std::string& where) {
  using namespace detail;
  header(j, "diagram", where);
  return {str(field(j, "shape", where), where + ".shape"), string_map(field(j, "nodes", where), where + ".nodes"),
          j.contains("edges") ? string_map(j["edges"], where + ".edges") : std::map<std::string, std::string>{}};
}

inline json diagram_to_json(const DiagramSpec& d) {
  return {{"kind", "diagram"}, {"version", format_version}, {"shape", d.shape}, {"nodes", d.nodes}, {"edges", d.edges}};
}

/// A space over a base: total and base presheaves plus the projection map.
/// The base may be the literal "terminal".
struct BundleSpec {
  std::string total;
  std::string base;
  std::string projection;  // empty when the base is terminal
};

inline BundleSpec bundle_from_json(const json& j, const std::string& where) {
  using namespace detail;
  header(j, "bundle", where);
  BundleSpec b{str(field(j, "total", where), where + ".total"), str(field(j, "base", where), where + ".base"), {}};
  if (b.base != "terminal") b.projection = str(field(j, "projection", where), where + ".projection");
  return b;
}

// ---------------------------------------------------------------------------
// Reports

inline json violations_to_json(const ValidationReport& r) {
  json out = json::array();
  for (const auto& v : r.violations) {
    json e = {{"kind", v.kind}, {"witness", v.witness}};
    if (!v.message.empty()) e["message"] = v.message;
    if (v.structural) e["structural"] = true;
    out.push_back(e);
  }
  return out;
}

inline json plot_counts(const Presheaf& x) {
  json j = json::object();
  const auto& cat = x.category();
  for (std::size_t d = 0; d < cat.object_count(); ++d) j[cat.object_id(static_cast<int>(d))] = x.size(static_cast<int>(d));
  return j;
}

}  // namespace csheaf::io
