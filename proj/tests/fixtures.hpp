#pragma once

// Small sites and spaces shared by the test binaries.

#include <csheaf/csheaf.hpp>

#include <string>
#include <vector>

namespace fx {

using namespace csheaf;

inline SimplicialComplex vertex_complex(const std::string& v = "a") { return {{v}, {{v}}}; }
inline SimplicialComplex edge() { return {{"a", "b"}, {{"a"}, {"b"}, {"a", "b"}}}; }
inline SimplicialComplex two_points() { return {{"a", "b"}, {{"a"}, {"b"}}}; }
inline SimplicialComplex triangle_boundary() {
  return {{"a", "b", "c"}, {{"a"}, {"b"}, {"c"}, {"a", "b"}, {"a", "c"}, {"b", "c"}}};
}

inline const Site& F2() {
  static const Site s = build_site_F(2);
  return s;
}
inline const Site& F3() {
  static const Site s = build_site_F(3);
  return s;
}
inline const Site& F2sep() {
  static const Site s = build_site_F_sep(2);
  return s;
}

inline int obj(const Site& s, const std::string& id) { return s.category().object(id); }
inline int mor(const Site& s, const std::string& id) { return s.category().morphism_index(id); }

/// Concrete presheaf on a site with points whose plots over each object are
/// the constants into `points`, closed under restriction.
inline Presheaf constants(const Site& site, const std::vector<std::string>& points) {
  const auto& pts = site.points();
  std::vector<std::vector<std::vector<int>>> fns(site.category().object_count());
  for (std::size_t d = 0; d < fns.size(); ++d)
    for (std::size_t p = 0; p < points.size(); ++p)
      fns[d].push_back(std::vector<int>(pts.size(static_cast<int>(d)), static_cast<int>(p)));
  return concrete_presheaf(site, points, fns);
}

/// Every function is a plot.
inline Presheaf indiscrete(const Site& site, const std::vector<std::string>& points) {
  const auto& pts = site.points();
  std::vector<std::vector<std::vector<int>>> fns(site.category().object_count());
  for (std::size_t d = 0; d < fns.size(); ++d)
    fns[d] = detail::all_functions(static_cast<int>(pts.size(static_cast<int>(d))), static_cast<int>(points.size()));
  return concrete_presheaf(site, points, fns);
}

/// F_2 without the swap: a concrete site that is not subcanonical once 2 is
/// covered by its points.
inline Site monotone_site() {
  auto cat = category_of_functions({{"1", 1}, {"2", 2}}, {{"id1", "1", "1", {0}},
                                                          {"a", "1", "2", {0}},
                                                          {"b", "1", "2", {1}},
                                                          {"!", "2", "1", {0, 0}},
                                                          {"id2", "2", "2", {0, 1}},
                                                          {"ca", "2", "2", {0, 0}},
                                                          {"cb", "2", "2", {1, 1}}});
  std::vector<CoveringFamily> covers{{cat.object("1"), {cat.morphism_index("id1")}},
                                     {cat.object("2"), {cat.morphism_index("a"), cat.morphism_index("b")}}};
  return Site::build(std::move(cat), std::move(covers), std::nullopt, "monotone");
}

}  // namespace fx
