#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "csheaf/error.hpp"
#include "csheaf/fincat.hpp"
#include "csheaf/presheaf.hpp"
#include "csheaf/site.hpp"
#include "csheaf/site_validation.hpp"

namespace csheaf {

namespace detail {

// All functions [0,m) → [0,k), in lexicographic order of their value lists.
inline std::vector<std::vector<int>> all_functions(int m, int k) {
  std::vector<std::vector<int>> out;
  if (k == 0) {
    if (m == 0) out.emplace_back();
    return out;
  }
  std::vector<int> fn(static_cast<std::size_t>(m), 0);
  for (;;) {
    out.push_back(fn);
    int i = m - 1;
    while (i >= 0 && fn[static_cast<std::size_t>(i)] == k - 1) fn[static_cast<std::size_t>(i--)] = 0;
    if (i < 0) break;
    ++fn[static_cast<std::size_t>(i)];
  }
  return out;
}

inline std::string fsite_morphism_id(int m, int k, const std::vector<int>& fn) {
  std::string s = std::to_string(m) + ">" + std::to_string(k) + ":";
  for (int v : fn) s += std::to_string(v);
  return s;
}

inline bool injective(const std::vector<int>& fn) {
  std::set<int> seen(fn.begin(), fn.end());
  return seen.size() == fn.size();
}

inline Site build_function_site(int n, bool separated, const Limits& limits) {
  if (n < 1 || n > limits.max_fsite_n)
    fail(ErrorKind::size_bound, "F_n needs 1 <= n <= " + std::to_string(limits.max_fsite_n));
  std::vector<std::pair<std::string, int>> objects;
  std::vector<FunctionMorphism> morphisms;
  for (int m = 1; m <= n; ++m) objects.emplace_back(std::to_string(m), m);
  for (int m = 1; m <= n; ++m)
    for (int k = 1; k <= n; ++k)
      for (auto& fn : all_functions(m, k))
        morphisms.push_back({fsite_morphism_id(m, k, fn), std::to_string(m), std::to_string(k), fn});
  FinCategory cat = category_of_functions(objects, morphisms, limits);
  std::vector<CoveringFamily> covers;
  for (int k = 1; k <= n; ++k) covers.push_back({cat.object(std::to_string(k)), {}});
  for (const auto& m : morphisms)
    if (injective(m.fn)) covers[static_cast<std::size_t>(std::stoi(m.cod) - 1)].members.push_back(cat.morphism_index(m.id));
  for (int k = 2; k <= n && separated; ++k) {
    const int d = cat.object(std::to_string(k));
    CoveringFamily pts{d, {}};
    for (int i = 0; i < k; ++i) pts.members.push_back(cat.morphism_index(fsite_morphism_id(1, k, {i})));
    covers.push_back(std::move(pts));
  }
  const std::string name = separated ? "F" + std::to_string(n) + "sep" : "F" + std::to_string(n);
  const int terminal = cat.object("1");
  return Site::build(std::move(cat), std::move(covers), terminal, name, limits);
}

}  // namespace detail

/// Nonempty finite sets {0..m-1}, 1 <= m <= n, with all functions; each object
/// is covered by the single family of all injections into it.
inline Site build_site_F(int n, const Limits& limits = {}) { return detail::build_function_site(n, false, limits); }

/// build_site_F(n) plus, on every object with at least two points, the family
/// of its point inclusions.
inline Site build_site_F_sep(int n = 2, const Limits& limits = {}) {
  return detail::build_function_site(n, true, limits);
}

/// Vertex set plus a family of nonempty simplices. Canonical form keeps
/// vertices and each simplex sorted, and simplices sorted and distinct.
struct SimplicialComplex {
  std::vector<std::string> vertices;
  std::vector<std::vector<std::string>> simplices;

  void canonicalize() {
    std::sort(vertices.begin(), vertices.end());
    vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());
    for (auto& s : simplices) {
      std::sort(s.begin(), s.end());
      s.erase(std::unique(s.begin(), s.end()), s.end());
    }
    std::sort(simplices.begin(), simplices.end(), [](const auto& a, const auto& b) {
      return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
    simplices.erase(std::unique(simplices.begin(), simplices.end()), simplices.end());
  }

  SimplicialComplex canonical() const {
    auto c = *this;
    c.canonicalize();
    return c;
  }

  std::size_t dimension_bound() const {
    std::size_t m = 0;
    for (const auto& s : simplices) m = std::max(m, s.size());
    return m;
  }

  friend bool operator==(const SimplicialComplex& a, const SimplicialComplex& b) {
    auto x = a.canonical(), y = b.canonical();
    return x.vertices == y.vertices && x.simplices == y.simplices;
  }
};

inline ValidationReport validate_complex(const SimplicialComplex& k) {
  ValidationReport report;
  std::set<std::string> verts;
  for (const auto& v : k.vertices)
    if (!verts.insert(v).second) report.structural("duplicate-vertex", {v});
  std::set<std::vector<std::string>> faces;
  for (auto s : k.simplices) {
    std::sort(s.begin(), s.end());
    if (s.empty()) {
      report.structural("empty-simplex", {});
      continue;
    }
    if (std::adjacent_find(s.begin(), s.end()) != s.end()) report.structural("repeated-vertex", s);
    s.erase(std::unique(s.begin(), s.end()), s.end());
    bool known = true;
    for (const auto& v : s)
      if (!verts.contains(v)) {
        report.structural("unknown-vertex", {v});
        known = false;
      }
    if (known) faces.insert(s);
  }
  if (report.has_structural()) return report;
  for (const auto& v : verts)
    if (!faces.contains({v})) report.add("missing-singleton", {v});
  std::set<std::vector<std::string>> missing;
  for (const auto& s : faces) {
    const std::size_t n = s.size();
    if (n > 20) {
      report.structural("simplex-too-large", s);
      continue;
    }
    for (std::size_t mask = 1; mask + 1 < (std::size_t{1} << n); ++mask) {
      std::vector<std::string> t;
      for (std::size_t i = 0; i < n; ++i)
        if (mask >> i & 1) t.push_back(s[i]);
      if (t.size() >= 2 && !faces.contains(t)) missing.insert(t);
    }
  }
  for (const auto& t : missing) report.add("not-downward-closed", t);
  return report;
}

/// Plots over the m-element object are the functions {0..m-1} → vertices
/// whose image is a simplex; restriction is precomposition.
inline Presheaf complex_to_sheaf(const SimplicialComplex& complex, const Site& fsite) {
  auto report = validate_complex(complex);
  if (!report.ok()) throw Error(ErrorKind::validation, "invalid simplicial complex", std::move(report));
  const auto k = complex.canonical();
  const auto& cat = fsite.category();
  const auto& pts = fsite.points();
  std::size_t n = 0;
  for (std::size_t d = 0; d < cat.object_count(); ++d) n = std::max(n, pts.size(static_cast<int>(d)));
  if (k.dimension_bound() > n)
    fail(ErrorKind::size_bound, "simplex with " + std::to_string(k.dimension_bound()) + " vertices needs n >= " +
                                    std::to_string(k.dimension_bound()));
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < k.vertices.size(); ++i) index[k.vertices[i]] = static_cast<int>(i);
  std::set<std::vector<int>> faces;
  for (const auto& s : k.simplices) {
    std::vector<int> f;
    for (const auto& v : s) f.push_back(index.at(v));
    std::sort(f.begin(), f.end());
    faces.insert(f);
  }
  std::vector<std::vector<std::vector<int>>> functions(cat.object_count());
  for (std::size_t d = 0; d < cat.object_count(); ++d)
    for (auto& fn : detail::all_functions(static_cast<int>(pts.size(static_cast<int>(d))),
                                          static_cast<int>(k.vertices.size()))) {
      std::vector<int> image(fn);
      std::sort(image.begin(), image.end());
      image.erase(std::unique(image.begin(), image.end()), image.end());
      if (faces.contains(image)) functions[d].push_back(std::move(fn));
    }
  auto x = concrete_presheaf(fsite, k.vertices, std::move(functions));
  certify_concrete_sheaf(x, "complex_to_sheaf");
  return x;
}

inline Presheaf complex_to_sheaf(const SimplicialComplex& complex, int n) {
  return complex_to_sheaf(complex, build_site_F(n));
}

/// Vertices are the points; simplices are the images of all plots.
inline SimplicialComplex sheaf_to_complex(const Presheaf& x) {
  SimplicialComplex k;
  const int t = x.site().terminal();
  k.vertices = x.plots(t);
  std::set<std::vector<std::string>> faces;
  for (std::size_t d = 0; d < x.category().object_count(); ++d)
    for (int i = 0; i < x.size(static_cast<int>(d)); ++i) {
      std::vector<std::string> image;
      for (int v : plot_underlying(x, static_cast<int>(d), i)) image.push_back(x.plot_id(t, v));
      std::sort(image.begin(), image.end());
      image.erase(std::unique(image.begin(), image.end()), image.end());
      if (!image.empty()) faces.insert(std::move(image));
    }
  k.simplices.assign(faces.begin(), faces.end());
  k.canonicalize();
  soundness_check(validate_complex(k).ok(), "sheaf_to_complex produced an invalid complex");
  return k;
}

/// Vertex maps carrying simplices to simplices, as index functions between
/// the canonical vertex orders.
inline std::vector<std::vector<int>> complex_maps(const SimplicialComplex& a, const SimplicialComplex& b) {
  const auto x = a.canonical(), y = b.canonical();
  std::map<std::string, int> ix, iy;
  for (std::size_t i = 0; i < x.vertices.size(); ++i) ix[x.vertices[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < y.vertices.size(); ++i) iy[y.vertices[i]] = static_cast<int>(i);
  std::set<std::vector<int>> faces;
  for (const auto& s : y.simplices) {
    std::vector<int> f;
    for (const auto& v : s) f.push_back(iy.at(v));
    std::sort(f.begin(), f.end());
    faces.insert(f);
  }
  std::vector<std::vector<int>> out;
  for (auto& fn : detail::all_functions(static_cast<int>(x.vertices.size()), static_cast<int>(y.vertices.size()))) {
    bool ok = true;
    for (const auto& s : x.simplices) {
      std::vector<int> img;
      for (const auto& v : s) img.push_back(fn[static_cast<std::size_t>(ix.at(v))]);
      std::sort(img.begin(), img.end());
      img.erase(std::unique(img.begin(), img.end()), img.end());
      if (!faces.contains(img)) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(std::move(fn));
  }
  return out;
}

struct RoundTrip {
  bool complex_equal = false;          // K ↦ sheaf ↦ complex gives K back
  std::optional<SheafMap> isomorphism;  // X ≅ complex_to_sheaf(sheaf_to_complex(X))
};

inline RoundTrip equivalence_roundtrip(const SimplicialComplex& k, const Site& fsite) {
  RoundTrip r;
  auto x = complex_to_sheaf(k, fsite);
  r.complex_equal = sheaf_to_complex(x) == k;
  auto y = complex_to_sheaf(sheaf_to_complex(x), fsite);
  std::vector<int> id(static_cast<std::size_t>(x.size(fsite.terminal())));
  for (std::size_t i = 0; i < id.size(); ++i) id[i] = static_cast<int>(i);
  auto m = map_from_point_function(x, y, id);
  if (m && is_isomorphism(*m)) r.isomorphism = std::move(m);
  return r;
}

inline RoundTrip equivalence_roundtrip(const Presheaf& x) {
  RoundTrip r;
  auto k = sheaf_to_complex(x);
  auto y = complex_to_sheaf(k, x.site());
  r.complex_equal = sheaf_to_complex(y) == k;
  std::vector<int> id(static_cast<std::size_t>(x.size(x.site().terminal())));
  for (std::size_t i = 0; i < id.size(); ++i) id[i] = static_cast<int>(i);
  auto m = map_from_point_function(x, y, id);
  if (m && is_isomorphism(*m)) r.isomorphism = std::move(m);
  return r;
}

}  // namespace csheaf
