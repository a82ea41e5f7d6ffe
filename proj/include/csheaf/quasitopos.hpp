#pragma once

// Ω, subspaces and quotients, strong monos and epis, exponentials over a base.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "csheaf/constructions.hpp"
#include "csheaf/error.hpp"
#include "csheaf/presheaf.hpp"
#include "csheaf/site.hpp"
#include "csheaf/site_validation.hpp"

namespace csheaf {

struct OmegaSheaf {
  Presheaf sheaf;
  SheafMap top;  // terminal → Ω, the full subset everywhere
};

/// Ω(D) = subsets of u(D), written as indicator functions into {"0","1"}.
inline OmegaSheaf omega(const Site& site) {
  if (!site.has_points()) fail(ErrorKind::no_terminal, "omega: site has no points");
  auto fns = direct::filter_functions(site, 2, [](int, const auto&) { return true; });
  auto om = concrete_presheaf(site, {"0", "1"}, std::move(fns));
  certify_concrete_sheaf(om, "omega");
  auto pt = terminal_object(site).cone.apex;
  auto top = map_from_point_function(pt, om, {om.find_plot(site.terminal(), "1")});
  soundness_check(top.has_value(), "omega: top is not a map");
  return {om, *top};
}

/// A strong-mono/epi verdict with the plot that breaks it: {object, plot}.
struct StrongCheck {
  bool strong = false;
  std::vector<std::string> witness;
};

/// Every plot of the target landing in the image lifts to the source.
inline StrongCheck is_strong_mono(const SheafMap& i) {
  auto c = check_map(i);
  if (!c.natural) fail(ErrorKind::validation, "is_strong_mono: map is not natural");
  if (!c.mono) fail(ErrorKind::not_mono, "is_strong_mono: points " + c.mono_witness[0] + " and " + c.mono_witness[1] +
                                             " have the same image");
  const auto& cat = i.source.category();
  const int t = i.source.site().terminal();
  std::vector<char> in_image(static_cast<std::size_t>(i.target.size(t)), 0);
  for (int v : i.underlying()) in_image[v] = 1;
  for (std::size_t d = 0; d < cat.object_count(); ++d) {
    const int di = static_cast<int>(d);
    std::vector<char> hit(static_cast<std::size_t>(i.target.size(di)), 0);
    for (int v : i.components[d]) hit[v] = 1;
    for (int j = 0; j < i.target.size(di); ++j) {
      if (hit[j]) continue;
      auto u = plot_underlying(i.target, di, j);
      if (std::all_of(u.begin(), u.end(), [&](int v) { return in_image[v]; }))
        return {false, {cat.object_id(di), i.target.plot_id(di, j)}};
    }
  }
  return {true, {}};
}

/// Every plot of the target factors through p on some covering sieve.
inline StrongCheck is_strong_epi(const SheafMap& p) {
  auto c = check_map(p);
  if (!c.natural) fail(ErrorKind::validation, "is_strong_epi: map is not natural");
  if (!c.epi) fail(ErrorKind::not_epi, "is_strong_epi: point " + c.epi_witness[0] + " is not hit");
  const auto& site = p.source.site();
  const auto& cat = site.category();
  const std::size_t n = cat.object_count();
  std::vector<std::vector<char>> hit(n);
  for (std::size_t d = 0; d < n; ++d) {
    hit[d].assign(static_cast<std::size_t>(p.target.size(static_cast<int>(d))), 0);
    for (int v : p.components[d]) hit[d][v] = 1;
  }
  for (std::size_t d = 0; d < n; ++d) {
    const int di = static_cast<int>(d);
    for (int j = 0; j < p.target.size(di); ++j) {
      if (hit[d][j]) continue;
      Sieve lifts{di, {}};
      for (int f : cat.into(di))
        if (hit[cat.dom(f)][p.target.restrict(f, j)]) lifts.members.push_back(f);
      if (!is_covering(site, lifts)) return {false, {cat.object_id(di), p.target.plot_id(di, j)}};
    }
  }
  return {true, {}};
}

struct Subspace {
  Presheaf space;
  SheafMap inclusion;
};

/// Plots of X whose image lies in the kept points.
inline Subspace subspace_structure(const Presheaf& x, const std::vector<bool>& keep) {
  const int t = x.site().terminal();
  if (keep.size() != static_cast<std::size_t>(x.size(t)))
    fail(ErrorKind::shape_mismatch, "subspace: one flag per point");
  std::vector<int> kept;
  auto s = direct::subspace(x, keep, &kept);
  auto i = map_from_point_function(s, x, kept);
  soundness_check(i.has_value(), "subspace: inclusion is not a map");
  soundness_check(is_strong_mono(*i).strong, "subspace: inclusion is not a strong mono");
  return {s, *i};
}

struct Quotient {
  Presheaf space;
  SheafMap projection;
};

/// Sheafified image presheaf of X under the point projection. Labels in
/// `label` only matter up to equality; a class is named by its least point.
inline Quotient quotient_structure(const Presheaf& x, const std::vector<int>& label) {
  const auto& site = x.site();
  const auto& cat = site.category();
  const int t = site.terminal();
  if (label.size() != static_cast<std::size_t>(x.size(t))) fail(ErrorKind::shape_mismatch, "quotient: one label per point");
  std::map<int, int> first;
  std::vector<int> cls;
  std::vector<std::string> names;
  for (int p = 0; p < x.size(t); ++p) {
    auto [it, fresh] = first.emplace(label[p], static_cast<int>(names.size()));
    if (fresh) names.push_back(x.plot_id(t, p));
    cls.push_back(it->second);
  }
  std::vector<std::vector<std::vector<int>>> images(cat.object_count());
  for (std::size_t d = 0; d < images.size(); ++d)
    for (int i = 0; i < x.size(static_cast<int>(d)); ++i) {
      auto u = plot_underlying(x, static_cast<int>(d), i);
      for (auto& v : u) v = cls[v];
      images[d].push_back(std::move(u));
    }
  auto image = concrete_presheaf(site, names, std::move(images));
  std::vector<int> to_image;
  for (int c : cls) to_image.push_back(image.find_plot(t, names[c]));
  auto onto = map_from_point_function(x, image, to_image);
  soundness_check(onto.has_value(), "quotient: projection onto the image is not a map");
  auto a = sheafify(image);
  Quotient q{a.sheaf, compose(a.unit, *onto)};
  certify_concrete_sheaf(q.space, "quotient");

  auto direct = direct::quotient(x, cls, names);
  std::vector<int> fn;
  for (std::size_t c = 0; c < names.size(); ++c) fn.push_back(q.space.find_plot(t, names[c]));
  auto iso = map_from_point_function(direct, q.space, fn);
  soundness_check(iso && is_isomorphism(*iso), "quotient: disagrees with the direct point-level description");
  soundness_check(is_strong_epi(q.projection).strong, "quotient: projection is not a strong epi");
  return q;
}

namespace detail {

// A map A → P with leg∘m = i that is an isomorphism, if one exists.
inline std::optional<SheafMap> iso_over(const SheafMap& i, const Presheaf& p, const SheafMap& leg) {
  const int t = p.site().terminal();
  std::vector<int> fn;
  for (int a : i.underlying()) {
    auto it = std::find(leg.underlying().begin(), leg.underlying().end(), a);
    if (it == leg.underlying().end()) return std::nullopt;
    fn.push_back(static_cast<int>(it - leg.underlying().begin()));
  }
  if (static_cast<int>(fn.size()) != p.size(t)) return std::nullopt;
  auto m = map_from_point_function(i.source, p, fn);
  if (!m || !is_isomorphism(*m) || !(compose(leg, *m).components == i.components)) return std::nullopt;
  return m;
}

}  // namespace detail

struct Classification {
  SheafMap chi;               // X → Ω
  NamedResult pullback;       // of χ along ⊤
  SheafMap comparison;        // A ≅ pullback apex, over X
  std::size_t qualifying = 0;  // maps X → Ω whose pullback of ⊤ is A
};

inline Classification characteristic_map(const SheafMap& i) {
  if (!is_strong_mono(i).strong) fail(ErrorKind::not_strong_mono, "characteristic_map: inclusion is not a strong mono");
  const auto& x = i.target;
  const int t = x.site().terminal();
  auto om = omega(x.site());
  const int zero = om.sheaf.find_plot(t, "0"), one = om.sheaf.find_plot(t, "1");
  std::vector<int> fn(static_cast<std::size_t>(x.size(t)), zero);
  for (int a : i.underlying()) fn[a] = one;
  auto chi = map_from_point_function(x, om.sheaf, fn);
  soundness_check(chi.has_value(), "characteristic_map: indicator is not a map");

  auto pb = pullback(*chi, om.top);
  auto cmp = detail::iso_over(i, pb.cone.apex, pb.cone.legs[0]);
  soundness_check(cmp.has_value(), "characteristic_map: pullback of top is not the subspace");
  Classification out{*chi, pb, *cmp, 0};
  enumerate_maps(x, om.sheaf, [&](const std::vector<std::vector<int>>& c) {
    auto q = pullback(SheafMap{x, om.sheaf, c}, om.top);
    if (detail::iso_over(i, q.cone.apex, q.cone.legs[0])) ++out.qualifying;
    return true;
  });
  return out;
}

struct SpaceOverBase {
  Presheaf total;
  Presheaf base;
  SheafMap projection;
};

inline SpaceOverBase over_terminal(const Presheaf& x) {
  auto pt = terminal_object(x.site()).cone.apex;
  auto p = map_from_point_function(x, pt, std::vector<int>(static_cast<std::size_t>(x.size(x.site().terminal())), 0));
  return {x, pt, *p};
}

inline void check_over_base(const SpaceOverBase& s) {
  if (!(s.projection.source == s.total) || !(s.projection.target == s.base))
    fail(ErrorKind::shape_mismatch, "space over base: projection has the wrong ends");
  check_map_shape(s.projection);
  if (!is_natural(s.projection)) fail(ErrorKind::validation, "space over base: projection is not natural");
}

/// Subspace over one base point.
inline Subspace fiber(const SpaceOverBase& s, int b) {
  const int t = s.base.site().terminal();
  if (b < 0 || b >= s.base.size(t)) fail(ErrorKind::unknown_id, "fiber: no such base point");
  std::vector<bool> keep;
  for (int v : s.projection.underlying()) keep.push_back(v == b);
  return subspace_structure(s.total, keep);
}

inline Subspace fiber(const SpaceOverBase& s, const std::string& b) {
  const int i = s.base.find_plot(s.base.site().terminal(), b);
  if (i < 0) fail(ErrorKind::unknown_id, "fiber: no base point " + b);
  return fiber(s, i);
}

/// A point of the exponential: a base point and a map between its fibers,
/// recorded on total-space points (-1 off the fiber).
struct ExpPoint {
  int base = -1;
  std::vector<int> map;
};

struct Exponential {
  SpaceOverBase space;
  std::vector<ExpPoint> points;  // indexed like space.total's points
};

namespace detail {

inline void check_same_base(const SpaceOverBase& a, const SpaceOverBase& b) {
  check_over_base(a);
  check_over_base(b);
  if (!(a.base == b.base)) fail(ErrorKind::shape_mismatch, "spaces live over different bases");
}

// Map y(D) → B picked out by a plot of B over D.
inline SheafMap plot_as_map(const Presheaf& yd, const Presheaf& b, int beta) {
  const auto& cat = b.category();
  SheafMap m{yd, b, std::vector<std::vector<int>>(cat.object_count())};
  for (std::size_t e = 0; e < cat.object_count(); ++e)
    for (int g = 0; g < yd.size(static_cast<int>(e)); ++g)
      m.components[e].push_back(b.restrict(cat.morphism_index(yd.plot_id(static_cast<int>(e), g)), beta));
  return m;
}

}  // namespace detail

/// [X, Y]_B: points are (b, map X_b → Y_b); a function into them is a plot
/// when its base part is a plot of B and its evaluation on D ×_B X is a map.
inline Exponential exponential_over_base(const SpaceOverBase& x, const SpaceOverBase& y) {
  detail::check_same_base(x, y);
  const auto& site = x.base.site();
  const auto& cat = site.category();
  const auto& pts = site.points();
  const int t = site.terminal();
  const auto& b = x.base;

  std::vector<ExpPoint> points;
  std::vector<std::string> names;
  for (int bp = 0; bp < b.size(t); ++bp) {
    auto xb = fiber(x, bp), yb = fiber(y, bp);
    const auto& xi = xb.inclusion.underlying();
    const auto& yi = yb.inclusion.underlying();
    for (const auto& m : all_maps(xb.space, yb.space)) {
      ExpPoint e{bp, std::vector<int>(static_cast<std::size_t>(x.total.size(t)), -1)};
      std::string name = b.plot_id(t, bp) + "{";
      for (std::size_t k = 0; k < xi.size(); ++k) {
        e.map[xi[k]] = yi[m.underlying()[k]];
        if (k) name += ',';
        name += x.total.plot_id(t, xi[k]) + ":" + y.total.plot_id(t, e.map[xi[k]]);
      }
      points.push_back(std::move(e));
      names.push_back(name + "}");
    }
  }

  // base plots by underlying function, and one fiber product per (D, β)
  std::vector<std::map<std::vector<int>, int>> base_plot(cat.object_count());
  for (std::size_t d = 0; d < cat.object_count(); ++d)
    for (int j = 0; j < b.size(static_cast<int>(d)); ++j)
      base_plot[d].emplace(plot_underlying(b, static_cast<int>(d), j), j);
  std::vector<Presheaf> yd;
  for (std::size_t d = 0; d < cat.object_count(); ++d) yd.push_back(representable_sheaf(site, static_cast<int>(d)));
  std::map<std::pair<int, int>, NamedResult> products;

  auto fns = direct::filter_functions(site, static_cast<int>(points.size()), [&](int d, const std::vector<int>& fn) {
    std::vector<int> under;
    for (int e : fn) under.push_back(points[e].base);
    auto it = base_plot[d].find(under);
    if (it == base_plot[d].end()) return false;
    auto pit = products.find({d, it->second});
    if (pit == products.end())
      pit = products.emplace(std::pair{d, it->second}, pullback(detail::plot_as_map(yd[d], b, it->second), x.projection))
                .first;
    const auto& cone = pit->second.cone;
    std::vector<int> ev;
    for (int q = 0; q < cone.apex.size(t); ++q) {
      const int pd = cat.morphism_index(yd[d].plot_id(t, cone.legs[0].components[t][q]));
      const int v = points[fn[pts.position[pd]]].map[cone.legs[1].components[t][q]];
      soundness_check(v >= 0, "exponential: evaluation leaves the fiber");
      ev.push_back(v);
    }
    return map_from_point_function(cone.apex, y.total, ev).has_value();
  });
  auto total = concrete_presheaf(site, names, std::move(fns));
  certify_concrete_sheaf(total, "exponential");

  // re-index the points to the assembled (sorted) order
  std::vector<ExpPoint> sorted(points.size());
  std::vector<int> to_base(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    const int at = total.find_plot(t, names[k]);
    to_base[at] = points[k].base;
    sorted[at] = points[k];
  }
  auto proj = map_from_point_function(total, b, to_base);
  soundness_check(proj.has_value(), "exponential: projection to the base is not a map");
  return {{total, b, *proj}, std::move(sorted)};
}

/// Z ×_B X with legs to Z and X.
inline NamedResult fiber_product(const SpaceOverBase& z, const SpaceOverBase& x) {
  detail::check_same_base(z, x);
  return pullback(z.projection, x.projection);
}

/// f: Z ×_B X → Y over B ↦ Z → [X, Y]_B, z ↦ f(z, -).
inline SheafMap curry(const SpaceOverBase& z, const SpaceOverBase& x, const SpaceOverBase& y, const Exponential& exp,
                      const NamedResult& zx, const SheafMap& f) {
  detail::check_same_base(z, y);
  if (!(f.source == zx.cone.apex) || !(f.target == y.total)) fail(ErrorKind::shape_mismatch, "curry: f has the wrong ends");
  const int t = z.base.site().terminal();
  const auto& lz = zx.cone.legs[0].underlying();
  const auto& lx = zx.cone.legs[1].underlying();
  std::vector<int> fn;
  for (int p = 0; p < z.total.size(t); ++p) {
    ExpPoint e{z.projection.underlying()[p], std::vector<int>(static_cast<std::size_t>(x.total.size(t)), -1)};
    for (std::size_t q = 0; q < lz.size(); ++q)
      if (lz[q] == p) e.map[lx[q]] = f.underlying()[q];
    int found = -1;
    for (std::size_t k = 0; k < exp.points.size() && found < 0; ++k)
      if (exp.points[k].base == e.base && exp.points[k].map == e.map) found = static_cast<int>(k);
    if (found < 0) fail(ErrorKind::validation, "curry: f(" + z.total.plot_id(t, p) + ", -) is not a map of fibers");
    fn.push_back(found);
  }
  auto m = map_from_point_function(z.total, exp.space.total, fn);
  if (!m) fail(ErrorKind::validation, "curry: transpose is not a map");
  return *m;
}

/// g: Z → [X, Y]_B ↦ (z, x) ↦ g(z)(x).
inline SheafMap uncurry(const SpaceOverBase& y, const Exponential& exp, const NamedResult& zx, const SheafMap& g) {
  if (!(g.target == exp.space.total)) fail(ErrorKind::shape_mismatch, "uncurry: g does not land in the exponential");
  const auto& lz = zx.cone.legs[0].underlying();
  const auto& lx = zx.cone.legs[1].underlying();
  std::vector<int> fn;
  for (std::size_t q = 0; q < lz.size(); ++q) {
    const int v = exp.points[g.underlying()[lz[q]]].map[lx[q]];
    if (v < 0) fail(ErrorKind::validation, "uncurry: g is not a map over the base");
    fn.push_back(v);
  }
  auto m = map_from_point_function(zx.cone.apex, y.total, fn);
  if (!m) fail(ErrorKind::validation, "uncurry: result is not a map");
  return *m;
}

}  // namespace csheaf
