#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <boost/pending/disjoint_sets.hpp>

#include "csheaf/error.hpp"
#include "csheaf/fincat.hpp"
#include "csheaf/parallel.hpp"
#include "csheaf/presheaf.hpp"
#include "csheaf/site.hpp"
#include "csheaf/site_validation.hpp"

namespace csheaf {

// ---------------------------------------------------------------------------
// Plus construction, sheafification, concretization

struct PlusResult {
  Presheaf presheaf;
  SheafMap unit;  // X → X⁺
  // classes[C][i]: the compatible family on the minimal covering sieve of C
  // that represents plot i of X⁺(C)
  std::vector<std::vector<CompatibleFamily>> classes;
};

/// X⁺(C) is the colimit of compatible families over the covering sieves of C.
/// The least covering sieve is final in that filtered diagram, so the colimit
/// is the set of compatible families on it. A class keeps the id of the least
/// plot of X that maps to it; other classes get "{f=φ,...}".
inline PlusResult plus(const Presheaf& x) {
  const auto& site = x.site();
  const auto& cat = site.category();
  const std::size_t n = cat.object_count();
  site.topology();  // materialize once before fanning out
  std::vector<Sieve> rmin(n);
  std::vector<std::vector<CompatibleFamily>> fams(n);
  parallel_for(n, [&](std::size_t d) {
    rmin[d] = minimal_covering_sieve(site, static_cast<int>(d));
    fams[d] = compatible_families(x, rmin[d]);
  });

  std::vector<std::map<std::vector<int>, int>> lookup(n);
  std::vector<std::vector<int>> unit(n);
  std::vector<std::vector<std::string>> ids(n);
  for (std::size_t d = 0; d < n; ++d) {
    for (std::size_t k = 0; k < fams[d].size(); ++k) lookup[d].emplace(fams[d][k].assignment, static_cast<int>(k));
    ids[d].assign(fams[d].size(), {});
    for (int i = 0; i < x.size(static_cast<int>(d)); ++i) {
      auto it = lookup[d].find(restrict_along(x, rmin[d].members, i));
      soundness_check(it != lookup[d].end(), "plus: restriction of a plot is not a compatible family");
      unit[d].push_back(it->second);
      if (ids[d][it->second].empty()) ids[d][it->second] = x.plot_id(static_cast<int>(d), i);
    }
    for (std::size_t k = 0; k < fams[d].size(); ++k) {
      if (!ids[d][k].empty()) continue;
      std::string s = "{";
      for (std::size_t m = 0; m < rmin[d].members.size(); ++m) {
        const int f = rmin[d].members[m];
        if (m) s += ',';
        s += cat.morphism_id(f) + "=" + x.plot_id(cat.dom(f), fams[d][k].assignment[m]);
      }
      ids[d][k] = s + "}";
    }
  }

  auto member_pos = [&](int d, int f) {
    const auto& m = rmin[static_cast<std::size_t>(d)].members;
    auto it = std::lower_bound(m.begin(), m.end(), f);
    soundness_check(it != m.end() && *it == f, "plus: minimal covering sieve is not pullback-stable");
    return static_cast<int>(it - m.begin());
  };
  auto keep_ids = ids;
  Presheaf p = Presheaf::assemble(site, std::move(ids), [&](int f, int k) {
    const int c = cat.dom(f), d = cat.cod(f);
    std::vector<int> r;
    r.reserve(rmin[c].members.size());
    for (int g : rmin[c].members) r.push_back(fams[d][k].assignment[member_pos(d, cat.compose(f, g))]);
    auto it = lookup[c].find(r);
    soundness_check(it != lookup[c].end(), "plus: restricted family is not compatible");
    return it->second;
  });

  PlusResult out{p, SheafMap{x, p, std::vector<std::vector<int>>(n)}, std::vector<std::vector<CompatibleFamily>>(n)};
  for (std::size_t d = 0; d < n; ++d) {
    std::vector<int> where(keep_ids[d].size());
    for (std::size_t k = 0; k < where.size(); ++k) where[k] = p.find_plot(static_cast<int>(d), keep_ids[d][k]);
    out.classes[d].resize(fams[d].size());
    for (std::size_t k = 0; k < where.size(); ++k) out.classes[d][where[k]] = std::move(fams[d][k]);
    for (int v : unit[d]) out.unit.components[d].push_back(where[v]);
  }
  soundness_check(check_presheaf(p).ok(), "plus: result is not a presheaf");
  return out;
}

/// Two (covering sieve, compatible family) representatives name the same
/// element of X⁺(C) iff they agree on the least covering sieve of C.
inline bool plus_equivalent(const Presheaf& x, const Sieve& r1, const std::vector<int>& a1, const Sieve& r2,
                            const std::vector<int>& a2) {
  const auto rmin = minimal_covering_sieve(x.site(), r1.codomain);
  for (int f : rmin.members) {
    auto p1 = std::lower_bound(r1.members.begin(), r1.members.end(), f) - r1.members.begin();
    auto p2 = std::lower_bound(r2.members.begin(), r2.members.end(), f) - r2.members.begin();
    if (a1[static_cast<std::size_t>(p1)] != a2[static_cast<std::size_t>(p2)]) return false;
  }
  return true;
}

/// Gluings are unique whenever they exist.
inline SheafCheck is_separated(const Presheaf& x) { return detail::first_failure(x, false); }

struct Sheafification {
  Presheaf sheaf;
  SheafMap unit;  // X → sheafify(X)
  int plus_steps = 0;
};

/// One plus for separated input, two otherwise; the output is certified.
inline Sheafification sheafify(const Presheaf& x) {
  auto first = plus(x);
  Sheafification out{first.presheaf, first.unit, 1};
  if (!is_separated(x).sheaf) {
    auto second = plus(first.presheaf);
    out = {second.presheaf, compose(second.unit, first.unit), 2};
  }
  auto check = is_sheaf(out.sheaf);
  soundness_check(check.sheaf, std::string("sheafify: output fails the sheaf condition (") + to_string(check.failure) + ")");
  if (x.site().has_points() && is_concrete(x).concrete)
    soundness_check(is_concrete(out.sheaf).concrete, "sheafify: concrete input produced a non-concrete sheaf");
  return out;
}

struct Concretization {
  Presheaf concrete;
  SheafMap quotient;  // X → L(X)
};

/// Identifies plots with equal underlying functions; a class keeps the id of
/// its least member.
inline Concretization concretize(const Presheaf& x) {
  const auto& site = x.site();
  const auto& cat = site.category();
  const std::size_t n = cat.object_count();
  std::vector<std::vector<int>> cls(n), rep(n);
  std::vector<std::vector<std::string>> ids(n);
  for (std::size_t d = 0; d < n; ++d) {
    std::map<std::vector<int>, int> seen;
    for (int i = 0; i < x.size(static_cast<int>(d)); ++i) {
      auto [it, fresh] = seen.emplace(plot_underlying(x, static_cast<int>(d), i), static_cast<int>(rep[d].size()));
      if (fresh) {
        rep[d].push_back(i);
        ids[d].push_back(x.plot_id(static_cast<int>(d), i));
      }
      cls[d].push_back(it->second);
    }
  }
  // ids are already sorted (first occurrence in sorted order), so indices survive assembly
  Presheaf l = Presheaf::assemble(site, std::move(ids),
                                  [&](int f, int k) { return cls[cat.dom(f)][x.restrict(f, rep[cat.cod(f)][k])]; });
  soundness_check(is_concrete(l).concrete, "concretize: result is not concrete");
  return {l, SheafMap{x, l, cls}};
}

// ---------------------------------------------------------------------------
// Diagrams, limits, colimits

struct Diagram {
  FinCategory shape;
  std::vector<Presheaf> nodes;  // per shape object
  std::vector<SheafMap> edges;  // per shape morphism
};

/// Object ids plus non-identity arrows, none of them composable with another.
inline FinCategory shape_category(const std::vector<std::string>& objects, const std::vector<MorphismRecord>& arrows) {
  CategoryData d;
  d.objects = objects;
  for (const auto& o : objects) {
    d.morphisms.push_back({"id_" + o, o, o});
    d.identities[o] = "id_" + o;
  }
  for (const auto& a : arrows) {
    d.morphisms.push_back(a);
    for (const auto& b : arrows)
      if (a.cod == b.dom) fail(ErrorKind::usage, "shape_category: arrows " + a.id + " and " + b.id + " compose");
  }
  for (const auto& m : d.morphisms) {
    d.compose.push_back({"id_" + m.cod, m.id, m.id});
    if (m.dom != m.cod || m.id != "id_" + m.dom) d.compose.push_back({m.id, "id_" + m.dom, m.id});
  }
  return FinCategory::build(d);
}

inline ValidationReport validate_diagram(const Diagram& dg) {
  ValidationReport report;
  const auto& shape = dg.shape;
  if (dg.nodes.size() != shape.object_count() || dg.edges.size() != shape.morphism_count()) {
    report.structural("diagram-shape", {}, "node or edge count does not match the shape");
    return report;
  }
  for (std::size_t u = 0; u < shape.morphism_count(); ++u) {
    const int ui = static_cast<int>(u);
    const auto& e = dg.edges[u];
    if (!(e.source == dg.nodes[shape.dom(ui)]) || !(e.target == dg.nodes[shape.cod(ui)])) {
      report.structural("edge-typing", {shape.morphism_id(ui)});
      continue;
    }
    check_map_shape(e);
    if (!is_natural(e)) report.add("edge-naturality", {shape.morphism_id(ui)});
    if (shape.is_identity(ui) && !(e == identity_map(dg.nodes[shape.dom(ui)])))
      report.add("diagram-identity", {shape.morphism_id(ui)});
  }
  if (report.has_structural()) return report;
  for (std::size_t u = 0; u < shape.morphism_count(); ++u)
    for (int v : shape.out_of(shape.cod(static_cast<int>(u))))
      if (!(compose(dg.edges[v], dg.edges[u]).components == dg.edges[shape.compose(v, static_cast<int>(u))].components))
        report.add("diagram-composition", {shape.morphism_id(v), shape.morphism_id(static_cast<int>(u))});
  return report;
}

/// Fills in identity edges and validates.
inline Diagram make_diagram(FinCategory shape, std::vector<Presheaf> nodes, const std::map<std::string, SheafMap>& edges) {
  Diagram dg{std::move(shape), std::move(nodes), {}};
  if (dg.nodes.size() != dg.shape.object_count()) fail(ErrorKind::shape_mismatch, "diagram: one node per shape object");
  for (std::size_t u = 0; u < dg.shape.morphism_count(); ++u) {
    const int ui = static_cast<int>(u);
    auto it = edges.find(dg.shape.morphism_id(ui));
    if (it != edges.end())
      dg.edges.push_back(it->second);
    else if (dg.shape.is_identity(ui))
      dg.edges.push_back(identity_map(dg.nodes[dg.shape.dom(ui)]));
    else
      fail(ErrorKind::structural, "diagram: no edge for " + dg.shape.morphism_id(ui));
  }
  auto report = validate_diagram(dg);
  if (!report.ok()) throw Error(ErrorKind::validation, "invalid diagram", std::move(report));
  return dg;
}

/// Apex with one leg per shape object (for a colimit the legs point inward).
struct Cone {
  Presheaf apex;
  std::vector<SheafMap> legs;
};

namespace detail {

inline std::string tuple_id(const std::vector<std::string>& parts) {
  if (parts.empty()) return "*";
  std::string s = "(";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) s += ',';
    s += parts[i];
  }
  return s + ')';
}

inline void check_nodes_on(const Site& site, const Diagram& dg) {
  for (const auto& x : dg.nodes)
    if (!x.site().same_as(site)) fail(ErrorKind::shape_mismatch, "diagram node lives on another site");
}

inline void certify_like_inputs(const Presheaf& out, const std::vector<Presheaf>& inputs, const std::string& what) {
  bool sheaves = true, concrete = out.site().has_points();
  for (const auto& x : inputs) {
    sheaves = sheaves && is_sheaf(x).sheaf;
    concrete = concrete && is_concrete(x).concrete;
  }
  if (sheaves) soundness_check(is_sheaf(out).sheaf, what + ": limit of sheaves is not a sheaf");
  if (concrete) soundness_check(is_concrete(out).concrete, what + ": limit of concrete presheaves is not concrete");
}

// Re-index per-object values (given in pre-assembly order) to the assembled plot order.
inline std::vector<int> reorder(const Presheaf& p, int d, const std::vector<std::string>& ids) {
  std::vector<int> where(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) where[k] = p.find_plot(d, ids[k]);
  return where;
}

}  // namespace detail

/// Pointwise limit: plots over D are the matching tuples of the D-slice.
inline Cone limit(const Site& site, const Diagram& dg) {
  detail::check_nodes_on(site, dg);
  const auto& cat = site.category();
  const auto& shape = dg.shape;
  const std::size_t n = cat.object_count();
  const std::size_t J = shape.object_count();
  std::vector<std::vector<int>> at_stage(J);
  for (std::size_t u = 0; u < shape.morphism_count(); ++u) {
    const int ui = static_cast<int>(u);
    if (!shape.is_identity(ui)) at_stage[static_cast<std::size_t>(std::max(shape.dom(ui), shape.cod(ui)))].push_back(ui);
  }
  std::vector<std::vector<std::vector<int>>> tuples(n);
  parallel_for(n, [&](std::size_t d) {
    std::vector<int> cur(J);
    std::function<void(std::size_t)> search = [&](std::size_t j) {
      if (j == J) {
        tuples[d].push_back(cur);
        return;
      }
      for (int p = 0; p < dg.nodes[j].size(static_cast<int>(d)); ++p) {
        cur[j] = p;
        bool ok = true;
        for (int u : at_stage[j])
          if (dg.edges[u].components[d][cur[shape.dom(u)]] != cur[shape.cod(u)]) {
            ok = false;
            break;
          }
        if (ok) search(j + 1);
      }
    };
    search(0);
  });
  std::vector<std::map<std::vector<int>, int>> lookup(n);
  std::vector<std::vector<std::string>> ids(n);
  for (std::size_t d = 0; d < n; ++d)
    for (std::size_t k = 0; k < tuples[d].size(); ++k) {
      lookup[d].emplace(tuples[d][k], static_cast<int>(k));
      std::vector<std::string> parts;
      for (std::size_t j = 0; j < J; ++j) parts.push_back(dg.nodes[j].plot_id(static_cast<int>(d), tuples[d][k][j]));
      ids[d].push_back(detail::tuple_id(parts));
    }
  auto keep = ids;
  Presheaf apex = Presheaf::assemble(site, std::move(ids), [&](int f, int k) {
    const auto& t = tuples[cat.cod(f)][k];
    std::vector<int> r(J);
    for (std::size_t j = 0; j < J; ++j) r[j] = dg.nodes[j].restrict(f, t[j]);
    return lookup[cat.dom(f)].at(r);
  });
  Cone out{apex, {}};
  for (std::size_t j = 0; j < J; ++j) out.legs.push_back({apex, dg.nodes[j], std::vector<std::vector<int>>(n)});
  for (std::size_t d = 0; d < n; ++d) {
    auto where = detail::reorder(apex, static_cast<int>(d), keep[d]);
    for (std::size_t j = 0; j < J; ++j) {
      out.legs[j].components[d].assign(tuples[d].size(), -1);
      for (std::size_t k = 0; k < tuples[d].size(); ++k) out.legs[j].components[d][where[k]] = tuples[d][k][j];
    }
  }
  detail::certify_like_inputs(apex, dg.nodes, "limit");
  return out;
}

struct ColimitResult {
  Cone cocone;       // the concrete sheaf and its injections
  Cone pointwise;    // the presheaf colimit before concretization and sheafification
};

/// Pointwise union of plots modulo the diagram's identifications, then
/// concretize, then sheafify. Pointwise classes are named "j/φ" after their
/// least member.
inline ColimitResult colimit_with_pointwise(const Site& site, const Diagram& dg) {
  detail::check_nodes_on(site, dg);
  const auto& cat = site.category();
  const auto& shape = dg.shape;
  const std::size_t n = cat.object_count();
  const std::size_t J = shape.object_count();

  struct Slice {
    std::vector<int> offset;
    std::vector<std::pair<int, int>> token;  // (shape object, plot)
    std::vector<int> cls;                    // token -> class
    std::vector<int> rep;                    // class -> least token
    std::vector<std::string> ids;
  };
  std::vector<Slice> slice(n);
  parallel_for(n, [&](std::size_t d) {
    auto& s = slice[d];
    for (std::size_t j = 0; j < J; ++j) {
      s.offset.push_back(static_cast<int>(s.token.size()));
      for (int p = 0; p < dg.nodes[j].size(static_cast<int>(d)); ++p) s.token.emplace_back(static_cast<int>(j), p);
    }
    const std::size_t T = s.token.size();
    boost::disjoint_sets_with_storage<> uf(T);
    for (std::size_t u = 0; u < shape.morphism_count(); ++u) {
      const int ui = static_cast<int>(u);
      if (shape.is_identity(ui)) continue;
      const int a = shape.dom(ui), b = shape.cod(ui);
      for (int p = 0; p < dg.nodes[a].size(static_cast<int>(d)); ++p)
        uf.union_set(s.offset[a] + p, s.offset[b] + dg.edges[u].components[d][p]);
    }
    std::vector<std::string> name(T);
    for (std::size_t t = 0; t < T; ++t)
      name[t] = shape.object_id(s.token[t].first) + "/" + dg.nodes[s.token[t].first].plot_id(static_cast<int>(d), s.token[t].second);
    std::map<std::size_t, int> best;  // root -> least token
    for (std::size_t t = 0; t < T; ++t) {
      auto [it, fresh] = best.emplace(uf.find_set(t), static_cast<int>(t));
      if (!fresh && name[t] < name[it->second]) it->second = static_cast<int>(t);
    }
    std::map<std::size_t, int> index;
    for (const auto& [root, t] : best) {
      index[root] = static_cast<int>(s.rep.size());
      s.rep.push_back(t);
      s.ids.push_back(name[t]);
    }
    for (std::size_t t = 0; t < T; ++t) s.cls.push_back(index[uf.find_set(t)]);
  });

  std::vector<std::vector<std::string>> ids(n);
  for (std::size_t d = 0; d < n; ++d) ids[d] = slice[d].ids;
  Presheaf p = Presheaf::assemble(site, std::move(ids), [&](int f, int k) {
    const auto& s = slice[cat.cod(f)];
    const auto [j, plot] = s.token[s.rep[k]];
    const auto& c = slice[cat.dom(f)];
    return c.cls[c.offset[j] + dg.nodes[j].restrict(f, plot)];
  });
  Cone pointwise{p, {}};
  for (std::size_t j = 0; j < J; ++j) {
    SheafMap leg{dg.nodes[j], p, std::vector<std::vector<int>>(n)};
    for (std::size_t d = 0; d < n; ++d) {
      auto where = detail::reorder(p, static_cast<int>(d), slice[d].ids);
      for (int q = 0; q < dg.nodes[j].size(static_cast<int>(d)); ++q)
        leg.components[d].push_back(where[slice[d].cls[slice[d].offset[j] + q]]);
    }
    pointwise.legs.push_back(std::move(leg));
  }

  Cone out = pointwise;
  if (site.has_points()) {
    auto l = concretize(p);
    out.apex = l.concrete;
    for (auto& leg : out.legs) leg = compose(l.quotient, leg);
  }
  auto s = sheafify(out.apex);
  out.apex = s.sheaf;
  for (auto& leg : out.legs) leg = compose(s.unit, leg);
  if (site.has_points()) certify_concrete_sheaf(out.apex, "colimit");
  return {out, pointwise};
}

inline Cone colimit(const Site& site, const Diagram& dg) { return colimit_with_pointwise(site, dg).cocone; }

/// Every cone over the diagram with the given apex (legs apex → F(j)).
inline std::vector<Cone> enumerate_cones(const Diagram& dg, const Presheaf& apex) {
  const auto& shape = dg.shape;
  const std::size_t J = shape.object_count();
  std::vector<std::vector<SheafMap>> options(J);
  for (std::size_t j = 0; j < J; ++j) options[j] = all_maps(apex, dg.nodes[j]);
  std::vector<Cone> out;
  std::vector<int> pick(J);
  std::function<void(std::size_t)> search = [&](std::size_t j) {
    if (j == J) {
      Cone c{apex, {}};
      for (std::size_t i = 0; i < J; ++i) c.legs.push_back(options[i][pick[i]]);
      out.push_back(std::move(c));
      return;
    }
    for (std::size_t o = 0; o < options[j].size(); ++o) {
      pick[j] = static_cast<int>(o);
      bool ok = true;
      for (std::size_t u = 0; u < shape.morphism_count() && ok; ++u) {
        const int a = shape.dom(static_cast<int>(u)), b = shape.cod(static_cast<int>(u));
        if (static_cast<std::size_t>(std::max(a, b)) != j) continue;
        ok = compose(dg.edges[u], options[a][pick[a]]).components == options[b][pick[b]].components;
      }
      if (ok) search(j + 1);
    }
  };
  search(0);
  return out;
}

/// Every cocone under the diagram with the given nadir (legs F(j) → nadir).
inline std::vector<Cone> enumerate_cocones(const Diagram& dg, const Presheaf& nadir) {
  const auto& shape = dg.shape;
  const std::size_t J = shape.object_count();
  std::vector<std::vector<SheafMap>> options(J);
  for (std::size_t j = 0; j < J; ++j) options[j] = all_maps(dg.nodes[j], nadir);
  std::vector<Cone> out;
  std::vector<int> pick(J);
  std::function<void(std::size_t)> search = [&](std::size_t j) {
    if (j == J) {
      Cone c{nadir, {}};
      for (std::size_t i = 0; i < J; ++i) c.legs.push_back(options[i][pick[i]]);
      out.push_back(std::move(c));
      return;
    }
    for (std::size_t o = 0; o < options[j].size(); ++o) {
      pick[j] = static_cast<int>(o);
      bool ok = true;
      for (std::size_t u = 0; u < shape.morphism_count() && ok; ++u) {
        const int a = shape.dom(static_cast<int>(u)), b = shape.cod(static_cast<int>(u));
        if (static_cast<std::size_t>(std::max(a, b)) != j) continue;
        ok = compose(options[b][pick[b]], dg.edges[u]).components == options[a][pick[a]].components;
      }
      if (ok) search(j + 1);
    }
  };
  search(0);
  return out;
}

/// Number of maps m: candidate.apex → limit.apex with limit.legs[j]∘m = candidate.legs[j].
inline std::size_t count_limit_mediators(const Cone& lim, const Cone& candidate) {
  std::size_t count = 0;
  enumerate_maps(candidate.apex, lim.apex, [&](const auto& c) {
    SheafMap m{candidate.apex, lim.apex, c};
    bool ok = true;
    for (std::size_t j = 0; j < lim.legs.size() && ok; ++j)
      ok = compose(lim.legs[j], m).components == candidate.legs[j].components;
    count += ok;
    return true;
  });
  return count;
}

/// Number of maps m: colim.apex → candidate.apex with m∘colim.legs[j] = candidate.legs[j].
inline std::size_t count_colimit_mediators(const Cone& colim, const Cone& candidate) {
  std::size_t count = 0;
  enumerate_maps(colim.apex, candidate.apex, [&](const auto& c) {
    SheafMap m{colim.apex, candidate.apex, c};
    bool ok = true;
    for (std::size_t j = 0; j < colim.legs.size() && ok; ++j)
      ok = compose(m, colim.legs[j]).components == candidate.legs[j].components;
    count += ok;
    return true;
  });
  return count;
}

// ---------------------------------------------------------------------------
// Direct descriptions by point functions, used to cross-check the general
// machinery. Each returns a concrete presheaf on explicitly named points.

namespace direct {

inline std::vector<std::vector<std::vector<int>>> filter_functions(
    const Site& site, int npoints, const std::function<bool(int, const std::vector<int>&)>& keep) {
  const auto& pts = site.points();
  const std::size_t n = site.category().object_count();
  std::vector<std::vector<std::vector<int>>> out(n);
  for (std::size_t d = 0; d < n; ++d) {
    const int m = static_cast<int>(pts.size(static_cast<int>(d)));
    std::vector<int> fn(static_cast<std::size_t>(m), 0);
    if (npoints == 0) {
      if (m == 0 && keep(static_cast<int>(d), fn)) out[d].push_back(fn);
      continue;
    }
    for (;;) {
      if (keep(static_cast<int>(d), fn)) out[d].push_back(fn);
      int i = m - 1;
      while (i >= 0 && fn[static_cast<std::size_t>(i)] == npoints - 1) fn[static_cast<std::size_t>(i--)] = 0;
      if (i < 0) break;
      ++fn[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

inline std::vector<std::set<std::vector<int>>> underlying_sets(const Presheaf& x) {
  std::vector<std::set<std::vector<int>>> out;
  for (auto& fs : underlying_functions(x)) out.emplace_back(fs.begin(), fs.end());
  return out;
}

/// Points are tuples; a function is a plot iff each component is a plot.
inline Presheaf product(const Site& site, const std::vector<Presheaf>& factors,
                        std::vector<std::vector<int>>* point_tuples = nullptr) {
  const int t = site.terminal();
  std::vector<std::vector<int>> tuples{{}};
  for (const auto& x : factors) {
    std::vector<std::vector<int>> next;
    for (const auto& tp : tuples)
      for (int p = 0; p < x.size(t); ++p) {
        next.push_back(tp);
        next.back().push_back(p);
      }
    tuples = std::move(next);
  }
  std::vector<std::string> names;
  for (const auto& tp : tuples) {
    std::vector<std::string> parts;
    for (std::size_t j = 0; j < tp.size(); ++j) parts.push_back(factors[j].plot_id(t, tp[j]));
    names.push_back(detail::tuple_id(parts));
  }
  std::vector<std::vector<std::set<std::vector<int>>>> sets;
  for (const auto& x : factors) sets.push_back(underlying_sets(x));
  auto fns = filter_functions(site, static_cast<int>(tuples.size()), [&](int d, const std::vector<int>& fn) {
    for (std::size_t j = 0; j < factors.size(); ++j) {
      std::vector<int> comp;
      for (int v : fn) comp.push_back(tuples[v][j]);
      if (!sets[j][d].contains(comp)) return false;
    }
    return true;
  });
  if (point_tuples) *point_tuples = tuples;
  return concrete_presheaf(site, names, std::move(fns));
}

/// Plots of X whose image lies in the kept points.
inline Presheaf subspace(const Presheaf& x, const std::vector<bool>& keep, std::vector<int>* kept = nullptr) {
  const auto& site = x.site();
  const int t = site.terminal();
  std::vector<int> old_of;
  std::vector<int> new_of(static_cast<std::size_t>(x.size(t)), -1);
  std::vector<std::string> names;
  for (int p = 0; p < x.size(t); ++p)
    if (keep[static_cast<std::size_t>(p)]) {
      new_of[static_cast<std::size_t>(p)] = static_cast<int>(old_of.size());
      old_of.push_back(p);
      names.push_back(x.plot_id(t, p));
    }
  const std::size_t n = site.category().object_count();
  std::vector<std::vector<std::vector<int>>> fns(n);
  for (std::size_t d = 0; d < n; ++d)
    for (int i = 0; i < x.size(static_cast<int>(d)); ++i) {
      auto u = plot_underlying(x, static_cast<int>(d), i);
      bool inside = true;
      for (auto& v : u) {
        inside = inside && keep[static_cast<std::size_t>(v)];
        if (inside) v = new_of[static_cast<std::size_t>(v)];
      }
      if (inside) fns[d].push_back(std::move(u));
    }
  if (kept) *kept = old_of;
  return concrete_presheaf(site, names, std::move(fns));
}

/// Points are classes; a function is a plot iff on the least covering sieve
/// it locally lifts through the projection to plots of X.
inline Presheaf quotient(const Presheaf& x, const std::vector<int>& class_of, const std::vector<std::string>& names) {
  const auto& site = x.site();
  const auto& cat = site.category();
  const auto& pts = site.points();
  const std::size_t n = cat.object_count();
  std::vector<std::set<std::vector<int>>> images(n);
  for (std::size_t d = 0; d < n; ++d)
    for (int i = 0; i < x.size(static_cast<int>(d)); ++i) {
      auto u = plot_underlying(x, static_cast<int>(d), i);
      for (auto& v : u) v = class_of[static_cast<std::size_t>(v)];
      images[d].insert(std::move(u));
    }
  std::vector<Sieve> rmin(n);
  for (std::size_t d = 0; d < n; ++d) rmin[d] = minimal_covering_sieve(site, static_cast<int>(d));
  auto fns = filter_functions(site, static_cast<int>(names.size()), [&](int d, const std::vector<int>& fn) {
    for (int f : rmin[static_cast<std::size_t>(d)].members) {
      std::vector<int> r;
      for (int v : pts.function(f)) r.push_back(fn[static_cast<std::size_t>(v)]);
      if (!images[static_cast<std::size_t>(cat.dom(f))].contains(r)) return false;
    }
    return true;
  });
  return concrete_presheaf(site, names, std::move(fns));
}

/// Points are (summand, point); plots locally factor through one summand.
inline Presheaf coproduct(const Site& site, const std::vector<Presheaf>& summands,
                          const std::vector<std::string>& summand_names,
                          std::vector<std::pair<int, int>>* point_tags = nullptr) {
  const auto& cat = site.category();
  const auto& pts = site.points();
  const int t = site.terminal();
  std::vector<std::pair<int, int>> tags;
  std::vector<std::string> names;
  std::vector<int> offset;
  for (std::size_t j = 0; j < summands.size(); ++j) {
    offset.push_back(static_cast<int>(tags.size()));
    for (int p = 0; p < summands[j].size(t); ++p) {
      tags.emplace_back(static_cast<int>(j), p);
      names.push_back(summand_names[j] + "/" + summands[j].plot_id(t, p));
    }
  }
  const std::size_t n = cat.object_count();
  std::vector<std::set<std::vector<int>>> local(n);
  for (std::size_t j = 0; j < summands.size(); ++j)
    for (std::size_t d = 0; d < n; ++d)
      for (int i = 0; i < summands[j].size(static_cast<int>(d)); ++i) {
        auto u = plot_underlying(summands[j], static_cast<int>(d), i);
        for (auto& v : u) v += offset[j];
        local[d].insert(std::move(u));
      }
  std::vector<Sieve> rmin(n);
  for (std::size_t d = 0; d < n; ++d) rmin[d] = minimal_covering_sieve(site, static_cast<int>(d));
  auto fns = filter_functions(site, static_cast<int>(names.size()), [&](int d, const std::vector<int>& fn) {
    for (int f : rmin[static_cast<std::size_t>(d)].members) {
      std::vector<int> r;
      for (int v : pts.function(f)) r.push_back(fn[static_cast<std::size_t>(v)]);
      if (!local[static_cast<std::size_t>(cat.dom(f))].contains(r)) return false;
    }
    return true;
  });
  if (point_tags) *point_tags = tags;
  return concrete_presheaf(site, names, std::move(fns));
}

}  // namespace direct

// ---------------------------------------------------------------------------
// Named shapes

enum class ShapeKind { product, coproduct, equalizer, coequalizer, pullback, pushout, terminal, initial };

inline const char* to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::product: return "product";
    case ShapeKind::coproduct: return "coproduct";
    case ShapeKind::equalizer: return "equalizer";
    case ShapeKind::coequalizer: return "coequalizer";
    case ShapeKind::pullback: return "pullback";
    case ShapeKind::pushout: return "pushout";
    case ShapeKind::terminal: return "terminal";
    case ShapeKind::initial: return "initial";
  }
  return "?";
}

inline std::optional<ShapeKind> shape_kind(std::string_view s) {
  for (auto k : {ShapeKind::product, ShapeKind::coproduct, ShapeKind::equalizer, ShapeKind::coequalizer,
                 ShapeKind::pullback, ShapeKind::pushout, ShapeKind::terminal, ShapeKind::initial})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

struct NamedResult {
  ShapeKind kind;
  Diagram diagram;
  Cone cone;                 // legs out of the limit, or into the colimit
  bool cross_checked = false;  // agreed with the direct point-level description
};

namespace detail {

inline std::vector<std::string> numbered(std::size_t k) {
  const std::size_t width = std::to_string(k == 0 ? 0 : k - 1).size();
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) {
    auto s = std::to_string(i);
    out.push_back(std::string(width - s.size(), '0') + s);
  }
  return out;
}

inline bool iso_by_points(const Presheaf& from, const Presheaf& to, const std::vector<int>& fn) {
  auto m = map_from_point_function(from, to, fn);
  return m && is_isomorphism(*m);
}

inline int point_index_in(const std::vector<int>& points, int p) {
  auto it = std::find(points.begin(), points.end(), p);
  return it == points.end() ? -1 : static_cast<int>(it - points.begin());
}

inline void require_cross_check(bool ok, ShapeKind k) {
  soundness_check(ok, std::string(to_string(k)) + ": disagrees with the direct point-level description");
}

}  // namespace detail

inline NamedResult terminal_object(const Site& site) {
  auto dg = make_diagram(shape_category({}, {}), {}, {});
  NamedResult r{ShapeKind::terminal, dg, limit(site, dg), false};
  if (site.has_points()) {
    auto direct = concrete_presheaf(site, {"*"}, direct::filter_functions(site, 1, [](int, const auto&) { return true; }));
    detail::require_cross_check(detail::iso_by_points(r.cone.apex, direct, {0}), r.kind);
    r.cross_checked = true;
  }
  return r;
}

inline NamedResult initial_object(const Site& site) {
  auto dg = make_diagram(shape_category({}, {}), {}, {});
  NamedResult r{ShapeKind::initial, dg, colimit(site, dg), false};
  if (site.has_points()) {
    auto direct = concrete_presheaf(site, {}, direct::filter_functions(site, 0, [](int, const auto&) { return true; }));
    detail::require_cross_check(detail::iso_by_points(direct, r.cone.apex, {}), r.kind);
    r.cross_checked = true;
  }
  return r;
}

inline NamedResult product(const Site& site, const std::vector<Presheaf>& factors) {
  auto names = detail::numbered(factors.size());
  auto dg = make_diagram(shape_category(names, {}), factors, {});
  NamedResult r{ShapeKind::product, dg, limit(site, dg), false};
  if (site.has_points()) {
    const int t = site.terminal();
    std::vector<std::vector<int>> tuples;
    auto direct = direct::product(site, factors, &tuples);
    std::map<std::vector<int>, int> index;
    for (std::size_t i = 0; i < tuples.size(); ++i) index[tuples[i]] = static_cast<int>(i);
    std::vector<int> fn;
    for (int p = 0; p < r.cone.apex.size(t); ++p) {
      std::vector<int> tp;
      for (const auto& leg : r.cone.legs) tp.push_back(leg.components[t][p]);
      fn.push_back(index.at(tp));
    }
    detail::require_cross_check(detail::iso_by_points(r.cone.apex, direct, fn), r.kind);
    r.cross_checked = true;
  }
  return r;
}

inline NamedResult coproduct(const Site& site, const std::vector<Presheaf>& summands) {
  auto names = detail::numbered(summands.size());
  auto dg = make_diagram(shape_category(names, {}), summands, {});
  NamedResult r{ShapeKind::coproduct, dg, colimit(site, dg), false};
  if (site.has_points()) {
    const int t = site.terminal();
    std::vector<std::pair<int, int>> tags;
    auto direct = direct::coproduct(site, summands, names, &tags);
    std::vector<int> fn;
    for (const auto& [j, p] : tags) fn.push_back(r.cone.legs[j].components[t][p]);
    detail::require_cross_check(detail::iso_by_points(direct, r.cone.apex, fn), r.kind);
    r.cross_checked = true;
  }
  return r;
}

inline NamedResult equalizer(const SheafMap& f, const SheafMap& g) {
  const auto& site = f.source.site();
  auto dg = make_diagram(shape_category({"x", "y"}, {{"f", "x", "y"}, {"g", "x", "y"}}), {f.source, f.target},
                         {{"f", f}, {"g", g}});
  NamedResult r{ShapeKind::equalizer, dg, limit(site, dg), false};
  if (site.has_points()) {
    const int t = site.terminal();
    std::vector<bool> keep;
    for (int p = 0; p < f.source.size(t); ++p) keep.push_back(f.components[t][p] == g.components[t][p]);
    std::vector<int> kept;
    auto direct = direct::subspace(f.source, keep, &kept);
    std::vector<int> fn;
    for (int p = 0; p < r.cone.apex.size(t); ++p) fn.push_back(detail::point_index_in(kept, r.cone.legs[0].components[t][p]));
    detail::require_cross_check(detail::iso_by_points(r.cone.apex, direct, fn), r.kind);
    r.cross_checked = true;
  }
  return r;
}

inline NamedResult pullback(const SheafMap& f, const SheafMap& g) {
  const auto& site = f.source.site();
  auto dg = make_diagram(shape_category({"x", "y", "z"}, {{"f", "x", "z"}, {"g", "y", "z"}}),
                         {f.source, g.source, f.target}, {{"f", f}, {"g", g}});
  NamedResult r{ShapeKind::pullback, dg, limit(site, dg), false};
  if (site.has_points()) {
    const int t = site.terminal();
    std::vector<std::vector<int>> tuples;
    auto prod = direct::product(site, {f.source, g.source}, &tuples);
    std::vector<bool> keep;
    for (const auto& tp : tuples) keep.push_back(f.components[t][tp[0]] == g.components[t][tp[1]]);
    std::vector<int> kept;
    auto direct = direct::subspace(prod, keep, &kept);
    std::map<std::vector<int>, int> index;
    for (std::size_t i = 0; i < kept.size(); ++i) index[tuples[kept[i]]] = static_cast<int>(i);
    std::vector<int> fn;
    for (int p = 0; p < r.cone.apex.size(t); ++p)
      fn.push_back(index.at({r.cone.legs[0].components[t][p], r.cone.legs[1].components[t][p]}));
    detail::require_cross_check(detail::iso_by_points(r.cone.apex, direct, fn), r.kind);
    r.cross_checked = true;
  }
  return r;
}

namespace detail {

// Classes of the equivalence on [0, n) generated by the given pairs, with the
// least member as representative; class indices follow their representatives.
inline std::vector<int> generated_classes(std::size_t n, const std::vector<std::pair<int, int>>& pairs) {
  boost::disjoint_sets_with_storage<> uf(n);
  for (const auto& [a, b] : pairs) uf.union_set(a, b);
  std::map<std::size_t, int> index;
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, fresh] = index.emplace(uf.find_set(i), static_cast<int>(index.size()));
    out[i] = it->second;
  }
  return out;
}

}  // namespace detail

inline NamedResult coequalizer(const SheafMap& f, const SheafMap& g) {
  const auto& site = f.source.site();
  auto dg = make_diagram(shape_category({"x", "y"}, {{"f", "x", "y"}, {"g", "x", "y"}}), {f.source, f.target},
                         {{"f", f}, {"g", g}});
  NamedResult r{ShapeKind::coequalizer, dg, colimit(site, dg), false};
  if (site.has_points()) {
    const int t = site.terminal();
    std::vector<std::pair<int, int>> pairs;
    for (int p = 0; p < f.source.size(t); ++p) pairs.emplace_back(f.components[t][p], g.components[t][p]);
    auto cls = detail::generated_classes(static_cast<std::size_t>(f.target.size(t)), pairs);
    const int k = cls.empty() ? 0 : *std::max_element(cls.begin(), cls.end()) + 1;
    std::vector<std::string> names(static_cast<std::size_t>(k));
    std::vector<int> fn(static_cast<std::size_t>(k), -1);
    for (int p = f.target.size(t) - 1; p >= 0; --p) {
      names[cls[p]] = f.target.plot_id(t, p);
      fn[cls[p]] = r.cone.legs[1].components[t][p];
    }
    auto direct = direct::quotient(f.target, cls, names);
    detail::require_cross_check(detail::iso_by_points(direct, r.cone.apex, fn), r.kind);
    r.cross_checked = true;
  }
  return r;
}

inline NamedResult pushout(const SheafMap& f, const SheafMap& g) {
  const auto& site = f.source.site();
  auto dg = make_diagram(shape_category({"x", "y", "z"}, {{"f", "z", "x"}, {"g", "z", "y"}}),
                         {f.target, g.target, f.source}, {{"f", f}, {"g", g}});
  NamedResult r{ShapeKind::pushout, dg, colimit(site, dg), false};
  if (site.has_points()) {
    const int t = site.terminal();
    std::vector<std::pair<int, int>> tags;
    auto sum = direct::coproduct(site, {f.target, g.target}, {"x", "y"}, &tags);
    const int nx = f.target.size(t);
    std::vector<std::pair<int, int>> pairs;
    for (int z = 0; z < f.source.size(t); ++z) pairs.emplace_back(f.components[t][z], nx + g.components[t][z]);
    auto cls = detail::generated_classes(tags.size(), pairs);
    const int k = cls.empty() ? 0 : *std::max_element(cls.begin(), cls.end()) + 1;
    std::vector<std::string> names(static_cast<std::size_t>(k));
    std::vector<int> fn(static_cast<std::size_t>(k), -1);
    for (int p = static_cast<int>(tags.size()) - 1; p >= 0; --p) {
      names[cls[p]] = sum.plot_id(t, p);
      fn[cls[p]] = r.cone.legs[tags[p].first].components[t][tags[p].second];
    }
    auto direct = direct::quotient(sum, cls, names);
    detail::require_cross_check(detail::iso_by_points(direct, r.cone.apex, fn), r.kind);
    r.cross_checked = true;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Every sheaf is a colimit of representables

struct RepresentableColimit {
  Diagram diagram;                // category of elements → representables
  Cone colimit;
  std::optional<SheafMap> iso;  // colimit → X
};

inline RepresentableColimit as_colimit_of_representables(const Presheaf& x) {
  const auto& site = x.site();
  const auto& cat = site.category();
  const std::size_t n = cat.object_count();
  auto element = [&](int d, int phi) { return cat.object_id(d) + "|" + x.plot_id(d, phi); };

  CategoryData el;
  std::map<std::string, std::pair<int, int>> elements;  // id -> (D, φ)
  for (std::size_t d = 0; d < n; ++d)
    for (int phi = 0; phi < x.size(static_cast<int>(d)); ++phi) {
      elements.emplace(element(static_cast<int>(d), phi), std::pair{static_cast<int>(d), phi});
      el.objects.push_back(element(static_cast<int>(d), phi));
    }
  struct Arrow {
    int f;        // site morphism
    int d, phi;   // codomain element
  };
  std::vector<Arrow> arrows;
  std::map<std::tuple<int, int, int>, std::string> arrow_id;
  for (const auto& [id, e] : elements)
    for (int f : cat.into(e.first)) {
      const auto [d, phi] = e;
      const std::string aid = cat.morphism_id(f) + "@" + id;
      el.morphisms.push_back({aid, element(cat.dom(f), x.restrict(f, phi)), id});
      arrow_id[{f, d, phi}] = aid;
      arrows.push_back({f, d, phi});
      if (cat.is_identity(f)) el.identities[id] = aid;
    }
  for (const auto& a : arrows)
    for (int h : cat.into(cat.dom(a.f))) {
      // h lands in (dom f, X(f)φ); the composite is (f∘h) into (d, φ)
      el.compose.push_back({arrow_id.at({a.f, a.d, a.phi}),
                            arrow_id.at({h, cat.dom(a.f), x.restrict(a.f, a.phi)}),
                            arrow_id.at({cat.compose(a.f, h), a.d, a.phi})});
    }
  FinCategory shape = FinCategory::build(el, Limits{std::size_t{1} << 20, std::size_t{1} << 22, site.limits().max_sieves,
                                                    site.limits().max_fsite_n});

  std::vector<Presheaf> reps(n);
  for (std::size_t d = 0; d < n; ++d) reps[d] = representable_sheaf(site, static_cast<int>(d));
  std::vector<Presheaf> nodes;
  for (std::size_t j = 0; j < shape.object_count(); ++j)
    nodes.push_back(reps[elements.at(shape.object_id(static_cast<int>(j))).first]);
  std::map<std::string, SheafMap> edges;
  for (const auto& a : arrows) {
    const int c = cat.dom(a.f);
    SheafMap m{reps[c], reps[a.d], std::vector<std::vector<int>>(n)};
    for (std::size_t e = 0; e < n; ++e)
      for (int i = 0; i < reps[c].size(static_cast<int>(e)); ++i) {
        const int g = cat.morphism_index(reps[c].plot_id(static_cast<int>(e), i));
        m.components[e].push_back(reps[a.d].plot(static_cast<int>(e), cat.morphism_id(cat.compose(a.f, g))));
      }
    edges.emplace(arrow_id.at({a.f, a.d, a.phi}), std::move(m));
  }
  auto dg = make_diagram(std::move(shape), std::move(nodes), edges);
  RepresentableColimit out{dg, colimit(site, dg), std::nullopt};

  // The cocone (D, φ) ↦ (g ↦ X(g)φ) induces colim → X; on points it sends
  // leg_(D,φ)(c) to X(c)(φ).
  const int t = site.terminal();
  std::vector<int> fn(static_cast<std::size_t>(out.colimit.apex.size(t)), -1);
  bool consistent = true;
  for (std::size_t j = 0; j < dg.shape.object_count(); ++j) {
    const auto [d, phi] = elements.at(dg.shape.object_id(static_cast<int>(j)));
    (void)d;
    for (int i = 0; i < dg.nodes[j].size(t); ++i) {
      const int c = cat.morphism_index(dg.nodes[j].plot_id(t, i));
      const int p = out.colimit.legs[j].components[t][i];
      const int v = x.restrict(c, phi);
      if (fn[p] >= 0 && fn[p] != v) consistent = false;
      fn[p] = v;
    }
  }
  if (consistent && std::find(fn.begin(), fn.end(), -1) == fn.end()) {
    auto m = map_from_point_function(out.colimit.apex, x, fn);
    if (m && is_isomorphism(*m)) out.iso = std::move(m);
  }
  return out;
}

}  // namespace csheaf
