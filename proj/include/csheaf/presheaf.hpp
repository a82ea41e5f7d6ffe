#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "csheaf/error.hpp"
#include "csheaf/fincat.hpp"
#include "csheaf/parallel.hpp"
#include "csheaf/site.hpp"

namespace csheaf {

struct PresheafData {
  std::string site;
  std::map<std::string, std::vector<std::string>> plots;
  std::map<std::string, std::map<std::string, std::string>> restrict;  // morphism -> plot -> plot
};

/// A presheaf tabulated over a site: X(D) as sorted plot identifiers and, for
/// every f: C → D, the restriction X(f): X(D) → X(C) as an index table.
/// Cheap to copy; the tables are shared and immutable.
class Presheaf {
 public:
  Presheaf() = default;

  /// `ids[D]` may be in any order. `restrict(f, i)` must return the index in
  /// ids[dom f] of the restriction of ids[cod f][i]. Plots are re-sorted.
  static Presheaf assemble(const Site& site, std::vector<std::vector<std::string>> ids,
                           const std::function<int(int, int)>& restrict) {
    const auto& cat = site.category();
    const std::size_t n = cat.object_count();
    if (ids.size() != n) fail(ErrorKind::shape_mismatch, "presheaf: one plot list per object expected");
    auto impl = std::make_shared<Impl>();
    impl->site = site;
    impl->plots.resize(n);
    impl->index.resize(n);
    std::vector<std::vector<int>> rank(n);
    for (std::size_t d = 0; d < n; ++d) {
      std::vector<int> order(ids[d].size());
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int a, int b) { return ids[d][a] < ids[d][b]; });
      rank[d].resize(order.size());
      for (std::size_t k = 0; k < order.size(); ++k) {
        rank[d][order[k]] = static_cast<int>(k);
        impl->plots[d].push_back(std::move(ids[d][order[k]]));
        if (k > 0 && impl->plots[d][k] == impl->plots[d][k - 1])
          fail(ErrorKind::internal_soundness, "presheaf: duplicate plot id '" + impl->plots[d][k] + "' over " +
                                                  cat.object_id(static_cast<int>(d)));
        impl->index[d].emplace(impl->plots[d][k], static_cast<int>(k));
      }
    }
    impl->restrict.resize(cat.morphism_count());
    for (std::size_t f = 0; f < cat.morphism_count(); ++f) {
      const int fi = static_cast<int>(f);
      const std::size_t c = cat.dom(fi), d = cat.cod(fi);
      auto& table = impl->restrict[f];
      table.assign(impl->plots[d].size(), -1);
      for (std::size_t old = 0; old < rank[d].size(); ++old) {
        const int j = restrict(fi, static_cast<int>(old));
        if (j < 0 || static_cast<std::size_t>(j) >= rank[c].size())
          fail(ErrorKind::internal_soundness, "presheaf: restriction along " + cat.morphism_id(fi) + " out of range");
        table[rank[d][old]] = rank[c][j];
      }
    }
    Presheaf x;
    x.impl_ = std::move(impl);
    return x;
  }

  /// Builds from file-level data; dangling references are structural errors.
  static std::optional<Presheaf> try_from_data(const Site& site, const PresheafData& data, ValidationReport& report) {
    const auto& cat = site.category();
    const std::size_t n = cat.object_count();
    const std::size_t before = report.violations.size();
    std::vector<std::vector<std::string>> ids(n);
    for (const auto& [obj, list] : data.plots) {
      const int d = cat.find_object(obj);
      if (d < 0) {
        report.structural("unknown-object", {obj}, "plots key");
        continue;
      }
      ids[d] = list;
      auto sorted = list;
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
        if (sorted[i] == sorted[i + 1]) report.structural("duplicate-plot", {obj, sorted[i]});
    }
    std::vector<std::unordered_map<std::string, int>> pos(n);
    for (std::size_t d = 0; d < n; ++d)
      for (std::size_t i = 0; i < ids[d].size(); ++i) pos[d].emplace(ids[d][i], static_cast<int>(i));

    for (const auto& [mor, table] : data.restrict)
      if (cat.find_morphism(mor) < 0) report.structural("unknown-morphism", {mor}, "restrict entry");

    std::vector<std::vector<int>> tables(cat.morphism_count());
    for (std::size_t f = 0; f < cat.morphism_count(); ++f) {
      const int fi = static_cast<int>(f);
      const auto& id = cat.morphism_id(fi);
      const std::size_t c = cat.dom(fi), d = cat.cod(fi);
      tables[f].assign(ids[d].size(), -1);
      auto it = data.restrict.find(id);
      if (it == data.restrict.end()) {
        if (!ids[d].empty()) report.structural("missing-restriction", {id});
        continue;
      }
      for (const auto& [from, to] : it->second) {
        auto a = pos[d].find(from);
        auto b = pos[c].find(to);
        if (a == pos[d].end()) {
          report.structural("unknown-plot", {id, from}, "restriction source");
          continue;
        }
        if (b == pos[c].end()) {
          report.structural("unknown-plot", {id, to}, "restriction target");
          continue;
        }
        tables[f][a->second] = b->second;
      }
      for (std::size_t i = 0; i < ids[d].size(); ++i)
        if (tables[f][i] < 0) report.structural("missing-restriction", {id, ids[d][i]});
    }
    if (report.violations.size() != before) return std::nullopt;
    return assemble(site, std::move(ids), [&](int f, int i) { return tables[f][i]; });
  }

  static Presheaf from_data(const Site& site, const PresheafData& data) {
    ValidationReport report;
    auto x = try_from_data(site, data, report);
    if (!x) throw Error(ErrorKind::structural, "malformed presheaf", std::move(report));
    return std::move(*x);
  }

  const Site& site() const { return impl_->site; }
  const FinCategory& category() const { return impl_->site.category(); }
  int size(int d) const { return static_cast<int>(impl_->plots[d].size()); }
  const std::vector<std::string>& plots(int d) const { return impl_->plots[d]; }
  const std::string& plot_id(int d, int i) const { return impl_->plots[d][i]; }
  int find_plot(int d, std::string_view id) const {
    auto it = impl_->index[d].find(std::string(id));
    return it == impl_->index[d].end() ? -1 : it->second;
  }
  int plot(int d, std::string_view id) const {
    const int i = find_plot(d, id);
    if (i < 0) fail(ErrorKind::unknown_id, "unknown plot '" + std::string(id) + "' over " + category().object_id(d));
    return i;
  }
  /// X(f)(plot) for f: C → D and plot ∈ X(D); result indexes X(C).
  int restrict(int f, int i) const { return impl_->restrict[f][i]; }
  const std::vector<int>& restriction(int f) const { return impl_->restrict[f]; }

  std::size_t total_plots() const {
    std::size_t n = 0;
    for (const auto& p : impl_->plots) n += p.size();
    return n;
  }

  PresheafData data() const {
    PresheafData out;
    out.site = site().name();
    const auto& cat = category();
    for (std::size_t d = 0; d < cat.object_count(); ++d) out.plots[cat.object_id(static_cast<int>(d))] = impl_->plots[d];
    for (std::size_t f = 0; f < cat.morphism_count(); ++f) {
      auto& table = out.restrict[cat.morphism_id(static_cast<int>(f))];
      const int d = cat.cod(static_cast<int>(f)), c = cat.dom(static_cast<int>(f));
      for (std::size_t i = 0; i < impl_->restrict[f].size(); ++i)
        table[plot_id(d, static_cast<int>(i))] = plot_id(c, impl_->restrict[f][i]);
    }
    return out;
  }

  explicit operator bool() const { return static_cast<bool>(impl_); }

  friend bool operator==(const Presheaf& a, const Presheaf& b) {
    if (a.impl_ == b.impl_) return true;
    if (!a.impl_ || !b.impl_) return false;
    return a.site().same_as(b.site()) && a.impl_->plots == b.impl_->plots && a.impl_->restrict == b.impl_->restrict;
  }

 private:
  struct Impl {
    Site site;
    std::vector<std::vector<std::string>> plots;
    std::vector<std::unordered_map<std::string, int>> index;
    std::vector<std::vector<int>> restrict;
  };
  std::shared_ptr<const Impl> impl_;
};

/// Functoriality of X: X(id) = id and X(g∘f) = X(f)∘X(g).
inline ValidationReport check_presheaf(const Presheaf& x) {
  ValidationReport report;
  const auto& cat = x.category();
  for (std::size_t d = 0; d < cat.object_count(); ++d) {
    const int id = cat.identity(static_cast<int>(d));
    for (int i = 0; i < x.size(static_cast<int>(d)); ++i)
      if (x.restrict(id, i) != i)
        report.add("presheaf-identity",
                   {cat.object_id(static_cast<int>(d)), x.plot_id(static_cast<int>(d), i),
                    x.plot_id(static_cast<int>(d), x.restrict(id, i))});
  }
  for (std::size_t f = 0; f < cat.morphism_count(); ++f) {
    const int fi = static_cast<int>(f);
    for (int g : cat.out_of(cat.cod(fi))) {
      const int gf = cat.compose(g, fi);
      if (gf < 0) continue;
      for (int i = 0; i < x.size(cat.cod(g)); ++i)
        if (x.restrict(gf, i) != x.restrict(fi, x.restrict(g, i)))
          report.add("presheaf-composition", {cat.morphism_id(g), cat.morphism_id(fi), x.plot_id(cat.cod(g), i)});
    }
  }
  return report;
}

inline ValidationReport check_presheaf(const Site& site, const PresheafData& data) {
  ValidationReport report;
  auto x = Presheaf::try_from_data(site, data, report);
  if (x) report.merge(check_presheaf(*x));
  return report;
}

/// Underlying function of a plot: d ↦ X(d)(φ), as indices into X(1).
inline std::vector<int> plot_underlying(const Presheaf& x, int d, int plot) {
  const auto& pts = x.site().points();
  if (plot < 0 || plot >= x.size(d)) fail(ErrorKind::unknown_id, "plot_underlying: unknown plot");
  std::vector<int> out;
  out.reserve(pts.sets[d].size());
  for (int p : pts.sets[d]) out.push_back(x.restrict(p, plot));
  return out;
}

/// Underlying functions of every plot, per object.
inline std::vector<std::vector<std::vector<int>>> underlying_functions(const Presheaf& x) {
  const std::size_t n = x.category().object_count();
  std::vector<std::vector<std::vector<int>>> out(n);
  for (std::size_t d = 0; d < n; ++d)
    for (int i = 0; i < x.size(static_cast<int>(d)); ++i) out[d].push_back(plot_underlying(x, static_cast<int>(d), i));
  return out;
}

/// Canonical plot identifier for a function into a named point set:
/// the point name itself for a one-point domain, "(p0,p1,...)" otherwise.
inline std::string function_id(const std::vector<std::string>& names, const std::vector<int>& fn) {
  if (fn.size() == 1) return names[fn[0]];
  std::string s = "(";
  for (std::size_t i = 0; i < fn.size(); ++i) {
    if (i) s += ',';
    s += names[fn[i]];
  }
  return s + ')';
}

/// The concrete presheaf whose plots over D are exactly the given functions
/// u(D) → points. The set must be closed under precomposition with the
/// underlying functions of morphisms, and contain every point over the terminal.
inline Presheaf concrete_presheaf(const Site& site, const std::vector<std::string>& point_names,
                                  std::vector<std::vector<std::vector<int>>> functions) {
  const auto& cat = site.category();
  const auto& pts = site.points();
  const std::size_t n = cat.object_count();
  soundness_check(functions.size() == n, "concrete_presheaf: one function list per object expected");
  std::vector<std::map<std::vector<int>, int>> lookup(n);
  std::vector<std::vector<std::string>> ids(n);
  for (std::size_t d = 0; d < n; ++d) {
    auto& fs = functions[d];
    std::sort(fs.begin(), fs.end());
    fs.erase(std::unique(fs.begin(), fs.end()), fs.end());
    for (std::size_t i = 0; i < fs.size(); ++i) {
      soundness_check(fs[i].size() == pts.size(static_cast<int>(d)), "concrete_presheaf: function has wrong arity");
      lookup[d].emplace(fs[i], static_cast<int>(i));
      ids[d].push_back(function_id(point_names, fs[i]));
    }
  }
  const auto& terminal_fns = functions[static_cast<std::size_t>(pts.terminal)];
  soundness_check(terminal_fns.size() == point_names.size(), "concrete_presheaf: terminal plots must be the points");
  for (std::size_t i = 0; i < terminal_fns.size(); ++i)
    soundness_check(terminal_fns[i][0] == static_cast<int>(i), "concrete_presheaf: terminal plots must be the points");

  return Presheaf::assemble(site, std::move(ids), [&](int f, int i) {
    const auto& uf = pts.function(f);
    const auto& fn = functions[cat.cod(f)][i];
    std::vector<int> r(uf.size());
    for (std::size_t k = 0; k < uf.size(); ++k) r[k] = fn[uf[k]];
    auto it = lookup[cat.dom(f)].find(r);
    soundness_check(it != lookup[cat.dom(f)].end(),
                    "concrete_presheaf: plot set not closed under restriction along " + cat.morphism_id(f));
    return it->second;
  });
}

/// hom(-, D) with restriction by precomposition; plots are morphism ids.
inline Presheaf representable(const Site& site, int d) {
  const auto& cat = site.category();
  const std::size_t n = cat.object_count();
  std::vector<std::vector<std::string>> ids(n);
  std::vector<std::unordered_map<int, int>> pos(n);
  for (std::size_t c = 0; c < n; ++c)
    for (int f : cat.hom(static_cast<int>(c), d)) {
      pos[c].emplace(f, static_cast<int>(ids[c].size()));
      ids[c].push_back(cat.morphism_id(f));
    }
  return Presheaf::assemble(site, std::move(ids), [&](int g, int i) {
    const int f = cat.hom(cat.cod(g), d)[i];
    return pos[cat.dom(g)].at(cat.compose(f, g));
  });
}

struct ConcretenessCheck {
  bool concrete = true;
  int object = -1;
  int first = -1;   // least pair of distinct plots with equal underlying functions
  int second = -1;
};

inline ConcretenessCheck is_concrete(const Presheaf& x) {
  const auto& cat = x.category();
  for (std::size_t d = 0; d < cat.object_count(); ++d) {
    std::map<std::vector<int>, std::vector<int>> groups;
    for (int i = 0; i < x.size(static_cast<int>(d)); ++i) groups[plot_underlying(x, static_cast<int>(d), i)].push_back(i);
    ConcretenessCheck best;
    for (const auto& [fn, members] : groups)
      if (members.size() > 1 && (best.concrete || members[0] < best.first)) {
        best = {false, static_cast<int>(d), members[0], members[1]};
      }
    if (!best.concrete) return best;
  }
  return {};
}

/// An assignment of plots to the members of a covering family or sieve.
struct CompatibleFamily {
  int object = -1;
  std::vector<int> members;     // morphisms into `object`, ascending
  std::vector<int> assignment;  // assignment[k] ∈ X(dom members[k])

  auto operator<=>(const CompatibleFamily&) const = default;
  bool operator==(const CompatibleFamily&) const = default;
};

namespace detail {

struct PairConstraint {
  int i, j;  // member positions
  int g, h;  // with members[i]∘g = members[j]∘h
};

inline std::vector<PairConstraint> family_constraints(const FinCategory& cat, const std::vector<int>& members) {
  std::vector<PairConstraint> out;
  for (std::size_t i = 0; i < members.size(); ++i)
    for (std::size_t j = i; j < members.size(); ++j)
      for (std::size_t c = 0; c < cat.object_count(); ++c)
        for (int g : cat.hom(static_cast<int>(c), cat.dom(members[i])))
          for (int h : cat.hom(static_cast<int>(c), cat.dom(members[j]))) {
            if (i == j && g >= h) continue;
            if (cat.compose(members[i], g) == cat.compose(members[j], h))
              out.push_back({static_cast<int>(i), static_cast<int>(j), g, h});
          }
  return out;
}

}  // namespace detail

/// Every compatible family for a covering family: φ_i ∈ X(D_i) such that
/// X(g)(φ_i) = X(h)(φ_j) whenever f_i∘g = f_j∘h. Sorted.
inline std::vector<CompatibleFamily> compatible_families(const Presheaf& x, const CoveringFamily& fam) {
  const auto& cat = x.category();
  const auto& m = fam.members;
  const std::size_t k = m.size();
  std::vector<CompatibleFamily> out;
  if (k == 0) return out;

  // Members over larger domains first: they determine the rest quickly.
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return cat.into(cat.dom(m[a])).size() > cat.into(cat.dom(m[b])).size();
  });
  std::vector<int> stage(k);
  for (std::size_t t = 0; t < k; ++t) stage[order[t]] = static_cast<int>(t);

  // Bucket each constraint at the stage where its later member is assigned.
  std::vector<std::vector<detail::PairConstraint>> at_stage(k);
  for (const auto& pc : detail::family_constraints(cat, m))
    at_stage[std::max(stage[pc.i], stage[pc.j])].push_back(pc);

  std::vector<int> value(k, -1);
  std::function<void(std::size_t)> search = [&](std::size_t t) {
    if (t == k) {
      out.push_back({fam.codomain, m, value});
      return;
    }
    const int member = order[t];
    for (int phi = 0; phi < x.size(cat.dom(m[member])); ++phi) {
      value[member] = phi;
      bool ok = true;
      for (const auto& pc : at_stage[t])
        if (x.restrict(pc.g, value[pc.i]) != x.restrict(pc.h, value[pc.j])) {
          ok = false;
          break;
        }
      if (ok) search(t + 1);
    }
    value[member] = -1;
  };
  search(0);
  std::sort(out.begin(), out.end());
  return out;
}

/// Every compatible family on a sieve R: φ_f for f ∈ R with φ_{f∘g} = X(g)(φ_f).
inline std::vector<CompatibleFamily> compatible_families(const Presheaf& x, const Sieve& r) {
  const auto& cat = x.category();
  const auto& m = r.members;
  const std::size_t k = m.size();
  std::vector<CompatibleFamily> out;
  if (k == 0) {
    out.push_back({r.codomain, {}, {}});
    return out;
  }
  std::unordered_map<int, int> pos;
  for (std::size_t i = 0; i < k; ++i) pos.emplace(m[i], static_cast<int>(i));
  // forced[i] = (g, position of m[i]∘g)
  std::vector<std::vector<std::pair<int, int>>> forced(k);
  for (std::size_t i = 0; i < k; ++i)
    for (int g : cat.into(cat.dom(m[i]))) {
      auto it = pos.find(cat.compose(m[i], g));
      soundness_check(it != pos.end(), "compatible_families: member set is not a sieve");
      forced[i].emplace_back(g, it->second);
    }
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return cat.into(cat.dom(m[a])).size() > cat.into(cat.dom(m[b])).size();
  });

  std::vector<int> value(k, -1);
  std::vector<int> trail;
  auto propagate = [&](int start, int phi) {
    std::vector<std::pair<int, int>> work{{start, phi}};
    while (!work.empty()) {
      auto [i, v] = work.back();
      work.pop_back();
      if (value[i] >= 0) {
        if (value[i] != v) return false;
        continue;
      }
      value[i] = v;
      trail.push_back(i);
      for (const auto& [g, j] : forced[i]) work.emplace_back(j, x.restrict(g, v));
    }
    return true;
  };
  std::function<void(std::size_t)> search = [&](std::size_t t) {
    while (t < k && value[order[t]] >= 0) ++t;
    if (t == k) {
      out.push_back({r.codomain, m, value});
      return;
    }
    const int member = order[t];
    for (int phi = 0; phi < x.size(cat.dom(m[member])); ++phi) {
      const std::size_t mark = trail.size();
      if (propagate(member, phi)) search(t + 1);
      while (trail.size() > mark) {
        value[trail.back()] = -1;
        trail.pop_back();
      }
    }
  };
  search(0);
  std::sort(out.begin(), out.end());
  return out;
}

/// Restriction tuple (X(f_i)(φ))_i of a plot along a family or sieve.
inline std::vector<int> restrict_along(const Presheaf& x, const std::vector<int>& members, int plot) {
  std::vector<int> out;
  out.reserve(members.size());
  for (int f : members) out.push_back(x.restrict(f, plot));
  return out;
}

enum class GluingFailure { none, no_gluing, non_unique_gluing };

inline const char* to_string(GluingFailure g) {
  switch (g) {
    case GluingFailure::none: return "none";
    case GluingFailure::no_gluing: return "NoGluing";
    case GluingFailure::non_unique_gluing: return "NonUniqueGluing";
  }
  return "?";
}

struct SheafCheck {
  bool sheaf = true;
  GluingFailure failure = GluingFailure::none;
  CoveringFamily family;
  CompatibleFamily compatible;
  std::vector<int> gluings;  // plots over family.codomain restricting to `compatible`
};

namespace detail {

inline SheafCheck sheaf_check_object(const Presheaf& x, int d, bool require_existence) {
  for (const auto& fam : x.site().covers(d)) {
    std::map<std::vector<int>, std::vector<int>> glue;
    for (int i = 0; i < x.size(d); ++i) glue[restrict_along(x, fam.members, i)].push_back(i);
    for (const auto& cf : compatible_families(x, fam)) {
      auto it = glue.find(cf.assignment);
      if (it == glue.end()) {
        if (require_existence) return {false, GluingFailure::no_gluing, fam, cf, {}};
      } else if (it->second.size() > 1) {
        return {false, GluingFailure::non_unique_gluing, fam, cf, it->second};
      }
    }
  }
  return {};
}

inline SheafCheck first_failure(const Presheaf& x, bool require_existence) {
  const std::size_t n = x.category().object_count();
  std::vector<SheafCheck> per(n);
  parallel_for(n, [&](std::size_t d) { per[d] = sheaf_check_object(x, static_cast<int>(d), require_existence); });
  for (auto& r : per)
    if (!r.sheaf) return r;
  return {};
}

}  // namespace detail

/// Sheaf condition against every covering family of the coverage. The witness
/// is the least failing compatible family in (object, family, assignment) order.
inline SheafCheck is_sheaf(const Presheaf& x) { return detail::first_failure(x, true); }

/// A natural transformation X ⇒ Y; components[D][i] indexes Y(D).
struct SheafMap {
  Presheaf source;
  Presheaf target;
  std::vector<std::vector<int>> components;

  int operator()(int d, int i) const { return components[d][i]; }
  const std::vector<int>& underlying() const { return components[source.site().terminal()]; }

  friend bool operator==(const SheafMap& a, const SheafMap& b) {
    return a.components == b.components && a.source == b.source && a.target == b.target;
  }
};

struct MapData {
  std::string source;
  std::string target;
  std::map<std::string, std::map<std::string, std::string>> components;
};

inline SheafMap identity_map(const Presheaf& x) {
  SheafMap m{x, x, {}};
  for (std::size_t d = 0; d < x.category().object_count(); ++d) {
    m.components.emplace_back(x.size(static_cast<int>(d)));
    std::iota(m.components.back().begin(), m.components.back().end(), 0);
  }
  return m;
}

/// g∘f
inline SheafMap compose(const SheafMap& g, const SheafMap& f) {
  if (!(f.target == g.source)) fail(ErrorKind::shape_mismatch, "compose: maps are not composable");
  SheafMap h{f.source, g.target, f.components};
  for (std::size_t d = 0; d < h.components.size(); ++d)
    for (auto& v : h.components[d]) v = g.components[d][v];
  return h;
}

inline SheafMap map_from_data(const Presheaf& x, const Presheaf& y, const MapData& data) {
  const auto& cat = x.category();
  ValidationReport report;
  SheafMap m{x, y, {}};
  for (std::size_t d = 0; d < cat.object_count(); ++d) {
    const int di = static_cast<int>(d);
    m.components.emplace_back(x.size(di), -1);
    auto it = data.components.find(cat.object_id(di));
    for (int i = 0; i < x.size(di); ++i) {
      if (it == data.components.end() || !it->second.contains(x.plot_id(di, i))) {
        report.structural("missing-component", {cat.object_id(di), x.plot_id(di, i)});
        continue;
      }
      const int j = y.find_plot(di, it->second.at(x.plot_id(di, i)));
      if (j < 0)
        report.structural("unknown-plot", {cat.object_id(di), it->second.at(x.plot_id(di, i))}, "map target");
      else
        m.components[d][i] = j;
    }
  }
  for (const auto& [obj, table] : data.components)
    if (cat.find_object(obj) < 0) report.structural("unknown-object", {obj}, "map component key");
  if (!report.ok()) throw Error(ErrorKind::structural, "malformed map", std::move(report));
  return m;
}

inline MapData map_data(const SheafMap& m, std::string source_name, std::string target_name) {
  MapData out{std::move(source_name), std::move(target_name), {}};
  const auto& cat = m.source.category();
  for (std::size_t d = 0; d < cat.object_count(); ++d) {
    const int di = static_cast<int>(d);
    auto& table = out.components[cat.object_id(di)];
    for (int i = 0; i < m.source.size(di); ++i) table[m.source.plot_id(di, i)] = m.target.plot_id(di, m.components[d][i]);
  }
  return out;
}

struct MapCheck {
  bool natural = true;
  bool mono = false;
  bool epi = false;
  std::vector<std::string> naturality_witness;  // {morphism, plot}
  std::vector<std::string> mono_witness;        // two points with the same image
  std::vector<std::string> epi_witness;         // a point outside the image
};

inline void check_map_shape(const SheafMap& m) {
  const auto& cat = m.source.category();
  if (!m.source.site().same_as(m.target.site()))
    fail(ErrorKind::shape_mismatch, "map between presheaves on different sites");
  if (m.components.size() != cat.object_count()) fail(ErrorKind::shape_mismatch, "map: missing components");
  for (std::size_t d = 0; d < cat.object_count(); ++d) {
    if (m.components[d].size() != static_cast<std::size_t>(m.source.size(static_cast<int>(d))))
      fail(ErrorKind::shape_mismatch, "map: component over " + cat.object_id(static_cast<int>(d)) + " has wrong size");
    for (int v : m.components[d])
      if (v < 0 || v >= m.target.size(static_cast<int>(d)))
        fail(ErrorKind::shape_mismatch, "map: component over " + cat.object_id(static_cast<int>(d)) + " out of range");
  }
}

inline bool is_natural(const SheafMap& m) {
  const auto& cat = m.source.category();
  for (std::size_t f = 0; f < cat.morphism_count(); ++f) {
    const int fi = static_cast<int>(f);
    const int c = cat.dom(fi), d = cat.cod(fi);
    for (int i = 0; i < m.source.size(d); ++i)
      if (m.target.restrict(fi, m.components[d][i]) != m.components[c][m.source.restrict(fi, i)]) return false;
  }
  return true;
}

/// Naturality plus the point-level mono/epi classification.
inline MapCheck check_map(const SheafMap& m) {
  check_map_shape(m);
  MapCheck out;
  const auto& cat = m.source.category();
  for (std::size_t f = 0; f < cat.morphism_count() && out.natural; ++f) {
    const int fi = static_cast<int>(f);
    const int c = cat.dom(fi), d = cat.cod(fi);
    for (int i = 0; i < m.source.size(d); ++i)
      if (m.target.restrict(fi, m.components[d][i]) != m.components[c][m.source.restrict(fi, i)]) {
        out.natural = false;
        out.naturality_witness = {cat.morphism_id(fi), m.source.plot_id(d, i)};
        break;
      }
  }
  const int t = m.source.site().terminal();
  const auto& u = m.components[t];
  std::vector<int> hit(m.target.size(t), -1);
  out.mono = true;
  for (int i = 0; i < static_cast<int>(u.size()); ++i) {
    if (hit[u[i]] >= 0 && out.mono) {
      out.mono = false;
      out.mono_witness = {m.source.plot_id(t, hit[u[i]]), m.source.plot_id(t, i)};
    }
    if (hit[u[i]] < 0) hit[u[i]] = i;
  }
  out.epi = true;
  for (int j = 0; j < m.target.size(t); ++j)
    if (hit[j] < 0) {
      out.epi = false;
      out.epi_witness = {m.target.plot_id(t, j)};
      break;
    }
  return out;
}

inline bool is_isomorphism(const SheafMap& m) {
  for (std::size_t d = 0; d < m.components.size(); ++d) {
    if (m.target.size(static_cast<int>(d)) != static_cast<int>(m.components[d].size())) return false;
    std::vector<char> seen(m.components[d].size(), 0);
    for (int v : m.components[d]) {
      if (seen[v]) return false;
      seen[v] = 1;
    }
  }
  return true;
}

/// Visits every natural transformation X ⇒ Y by backtracking over plots,
/// terminal object first. `visit(components)` returns false to stop early.
inline void enumerate_maps(const Presheaf& x, const Presheaf& y,
                           const std::function<bool(const std::vector<std::vector<int>>&)>& visit) {
  const auto& cat = x.category();
  const std::size_t n = cat.object_count();
  std::vector<int> objects(n);
  std::iota(objects.begin(), objects.end(), 0);
  if (x.site().has_points()) {
    const int t = x.site().terminal();
    std::stable_partition(objects.begin(), objects.end(), [t](int o) { return o == t; });
  }
  std::vector<std::pair<int, int>> vars;
  for (int d : objects)
    for (int i = 0; i < x.size(d); ++i) vars.emplace_back(d, i);

  // preimage[f][i] = plots ψ ∈ X(cod f) with X(f)(ψ) = i
  std::vector<std::vector<std::vector<int>>> preimage(cat.morphism_count());
  for (std::size_t f = 0; f < cat.morphism_count(); ++f) {
    preimage[f].resize(x.size(cat.dom(static_cast<int>(f))));
    const auto& r = x.restriction(static_cast<int>(f));
    for (std::size_t i = 0; i < r.size(); ++i) preimage[f][r[i]].push_back(static_cast<int>(i));
  }

  std::vector<std::vector<int>> value(n);
  for (std::size_t d = 0; d < n; ++d) value[d].assign(x.size(static_cast<int>(d)), -1);

  auto consistent = [&](int d, int i, int v) {
    for (int f : cat.into(d)) {
      const int c = cat.dom(f);
      const int w = value[c][x.restrict(f, i)];
      if (w >= 0 && w != y.restrict(f, v)) return false;
    }
    for (int f : cat.out_of(d))
      for (int psi : preimage[f][i]) {
        const int w = value[cat.cod(f)][psi];
        if (w >= 0 && y.restrict(f, w) != v) return false;
      }
    return true;
  };

  bool stop = false;
  std::function<void(std::size_t)> search = [&](std::size_t k) {
    if (stop) return;
    if (k == vars.size()) {
      if (!visit(value)) stop = true;
      return;
    }
    const auto [d, i] = vars[k];
    int forced = -1;
    for (int f : cat.out_of(d)) {
      for (int psi : preimage[f][i]) {
        const int w = value[cat.cod(f)][psi];
        if (w >= 0) {
          forced = y.restrict(f, w);
          break;
        }
      }
      if (forced >= 0) break;
    }
    const int lo = forced >= 0 ? forced : 0;
    const int hi = forced >= 0 ? forced + 1 : y.size(d);
    for (int v = lo; v < hi && !stop; ++v) {
      value[d][i] = v;
      if (consistent(d, i, v)) search(k + 1);
    }
    value[d][i] = -1;
  };
  search(0);
}

inline std::vector<SheafMap> all_maps(const Presheaf& x, const Presheaf& y) {
  std::vector<SheafMap> out;
  enumerate_maps(x, y, [&](const auto& c) {
    out.push_back({x, y, c});
    return true;
  });
  return out;
}

inline std::size_t count_maps(const Presheaf& x, const Presheaf& y) {
  std::size_t n = 0;
  enumerate_maps(x, y, [&](const auto&) {
    ++n;
    return true;
  });
  return n;
}

inline std::optional<SheafMap> find_isomorphism(const Presheaf& x, const Presheaf& y) {
  const auto& cat = x.category();
  for (std::size_t d = 0; d < cat.object_count(); ++d)
    if (x.size(static_cast<int>(d)) != y.size(static_cast<int>(d))) return std::nullopt;
  std::optional<SheafMap> found;
  enumerate_maps(x, y, [&](const auto& c) {
    SheafMap m{x, y, c};
    if (!is_isomorphism(m)) return true;
    found = std::move(m);
    return false;
  });
  return found;
}

/// The unique map X → Y with the given point function, when one exists.
/// Y must be concrete: its plots are looked up by underlying function.
inline std::optional<SheafMap> map_from_point_function(const Presheaf& x, const Presheaf& y,
                                                       const std::vector<int>& fn) {
  const auto& cat = x.category();
  const std::size_t n = cat.object_count();
  SheafMap m{x, y, std::vector<std::vector<int>>(n)};
  for (std::size_t d = 0; d < n; ++d) {
    const int di = static_cast<int>(d);
    std::map<std::vector<int>, int> lookup;
    for (int j = 0; j < y.size(di); ++j) lookup.emplace(plot_underlying(y, di, j), j);
    for (int i = 0; i < x.size(di); ++i) {
      auto u = plot_underlying(x, di, i);
      for (auto& v : u) v = fn[v];
      auto it = lookup.find(u);
      if (it == lookup.end()) return std::nullopt;
      m.components[d].push_back(it->second);
    }
  }
  if (!is_natural(m)) return std::nullopt;
  return m;
}

}  // namespace csheaf
