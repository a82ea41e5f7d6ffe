#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "csheaf/error.hpp"

namespace csheaf {

struct MorphismRecord {
  std::string id;
  std::string dom;
  std::string cod;

  friend bool operator==(const MorphismRecord&, const MorphismRecord&) = default;
};

/// A finite category as written in a site file: every composite listed.
struct CategoryData {
  std::vector<std::string> objects;
  std::vector<MorphismRecord> morphisms;
  std::map<std::string, std::string> identities;
  std::vector<std::array<std::string, 3>> compose;  // {g, f, g∘f}
};

struct Morphism {
  std::string id;
  int dom = -1;
  int cod = -1;
};

/// Finite category with a tabulated composition law. Objects and morphisms
/// are indexed by their rank in lexicographic order of their identifiers, so
/// "least index" and "least identifier" coincide everywhere.
///
/// A built category is structurally sound (every reference resolves) but may
/// still break the category laws; validate_category reports those.
class FinCategory {
 public:
  FinCategory() = default;

  /// Returns nullopt and fills `report` if the data has structural errors.
  static std::optional<FinCategory> try_build(const CategoryData& data, ValidationReport& report,
                                              const Limits& limits = {}) {
    if (data.objects.size() > limits.max_objects)
      fail(ErrorKind::size_bound, "category has " + std::to_string(data.objects.size()) +
                                      " objects, limit is " + std::to_string(limits.max_objects));
    if (data.morphisms.size() > limits.max_morphisms)
      fail(ErrorKind::size_bound, "category has " + std::to_string(data.morphisms.size()) +
                                      " morphisms, limit is " +
                                      std::to_string(limits.max_morphisms));

    FinCategory cat;
    const std::size_t before = report.violations.size();

    cat.object_ids_ = data.objects;
    std::sort(cat.object_ids_.begin(), cat.object_ids_.end());
    for (std::size_t i = 0; i + 1 < cat.object_ids_.size(); ++i)
      if (cat.object_ids_[i] == cat.object_ids_[i + 1])
        report.structural("duplicate-object", {cat.object_ids_[i]});
    cat.object_ids_.erase(std::unique(cat.object_ids_.begin(), cat.object_ids_.end()),
                          cat.object_ids_.end());
    for (std::size_t i = 0; i < cat.object_ids_.size(); ++i)
      cat.object_index_.emplace(cat.object_ids_[i], static_cast<int>(i));

    std::vector<MorphismRecord> recs = data.morphisms;
    std::sort(recs.begin(), recs.end(),
              [](const MorphismRecord& a, const MorphismRecord& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < recs.size(); ++i) {
      if (i + 1 < recs.size() && recs[i].id == recs[i + 1].id) {
        report.structural("duplicate-morphism", {recs[i].id});
        continue;
      }
      const int d = cat.find_object(recs[i].dom);
      const int c = cat.find_object(recs[i].cod);
      if (d < 0) report.structural("unknown-object", {recs[i].id, recs[i].dom}, "morphism domain");
      if (c < 0) report.structural("unknown-object", {recs[i].id, recs[i].cod}, "morphism codomain");
      cat.morphism_index_.emplace(recs[i].id, static_cast<int>(cat.morphisms_.size()));
      cat.morphisms_.push_back({recs[i].id, d, c});
    }

    const std::size_t n = cat.object_ids_.size();
    cat.identity_.assign(n, -1);
    for (const auto& [obj, mor] : data.identities) {
      const int o = cat.find_object(obj);
      const int m = cat.find_morphism(mor);
      if (o < 0) report.structural("unknown-object", {obj}, "identity key");
      if (m < 0) report.structural("unknown-morphism", {mor}, "identity value");
      if (o >= 0 && m >= 0) cat.identity_[static_cast<std::size_t>(o)] = m;
    }
    for (std::size_t o = 0; o < n; ++o)
      if (cat.identity_[o] < 0 && !data.identities.contains(cat.object_ids_[o]))
        report.structural("missing-identity", {cat.object_ids_[o]});

    if (report.violations.size() != before) return std::nullopt;

    cat.index_homs();

    for (std::size_t o = 0; o < n; ++o) {
      const int m = cat.identity_[o];
      if (cat.morphisms_[static_cast<std::size_t>(m)].dom != static_cast<int>(o) ||
          cat.morphisms_[static_cast<std::size_t>(m)].cod != static_cast<int>(o))
        cat.defects_.push_back({"identity-typing", {cat.object_ids_[o], cat.morphisms_[m].id},
                                "identity must be an endomorphism of its object", false});
    }

    cat.table_.resize(cat.morphisms_.size());
    for (std::size_t g = 0; g < cat.morphisms_.size(); ++g)
      cat.table_[g].assign(cat.into_[static_cast<std::size_t>(cat.morphisms_[g].dom)].size(), -1);

    bool dangling = false;
    for (const auto& [gs, fs, hs] : data.compose) {
      const int g = cat.find_morphism(gs), f = cat.find_morphism(fs), h = cat.find_morphism(hs);
      if (g < 0 || f < 0 || h < 0) {
        report.structural("unknown-morphism", {gs, fs, hs}, "composition entry");
        dangling = true;
        continue;
      }
      if (cat.cod(f) != cat.dom(g)) {
        cat.defects_.push_back({"defined-on-noncomposable", {gs, fs, hs},
                                "composite listed for a non-composable pair", false});
        continue;
      }
      if (cat.dom(h) != cat.dom(f) || cat.cod(h) != cat.cod(g)) {
        cat.defects_.push_back({"composite-typing", {gs, fs, hs},
                                "composite has the wrong domain or codomain", false});
        continue;
      }
      int& slot = cat.table_[static_cast<std::size_t>(g)]
                            [static_cast<std::size_t>(cat.into_pos_[static_cast<std::size_t>(f)])];
      if (slot >= 0 && slot != h) {
        cat.defects_.push_back({"composition-not-functional",
                                {gs, fs, cat.morphisms_[static_cast<std::size_t>(slot)].id, hs},
                                "two different composites listed", false});
        continue;
      }
      slot = h;
    }
    if (dangling) return std::nullopt;
    return cat;
  }

  static FinCategory build(const CategoryData& data, const Limits& limits = {}) {
    ValidationReport report;
    auto cat = try_build(data, report, limits);
    if (!cat) throw Error(ErrorKind::structural, "malformed category", std::move(report));
    return std::move(*cat);
  }

  std::size_t object_count() const { return object_ids_.size(); }
  std::size_t morphism_count() const { return morphisms_.size(); }

  const std::string& object_id(int o) const { return object_ids_[static_cast<std::size_t>(o)]; }
  const std::vector<std::string>& object_ids() const { return object_ids_; }
  const Morphism& morphism(int f) const { return morphisms_[static_cast<std::size_t>(f)]; }
  const std::string& morphism_id(int f) const { return morphism(f).id; }
  int dom(int f) const { return morphism(f).dom; }
  int cod(int f) const { return morphism(f).cod; }
  int identity(int o) const { return identity_[static_cast<std::size_t>(o)]; }
  bool is_identity(int f) const { return identity(dom(f)) == f; }

  int find_object(std::string_view id) const {
    auto it = object_index_.find(std::string(id));
    return it == object_index_.end() ? -1 : it->second;
  }
  int find_morphism(std::string_view id) const {
    auto it = morphism_index_.find(std::string(id));
    return it == morphism_index_.end() ? -1 : it->second;
  }
  int object(std::string_view id) const {
    const int o = find_object(id);
    if (o < 0) fail(ErrorKind::unknown_id, "unknown object '" + std::string(id) + "'");
    return o;
  }
  int morphism_index(std::string_view id) const {
    const int f = find_morphism(id);
    if (f < 0) fail(ErrorKind::unknown_id, "unknown morphism '" + std::string(id) + "'");
    return f;
  }

  /// g∘f, or -1 when cod(f) != dom(g) or the entry is missing.
  int compose(int g, int f) const {
    if (cod(f) != dom(g)) return -1;
    return table_[static_cast<std::size_t>(g)][static_cast<std::size_t>(into_pos_[static_cast<std::size_t>(f)])];
  }

  const std::vector<int>& hom(int c, int d) const {
    return hom_[static_cast<std::size_t>(c) * object_count() + static_cast<std::size_t>(d)];
  }
  /// Morphisms with codomain d, ascending.
  const std::vector<int>& into(int d) const { return into_[static_cast<std::size_t>(d)]; }
  /// Morphisms with domain c, ascending.
  const std::vector<int>& out_of(int c) const { return out_[static_cast<std::size_t>(c)]; }
  /// Position of f inside into(cod f).
  int into_position(int f) const { return into_pos_[static_cast<std::size_t>(f)]; }

  const std::vector<Violation>& build_defects() const { return defects_; }

  /// Canonical data form: sorted objects, morphisms, and composition triples.
  CategoryData data() const {
    CategoryData d;
    d.objects = object_ids_;
    for (const auto& m : morphisms_)
      d.morphisms.push_back({m.id, object_id(m.dom), object_id(m.cod)});
    for (std::size_t o = 0; o < object_count(); ++o)
      d.identities.emplace(object_ids_[o], morphisms_[static_cast<std::size_t>(identity_[o])].id);
    for (std::size_t g = 0; g < morphisms_.size(); ++g)
      for (std::size_t p = 0; p < table_[g].size(); ++p)
        if (table_[g][p] >= 0) {
          const int f = into_[static_cast<std::size_t>(morphisms_[g].dom)][p];
          d.compose.push_back({morphisms_[g].id, morphism_id(f), morphism_id(table_[g][p])});
        }
    std::sort(d.compose.begin(), d.compose.end());
    return d;
  }

  friend bool operator==(const FinCategory& a, const FinCategory& b) {
    if (a.object_ids_ != b.object_ids_ || a.identity_ != b.identity_ || a.table_ != b.table_)
      return false;
    if (a.morphisms_.size() != b.morphisms_.size()) return false;
    for (std::size_t i = 0; i < a.morphisms_.size(); ++i)
      if (a.morphisms_[i].id != b.morphisms_[i].id || a.morphisms_[i].dom != b.morphisms_[i].dom ||
          a.morphisms_[i].cod != b.morphisms_[i].cod)
        return false;
    return true;
  }

 private:
  void index_homs() {
    const std::size_t n = object_count();
    hom_.assign(n * n, {});
    into_.assign(n, {});
    out_.assign(n, {});
    into_pos_.assign(morphisms_.size(), -1);
    for (std::size_t f = 0; f < morphisms_.size(); ++f) {
      const auto& m = morphisms_[f];
      hom_[static_cast<std::size_t>(m.dom) * n + static_cast<std::size_t>(m.cod)].push_back(static_cast<int>(f));
      into_pos_[f] = static_cast<int>(into_[static_cast<std::size_t>(m.cod)].size());
      into_[static_cast<std::size_t>(m.cod)].push_back(static_cast<int>(f));
      out_[static_cast<std::size_t>(m.dom)].push_back(static_cast<int>(f));
    }
  }

  std::vector<std::string> object_ids_;
  std::unordered_map<std::string, int> object_index_;
  std::vector<Morphism> morphisms_;
  std::unordered_map<std::string, int> morphism_index_;
  std::vector<int> identity_;
  std::vector<std::vector<int>> hom_;
  std::vector<std::vector<int>> into_;
  std::vector<std::vector<int>> out_;
  std::vector<int> into_pos_;
  std::vector<std::vector<int>> table_;  // table_[g][into_position(f)] = g∘f
  std::vector<Violation> defects_;
};

/// Checks identity laws, associativity, and that composition is defined
/// exactly on composable pairs. Every violation is listed with its witness.
inline ValidationReport validate_category(const FinCategory& cat) {
  ValidationReport report;
  report.violations = cat.build_defects();

  const int m = static_cast<int>(cat.morphism_count());
  std::vector<bool> typed_identity(cat.object_count(), true);
  for (const auto& v : cat.build_defects())
    if (v.kind == "identity-typing") typed_identity[static_cast<std::size_t>(cat.object(v.witness[0]))] = false;

  for (int f = 0; f < m; ++f)
    for (int g : cat.out_of(cat.cod(f)))
      if (cat.compose(g, f) < 0)
        report.add("totality", {cat.morphism_id(g), cat.morphism_id(f)}, "composable pair without composite");

  for (int f = 0; f < m; ++f) {
    const int c = cat.cod(f), d = cat.dom(f);
    if (typed_identity[static_cast<std::size_t>(c)]) {
      const int h = cat.compose(cat.identity(c), f);
      if (h >= 0 && h != f)
        report.add("left-identity", {cat.morphism_id(cat.identity(c)), cat.morphism_id(f), cat.morphism_id(h)});
    }
    if (typed_identity[static_cast<std::size_t>(d)]) {
      const int h = cat.compose(f, cat.identity(d));
      if (h >= 0 && h != f)
        report.add("right-identity", {cat.morphism_id(f), cat.morphism_id(cat.identity(d)), cat.morphism_id(h)});
    }
  }

  for (int f = 0; f < m; ++f)
    for (int g : cat.out_of(cat.cod(f))) {
      const int gf = cat.compose(g, f);
      if (gf < 0) continue;
      for (int h : cat.out_of(cat.cod(g))) {
        const int hg = cat.compose(h, g);
        if (hg < 0) continue;
        const int l = cat.compose(h, gf), r = cat.compose(hg, f);
        if (l >= 0 && r >= 0 && l != r)
          report.add("associativity", {cat.morphism_id(h), cat.morphism_id(g), cat.morphism_id(f)});
      }
    }
  return report;
}

inline ValidationReport validate_category(const CategoryData& data, const Limits& limits = {}) {
  ValidationReport report;
  auto cat = FinCategory::try_build(data, report, limits);
  if (cat) report.merge(validate_category(*cat));
  return report;
}

inline const std::vector<int>& hom_set(const FinCategory& cat, int c, int d) {
  if (c < 0 || d < 0 || static_cast<std::size_t>(c) >= cat.object_count() ||
      static_cast<std::size_t>(d) >= cat.object_count())
    fail(ErrorKind::unknown_id, "hom_set: object index out of range");
  return cat.hom(c, d);
}

inline std::vector<std::string> hom_set(const FinCategory& cat, std::string_view c, std::string_view d) {
  std::vector<std::string> out;
  for (int f : cat.hom(cat.object(c), cat.object(d))) out.push_back(cat.morphism_id(f));
  return out;
}

inline bool is_terminal(const FinCategory& cat, int t) {
  for (std::size_t c = 0; c < cat.object_count(); ++c)
    if (cat.hom(static_cast<int>(c), t).size() != 1) return false;
  return true;
}

/// Least terminal object in canonical order.
inline int find_terminal(const FinCategory& cat) {
  for (std::size_t t = 0; t < cat.object_count(); ++t)
    if (is_terminal(cat, static_cast<int>(t))) return static_cast<int>(t);
  fail(ErrorKind::no_terminal, "category has no terminal object");
}

/// The points functor hom(1,-) tabulated: underlying sets of objects and
/// underlying functions of morphisms (as maps between point positions).
struct PointsData {
  int terminal = -1;
  std::vector<std::vector<int>> sets;       // sets[D] = hom(1, D), ascending
  std::vector<int> position;                // for d: 1 -> D, its index in sets[D]; else -1
  std::vector<std::vector<int>> functions;  // functions[f][i] = position of f∘sets[dom f][i]
  bool faithful = true;
  std::optional<std::pair<int, int>> faithfulness_witness;  // least pair f < g with equal functions

  std::size_t size(int d) const { return sets[static_cast<std::size_t>(d)].size(); }
  const std::vector<int>& function(int f) const { return functions[static_cast<std::size_t>(f)]; }
};

inline PointsData points(const FinCategory& cat, int terminal) {
  if (terminal < 0 || static_cast<std::size_t>(terminal) >= cat.object_count() || !is_terminal(cat, terminal))
    fail(ErrorKind::not_terminal, "points: object is not terminal");
  PointsData p;
  p.terminal = terminal;
  const std::size_t n = cat.object_count();
  p.sets.resize(n);
  p.position.assign(cat.morphism_count(), -1);
  for (std::size_t d = 0; d < n; ++d) {
    p.sets[d] = cat.hom(terminal, static_cast<int>(d));
    for (std::size_t i = 0; i < p.sets[d].size(); ++i) p.position[static_cast<std::size_t>(p.sets[d][i])] = static_cast<int>(i);
  }
  p.functions.resize(cat.morphism_count());
  for (std::size_t f = 0; f < cat.morphism_count(); ++f) {
    const int fi = static_cast<int>(f);
    for (int x : p.sets[static_cast<std::size_t>(cat.dom(fi))]) {
      const int y = cat.compose(fi, x);
      p.functions[f].push_back(y < 0 ? -1 : p.position[static_cast<std::size_t>(y)]);
    }
  }
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t d = 0; d < n; ++d) {
      const auto& h = cat.hom(static_cast<int>(c), static_cast<int>(d));
      for (std::size_t i = 0; i < h.size(); ++i)
        for (std::size_t j = i + 1; j < h.size(); ++j)
          if (p.functions[static_cast<std::size_t>(h[i])] == p.functions[static_cast<std::size_t>(h[j])] &&
              (!p.faithfulness_witness || std::pair{h[i], h[j]} < *p.faithfulness_witness))
            p.faithfulness_witness = std::pair{h[i], h[j]};
    }
  p.faithful = !p.faithfulness_witness.has_value();
  return p;
}

struct FunctionMorphism {
  std::string id;
  std::string dom;
  std::string cod;
  std::vector<int> fn;  // fn[i] ∈ [0, size(cod)) for i ∈ [0, size(dom))
};

/// The category of the listed functions between finite sets of the given
/// sizes. The list must contain every identity and be closed under composition.
inline FinCategory category_of_functions(const std::vector<std::pair<std::string, int>>& objects,
                                         const std::vector<FunctionMorphism>& morphisms, const Limits& limits = {}) {
  CategoryData data;
  std::map<std::string, int> size;
  for (const auto& [id, n] : objects) {
    data.objects.push_back(id);
    size[id] = n;
  }
  std::map<std::tuple<std::string, std::string, std::vector<int>>, std::string> by_fn;
  for (const auto& m : morphisms) {
    data.morphisms.push_back({m.id, m.dom, m.cod});
    if (!size.contains(m.dom) || !size.contains(m.cod) || static_cast<int>(m.fn.size()) != size[m.dom])
      fail(ErrorKind::structural, "category_of_functions: morphism " + m.id + " is ill-typed");
    for (int v : m.fn)
      if (v < 0 || v >= size[m.cod]) fail(ErrorKind::structural, "category_of_functions: morphism " + m.id + " is ill-typed");
    if (!by_fn.emplace(std::tuple{m.dom, m.cod, m.fn}, m.id).second)
      fail(ErrorKind::structural, "category_of_functions: duplicate function " + m.id);
  }
  for (const auto& [id, n] : objects) {
    std::vector<int> fn(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) fn[static_cast<std::size_t>(i)] = i;
    auto it = by_fn.find({id, id, fn});
    if (it == by_fn.end()) fail(ErrorKind::structural, "category_of_functions: no identity on " + id);
    data.identities[id] = it->second;
  }
  for (const auto& f : morphisms)
    for (const auto& g : morphisms) {
      if (g.dom != f.cod) continue;
      std::vector<int> h(f.fn.size());
      for (std::size_t i = 0; i < h.size(); ++i) h[i] = g.fn[static_cast<std::size_t>(f.fn[i])];
      auto it = by_fn.find({f.dom, g.cod, h});
      if (it == by_fn.end())
        fail(ErrorKind::structural, "category_of_functions: " + g.id + " o " + f.id + " is not listed");
      data.compose.push_back({g.id, f.id, it->second});
    }
  return FinCategory::build(data, limits);
}

}  // namespace csheaf
