#pragma once

#include <string>
#include <vector>

#include "csheaf/error.hpp"
#include "csheaf/fincat.hpp"
#include "csheaf/presheaf.hpp"
#include "csheaf/site.hpp"

namespace csheaf {

struct Certificate {
  bool pass = true;
  std::vector<std::string> witness;
};

struct SiteCertificates {
  Certificate coverage_axiom;
  Certificate faithful;
  Certificate jointly_surjective;
  Certificate subcanonical;
  ValidationReport report;

  bool ok() const { return report.ok(); }
};

inline std::string family_label(const FinCategory& cat, const std::vector<int>& members) {
  std::string s = "{";
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (i) s += ',';
    s += cat.morphism_id(members[i]);
  }
  return s + '}';
}

namespace detail {

// Does h factor through f, i.e. h = f∘k for some k?
inline bool factors_through(const FinCategory& cat, int h, int f) {
  for (int k : cat.hom(cat.dom(h), cat.dom(f)))
    if (cat.compose(f, k) == h) return true;
  return false;
}

inline bool factors_through_some(const FinCategory& cat, int h, const std::vector<int>& fs) {
  for (int f : fs)
    if (factors_through(cat, h, f)) return true;
  return false;
}

}  // namespace detail

/// Exhaustive check of the coverage axiom, faithfulness of hom(1,-), joint
/// surjectivity of covering families and subcanonicity. Category law
/// violations are included in the same report.
inline SiteCertificates validate_concrete_site(const Site& site) {
  SiteCertificates out;
  const auto& cat = site.category();
  out.report = validate_category(cat);
  for (const auto& v : cat.build_defects()) out.report.violations.push_back(v);
  if (!out.report.ok()) {
    // Nothing downstream is meaningful over a non-category.
    out.coverage_axiom = out.faithful = out.jointly_surjective = out.subcanonical = {false, {"category"}};
    return out;
  }

  // Coverage axiom: for each family (f_i) on D and g: C → D, some family (h_j)
  // on C has every g∘h_j factoring through some f_i.
  for (std::size_t d = 0; d < cat.object_count() && out.coverage_axiom.pass; ++d)
    for (const auto& fam : site.covers(static_cast<int>(d))) {
      for (int g : cat.into(static_cast<int>(d))) {
        bool found = false;
        for (const auto& h : site.covers(cat.dom(g))) {
          bool all = true;
          for (int hj : h.members)
            if (!detail::factors_through_some(cat, cat.compose(g, hj), fam.members)) {
              all = false;
              break;
            }
          if (all) {
            found = true;
            break;
          }
        }
        if (!found) {
          out.coverage_axiom = {false, {cat.object_id(static_cast<int>(d)), family_label(cat, fam.members), cat.morphism_id(g)}};
          out.report.add("coverage-axiom", out.coverage_axiom.witness, "no covering family of the domain factors");
          break;
        }
      }
      if (!out.coverage_axiom.pass) break;
    }

  if (!site.has_points()) {
    const std::string why = site.designated_terminal() ? "designated terminal is not terminal" : "no terminal object";
    out.faithful = out.jointly_surjective = {false, {"terminal"}};
    out.report.add(site.designated_terminal() ? "not-terminal" : "no-terminal", {}, why);
  } else {
    const auto& pts = site.points();
    if (!pts.faithful) {
      const auto [f, g] = *pts.faithfulness_witness;
      out.faithful = {false, {cat.morphism_id(f), cat.morphism_id(g)}};
      out.report.add("faithfulness", out.faithful.witness, "distinct morphisms with equal underlying functions");
    }
    for (std::size_t d = 0; d < cat.object_count() && out.jointly_surjective.pass; ++d)
      for (const auto& fam : site.covers(static_cast<int>(d))) {
        std::vector<char> hit(pts.size(static_cast<int>(d)), 0);
        for (int f : fam.members)
          for (int v : pts.function(f)) hit[v] = 1;
        auto miss = std::find(hit.begin(), hit.end(), 0);
        if (miss != hit.end()) {
          const int point = pts.sets[d][static_cast<std::size_t>(miss - hit.begin())];
          out.jointly_surjective = {false,
                                    {cat.object_id(static_cast<int>(d)), family_label(cat, fam.members), cat.morphism_id(point)}};
          out.report.add("joint-surjectivity", out.jointly_surjective.witness, "point missed by every member");
          break;
        }
      }
  }

  for (std::size_t d = 0; d < cat.object_count(); ++d) {
    auto check = is_sheaf(representable(site, static_cast<int>(d)));
    if (!check.sheaf) {
      out.subcanonical = {false,
                          {cat.object_id(static_cast<int>(d)), to_string(check.failure),
                           family_label(cat, check.family.members)}};
      out.report.add("subcanonicity", out.subcanonical.witness, "representable presheaf is not a sheaf");
      break;
    }
  }
  return out;
}

/// hom(-, D), certified as a concrete sheaf.
inline Presheaf representable_sheaf(const Site& site, int d) {
  auto x = representable(site, d);
  auto check = is_sheaf(x);
  if (!check.sheaf)
    throw Error(ErrorKind::subcanonicity_violation,
                "representable at " + site.category().object_id(d) + " is not a sheaf (" + to_string(check.failure) + ")");
  if (site.has_points()) soundness_check(is_concrete(x).concrete, "representable presheaf is not concrete");
  return x;
}

/// Throws InternalSoundnessError unless x is a concrete sheaf.
inline void certify_concrete_sheaf(const Presheaf& x, const std::string& what) {
  auto s = is_sheaf(x);
  soundness_check(s.sheaf, what + ": output fails the sheaf condition (" + to_string(s.failure) + ")");
  soundness_check(is_concrete(x).concrete, what + ": output is not concrete");
}

}  // namespace csheaf
