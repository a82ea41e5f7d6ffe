#pragma once

// The invariant suite behind `csheaf laws`: seeded random instances on one
// site, each law reported separately.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "csheaf/constructions.hpp"
#include "csheaf/quasitopos.hpp"
#include "csheaf/random.hpp"
#include "csheaf/site_validation.hpp"

namespace csheaf {

struct LawResult {
  std::string name;
  bool pass = true;
  bool skipped = false;
  std::size_t checked = 0;
  std::vector<std::string> witness;
};

namespace detail {

struct LawContext {
  const Site& site;
  Rng rng;
  int trials;
  LawResult& out;

  void expect(bool cond, std::vector<std::string> witness) {
    ++out.checked;
    if (!cond && out.pass) {
      out.pass = false;
      out.witness = std::move(witness);
    }
  }
  std::string trial(int i) const { return "trial " + std::to_string(i); }
};

// Small enough for exhaustive map searches.
inline bool small(const Presheaf& x, std::size_t bound = 40) { return x.total_plots() <= bound; }

inline Presheaf random_sheaf(const Site& site, Rng& rng) {
  return sheafify(random_concrete_presheaf(site, rng, 2, 2)).sheaf;
}

inline SheafMap random_map(const Presheaf& x, const Presheaf& y, Rng& rng, bool& found) {
  auto ms = all_maps(x, y);
  found = !ms.empty();
  if (!found) return identity_map(x);
  return ms[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(ms.size()) - 1))];
}

}  // namespace detail

inline std::vector<LawResult> run_laws(const Site& site, std::uint64_t seed, int trials) {
  using detail::LawContext;
  const bool concrete = site.has_points();
  const auto certs = validate_concrete_site(site);

  struct Law {
    const char* name;
    bool needs_points;
    bool needs_subcanonical;
    std::function<void(LawContext&)> run;
  };
  const std::vector<Law> laws{
      {"site-certificates", false, false,
       [&](LawContext& c) {
         std::vector<std::string> w;
         if (!certs.ok()) {
           const auto& v = certs.report.violations.front();
           w = {v.kind};
           w.insert(w.end(), v.witness.begin(), v.witness.end());
         }
         c.expect(certs.ok(), w);
       }},
      {"presheaf-functoriality", false, false,
       [](LawContext& c) {
         for (int i = 0; i < c.trials; ++i) c.expect(check_presheaf(random_presheaf(c.site, c.rng, 2, 2)).ok(), {c.trial(i)});
       }},
      {"plus-is-separated", false, false,
       [](LawContext& c) {
         for (int i = 0; i < c.trials; ++i) {
           auto p = plus(random_presheaf(c.site, c.rng, 2, 2));
           c.expect(is_separated(p.presheaf).sheaf && is_natural(p.unit), {c.trial(i)});
         }
       }},
      {"sheafify-certifies", false, false,
       [](LawContext& c) {
         for (int i = 0; i < c.trials; ++i) c.expect(is_sheaf(sheafify(random_presheaf(c.site, c.rng, 2, 2)).sheaf).sheaf, {c.trial(i)});
       }},
      {"plus-of-concrete-is-concrete-sheaf", true, false,
       [](LawContext& c) {
         for (int i = 0; i < c.trials; ++i) {
           auto x = random_concrete_presheaf(c.site, c.rng, 3, 3);
           auto p = plus(x).presheaf;
           c.expect(is_sheaf(p).sheaf && is_concrete(p).concrete, {c.trial(i)});
         }
       }},
      {"sheafify-fixes-sheaves", false, false,
       [](LawContext& c) {
         for (int i = 0; i < c.trials; ++i) {
           auto s = sheafify(random_presheaf(c.site, c.rng, 2, 2)).sheaf;
           c.expect(is_isomorphism(sheafify(s).unit), {c.trial(i)});
         }
       }},
      {"sheafification-adjunction", false, false,
       [](LawContext& c) {
         for (int i = 0; i < c.trials; ++i) {
           auto x = random_presheaf(c.site, c.rng, 2, 2);
           auto y = sheafify(random_presheaf(c.site, c.rng, 1, 1)).sheaf;
           if (!detail::small(x) || !detail::small(y)) continue;
           c.expect(count_maps(sheafify(x).sheaf, y) == count_maps(x, y), {c.trial(i)});
         }
       }},
      {"concretize-idempotent", true, false,
       [](LawContext& c) {
         for (int i = 0; i < c.trials; ++i) {
           auto l = concretize(random_presheaf(c.site, c.rng, 2, 2)).concrete;
           c.expect(is_isomorphism(concretize(l).quotient), {c.trial(i)});
         }
       }},
      {"concretization-adjunction", true, false,
       [](LawContext& c) {
         for (int i = 0; i < c.trials; ++i) {
           auto x = random_presheaf(c.site, c.rng, 2, 2);
           auto y = random_concrete_presheaf(c.site, c.rng, 3, 2);
           if (!detail::small(x) || !detail::small(y)) continue;
           c.expect(count_maps(concretize(x).concrete, y) == count_maps(x, y), {c.trial(i)});
         }
       }},
      {"limits", true, false,
       [](LawContext& c) {
         auto pt = terminal_object(c.site).cone.apex;
         for (int i = 0; i < c.trials; ++i) {
           auto x = detail::random_sheaf(c.site, c.rng), y = detail::random_sheaf(c.site, c.rng),
                z = detail::random_sheaf(c.site, c.rng);
           bool f_ok = false, g_ok = false, h_ok = false;
           auto f = detail::random_map(x, z, c.rng, f_ok);
           auto g = detail::random_map(y, z, c.rng, g_ok);
           auto h = detail::random_map(x, z, c.rng, h_ok);
           std::vector<NamedResult> rs{product(c.site, {x, y})};
           if (f_ok && g_ok) rs.push_back(pullback(f, g));
           if (f_ok && h_ok) rs.push_back(equalizer(f, h));
           for (const auto& r : rs) {
             bool ok = r.cross_checked && is_sheaf(r.cone.apex).sheaf && is_concrete(r.cone.apex).concrete;
             for (const auto& cone : enumerate_cones(r.diagram, pt)) ok = ok && count_limit_mediators(r.cone, cone) == 1;
             c.expect(ok, {c.trial(i), to_string(r.kind)});
           }
         }
       }},
      {"colimits", true, false,
       [](LawContext& c) {
         auto om = omega(c.site).sheaf;
         for (int i = 0; i < c.trials; ++i) {
           auto x = detail::random_sheaf(c.site, c.rng), y = detail::random_sheaf(c.site, c.rng);
           bool f_ok = false, g_ok = false;
           auto f = detail::random_map(x, y, c.rng, f_ok);
           auto g = detail::random_map(x, y, c.rng, g_ok);
           std::vector<NamedResult> rs{coproduct(c.site, {x, y})};
           if (f_ok && g_ok) {
             rs.push_back(coequalizer(f, g));
             rs.push_back(pushout(f, g));
           }
           for (const auto& r : rs) {
             bool ok = r.cross_checked && is_sheaf(r.cone.apex).sheaf && is_concrete(r.cone.apex).concrete;
             if (detail::small(r.cone.apex, 24))
               for (const auto& cocone : enumerate_cocones(r.diagram, om))
                 ok = ok && count_colimit_mediators(r.cone, cocone) == 1;
             c.expect(ok, {c.trial(i), to_string(r.kind)});
           }
         }
       }},
      {"omega", true, false,
       [](LawContext& c) {
         auto om = omega(c.site);
         const auto& pts = c.site.points();
         bool ok = om.sheaf.size(c.site.terminal()) == 2 && is_sheaf(om.sheaf).sheaf;
         for (std::size_t d = 0; d < c.site.category().object_count(); ++d)
           ok = ok && om.sheaf.size(static_cast<int>(d)) == (1 << pts.size(static_cast<int>(d)));
         c.expect(ok, {});
       }},
      {"classifier", true, false,
       [](LawContext& c) {
         for (int i = 0; i < c.trials; ++i) {
           auto x = detail::random_sheaf(c.site, c.rng);
           const int n = x.size(c.site.terminal());
           if (n > 3) continue;
           for (int mask = 0; mask < (1 << n); ++mask) {
             std::vector<bool> keep;
             for (int p = 0; p < n; ++p) keep.push_back(mask >> p & 1);
             c.expect(characteristic_map(subspace_structure(x, keep).inclusion).qualifying == 1,
                      {c.trial(i), "mask " + std::to_string(mask)});
           }
         }
       }},
      {"strong-monos-and-epis", true, false,
       [](LawContext& c) {
         for (int i = 0; i < c.trials; ++i) {
           auto x = detail::random_sheaf(c.site, c.rng);
           const int n = x.size(c.site.terminal());
           std::vector<bool> keep;
           std::vector<int> label;
           for (int p = 0; p < n; ++p) {
             keep.push_back(uniform(c.rng, 0, 1) == 1);
             label.push_back(uniform(c.rng, 0, 1));
           }
           c.expect(is_strong_mono(subspace_structure(x, keep).inclusion).strong &&
                        is_strong_epi(quotient_structure(x, label).projection).strong,
                    {c.trial(i)});
         }
       }},
      {"currying", true, false,
       [](LawContext& c) {
         for (int i = 0; i < c.trials; ++i) {
           auto z = over_terminal(detail::random_sheaf(c.site, c.rng));
           auto x = over_terminal(detail::random_sheaf(c.site, c.rng));
           auto y = over_terminal(detail::random_sheaf(c.site, c.rng));
           if (!detail::small(z.total, 16) || !detail::small(x.total, 16) || !detail::small(y.total, 16)) continue;
           auto ex = exponential_over_base(x, y);
           auto zx = fiber_product(z, x);
           auto flat = all_maps(zx.cone.apex, y.total);
           auto curried = all_maps(z.total, ex.space.total);
           bool ok = flat.size() == curried.size();
           for (const auto& f : flat) ok = ok && uncurry(y, ex, zx, curry(z, x, y, ex, zx, f)) == f;
           c.expect(ok, {c.trial(i)});
         }
       }},
      {"colimit-of-representables", true, true,
       [](LawContext& c) {
         for (int i = 0; i < c.trials; ++i) {
           auto x = detail::random_sheaf(c.site, c.rng);
           c.expect(as_colimit_of_representables(x).iso.has_value(), {c.trial(i)});
         }
       }},
  };

  std::vector<LawResult> results;
  for (std::size_t k = 0; k < laws.size(); ++k) {
    LawResult r;
    r.name = laws[k].name;
    if ((laws[k].needs_points && (!concrete || !certs.faithful.pass || !certs.jointly_surjective.pass)) ||
        (laws[k].needs_subcanonical && !certs.subcanonical.pass)) {
      r.skipped = true;
      results.push_back(std::move(r));
      continue;
    }
    LawContext ctx{site, Rng(seed * 1000003ull + k), trials, r};
    try {
      laws[k].run(ctx);
    } catch (const Error& e) {
      r.pass = false;
      r.witness = {to_string(e.kind()), e.what()};
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace csheaf
