#pragma once

// Seeded generators for property tests and the `laws` command.

#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <boost/pending/disjoint_sets.hpp>

#include "csheaf/presheaf.hpp"
#include "csheaf/simplicial.hpp"
#include "csheaf/site.hpp"

namespace csheaf {

using Rng = std::mt19937_64;

inline int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

/// A coproduct of up to `max_generators` representables, quotiented by the
/// congruence generated by `merges` random identifications.
inline Presheaf random_presheaf(const Site& site, Rng& rng, int max_generators = 3, int merges = 2) {
  const auto& cat = site.category();
  const std::size_t n = cat.object_count();
  const int k = uniform(rng, 0, max_generators);
  std::vector<int> gen;
  for (int i = 0; i < k; ++i) gen.push_back(uniform(rng, 0, static_cast<int>(n) - 1));

  // tokens over C: (generator, f: C → D_gen)
  std::vector<std::vector<std::pair<int, int>>> tok(n);
  std::vector<std::map<std::pair<int, int>, int>> where(n);
  for (std::size_t c = 0; c < n; ++c)
    for (int g = 0; g < k; ++g)
      for (int f : cat.hom(static_cast<int>(c), gen[g])) {
        where[c][{g, f}] = static_cast<int>(tok[c].size());
        tok[c].emplace_back(g, f);
      }
  auto restrict = [&](int h, int t) {  // along h: C' → C, token t over C
    const auto [g, f] = tok[cat.cod(h)][t];
    return where[cat.dom(h)].at({g, cat.compose(f, h)});
  };

  std::vector<boost::disjoint_sets_with_storage<>> uf;
  for (std::size_t c = 0; c < n; ++c) uf.emplace_back(tok[c].size());
  std::vector<std::tuple<int, int, int>> work;
  for (int m = 0; m < merges; ++m) {
    const int c = uniform(rng, 0, static_cast<int>(n) - 1);
    if (tok[c].size() < 2) continue;
    const int hi = static_cast<int>(tok[c].size()) - 1;
    work.emplace_back(c, uniform(rng, 0, hi), uniform(rng, 0, hi));
  }
  while (!work.empty()) {
    auto [c, a, b] = work.back();
    work.pop_back();
    auto ra = uf[c].find_set(a), rb = uf[c].find_set(b);
    if (ra == rb) continue;
    uf[c].link(ra, rb);
    for (int h : cat.into(c)) work.emplace_back(cat.dom(h), restrict(h, a), restrict(h, b));
  }

  std::vector<std::vector<std::string>> ids(n);
  std::vector<std::vector<int>> cls(n), rep(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::map<std::size_t, int> index;
    for (std::size_t t = 0; t < tok[c].size(); ++t) {
      auto [it, fresh] = index.emplace(uf[c].find_set(t), static_cast<int>(rep[c].size()));
      const std::string name = "g" + std::to_string(tok[c][t].first) + ":" + cat.morphism_id(tok[c][t].second);
      if (fresh) {
        rep[c].push_back(static_cast<int>(t));
        ids[c].push_back(name);
      } else if (name < ids[c][it->second]) {
        ids[c][it->second] = name;
      }
      cls[c].push_back(it->second);
    }
  }
  return Presheaf::assemble(site, std::move(ids),
                            [&](int h, int k2) { return cls[cat.dom(h)][restrict(h, rep[cat.cod(h)][k2])]; });
}

/// Concrete presheaf on up to `max_points` points: `extra` random functions
/// closed under precomposition, plus every point over the terminal object.
inline Presheaf random_concrete_presheaf(const Site& site, Rng& rng, int max_points = 3, int extra = 3) {
  const auto& cat = site.category();
  const auto& pts = site.points();
  const std::size_t n = cat.object_count();
  const int np = uniform(rng, 1, max_points);
  std::vector<std::string> names;
  for (int p = 0; p < np; ++p) names.push_back("p" + std::to_string(p));
  std::vector<std::set<std::vector<int>>> fns(n);
  std::vector<std::pair<int, std::vector<int>>> work;
  for (int p = 0; p < np; ++p) work.emplace_back(pts.terminal, std::vector<int>{p});
  for (int e = 0; e < extra; ++e) {
    const int d = uniform(rng, 0, static_cast<int>(n) - 1);
    std::vector<int> fn(pts.size(d));
    for (auto& v : fn) v = uniform(rng, 0, np - 1);
    work.emplace_back(d, std::move(fn));
  }
  while (!work.empty()) {
    auto [d, fn] = std::move(work.back());
    work.pop_back();
    if (!fns[d].insert(fn).second) continue;
    for (int f : cat.into(d)) {
      std::vector<int> r;
      for (int v : pts.function(f)) r.push_back(fn[v]);
      work.emplace_back(cat.dom(f), std::move(r));
    }
  }
  std::vector<std::vector<std::vector<int>>> lists(n);
  for (std::size_t d = 0; d < n; ++d) lists[d].assign(fns[d].begin(), fns[d].end());
  return concrete_presheaf(site, names, std::move(lists));
}

/// Random complex on 1..max_vertices vertices with simplices of size <= max_size.
inline SimplicialComplex random_complex(Rng& rng, int max_vertices = 3, int max_size = 2) {
  const int nv = uniform(rng, 1, max_vertices);
  SimplicialComplex k;
  for (int v = 0; v < nv; ++v) k.vertices.push_back("v" + std::to_string(v));
  std::set<std::vector<std::string>> faces;
  for (const auto& v : k.vertices) faces.insert({v});
  const int tries = uniform(rng, 0, nv + 1);
  for (int t = 0; t < tries; ++t) {
    std::set<std::string> s;
    const int size = uniform(rng, 2, std::max(2, max_size));
    for (int i = 0; i < size; ++i) s.insert(k.vertices[static_cast<std::size_t>(uniform(rng, 0, nv - 1))]);
    if (static_cast<int>(s.size()) > max_size) continue;
    std::vector<std::string> sv(s.begin(), s.end());
    for (std::size_t mask = 1; mask < (std::size_t{1} << sv.size()); ++mask) {
      std::vector<std::string> f;
      for (std::size_t i = 0; i < sv.size(); ++i)
        if (mask >> i & 1) f.push_back(sv[i]);
      faces.insert(f);
    }
  }
  k.simplices.assign(faces.begin(), faces.end());
  k.canonicalize();
  return k;
}

}  // namespace csheaf
