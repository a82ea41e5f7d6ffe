#pragma once

#include <algorithm>
#include <compare>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/dynamic_bitset.hpp>

#include "csheaf/error.hpp"
#include "csheaf/fincat.hpp"

namespace csheaf {

/// A family of morphisms with common codomain.
struct CoveringFamily {
  int codomain = -1;
  std::vector<int> members;  // ascending, no duplicates

  auto operator<=>(const CoveringFamily&) const = default;
  bool operator==(const CoveringFamily&) const = default;
};

/// A set of morphisms into `codomain` closed under precomposition.
struct Sieve {
  int codomain = -1;
  std::vector<int> members;  // ascending

  bool contains(int f) const { return std::binary_search(members.begin(), members.end(), f); }
  auto operator<=>(const Sieve&) const = default;
  bool operator==(const Sieve&) const = default;
};

struct SiteData {
  std::string name;
  CategoryData category;
  std::optional<std::string> terminal;
  std::map<std::string, std::vector<std::vector<std::string>>> covers;
};

class Site;

namespace detail {

using Bits = boost::dynamic_bitset<>;

struct ObjectSieves {
  std::vector<Bits> all;  // canonical order (sorted member lists)
  std::map<Bits, int> index;
  std::vector<char> covering;
  int minimal = -1;
};

struct Topology {
  std::vector<ObjectSieves> objects;
  // pullback_pos[f][q] = position in into(cod f) of f∘into(dom f)[q]
  std::vector<std::vector<int>> pullback_pos;
};

inline Topology generate_topology(const FinCategory& cat, const std::vector<std::vector<CoveringFamily>>& covers,
                           const Limits& limits);

}  // namespace detail

/// Category + coverage + (when one exists) a terminal object and the points
/// functor. A cheap value handle over immutable shared state; the generated
/// Grothendieck topology is computed on first use and memoized.
class Site {
 public:
  Site() = default;

  static Site build(FinCategory cat, std::vector<CoveringFamily> families, std::optional<int> terminal = {},
                    std::string name = {}, Limits limits = {}) {
    auto impl = std::make_shared<Impl>();
    impl->name = std::move(name);
    impl->limits = limits;
    impl->covers.resize(cat.object_count());
    for (auto& fam : families) {
      std::sort(fam.members.begin(), fam.members.end());
      fam.members.erase(std::unique(fam.members.begin(), fam.members.end()), fam.members.end());
      if (fam.codomain < 0 || static_cast<std::size_t>(fam.codomain) >= cat.object_count())
        fail(ErrorKind::structural, "covering family on unknown object");
      if (fam.members.empty())
        fail(ErrorKind::structural, "empty covering family on " + cat.object_id(fam.codomain));
      for (int f : fam.members)
        if (f < 0 || static_cast<std::size_t>(f) >= cat.morphism_count() || cat.cod(f) != fam.codomain)
          fail(ErrorKind::structural, "covering family on " + cat.object_id(fam.codomain) +
                                          " has a member with the wrong codomain");
      impl->covers[fam.codomain].push_back(std::move(fam));
    }
    for (auto& v : impl->covers) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    if (terminal) {
      impl->designated_terminal = true;
      if (*terminal >= 0 && static_cast<std::size_t>(*terminal) < cat.object_count() && is_terminal(cat, *terminal))
        impl->points = csheaf::points(cat, *terminal);
    } else {
      for (std::size_t t = 0; t < cat.object_count(); ++t)
        if (is_terminal(cat, static_cast<int>(t))) {
          impl->points = csheaf::points(cat, static_cast<int>(t));
          break;
        }
    }
    impl->category = std::move(cat);
    Site s;
    s.impl_ = std::move(impl);
    return s;
  }

  static Site from_data(const SiteData& data, const Limits& limits = {}) {
    FinCategory cat = FinCategory::build(data.category, limits);
    std::vector<CoveringFamily> fams;
    ValidationReport report;
    for (const auto& [obj, list] : data.covers) {
      const int d = cat.find_object(obj);
      if (d < 0) {
        report.structural("unknown-object", {obj}, "cover key");
        continue;
      }
      for (const auto& members : list) {
        CoveringFamily fam{d, {}};
        for (const auto& m : members) {
          const int f = cat.find_morphism(m);
          if (f < 0)
            report.structural("unknown-morphism", {obj, m}, "cover member");
          else if (cat.cod(f) != d)
            report.structural("cover-codomain", {obj, m}, "cover member has another codomain");
          else
            fam.members.push_back(f);
        }
        if (members.empty()) report.structural("empty-cover", {obj});
        fams.push_back(std::move(fam));
      }
    }
    std::optional<int> terminal;
    if (data.terminal) {
      terminal = cat.find_object(*data.terminal);
      if (*terminal < 0) report.structural("unknown-object", {*data.terminal}, "terminal");
    }
    if (!report.ok()) throw Error(ErrorKind::structural, "malformed site", std::move(report));
    return build(std::move(cat), std::move(fams), terminal, data.name, limits);
  }

  const FinCategory& category() const { return impl_->category; }
  const std::string& name() const { return impl_->name; }
  const Limits& limits() const { return impl_->limits; }
  bool designated_terminal() const { return impl_->designated_terminal; }

  bool has_points() const { return impl_->points.has_value(); }
  const PointsData& points() const {
    if (!impl_->points) fail(ErrorKind::no_terminal, "site '" + name() + "' has no terminal object");
    return *impl_->points;
  }
  int terminal() const { return points().terminal; }

  const std::vector<CoveringFamily>& covers(int d) const { return impl_->covers[static_cast<std::size_t>(d)]; }
  const std::vector<std::vector<CoveringFamily>>& all_covers() const { return impl_->covers; }

  const detail::Topology& topology() const {
    std::lock_guard lock(impl_->topology_mutex);
    if (!impl_->topology)
      impl_->topology = std::make_unique<detail::Topology>(
          detail::generate_topology(impl_->category, impl_->covers, impl_->limits));
    return *impl_->topology;
  }

  bool same_as(const Site& other) const {
    if (impl_ == other.impl_) return true;
    if (!impl_ || !other.impl_) return false;
    return impl_->category == other.impl_->category && impl_->covers == other.impl_->covers;
  }

  SiteData data() const {
    SiteData d;
    d.name = name();
    d.category = category().data();
    if (has_points()) d.terminal = category().object_id(terminal());
    for (std::size_t o = 0; o < impl_->covers.size(); ++o)
      for (const auto& fam : impl_->covers[o]) {
        std::vector<std::string> ids;
        for (int f : fam.members) ids.push_back(category().morphism_id(f));
        d.covers[category().object_id(static_cast<int>(o))].push_back(std::move(ids));
      }
    return d;
  }

  explicit operator bool() const { return static_cast<bool>(impl_); }

 private:
  struct Impl {
    std::string name;
    FinCategory category;
    std::vector<std::vector<CoveringFamily>> covers;
    std::optional<PointsData> points;
    bool designated_terminal = false;
    Limits limits;
    mutable std::mutex topology_mutex;
    mutable std::unique_ptr<detail::Topology> topology;
  };
  std::shared_ptr<const Impl> impl_;
};

namespace detail {

inline Bits principal_bits(const FinCategory& cat, const std::vector<std::vector<int>>& pullback_pos, int f) {
  Bits b(cat.into(cat.cod(f)).size());
  for (int p : pullback_pos[static_cast<std::size_t>(f)]) b.set(static_cast<std::size_t>(p));
  return b;
}

inline Bits pullback_bits(const std::vector<int>& pos, const Bits& s) {
  Bits out(pos.size());
  for (std::size_t q = 0; q < pos.size(); ++q)
    if (s.test(static_cast<std::size_t>(pos[q]))) out.set(q);
  return out;
}

inline std::vector<int> bits_to_members(const FinCategory& cat, int d, const Bits& b) {
  std::vector<int> out;
  const auto& into = cat.into(d);
  for (std::size_t p = b.find_first(); p != Bits::npos; p = b.find_next(p)) out.push_back(into[p]);
  return out;
}

inline Topology generate_topology(const FinCategory& cat, const std::vector<std::vector<CoveringFamily>>& covers,
                                  const Limits& limits) {
  Topology t;
  const std::size_t n = cat.object_count();
  t.pullback_pos.resize(cat.morphism_count());
  for (std::size_t f = 0; f < cat.morphism_count(); ++f) {
    const int fi = static_cast<int>(f);
    for (int g : cat.into(cat.dom(fi))) {
      const int fg = cat.compose(fi, g);
      soundness_check(fg >= 0, "topology: composition table is not total");
      t.pullback_pos[f].push_back(cat.into_position(fg));
    }
  }

  t.objects.resize(n);
  for (std::size_t d = 0; d < n; ++d) {
    const int di = static_cast<int>(d);
    const std::size_t width = cat.into(di).size();
    std::vector<Bits> principals;
    for (int f : cat.into(di)) principals.push_back(principal_bits(cat, t.pullback_pos, f));
    std::sort(principals.begin(), principals.end());
    principals.erase(std::unique(principals.begin(), principals.end()), principals.end());

    std::map<Bits, int> seen;
    std::vector<Bits> queue{Bits(width)};
    seen.emplace(queue.front(), 0);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      for (const auto& p : principals) {
        if (p.is_subset_of(queue[head])) continue;
        Bits u = queue[head] | p;
        if (seen.emplace(u, 0).second) {
          if (seen.size() > limits.max_sieves)
            fail(ErrorKind::sieve_explosion, "more than " + std::to_string(limits.max_sieves) + " sieves on object " +
                                                 cat.object_id(di));
          queue.push_back(std::move(u));
        }
      }
    }
    auto& os = t.objects[d];
    std::vector<std::pair<std::vector<int>, Bits>> keyed;
    for (auto& b : queue) keyed.emplace_back(bits_to_members(cat, di, b), std::move(b));
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [members, b] : keyed) {
      os.index.emplace(b, static_cast<int>(os.all.size()));
      os.all.push_back(std::move(b));
    }
    os.covering.assign(os.all.size(), 0);

    Bits maximal(width);
    maximal.set();
    os.covering[static_cast<std::size_t>(os.index.at(maximal))] = 1;
    for (const auto& fam : covers[d]) {
      Bits fb(width);
      for (int f : fam.members) fb.set(static_cast<std::size_t>(cat.into_position(f)));
      for (std::size_t s = 0; s < os.all.size(); ++s)
        if (fb.is_subset_of(os.all[s])) os.covering[s] = 1;
    }
  }

  // Saturate: pullback stability and transitivity, until nothing changes.
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t d = 0; d < n; ++d) {
      const int di = static_cast<int>(d);
      for (std::size_t r = 0; r < t.objects[d].all.size(); ++r) {
        if (!t.objects[d].covering[r]) continue;
        for (int f : cat.into(di)) {
          auto& target = t.objects[static_cast<std::size_t>(cat.dom(f))];
          const int idx = target.index.at(pullback_bits(t.pullback_pos[static_cast<std::size_t>(f)], t.objects[d].all[r]));
          if (!target.covering[static_cast<std::size_t>(idx)]) {
            target.covering[static_cast<std::size_t>(idx)] = 1;
            changed = true;
          }
        }
      }
    }
    for (std::size_t d = 0; d < n; ++d) {
      const int di = static_cast<int>(d);
      auto& os = t.objects[d];
      for (std::size_t s = 0; s < os.all.size(); ++s) {
        if (os.covering[s]) continue;
        for (std::size_t r = 0; r < os.all.size(); ++r) {
          if (!os.covering[r]) continue;
          bool all_cover = true;
          for (std::size_t p = os.all[r].find_first(); p != Bits::npos && all_cover; p = os.all[r].find_next(p)) {
            const int f = cat.into(di)[p];
            const auto& src = t.objects[static_cast<std::size_t>(cat.dom(f))];
            const int idx = src.index.at(pullback_bits(t.pullback_pos[static_cast<std::size_t>(f)], os.all[s]));
            all_cover = src.covering[static_cast<std::size_t>(idx)] != 0;
          }
          if (all_cover) {
            os.covering[s] = 1;
            changed = true;
            break;
          }
        }
      }
    }
  }

  for (std::size_t d = 0; d < n; ++d) {
    auto& os = t.objects[d];
    Bits meet(cat.into(static_cast<int>(d)).size());
    meet.set();
    for (std::size_t s = 0; s < os.all.size(); ++s)
      if (os.covering[s]) meet &= os.all[s];
    const int idx = os.index.at(meet);
    soundness_check(os.covering[static_cast<std::size_t>(idx)] != 0,
                    "intersection of covering sieves on " + cat.object_id(static_cast<int>(d)) + " is not covering");
    os.minimal = idx;
  }
  return t;
}

}  // namespace detail

inline Sieve maximal_sieve(const Site& site, int d) { return Sieve{d, site.category().into(d)}; }

inline bool is_sieve(const FinCategory& cat, const Sieve& s) {
  for (int f : s.members) {
    if (cat.cod(f) != s.codomain) return false;
    for (int g : cat.into(cat.dom(f)))
      if (!s.contains(cat.compose(f, g))) return false;
  }
  return true;
}

/// The sieve generated by a family: all composites f_i∘g.
inline Sieve generated_sieve(const FinCategory& cat, const CoveringFamily& fam) {
  Sieve s{fam.codomain, {}};
  for (int f : fam.members)
    for (int g : cat.into(cat.dom(f))) s.members.push_back(cat.compose(f, g));
  std::sort(s.members.begin(), s.members.end());
  s.members.erase(std::unique(s.members.begin(), s.members.end()), s.members.end());
  return s;
}

/// All sieves on d, in canonical order.
inline std::vector<Sieve> all_sieves(const Site& site, int d) {
  std::vector<Sieve> out;
  for (const auto& b : site.topology().objects[static_cast<std::size_t>(d)].all)
    out.push_back({d, detail::bits_to_members(site.category(), d, b)});
  return out;
}

/// Covering sieves on d of the Grothendieck topology generated by the
/// coverage, in canonical order.
inline std::vector<Sieve> covering_sieves(const Site& site, int d) {
  const auto& os = site.topology().objects[static_cast<std::size_t>(d)];
  std::vector<Sieve> out;
  for (std::size_t s = 0; s < os.all.size(); ++s)
    if (os.covering[s]) out.push_back({d, detail::bits_to_members(site.category(), d, os.all[s])});
  return out;
}

/// Intersection of all covering sieves on d; covering because the topology is
/// closed under finite intersections.
inline Sieve minimal_covering_sieve(const Site& site, int d) {
  const auto& os = site.topology().objects[static_cast<std::size_t>(d)];
  return {d, detail::bits_to_members(site.category(), d, os.all[static_cast<std::size_t>(os.minimal)])};
}

inline bool is_covering(const Site& site, const Sieve& s) {
  const auto& cat = site.category();
  const auto& os = site.topology().objects[static_cast<std::size_t>(s.codomain)];
  detail::Bits b(cat.into(s.codomain).size());
  for (int f : s.members) b.set(static_cast<std::size_t>(cat.into_position(f)));
  auto it = os.index.find(b);
  if (it == os.index.end()) fail(ErrorKind::structural, "is_covering: member set is not a sieve");
  return os.covering[static_cast<std::size_t>(it->second)] != 0;
}

/// f*R = { g : f∘g ∈ R } for f: C → D and R a sieve on D.
inline Sieve pullback_sieve(const Site& site, int f, const Sieve& r) {
  const auto& cat = site.category();
  if (cat.cod(f) != r.codomain)
    fail(ErrorKind::shape_mismatch, "pullback_sieve: " + cat.morphism_id(f) + " does not land in " +
                                        cat.object_id(r.codomain));
  Sieve out{cat.dom(f), {}};
  for (int g : cat.into(cat.dom(f)))
    if (r.contains(cat.compose(f, g))) out.members.push_back(g);
  soundness_check(is_sieve(cat, out), "pullback_sieve produced a set that is not precomposition-closed");
  return out;
}

inline Sieve intersect(const Sieve& a, const Sieve& b) {
  Sieve out{a.codomain, {}};
  std::set_intersection(a.members.begin(), a.members.end(), b.members.begin(), b.members.end(),
                        std::back_inserter(out.members));
  return out;
}

/// Two sites on the same category generate the same topology.
inline bool same_topology(const Site& a, const Site& b) {
  if (!(a.category() == b.category())) return false;
  for (std::size_t d = 0; d < a.category().object_count(); ++d)
    if (covering_sieves(a, static_cast<int>(d)) != covering_sieves(b, static_cast<int>(d))) return false;
  return true;
}

}  // namespace csheaf
