#include <catch_amalgamated.hpp>

#include <set>

#include "fixtures.hpp"

using namespace csheaf;

namespace {

// Oracle: brute-force generated topology over explicit member sets.
std::vector<std::set<int>> oracle_covering(const Site& site, int d0) {
  const auto& cat = site.category();
  const std::size_t n = cat.object_count();
  std::vector<std::vector<std::set<int>>> sieves(n);
  for (std::size_t d = 0; d < n; ++d) {
    const auto& into = cat.into(static_cast<int>(d));
    for (std::size_t mask = 0; mask < (std::size_t{1} << into.size()); ++mask) {
      std::set<int> s;
      for (std::size_t i = 0; i < into.size(); ++i)
        if (mask >> i & 1) s.insert(into[i]);
      bool closed = true;
      for (int f : s)
        for (int g : cat.into(cat.dom(f))) closed = closed && s.contains(cat.compose(f, g));
      if (closed) sieves[d].push_back(s);
    }
  }
  std::vector<std::set<std::set<int>>> cov(n);
  for (std::size_t d = 0; d < n; ++d)
    for (const auto& s : sieves[d]) {
      if (s.size() == cat.into(static_cast<int>(d)).size()) cov[d].insert(s);
      for (const auto& fam : site.covers(static_cast<int>(d))) {
        bool all = true;
        for (int f : fam.members) all = all && s.contains(f);
        if (all) cov[d].insert(s);
      }
    }
  auto pull = [&](int f, const std::set<int>& r) {
    std::set<int> out;
    for (int g : cat.into(cat.dom(f)))
      if (r.contains(cat.compose(f, g))) out.insert(g);
    return out;
  };
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t d = 0; d < n; ++d)
      for (const auto& s : sieves[d]) {
        if (cov[d].contains(s)) continue;
        bool add = false;
        for (const auto& r : std::set<std::set<int>>(cov[d])) {
          bool all = true;
          for (int f : r) all = all && cov[cat.dom(f)].contains(pull(f, s));
          if (all) add = true;
        }
        if (add) {
          cov[d].insert(s);
          changed = true;
        }
      }
    for (std::size_t d = 0; d < n; ++d)
      for (const auto& r : std::set<std::set<int>>(cov[d]))
        for (int f : cat.into(static_cast<int>(d)))
          if (cov[cat.dom(f)].insert(pull(f, r)).second) changed = true;
  }
  return {cov[d0].begin(), cov[d0].end()};
}

std::set<std::set<int>> as_sets(const std::vector<Sieve>& v) {
  std::set<std::set<int>> out;
  for (const auto& s : v) out.insert(std::set<int>(s.members.begin(), s.members.end()));
  return out;
}

Site with_covers(const Site& base, std::vector<CoveringFamily> covers, const std::string& name) {
  return Site::build(base.category(), std::move(covers), base.category().find_object("1"), name);
}

}  // namespace

TEST_CASE("function sites pass all four certificates") {
  for (const auto& site : {fx::F2(), fx::F3(), fx::F2sep(), build_site_F(1), build_site_F_sep(3)}) {
    auto c = validate_concrete_site(site);
    INFO(site.name());
    CHECK(c.ok());
    CHECK(c.coverage_axiom.pass);
    CHECK(c.faithful.pass);
    CHECK(c.jointly_surjective.pass);
    CHECK(c.subcanonical.pass);
  }
}

TEST_CASE("a cover by one constant is not jointly surjective") {
  const auto& s = fx::F2();
  auto covers = s.all_covers();
  std::vector<CoveringFamily> flat;
  for (const auto& v : covers) flat.insert(flat.end(), v.begin(), v.end());
  flat.push_back({fx::obj(s, "2"), {fx::mor(s, "1>2:0")}});
  auto c = validate_concrete_site(with_covers(s, flat, "bad"));
  CHECK_FALSE(c.jointly_surjective.pass);
  CHECK(c.jointly_surjective.witness == std::vector<std::string>{"2", "{1>2:0}", "1>2:1"});
  CHECK(c.faithful.pass);
}

TEST_CASE("covering 2 by its points without covering 1 breaks the coverage axiom") {
  const auto& s = fx::F2();
  auto c = validate_concrete_site(with_covers(s, {{fx::obj(s, "2"), {fx::mor(s, "1>2:0"), fx::mor(s, "1>2:1")}}}, "bad"));
  CHECK_FALSE(c.coverage_axiom.pass);
  CHECK(c.coverage_axiom.witness == std::vector<std::string>{"2", "{1>2:0,1>2:1}", "1>2:0"});
}

TEST_CASE("a concrete site that is not subcanonical") {
  auto c = validate_concrete_site(fx::monotone_site());
  CHECK(c.coverage_axiom.pass);
  CHECK(c.faithful.pass);
  CHECK(c.jointly_surjective.pass);
  CHECK_FALSE(c.subcanonical.pass);
  CHECK(c.subcanonical.witness == std::vector<std::string>{"2", "NoGluing", "{a,b}"});
  try {
    representable_sheaf(fx::monotone_site(), 1);
    FAIL("expected SubcanonicityViolation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::subcanonicity_violation);
  }
}

TEST_CASE("covering sieves match a brute-force saturation") {
  for (const auto& site : {fx::F2(), fx::F2sep(), fx::monotone_site()})
    for (std::size_t d = 0; d < site.category().object_count(); ++d) {
      auto oracle = oracle_covering(site, static_cast<int>(d));
      CHECK(as_sets(covering_sieves(site, static_cast<int>(d))) ==
            std::set<std::set<int>>(oracle.begin(), oracle.end()));
    }
}

TEST_CASE("covering sieves on the fixtures") {
  const auto& f2 = fx::F2();
  CHECK(covering_sieves(f2, fx::obj(f2, "1")) == std::vector<Sieve>{maximal_sieve(f2, fx::obj(f2, "1"))});
  CHECK(covering_sieves(f2, fx::obj(f2, "2")) == std::vector<Sieve>{maximal_sieve(f2, fx::obj(f2, "2"))});
  const auto& sep = fx::F2sep();
  const int two = fx::obj(sep, "2");
  auto cs = covering_sieves(sep, two);
  REQUIRE(cs.size() == 2);
  auto singles = generated_sieve(sep.category(), {two, {fx::mor(sep, "1>2:0"), fx::mor(sep, "1>2:1")}});
  CHECK(std::find(cs.begin(), cs.end(), singles) != cs.end());
  CHECK(std::find(cs.begin(), cs.end(), maximal_sieve(sep, two)) != cs.end());
  CHECK(minimal_covering_sieve(sep, two) == singles);
  // singles = the four maps that factor through a point
  CHECK(singles.members.size() == 4);
}

TEST_CASE("sieve pullback") {
  const auto& sep = fx::F2sep();
  const int two = fx::obj(sep, "2");
  auto singles = minimal_covering_sieve(sep, two);
  CHECK(pullback_sieve(sep, sep.category().identity(two), singles) == singles);
  auto c = pullback_sieve(sep, fx::mor(sep, "1>2:0"), singles);
  CHECK(c == maximal_sieve(sep, fx::obj(sep, "1")));
  for (int f : sep.category().into(two))
    CHECK(pullback_sieve(sep, f, maximal_sieve(sep, two)) == maximal_sieve(sep, sep.category().dom(f)));
  CHECK_THROWS_AS(pullback_sieve(sep, fx::mor(sep, "2>1:00"), singles), Error);
}

TEST_CASE("topology axioms hold on every fixture") {
  for (const auto& site : {fx::F2(), fx::F3(), fx::F2sep(), build_site_F_sep(3), fx::monotone_site()}) {
    const auto& cat = site.category();
    for (std::size_t d = 0; d < cat.object_count(); ++d) {
      const int di = static_cast<int>(d);
      auto cov = covering_sieves(site, di);
      CHECK(is_covering(site, maximal_sieve(site, di)));
      for (const auto& fam : site.covers(di)) {
        auto gen = generated_sieve(cat, fam);
        for (const auto& s : all_sieves(site, di))
          if (std::includes(s.members.begin(), s.members.end(), gen.members.begin(), gen.members.end()))
            CHECK(is_covering(site, s));
      }
      for (const auto& r : cov) {
        CHECK(is_sieve(cat, r));
        for (int f : cat.into(di)) CHECK(is_covering(site, pullback_sieve(site, f, r)));
        for (const auto& s : cov) CHECK(is_covering(site, intersect(r, s)));
      }
    }
  }
}

TEST_CASE("coverages with the same generated topology") {
  const auto& f2 = fx::F2();
  std::vector<CoveringFamily> flat;
  for (const auto& v : f2.all_covers()) flat.insert(flat.end(), v.begin(), v.end());
  flat.push_back({fx::obj(f2, "2"), {fx::mor(f2, "2>2:10")}});  // the swap alone generates the maximal sieve
  CHECK(same_topology(f2, with_covers(f2, flat, "swap")));
  CHECK_FALSE(same_topology(f2, fx::F2sep()));
}

TEST_CASE("sieve explosion guard") {
  Limits tiny;
  tiny.max_sieves = 3;
  auto site = Site::build(fx::F2().category(), {}, std::nullopt, "tiny", tiny);
  try {
    covering_sieves(site, 1);
    FAIL("expected SieveExplosion");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::sieve_explosion);
  }
}

TEST_CASE("representables") {
  const auto& f2 = fx::F2();
  auto r1 = representable_sheaf(f2, fx::obj(f2, "1"));
  CHECK(r1.size(fx::obj(f2, "1")) == 1);
  CHECK(r1.size(fx::obj(f2, "2")) == 1);
  auto r2 = representable_sheaf(f2, fx::obj(f2, "2"));
  CHECK(r2.size(fx::obj(f2, "1")) == 2);
  CHECK(r2.size(fx::obj(f2, "2")) == 4);
  for (const auto& site : {fx::F2(), fx::F3(), fx::F2sep()})
    for (std::size_t d = 0; d < site.category().object_count(); ++d) {
      auto x = representable_sheaf(site, static_cast<int>(d));
      CHECK(is_sheaf(x).sheaf);
      CHECK(check_presheaf(x).ok());
      // underlying set is u(D): plot ids over 1 are exactly hom(1, D)
      std::vector<std::string> u;
      for (int p : site.points().sets[d]) u.push_back(site.category().morphism_id(p));
      CHECK(x.plots(site.terminal()) == u);
    }
}
