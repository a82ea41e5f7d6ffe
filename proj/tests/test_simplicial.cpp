#include <catch_amalgamated.hpp>

#include "fixtures.hpp"

using namespace csheaf;

namespace {

std::size_t power(std::size_t b, std::size_t e) {
  std::size_t r = 1;
  while (e--) r *= b;
  return r;
}

// surjections from an m-set onto a k-set, by inclusion-exclusion
long long surjections(int m, int k) {
  long long total = 0, binom = 1;
  for (int j = 0; j <= k; ++j) {
    const long long term = binom * static_cast<long long>(power(static_cast<std::size_t>(k - j), static_cast<std::size_t>(m)));
    total += (j % 2 ? -term : term);
    binom = binom * (k - j) / (j + 1);
  }
  return total;
}

// functions from an m-set with image exactly some simplex
long long image_in_k(const SimplicialComplex& k, int m) {
  long long n = 0;
  for (const auto& s : k.simplices) n += surjections(m, static_cast<int>(s.size()));
  return n;
}

}  // namespace

TEST_CASE("function sites") {
  auto f1 = build_site_F(1);
  CHECK(f1.category().object_count() == 1);
  CHECK(f1.category().morphism_count() == 1);
  for (int n = 1; n <= 4; ++n) {
    auto s = build_site_F(n);
    std::size_t total = 0;
    for (int a = 1; a <= n; ++a)
      for (int b = 1; b <= n; ++b) total += power(static_cast<std::size_t>(b), static_cast<std::size_t>(a));
    CHECK(s.category().morphism_count() == total);
    CHECK(validate_concrete_site(s).ok());
    for (int k = 1; k <= n; ++k) {
      const int d = s.category().object(std::to_string(k));
      REQUIRE(s.covers(d).size() == 1);
      std::size_t injections = 0;
      for (int m = 1; m <= k; ++m) {
        std::size_t c = 1;
        for (int i = 0; i < m; ++i) c *= static_cast<std::size_t>(k - i);
        injections += c;
      }
      CHECK(s.covers(d)[0].members.size() == injections);
    }
  }
  auto f3 = build_site_F(3);
  CHECK(f3.category().object_count() == 3);
  CHECK(f3.category().hom(fx::obj(f3, "3"), fx::obj(f3, "3")).size() == 27);
  CHECK(fx::F2().category().morphism_count() == 8);
  CHECK_THROWS_AS(build_site_F(0), Error);
  try {
    build_site_F(5);
    FAIL("expected a size bound");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::size_bound);
  }
}

TEST_CASE("every presheaf on a function site is a sheaf") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) CHECK(is_sheaf(random_presheaf(fx::F2(), rng)).sheaf);
  for (int trial = 0; trial < 20; ++trial) CHECK(is_sheaf(random_presheaf(fx::F3(), rng, 2, 2)).sheaf);
}

TEST_CASE("complex validation") {
  CHECK(validate_complex(fx::edge()).ok());
  CHECK(validate_complex(fx::triangle_boundary()).ok());
  SimplicialComplex lonely{{"a", "b"}, {{"a"}, {"a", "b"}}};
  auto r = validate_complex(lonely);
  REQUIRE(r.count("missing-singleton") == 1);
  CHECK(r.violations.front().witness == std::vector<std::string>{"b"});
  SimplicialComplex open{{"a", "b", "c"}, {{"a"}, {"b"}, {"c"}, {"a", "b", "c"}}};
  CHECK(validate_complex(open).count("not-downward-closed") == 3);
  SimplicialComplex stray{{"a"}, {{"a"}, {"a", "z"}}};
  CHECK(validate_complex(stray).has_structural());
  CHECK_THROWS_AS(complex_to_sheaf(lonely, 2), Error);
}

TEST_CASE("plot counts of complexes") {
  auto e = complex_to_sheaf(fx::edge(), 2);
  CHECK(e.size(fx::obj(e.site(), "1")) == 2);
  CHECK(e.size(fx::obj(e.site(), "2")) == 4);
  CHECK(complex_to_sheaf(fx::two_points(), 2).size(1) == 2);
  auto t = complex_to_sheaf(fx::triangle_boundary(), 3);
  CHECK(t.size(fx::obj(t.site(), "2")) == 9);
  CHECK(t.size(fx::obj(t.site(), "3")) == 21);
  try {
    complex_to_sheaf(fx::triangle_boundary(), 1);
    FAIL("expected a size bound");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::size_bound);
  }

  Rng rng(31);
  const auto& f3 = fx::F3();
  for (int trial = 0; trial < 40; ++trial) {
    auto k = random_complex(rng, 4, 3);
    auto x = complex_to_sheaf(k, f3);
    for (int m = 1; m <= 3; ++m) CHECK(x.size(fx::obj(f3, std::to_string(m))) == image_in_k(k, m));
  }
}

TEST_CASE("sheaf to complex") {
  CHECK(sheaf_to_complex(complex_to_sheaf(fx::edge(), 2)) == fx::edge());
  auto term = terminal_object(fx::F2()).cone.apex;
  CHECK(sheaf_to_complex(term) == fx::vertex_complex("*"));
  auto y = representable(fx::F2(), fx::obj(fx::F2(), "2"));
  SimplicialComplex full{{"1>2:0", "1>2:1"}, {{"1>2:0"}, {"1>2:1"}, {"1>2:0", "1>2:1"}}};
  CHECK(sheaf_to_complex(y) == full);
}

TEST_CASE("round trips") {
  for (const auto& k : {fx::edge(), fx::two_points(), fx::vertex_complex()}) {
    auto r = equivalence_roundtrip(k, fx::F2());
    CHECK(r.complex_equal);
    CHECK(r.isomorphism.has_value());
  }
  auto r = equivalence_roundtrip(fx::triangle_boundary(), fx::F3());
  CHECK(r.complex_equal);
  CHECK(r.isomorphism.has_value());

  Rng rng(404);
  for (int trial = 0; trial < 30; ++trial) {
    auto x = random_concrete_presheaf(fx::F2(), rng);
    auto rt = equivalence_roundtrip(x);
    CHECK(rt.complex_equal);
    REQUIRE(rt.isomorphism.has_value());
    CHECK(is_isomorphism(*rt.isomorphism));
  }
}

TEST_CASE("the equivalence is full and faithful on fixtures") {
  std::vector<std::pair<SimplicialComplex, Presheaf>> spaces;
  for (const auto& k : {fx::edge(), fx::two_points(), fx::triangle_boundary(), fx::vertex_complex()})
    spaces.emplace_back(k, complex_to_sheaf(k, fx::F3()));
  for (const auto& [ka, x] : spaces)
    for (const auto& [kb, y] : spaces) {
      auto maps = all_maps(x, y);
      auto vmaps = complex_maps(ka, kb);
      CHECK(maps.size() == vmaps.size());
      std::set<std::vector<int>> from_maps, from_complex(vmaps.begin(), vmaps.end());
      for (const auto& m : maps) {
        from_maps.insert(m.underlying());
        auto back = map_from_point_function(x, y, m.underlying());
        REQUIRE(back);
        CHECK(*back == m);
      }
      CHECK(from_maps == from_complex);
    }
}
