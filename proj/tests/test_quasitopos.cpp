#include <catch_amalgamated.hpp>

#include "fixtures.hpp"

using namespace csheaf;

namespace {

Presheaf point_sheaf(const Site& s) { return terminal_object(s).cone.apex; }

std::vector<std::vector<bool>> all_subsets(int n) {
  std::vector<std::vector<bool>> out;
  for (int mask = 0; mask < (1 << n); ++mask) {
    std::vector<bool> keep;
    for (int i = 0; i < n; ++i) keep.push_back(mask >> i & 1);
    out.push_back(keep);
  }
  return out;
}

// Maps over the base: p_Y ∘ f = p_Z ∘ first leg.
std::vector<SheafMap> maps_over(const NamedResult& zx, const SpaceOverBase& z, const SpaceOverBase& y) {
  std::vector<SheafMap> out;
  auto base_of = compose(z.projection, zx.cone.legs[0]);
  for (auto& f : all_maps(zx.cone.apex, y.total))
    if (compose(y.projection, f).components == base_of.components) out.push_back(std::move(f));
  return out;
}

std::vector<SheafMap> maps_over(const SpaceOverBase& z, const Exponential& e) {
  std::vector<SheafMap> out;
  for (auto& g : all_maps(z.total, e.space.total))
    if (compose(e.space.projection, g).components == z.projection.components) out.push_back(std::move(g));
  return out;
}

SpaceOverBase over(const Presheaf& total, const Presheaf& base, const std::vector<int>& fn) {
  auto p = map_from_point_function(total, base, fn);
  REQUIRE(p.has_value());
  return {total, base, *p};
}

}  // namespace

TEST_CASE("omega") {
  auto o2 = omega(fx::F2());
  CHECK(o2.sheaf.size(fx::obj(fx::F2(), "1")) == 2);
  CHECK(o2.sheaf.size(fx::obj(fx::F2(), "2")) == 4);
  auto o3 = omega(fx::F3());
  for (int k = 1; k <= 3; ++k) CHECK(o3.sheaf.size(fx::obj(fx::F3(), std::to_string(k))) == (1 << k));
  for (const auto* s : {&fx::F2(), &fx::F3(), &fx::F2sep()}) {
    auto o = omega(*s);
    CHECK(o.sheaf.plots(s->terminal()) == std::vector<std::string>{"0", "1"});
    CHECK(is_sheaf(o.sheaf).sheaf);
    CHECK(is_natural(o.top));
    for (std::size_t d = 0; d < s->category().object_count(); ++d) {
      auto u = plot_underlying(o.sheaf, static_cast<int>(d), o.top.components[d][0]);
      CHECK(std::all_of(u.begin(), u.end(), [](int v) { return v == 1; }));
    }
  }
  CHECK(omega(fx::monotone_site()).sheaf.size(0) == 2);
}

TEST_CASE("subspaces") {
  const auto& f2 = fx::F2();
  auto e = complex_to_sheaf(fx::edge(), f2);
  auto all = subspace_structure(e, {true, true});
  CHECK(is_isomorphism(all.inclusion));
  auto none = subspace_structure(e, {false, false});
  for (std::size_t d = 0; d < 2; ++d) CHECK(none.space.size(static_cast<int>(d)) == 0);
  auto a = subspace_structure(e, {true, false});
  CHECK(a.space.size(fx::obj(f2, "2")) == 1);
  CHECK(a.space.plots(f2.terminal()) == std::vector<std::string>{"a"});
  CHECK(is_strong_mono(a.inclusion).strong);
  CHECK_THROWS_AS(subspace_structure(e, {true}), Error);
}

TEST_CASE("quotients") {
  const auto& f2 = fx::F2();
  auto e = complex_to_sheaf(fx::edge(), f2);
  auto same = quotient_structure(e, {0, 1});
  CHECK(is_isomorphism(same.projection));
  auto one = quotient_structure(e, {0, 0});
  CHECK(one.space.size(f2.terminal()) == 1);
  CHECK(find_isomorphism(one.space, complex_to_sheaf(fx::vertex_complex(), f2)).has_value());
  auto pt = point_sheaf(f2);
  auto coeq = coequalizer(*map_from_point_function(pt, e, {0}), *map_from_point_function(pt, e, {1}));
  CHECK(find_isomorphism(one.space, coeq.cone.apex).has_value());

  auto t = complex_to_sheaf(fx::triangle_boundary(), f2);
  auto total = quotient_structure(t, {7, 7, 7});
  CHECK(total.space.size(f2.terminal()) == 1);
  for (std::size_t d = 0; d < 2; ++d) CHECK(total.space.size(static_cast<int>(d)) == 1);

  // on F2sep the image presheaf needs gluing: collapsing b~c in the
  // indiscrete 3-point space leaves the indiscrete 2-point space
  auto ind = fx::indiscrete(fx::F2sep(), {"a", "b", "c"});
  auto q = quotient_structure(ind, {0, 1, 1});
  CHECK(find_isomorphism(q.space, fx::indiscrete(fx::F2sep(), {"a", "b"})).has_value());
  CHECK(is_strong_epi(q.projection).strong);
}

TEST_CASE("strong monos and epis on the fixtures") {
  const auto& f2 = fx::F2();
  auto e = complex_to_sheaf(fx::edge(), f2);
  auto p2 = complex_to_sheaf(fx::two_points(), f2);
  auto v = complex_to_sheaf(fx::vertex_complex(), f2);
  auto cmp = *map_from_point_function(p2, e, {0, 1});
  auto c = check_map(cmp);
  CHECK((c.mono && c.epi));
  auto sm = is_strong_mono(cmp);
  CHECK_FALSE(sm.strong);
  CHECK(sm.witness == std::vector<std::string>{"2", "(a,b)"});
  // the witness really has no preimage but lands in the image
  const int two = fx::obj(f2, "2");
  const int w = e.find_plot(two, sm.witness[1]);
  CHECK(std::find(cmp.components[two].begin(), cmp.components[two].end(), w) == cmp.components[two].end());

  auto se = is_strong_epi(cmp);
  CHECK_FALSE(se.strong);
  CHECK(se.witness == std::vector<std::string>{"2", "(a,b)"});

  CHECK(is_strong_mono(identity_map(e)).strong);
  CHECK(is_strong_epi(identity_map(e)).strong);
  auto collapse = *map_from_point_function(e, v, {0, 0});
  CHECK(is_strong_epi(collapse).strong);
  try {
    is_strong_mono(collapse);
    FAIL("expected NotMono");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::not_mono);
  }
  try {
    is_strong_epi(*map_from_point_function(v, e, {0}));
    FAIL("expected NotEpi");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::not_epi);
  }
}

TEST_CASE("strong monos are subspaces and strong epis are quotients") {
  const auto& f2 = fx::F2();
  std::vector<Presheaf> spaces{complex_to_sheaf(fx::edge(), f2), complex_to_sheaf(fx::two_points(), f2),
                               complex_to_sheaf(fx::vertex_complex(), f2),
                               complex_to_sheaf(fx::triangle_boundary(), f2), fx::indiscrete(f2, {"x", "y"})};
  std::size_t strong_monos = 0, strong_epis = 0;
  for (const auto& x : spaces)
    for (const auto& y : spaces)
      for (const auto& m : all_maps(x, y)) {
        auto c = check_map(m);
        const int t = f2.terminal();
        if (c.mono) {
          std::vector<bool> keep(static_cast<std::size_t>(y.size(t)), false);
          for (int v : m.underlying()) keep[v] = true;
          auto s = subspace_structure(y, keep);
          auto iso = detail::iso_over(m, s.space, s.inclusion);
          const bool strong = is_strong_mono(m).strong;
          CHECK(iso.has_value() == strong);
          strong_monos += strong;
        }
        if (c.epi) {
          auto q = quotient_structure(x, m.underlying());
          // m factors as iso ∘ projection exactly when it is strong
          std::vector<int> fn(static_cast<std::size_t>(q.space.size(t)));
          for (int p = 0; p < x.size(t); ++p) fn[q.projection.underlying()[p]] = m.underlying()[p];
          auto iso = map_from_point_function(q.space, y, fn);
          const bool strong = is_strong_epi(m).strong;
          CHECK((iso && is_isomorphism(*iso)) == strong);
          strong_epis += strong;
        }
      }
  CHECK(strong_monos > 10);
  CHECK(strong_epis > 10);
}

TEST_CASE("the classifier") {
  const auto& f2 = fx::F2();
  auto e = complex_to_sheaf(fx::edge(), f2);
  auto a = subspace_structure(e, {true, false});
  auto cls = characteristic_map(a.inclusion);
  CHECK(cls.chi.underlying() == std::vector<int>{1, 0});
  CHECK(cls.qualifying == 1);
  CHECK(characteristic_map(identity_map(e)).chi.underlying() == std::vector<int>{1, 1});
  CHECK(characteristic_map(subspace_structure(e, {false, false}).inclusion).chi.underlying() == std::vector<int>{0, 0});

  for (const auto& k : {fx::edge(), fx::triangle_boundary()}) {
    auto x = complex_to_sheaf(k, f2);
    for (const auto& keep : all_subsets(x.size(f2.terminal()))) {
      auto s = subspace_structure(x, keep);
      auto c = characteristic_map(s.inclusion);
      CHECK(c.qualifying == 1);
      CHECK(is_isomorphism(c.comparison));
      CHECK(c.pullback.cross_checked);
    }
  }

  auto p2 = complex_to_sheaf(fx::two_points(), f2);
  try {
    characteristic_map(*map_from_point_function(p2, e, {0, 1}));
    FAIL("expected NotStrongMono");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::not_strong_mono);
  }
}

TEST_CASE("fibers") {
  const auto& f2 = fx::F2();
  auto e = complex_to_sheaf(fx::edge(), f2);
  auto over_pt = over_terminal(e);
  CHECK(is_isomorphism(fiber(over_pt, 0).inclusion));
  SpaceOverBase self{e, e, identity_map(e)};
  for (int b = 0; b < 2; ++b) CHECK(fiber(self, b).space.size(f2.terminal()) == 1);
  auto p2 = complex_to_sheaf(fx::two_points(), f2);
  auto p2e = over(p2, e, {0, 1});
  for (const auto& b : {"a", "b"})
    CHECK(find_isomorphism(fiber(p2e, b).space, complex_to_sheaf(fx::vertex_complex(), f2)).has_value());
  CHECK_THROWS_AS(fiber(p2e, "z"), Error);
}

TEST_CASE("exponentials over the terminal space") {
  const auto& f2 = fx::F2();
  auto v = over_terminal(complex_to_sheaf(fx::vertex_complex(), f2));
  auto vv = exponential_over_base(v, v);
  for (std::size_t d = 0; d < 2; ++d) CHECK(vv.space.total.size(static_cast<int>(d)) == 1);

  auto e = over_terminal(complex_to_sheaf(fx::edge(), f2));
  auto ee = exponential_over_base(e, e);
  CHECK(ee.space.total.size(f2.terminal()) == 4);
  CHECK(static_cast<std::size_t>(ee.space.total.size(f2.terminal())) == count_maps(e.total, e.total));
  CHECK(ee.space.total.plots(f2.terminal()) ==
        std::vector<std::string>{"*{a:a,b:a}", "*{a:a,b:b}", "*{a:b,b:a}", "*{a:b,b:b}"});

  // plots over D are the maps y(D) × X → Y
  for (const auto& [x, y] : std::vector<std::pair<SpaceOverBase, SpaceOverBase>>{
           {e, e}, {over_terminal(complex_to_sheaf(fx::two_points(), f2)), e},
           {e, over_terminal(complex_to_sheaf(fx::two_points(), f2))}}) {
    auto ex = exponential_over_base(x, y);
    for (std::size_t d = 0; d < 2; ++d) {
      const int di = static_cast<int>(d);
      auto prod = product(f2, {representable_sheaf(f2, di), x.total});
      std::set<std::vector<int>> from_maps;
      for (const auto& g : all_maps(prod.cone.apex, y.total)) {
        std::vector<int> fn(f2.points().size(di));
        for (std::size_t k = 0; k < fn.size(); ++k) {
          std::vector<int> m(static_cast<std::size_t>(x.total.size(f2.terminal())), -1);
          for (int q = 0; q < prod.cone.apex.size(f2.terminal()); ++q) {
            const int pd = f2.category().morphism_index(
                representable_sheaf(f2, di).plot_id(f2.terminal(), prod.cone.legs[0].underlying()[q]));
            if (f2.points().position[pd] == static_cast<int>(k)) m[prod.cone.legs[1].underlying()[q]] = g.underlying()[q];
          }
          int found = -1;
          for (std::size_t p = 0; p < ex.points.size(); ++p)
            if (ex.points[p].map == m) found = static_cast<int>(p);
          REQUIRE(found >= 0);
          fn[k] = found;
        }
        from_maps.insert(fn);
      }
      auto plots = underlying_functions(ex.space.total)[d];
      CHECK(from_maps == std::set<std::vector<int>>(plots.begin(), plots.end()));
    }
  }
}

TEST_CASE("currying E x E -> E") {
  const auto& f2 = fx::F2();
  auto e = over_terminal(complex_to_sheaf(fx::edge(), f2));
  auto ee = exponential_over_base(e, e);
  auto zx = fiber_product(e, e);
  auto flat = all_maps(zx.cone.apex, e.total);
  auto curried = all_maps(e.total, ee.space.total);
  CHECK(flat.size() == 16);
  CHECK(curried.size() == 16);
  std::set<std::vector<std::vector<int>>> images;
  for (const auto& f : flat) {
    auto g = curry(e, e, e, ee, zx, f);
    images.insert(g.components);
    CHECK(uncurry(e, ee, zx, g) == f);
  }
  CHECK(images.size() == 16);
  for (const auto& g : curried) CHECK(curry(e, e, e, ee, zx, uncurry(e, ee, zx, g)) == g);

  // naturality in Z: curry(f ∘ (g × X)) = curry(f) ∘ g
  const int t = f2.terminal();
  for (const auto& g : all_maps(e.total, e.total)) {
    std::vector<int> gx;
    for (int q = 0; q < zx.cone.apex.size(t); ++q) {
      const int z = g.underlying()[zx.cone.legs[0].underlying()[q]];
      const int x = zx.cone.legs[1].underlying()[q];
      for (int r = 0; r < zx.cone.apex.size(t); ++r)
        if (zx.cone.legs[0].underlying()[r] == z && zx.cone.legs[1].underlying()[r] == x) gx.push_back(r);
    }
    auto gxm = map_from_point_function(zx.cone.apex, zx.cone.apex, gx);
    REQUIRE(gxm);
    for (const auto& f : flat)
      CHECK(curry(e, e, e, ee, zx, compose(f, *gxm)).components == compose(curry(e, e, e, ee, zx, f), g).components);
  }
  // naturality in Y: curry(h ∘ f)(z) = h ∘ curry(f)(z)
  for (const auto& h : all_maps(e.total, e.total))
    for (const auto& f : flat) {
      auto lhs = curry(e, e, e, ee, zx, compose(h, f));
      auto rhs = curry(e, e, e, ee, zx, f);
      for (int z = 0; z < e.total.size(t); ++z) {
        auto m = ee.points[rhs.underlying()[z]].map;
        for (auto& v : m) v = h.underlying()[v];
        CHECK(ee.points[lhs.underlying()[z]].map == m);
      }
    }
}

TEST_CASE("empty fibers curry to the empty map") {
  const auto& f2 = fx::F2();
  auto p2 = complex_to_sheaf(fx::two_points(), f2);
  auto v = complex_to_sheaf(fx::vertex_complex(), f2);
  auto base = over(p2, p2, {0, 1});
  auto x = over(v, p2, {0});
  auto ex = exponential_over_base(x, x);
  CHECK(ex.space.total.plots(f2.terminal()) == std::vector<std::string>{"a{a:a}", "b{}"});
  auto zx = fiber_product(base, x);
  auto fs = maps_over(zx, base, x);
  REQUIRE(fs.size() == 1);
  auto g = curry(base, x, x, ex, zx, fs[0]);
  CHECK(ex.space.total.plot_id(f2.terminal(), g.underlying()[1]) == "b{}");
  CHECK(uncurry(x, ex, zx, g) == fs[0]);
}

TEST_CASE("currying is a bijection on seeded triples") {
  Rng rng(31337);
  const auto& f2 = fx::F2();
  const int t = f2.terminal();
  int done = 0, empty_fiber = 0;
  for (int trial = 0; done < 20 && trial < 400; ++trial) {
    auto b = random_concrete_presheaf(f2, rng, 2, 1);
    auto pick = [&](const Presheaf& total) -> std::optional<SpaceOverBase> {
      auto ms = all_maps(total, b);
      if (ms.empty()) return std::nullopt;
      return SpaceOverBase{total, b, ms[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(ms.size()) - 1))]};
    };
    auto z = pick(random_concrete_presheaf(f2, rng, 2, 1));
    auto x = pick(random_concrete_presheaf(f2, rng, 2, 1));
    auto y = pick(random_concrete_presheaf(f2, rng, 2, 1));
    if (!z || !x || !y) continue;
    auto ex = exponential_over_base(*x, *y);
    CHECK(is_sheaf(ex.space.total).sheaf);
    auto zx = fiber_product(*z, *x);
    auto flat = maps_over(zx, *z, *y);
    auto curried = maps_over(*z, ex);
    CHECK(flat.size() == curried.size());
    for (const auto& f : flat) CHECK(uncurry(*y, ex, zx, curry(*z, *x, *y, ex, zx, f)) == f);
    for (const auto& g : curried) CHECK(curry(*z, *x, *y, ex, zx, uncurry(*y, ex, zx, g)) == g);
    for (int p = 0; p < z->total.size(t); ++p) {
      const int bp = z->projection.underlying()[p];
      const auto& xs = x->projection.underlying();
      if (b.size(t) > 1 && std::find(xs.begin(), xs.end(), bp) == xs.end()) ++empty_fiber;
    }
    ++done;
  }
  CHECK(done == 20);
  CHECK(empty_fiber > 0);
}
