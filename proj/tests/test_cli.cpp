#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <csheaf/io.hpp>

using csheaf::io::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  json report;
};

// Runs the binary inside the samples directory; stderr is discarded.
Run cli(const std::string& args) {
  const std::string cmd = "cd '" CSHEAF_SAMPLES "' && '" CSHEAF_CLI "' " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  std::string out;
  char buf[4096];
  while (auto n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  Run r{WIFEXITED(status) ? WEXITSTATUS(status) : -1, out, nullptr};
  if (!out.empty() && out.front() == '{') r.report = json::parse(out);
  return r;
}

fs::path temp(const std::string& name) { return fs::temp_directory_path() / ("csheaf-test-" + name); }

}  // namespace

TEST_CASE("fsite output feeds omega") {
  const auto site = temp("F2.json");
  auto a = cli("fsite --n 2 --save " + site.string());
  REQUIRE(a.code == 0);
  CHECK(a.report["certificates"]["subcanonical"]["pass"] == true);
  auto b = cli("omega --site " + site.string());
  REQUIRE(b.code == 0);
  CHECK(b.report["counts"] == json({{"1", 2}, {"2", 4}}));
  CHECK(b.report["result"]["plots"]["1"] == json({"0", "1"}));
  CHECK(b.report["command"] == "omega");
  REQUIRE(b.report["inputs"].size() == 1);
  CHECK(b.report["inputs"][0]["kind"] == "site");
  CHECK(b.report["inputs"][0]["hash"].get<std::string>().size() == 16);
}

TEST_CASE("builtin sites need no file") {
  auto r = cli("omega --site F3");
  REQUIRE(r.code == 0);
  CHECK(r.report["counts"] == json({{"1", 2}, {"2", 4}, {"3", 8}}));
}

TEST_CASE("exit codes") {
  CHECK(cli("").code == 2);
  CHECK(cli("no-such-command").code == 2);
  CHECK(cli("fsite").code == 2);
  CHECK(cli("fsite --n 9").code == 2);
  CHECK(cli("check-sheaf missing.json").code == 2);
  CHECK(cli("subspace T.sheaf --points a,zz").code == 2);
  CHECK(cli("shape equalizer pick_a").code == 2);
  CHECK(cli("check-sheaf E.sheaf").code == 0);
  CHECK(cli("check-sheaf not_separated").code == 1);
  CHECK(cli("chi incl_P2_E").code == 1);
}

TEST_CASE("parse and schema errors are reported on stdout as JSON") {
  const auto bad = temp("bad.json");
  std::ofstream(bad) << "{\n  \"kind\": \"presheaf\",\n  ]\n";
  auto r = cli("check-sheaf " + bad.string());
  CHECK(r.code == 2);
  CHECK(r.report["ok"] == false);
  CHECK(r.report["error"]["kind"] == "ParseError");
  CHECK(r.report["error"]["message"].get<std::string>().find(":3:") != std::string::npos);

  std::ofstream(bad, std::ios::trunc) << R"({"kind": "presheaf", "version": 1, "site": "F2"})";
  r = cli("check-sheaf " + bad.string());
  CHECK(r.code == 2);
  CHECK(r.report["error"]["kind"] == "SchemaError");
}

TEST_CASE("a broken site fails validation with the offending pair") {
  auto r = cli("validate-site F2_broken");
  CHECK(r.code == 1);
  CHECK(r.report["ok"] == false);
  CHECK(r.report["violations"][0]["kind"] == "totality");
  CHECK(r.report["violations"][0]["witness"] == json({"1>2:0", "2>1:00"}));

  auto s = cli("omega --site F2_broken");
  CHECK(s.code == 1);
  CHECK(s.report["error"]["kind"] == "ValidationError");
  CHECK(s.report["error"]["violations"][0]["witness"] == json({"1>2:0", "2>1:00"}));
}

TEST_CASE("check-sheaf names the failing family") {
  auto r = cli("check-sheaf constants_F2sep");
  CHECK(r.code == 1);
  CHECK(r.report["sheaf"]["failure"] == "NoGluing");
  CHECK(r.report["sheaf"]["family"] == "{1>2:0,1>2:1}");
  CHECK(r.report["sheaf"]["assignment"] == json({{"1>2:0", "a"}, {"1>2:1", "b"}}));
  CHECK(r.report["separated"]["pass"] == true);

  auto s = cli("check-sheaf not_separated");
  CHECK(s.report["separated"]["failure"] == "NonUniqueGluing");
  CHECK(s.report["concrete"]["pass"] == false);
}

TEST_CASE("plus, sheafify, concretize") {
  auto p = cli("plus constants_F2sep");
  REQUIRE(p.code == 0);
  CHECK(p.report["counts"]["result"] == json({{"1", 2}, {"2", 4}}));
  CHECK(p.report["certificates"]["sheaf"] == true);

  auto s = cli("sheafify not_separated");
  REQUIRE(s.code == 0);
  CHECK(s.report["plus_steps"] == 2);
  CHECK(s.report["counts"]["result"] == json({{"1", 1}, {"2", 1}}));

  auto c = cli("concretize not_separated");
  REQUIRE(c.code == 0);
  CHECK(c.report["counts"]["result"] == json({{"1", 1}, {"2", 1}}));
  CHECK(c.report["result"]["plots"]["2"] == json({"s"}));
}

TEST_CASE("--save writes the result artifact") {
  const auto out = temp("plus.json");
  auto r = cli("plus constants_F2sep --save " + out.string());
  REQUIRE(r.code == 0);
  std::ifstream in(out);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == csheaf::io::dump(r.report["result"]));
}

TEST_CASE("limits and colimits from diagram files") {
  auto sq = cli("limit edge_squared");
  REQUIRE(sq.code == 0);
  CHECK(sq.report["counts"] == json({{"1", 4}, {"2", 16}}));
  CHECK(sq.report["legs"].size() == 2);

  auto pt = cli("limit empty_F2");
  CHECK(pt.report["counts"] == json({{"1", 1}, {"2", 1}}));

  auto ends = cli("limit ends_of_edge");
  CHECK(ends.report["counts"] == json({{"1", 0}, {"2", 0}}));

  auto coeq = cli("colimit coequalize_ends");
  REQUIRE(coeq.code == 0);
  CHECK(coeq.report["counts"] == json({{"1", 1}, {"2", 1}}));
  CHECK(coeq.report["certificates"]["concrete"] == true);

  auto collapse = cli("colimit collapse_edge");
  CHECK(collapse.report["counts"] == json({{"1", 1}, {"2", 1}}));
}

TEST_CASE("named shapes") {
  auto p = cli("shape product E.sheaf E.sheaf");
  REQUIRE(p.code == 0);
  CHECK(p.report["counts"] == json({{"1", 4}, {"2", 16}}));
  CHECK(p.report["cross_checked"] == true);
  CHECK(cli("shape coproduct E.sheaf V.sheaf").report["counts"] == json({{"1", 3}, {"2", 5}}));
  CHECK(cli("shape terminal --site F2").report["counts"] == json({{"1", 1}, {"2", 1}}));
  CHECK(cli("shape initial --site F2").report["counts"] == json({{"1", 0}, {"2", 0}}));
  CHECK(cli("shape pushout pick_a pick_b").report["counts"] == json({{"1", 3}, {"2", 7}}));
  CHECK(cli("shape pullback pick_a pick_a").report["counts"] == json({{"1", 1}, {"2", 1}}));
  CHECK(cli("shape bogus").code == 2);
}

TEST_CASE("subspaces, quotients, classification") {
  auto sub = cli("subspace T.sheaf --points a,b");
  REQUIRE(sub.code == 0);
  CHECK(sub.report["counts"] == json({{"1", 2}, {"2", 4}}));
  CHECK(sub.report["strong_mono"]["pass"] == true);

  auto q = cli("quotient T.sheaf --classes 'a,b'");
  REQUIRE(q.code == 0);
  CHECK(q.report["result"]["plots"]["1"] == json({"a", "c"}));
  CHECK(q.report["strong_epi"]["pass"] == true);

  auto cl = cli("classify incl_P2_E");
  CHECK(cl.report["mono"] == true);
  CHECK(cl.report["epi"] == true);
  CHECK(cl.report["strong_mono"]["pass"] == false);
  CHECK(cl.report["strong_mono"]["witness"] == json({"2", "(a,b)"}));

  auto chi = cli("chi pick_a");
  REQUIRE(chi.code == 0);
  CHECK(chi.report["indicator"] == json({{"a", "1"}, {"b", "0"}}));
  CHECK(chi.report["qualifying"] == 1);
}

TEST_CASE("exponentials and currying") {
  auto e = cli("exp --base terminal X=E.sheaf Y=E.sheaf");
  REQUIRE(e.code == 0);
  CHECK(e.report["counts"]["points"] == 4);
  CHECK(e.report["points"][0] == "*{a:a,b:a}");

  auto f = cli("exp P2_over_E P2_over_E");
  REQUIRE(f.code == 0);
  CHECK(f.report["points"] == json({"a{a:a}", "b{b:b}"}));

  auto c = cli("curry E.sheaf E.sheaf E.sheaf");
  REQUIRE(c.code == 0);
  CHECK(c.report["counts"] == json({{"maps_curried", 16}, {"maps_flat", 16}}));
  CHECK(c.report["bijection"] == true);
}

TEST_CASE("complexes") {
  auto t = cli("from-complex T --n 3");
  REQUIRE(t.code == 0);
  CHECK(t.report["counts"] == json({{"1", 3}, {"2", 9}, {"3", 21}}));
  auto back = cli("to-complex T.sheaf");
  CHECK(back.report["result"]["simplices"].size() == 6);
  CHECK(cli("roundtrip T --n 3").code == 0);
  CHECK(cli("roundtrip E.sheaf").report["isomorphism"] == true);
}

TEST_CASE("laws pass on the small function sites") {
  for (const char* s : {"F1", "F2", "F2sep"}) {
    INFO(s);
    auto r = cli(std::string("laws --site ") + s + " --trials 4 --seed 7");
    CHECK(r.code == 0);
    CHECK(r.report["counts"]["failed"] == 0);
    CHECK(r.report["items"].size() == 16);
  }
}

TEST_CASE("output does not depend on thread count or repetition") {
  for (const char* args : {"laws --site F2sep --trials 3 --seed 11", "colimit coequalize_ends", "from-complex T --n 3",
                           "exp X=E.sheaf Y=E.sheaf"}) {
    INFO(args);
    auto a = cli(std::string("--threads 1 ") + args);
    auto b = cli(std::string("--threads 4 ") + args);
    auto c = cli(std::string("--threads 4 ") + args);
    CHECK(a.out == b.out);
    CHECK(b.out == c.out);
  }
}
