#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "renormlab/io.hpp"

using namespace renormlab;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kGolden = -1.6180339887498949;

MultimodalMap<double> quad(std::vector<double> b) {
  return build_quadratic_family<double>(std::move(b));
}

struct RunResult {
  int code = -1;
  std::string out;
};

// Runs the front end binary named by RENORMLAB_CLI with the given arguments.
RunResult run_cli(const std::string& args) {
  const char* cli = std::getenv("RENORMLAB_CLI");
  REQUIRE(cli != nullptr);
  const std::string outfile = "cli_e2e/last_stdout.txt";
  const std::string cmd =
      std::string(cli) + " " + args + " > " + outfile + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = io::read_file(outfile);
  return r;
}

json load_json(const std::string& path) {
  return json::parse(io::read_file(path));
}

}  // namespace

TEST_CASE("numbers round-trip through json and text") {
  const json jd = io::num_json(0.1);
  CHECK(jd.is_number());
  CHECK(io::num_from<double>(jd) == 0.1);
  CHECK(io::num_from<double>(json("2.5")) == 2.5);

  const f128 x = sqrt(f128(2)) / f128(3);
  const json jx = io::num_json(x);
  CHECK(jx.is_string());
  CHECK(io::num_from<f128>(jx) == x);

  CHECK(io::num_text(4.5) == "4.5");
  CHECK_THROWS_AS((void)io::num_from<double>(json::array()), config_error);
}

TEST_CASE("map documents round-trip") {
  const auto m = quad({-1.5, -1.2});
  const json doc = io::map_to_json(m);
  CHECK(doc["v"] == "v1");
  CHECK(doc["n_type"] == 2);
  CHECK(doc["precision_bits"] == 53);
  REQUIRE(doc["factors"].size() == 2);
  CHECK(doc["factors"][0]["kind"] == "even-poly");
  CHECK_FALSE(doc.contains("base"));

  const auto back = io::map_from_json<double>(doc);
  for (int i = 0; i <= 8; ++i) {
    const double x = -1.0 + 2.0 * i / 8.0;
    CHECK(eval(back, x) == eval(m, x));
  }

  // a tower level serializes by reference to its base document
  const auto lvl = renormalize(quad({kGolden})).map;
  const json tdoc = io::map_to_json(lvl);
  CHECK(tdoc.contains("base"));
  CHECK(tdoc["factors"][0]["kind"] == "iterate-segment");
  const auto tback = io::map_from_json<double>(tdoc);
  for (int i = 0; i <= 8; ++i) {
    const double x = -1.0 + 2.0 * i / 8.0;
    CHECK(eval(tback, x) == eval(lvl, x));
  }

  json broken = doc;
  broken.erase("v");
  CHECK_THROWS_AS((void)io::map_from_json<double>(broken), config_error);
  json segonly = tdoc;
  segonly.erase("base");
  CHECK_THROWS_AS((void)io::map_from_json<double>(segonly), config_error);
}

TEST_CASE("csv tables render stable headers") {
  const auto orbit = critical_orbit(quad({kGolden}), 0, 4);
  const std::string oc = io::orbit_csv(orbit);
  CHECK(oc.rfind("step,fiber,x\n", 0) == 0);
  CHECK(std::count(oc.begin(), oc.end(), '\n') == 5);

  CHECK(io::series_csv("delta", 3, std::vector<double>{4.5, 4.625}) ==
        "n,delta\n3,4.5\n4,4.625\n");

  JuliaRaster r;
  r.nx = 2;
  r.ny = 2;
  r.escape = {1, -1, 3, 2};
  CHECK(io::raster_pgm(r) == "P2\n2 2\n3\n1 0\n3 2\n");

  RasterGrid g;
  g.width = 2.0;
  g.height = 2.0;
  g.nx = 2;
  g.ny = 2;
  const std::string rc = io::raster_csv(r, g);
  CHECK(rc.rfind("x,y,escape_time\n", 0) == 0);
  CHECK(std::count(rc.begin(), rc.end(), '\n') == 5);

  ExternalSamples s;
  s.samples = {{0.0, 0.0}, {0.25, 0.5}};
  CHECK(io::samples_csv(s) == "theta_in,theta_out\n0,0\n0.25,0.5\n");
}

TEST_CASE("structured reports carry their contract keys") {
  NicenessReport<double> nrep;
  nrep.nice = false;
  nrep.horizon = 77;
  nrep.witness = NicenessWitness<double>{1, 0.5, 9};
  const json nj = io::niceness_to_json(nrep);
  CHECK(nj["verdict"] == "not-nice");
  CHECK(nj["horizon"] == 77);
  CHECK(nj["witness_k"] == 9);
  NicenessReport<double> clean;
  clean.horizon = 11;
  CHECK_FALSE(io::niceness_to_json(clean).contains("witness_k"));

  const auto F = extend(quad({kGolden}));
  const auto nest = principal_nest(F, 6);
  const auto dec = cascade_decomposition(F, nest);
  const json nd = io::nest_to_json(nest, dec);
  for (const char* key :
       {"levels", "return_times", "scaling", "moments", "height", "status"})
    CHECK(nd.contains(key));
  REQUIRE_FALSE(nd["levels"].empty());
  CHECK(nd["levels"][0].contains("lo"));
  CHECK(nd["levels"][0].contains("fiber"));

  const auto r = renormalize(quad({kGolden}));
  const auto word = canonical_form(extract(quad({kGolden}), r.data));
  const json rj = io::renorm_to_json(r, word.text);
  CHECK(rj["p"] == 2);
  CHECK(io::num_from<double>(rj["J"]["lo"]) < 0.0);
  CHECK(io::num_from<double>(rj["J"]["hi"]) > 0.0);
  CHECK(rj["combinatorics"] == doubling_combinatorics().text);
  CHECK(rj["normalizers"].size() == rj["visit_times"].size());

  const auto tr = superstable_parameter(FamilySpec<double>::defaults(1),
                                        {doubling_combinatorics()});
  const json tj = io::tune_to_json(tr);
  for (const char* key :
       {"word", "b", "residual", "method", "bracket_width"})
    CHECK(tj.contains(key));
  CHECK(tj["method"] == "bisection");

  const auto dom = polylike_domains(quad({kGolden}));
  const json dj = io::domains_to_json(dom);
  CHECK(dj["found"] == true);
  CHECK(dj["degree"] == 2);
  REQUIRE_FALSE(dj["u"].empty());
  CHECK(dj["u"][0].size() == 2);
}

TEST_CASE("word files round-trip") {
  auto words = enumerate_combinatorics(1, 4);
  words.push_back(doubling_combinatorics());
  const std::string text = io::words_to_text(words);
  const auto back = io::words_from_text(text + "\n  \n");
  REQUIRE(back.size() == words.size());
  for (std::size_t i = 0; i < words.size(); ++i)
    CHECK(back[i].text == words[i].text);
  CHECK_THROWS_AS((void)io::words_from_text("not a word\n"), domain_error);
}

TEST_CASE("config text parses and rejects") {
  const auto kv = io::parse_config_text(
      "a = 1\n# comment only\n  b = two words  \n\nc=3 # trailing\n");
  REQUIRE(kv.size() == 3);
  CHECK(kv[0] == std::pair<std::string, std::string>("a", "1"));
  CHECK(kv[1] == std::pair<std::string, std::string>("b", "two words"));
  CHECK(kv[2] == std::pair<std::string, std::string>("c", "3"));

  CHECK_THROWS_AS((void)io::parse_config_text("novalue\n"), config_error);
  CHECK_THROWS_AS((void)io::parse_config_text("k =\n"), config_error);
  CHECK_THROWS_AS((void)io::parse_config_text("a = 1\na = 2\n"), config_error);
}

TEST_CASE("atomic writes and the tune cache") {
  const std::string dir = "io_cache_test";
  fs::remove_all(dir);
  fs::create_directories(dir);

  io::write_file_atomic(dir + "/f.txt", "one");
  CHECK(io::read_file(dir + "/f.txt") == "one");
  io::write_file_atomic(dir + "/f.txt", "two");
  CHECK(io::read_file(dir + "/f.txt") == "two");
  CHECK_FALSE(fs::exists(dir + "/f.txt.tmp"));

  const auto family = FamilySpec<double>::defaults(1);
  const std::vector<Combinatorics> word{doubling_combinatorics(),
                                        doubling_combinatorics()};
  const std::string key = io::cache_key(word, family);
  CHECK_FALSE(io::cache_lookup(dir, key).has_value());

  const auto result = superstable_parameter(family, word);
  io::cache_store(dir, key, result);
  const auto hit = io::cache_lookup(dir, key);
  REQUIRE(hit.has_value());
  CHECK(io::num_from<double>((*hit)["b"][0]) == result.b[0]);

  // the key encodes precision and the family box exactly
  const std::string key128 =
      io::cache_key(word, FamilySpec<f128>::defaults(1));
  CHECK(key128 != key);
  CHECK_FALSE(io::cache_lookup(dir, key128).has_value());

  // corrupt entries degrade to misses
  io::write_file_atomic(io::cache_path(dir, key), "{ not json");
  CHECK_FALSE(io::cache_lookup(dir, key).has_value());
}

TEST_CASE("the command line front end reports deterministically") {
  fs::remove_all("cli_e2e");
  fs::create_directories("cli_e2e");

  auto r1 = run_cli("analyze --b -1.618034 --out cli_e2e/a1");
  CHECK(r1.code == 0);
  CHECK(r1.out.find("p=2") != std::string::npos);
  const json a1 = load_json("cli_e2e/a1/analyze.json");
  CHECK(a1["report"]["payload"]["renormalization"]["p"] == 2);
  CHECK(a1["report"]["payload"]["renormalization"]["combinatorics"] ==
        doubling_combinatorics().text);
  CHECK(a1["report"]["provenance"].contains("tolerances"));
  CHECK(fs::exists("cli_e2e/a1/orbit.csv"));

  auto r2 = run_cli("analyze --b -1.618034 --out cli_e2e/a2");
  CHECK(r2.code == 0);
  const json a2 = load_json("cli_e2e/a2/analyze.json");
  CHECK(a1["report"].dump() == a2["report"].dump());

  // malformed words are configuration errors with the parser's message
  auto bad = run_cli("tune --word garbage --out cli_e2e/bad");
  CHECK(bad.code == 2);
  const json badrep = load_json("cli_e2e/bad/tune.json");
  CHECK(badrep["report"]["payload"]["error"] ==
        "parse: invalid canonical combinatorics");

  // tuning is cached: the repeat run hits and reproduces the parameter
  auto t1 = run_cli("tune --word M2^2 --out cli_e2e/t");
  CHECK(t1.code == 0);
  const json tr1 = load_json("cli_e2e/t/tune.json");
  CHECK(tr1["meta"]["cache"] == "miss");
  auto t2 = run_cli("tune --word M2^2 --out cli_e2e/t");
  CHECK(t2.code == 0);
  const json tr2 = load_json("cli_e2e/t/tune.json");
  CHECK(tr2["meta"]["cache"] == "hit");
  CHECK(tr1["report"]["payload"]["tuning"]["b"] ==
        tr2["report"]["payload"]["tuning"]["b"]);

  // delta table artifact with the frozen three-level value
  auto d = run_cli("delta --depth 3 --out cli_e2e/d");
  CHECK(d.code == 0);
  const std::string csv = io::read_file("cli_e2e/d/delta.csv");
  CHECK(csv.rfind("n,delta\n3,", 0) == 0);
  const double d3 = std::stod(csv.substr(csv.find("\n3,") + 3));
  CHECK(d3 == doctest::Approx(4.68077099801).epsilon(1e-6));

  auto e = run_cli("external --b -1.5 --out cli_e2e/e");
  CHECK(e.code == 0);
  const json erep = load_json("cli_e2e/e/external.json");
  CHECK(erep["report"]["payload"]["winding"] == 2);
  CHECK(erep["report"]["payload"]["max_deviation"].get<double>() < 1e-6);
  CHECK(fs::exists("cli_e2e/e/external.csv"));

  auto jl = run_cli("julia --b -1.618034 --out cli_e2e/j");
  CHECK(jl.code == 0);
  CHECK(io::read_file("cli_e2e/j/julia.pgm").rfind("P2\n129 129\n", 0) == 0);

  // config files merge under flags; unknown keys are rejected
  io::write_file_atomic("cli_e2e/good.conf",
                        "b = -1.618034\nmax_period = 10\n");
  auto cfg = run_cli(
      "analyze --config cli_e2e/good.conf --out cli_e2e/cfg");
  CHECK(cfg.code == 0);
  const json crep = load_json("cli_e2e/cfg/analyze.json");
  CHECK(crep["report"]["inputs"]["max_period"] == 10);

  io::write_file_atomic("cli_e2e/bad.conf", "b = -1.6\nbogus = 1\n");
  auto badcfg = run_cli(
      "analyze --config cli_e2e/bad.conf --out cli_e2e/badcfg");
  CHECK(badcfg.code == 2);
  CHECK(badcfg.out.find("unknown key") != std::string::npos);

  // a parameter with no admissible return window is a domain error
  auto dom = run_cli("analyze --b -1.2 --out cli_e2e/dom");
  CHECK(dom.code == 1);
}
