// Batch front end: structured config, subcommands, deterministic reports,
// and a results cache.  Every run writes <out>/<command>.json whose "report"
// subtree is byte-identical across runs with the same config; timestamps and
// cache status live in the separate "meta" subtree.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "renormlab/io.hpp"

using namespace renormlab;
using json = nlohmann::json;

namespace {

struct RunConfig {
  int precision_bits = 53;
  std::int64_t horizon = 65536;
  int max_period = 12;
  int depth = 0;  // 0 means: use the per-command default
  int count = 256;
  int n_type = 1;
  double tol = 0.0;  // 0 means: module defaults
  std::string out = ".";
  std::string cache_dir;  // empty means: <out>/cache
  std::vector<double> b;
  std::string word;
};

struct CmdOpts {
  RunConfig cfg;
  std::string config_path;
  CLI::App* sub = nullptr;
  std::map<std::string, CLI::Option*> flag;
};

void add_common(CLI::App* sub, CmdOpts& o) {
  o.sub = sub;
  sub->add_option("--config", o.config_path,
                  "flat key = value config file; flags override it");
  o.flag["b"] = sub->add_option("--b", o.cfg.b, "family parameters")
                    ->delimiter(',');
  o.flag["word"] =
      sub->add_option("--word", o.cfg.word, "canonical string or M2^n");
  o.flag["depth"] =
      sub->add_option("--depth", o.cfg.depth, "tower / ladder depth");
  o.flag["max_period"] = sub->add_option("--max-period", o.cfg.max_period,
                                         "periodic-interval search cap");
  o.flag["precision_bits"] = sub->add_option(
      "--precision-bits", o.cfg.precision_bits, "53 or 128 (tune only)");
  o.flag["out"] = sub->add_option("--out", o.cfg.out, "output directory");
}

long parse_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw config_error("config: invalid value for " + key);
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size() || !std::isfinite(x))
      throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw config_error("config: invalid value for " + key);
  }
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    const std::string cell =
        v.substr(start, comma == std::string::npos ? comma : comma - start);
    out.push_back(parse_double(key, cell));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void apply_config(CmdOpts& o) {
  if (o.config_path.empty()) return;
  const auto kv = io::parse_config_text(io::read_file(o.config_path));
  RunConfig& c = o.cfg;
  for (const auto& [key, value] : kv) {
    const auto it = o.flag.find(key);
    const bool flagged = it != o.flag.end() && it->second->count() > 0;
    if (key == "precision_bits") {
      if (!flagged) c.precision_bits = static_cast<int>(parse_long(key, value));
    } else if (key == "horizon") {
      c.horizon = parse_long(key, value);
    } else if (key == "max_period") {
      if (!flagged) c.max_period = static_cast<int>(parse_long(key, value));
    } else if (key == "depth") {
      if (!flagged) c.depth = static_cast<int>(parse_long(key, value));
    } else if (key == "count") {
      c.count = static_cast<int>(parse_long(key, value));
    } else if (key == "n_type") {
      c.n_type = static_cast<int>(parse_long(key, value));
    } else if (key == "tol") {
      c.tol = parse_double(key, value);
    } else if (key == "out") {
      if (!flagged) c.out = value;
    } else if (key == "cache") {
      c.cache_dir = value;
    } else if (key == "b") {
      if (!flagged) c.b = parse_list(key, value);
    } else if (key == "word") {
      if (!flagged) c.word = value;
    } else {
      throw config_error("config: unknown key " + key);
    }
  }
}

void validate(const RunConfig& c) {
  if (c.precision_bits != 53 && c.precision_bits != 128)
    throw config_error("config: precision_bits must be 53 or 128");
  if (c.horizon < 256 || c.horizon > 100000000)
    throw config_error("config: horizon outside [256, 1e8]");
  if (c.max_period < 2 || c.max_period > 64)
    throw config_error("config: max_period outside [2, 64]");
  if (c.depth < 0 || c.depth > 32)
    throw config_error("config: depth outside [1, 32]");
  if (c.count < 16 || c.count > 1048576)
    throw config_error("config: count outside [16, 2^20]");
  if (c.n_type < 1 || c.n_type > 4)
    throw config_error("config: n_type outside [1, 4]");
  if (c.tol < 0.0 || c.tol > 1e-2)
    throw config_error("config: tol outside [0, 1e-2]");
  for (double v : c.b)
    if (!std::isfinite(v)) throw config_error("config: non-finite parameter");
}

std::string now_utc() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Reporter {
  std::string dir;
  std::string command;
  json inputs;
  json provenance;
  json meta_extra = json::object();
  std::vector<std::string> artifacts;

  void artifact(const std::string& name, const std::string& content) {
    io::write_file_atomic(dir + "/" + name, content);
    artifacts.push_back(name);
  }

  std::string write(const json& payload) {
    json rep;
    rep["v"] = "v1";
    rep["command"] = command;
    rep["inputs"] = inputs;
    rep["payload"] = payload;
    rep["provenance"] = provenance;
    json doc;
    doc["report"] = rep;
    json meta = meta_extra;
    meta["timestamp"] = now_utc();
    meta["artifacts"] = artifacts;
    doc["meta"] = meta;
    const std::string path = dir + "/" + command + ".json";
    io::write_file_atomic(path, doc.dump(2) + "\n");
    return path;
  }
};

json inputs_echo(const RunConfig& c) {
  json in;
  in["b"] = c.b;
  in["word"] = c.word;
  in["depth"] = c.depth;
  in["max_period"] = c.max_period;
  in["precision_bits"] = c.precision_bits;
  in["horizon"] = c.horizon;
  in["count"] = c.count;
  in["n_type"] = c.n_type;
  in["tol"] = c.tol;
  return in;
}

MultimodalMap<double> family_map(const RunConfig& c) {
  if (c.b.empty())
    throw config_error("config: this command requires --b");
  return build_quadratic_family<double>(c.b);
}

RenormParams<double> renorm_params(const RunConfig& c) {
  auto par = RenormParams<double>::defaults();
  par.max_period = c.max_period;
  if (c.tol > 0.0) par.overlap_tol = c.tol;
  return par;
}

// Word strings accept the canonical format plus the M2 / M2^n shorthand;
// composite canonical words are replaced by their prime tower reading.
std::vector<Combinatorics> parse_word_arg(const std::string& s) {
  if (s.empty()) throw config_error("config: this command requires --word");
  if (s == "M2") return {doubling_combinatorics()};
  if (s.rfind("M2^", 0) == 0) {
    const long k = parse_long("word", s.substr(3));
    if (k < 1 || k > 32) throw config_error("config: word power outside [1, 32]");
    return std::vector<Combinatorics>(static_cast<std::size_t>(k),
                                      doubling_combinatorics());
  }
  try {
    const Combinatorics w = canonical_form(parse_combinatorics(s));
    return factorize(w);
  } catch (const domain_error& e) {
    // malformed or unfactorable word strings are configuration mistakes
    throw config_error(e.what());
  }
}

// ---------------------------------------------------------------------------
// Subcommand bodies.  Each returns the deterministic payload.

json cmd_analyze(const RunConfig& c, Reporter& rep) {
  const auto m = family_map(c);
  const auto par = renorm_params(c);
  const auto data = find_periodic_interval(m, par);
  if (!data)
    throw domain_error("analyze: no periodic interval within max_period");
  const auto r = renormalize_with(m, *data);
  const auto word = canonical_form(extract(m, *data));
  rep.artifact("orbit.csv",
               io::orbit_csv(critical_orbit(m, 0, std::min<std::int64_t>(
                                                      c.horizon, 256))));
  json payload;
  payload["renormalization"] = io::renorm_to_json(r, word.text);
  std::cout << "analyze: p=" << r.data.p << " word=" << word.text << "\n";
  return payload;
}

json cmd_nest(const RunConfig& c, Reporter& rep) {
  const auto m = family_map(c);
  const auto F = extend(m);
  auto par = NestParams<double>::defaults();
  par.horizon = c.horizon;
  const int depth = c.depth ? c.depth : 24;
  const auto nest = principal_nest(F, depth, par);
  const auto dec = cascade_decomposition(F, nest);
  json payload = io::nest_to_json(nest, dec);
  // profile the longest cascade when it is long enough to normalize
  const CascadeSegment* widest = nullptr;
  for (const auto& seg : dec.cascades)
    if (!widest || seg.end - seg.start > widest->end - widest->start)
      widest = &seg;
  if (widest && widest->end - widest->start >= 3) {
    const std::vector<FiberInterval<double>> slice(
        nest.levels.begin() + widest->start,
        nest.levels.begin() + widest->end + 1);
    const auto prof = yoccoz_profile(slice);
    rep.artifact("yoccoz.csv", io::yoccoz_csv(prof));
    payload["yoccoz"] = {{"eta", prof.eta},
                         {"within_band", prof.within_band},
                         {"ratio_sum", prof.ratio_sum}};
  }
  std::cout << "nest: levels=" << nest.levels.size() << " height="
            << dec.height << " status=" << nest.status << "\n";
  return payload;
}

json cmd_cascade(const RunConfig& c, Reporter& rep) {
  const auto family = FamilySpec<double>::defaults(1);
  const int n = c.depth ? c.depth : 8;
  const auto ladder = cascade_parameters(family, n);
  rep.artifact("cascade.csv", io::series_csv("b", 1, ladder));
  json payload;
  payload["b"] = ladder;
  std::cout << "cascade: levels=" << ladder.size()
            << " last_b=" << io::num_text(ladder.back()) << "\n";
  return payload;
}

template <class S>
json run_tune(const RunConfig& c, Reporter& rep,
              const std::vector<Combinatorics>& words) {
  const auto family = FamilySpec<S>::defaults(words.front().n_type);
  const std::string dir =
      c.cache_dir.empty() ? c.out + "/cache" : c.cache_dir;
  const std::string key = io::cache_key(words, family);
  if (auto cached = io::cache_lookup(dir, key)) {
    rep.meta_extra["cache"] = "hit";
    return {{"tuning", *cached}};
  }
  std::filesystem::create_directories(dir);
  const auto r = superstable_parameter(family, words);
  io::cache_store(dir, key, r);
  rep.meta_extra["cache"] = "miss";
  return {{"tuning", io::tune_to_json(r)}};
}

json cmd_tune(const RunConfig& c, Reporter& rep) {
  const auto words = parse_word_arg(c.word);
  json payload = c.precision_bits == 128 ? run_tune<f128>(c, rep, words)
                                         : run_tune<double>(c, rep, words);
  std::cout << "tune: b=" << payload["tuning"]["b"].dump()
            << " method=" << payload["tuning"]["method"].get<std::string>()
            << " (" << rep.meta_extra["cache"].get<std::string>() << ")\n";
  return payload;
}

json cmd_delta(const RunConfig& c, Reporter& rep) {
  const auto family = FamilySpec<double>::defaults(1);
  const int n_max = c.depth ? c.depth : 8;
  const auto deltas = feigenbaum_delta(family, n_max);
  rep.artifact("delta.csv", io::series_csv("delta", 3, deltas));
  json payload;
  payload["delta"] = deltas;
  payload["final"] = deltas.back();
  std::cout << "delta: final=" << io::num_text(deltas.back()) << "\n";
  return payload;
}

json cmd_alpha(const RunConfig& c, Reporter& rep) {
  const auto m = family_map(c);
  const int depth = c.depth ? c.depth : 8;
  const auto ratios = feigenbaum_alpha(m, depth, renorm_params(c));
  rep.artifact("alpha.csv", io::series_csv("alpha_ratio", 0, ratios));
  json payload;
  payload["alpha_ratio"] = ratios;
  payload["final"] = ratios.back();
  std::cout << "alpha: final=" << io::num_text(ratios.back()) << "\n";
  return payload;
}

json cmd_tower(const RunConfig& c, Reporter& rep) {
  const auto m = family_map(c);
  const int depth = c.depth ? c.depth : 6;
  const auto tower = renorm_tower(m, depth, renorm_params(c));
  const auto words = tower_words(m, tower);
  json payload;
  payload["status"] = tower.status;
  payload["depth_reached"] = tower.levels.size();
  json levels = json::array();
  for (std::size_t i = 0; i < tower.levels.size(); ++i)
    levels.push_back(io::renorm_to_json(tower.levels[i], words[i].text));
  payload["levels"] = std::move(levels);
  rep.artifact("tower-words.txt", io::words_to_text(words));
  std::cout << "tower: depth=" << tower.levels.size() << " status="
            << tower.status << "\n";
  return payload;
}

json cmd_contraction(const RunConfig& c, Reporter& rep) {
  const auto f = family_map(c);
  const int depth = c.depth ? c.depth : 8;
  const auto g = renormalize(f, renorm_params(c)).map;
  const auto fit = contraction_rate(f, g, depth);
  rep.artifact("contraction.csv", io::series_csv("distance", 0, fit.distances));
  json payload;
  payload["distances"] = fit.distances;
  payload["rate"] = fit.rate;
  payload["r_squared"] = fit.r_squared;
  payload["fitted_points"] = fit.fitted_points;
  payload["exact_coincidence"] = fit.exact_coincidence;
  std::cout << "contraction: rate=" << fit.rate
            << " r2=" << fit.r_squared << "\n";
  return payload;
}

json cmd_julia(const RunConfig& c, Reporter& rep) {
  if (c.b.empty()) throw config_error("config: this command requires --b");
  const auto P = composite_polynomial(c.b);
  RasterGrid g;
  g.center = Cplx(0.0, 0.0);
  g.width = 4.0;
  g.height = 4.0;
  g.nx = 129;
  g.ny = 129;
  g.max_iter = 256;
  const auto r = julia_raster(P, g);
  rep.artifact("julia.pgm", io::raster_pgm(r));
  rep.artifact("julia.csv", io::raster_csv(r, g));
  int interior = 0;
  for (int t : r.escape) interior += (t == -1);
  json payload;
  payload["nx"] = r.nx;
  payload["ny"] = r.ny;
  payload["max_iter"] = g.max_iter;
  payload["escape_radius"] = escape_bound(P);
  payload["interior_pixels"] = interior;
  payload["escaped_pixels"] = static_cast<int>(r.escape.size()) - interior;
  std::cout << "julia: interior=" << interior << "/" << r.escape.size()
            << "\n";
  return payload;
}

json cmd_external(const RunConfig& c, Reporter& rep) {
  if (c.b.empty()) throw config_error("config: this command requires --b");
  const auto P = composite_polynomial(c.b);
  const auto s = external_map_samples(P, c.count);
  const int d = degree(P);
  double worst = 0.0;
  for (const auto& [tin, tout] : s.samples) {
    double dev = tout - d * tin;
    dev -= std::round(dev);
    worst = std::max(worst, std::abs(dev));
  }
  rep.artifact("external.csv", io::samples_csv(s));
  json payload;
  payload["degree"] = d;
  payload["winding"] = s.winding;
  payload["count"] = c.count;
  payload["max_deviation"] = worst;
  std::cout << "external: winding=" << s.winding << " max_dev=" << worst
            << "\n";
  return payload;
}

json cmd_combinatorics(const RunConfig& c, Reporter& rep) {
  json payload;
  if (!c.word.empty()) {
    Combinatorics w;
    try {
      w = canonical_form(parse_combinatorics(c.word));
    } catch (const domain_error& e) {
      throw config_error(e.what());
    }
    std::vector<Combinatorics> factors;
    try {
      factors = factorize(w);
    } catch (const domain_error& e) {
      throw config_error(e.what());
    }
    payload["word"] = w.text;
    payload["n_type"] = w.n_type;
    payload["m"] = w.m;
    payload["primitive"] = is_primitive(w);
    json fx = json::array();
    for (const auto& f : factors) fx.push_back(f.text);
    payload["factors"] = std::move(fx);
    std::cout << "combinatorics: m=" << w.m
              << " primitive=" << (is_primitive(w) ? "yes" : "no") << "\n";
    return payload;
  }
  const int cap = c.max_period == 12 ? 8 : c.max_period;  // enumeration cap
  std::vector<Combinatorics> all;
  json counts = json::array();
  for (int m = 2; m <= cap; ++m) {
    const auto words = enumerate_combinatorics(c.n_type, m);
    counts.push_back(json::array({m, words.size()}));
    all.insert(all.end(), words.begin(), words.end());
  }
  rep.artifact("words.txt", io::words_to_text(all));
  payload["counts"] = std::move(counts);
  payload["total"] = all.size();
  std::cout << "combinatorics: total=" << all.size() << " (m<=" << cap
            << ")\n";
  return payload;
}

json dispatch(const std::string& name, const RunConfig& c, Reporter& rep) {
  if (name == "analyze") return cmd_analyze(c, rep);
  if (name == "nest") return cmd_nest(c, rep);
  if (name == "cascade") return cmd_cascade(c, rep);
  if (name == "tune") return cmd_tune(c, rep);
  if (name == "delta") return cmd_delta(c, rep);
  if (name == "alpha") return cmd_alpha(c, rep);
  if (name == "tower") return cmd_tower(c, rep);
  if (name == "contraction") return cmd_contraction(c, rep);
  if (name == "julia") return cmd_julia(c, rep);
  if (name == "external") return cmd_external(c, rep);
  if (name == "combinatorics") return cmd_combinatorics(c, rep);
  throw config_error("config: unknown command " + name);
}

int run_command(const std::string& name, const RunConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out, ec);
  if (ec) {
    std::cerr << "config: cannot create output directory " << cfg.out << "\n";
    return 2;
  }
  Reporter rep;
  rep.dir = cfg.out;
  rep.command = name;
  rep.inputs = inputs_echo(cfg);
  rep.provenance = {
      {"precision_bits", cfg.precision_bits},
      {"horizons", {{"map_steps", cfg.horizon}}},
      {"tolerances",
       {{"overlap_tol", cfg.tol > 0.0
                            ? cfg.tol
                            : to_double(
                                  RenormParams<double>::defaults().overlap_tol)},
        {"reject_radius",
         to_double(RenormParams<double>::defaults().reject_radius)}}},
      {"seeds", "deterministic"}};
  try {
    const json payload = dispatch(name, cfg, rep);
    const std::string path = rep.write(payload);
    std::cout << "report: " << path << "\n";
    return 0;
  } catch (const config_error& e) {
    rep.write(json{{"error", e.what()}});
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const domain_error& e) {
    rep.write(json{{"error", e.what()}});
    std::cerr << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"renormlab: renormalization experiments for interval maps"};
  app.require_subcommand(1);
  const char* names[] = {"analyze", "nest",  "cascade",     "tune",
                         "delta",   "alpha", "tower",       "contraction",
                         "julia",   "external", "combinatorics"};
  const char* descs[] = {
      "one renormalization step with extracted combinatorics",
      "principal nest, cascades, and the Yoccoz profile",
      "doubling-cascade superstable parameter ladder",
      "tune a superstable parameter for a word (cached)",
      "delta ratio table from the doubling ladder",
      "interval scaling ratio table along the tower",
      "renormalization tower with per-level data",
      "fit the contraction rate between tower orbits",
      "escape-time raster of the filled Julia set",
      "external circle map samples and winding",
      "enumerate or inspect canonical combinatorics"};
  std::map<std::string, CmdOpts> opts;
  for (std::size_t i = 0; i < std::size(names); ++i)
    add_common(app.add_subcommand(names[i], descs[i]), opts[names[i]]);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  for (auto& [name, o] : opts)
    if (o.sub->parsed()) {
      try {
        apply_config(o);
        validate(o.cfg);
      } catch (const config_error& e) {
        std::cerr << e.what() << "\n";
        return 2;
      }
      return run_command(name, o.cfg);
    }
  return 2;
}
