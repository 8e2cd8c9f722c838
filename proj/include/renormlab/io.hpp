#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <json.hpp>

#include "renormlab/box_map.hpp"
#include "renormlab/combinatorics.hpp"
#include "renormlab/complex_ext.hpp"
#include "renormlab/map_core.hpp"
#include "renormlab/nest.hpp"
#include "renormlab/renorm.hpp"
#include "renormlab/scalar.hpp"
#include "renormlab/tuner.hpp"

// Serialization of every result type the batch front end reports: versioned
// JSON documents for structured results, CSV for tabular series, a flat
// key/value config format, and an atomic file writer for the cache.  All
// formatting is locale-independent and value-deterministic: identical inputs
// produce byte-identical text.

namespace renormlab::io {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Numbers.  Doubles stay native JSON numbers (shortest round-trip form);
// extended precision travels as a 40-digit decimal string.

template <class S>
json num_json(const S& v) {
  if constexpr (std::is_same_v<S, double>) {
    return v;
  } else {
    std::ostringstream os;
    os << std::setprecision(40) << v;
    return os.str();
  }
}

template <class S>
S num_from(const json& j) {
  if constexpr (std::is_same_v<S, double>) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) return std::stod(j.get<std::string>());
  } else {
    if (j.is_string()) return S(j.get<std::string>());
    if (j.is_number()) return S(j.get<double>());
  }
  throw config_error("json: expected a number");
}

// Fixed 17-significant-digit text for CSV cells; round-trips any double.
template <class S>
std::string num_text(const S& v) {
  std::ostringstream os;
  if constexpr (std::is_same_v<S, double>) {
    os << std::setprecision(17) << v;
  } else {
    os << std::setprecision(40) << v;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Maps.  Polynomial factors carry their coefficients; towers serialize the
// shared base document once, and each segment factor references it by the
// walk it performs over that base.

template <class S>
json map_to_json(const MultimodalMap<S>& m) {
  json doc;
  doc["v"] = "v1";
  doc["n_type"] = m.n_type;
  doc["precision_bits"] = m.precision;
  json factors = json::array();
  std::shared_ptr<const MultimodalMap<S>> base;
  for (const auto& f : m.factors) {
    if (f.is_polynomial()) {
      const auto& poly = std::get<EvenPoly<S>>(f.impl);
      json node;
      node["kind"] = "even-poly";
      json cs = json::array();
      for (const S& c : poly.c) cs.push_back(num_json(c));
      node["coeffs"] = std::move(cs);
      factors.push_back(std::move(node));
    } else {
      const auto& seg = std::get<IterateSegment<S>>(f.impl);
      if (base && base != seg.base)
        throw config_error("map: factors reference different base maps");
      base = seg.base;
      json node;
      node["kind"] = "iterate-segment";
      node["start_fiber"] = seg.start_fiber;
      node["count"] = seg.count;
      node["in"] = {{"scale", num_json(seg.in.scale)},
                    {"offset", num_json(seg.in.offset)}};
      node["out"] = {{"scale", num_json(seg.out.scale)},
                     {"offset", num_json(seg.out.offset)}};
      factors.push_back(std::move(node));
    }
  }
  doc["factors"] = std::move(factors);
  if (base) doc["base"] = map_to_json(*base);
  return doc;
}

template <class S>
MultimodalMap<S> map_from_json(const json& doc) {
  if (!doc.is_object() || doc.value("v", "") != std::string("v1"))
    throw config_error("map: unsupported document version");
  MultimodalMap<S> m;
  m.n_type = doc.at("n_type").get<int>();
  m.precision = doc.at("precision_bits").get<int>();
  std::shared_ptr<const MultimodalMap<S>> base;
  if (doc.contains("base"))
    base = std::make_shared<const MultimodalMap<S>>(
        map_from_json<S>(doc.at("base")));
  for (const json& node : doc.at("factors")) {
    const std::string kind = node.at("kind").get<std::string>();
    if (kind == "even-poly") {
      EvenPoly<S> poly;
      for (const json& c : node.at("coeffs")) poly.c.push_back(num_from<S>(c));
      m.factors.push_back(UnimodalFactor<S>{std::move(poly)});
    } else if (kind == "iterate-segment") {
      if (!base) throw config_error("map: segment factor without a base map");
      IterateSegment<S> seg;
      seg.base = base;
      seg.start_fiber = node.at("start_fiber").get<int>();
      seg.count = node.at("count").get<std::int64_t>();
      seg.in = Affine<S>{num_from<S>(node.at("in").at("scale")),
                         num_from<S>(node.at("in").at("offset"))};
      seg.out = Affine<S>{num_from<S>(node.at("out").at("scale")),
                          num_from<S>(node.at("out").at("offset"))};
      m.factors.push_back(UnimodalFactor<S>{std::move(seg)});
    } else {
      throw config_error("map: unknown factor kind");
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// CSV tables.

template <class S>
std::string orbit_csv(const std::vector<FiberPoint<S>>& orbit) {
  std::ostringstream os;
  os << "step,fiber,x\n";
  for (std::size_t i = 0; i < orbit.size(); ++i)
    os << i << ',' << orbit[i].fiber << ',' << num_text(orbit[i].x) << '\n';
  return os.str();
}

template <class S>
std::string yoccoz_csv(const YoccozProfile<S>& prof) {
  std::ostringstream os;
  os << "j,ratio,normalized\n";
  for (const auto& row : prof.rows)
    os << row.j << ',' << num_text(row.ratio) << ','
       << num_text(row.normalized) << '\n';
  return os.str();
}

// One (n, value) series, e.g. the delta or alpha ratio table.
template <class S>
std::string series_csv(const std::string& column, int n0,
                       const std::vector<S>& values) {
  std::ostringstream os;
  os << "n," << column << '\n';
  for (std::size_t i = 0; i < values.size(); ++i)
    os << n0 + static_cast<int>(i) << ',' << num_text(values[i]) << '\n';
  return os.str();
}

inline std::string samples_csv(const ExternalSamples& s) {
  std::ostringstream os;
  os << "theta_in,theta_out\n";
  for (const auto& [tin, tout] : s.samples)
    os << num_text(tin) << ',' << num_text(tout) << '\n';
  return os.str();
}

inline std::string raster_csv(const JuliaRaster& r, const RasterGrid& g) {
  std::ostringstream os;
  os << "x,y,escape_time\n";
  for (int j = 0; j < r.ny; ++j) {
    const double y = g.center.imag() + ((j + 0.5) / g.ny - 0.5) * g.height;
    for (int i = 0; i < r.nx; ++i) {
      const double x = g.center.real() + ((i + 0.5) / g.nx - 0.5) * g.width;
      os << num_text(x) << ',' << num_text(y) << ','
         << r.escape[static_cast<std::size_t>(j) * r.nx + i] << '\n';
    }
  }
  return os.str();
}

// Plain-text PGM; non-escaped pixels are 0, escaped pixels keep their time.
inline std::string raster_pgm(const JuliaRaster& r) {
  int maxval = 1;
  for (int t : r.escape) maxval = std::max(maxval, t);
  std::ostringstream os;
  os << "P2\n" << r.nx << ' ' << r.ny << '\n' << maxval << '\n';
  for (int j = 0; j < r.ny; ++j) {
    for (int i = 0; i < r.nx; ++i) {
      if (i) os << ' ';
      const int t = r.escape[static_cast<std::size_t>(j) * r.nx + i];
      os << (t < 0 ? 0 : t);
    }
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Structured reports.

template <class S>
json niceness_to_json(const NicenessReport<S>& rep) {
  json doc;
  doc["verdict"] = rep.nice ? "nice" : "not-nice";
  doc["horizon"] = rep.horizon;
  if (rep.witness) doc["witness_k"] = rep.witness->time;
  return doc;
}

template <class S>
json interval_to_json(const FiberInterval<S>& iv) {
  return json{{"lo", num_json(iv.lo)},
              {"hi", num_json(iv.hi)},
              {"fiber", iv.fiber}};
}

template <class S>
json nest_to_json(const PrincipalNest<S>& nest,
                  const CascadeDecomposition& dec) {
  json doc;
  json levels = json::array();
  for (const auto& iv : nest.levels) levels.push_back(interval_to_json(iv));
  doc["levels"] = std::move(levels);
  doc["return_times"] = nest.return_times;
  json scaling = json::array();
  for (const S& s : nest.scaling_factors) scaling.push_back(num_json(s));
  doc["scaling"] = std::move(scaling);
  doc["moments"] = dec.non_central_moments;
  doc["height"] = dec.height;
  doc["status"] = nest.status;
  return doc;
}

template <class S>
json renorm_to_json(const RenormResult<S>& r, const std::string& word) {
  json doc;
  doc["p"] = r.data.p;
  doc["J"] = {{"lo", num_json(r.data.J.lo)}, {"hi", num_json(r.data.J.hi)}};
  doc["visit_times"] = r.data.visit_times;
  json norms = json::array();
  for (const S& z : r.data.normalizer_scales)
    norms.push_back(json{{"scale", num_json(z)}, {"offset", num_json(S(0))}});
  doc["normalizers"] = std::move(norms);
  doc["combinatorics"] = word;
  return doc;
}

template <class S>
json tune_to_json(const TuneResult<S>& t) {
  json doc;
  json words = json::array();
  for (const auto& w : t.word) words.push_back(w.text);
  doc["word"] = std::move(words);
  json bs = json::array();
  for (const S& b : t.b) bs.push_back(num_json(b));
  doc["b"] = std::move(bs);
  doc["residual"] = num_json(t.residual);
  doc["method"] = t.method;
  doc["bracket_width"] = num_json(t.bracket_width);
  return doc;
}

inline json domains_to_json(const PolylikeDomains& d) {
  auto poly = [](const std::vector<Cplx>& curve) {
    json arr = json::array();
    for (Cplx z : curve) arr.push_back(json::array({z.real(), z.imag()}));
    return arr;
  };
  json doc;
  doc["found"] = d.found;
  doc["degree"] = d.degree;
  doc["semi_a"] = d.semi_a;
  doc["semi_b"] = d.semi_b;
  doc["u"] = poly(d.boundary_u);
  doc["v"] = poly(d.boundary_v);
  if (!d.note.empty()) doc["note"] = d.note;
  return doc;
}

// ---------------------------------------------------------------------------
// Word files: one canonical string per line.

inline std::string words_to_text(const std::vector<Combinatorics>& words) {
  std::ostringstream os;
  for (const auto& w : words) os << w.text << '\n';
  return os.str();
}

inline std::vector<Combinatorics> words_from_text(const std::string& text) {
  std::vector<Combinatorics> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (line.empty()) continue;
    out.push_back(canonical_form(parse_combinatorics(line)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Flat key/value config text: `key = value` lines, '#' comments.  Syntax
// errors and duplicate keys are reported by line; key validation is the
// caller's contract.

inline std::vector<std::pair<std::string, std::string>> parse_config_text(
    const std::string& text) {
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return std::string();
    const auto b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
  };
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("config: malformed line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw config_error("config: malformed line " + std::to_string(lineno));
    for (const auto& [k, v] : out)
      if (k == key) throw config_error("config: duplicate key " + key);
    out.emplace_back(key, value);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files.

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("io: cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Write-then-rename so readers never observe a torn file.
inline void write_file_atomic(const std::string& path,
                              const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw config_error("io: cannot write " + tmp);
    out << content;
    if (!out.flush()) throw config_error("io: cannot write " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw config_error("io: cannot rename into " + path);
}

// ---------------------------------------------------------------------------
// Tuning cache.  Entries are keyed by the exact canonical word list, the
// precision, and the family box; the full key is stored inside the entry, so
// hash collisions degrade to misses, never to wrong answers.

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

template <class S>
std::string cache_key(const std::vector<Combinatorics>& word,
                      const FamilySpec<S>& family) {
  std::ostringstream os;
  os << "precision=" << precision_bits<S>() << ";box=";
  for (std::size_t i = 0; i < family.box_lo.size(); ++i)
    os << '[' << num_text(family.box_lo[i]) << ','
       << num_text(family.box_hi[i]) << ']';
  os << ";word=";
  for (const auto& w : word) os << w.text << '|';
  return os.str();
}

inline std::string cache_path(const std::string& dir, const std::string& key) {
  std::ostringstream os;
  os << dir << "/tune-" << std::hex << std::setw(16) << std::setfill('0')
     << fnv1a(key) << ".json";
  return os.str();
}

template <class S>
void cache_store(const std::string& dir, const std::string& key,
                 const TuneResult<S>& result) {
  json doc;
  doc["v"] = "v1";
  doc["key"] = key;
  doc["result"] = tune_to_json(result);
  write_file_atomic(cache_path(dir, key), doc.dump(2) + "\n");
}

// Returns the stored report only when the full key matches; unreadable or
// corrupt entries count as misses.
inline std::optional<json> cache_lookup(const std::string& dir,
                                        const std::string& key) {
  const std::string path = cache_path(dir, key);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
  if (doc.value("v", "") != std::string("v1")) return std::nullopt;
  if (doc.value("key", "") != key) return std::nullopt;
  if (!doc.contains("result")) return std::nullopt;
  return doc.at("result");
}

}  // namespace renormlab::io
