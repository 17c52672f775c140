#include "fwtlab/harness/fwt.hpp"

#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

#include "fwtlab/core/random.hpp"
#include "fwtlab/measurement/sme.hpp"

namespace fwt {

using nlohmann::json;

namespace {

constexpr std::pair<Verdict, std::string_view> kNames[] = {
    {Verdict::tangible, "TANGIBLE"},
    {Verdict::not_tangible, "NOT_TANGIBLE"},
    {Verdict::inconsistent_assignment, "INCONSISTENT_ASSIGNMENT"},
    {Verdict::inconclusive, "INCONCLUSIVE"},
    {Verdict::failed_to_run, "FAILED_TO_RUN"},
};

template <class T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw InvalidInput(std::string("report: missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidInput(std::string("report: field '") + key + "' has the wrong type");
  }
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string optional_bool(const std::optional<bool>& b) {
  return b ? (*b ? "true" : "false") : "";
}

std::string optional_double(const std::optional<double>& d) {
  return d ? format_double(*d) : "";
}

DensityMatrix default_probe(Index dim, std::uint64_t seed) {
  const Index rank = 1 + static_cast<Index>(splitmix64(seed) % static_cast<std::uint64_t>(dim));
  return random_density_matrix(dim, rank, seed);
}

DensityMatrix draw_probe(const DynamicalMap& map, std::uint64_t seed) {
  return map.probe ? map.probe(seed) : default_probe(map.dim, seed);
}

template <class F>
auto with_context(Index probe, F&& f) {
  try {
    return f();
  } catch (const InvalidInput& e) {
    throw InvalidInput("probe " + std::to_string(probe) + ": " + e.what());
  } catch (const NumericalFailure& e) {
    throw NumericalFailure("probe " + std::to_string(probe) + ": " + e.what());
  }
}

}  // namespace

std::string_view verdict_name(Verdict v) {
  for (const auto& [k, name] : kNames) {
    if (k == v) return name;
  }
  return "INCONCLUSIVE";
}

Verdict parse_verdict(std::string_view s) {
  for (const auto& [k, name] : kNames) {
    if (name == s) return k;
  }
  throw InvalidInput("unknown verdict '" + std::string(s) + "'");
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json to_json(const FwtReport& r) {
  json j;
  j["scheme"] = r.scheme;
  j["method"] = r.method;
  j["deficit"] = r.deficit;
  j["bound"] = r.bound;
  j["cp"] = r.cp ? json(*r.cp) : json(nullptr);
  j["cp_min_eigenvalue"] = r.cp_min_eigenvalue ? json(*r.cp_min_eigenvalue) : json(nullptr);
  j["tp"] = r.tp ? json(*r.tp) : json(nullptr);
  j["verdict"] = std::string(verdict_name(r.verdict));
  j["probes"] = r.probes;
  j["n"] = r.n;
  j["seed"] = r.seed;
  j["details"] = r.details;
  j["config"] = r.config;
  if (!r.series_columns.empty()) {
    j["series"] = {{"columns", r.series_columns}, {"rows", r.series}};
  }
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

FwtReport report_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("report: not a JSON object");
  FwtReport r;
  r.scheme = field<std::string>(j, "scheme");
  r.method = field<std::string>(j, "method");
  r.deficit = field<double>(j, "deficit");
  r.bound = field<double>(j, "bound");
  if (j.contains("cp") && !j["cp"].is_null()) r.cp = field<bool>(j, "cp");
  if (j.contains("cp_min_eigenvalue") && !j["cp_min_eigenvalue"].is_null()) {
    r.cp_min_eigenvalue = field<double>(j, "cp_min_eigenvalue");
  }
  if (j.contains("tp") && !j["tp"].is_null()) r.tp = field<double>(j, "tp");
  r.verdict = parse_verdict(field<std::string>(j, "verdict"));
  r.probes = field<Index>(j, "probes");
  r.n = field<Index>(j, "n");
  r.seed = field<std::uint64_t>(j, "seed");
  r.details = j.value("details", json::object());
  r.config = j.value("config", json::object());
  if (j.contains("series")) {
    const json& s = j["series"];
    try {
      r.series_columns = s.at("columns").get<std::vector<std::string>>();
      r.series = s.at("rows").get<std::vector<std::vector<double>>>();
    } catch (const json::exception&) {
      throw InvalidInput("report: malformed 'series'");
    }
  }
  if (j.contains("error")) r.error = field<std::string>(j, "error");
  return r;
}

std::string report_text(const FwtReport& r) { return to_json(r).dump(2) + "\n"; }

std::string table_csv(const std::vector<FwtReport>& rows) {
  std::ostringstream os;
  os << "scheme,method,verdict,deficit,bound,cp,cp_min_eigenvalue,tp,probes,n,seed,error\r\n";
  for (const FwtReport& r : rows) {
    os << csv_cell(r.scheme) << ',' << r.method << ',' << verdict_name(r.verdict) << ','
       << format_double(r.deficit) << ',' << format_double(r.bound) << ',' << optional_bool(r.cp)
       << ',' << optional_double(r.cp_min_eigenvalue) << ',' << optional_double(r.tp) << ','
       << r.probes << ',' << r.n << ',' << r.seed << ',' << csv_cell(r.error) << "\r\n";
  }
  return os.str();
}

std::string table_text(const std::vector<FwtReport>& rows) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-22s %-24s %-12s %-12s %s\n", "scheme", "verdict", "deficit",
                "bound", "method");
  os << line;
  for (const FwtReport& r : rows) {
    std::snprintf(line, sizeof line, "%-22s %-24s %-12.4e %-12.4e %s\n", r.scheme.c_str(),
                  std::string(verdict_name(r.verdict)).c_str(), r.deficit, r.bound,
                  r.method.c_str());
    os << line;
    if (!r.error.empty()) os << "    error: " << r.error << "\n";
  }
  return os.str();
}

std::string series_csv(const FwtReport& r) {
  std::ostringstream os;
  for (std::size_t c = 0; c < r.series_columns.size(); ++c) {
    os << (c ? "," : "") << csv_cell(r.series_columns[c]);
  }
  os << "\r\n";
  for (const auto& row : r.series) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_double(row[c]);
    os << "\r\n";
  }
  return os.str();
}

namespace {

DeficitResult probe_deficit(const DynamicalMap& map, Index probes, std::uint64_t seed,
                            const std::function<Matrix(const DensityMatrix&)>& image) {
  if (probes < 10) throw InvalidInput("linearity_deficit: at least 10 probes required");
  DeficitResult out;
  out.probes = probes;
  for (Index k = 0; k < probes; ++k) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(k));
    std::uniform_real_distribution<double> ua(0.1, 0.9);
    const double alpha = ua(rng);
    const std::uint64_t s1 = rng(), s2 = rng();
    const double d = with_context(k, [&] {
      const DensityMatrix r1 = draw_probe(map, s1);
      const DensityMatrix r2 = draw_probe(map, s2);
      const DensityMatrix mix = DensityMatrix::mixture(alpha, r1, r2);
      return trace_norm(image(mix) - alpha * image(r1) - (1.0 - alpha) * image(r2));
    });
    if (d > out.max_deficit || out.argmax < 0) {
      out.max_deficit = d;
      out.argmax = k;
      out.alpha = alpha;
    }
  }
  return out;
}

}  // namespace

DeficitResult linearity_deficit(const DynamicalMap& map, Index probes, std::uint64_t seed) {
  if (map.kind != DynamicalMap::Kind::exact || !map.evaluate) {
    throw InvalidInput("linearity_deficit: needs an exact map");
  }
  return probe_deficit(map, probes, seed,
                       [&](const DensityMatrix& r) { return map.evaluate(r).matrix(); });
}

DeficitResult linear_extension_deficit(const DynamicalMap& map, Index probes,
                                       std::uint64_t seed) {
  if (!map.linear) throw InvalidInput("linear_extension_deficit: map has no linear form");
  return probe_deficit(map, probes, seed,
                       [&](const DensityMatrix& r) { return (*map.linear)(r.matrix()); });
}

Verdict exact_rule(double deficit, const std::optional<CpTpReport>& cptp, double tol) {
  if (deficit > kNotTangibleFactor * tol) return Verdict::not_tangible;
  if (deficit > tol) return Verdict::inconclusive;
  if (cptp && (cptp->min_eigenvalue < -tol || cptp->tp_deficit > tol)) {
    return Verdict::inconclusive;
  }
  return Verdict::tangible;
}

Verdict monte_carlo_rule(const MixtureLinearityStats& s, double factor) {
  const double r = s.scaling_ratio;
  if (s.deficit <= s.bound && r >= 4.0 / 3.0 && r <= 3.0) return Verdict::tangible;
  if (s.deficit > factor * s.bound && r < 4.0 / 3.0) return Verdict::not_tangible;
  return Verdict::inconclusive;
}

Verdict distribution_rule(double ks, double critical) {
  if (ks <= critical) return Verdict::tangible;
  if (ks > 3.0 * critical) return Verdict::not_tangible;
  return Verdict::inconclusive;
}

FwtReport fwt_verdict(const std::string& scheme, const DynamicalMap& map,
                      const FwtOptions& opts) {
  FwtReport r;
  r.scheme = scheme;
  r.seed = opts.seed;
  if (map.kind == DynamicalMap::Kind::exact) {
    r.method = "exact";
    const DeficitResult d = linearity_deficit(map, opts.probes, opts.seed);
    r.deficit = d.max_deficit;
    r.probes = d.probes;
    r.details["argmax_probe"] = d.argmax;
    r.details["argmax_alpha"] = d.alpha;
    std::optional<CpTpReport> cptp;
    if (map.linear) {
      cptp = cp_tp_check(choi_of_linear(*map.linear, map.dim), kExactTolerance);
      r.cp = cptp->is_cp;
      r.cp_min_eigenvalue = cptp->min_eigenvalue;
      r.tp = cptp->tp_deficit;
      r.details["linear_extension_deficit"] =
          linear_extension_deficit(map, opts.probes, opts.seed).max_deficit;
    }
    r.verdict = exact_rule(r.deficit, cptp);
    return r;
  }

  r.method = "monte_carlo";
  r.n = map.n;
  r.probes = 1;
  const auto [first, second] = opts.mixture_inputs
                                   ? *opts.mixture_inputs
                                   : std::pair{draw_probe(map, splitmix64(opts.seed + 1)),
                                               draw_probe(map, splitmix64(opts.seed + 2))};
  const DensityMatrix mix = DensityMatrix::mixture(opts.alpha, first, second);
  const SampleSet a = map.sample(mix, map.n, ensemble_seed(map.seed, 0));
  const SampleSet b = map.sample(first, map.n, ensemble_seed(map.seed, 1));
  const SampleSet c = map.sample(second, map.n, ensemble_seed(map.seed, 2));
  MixtureLinearityOptions mo;
  mo.bootstrap_resamples = opts.bootstrap_resamples;
  mo.bootstrap_seed = map.seed;
  const MixtureLinearityStats s = mixture_linearity(a, b, c, opts.alpha, mo);
  r.deficit = s.deficit;
  r.bound = s.bound;
  r.verdict = monte_carlo_rule(s);
  r.details["alpha"] = opts.alpha;
  r.details["combined_se"] = s.combined_se;
  r.details["scaling_ratio"] = s.scaling_ratio;
  r.details["deficit_over_bound"] = s.bound > 0.0 ? s.deficit / s.bound : 0.0;
  json sens = json::object();
  for (double f : {5.0, 10.0, 20.0}) {
    sens[format_double(f)] = std::string(verdict_name(monte_carlo_rule(s, f)));
  }
  r.details["not_tangible_factor_sensitivity"] = sens;
  r.series_columns = {"n", "replicates", "mean_deficit"};
  for (const LadderPoint& p : s.ladder) {
    r.series.push_back({double(p.n), double(p.replicates), p.mean_deficit});
  }
  return r;
}

}  // namespace fwt
