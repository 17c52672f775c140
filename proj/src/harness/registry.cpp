#include "fwtlab/harness/registry.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>

#include "fwtlab/assignments/assignments.hpp"
#include "fwtlab/assignments/husimi.hpp"
#include "fwtlab/bohm/bohm.hpp"
#include "fwtlab/core/ops.hpp"
#include "fwtlab/core/random.hpp"
#include "fwtlab/histories/histories.hpp"
#include "fwtlab/hybrid/hybrid.hpp"
#include "fwtlab/measurement/sme.hpp"

namespace fwt {

using nlohmann::json;

namespace {

double num(const json& c, const char* key) { return c.at(key).get<double>(); }
Index idx(const json& c, const char* key) { return c.at(key).get<Index>(); }
std::uint64_t seed_of(const json& c) { return c.at("seed").get<std::uint64_t>(); }

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidInput(what);
}

Observable obs(const Matrix& m) { return Observable::from_matrix(m); }

FwtReport stamp(FwtReport r, const json& cfg) {
  r.config = cfg;
  r.seed = seed_of(cfg);
  return r;
}

// ---- projective -----------------------------------------------------------

struct Projective {
  ProjectorSet p;
  ControlPolicy ctrl;
};

Projective projective_parts(const json& c) {
  const Index d = idx(c, "dim");
  require(d >= 2 && d <= 64, "dim must lie in [2, 64]");
  require(idx(c, "probes") >= 10, "probes must be at least 10");
  Matrix hop = Matrix::Zero(d, d);
  for (Index j = 0; j + 1 < d; ++j) hop(j, j + 1) = hop(j + 1, j) = 1.0;
  const Observable gen = obs(hop);
  std::map<int, UnitaryOperator> table;
  for (Index k = 0; k < d; ++k) {
    table.emplace(int(k), UnitaryOperator::exp_i(gen, double(k) * num(c, "theta")));
  }
  return {ProjectorSet::computational(d), ControlPolicy::table(std::move(table))};
}

FwtReport run_projective(const json& c) {
  auto parts = std::make_shared<Projective>(projective_parts(c));
  DynamicalMap m;
  m.name = "projective";
  m.dim = parts->p.dim();
  m.evaluate = [parts](const DensityMatrix& r) {
    return controlled_average_map(r, parts->p, parts->ctrl);
  };
  m.linear = [parts](const Matrix& x) {
    return controlled_average_apply(x, parts->p, parts->ctrl);
  };
  FwtOptions o;
  o.probes = idx(c, "probes");
  o.seed = seed_of(c);
  return fwt_verdict("projective", m, o);
}

// ---- husimi ---------------------------------------------------------------

struct Husimi {
  CoherentBasis basis;
  std::unique_ptr<HusimiChannel> channel;
};

std::shared_ptr<Husimi> husimi_parts(const json& c) {
  const Index n = idx(c, "cutoff");
  const Index levels = idx(c, "probe_levels");
  const double zs = num(c, "z_scale");
  require(n >= 2 && n <= 60, "cutoff must lie in [2, 60]");
  require(levels >= 1 && levels < n, "probe_levels must lie in [1, cutoff)");
  require(zs > 0.0, "z_scale must be positive");
  require(idx(c, "probes") >= 10, "probes must be at least 10");
  const double e = num(c, "extent"), h = num(c, "spacing");
  auto parts = std::make_shared<Husimi>(Husimi{CoherentBasis(n, e, e, h, h), nullptr});
  const double gain = num(c, "gain");
  const ControlPolicy ctrl = ControlPolicy::exponential(
      [gain, zs](const ClassicalValue& z) { return (gain / zs) * (zs * z.as_pair().first); },
      obs(ops::momentum(n)));
  parts->channel = std::make_unique<HusimiChannel>(parts->basis, ctrl);
  return parts;
}

FwtReport run_husimi(const json& c) {
  const auto parts = husimi_parts(c);
  const Index n = idx(c, "cutoff"), levels = idx(c, "probe_levels");
  DynamicalMap m;
  m.name = "husimi";
  m.dim = n;
  m.evaluate = [parts](const DensityMatrix& r) { return parts->channel->apply(r); };
  m.linear = [parts](const Matrix& x) { return parts->channel->apply_raw(x); };
  m.probe = [n, levels](std::uint64_t s) {
    const Index rank = 1 + Index(splitmix64(s) % std::uint64_t(levels));
    Matrix full = Matrix::Zero(n, n);
    full.topLeftCorner(levels, levels) = random_density_matrix(levels, rank, s).matrix();
    return DensityMatrix::from_matrix(full);
  };
  FwtOptions o;
  o.probes = idx(c, "probes");
  o.seed = seed_of(c);
  FwtReport r = fwt_verdict("husimi", m, o);
  r.details["frame_deficit"] = parts->basis.frame_deficit();
  r.details["lattice_points"] = parts->basis.points();
  return r;
}

// ---- mean field -----------------------------------------------------------

void check_meanfield(const json& c) {
  require(num(c, "dt") > 0.0, "dt must be positive");
  require(num(c, "z_scale") > 0.0, "z_scale must be positive");
  require(idx(c, "probes") >= 10, "probes must be at least 10");
}

FwtReport run_meanfield(const json& c) {
  check_meanfield(c);
  const double zs = num(c, "z_scale"), gain = num(c, "gain"), dt = num(c, "dt");
  const Observable q = obs(zs * ops::sigma_z());
  const Observable f = obs(ops::sigma_y());
  DynamicalMap m;
  m.name = "mean-field";
  m.dim = 2;
  m.evaluate = [=](const DensityMatrix& r) {
    return meanfield_controlled_step(r, q, [=](double z) { return (gain / zs) * z; }, f, dt);
  };
  FwtOptions o;
  o.probes = idx(c, "probes");
  o.seed = seed_of(c);
  return fwt_verdict("mean-field", m, o);
}

// ---- bohm -----------------------------------------------------------------

Grid1D grid_of(const json& c) {
  const json& g = c.at("grid");
  Grid1D grid{g.at("x_min").get<double>(), g.at("dx").get<double>(), g.at("n").get<Index>()};
  grid.validate();
  return grid;
}

WaveFunction1D two_packets(const Grid1D& g, double half_sep, double sigma) {
  const WaveFunction1D a = WaveFunction1D::gaussian(g, -half_sep, sigma);
  const WaveFunction1D b = WaveFunction1D::gaussian(g, half_sep, sigma);
  std::vector<cplx> amp(std::size_t(g.n));
  double norm = 0.0;
  for (std::size_t k = 0; k < amp.size(); ++k) {
    amp[k] = a.amplitudes()[k] + b.amplitudes()[k];
    norm += std::norm(amp[k]) * g.dx;
  }
  for (cplx& x : amp) x /= std::sqrt(norm);
  return WaveFunction1D(g, std::move(amp));
}

DelayedControlSpec control_of(const json& c, bool delayed) {
  DelayedControlSpec s;
  s.mode = delayed ? DelayedControlSpec::Mode::delayed : DelayedControlSpec::Mode::instantaneous;
  s.lambda = num(c, "lambda");
  if (delayed) s.tau = num(c, "tau");
  s.validate(num(c, "t_final"), num(c, "dt"));
  return s;
}

Index bohm_steps(const json& c) {
  return Index(std::llround(num(c, "t_final") / num(c, "dt")));
}

void check_bohm_common(const json& c, bool delayed) {
  grid_of(c);
  control_of(c, delayed);
  require(idx(c, "n_traj") >= 100, "n_traj must be at least 100");
  require(num(c, "packet_sigma") > 0.0, "packet_sigma must be positive");
}

void check_bohm_instantaneous(const json& c) {
  check_bohm_common(c, false);
  const auto cps = c.at("checkpoints").get<std::vector<Index>>();
  require(!cps.empty(), "checkpoints must not be empty");
  for (Index s : cps) require(s >= 1 && s <= bohm_steps(c), "checkpoints must lie in [1, steps]");
}

void check_bohm_delayed(const json& c) {
  check_bohm_common(c, true);
  require(idx(c, "bin_cells") >= 1, "bin_cells must be positive");
}

FwtReport distribution_report(const std::string& scheme, double ks, Index n,
                              const BohmEnsembleResult& r) {
  FwtReport rep;
  rep.scheme = scheme;
  rep.method = "distribution";
  rep.deficit = ks;
  rep.bound = ks_critical_5pct(n);
  rep.n = n;
  rep.verdict = distribution_rule(ks, rep.bound);
  if (r.unreliable) rep.verdict = Verdict::inconclusive;
  rep.details["frozen_steps"] = r.frozen_steps;
  rep.details["trajectory_steps"] = r.trajectory_steps;
  rep.details["unreliable"] = r.unreliable;
  return rep;
}

FwtReport run_bohm_instantaneous(const json& c) {
  check_bohm_instantaneous(c);
  const Grid1D g = grid_of(c);
  const WaveFunction1D psi = two_packets(g, num(c, "packet_half_separation"), num(c, "packet_sigma"));
  const Index n = idx(c, "n_traj");
  const double dt = num(c, "dt");
  const auto cps = c.at("checkpoints").get<std::vector<Index>>();
  const BohmEnsembleResult r =
      run_controlled_ensemble(psi, std::vector<double>(std::size_t(g.n), 0.0), n,
                              control_of(c, false), num(c, "t_final"), dt, seed_of(c), cps);
  std::vector<std::vector<double>> rows;
  double worst = 0.0;
  for (std::size_t k = 0; k < r.checkpoint_steps.size(); ++k) {
    const double ks = ks_distance(r.checkpoint_positions[k], g, r.checkpoint_probabilities[k]);
    worst = std::max(worst, ks);
    rows.push_back({double(r.checkpoint_steps[k]), double(r.checkpoint_steps[k]) * dt, ks,
                    ks_critical_5pct(n)});
  }
  FwtReport rep = distribution_report("bohm-instantaneous", worst, n, r);
  rep.probes = Index(rows.size());
  rep.details["order_preserved"] = r.order_preserved;
  rep.series_columns = {"step", "time", "ks", "critical"};
  rep.series = std::move(rows);
  return rep;
}

FwtReport run_bohm_delayed(const json& c) {
  check_bohm_delayed(c);
  const Grid1D g = grid_of(c);
  const WaveFunction1D psi =
      WaveFunction1D::gaussian(g, num(c, "packet_center"), num(c, "packet_sigma"));
  const std::vector<double> v(std::size_t(g.n), 0.0);
  const DelayedControlSpec spec = control_of(c, true);
  const Index n = idx(c, "n_traj");
  const double t = num(c, "t_final"), dt = num(c, "dt");
  const BohmEnsembleResult r = run_controlled_ensemble(psi, v, n, spec, t, dt, seed_of(c));
  const std::vector<double> orth = orthodox_prediction(psi, v, spec, t, dt, idx(c, "bin_cells"));
  FwtReport rep =
      distribution_report("bohm-delayed", ks_distance(r.final_positions, g, orth), n, r);
  rep.probes = 1;
  rep.details["ks_vs_uncontrolled_wave"] =
      ks_distance(r.final_positions, g, r.final_wave.cell_probabilities());
  rep.series_columns = {"x", "orthodox_probability"};
  for (Index k = 0; k < g.n; ++k) rep.series.push_back({g.x(k), orth[std::size_t(k)]});
  return rep;
}

// ---- histories ------------------------------------------------------------

ProjectorSet named_set(const std::string& name) {
  if (name == "z") return ProjectorSet::computational(2);
  if (name == "x") {
    Matrix h(2, 2);
    h << 1.0, 1.0, 1.0, -1.0;
    return ProjectorSet::from_basis(h / std::sqrt(2.0));
  }
  throw InvalidInput("sets: unknown projector set '" + name + "' (expected x or z)");
}

DensityMatrix named_state(const std::string& name) {
  if (name == "0") return DensityMatrix::basis(2, 0);
  if (name == "1") return DensityMatrix::basis(2, 1);
  if (name == "+" || name == "-") {
    Vector v(2);
    v << 1.0, (name == "+" ? 1.0 : -1.0);
    return DensityMatrix::pure(v);
  }
  throw InvalidInput("state: unknown state '" + name + "' (expected 0, 1, + or -)");
}

HistorySpec history_spec(const json& c) {
  const auto times = c.at("times").get<std::vector<double>>();
  const auto names = c.at("sets").get<std::vector<std::string>>();
  require(times.size() == names.size(), "times and sets must have equal length");
  std::vector<ProjectorSet> sets;
  for (const auto& s : names) sets.push_back(named_set(s));
  const Matrix h = num(c, "h_x") * ops::sigma_x() + num(c, "h_z") * ops::sigma_z();
  return HistorySpec(times, std::move(sets), obs(h));
}

void check_histories(const json& c) {
  history_spec(c);
  named_state(c.at("state").get<std::string>());
  require(idx(c, "probes") >= 10, "probes must be at least 10");
  require(num(c, "tolerance") > 0.0, "tolerance must be positive");
}

FwtReport run_histories(const std::string& scheme, const json& c) {
  check_histories(c);
  const HistorySpec spec = history_spec(c);
  const DecoherenceCheck dc = decoherence_check(
      decoherence_functional(spec, named_state(c.at("state").get<std::string>())),
      num(c, "tolerance"));
  const Observable sx = obs(ops::sigma_x());
  const double theta = num(c, "theta");
  const DynamicalMap m = post_history_controlled_map(spec, [=](const HistoryLabels& z) {
    int sum = 0;
    for (int l : z) sum += l;
    return UnitaryOperator::exp_i(sx, theta * double(sum));
  });
  FwtOptions o;
  o.probes = idx(c, "probes");
  o.seed = seed_of(c);
  FwtReport r = fwt_verdict(scheme, m, o);
  r.details["decoherent"] = dc.is_decoherent;
  r.details["max_offdiag"] = dc.max_offdiag;
  if (!dc.is_decoherent) r.verdict = Verdict::inconsistent_assignment;
  return r;
}

// ---- continuous measurement ----------------------------------------------

SmeConfig sme_config(const json& c) {
  SmeConfig s;
  s.gamma = num(c, "gamma");
  s.q = obs(ops::sigma_z());
  s.h = obs(num(c, "h_x") * ops::sigma_x());
  s.lambda = num(c, "lambda");
  s.f = obs(ops::sigma_y());
  s.dt = num(c, "dt");
  s.steps = idx(c, "steps");
  s.n = idx(c, "n");
  s.seed = seed_of(c);
  s.strip_noise = c.at("strip_noise").get<bool>();
  s.validate();
  return s;
}

void check_alpha(const json& c) {
  const double a = num(c, "alpha");
  require(a > 0.0 && a < 1.0, "alpha must lie in (0, 1)");
  require(c.at("bootstrap_resamples").get<int>() >= 10, "bootstrap_resamples must be at least 10");
}

void check_sme(const json& c) {
  sme_config(c);
  check_alpha(c);
}

FwtReport run_sme(const std::string& scheme, const json& c) {
  const SmeConfig s = sme_config(c);
  check_alpha(c);
  FwtOptions o;
  o.seed = s.seed;
  o.alpha = num(c, "alpha");
  o.bootstrap_resamples = c.at("bootstrap_resamples").get<int>();
  o.mixture_inputs = std::pair{DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 1)};
  return fwt_verdict(scheme, sme_ensemble_map(s), o);
}

// ---- hybrid ---------------------------------------------------------------

HybridSpec hybrid_spec(const json& c, bool measurement) {
  HybridSpec s;
  const json& g = c.at("grid");
  s.grid = HybridGrid{g.at("z_min").get<double>(), g.at("dz").get<double>(),
                      g.at("cells").get<Index>()};
  s.h = obs(num(c, "h_x") * ops::sigma_x());
  s.f = obs(ops::sigma_z());
  s.q = obs(ops::sigma_z());
  s.kappa = num(c, "kappa");
  s.dt = num(c, "dt");
  s.steps = idx(c, "steps");
  s.seed = seed_of(c);
  if (measurement) {
    s.mode = HybridSpec::Mode::measurement;
    s.gamma = num(c, "gamma");
    s.lambda = num(c, "lambda");
    s.strip_noise = c.at("strip_noise").get<bool>();
    s.n = idx(c, "n");
  } else {
    s.mode = HybridSpec::Mode::mean_field;
    s.drift = num(c, "drift");
  }
  s.validate();
  return s;
}

void check_hybrid_meanfield(const json& c) {
  hybrid_spec(c, false);
  require(idx(c, "probes") >= 10, "probes must be at least 10");
}

void check_hybrid_measurement(const json& c) {
  hybrid_spec(c, true);
  check_alpha(c);
  require(num(c, "width") > 0.0, "width must be positive");
}

FwtReport run_hybrid_meanfield(const json& c) {
  check_hybrid_meanfield(c);
  FwtOptions o;
  o.probes = idx(c, "probes");
  o.seed = seed_of(c);
  return fwt_verdict("hybrid-mean-field", hybrid_meanfield_map(hybrid_spec(c, false)), o);
}

FwtReport run_hybrid_measurement(const json& c) {
  check_hybrid_measurement(c);
  const HybridSpec s = hybrid_spec(c, true);
  const RealVector blob = gaussian_density(s.grid, num(c, "center"), num(c, "width"));
  auto embed = [&](Index k) {
    return DensityMatrix::from_matrix(
        hybrid_product(DensityMatrix::basis(2, k), blob, s.grid).block_diagonal());
  };
  FwtOptions o;
  o.seed = s.seed;
  o.alpha = num(c, "alpha");
  o.bootstrap_resamples = c.at("bootstrap_resamples").get<int>();
  o.mixture_inputs = std::pair{embed(0), embed(1)};
  return fwt_verdict("hybrid-measurement", hybrid_measurement_map(s), o);
}

// ---- config merging -------------------------------------------------------

bool same_kind(const json& a, const json& b) {
  if (a.is_number_integer() || a.is_number_unsigned()) {
    return b.is_number_integer() || b.is_number_unsigned();
  }
  if (a.is_number_float()) return b.is_number();
  return a.type() == b.type();
}

void merge(json& base, const json& over, const std::string& path) {
  if (!over.is_object()) throw InvalidInput("config" + (path.empty() ? "" : " '" + path + "'") +
                                            ": expected an object");
  for (const auto& [key, value] : over.items()) {
    const std::string p = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) throw InvalidInput("unknown key '" + p + "'");
    json& slot = base[key];
    if (slot.is_object()) {
      merge(slot, value, p);
    } else if (!same_kind(slot, value)) {
      throw InvalidInput("key '" + p + "': expected " + std::string(slot.type_name()) + ", got " +
                         value.type_name());
    } else {
      slot = slot.is_number_float() ? json(value.get<double>()) : value;
    }
  }
}

json bohm_grid() { return {{"x_min", -10.24}, {"dx", 0.04}, {"n", 512}}; }
json hybrid_grid() { return {{"z_min", -4.0}, {"dz", 0.125}, {"cells", 64}}; }

json sme_defaults(bool stripped) {
  return {{"gamma", 0.25}, {"lambda", 1.0},       {"h_x", 0.0},
          {"dt", 0.01},    {"steps", 100},        {"n", stripped ? 8192 : 5000},
          {"alpha", 0.5},  {"strip_noise", stripped}, {"bootstrap_resamples", 100},
          {"seed", stripped ? 12 : 11}};
}

json history_defaults(bool decoherent) {
  return {{"times", {0.5, 1.0}},
          {"sets", decoherent ? json{"z", "z"} : json{"x", "z"}},
          {"h_x", 0.0},
          {"h_z", decoherent ? 1.0 : 0.0},
          {"state", "0"},
          {"theta", 0.4},
          {"tolerance", 1e-10},
          {"probes", 100},
          {"seed", decoherent ? 4 : 5}};
}

}  // namespace

Registry default_registry() {
  Registry reg;
  reg.push_back({"projective", "projective measurement with outcome-controlled unitary",
                 "standard quantum mechanics",
                 {{"dim", 2}, {"theta", 0.7}, {"probes", 100}, {"seed", 1}},
                 [](const json& c) { projective_parts(c); }, run_projective});
  reg.push_back({"husimi", "Husimi (coherent-state) assignment with displacement feedback",
                 "standard quantum mechanics",
                 {{"cutoff", 20},
                  {"extent", 12.0},
                  {"spacing", 0.25},
                  {"probe_levels", 6},
                  {"gain", 0.3},
                  {"z_scale", 1.0},
                  {"probes", 100},
                  {"seed", 2}},
                 [](const json& c) { husimi_parts(c); }, run_husimi});
  reg.push_back({"mean-field", "mean-field z = tr(q rho) driving a unitary", "mean-field",
                 {{"gain", 1.0}, {"dt", 0.1}, {"z_scale", 1.0}, {"probes", 100}, {"seed", 3}},
                 check_meanfield, run_meanfield});
  reg.push_back({"bohm-instantaneous",
                 "Bohmian ensemble with control on the current position",
                 "Bohmian mechanics",
                 {{"grid", bohm_grid()},
                  {"packet_half_separation", 2.0},
                  {"packet_sigma", 0.7},
                  {"lambda", 0.5},
                  {"t_final", 1.5},
                  {"dt", 0.001},
                  {"n_traj", 10000},
                  {"checkpoints", {500, 1000, 1500}},
                  {"seed", 7}},
                 check_bohm_instantaneous, run_bohm_instantaneous});
  reg.push_back({"bohm-delayed", "Bohmian ensemble with control on a delayed position",
                 "Bohmian mechanics",
                 {{"grid", bohm_grid()},
                  {"packet_center", 0.0},
                  {"packet_sigma", 1.0},
                  {"lambda", 1.0},
                  {"tau", 0.2},
                  {"t_final", 1.0},
                  {"dt", 0.002},
                  {"n_traj", 10000},
                  {"bin_cells", 10},
                  {"seed", 7}},
                 check_bohm_delayed, run_bohm_delayed});
  reg.push_back({"histories-decoherent", "consistent histories, decoherent set, post-history control",
                 "consistent histories", history_defaults(true), check_histories,
                 [](const json& c) { return run_histories("histories-decoherent", c); }});
  reg.push_back({"histories-sx-sz", "consistent histories, sigma_x then sigma_z on |0>",
                 "consistent histories", history_defaults(false), check_histories,
                 [](const json& c) { return run_histories("histories-sx-sz", c); }});
  reg.push_back({"cm-record", "continuous measurement, feedback on the noisy record",
                 "continuous measurement", sme_defaults(false), check_sme,
                 [](const json& c) { return run_sme("cm-record", c); }});
  reg.push_back({"cm-stripped", "continuous measurement, feedback on the noise-free mean",
                 "continuous measurement", sme_defaults(true), check_sme,
                 [](const json& c) { return run_sme("cm-stripped", c); }});
  reg.push_back({"hybrid-mean-field", "hybrid density with mean-field label drift",
                 "hybrid dynamics",
                 {{"grid", hybrid_grid()},
                  {"h_x", 0.5},
                  {"kappa", 0.5},
                  {"drift", 1.0},
                  {"dt", 0.01},
                  {"steps", 100},
                  {"probes", 100},
                  {"seed", 6}},
                 check_hybrid_meanfield, run_hybrid_meanfield});
  reg.push_back({"hybrid-measurement", "hybrid density with label drift on the measurement record",
                 "hybrid dynamics",
                 {{"grid", hybrid_grid()},
                  {"h_x", 0.5},
                  {"kappa", 0.5},
                  {"gamma", 1.0},
                  {"lambda", 0.5},
                  {"strip_noise", false},
                  {"dt", 0.01},
                  {"steps", 100},
                  {"n", 5000},
                  {"center", 0.0},
                  {"width", 0.5},
                  {"alpha", 0.5},
                  {"bootstrap_resamples", 100},
                  {"seed", 29}},
                 check_hybrid_measurement, run_hybrid_measurement});
  return reg;
}

const Experiment* find_experiment(const Registry& reg, const std::string& name) {
  for (const Experiment& e : reg) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

json resolve_config(const Experiment& e, const json& overrides) {
  json cfg = e.defaults;
  if (!overrides.is_null()) merge(cfg, overrides, "");
  try {
    e.validate(cfg);
  } catch (const InvalidInput& err) {
    throw InvalidInput(e.name + ": " + err.what());
  }
  return cfg;
}

RunOutcome run_experiment(const Experiment& e, const json& config) {
  const auto start = std::chrono::steady_clock::now();
  RunOutcome out;
  try {
    out.report = stamp(e.run(config), config);
  } catch (const std::exception& err) {
    FwtReport r;
    r.scheme = e.name;
    r.method = "none";
    r.verdict = Verdict::failed_to_run;
    r.error = err.what();
    r.config = config;
    if (config.contains("seed") && config["seed"].is_number_integer() && config["seed"].get<std::int64_t>() >= 0) {
      r.seed = seed_of(config);
    }
    out.report = std::move(r);
  }
  out.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::vector<FwtReport> verdict_table(const Registry& reg) {
  std::vector<FwtReport> rows;
  rows.reserve(reg.size());
  for (const Experiment& e : reg) {
    rows.push_back(run_experiment(e, resolve_config(e, json::object())).report);
  }
  return rows;
}

}  // namespace fwt
