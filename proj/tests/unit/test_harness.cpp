#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "fwtlab/assignments/assignments.hpp"
#include "fwtlab/assignments/husimi.hpp"
#include "fwtlab/core/ops.hpp"
#include "fwtlab/core/random.hpp"
#include "fwtlab/harness/commands.hpp"
#include "fwtlab/harness/fwt.hpp"
#include "fwtlab/harness/registry.hpp"

using namespace fwt;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

DynamicalMap identity_map(Index d) {
  DynamicalMap m;
  m.dim = d;
  m.evaluate = [](const DensityMatrix& r) { return r; };
  m.linear = [](const Matrix& x) { return x; };
  return m;
}

DynamicalMap dephasing_map() {
  const ProjectorSet p = ProjectorSet::computational(2);
  std::map<int, UnitaryOperator> t;
  t.emplace(0, UnitaryOperator::identity(2));
  t.emplace(1, UnitaryOperator::from_matrix(ops::sigma_x()));
  const ControlPolicy c = ControlPolicy::table(std::move(t));
  DynamicalMap m;
  m.dim = 2;
  m.evaluate = [=](const DensityMatrix& r) { return controlled_average_map(r, p, c); };
  m.linear = [=](const Matrix& x) { return controlled_average_apply(x, p, c); };
  return m;
}

DynamicalMap meanfield_map(double dt) {
  const Observable q = Observable::from_matrix(ops::sigma_z());
  const Observable f = Observable::from_matrix(ops::sigma_y());
  DynamicalMap m;
  m.dim = 2;
  m.evaluate = [=](const DensityMatrix& r) {
    return meanfield_controlled_step(r, q, [](double z) { return z; }, f, dt);
  };
  return m;
}

MixtureLinearityStats stats(double deficit, double bound, double ratio) {
  MixtureLinearityStats s;
  s.deficit = deficit;
  s.bound = bound;
  s.scaling_ratio = ratio;
  return s;
}

Registry cheap_registry() {
  Registry all = default_registry();
  Registry out;
  for (const char* name : {"projective", "mean-field", "histories-decoherent", "histories-sx-sz"}) {
    out.push_back(*find_experiment(all, name));
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("fwtlab-" + tag + "-" + std::to_string(::getpid()))) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("verdict names") {
  for (Verdict v : {Verdict::tangible, Verdict::not_tangible, Verdict::inconsistent_assignment,
                    Verdict::inconclusive, Verdict::failed_to_run}) {
    CHECK(parse_verdict(verdict_name(v)) == v);
  }
  CHECK(verdict_name(Verdict::not_tangible) == "NOT_TANGIBLE");
  CHECK_THROWS_AS(parse_verdict("MAYBE"), InvalidInput);
}

TEST_CASE("linearity deficit") {
  SUBCASE("identity is exactly linear") {
    const DeficitResult d = linearity_deficit(identity_map(3), 20, 1);
    CHECK(d.max_deficit <= 1e-15);
    CHECK(d.probes == 20);
  }
  SUBCASE("controlled dephasing stays linear to rounding") {
    const DeficitResult d = linearity_deficit(dephasing_map(), 100, 2);
    CHECK(d.max_deficit <= 1e-12);
    CHECK(linear_extension_deficit(dephasing_map(), 100, 2).max_deficit <= 1e-12);
  }
  SUBCASE("mean-field feedback is not") {
    const DeficitResult d = linearity_deficit(meanfield_map(0.1), 100, 3);
    CHECK(d.max_deficit > 1e-3);
    CHECK(d.alpha >= 0.1);
    CHECK(d.alpha <= 0.9);
  }
  SUBCASE("guards and error context") {
    CHECK_THROWS_AS(linearity_deficit(identity_map(2), 9, 1), InvalidInput);
    DynamicalMap mc = identity_map(2);
    mc.kind = DynamicalMap::Kind::monte_carlo;
    CHECK_THROWS_AS(linearity_deficit(mc, 10, 1), InvalidInput);
    DynamicalMap bad = identity_map(2);
    bad.evaluate = [](const DensityMatrix&) -> DensityMatrix { throw NumericalFailure("boom"); };
    try {
      linearity_deficit(bad, 10, 1);
      FAIL("expected a failure");
    } catch (const NumericalFailure& e) {
      CHECK(std::string(e.what()).find("probe 0") != std::string::npos);
    }
    CHECK_THROWS_AS(linear_extension_deficit(meanfield_map(0.1), 10, 1), InvalidInput);
  }
}

TEST_CASE("mean-field benchmark against the closed-form rotation") {
  // z = +-1 for |0>, |1>; exp(-i z dt sigma_y) rotates each branch by dt in
  // opposite senses while the equal mixture (z = 0) stays put, so the
  // deficit at alpha = 1/2 is sin(2 dt).
  for (double dt : {0.05, 0.1, 0.3}) {
    const DynamicalMap m = meanfield_map(dt);
    const DensityMatrix a = DensityMatrix::basis(2, 0), b = DensityMatrix::basis(2, 1);
    const Matrix d = m.evaluate(DensityMatrix::mixture(0.5, a, b)).matrix() -
                     0.5 * m.evaluate(a).matrix() - 0.5 * m.evaluate(b).matrix();
    CHECK(std::abs(trace_norm(d) - std::sin(2.0 * dt)) < 1e-12);
  }
}

TEST_CASE("decision rules") {
  SUBCASE("exact") {
    CHECK(exact_rule(0.0, std::nullopt) == Verdict::tangible);
    CHECK(exact_rule(1e-9, std::nullopt) == Verdict::tangible);
    CHECK(exact_rule(5e-9, std::nullopt) == Verdict::inconclusive);
    CHECK(exact_rule(1.1e-8, std::nullopt) == Verdict::not_tangible);
    CpTpReport bad;
    bad.min_eigenvalue = -1e-3;
    CHECK(exact_rule(0.0, bad) == Verdict::inconclusive);
    CpTpReport leaky;
    leaky.tp_deficit = 1e-6;
    CHECK(exact_rule(0.0, leaky) == Verdict::inconclusive);
    CHECK(exact_rule(0.0, CpTpReport{}) == Verdict::tangible);
  }
  SUBCASE("monte carlo") {
    CHECK(monte_carlo_rule(stats(0.01, 0.02, 2.0)) == Verdict::tangible);
    CHECK(monte_carlo_rule(stats(0.01, 0.02, 1.1)) == Verdict::inconclusive);
    CHECK(monte_carlo_rule(stats(0.01, 0.02, 3.5)) == Verdict::inconclusive);
    CHECK(monte_carlo_rule(stats(0.3, 0.02, 1.0)) == Verdict::not_tangible);
    CHECK(monte_carlo_rule(stats(0.3, 0.02, 2.0)) == Verdict::inconclusive);
    CHECK(monte_carlo_rule(stats(0.1, 0.02, 1.0)) == Verdict::inconclusive);
    CHECK(monte_carlo_rule(stats(0.1, 0.02, 1.0), 4.0) == Verdict::not_tangible);
  }
  SUBCASE("distribution") {
    CHECK(distribution_rule(0.01, 0.0136) == Verdict::tangible);
    CHECK(distribution_rule(0.02, 0.0136) == Verdict::inconclusive);
    CHECK(distribution_rule(0.05, 0.0136) == Verdict::not_tangible);
  }
}

TEST_CASE("fwt_verdict on exact maps") {
  FwtOptions o;
  o.seed = 4;
  const FwtReport lin = fwt_verdict("dephasing", dephasing_map(), o);
  CHECK(lin.verdict == Verdict::tangible);
  CHECK(lin.method == "exact");
  REQUIRE(lin.cp.has_value());
  CHECK(*lin.cp);
  CHECK(*lin.cp_min_eigenvalue >= -1e-10);
  CHECK(*lin.tp <= 1e-9);
  CHECK(lin.probes == 100);

  const FwtReport mf = fwt_verdict("mf", meanfield_map(0.1), o);
  CHECK(mf.verdict == Verdict::not_tangible);
  CHECK_FALSE(mf.cp.has_value());
  CHECK(mf.bound == 0.0);
}

TEST_CASE("report JSON round trip and text format") {
  FwtReport r;
  r.scheme = "a,b";
  r.method = "monte_carlo";
  r.deficit = 0.1;
  r.bound = 1.0 / 3.0;
  r.cp = false;
  r.cp_min_eigenvalue = -1e-3;
  r.tp = 2e-17;
  r.verdict = Verdict::inconclusive;
  r.probes = 1;
  r.n = 5000;
  r.seed = 18446744073709551615ull;
  r.details = {{"x", 1.5}};
  r.config = {{"gamma", 0.25}};
  r.series_columns = {"n", "d"};
  r.series = {{1.0, 0.25}, {4.0, 0.125}};
  const FwtReport back = report_from_json(json::parse(report_text(r)));
  CHECK(report_text(back) == report_text(r));
  CHECK(back.bound == r.bound);
  CHECK(back.seed == r.seed);

  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  const std::string csv = table_csv({r});
  CHECK(csv.find("\"a,b\",monte_carlo,INCONCLUSIVE,") != std::string::npos);
  CHECK(csv.find("\r\n") != std::string::npos);
  CHECK(series_csv(r) == "n,d\r\n1,0.25\r\n4,0.125\r\n");

  json missing = to_json(r);
  missing.erase("verdict");
  try {
    report_from_json(missing);
    FAIL("expected a failure");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("verdict") != std::string::npos);
  }
}

TEST_CASE("registry contents and config resolution") {
  const Registry reg = default_registry();
  REQUIRE(reg.size() == 11);
  CHECK(reg.front().name == "projective");
  CHECK(reg.back().name == "hybrid-measurement");
  for (const Experiment& e : reg) CHECK_NOTHROW(resolve_config(e, json::object()));

  const Experiment& bohm = *find_experiment(reg, "bohm-delayed");
  CHECK(find_experiment(reg, "nope") == nullptr);
  CHECK(resolve_config(bohm, {{"grid", {{"n", 256}}}})["grid"]["n"] == 256);
  CHECK(resolve_config(bohm, {{"lambda", 2}})["lambda"].is_number_float());

  auto message = [&](const json& over) {
    try {
      resolve_config(bohm, over);
    } catch (const InvalidInput& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message({{"grid", {{"bogus", 1}}}}).find("grid.bogus") != std::string::npos);
  CHECK(message({{"n_traj", 1.5}}).find("n_traj") != std::string::npos);
  CHECK(message({{"lambda", "big"}}).find("lambda") != std::string::npos);
  CHECK(message({{"tau", 5.0}}).find("bohm-delayed") != std::string::npos);
  CHECK(message({{"grid", {{"n", 100}}}}) != "");
}

TEST_CASE("failed experiments become rows") {
  Experiment e;
  e.name = "broken";
  e.defaults = {{"seed", 3}};
  e.validate = [](const json&) {};
  e.run = [](const json&) -> FwtReport { throw NumericalFailure("diverged"); };
  const RunOutcome o = run_experiment(e, e.defaults);
  CHECK(o.report.verdict == Verdict::failed_to_run);
  CHECK(o.report.error == "diverged");
  CHECK(o.report.seed == 3);
  CHECK(verdict_table({e}).front().scheme == "broken");

  TempDir dir("broken");
  std::ostringstream out, err;
  CHECK(cmd_run({e}, "broken", {}, dir.path, out, err) == kExitFailedToRun);
  CHECK(fs::exists(dir.path / "broken.json"));
}

TEST_CASE("empty registry") {
  const Registry none;
  CHECK(verdict_table(none).empty());
  std::ostringstream out, err;
  CHECK(cmd_list(none, out) == kExitOk);
  CHECK(out.str().empty());
  TempDir dir("empty");
  CHECK(cmd_run(none, "all", {}, dir.path, out, err) == kExitOk);
  CHECK(slurp(dir.path / "table.csv") == table_csv({}));
  std::ostringstream rep;
  CHECK(cmd_report(none, dir.path, true, rep, err) == kExitOk);
  CHECK(rep.str() == table_csv({}));
}

TEST_CASE("rescaling the classical variable with an inverse gain leaves the map unchanged") {
  // z -> c z with power-of-two c and gain / c is exact in floating point, so
  // the composed maps agree to the bit.
  SUBCASE("mean field") {
    const Observable f = Observable::from_matrix(ops::sigma_y());
    for (double c : {0.25, 2.0, 8.0}) {
      const Observable q = Observable::from_matrix(ops::sigma_z());
      const Observable qc = Observable::from_matrix(c * ops::sigma_z());
      for (std::uint64_t s = 0; s < 50; ++s) {
        const DensityMatrix r = random_density_matrix(2, 1 + s % 2, s);
        const Matrix a = meanfield_controlled_step(r, q, [](double z) { return 0.7 * z; }, f, 0.1).matrix();
        const Matrix b =
            meanfield_controlled_step(r, qc, [c](double z) { return (0.7 / c) * z; }, f, 0.1).matrix();
        CHECK(a == b);
      }
    }
    const Registry reg = default_registry();
    const Experiment& e = *find_experiment(reg, "mean-field");
    const FwtReport one = run_experiment(e, resolve_config(e, json::object())).report;
    const FwtReport four = run_experiment(e, resolve_config(e, {{"z_scale", 4.0}})).report;
    CHECK(one.deficit == four.deficit);
    CHECK(one.verdict == four.verdict);
  }
  SUBCASE("husimi") {
    const Index n = 8;
    const CoherentBasis b(n, 5.0, 5.0, 0.5, 0.5);
    const Observable gen = Observable::from_matrix(ops::momentum(n));
    const HusimiChannel plain(
        b, ControlPolicy::exponential([](const ClassicalValue& z) { return 0.3 * z.as_pair().first; },
                                      gen));
    for (double c : {0.5, 4.0}) {
      const HusimiChannel scaled(
          b, ControlPolicy::exponential(
                 [c](const ClassicalValue& z) { return (0.3 / c) * (c * z.as_pair().first); }, gen));
      for (std::uint64_t s = 0; s < 10; ++s) {
        const Matrix x = random_density_matrix(n, 2, s).matrix();
        CHECK(plain.apply_raw(x) == scaled.apply_raw(x));
      }
    }
  }
}

TEST_CASE("histories rows") {
  const Registry reg = default_registry();
  const Experiment& dec = *find_experiment(reg, "histories-decoherent");
  const FwtReport d = run_experiment(dec, resolve_config(dec, json::object())).report;
  CHECK(d.verdict == Verdict::tangible);
  CHECK(d.details["max_offdiag"].get<double>() <= 1e-10);
  const Experiment& sx = *find_experiment(reg, "histories-sx-sz");
  const FwtReport x = run_experiment(sx, resolve_config(sx, json::object())).report;
  CHECK(x.verdict == Verdict::inconsistent_assignment);
  CHECK(std::abs(x.details["max_offdiag"].get<double>() - 0.25) <= 1e-10);
}

TEST_CASE("overrides") {
  const json o = parse_overrides({"grid.n=256", "state=+", "sets=[\"x\",\"x\"]", "flag=true"});
  CHECK(o["grid"]["n"] == 256);
  CHECK(o["state"] == "+");
  CHECK(o["sets"].size() == 2);
  CHECK(o["flag"] == true);
  CHECK_THROWS_AS(parse_overrides({"novalue"}), InvalidInput);
  CHECK_THROWS_AS(parse_overrides({"a..b=1"}), InvalidInput);
}

TEST_CASE("cmd_run and cmd_report round trip") {
  const Registry reg = cheap_registry();
  TempDir dir("roundtrip");
  std::ostringstream out, err;
  REQUIRE(cmd_run(reg, "all", {}, dir.path, out, err) == kExitOk);
  for (const Experiment& e : reg) {
    CHECK(fs::exists(dir.path / (e.name + ".json")));
    CHECK(fs::exists(dir.path / (e.name + ".csv")));
    CHECK(fs::exists(dir.path / (e.name + ".timing.json")));
  }
  CHECK(fs::exists(dir.path / "summary.txt"));

  const std::string in_process = table_csv(verdict_table(reg));
  CHECK(slurp(dir.path / "table.csv") == in_process);
  std::ostringstream rep;
  CHECK(cmd_report(reg, dir.path, true, rep, err) == kExitOk);
  CHECK(rep.str() == in_process);
  std::ostringstream again;
  cmd_report(reg, dir.path, true, again, err);
  CHECK(again.str() == rep.str());

  const json mf = json::parse(slurp(dir.path / "mean-field.json"));
  CHECK(mf["verdict"] == "NOT_TANGIBLE");
  CHECK(mf["config"]["dt"] == 0.1);
  CHECK_FALSE(mf.contains("runtime_seconds"));

  SUBCASE("corrupt files are listed and skipped") {
    std::ofstream(dir.path / "zz.json") << "{";
    std::ostringstream r2, e2;
    CHECK(cmd_report(reg, dir.path, true, r2, e2) == kExitOk);
    CHECK(r2.str() == in_process);
    CHECK(e2.str().find("zz.json") != std::string::npos);
  }
  SUBCASE("missing directory") {
    std::ostringstream r2, e2;
    CHECK(cmd_report(reg, dir.path / "nope", false, r2, e2) == kExitConfig);
  }
}

TEST_CASE("cmd_run configuration errors") {
  const Registry reg = cheap_registry();
  TempDir dir("config");
  std::ostringstream out, err;
  CHECK(cmd_run(reg, "mean-field", {"dtt=0.2"}, dir.path, out, err) == kExitConfig);
  CHECK(err.str().find("dtt") != std::string::npos);
  CHECK(cmd_run(reg, "nothing", {}, dir.path, out, err) == kExitConfig);
  CHECK(cmd_run(reg, "all", {"nothing.x=1"}, dir.path, out, err) == kExitConfig);
  CHECK(cmd_run(reg, "mean-field", {"dt=-1"}, dir.path, out, err) == kExitConfig);

  fs::create_directories(dir.path);
  const fs::path cfg = dir.path / "mf.json";
  std::ofstream(cfg) << R"({"scheme": "mean-field", "params": {"dt": 0.2}, "verbosity": 0,
                            "output_dir": ")" << (dir.path / "from-file").string() << R"("})";
  std::ostringstream e2;
  CHECK(cmd_run(reg, cfg.string(), {"probes=20"}, dir.path, out, e2) == kExitOk);
  CHECK(e2.str().empty());
  const json r = json::parse(slurp(dir.path / "from-file" / "mean-field.json"));
  CHECK(r["config"]["dt"] == 0.2);
  CHECK(r["probes"] == 20);

  const fs::path bad = dir.path / "bad.json";
  std::ofstream(bad) << R"({"scheme": "mean-field", "extra": 1})";
  std::ostringstream e3;
  CHECK(cmd_run(reg, bad.string(), {}, dir.path, out, e3) == kExitConfig);
  CHECK(e3.str().find("extra") != std::string::npos);
}

TEST_CASE("reports are byte-identical under a fixed seed") {
  const Registry reg = default_registry();
  for (const char* name : {"mean-field", "cm-record"}) {
    const Experiment& e = *find_experiment(reg, name);
    json over = json::object();
    if (std::string(name) == "cm-record") over = {{"n", 1024}, {"steps", 20}};
    const json cfg = resolve_config(e, over);
    CHECK(report_text(run_experiment(e, cfg).report) == report_text(run_experiment(e, cfg).report));
  }
}
