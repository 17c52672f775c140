#include "fwtlab/harness/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include <unistd.h>

namespace fwt {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Job {
  const Experiment* experiment;
  json config;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InvalidInput("cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const Experiment& lookup(const Registry& reg, const std::string& name) {
  const Experiment* e = find_experiment(reg, name);
  if (!e) throw InvalidInput("unknown experiment '" + name + "'");
  return *e;
}

bool looks_like_file(const std::string& target) {
  return target.size() > 5 && target.substr(target.size() - 5) == ".json";
}

struct Plan {
  std::vector<Job> jobs;
  fs::path out_dir;
  int verbosity = 1;
  bool whole_table = false;
};

Plan plan_run(const Registry& reg, const std::string& target,
              const std::vector<std::string>& overrides, fs::path out_dir) {
  Plan plan;
  plan.out_dir = std::move(out_dir);
  json over = parse_overrides(overrides);
  if (target == "all") {
    plan.whole_table = true;
    for (const auto& [key, _] : over.items()) lookup(reg, key);
    for (const Experiment& e : reg) {
      const json mine = over.contains(e.name) ? over[e.name] : json::object();
      plan.jobs.push_back({&e, resolve_config(e, mine)});
    }
    return plan;
  }
  if (looks_like_file(target)) {
    json file;
    try {
      file = json::parse(read_file(target));
    } catch (const json::parse_error& e) {
      throw InvalidInput(target + ": " + e.what());
    }
    if (!file.is_object()) throw InvalidInput(target + ": expected an object");
    for (const auto& [key, _] : file.items()) {
      if (key != "scheme" && key != "params" && key != "output_dir" && key != "verbosity") {
        throw InvalidInput(target + ": unknown key '" + key + "'");
      }
    }
    if (!file.contains("scheme") || !file["scheme"].is_string()) {
      throw InvalidInput(target + ": key 'scheme' must be a string");
    }
    const Experiment& e = lookup(reg, file["scheme"].get<std::string>());
    json params = file.value("params", json::object());
    if (!params.is_object()) throw InvalidInput(target + ": key 'params' must be an object");
    params.merge_patch(over);
    if (file.contains("output_dir")) {
      if (!file["output_dir"].is_string()) {
        throw InvalidInput(target + ": key 'output_dir' must be a string");
      }
      plan.out_dir = file["output_dir"].get<std::string>();
    }
    if (file.contains("verbosity")) {
      if (!file["verbosity"].is_number_integer()) {
        throw InvalidInput(target + ": key 'verbosity' must be an integer");
      }
      plan.verbosity = file["verbosity"].get<int>();
    }
    try {
      plan.jobs.push_back({&e, resolve_config(e, params)});
    } catch (const InvalidInput& err) {
      throw InvalidInput(target + ": params: " + err.what());
    }
    return plan;
  }
  const Experiment& e = lookup(reg, target);
  plan.jobs.push_back({&e, resolve_config(e, over)});
  return plan;
}

void write_row(const fs::path& dir, const RunOutcome& o) {
  const FwtReport& r = o.report;
  write_atomic(dir / (r.scheme + ".json"), report_text(r));
  write_atomic(dir / (r.scheme + ".csv"), table_csv({r}));
  if (!r.series_columns.empty()) write_atomic(dir / (r.scheme + ".series.csv"), series_csv(r));
  const json timing = {{"scheme", r.scheme},
                       {"runtime_seconds", o.runtime_seconds},
                       {"finished_at", utc_now()}};
  write_atomic(dir / (r.scheme + ".timing.json"), timing.dump(2) + "\n");
}

}  // namespace

fs::path default_output_dir() {
  const char* env = std::getenv("FWTLAB_OUT");
  return (env && *env) ? fs::path(env) : fs::path("fwtlab-out");
}

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << content;
    f.flush();
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

json parse_overrides(const std::vector<std::string>& assignments) {
  json out = json::object();
  for (const std::string& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw InvalidInput("override '" + a + "' is not of the form key.path=value");
    }
    const std::string path = a.substr(0, eq), text = a.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    json* node = &out;
    std::size_t start = 0;
    while (true) {
      const auto dot = path.find('.', start);
      const std::string key = path.substr(start, dot - start);
      if (key.empty()) throw InvalidInput("override '" + a + "' has an empty key segment");
      if (dot == std::string::npos) {
        (*node)[key] = value;
        break;
      }
      json& next = (*node)[key];
      if (!next.is_object()) next = json::object();
      node = &next;
      start = dot + 1;
    }
  }
  return out;
}

int cmd_list(const Registry& reg, std::ostream& out) {
  char line[512];
  for (const Experiment& e : reg) {
    std::snprintf(line, sizeof line, "%-22s %-26s %s\n", e.name.c_str(),
                  ("[" + e.topic + "]").c_str(), e.description.c_str());
    out << line;
  }
  return kExitOk;
}

int cmd_run(const Registry& reg, const std::string& target,
            const std::vector<std::string>& overrides, fs::path out_dir, std::ostream& out,
            std::ostream& err) {
  Plan plan;
  try {
    plan = plan_run(reg, target, overrides, std::move(out_dir));
    fs::create_directories(plan.out_dir);
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  std::vector<FwtReport> rows;
  bool failed = false;
  for (const Job& job : plan.jobs) {
    if (plan.verbosity > 0) err << "running " << job.experiment->name << " ..." << std::flush;
    const RunOutcome o = run_experiment(*job.experiment, job.config);
    if (plan.verbosity > 0) {
      char buf[64];
      std::snprintf(buf, sizeof buf, " %.1f s\n", o.runtime_seconds);
      err << buf;
    }
    failed |= o.report.verdict == Verdict::failed_to_run;
    try {
      write_row(plan.out_dir, o);
    } catch (const std::exception& e) {
      err << "cannot write artifacts for " << o.report.scheme << ": " << e.what() << "\n";
      failed = true;
    }
    rows.push_back(o.report);
  }
  const std::string text = table_text(rows);
  if (plan.whole_table) {
    try {
      write_atomic(plan.out_dir / "table.csv", table_csv(rows));
      write_atomic(plan.out_dir / "summary.txt", text);
    } catch (const std::exception& e) {
      err << "cannot write table: " << e.what() << "\n";
      failed = true;
    }
  }
  out << text;
  return failed ? kExitFailedToRun : kExitOk;
}

int cmd_report(const Registry& reg, const fs::path& dir, bool csv, std::ostream& out,
               std::ostream& err) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    err << "not a directory: " << dir.string() << "\n";
    return kExitConfig;
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const fs::path& p = entry.path();
    const std::string name = p.filename().string();
    if (!entry.is_regular_file() || p.extension() != ".json") continue;
    if (name.size() > 12 && name.substr(name.size() - 12) == ".timing.json") continue;
    files.push_back(p);
  }
  std::sort(files.begin(), files.end());

  struct Seen {
    FwtReport report;
    fs::file_time_type written;
    fs::path file;
  };
  std::map<std::string, Seen> by_scheme;
  for (const fs::path& p : files) {
    FwtReport r;
    try {
      r = report_from_json(json::parse(read_file(p)));
    } catch (const std::exception& e) {
      err << "skipped " << p.filename().string() << ": " << e.what() << "\n";
      continue;
    }
    const auto written = fs::last_write_time(p);
    auto it = by_scheme.find(r.scheme);
    if (it == by_scheme.end()) {
      const std::string key = r.scheme;
      by_scheme.emplace(key, Seen{std::move(r), written, p});
      continue;
    }
    const bool newer = written > it->second.written;
    err << "warning: scheme " << r.scheme << " appears in " << it->second.file.filename().string()
        << " and " << p.filename().string() << "; keeping "
        << (newer ? p : it->second.file).filename().string() << "\n";
    if (newer) it->second = Seen{std::move(r), written, p};
  }

  std::vector<FwtReport> rows;
  for (const Experiment& e : reg) {
    auto it = by_scheme.find(e.name);
    if (it == by_scheme.end()) continue;
    rows.push_back(std::move(it->second.report));
    by_scheme.erase(it);
  }
  for (auto& [_, seen] : by_scheme) rows.push_back(std::move(seen.report));
  out << (csv ? table_csv(rows) : table_text(rows));
  return kExitOk;
}

}  // namespace fwt
