#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fwtlab/core/channel.hpp"
#include "fwtlab/core/dynamical_map.hpp"
#include "fwtlab/core/ensemble_stats.hpp"

namespace fwt {

enum class Verdict {
  tangible,
  not_tangible,
  inconsistent_assignment,
  inconclusive,
  failed_to_run
};

std::string_view verdict_name(Verdict v);
/// Inverse of verdict_name; throws InvalidInput.
Verdict parse_verdict(std::string_view s);

/// One row of the verdict table. Bohm rows use deficit = KS distance and
/// bound = KS critical value; Monte-Carlo rows use bound = 3 x combined SE.
struct FwtReport {
  std::string scheme;
  std::string method;  ///< exact | monte_carlo | distribution
  double deficit = 0.0;
  double bound = 0.0;
  std::optional<bool> cp;
  std::optional<double> cp_min_eigenvalue;
  std::optional<double> tp;
  Verdict verdict = Verdict::inconclusive;
  Index probes = 0;
  Index n = 0;
  std::uint64_t seed = 0;
  nlohmann::json details = nlohmann::json::object();
  nlohmann::json config = nlohmann::json::object();
  /// Optional time series, written as a separate CSV.
  std::vector<std::string> series_columns;
  std::vector<std::vector<double>> series;
  std::string error;
};

nlohmann::json to_json(const FwtReport& r);
/// Throws InvalidInput naming the offending field.
FwtReport report_from_json(const nlohmann::json& j);
/// Pretty JSON with a trailing newline; byte-stable for equal reports.
std::string report_text(const FwtReport& r);

/// %.17g
std::string format_double(double x);
std::string table_csv(const std::vector<FwtReport>& rows);
std::string table_text(const std::vector<FwtReport>& rows);
std::string series_csv(const FwtReport& r);

struct DeficitResult {
  double max_deficit = 0.0;
  Index argmax = -1;
  double alpha = 0.0;  ///< mixing weight of the witnessing probe
  Index probes = 0;
};

/// max over probes of || M(a r1 + (1-a) r2) - a M(r1) - (1-a) M(r2) ||_tr
/// with r1, r2 from the map's probe generator and a uniform in [0.1, 0.9].
/// Exact maps only.
DeficitResult linearity_deficit(const DynamicalMap& map, Index probes,
                                std::uint64_t seed);
/// The same probes applied to map.linear, before any renormalization.
DeficitResult linear_extension_deficit(const DynamicalMap& map, Index probes,
                                       std::uint64_t seed);

inline constexpr double kExactTolerance = 1e-9;
inline constexpr double kNotTangibleFactor = 10.0;

/// TANGIBLE iff deficit <= tol and, when given, CP and TP within tol;
/// NOT_TANGIBLE iff deficit > 10 tol.
Verdict exact_rule(double deficit, const std::optional<CpTpReport>& cptp,
                   double tol = kExactTolerance);
/// TANGIBLE iff deficit <= bound and the ladder ratio lies in [4/3, 3];
/// NOT_TANGIBLE iff deficit > factor * bound and the ratio is below 4/3.
Verdict monte_carlo_rule(const MixtureLinearityStats& s,
                         double factor = kNotTangibleFactor);
/// consistent (TANGIBLE) iff ks <= critical; NOT_TANGIBLE iff ks > 3 critical.
Verdict distribution_rule(double ks, double critical);

struct FwtOptions {
  Index probes = 100;
  std::uint64_t seed = 0;
  /// Monte-Carlo maps test one mixture; defaults to two probe states.
  std::optional<std::pair<DensityMatrix, DensityMatrix>> mixture_inputs;
  double alpha = 0.5;
  int bootstrap_resamples = 100;
};

FwtReport fwt_verdict(const std::string& scheme, const DynamicalMap& map,
                      const FwtOptions& opts);

}  // namespace fwt
