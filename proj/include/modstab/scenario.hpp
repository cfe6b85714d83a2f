#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "modstab/algebra.hpp"
#include "modstab/bimap.hpp"
#include "modstab/modular.hpp"
#include "modstab/stabilizer.hpp"
#include "modstab/verifier.hpp"

namespace modstab {

using json = nlohmann::json;

inline constexpr std::string_view kToolVersion = "0.3.1";
inline constexpr std::string_view kReportSchema = "modstab-report/1";

struct PsiConfig {
  bool calibrate = false;
  double theta = 1.0;
  double p = 0.5;
  std::optional<double> L;
  Direction direction = Direction::ascending;
  InequalityKind calibrate_against = InequalityKind::A;
  std::size_t calibration_probes = 10000;
  double safety = 1.25;
};

/// Validated scenario. Everything except theta calibration is resolved here.
struct Scenario {
  std::string name;
  std::size_t dim = 0;
  std::optional<AlgebraSpec> algebra;
  std::vector<ModularSpec> modulars;  // modulars.front() is rho
  std::optional<BiMap> map;
  std::optional<PsiConfig> psi;
  Scalar s{0.5, 0.0};
  RhoTildeWeight weight = RhoTildeWeight::psi_xx_z0;
  std::size_t probe_count = 512;
  double radius = 1.0;
  std::uint64_t seed = 0;
  StabilizeConfig iteration;  // probes filled at run time
  std::vector<std::string> checks;
  std::size_t samples = 10000;  // modular-core checks
  std::size_t pairs = 100;      // rho_tilde_contraction
  bool biderivation_envelope = true;
};

/// Throws ConfigError on any schema or invariant violation.
Scenario parse_scenario(const json& config);

std::vector<std::string> known_checks();
std::vector<std::string> list_builtin_scenarios();
/// Config document of a builtin scenario; ConfigError for unknown names.
json builtin_scenario(std::string_view name);

ModularSpec parse_modular(const json& j);
/// "norm", "power:<p>", "orlicz:<preset>" (optionally ",kappa=<k>").
ModularSpec parse_modular_shorthand(std::string_view text);

struct RunOptions {
  std::optional<std::uint64_t> seed_override;
  std::optional<std::size_t> probes_override;
  std::optional<std::string> timestamp;  // default: current UTC time
};

struct RunResult {
  std::vector<json> records;  // header first
  int exit_code = 0;
};

/// validate -> psi law -> stabilize (when a listed check needs D) -> checks.
/// Configuration errors produce the header plus one failing config record
/// and exit code 2.
RunResult run_scenario(const json& config, const RunOptions& opts = {});
RunResult run_scenario_file(const std::string& path, const RunOptions& opts = {});

/// 2 if a config record failed, else 1 if any record failed, else 0.
int exit_code_of(const std::vector<json>& records);

std::string config_hash(const json& config);
std::string to_jsonl(const std::vector<json>& records);

}  // namespace modstab
