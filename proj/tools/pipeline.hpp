#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ergojump/cubes.hpp"
#include "ergojump/operators.hpp"
#include "json.hpp"

namespace ergojump::cli {

// A config problem anchored to a line of the config file.
class ConfigError : public ValidationError {
 public:
  ConfigError(const std::string& file, int line, const std::string& msg)
      : ValidationError(file + ":" + std::to_string(line) + ": error: " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct SpaceSection {
  std::string kind = "group";  // "group", "random_points", "matrix"
  std::string group = "Z_64";
  int radius = 0;              // truncation for infinite groups
  std::size_t n = 0;
  int side = 0;
  std::uint64_t point_seed = 0;
  std::vector<double> dist;    // matrix spaces, row major
  std::vector<double> weights;
  double r0 = 1.0;
};

struct VerifySection {
  std::vector<std::string> suites{"axioms"};
  std::size_t trials = 20;           // martingale and domination functions
  std::size_t gundy_instances = 50;
  double gundy_p = 2.0;
  std::vector<double> lambdas{0.1, 0.5, 1.0};
  double K = 1.0, epsilon = 1.0;     // annular constants for the boundary suite
};

struct OperatorSection {
  double r0 = 1.0;
  std::size_t block_cap = 24;
};

struct ProbeSection {
  bool present = false;
  std::vector<std::string> operators{"S"};
  double p = 2.0;
  std::size_t trials = 200;
  std::vector<Ensemble> ensembles{Ensemble::gaussian, Ensemble::rademacher, Ensemble::sparse};
  std::vector<double> gamma_grid;
  double radius = 1.0;
  double D = 0.0;
  bool bmo = true;
};

struct ExperimentSection {
  bool present = false;
  std::string system = "rotation:Z_1024:a=1";
  std::string function = "balanced";  // or an ensemble name
  double lambda = 0.5;
  std::optional<std::pair<double, double>> upcrossings;
  std::vector<int> radii;
  std::vector<int> convergence_radii;
};

struct Config {
  std::string path;
  nlohmann::json effective;  // parsed config with the seed override applied
  std::string sha256;        // of effective.dump()
  std::uint64_t seed = 0;
  SpaceSection space;
  HKParams hk;
  OperatorSection operators;
  VerifySection verify;
  ProbeSection probe;
  ExperimentSection experiment;
};

std::string sha256_hex(const std::string& data);

// Parses and schema-checks a config; throws ConfigError with the offending line.
Config parse_config(const std::string& text, const std::string& path, std::optional<std::uint64_t> seed);
Config load_config(const std::string& path, std::optional<std::uint64_t> seed);

struct CommandResult {
  int exit_code = 0;                  // 0 iff every exact invariant passed
  std::vector<std::string> failures;  // failing checks, one per line
  std::vector<std::string> files;     // written files, relative to the output dir
};

// command: space, cubes, verify, probe, experiment or run.
// suites overrides verify.suites (or probe operators for `probe`) when non-empty.
CommandResult run_command(const std::string& command, const Config& config, const std::filesystem::path& out,
                          const std::vector<std::string>& suites = {});

// Renders the bundle; returns 0, or 2 when the bundle directory is missing.
int report(const std::filesystem::path& bundle, std::ostream& out, std::ostream& err);
std::string render_report(const std::filesystem::path& bundle);

}  // namespace ergojump::cli
