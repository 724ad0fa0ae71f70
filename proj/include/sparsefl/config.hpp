#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sparsefl/control.hpp"
#include "sparsefl/dictionary.hpp"
#include "sparsefl/regression.hpp"
#include "sparsefl/system.hpp"

namespace sparsefl {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SystemConfig {
  std::string kind = "vdp";  // vdp | chain | custom
  double theta = 1.0;
  double sigma = 1.0;
  double mu = 1.0;
  int chain_states = 3;
  std::vector<std::string> f;  // custom only
  std::vector<std::string> g;
  std::string c;

  ControlAffineSystem build() const;
  int n_states() const;
};

struct SimulationConfig {
  double dt = 0.01;
  long steps = 100;  // number of samples, t = 0 included
  std::vector<double> x0{2.0, 0.0};
  std::string derivatives = "exact";  // exact | estimate
};

struct ExcitationConfig {
  std::string kind = "sine_sum";  // zero | constant | sine_sum | chirp
  double value = 0.0;             // constant
  std::vector<double> amplitudes{1.0, 1.0, 1.0};
  std::vector<double> frequencies{2.3, 5.9, 11.7};
  /// Drawn uniformly in [0, 2 pi) from the seed when absent.
  std::optional<std::vector<double>> phases = std::vector<double>{0.0, 1.0, 2.0};
  double chirp_amplitude = 1.0;
  double f0 = 0.1;
  double f1 = 2.0;
  double duration = 1.0;

  InputSignal build(std::uint64_t seed) const;
};

struct ControllerConfig {
  std::optional<std::vector<double>> gains = std::vector<double>{5.0, 4.0};
  std::optional<std::vector<std::complex<double>>> poles;
};

struct ScenarioConfig {
  std::string name;
  std::vector<double> x0;
  ReferenceSignal reference;
};

struct ClosedLoopConfig {
  double dt = 0.01;
  long steps = 2001;
  std::vector<ScenarioConfig> scenarios{
      {"stabilization", {2.0, 0.0}, ReferenceSignal::zero()},
      {"tracking", {2.0, 0.0}, ReferenceSignal::sinusoid(1.0, 1.0, 0.0)},
  };
};

/// Every stage of the pipeline; defaults reproduce the Van der Pol case study.
struct PipelineConfig {
  SystemConfig system;
  SimulationConfig simulation;
  ExcitationConfig excitation;
  LibrarySpec library;
  RegressionConfig regression;
  ControllerConfig controller;
  ClosedLoopConfig closed_loop;
  std::string output_dir = "out";
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
};

/// Missing keys take defaults; unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::string& path);
nlohmann::json config_to_json(const PipelineConfig& cfg);

nlohmann::json library_to_json(const LibrarySpec& spec);
LibrarySpec library_from_json(const nlohmann::json& j, int n_states);
nlohmann::json reference_to_json(const ReferenceSignal& ref);
ReferenceSignal reference_from_json(const nlohmann::json& j);

const char* to_string(ConstraintMode mode);
const char* to_string(SolverMode mode);

}  // namespace sparsefl
