#pragma once

#include <iosfwd>
#include <string>

#include "sparsefl/config.hpp"

namespace sparsefl {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitInfeasible = 3,
  kExitDivergence = 4,
  kExitRelativeDegree = 5,
};

/// Stages of the end-to-end run. Each reads and writes files in `out_dir`,
/// reports problems on `log` prefixed with the stage name and returns an
/// exit code.
int cmd_simulate(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& log);
int cmd_identify(const PipelineConfig& cfg, const std::string& data_path, const std::string& out_dir, std::ostream& log);
int cmd_lie(const std::string& model_path, const std::string& out_dir, std::ostream& log);
int cmd_synthesize(const PipelineConfig& cfg, const std::string& model_path, const std::string& out_dir,
                   std::ostream& log);
int cmd_closedloop(const PipelineConfig& cfg, const std::string& controller_path, const std::string& out_dir,
                   std::ostream& log);
/// simulate, identify, lie, synthesize and closedloop in sequence, then a
/// summary (summary.json, summary.txt).
int cmd_pipeline(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& log);

}  // namespace sparsefl
