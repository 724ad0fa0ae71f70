#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sparsefl/config.hpp"
#include "sparsefl/pipeline.hpp"

using namespace sparsefl;

namespace {

struct Common {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::string poles;
  std::string gains;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON configuration file (defaults when omitted)");
  cmd->add_option("--out", c.out, "output directory (overrides output_dir)");
  cmd->add_option("--seed", c.seed, "random seed for drawn excitation phases");
  cmd->add_option("--lambda", c.lambda, "sparsity threshold");
  cmd->add_option("--poles", c.poles, "closed-loop poles, e.g. \"-2,-6\" or \"-2+1i,-2-1i\"");
  cmd->add_option("--gains", c.gains, "error-dynamics gains a_0,...,a_{r-1}, e.g. \"5,4\"");
}

PipelineConfig resolve(const Common& c) {
  PipelineConfig cfg = c.config_path.empty() ? PipelineConfig{} : load_config(c.config_path);
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.seed) cfg.seed = *c.seed;
  if (c.lambda) cfg.regression.lambda = *c.lambda;
  if (!c.poles.empty() && !c.gains.empty()) throw ConfigError("give either --poles or --gains, not both");
  try {
    if (!c.poles.empty()) {
      cfg.controller.poles = parse_poles(c.poles);
      cfg.controller.gains.reset();
    }
    if (!c.gains.empty()) {
      cfg.controller.gains = parse_gains(c.gains);
      cfg.controller.poles.reset();
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse identification of control-affine systems and feedback-linearizing control"};
  app.require_subcommand(1);

  Common common;
  std::string data_path, model_path, controller_path;

  auto* simulate = app.add_subcommand("simulate", "integrate the configured system and write dataset.csv");
  auto* identify = app.add_subcommand("identify", "sparse regression on a dataset; writes model.json");
  auto* lie = app.add_subcommand("lie", "Lie chain, relative degree and normal form of a model");
  auto* synth = app.add_subcommand("synthesize", "feedback-linearizing controller from a model");
  auto* closed = app.add_subcommand("closedloop", "simulate the true plant under a controller");
  auto* pipeline = app.add_subcommand("pipeline", "run every stage and write a summary");
  auto* defaults = app.add_subcommand("defaults", "print the default configuration");

  for (auto* cmd : {simulate, identify, lie, synth, closed, pipeline}) add_common(cmd, common);
  identify->add_option("--data", data_path, "dataset CSV (default <out>/dataset.csv)");
  lie->add_option("--model", model_path, "model JSON (default <out>/model.json)");
  synth->add_option("--model", model_path, "model JSON (default <out>/model.json)");
  closed->add_option("--controller", controller_path, "controller JSON (default <out>/controller.json)");

  CLI11_PARSE(app, argc, argv);

  if (defaults->parsed()) {
    std::cout << config_to_json(PipelineConfig{}).dump(2) << "\n";
    return kExitOk;
  }

  PipelineConfig cfg;
  try {
    cfg = resolve(common);
  } catch (const ConfigError& e) {
    std::cerr << "[config] " << e.what() << "\n";
    return kExitConfig;
  }
  const std::string out = cfg.output_dir;
  auto or_default = [&](const std::string& given, const char* name) {
    return given.empty() ? out + "/" + name : given;
  };

  if (simulate->parsed()) return cmd_simulate(cfg, out, std::cerr);
  if (identify->parsed()) return cmd_identify(cfg, or_default(data_path, "dataset.csv"), out, std::cerr);
  if (lie->parsed()) return cmd_lie(or_default(model_path, "model.json"), out, std::cerr);
  if (synth->parsed()) return cmd_synthesize(cfg, or_default(model_path, "model.json"), out, std::cerr);
  if (closed->parsed()) return cmd_closedloop(cfg, or_default(controller_path, "controller.json"), out, std::cerr);
  return cmd_pipeline(cfg, out, std::cerr);
}
