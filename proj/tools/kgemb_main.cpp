#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kgemb/pipeline.hpp"

using kgemb::ConfigError;
using kgemb::PipelineConfig;
using kgemb::PipelineRunner;
using kgemb::StageError;

int main(int argc, char** argv) {
  CLI::App app{"kgemb: knowledge-graph embedding pipeline (ingest, walk, train, evaluate)"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  long long seed = -1;
  long long workers = -1;
  std::vector<std::string> overrides;

  app.add_option("-c,--config", config_path, "pipeline config file (INI-style sections)");
  app.add_option("-o,--output-dir", output_dir, "output directory (overrides config)");
  app.add_option("--seed", seed, "global seed (overrides config)");
  app.add_option("--workers", workers, "worker threads; 1 is fully reproducible");
  app.add_option("--set", overrides, "override a config value, e.g. --set sgns.dimension=50");

  std::vector<std::string> requested;
  for (const auto& stage : kgemb::pipeline_stage_order()) {
    auto* sub = app.add_subcommand(stage, "run the " + stage + " stage");
    sub->fallthrough();  // let -c/-o/--seed appear after the stage name
    sub->callback([&requested, stage] { requested.push_back(stage); });
  }
  auto* run_all = app.add_subcommand("run", "run the full pipeline");
  run_all->fallthrough();
  run_all->callback([&requested] { requested = kgemb::pipeline_stage_order(); });

  CLI11_PARSE(app, argc, argv);

  try {
    PipelineConfig config =
        config_path.empty() ? PipelineConfig{} : PipelineConfig::parse_file(config_path);
    // precedence: flag > file > default
    if (!output_dir.empty()) config.set("global", "output_dir", output_dir);
    if (seed >= 0) config.set("global", "seed", std::to_string(seed));
    if (workers >= 1) config.set("global", "workers", std::to_string(workers));
    for (const auto& ov : overrides) {
      auto eq = ov.find('=');
      auto dot = ov.find('.');
      if (eq == std::string::npos || dot == std::string::npos || dot > eq)
        throw ConfigError("bad --set override (want section.key=value): " + ov);
      config.set(ov.substr(0, dot), ov.substr(dot + 1, eq - dot - 1), ov.substr(eq + 1));
    }

    PipelineRunner runner(std::move(config), std::cerr);
    runner.run(requested);
    std::cerr << "[kgemb] done; manifest at " << runner.output_dir() << "/manifest.json\n";
    return 0;
  } catch (const ConfigError& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return 1;
  } catch (const StageError& ex) {
    std::cerr << "stage error: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
}
