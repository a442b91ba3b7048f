#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "homokin/harness.hpp"
#include "homokin/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"homokin: multiscale toolkit for homo-energetic flows"};
  app.set_version_flag("--version", homokin::version);

  std::string level, config_path;
  std::vector<std::string> sets;
  app.add_option("level", level, "experiment level: omd|meanfield|dsmc|hydro|compare")
      ->required();
  app.add_option("--config", config_path, "path to the JSON experiment config")->required();
  app.add_option("--set", sets, "dotted-path scalar override key=value (repeatable)");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = homokin::harness::load_config_file(config_path, sets);
    if (cfg.level != level) {
      std::fprintf(stderr, "error: config level '%s' does not match requested level '%s'\n",
                   cfg.level.c_str(), level.c_str());
      return 1;
    }
    const auto result = homokin::harness::run(cfg);
    if (result.report) {
      const auto& r = *result.report;
      std::printf("compare %s vs %s: %s deviation %.6g (tolerance %.6g) -> %s\n", r.arm_a.c_str(),
                  r.arm_b.c_str(), r.metric.c_str(), r.max_deviation, r.tolerance,
                  r.pass ? "pass" : "FAIL");
    }
    std::printf("wrote %zu artifacts to %s\n", result.artifacts.size(), cfg.output_dir.c_str());
    return result.pass ? 0 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
