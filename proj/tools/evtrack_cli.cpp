#include <CLI11.hpp>
#include <iostream>

#include "evtrack/commands.hpp"
#include "evtrack/error.hpp"

int main(int argc, char** argv) {
  using namespace evtrack;
  CLI::App app{"Event-based feature tracking toolkit"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  bool baseline = false;
  int patch_size = 0;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_flag("--baseline", baseline, "use the ICP baseline tracker");
    sub->add_option("--patch-size", patch_size, "patch side in pixels (odd)");
    sub->add_option("--seed", seed, "texture and simulator seed");
  };
  struct Entry {
    const char* name;
    const char* help;
    void (*run)(const RunConfig&, std::ostream&);
  };
  const Entry entries[] = {{"simulate", "simulate events, frames and ground truth", cmd_simulate},
                           {"track", "track features from events and frames", cmd_track},
                           {"evaluate", "score tracks against ground truth", cmd_evaluate},
                           {"profile", "write objective cost profiles around an update", cmd_profile},
                           {"sweep", "patch-size sweep on a simulated scene", cmd_sweep}};
  std::vector<CLI::App*> subs;
  for (const Entry& e : entries) {
    subs.push_back(app.add_subcommand(e.name, e.help));
    add_common(subs.back());
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (!out_dir.empty()) config.paths.out_dir = out_dir;
    if (baseline) config.baseline = true;
    for (CLI::App* s : subs)
      if (s->count("--patch-size")) config.tracker.patch_size = patch_size;
    for (CLI::App* s : subs)
      if (s->count("--seed")) apply_seed(config, seed);
    config.validate();
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (subs[i]->parsed()) entries[i].run(config, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitOk;
}
