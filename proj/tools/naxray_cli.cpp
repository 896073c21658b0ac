// naxray: scenario-driven front end.
//
//   naxray <validate|scatter|factorize|verify|reconstruct> CONFIG.json
//          [--output-dir DIR] [--threads N]
//
// Exit codes: 0 pass, 1 numeric failure, 2 usage or configuration error.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "naxray/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Non-abelian X-ray transform experiments on simple surfaces"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string output_dir;
  int threads = 0;
  for (const auto& name : naxray::command_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " command");
    sub->add_option("config", config_path, "scenario JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--output-dir", output_dir, "directory for outputs (overrides output.directory)");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 1024));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    naxray::ScenarioConfig cfg = naxray::load_scenario(config_path);
    if (!output_dir.empty()) cfg.output.directory = output_dir;
    if (threads > 0) cfg.threads = threads;
    const naxray::CommandResult res = naxray::run_command(command, cfg);
    for (const auto& m : res.messages) std::cerr << command << ": " << m << '\n';
    std::cout << command << ": " << res.verdict << " (" << res.files.size() << " files in "
              << cfg.output.directory << ")\n";
    return res.exit_code;
  } catch (const naxray::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
