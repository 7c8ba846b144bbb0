// Batch front-end: crossdefect --config run.ini [--output-dir DIR] [-v] [--threads N]
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "crossdefect/driver.hpp"
#include "crossdefect/run_config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Spectra of periodic operators with crossing line defects"};
  std::string config_path;
  std::string output_dir;
  std::string command;
  int threads = 0;
  app.add_option("-c,--config", config_path, "run configuration (INI)")->required();
  app.add_option("-o,--output-dir", output_dir, "overrides run.output_dir and CROSSDEFECT_OUTPUT_DIR");
  app.add_option("--command", command, "overrides run.command");
  app.add_option("-j,--threads", threads, "thread-count hint")->check(CLI::PositiveNumber);
  auto* verbose = app.add_flag("-v,--verbose", "log progress to stderr (repeat for more)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : crossdefect::exit_status::config;
  }

  crossdefect::RunConfig config;
  try {
    config = crossdefect::load_config(config_path);
    if (!command.empty()) config.command = crossdefect::parse_command(command);
  } catch (const crossdefect::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return crossdefect::exit_status::config;
  }

  crossdefect::RunOptions options;
  if (!output_dir.empty()) options.output_dir = output_dir;
  if (threads > 0) options.threads = threads;
  options.verbosity = static_cast<int>(verbose->count());
  return crossdefect::run(config, options, std::cout, std::cerr);
}
