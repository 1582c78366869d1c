#include "cerfgp/commands.hpp"
#include "cerfgp/parallel.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>

int main(int argc, char** argv) {
  using namespace cerfgp;

  CLI::App app{"Exposure-response curves with balance-tuned Gaussian processes"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  for (const auto& name : command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides the config)");
    sub->add_option("--seed", seed, "Random seed (overrides the config)");
    sub->add_option("--threads", threads, "Worker threads, 0 = all cores");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << error_json(Error(ErrorCode::Config, e.what())) << '\n';
    return 2;
  }

  try {
    set_thread_limit(threads);
    RunConfig config = load_config(config_path);
    if (seed) override_seed(config, *seed);
    const std::filesystem::path dir = out_dir.empty() ? config.output : std::filesystem::path(out_dir);
    run_command(app.get_subcommands().front()->get_name(), config, dir);
  } catch (const Error& e) {
    std::cerr << error_json(e) << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    const Error wrapped(ErrorCode::Estimation, e.what());
    std::cerr << error_json(wrapped) << '\n';
    return exit_code_for(wrapped.code());
  }
  return 0;
}
