#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "atomweaver/atomweaver.hpp"

namespace fs = std::filesystem;
namespace aw = atomweaver;

namespace {

void report(const aw::Scenario& s, const aw::ScenarioReport& rep) {
  std::cout << s.name << " (" << aw::kind_name(s.kind) << ")";
  for (const auto& f : rep.files) std::cout << ' ' << f.string();
  std::cout << '\n';
}

int run_config(const fs::path& config) {
  const auto scenarios = aw::load_scenarios(config);
  const fs::path base = config.has_parent_path() ? config.parent_path() : fs::path(".");
  for (const auto& s : scenarios) report(s, aw::run_scenario(s, base));
  return 0;
}

int run_preset(const std::string& name, const fs::path& out_dir, std::optional<std::uint64_t> seed,
               std::optional<std::size_t> trials) {
  aw::Scenario s = aw::preset(name);
  if (seed) s.mc.seed = *seed;
  if (trials) {
    if (*trials < 1) throw aw::ConfigError(aw::ConfigError::Kind::invalid_parameter, "--trials", "must be >= 1");
    s.mc.trials = *trials;
  }
  report(s, aw::run_scenario(s, out_dir));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Atom array rearrangement simulator and tone synthesizer"};
  app.set_version_flag("--version", std::string("atomweaver ") + ATOMWEAVER_VERSION);
  app.require_subcommand(1);

  fs::path config;
  auto* run = app.add_subcommand("run", "Run every scenario in an INI config file");
  run->add_option("config", config, "Scenario config file")->required();

  std::string preset_name;
  fs::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  auto* pre = app.add_subcommand("preset", "Run a built-in figure preset");
  pre->add_option("name", preset_name, "Preset name")->required();
  pre->add_option("--out", out_dir, "Output directory");
  pre->add_option("--seed", seed, "Master seed");
  pre->add_option("--trials", trials, "Monte Carlo trials");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*run) return run_config(config);
    return run_preset(preset_name, out_dir, seed, trials);
  } catch (const aw::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid parameter: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return 1;
  }
}
