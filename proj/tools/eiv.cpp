#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <cstdlib>
#include <exception>
#include <iostream>
#include <map>

#include "commands.hpp"

namespace {

bool set_log_level() {
  const char* env = std::getenv("EIV_LOG");
  const std::string v = env ? env : "info";
  static const std::map<std::string, spdlog::level::level_enum> levels{
      {"error", spdlog::level::err}, {"info", spdlog::level::info}, {"debug", spdlog::level::debug}};
  const auto it = levels.find(v);
  if (it == levels.end()) {
    std::cerr << "eiv: EIV_LOG must be one of error, info, debug (got '" << v << "')\n";
    return false;
  }
  spdlog::set_level(it->second);
  spdlog::set_pattern("[%l] %v");
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  if (!set_log_level()) return 1;

  CLI::App app{"Errors-in-variables identification toolkit", "eiv"};
  app.set_version_flag("--version", EIV_VERSION);
  std::string config_path, out = "out";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  app.add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
  app.add_option("--out", out, "output directory")->capture_default_str();
  app.add_option("--seed", seed, "random seed (overrides the config key `seed`)");
  app.add_option("--jobs", jobs, "worker threads for replication sweeps")->check(CLI::Range(1, 1024));
  app.require_subcommand(1);
  app.fallthrough();

  using Cmd = int (*)(eiv::cli::RunContext&);
  const std::vector<std::tuple<std::string, std::string, Cmd>> cmds{
      {"simulate", "draw a sample from the configured DGP", eiv::cli::cmd_simulate},
      {"estimate-nonparam", "recover phi and g by deconvolution", eiv::cli::cmd_estimate_nonparam},
      {"estimate-semiparam", "fit a registered parametric model by GMM", eiv::cli::cmd_estimate_semiparam},
      {"diagnose", "classify a characteristic function and tabulate ill-posedness", eiv::cli::cmd_diagnose},
      {"demo", "run the end-to-end checks on the default DGP", eiv::cli::cmd_demo}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, help, fn] : cmds) subs.push_back(app.add_subcommand(name, help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    eiv::cli::RunContext ctx;
    if (!config_path.empty()) {
      ctx.cfg = eiv::Config::load(config_path);
      ctx.inputs.push_back(config_path);
    }
    if (seed) ctx.cfg.set("seed", std::to_string(*seed));
    ctx.seed = static_cast<std::uint64_t>(ctx.cfg.get_int("seed", 20240601, 0, std::numeric_limits<long long>::max()));
    ctx.out = out;
    ctx.jobs = jobs;
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (subs[i]->parsed()) {
        ctx.command = std::get<0>(cmds[i]);
        spdlog::debug("{}: config hash {}", ctx.command, ctx.cfg.hash());
        return std::get<2>(cmds[i])(ctx);
      }
  } catch (const eiv::AssumptionViolation& e) {
    spdlog::error("assumption violated: {}", e.what());
    return 2;
  } catch (const eiv::ConfigError& e) {
    spdlog::error("config: {}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 1;
}
