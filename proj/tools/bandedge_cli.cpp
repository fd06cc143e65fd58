// Command-line front end: runs the experiment pipeline, or one stage of it,
// from a TOML config.
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bandedge/experiment.hpp"
#include "bandedge/parallel.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  unsigned threads = 0;
  bool strict = false;
  bool no_recompute = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "experiment config (TOML)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", flags.out, "output directory (overrides output.directory)");
  cmd->add_option("--threads", flags.threads, "worker threads, 0 = all cores");
  cmd->add_flag("--strict", flags.strict, "treat warnings as failures");
  cmd->add_flag("--no-recompute", flags.no_recompute, "fail instead of recomputing missing upstream artifacts");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Band edge verification experiments"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string stage_name = "all";
  auto* run = app.add_subcommand("run", "run the full pipeline (or one stage with --stage)");
  add_common(run, flags);
  run->add_option("--stage", stage_name, "all, bands, minima, coupling, verify or project-check");

  const std::pair<const char*, const char*> stages[] = {
      {"bands", "band structure -> bands.csv"},
      {"minima", "first band minima -> minima.json, bands.svg"},
      {"coupling", "coupling matrix scan -> coupling.json"},
      {"verify", "minimum location check -> verification.json, verification.csv"},
      {"project-check", "first band projection positivity -> projection.json"},
  };
  for (const auto& [name, help] : stages) add_common(app.add_subcommand(name, help), flags);

  CLI11_PARSE(app, argc, argv);

  const CLI::App* chosen = app.get_subcommands().front();
  try {
    bandedge::RunOptions opts;
    opts.stage = bandedge::parse_stage(chosen->get_name() == "run" ? stage_name : chosen->get_name());
    if (!flags.out.empty()) opts.out_dir = flags.out;
    opts.strict = flags.strict;
    opts.recompute = !flags.no_recompute;
    opts.log = &std::cerr;
    bandedge::set_thread_count(flags.threads);

    const auto config = bandedge::load_experiment_config(flags.config);
    const auto result = bandedge::run_experiment(config, opts);
    for (const auto& f : result.failures) std::cout << "FAIL " << f << '\n';
    if (opts.strict)
      for (const auto& w : result.warnings) std::cout << "FAIL (strict) " << w << '\n';
    std::cout << (result.exit_code == 0 ? "ok" : "failed") << '\n';
    return result.exit_code;
  } catch (const bandedge::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
