#include <CLI11.hpp>

#include "app/commands.hpp"

int main(int argc, char** argv) {
  using namespace corrvec::app;
  CLI::App app{"Green's functions from variational correction vectors"};
  app.require_subcommand(1);

  CommandOptions o;
  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* cfg = sub->add_option("--config", o.config_path, "run configuration (JSON)");
    if (needs_config) cfg->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "override measurement.seed");
    sub->add_option("--out", o.out, "override the output directory");
    sub->add_flag("--quiet", o.quiet, "no progress messages");
  };

  for (const char* name : {"ground-state", "embed", "oracle", "noise-scan"}) {
    add_common(app.add_subcommand(name), true);
  }
  auto* sweep = app.add_subcommand("sweep", "frequency sweep with checkpoint/resume");
  add_common(sweep, true);
  sweep->add_option("--stop-after", o.stop_after, "stop after this many new solves");

  auto* compare = app.add_subcommand("compare", "difference report of two series files");
  add_common(compare, false);
  compare->add_option("series", o.inputs, "series A and B")->expected(2)->required();
  compare->add_option("--tol", o.tol, "fail when max |dG| exceeds this");
  compare->add_flag("--force", o.force, "accept files without a matching manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }
  return run_command(app.get_subcommands().front()->get_name(), o);
}
