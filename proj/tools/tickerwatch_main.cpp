#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "tickerwatch/common.hpp"
#include "tickerwatch/config.hpp"
#include "tickerwatch/fixture.hpp"
#include "tickerwatch/pipeline.hpp"

namespace tw = tickerwatch;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw tw::ConfigError("cannot open config '" + path + "'");
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 42;
  bool strict_paper = false;
};

std::string resolve_run_dir(const CommonOpts& opts) {
  if (!opts.out_dir.empty()) return opts.out_dir;
  return "runs/" + tw::run_stamp(slurp(opts.config_path), opts.seed, opts.strict_paper);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"social-forum market surveillance pipeline"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string scenario_path;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* config_opt = cmd->add_option("-c,--config", opts.config_path, "pipeline config file");
    if (needs_config) config_opt->required();
    cmd->add_option("-o,--out-dir", opts.out_dir, "run directory (default: runs/<stamp>)");
    cmd->add_option("--seed", opts.seed, "seed for synthetic generation");
    cmd->add_flag("--strict-paper", opts.strict_paper,
                  "pin every discretionary choice to its most literal reading");
  };

  CLI::App* ingest = app.add_subcommand("ingest", "parse dumps and market data");
  add_common(ingest, true);
  CLI::App* alert = app.add_subcommand("alert", "run the two-stage alert engine");
  add_common(alert, true);
  CLI::App* eventstudy = app.add_subcommand("eventstudy", "event studies for confirmed alerts");
  add_common(eventstudy, true);
  CLI::App* regress = app.add_subcommand("regress", "abnormal return and volume regressions");
  add_common(regress, true);
  CLI::App* report = app.add_subcommand("report", "summary charts and counts");
  add_common(report, true);
  CLI::App* fixture = app.add_subcommand("fixture", "generate a synthetic scenario");
  add_common(fixture, false);
  fixture->add_option("--scenario", scenario_path, "scenario key-value file (default: built-in)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(tw::ExitCode::config);
  }

  try {
    if (fixture->parsed()) {
      tw::FixtureScenario scenario;
      if (!scenario_path.empty()) scenario = tw::parse_scenario_file(scenario_path);
      std::string out = opts.out_dir.empty() ? "fixture" : opts.out_dir;
      tw::FixtureTruth truth = tw::cmd_fixture(scenario, opts.seed, out);
      std::cout << "fixture written to " << out << " (" << truth.burst_dates.size()
                << " planted bursts, influencer " << truth.influencer << ")\n"
                << "pipeline config: " << truth.config_path << "\n";
      return static_cast<int>(tw::ExitCode::ok);
    }

    tw::PipelineConfig config = tw::load_pipeline_config(opts.config_path, opts.strict_paper);
    std::string run_dir = resolve_run_dir(opts);
    if (ingest->parsed()) tw::cmd_ingest(config, run_dir);
    if (alert->parsed()) tw::cmd_alert(config, run_dir);
    if (eventstudy->parsed()) tw::cmd_eventstudy(config, run_dir);
    if (regress->parsed()) tw::cmd_regress(config, run_dir);
    if (report->parsed()) tw::cmd_report(config, run_dir);
    std::cout << "outputs under " << run_dir << "\n";
    return static_cast<int>(tw::ExitCode::ok);
  } catch (const tw::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return static_cast<int>(tw::ExitCode::config);
  } catch (const tw::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return static_cast<int>(tw::ExitCode::input);
  } catch (const tw::AnalysisError& e) {
    std::cerr << "analysis error: " << e.what() << "\n";
    return static_cast<int>(tw::ExitCode::infeasible);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(tw::ExitCode::failure);
  }
}
