// fpp: command-line driver for the experiments and verification suites.
//
//   fpp <kind> [--config PATH] [--seed INT] [--threads INT] [--out DIR]
//   fpp verify [--suites a,b,...] ...
//   fpp run --config PATH          (kind taken from the file)
//
// Exit codes: 0 success, 1 failed invariants, 2 configuration error,
// 3 sizing/margin error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "fpp/experiments.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out;
  std::vector<std::string> suites;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "base seed");
  cmd->add_option("--threads", f.threads, "worker threads (default: FPP_THREADS or hardware concurrency)");
  cmd->add_option("--out", f.out, "output directory");
}

int execute(fpp::ExperimentKind kind, const Flags& f) {
  fpp::ExperimentConfig c = fpp::default_config(kind);
  if (!f.config.empty()) c = fpp::apply_config_json(c, fpp::read_config_file(f.config));
  if (f.seed) c.seed = *f.seed;
  if (f.threads) c.threads = *f.threads;
  if (!f.out.empty()) c.out_dir = f.out;
  if (!f.suites.empty()) c.suites = f.suites;

  const fpp::RunResult r = fpp::run_experiment(c);
  std::printf("%s: %zu files in %s, hard violations %ld, boundary flags %ld\n", fpp::to_string(kind).c_str(),
              r.files.size() + 1, c.out_dir.string().c_str(), r.hard_violations, r.boundary_flags);
  for (const fpp::Failure& fail : r.failures) {
    std::fprintf(stderr, "FAIL [%s] %s: %s\n", fail.suite.c_str(), fail.invariant.c_str(), fail.detail.c_str());
  }
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"First-passage percolation experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fpp::code_version());

  std::vector<std::pair<CLI::App*, fpp::ExperimentKind>> commands;
  Flags flags;
  for (fpp::ExperimentKind kind : fpp::all_experiment_kinds()) {
    CLI::App* cmd = app.add_subcommand(fpp::to_string(kind), kind == fpp::ExperimentKind::kVerify
                                                                  ? "run verification suites"
                                                                  : "run the " + fpp::to_string(kind) + " experiment");
    add_common(cmd, flags);
    if (kind == fpp::ExperimentKind::kVerify) {
      cmd->add_option("--suites", flags.suites, "oracle, passage, busemann, graph, curl, corrupt-dist")->delimiter(',');
    }
    commands.emplace_back(cmd, kind);
  }
  CLI::App* run = app.add_subcommand("run", "run the experiment named by the config file's \"kind\"");
  add_common(run, flags);
  run->get_option("--config")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto doc = fpp::read_config_file(flags.config);
      if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string()) {
        throw fpp::ConfigError(flags.config + ": \"kind\" must name the experiment");
      }
      return execute(fpp::kind_from_string(doc["kind"].get<std::string>()), flags);
    }
    for (const auto& [cmd, kind] : commands) {
      if (cmd->parsed()) return execute(kind, flags);
    }
  } catch (const fpp::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const fpp::PreconditionError& e) {
    std::fprintf(stderr, "sizing error: %s\n", e.what());
    std::fprintf(stderr, "increase geometry.domain_half_width or leave it 0 to derive it from the schedule\n");
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
