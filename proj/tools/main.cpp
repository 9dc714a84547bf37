#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "clstream/checkpoint.hpp"
#include "clstream/config.hpp"
#include "clstream/error.hpp"
#include "clstream/experiment.hpp"
#include "clstream/fetch.hpp"

#ifndef CLSTREAM_DEFAULT_MANIFEST
#define CLSTREAM_DEFAULT_MANIFEST "data/mnist_manifest.txt"
#endif

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

int cmd_run(const std::string& config_path, const std::optional<std::string>& resume,
            const std::optional<std::string>& output, const std::optional<std::size_t>& stop_after) {
  cl::ExperimentConfig config;
  try {
    config = cl::load_config(config_path);
  } catch (const cl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  }
  cl::RunOptions opts;
  if (resume) opts.resume = *resume;
  if (output) opts.output_dir = *output;
  opts.stop_after = stop_after;
  opts.progress = &std::cout;
  const cl::RunResult r = cl::run_experiment(config, opts);
  std::cout << "trained " << r.next_experience << " of " << r.n_experiences << " experiences; metrics in "
            << r.output_dir.string() << "\n";
  if (r.checkpoint) std::cout << "checkpoint: " << r.checkpoint->string() << "\n";
  return 0;
}

int cmd_inspect(const std::string& path) {
  const cl::Checkpoint c = cl::load_checkpoint(path);
  char digest[32];
  std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(c.config_digest));
  std::cout << "format_version: " << c.version << "\n"
            << "config_digest: " << digest << "\n"
            << "next_experience: " << c.next_experience << "\n"
            << "n_experiences: " << c.n_experiences << "\n"
            << "accuracy_matrix: " << c.matrix.entries().size() << " entries, " << c.matrix.rows() << " rows\n";
  for (std::size_t k = 0; k < c.matrix.rows(); ++k) {
    std::cout << "  R[" << k << ",:]";
    for (std::size_t i = 0; i < c.n_experiences; ++i) {
      const auto v = c.matrix.get(k, i);
      char cell[32];
      if (v)
        std::snprintf(cell, sizeof cell, " %.4f", *v);
      else
        std::snprintf(cell, sizeof cell, " %6s", "-");
      std::cout << cell;
    }
    std::cout << "\n";
  }
  for (const cl::LoggerOffset& o : c.logger_offsets) std::cout << "log " << o.file << ": " << o.bytes << " bytes\n";
  return 0;
}

int cmd_fetch(const std::string& dir, const std::string& manifest) {
  cl::fetch_files(cl::load_manifest(manifest), dir, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continual-learning experiment runner"};
  app.require_subcommand(1);

  std::string config_path, ckpt_path, fetch_dir, manifest = CLSTREAM_DEFAULT_MANIFEST;
  std::optional<std::string> resume, output;
  std::optional<std::size_t> stop_after;

  CLI::App* run = app.add_subcommand("run", "Train and evaluate the configured experiment");
  run->add_option("--config", config_path, "Experiment config file")->required();
  run->add_option("--resume", resume, "Continue from a checkpoint");
  run->add_option("--output", output, "Output directory (overrides output_dir)");
  run->add_option("--stop-after", stop_after, "Stop once this many experiences are done, as if interrupted");

  CLI::App* inspect = app.add_subcommand("inspect", "Summarise a checkpoint");
  inspect->add_option("--ckpt", ckpt_path, "Checkpoint file")->required();

  CLI::App* fetch = app.add_subcommand("fetch-mnist", "Download and verify the MNIST IDX files");
  fetch->add_option("--dir", fetch_dir, "Target directory")->required();
  fetch->add_option("--manifest", manifest, "URL and checksum manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, resume, output, stop_after);
    if (inspect->parsed()) return cmd_inspect(ckpt_path);
    return cmd_fetch(fetch_dir, manifest);
  } catch (const cl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
