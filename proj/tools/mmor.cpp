// Command-line driver: snapshots, train, run, verify, report.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mmor/harness/config.hpp"
#include "mmor/harness/pipeline.hpp"
#include "mmor/harness/verify.hpp"
#include "mmor/io.hpp"

namespace fs = std::filesystem;
using namespace mmor;
using mmor::harness::json;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string scope = "all";
};

/// --out beats MMOR_OUTPUT_DIR beats the config's "output" field.
fs::path outputDir(const Options& o, const harness::ExperimentConfig* cfg) {
  if (!o.out.empty()) return o.out;
  if (const char* env = std::getenv("MMOR_OUTPUT_DIR"); env && *env) return env;
  if (cfg) return cfg->output;
  return "out";
}

harness::ExperimentConfig loadConfig(const Options& o) {
  if (o.config.empty()) throw ConfigError("--config is required for this subcommand");
  json j = io::readJson(o.config);
  if (o.seed) j["embedding"]["seed"] = *o.seed;
  return harness::parseConfig(j);
}

int runCommand(const std::string& cmd, const Options& o) {
  if (cmd == "verify") {
    const std::uint64_t seed = o.seed.value_or(1);
    const auto report = harness::runVerify(o.scope, seed, o.threads);
    const json j = harness::toJson(report);
    const fs::path dir = outputDir(o, nullptr);
    io::writeJson(dir / "verification_report.json", j);
    int failed = 0;
    for (const auto& c : report.checks) {
      std::cout << harness::toString(c.status) << "  " << c.name << "  measured=" << io::formatDouble(c.measured)
                << " " << c.comparison;
      if (c.comparison == "<=" || c.comparison == ">=") std::cout << " " << io::formatDouble(c.threshold);
      std::cout << "\n";
      if (c.status == harness::CheckStatus::fail) {
        ++failed;
        if (!c.note.empty()) std::cout << "      " << c.note << "\n";
      }
    }
    std::cout << (failed == 0 ? "all checks passed" : std::to_string(failed) + " check(s) failed") << "\n";
    return failed == 0 ? 0 : 1;
  }
  if (cmd == "report") {
    std::cout << harness::runReport(outputDir(o, nullptr));
    return 0;
  }
  const harness::ExperimentConfig cfg = loadConfig(o);
  const fs::path dir = outputDir(o, &cfg);
  if (cmd == "snapshots") {
    const SnapshotSet s = harness::runSnapshots(cfg, dir, o.threads);
    std::cout << "wrote " << s.count() << " snapshots of dimension " << s.fullDim() << " to "
              << (dir / "snapshots.json").string() << "\n";
    return 0;
  }
  if (cmd == "train") {
    const TrainingReport r = harness::runTrain(cfg, dir);
    std::cout << "trained " << r.family << " embedding, MSE " << io::formatDouble(r.finalMse) << "\n";
    return 0;
  }
  if (cmd == "run") {
    const json m = harness::runRun(cfg, dir, o.threads);
    for (const auto& r : m.at("runs")) {
      std::cout << "mu=" << io::formatDouble(r.at("mu").get<double>()) << "  " << r.at("status").get<std::string>();
      if (r.contains("lInfInTime")) std::cout << "  max error " << io::formatDouble(r.at("lInfInTime").get<double>());
      if (r.contains("error")) std::cout << "  " << r.at("error").get<std::string>();
      std::cout << "\n";
    }
    return m.at("status") == "ok" ? 0 : 1;
  }
  throw ConfigError("unknown subcommand '" + cmd + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model order reduction on manifolds: snapshots, training, ROM runs and verification"};
  app.require_subcommand(1);
  Options opts;
  std::uint64_t seed = 0;
  auto addCommon = [&](CLI::App* sub, bool needsConfig) {
    if (needsConfig) sub->add_option("--config", opts.config, "experiment config (JSON)")->required();
    sub->add_option("--out", opts.out, "output directory");
    sub->add_option("--seed", seed, "random seed override");
    sub->add_option("--threads", opts.threads, "worker threads")->check(CLI::PositiveNumber);
  };
  addCommon(app.add_subcommand("snapshots", "integrate the FOM over the snapshot plan"), true);
  addCommon(app.add_subcommand("train", "fit the embedding to the snapshots"), true);
  addCommon(app.add_subcommand("run", "build the ROM and compare with the FOM at held-out parameters"), true);
  auto* verify = app.add_subcommand("verify", "run the property suites");
  addCommon(verify, false);
  verify->add_option("--scope", opts.scope, "geometry, embeddings, reduction, training, numerics or all")
      ->check(CLI::IsMember(harness::verifyScopes()));
  addCommon(app.add_subcommand("report", "summarize outputs in the output directory"), false);

  CLI11_PARSE(app, argc, argv);
  const CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed") > 0) opts.seed = seed;
  try {
    return runCommand(sub->get_name(), opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
