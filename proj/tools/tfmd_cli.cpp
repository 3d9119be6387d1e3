// SPDX-License-Identifier: Apache-2.0
//
// tfmd: dataset generation, training, loss comparison, modality ablation,
// hyperparameter sweeps and vanishing-point analysis.
//
// Exit status is 0 on success, 2 on command-line misuse, and a distinct
// nonzero code per error class otherwise (see tfmd::exit_code).
#include <CLI11.hpp>

#include <charconv>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tfmd/error.hpp"
#include "tfmd/experiment.hpp"
#include "tfmd/run_config.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> preset;
  std::optional<std::string> loss;
  std::optional<double> beta;
  std::optional<double> gamma;
  std::optional<double> ts;
  std::optional<std::string> variant;
  std::vector<std::string> set;
};

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

tfmd::RunConfig resolve(const Options& o) {
  tfmd::Settings s;
  if (!o.config.empty()) s = tfmd::read_settings(o.config);
  for (const std::string& kv : o.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      tfmd::fail(tfmd::ErrorCode::kUsage, "--set expects key=value, got '" + kv + "'");
    }
    s[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  if (o.seed) s["seed"] = std::to_string(*o.seed);
  if (o.out) s["out"] = *o.out;
  if (o.preset) s["dataset.preset"] = *o.preset;
  if (o.loss) s["loss.kind"] = *o.loss;
  if (o.beta) s["loss.beta"] = shortest(*o.beta);
  if (o.gamma) s["loss.gamma"] = shortest(*o.gamma);
  if (o.ts) s["loss.ts"] = shortest(*o.ts);
  if (o.variant) {
    // A variant list drives ablate; a single variant also selects the model.
    s["ablate.variants"] = *o.variant;
    if (o.variant->find(',') == std::string::npos) s["model.variant"] = *o.variant;
  }
  return tfmd::build_run_config(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Long-tail multimodal drug-pair classification experiments"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  Options o;
  app.add_option("--config", o.config, "Config file of 'section.key = value' lines");
  app.add_option("--seed", o.seed, "Run seed");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--preset", o.preset, "Dataset preset: DDIMDL, MUFFIN, DDI-DB110, DDI-DB171");
  app.add_option("--loss", o.loss, "Loss kind: CE, WCE, FL, CB, BS, LDAM, TFL");
  app.add_option("--beta", o.beta, "TFL tail weight");
  app.add_option("--gamma", o.gamma, "Focusing exponent");
  app.add_option("--ts", o.ts, "Tail threshold in [0, 1]");
  app.add_option("--variant", o.variant, "Modality variant(s), e.g. GS or G,GS,GSTE");
  app.add_option("--set", o.set, "Extra config override key=value (repeatable)");

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  auto* train = app.add_subcommand("train", "Train and evaluate one model");
  auto* compare = app.add_subcommand("compare-losses", "Train once per loss kind");
  auto* ablate = app.add_subcommand("ablate", "Train once per modality variant");
  auto* sweep = app.add_subcommand("sweep", "Grid sweep over beta, ts or gamma");
  auto* analyze = app.add_subcommand("analyze", "Vanishing-point report and curves");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : tfmd::exit_code(tfmd::ErrorCode::kUsage);
  }

  try {
    const tfmd::RunConfig config = resolve(o);
    std::ostream& log = std::cout;
    if (gen->parsed()) {
      tfmd::cmd_gen(config, log);
    } else if (train->parsed()) {
      tfmd::cmd_train(config, log);
    } else if (compare->parsed()) {
      tfmd::cmd_compare_losses(config, log);
    } else if (ablate->parsed()) {
      tfmd::cmd_ablate(config, log);
    } else if (sweep->parsed()) {
      tfmd::cmd_sweep(config, log);
    } else if (analyze->parsed()) {
      tfmd::cmd_analyze(config, log);
    }
    std::cout.flush();
    if (!std::cout) {
      std::cerr << "tfmd: io error: failed writing to stdout\n";
      return tfmd::exit_code(tfmd::ErrorCode::kIo);
    }
    return 0;
  } catch (const tfmd::Error& e) {
    std::cerr << "tfmd: " << tfmd::to_string(e.code()) << ": " << e.what() << '\n';
    return tfmd::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "tfmd: internal error: " << e.what() << '\n';
    return 1;
  }
}
