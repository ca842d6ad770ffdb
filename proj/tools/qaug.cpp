// Command-line front end: qaug <command> [--config PATH] [--seed N] [--out DIR] [--epochs N] ...

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qaug/errors.hpp"
#include "qaug/experiment.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> epochs;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON experiment config");
  cmd->add_option("--seed", f.seed, "Run seed (replaces the config's seed list)");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--epochs", f.epochs, "Epochs for the command's model")->check(CLI::NonNegativeNumber);
}

qaug::CliOverrides overrides(const CommonFlags& f) {
  qaug::CliOverrides o;
  if (!f.config.empty()) o.config_path = f.config;
  o.seed = f.seed;
  if (!f.out.empty()) o.out = f.out;
  o.epochs = f.epochs;
  return o;
}

std::vector<std::int64_t> parse_counts(const std::string& text) {
  std::vector<std::int64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw qaug::ConfigError("--error-counts expects comma-separated integers, got '" + text + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid quantum-classical classifier and QGAN data augmentation toolkit"};
  app.require_subcommand(1);

  CommonFlags f;
  auto* train_hqcnn = app.add_subcommand("train-hqcnn", "Train the hybrid classifier and report test metrics");
  auto* train_qgan = app.add_subcommand("train-qgan", "Train one hybrid QGAN per class");
  auto* train_cgan = app.add_subcommand("train-cgan", "Train one classical GAN per class");
  auto* augment = app.add_subcommand("augment", "Build an augmented dataset");
  auto* compare = app.add_subcommand("compare", "Compare augmentation strategies over the seed list");
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate an HQCNN checkpoint on the test subset");
  for (auto* cmd : {train_hqcnn, train_qgan, train_cgan, augment, compare, evaluate}) add_common(cmd, f);

  std::string strategy;
  std::string model_path, generators_path, error_counts;
  augment->add_option("--strategy", strategy, "general, custom or classic")
      ->required()
      ->check(CLI::IsMember({"general", "custom", "classic"}));
  augment->add_option("--model", model_path, "HQCNN checkpoint (trained in-process when omitted)");
  augment->add_option("--generators", generators_path, "Generator checkpoint (trained in-process when omitted)");
  augment->add_option("--error-counts", error_counts, "Per-class error counts overriding the measured profile");
  evaluate->add_option("--model", model_path, "HQCNN checkpoint")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? qaug::kExitOk : qaug::kExitConfig;
  }

  return qaug::run_guarded(
      [&] {
        using qaug::EpochTarget;
        const auto o = overrides(f);
        if (train_hqcnn->parsed()) {
          qaug::cmd_train_hqcnn(qaug::load_experiment_config(o, EpochTarget::Classifier));
        } else if (train_qgan->parsed()) {
          qaug::cmd_train_gan(qaug::load_experiment_config(o, EpochTarget::Generator), qaug::GeneratorKind::Qgan);
        } else if (train_cgan->parsed()) {
          qaug::cmd_train_gan(qaug::load_experiment_config(o, EpochTarget::Generator), qaug::GeneratorKind::Cgan);
        } else if (augment->parsed()) {
          qaug::AugmentInputs in;
          in.strategy = strategy;
          if (!model_path.empty()) in.model_path = model_path;
          if (!generators_path.empty()) in.generators_path = generators_path;
          if (!error_counts.empty()) in.error_counts = parse_counts(error_counts);
          qaug::cmd_augment(qaug::load_experiment_config(o, EpochTarget::Generator), in);
        } else if (compare->parsed()) {
          qaug::cmd_compare(qaug::load_experiment_config(o, EpochTarget::Classifier));
        } else if (evaluate->parsed()) {
          qaug::cmd_evaluate(qaug::load_experiment_config(o, EpochTarget::Classifier), model_path);
        }
      },
      std::cerr);
}
