#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "misgan/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"misgan-lab: identifiability analysis, MisGAN training and imputation on "
               "incomplete data"};
  app.require_subcommand(1);

  const std::vector<std::string> tasks = {"identify", "train",     "impute-train",
                                          "impute-run", "eval",    "make-data"};
  const std::vector<std::string> descriptions = {
      "exact recoverability analysis of a discrete masking problem",
      "train a MisGAN (data + mask generators) on incomplete data",
      "train the imputer, jointly or against a frozen generator",
      "apply a trained imputer to a dataset file",
      "compute metrics (FID, RMSE, TV) between two sample sets",
      "mask a complete dataset and write data/truth files"};

  std::string config_path;
  bool force = false;
  std::optional<std::uint64_t> seed;
  std::uint64_t seed_value = 0;

  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    CLI::App* sub = app.add_subcommand(tasks[i], descriptions[i]);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_flag("--force", force, "overwrite existing outputs");
    sub->add_option("--seed", seed_value, "override the config seed");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? misgan::kExitOk : misgan::kExitUsage;
  }

  misgan::RunOptions options;
  for (std::size_t i = 0; i < tasks.size(); ++i)
    if (subs[i]->parsed()) {
      options.task = tasks[i];
      if (subs[i]->count("--seed") > 0) seed = seed_value;
    }
  options.config_path = config_path;
  options.force = force;
  options.seed_override = seed;
  return misgan::run_task(options, std::cout, std::cerr);
}
