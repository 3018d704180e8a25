// Command-line front end for the augmentation experiment.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wdcgan/checkpoint.hpp"
#include "wdcgan/error.hpp"
#include "wdcgan/experiment.hpp"
#include "wdcgan/rng.hpp"

namespace fs = std::filesystem;
namespace ex = wdcgan::experiment;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool overwrite = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool out_required) {
  cmd->add_option("--config", flags.config, "Run configuration (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", flags.seed, "Master seed; overrides the configuration");
  auto* out = cmd->add_option("--out", flags.out, "Output directory");
  if (out_required) out->required();
  cmd->add_flag("--overwrite", flags.overwrite, "Replace the contents of a non-empty output directory");
}

ex::RunConfig resolve_config(const CommonFlags& flags) {
  ex::RunConfig cfg = flags.config.empty() ? ex::RunConfig{} : ex::load_run_config(flags.config);
  if (flags.seed) cfg.master_seed = *flags.seed;
  if (!flags.out.empty()) cfg.run_dir = flags.out;
  cfg.overwrite = flags.overwrite;
  return cfg;
}

void log_line(const std::string& msg) { std::cerr << msg << '\n'; }

void ensure_out_dir(const fs::path& dir, bool overwrite) {
  if (fs::exists(dir) && !fs::is_empty(dir) && !overwrite)
    throw wdcgan::Error(wdcgan::ErrorKind::invalid_argument,
                        "output directory " + dir.string() + " is not empty; pass --overwrite");
  fs::create_directories(dir);
}

int run_surrogate(const CommonFlags& flags) {
  ex::RunConfig cfg = resolve_config(flags);
  if (!cfg.surrogate) cfg.surrogate = wdcgan::signal::SurrogateParams{};
  ensure_out_dir(cfg.run_dir, flags.overwrite);
  for (auto condition : {wdcgan::signal::Condition::undamaged, wdcgan::signal::Condition::damaged}) {
    auto params = *cfg.surrogate;
    params.seed = ex::stage_seed(cfg, "surrogate-" + std::string(to_string(condition)));
    const auto record = wdcgan::signal::generate_surrogate_record(params, condition);
    const fs::path path = cfg.run_dir / (std::string(to_string(condition)) + ".csv");
    wdcgan::signal::save_record(path, record);
    log_line("wrote " + path.string() + " (" + std::to_string(record.samples.size()) + " samples)");
  }
  return 0;
}

int run_train_gan(const CommonFlags& flags) {
  ex::RunConfig cfg = resolve_config(flags);
  cfg.validate();
  ex::prepare_run_dir(cfg);
  const auto pools = ex::prepare_data(cfg);
  ex::train_gan_stage(cfg, pools, log_line);
  log_line("generator written to " + (cfg.run_dir / "checkpoints" / "generator.ckpt").string());
  return 0;
}

int run_generate(const CommonFlags& flags, const std::string& checkpoint, std::size_t count) {
  const std::uint64_t seed = flags.seed.value_or(0);
  ensure_out_dir(flags.out, flags.overwrite);
  auto ck = wdcgan::nn::load_checkpoint(checkpoint);
  if (ck.kind != "generator")
    throw wdcgan::Error(wdcgan::ErrorKind::invalid_argument, checkpoint + " holds a " + ck.kind + ", not a generator");
  const auto windows = wdcgan::gan::generate(ck.network, count, wdcgan::derive_seed(seed, "generate"));
  const fs::path path = fs::path(flags.out) / "synthetic_windows.csv";
  wdcgan::signal::save_windows(path, windows);
  log_line("wrote " + std::to_string(windows.size()) + " windows to " + path.string());
  return 0;
}

int run_eval_gan(const CommonFlags& flags, const std::string& checkpoint, const std::string& real_path) {
  const ex::RunConfig cfg = resolve_config(flags);
  ensure_out_dir(flags.out, flags.overwrite);
  const auto real = wdcgan::signal::load_windows(real_path);
  const auto bundle = ex::eval_gan(checkpoint, real, flags.out, cfg.eval, ex::stage_seed(cfg, "eval"));
  log_line(std::to_string(bundle.fid.size()) + " FID scores, " + std::to_string(bundle.creativity.duplicate_count) +
           " duplicates among " + std::to_string(bundle.creativity.scores.size()) + " creativity pairs");
  return 0;
}

int run_run_scenarios(const CommonFlags& flags) {
  const ex::RunConfig cfg = resolve_config(flags);
  const auto reports = ex::run_scenarios(cfg, log_line);
  log_line(std::to_string(reports.size()) + " scenario reports under " + (cfg.run_dir / "reports").string());
  return 0;
}

int run_report(const CommonFlags& flags) {
  const auto rows = ex::report(flags.out);
  std::cout << "scenario  MAE            CA       AP\n";
  for (const auto& r : rows) {
    char line[128];
    std::snprintf(line, sizeof line, "S%-8d %-14.6g %-8.4f %-8.4f\n", r.scenario_id, r.mae, r.classification_accuracy,
                  r.average_precision);
    std::cout << line;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"1-D WGAN-GP augmentation and damage-classification toolkit"};
  app.require_subcommand(1);

  CommonFlags surrogate_flags, train_flags, generate_flags, eval_flags, scenario_flags, report_flags;
  std::string checkpoint, real_path;
  std::size_t count = 256;

  auto* surrogate = app.add_subcommand("surrogate", "Write undamaged and damaged surrogate records");
  add_common(surrogate, surrogate_flags, true);

  auto* train = app.add_subcommand("train-gan", "Train the generator on the damaged training pool");
  add_common(train, train_flags, false);

  auto* gen = app.add_subcommand("generate", "Generate synthetic damaged windows from a checkpoint");
  add_common(gen, generate_flags, true);
  gen->add_option("--checkpoint", checkpoint, "Generator checkpoint")->required()->check(CLI::ExistingFile);
  gen->add_option("--count", count, "Number of windows");

  auto* ev = app.add_subcommand("eval-gan", "FID, SSIM creativity/diversity, densities and box statistics");
  add_common(ev, eval_flags, true);
  ev->add_option("--checkpoint", checkpoint, "Generator checkpoint")->required()->check(CLI::ExistingFile);
  ev->add_option("--real", real_path, "Real damaged windows (window CSV)")->required()->check(CLI::ExistingFile);

  auto* scen = app.add_subcommand("run-scenarios", "Full pipeline over all configured scenarios");
  add_common(scen, scenario_flags, false);

  auto* rep = app.add_subcommand("report", "Summarize the scenario reports of a run directory");
  add_common(rep, report_flags, true);

  CLI11_PARSE(app, argc, argv);

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    if (surrogate->parsed()) return run_surrogate(surrogate_flags);
    if (train->parsed()) return run_train_gan(train_flags);
    if (gen->parsed()) return run_generate(generate_flags, checkpoint, count);
    if (ev->parsed()) return run_eval_gan(eval_flags, checkpoint, real_path);
    if (scen->parsed()) return run_run_scenarios(scenario_flags);
    if (rep->parsed()) return run_report(report_flags);
  } catch (const std::exception& e) {
    std::cerr << "wdcgan " << stage << " failed: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
