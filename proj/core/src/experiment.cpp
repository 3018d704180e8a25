#include "wdcgan/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "text_io.hpp"
#include "wdcgan/checkpoint.hpp"
#include "wdcgan/error.hpp"
#include "wdcgan/rng.hpp"

namespace wdcgan::experiment {

namespace fs = std::filesystem;
using json = nlohmann::json;
using signal::Window;

namespace {

// Re-raises a library error with the stage that produced it.
template <class F>
auto in_stage(std::string_view stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.detail().rfind("stage ", 0) == 0) throw;
    throw Error(e.kind(), "stage " + std::string(stage) + ": " + e.detail());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, "stage " + std::string(stage) + ": " + e.what());
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorKind::io, "stage " + std::string(stage) + ": " + e.what());
  }
}

void say(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << text;
}

json arch_json(const gan::Architecture& a) {
  return {{"stages", a.stages},           {"top_channels", a.top_channels}, {"kernel", a.kernel},
          {"stride", a.stride},           {"padding", a.padding},           {"leaky_slope", a.leaky_slope},
          {"dropout", a.dropout},         {"dropout_after_stage", a.dropout_after_stage},
          {"norm_eps", a.norm_eps}};
}

gan::Architecture arch_from(const json& j, gan::Architecture a) {
  a.stages = j.value("stages", a.stages);
  a.top_channels = j.value("top_channels", a.top_channels);
  a.kernel = j.value("kernel", a.kernel);
  a.stride = j.value("stride", a.stride);
  a.padding = j.value("padding", a.padding);
  a.leaky_slope = j.value("leaky_slope", a.leaky_slope);
  a.dropout = j.value("dropout", a.dropout);
  a.dropout_after_stage = j.value("dropout_after_stage", a.dropout_after_stage);
  a.norm_eps = j.value("norm_eps", a.norm_eps);
  return a;
}

std::string_view gp_mode_name(gan::GpMode m) { return m == gan::GpMode::interpolated ? "interpolated" : "at_generated"; }

gan::GpMode parse_gp_mode(const std::string& s) {
  if (s == "interpolated") return gan::GpMode::interpolated;
  if (s == "at_generated") return gan::GpMode::at_generated;
  throw Error(ErrorKind::parse, "unknown gp_mode '" + s + "'");
}

std::string_view pairing_name(eval::Pairing p) { return p == eval::Pairing::one_to_one ? "one_to_one" : "all_pairs"; }

eval::Pairing parse_pairing(const std::string& s) {
  if (s == "one_to_one") return eval::Pairing::one_to_one;
  if (s == "all_pairs") return eval::Pairing::all_pairs;
  throw Error(ErrorKind::parse, "unknown pairing '" + s + "'");
}

json config_json(const RunConfig& cfg, bool include_paths) {
  json j;
  if (include_paths) {
    j["paths"] = {{"undamaged_record", cfg.undamaged_record.string()},
                  {"damaged_record", cfg.damaged_record.string()},
                  {"run_dir", cfg.run_dir.string()},
                  {"generator_checkpoint", cfg.generator_checkpoint.string()}};
  }
  j["record_rate"] = cfg.record_rate;
  if (cfg.surrogate) {
    const auto& s = *cfg.surrogate;
    j["surrogate"] = {{"natural_freq_hz", s.natural_freq_hz}, {"damping_ratio", s.damping_ratio},
                      {"damage_freq_factor", s.damage_freq_factor}, {"excitation_std", s.excitation_std},
                      {"duration_s", s.duration_s}, {"rate", s.rate}};
  } else {
    j["surrogate"] = nullptr;
  }
  j["window_len"] = cfg.window_len;
  j["master_seed"] = cfg.master_seed;
  const auto& g = cfg.gan;
  j["gan"] = {{"lr_generator", g.lr_generator},
              {"lr_critic", g.lr_critic},
              {"critic_iterations", g.critic_iterations},
              {"lambda_gp", g.lambda_gp},
              {"batch_size", g.batch_size},
              {"epochs", g.epochs},
              {"latent_channels", g.latent_channels},
              {"noise_sigma0", g.noise_sigma0},
              {"noise_decay", "linear_to_zero"},
              {"gp_mode", gp_mode_name(g.gp_mode)},
              {"arch", arch_json(g.arch)},
              {"beta1", g.beta1},
              {"beta2", g.beta2},
              {"adam_eps", g.adam_eps},
              {"weight_decay", g.weight_decay},
              {"init_std", g.init_std},
              {"checkpoint_interval", g.checkpoint_interval}};
  j["train_gan"] = cfg.train_gan;
  j["synthetic_count"] = cfg.synthetic_count;
  const auto& c = cfg.classifier;
  j["classifier"] = {{"batch_size", c.batch_size}, {"epochs", c.epochs},   {"arch", arch_json(c.arch)},
                     {"beta1", c.beta1},           {"beta2", c.beta2},     {"adam_eps", c.adam_eps},
                     {"weight_decay", c.weight_decay}, {"init_std", c.init_std}};
  j["scenario_learning_rates"] = cfg.scenario_learning_rates;
  json scen = json::array();
  for (const auto& s : cfg.scenarios) {
    scen.push_back({{"id", s.id},
                    {"train_undamaged_real", s.train_undamaged_real},
                    {"train_damaged_real", s.train_damaged_real},
                    {"train_damaged_synth", s.train_damaged_synth},
                    {"test_undamaged_real", s.test_undamaged_real},
                    {"test_damaged_real", s.test_damaged_real}});
  }
  j["scenarios"] = scen;
  j["eval"] = {{"pairing", pairing_name(cfg.eval.pairing)},
               {"pdf_bins", cfg.eval.pdf_bins},
               {"ssim",
                {{"k1", cfg.eval.ssim.k1},
                 {"k2", cfg.eval.ssim.k2},
                 {"dynamic_range", cfg.eval.ssim.dynamic_range},
                 {"duplicate_threshold", cfg.eval.ssim.duplicate_threshold}}}};
  j["emit"] = {{"plots", cfg.emit_plots}, {"reports", cfg.emit_reports}};
  return j;
}

fs::path scenario_report_path(const fs::path& run_dir, int id) {
  return run_dir / "reports" / ("scenario_" + std::to_string(id) + ".json");
}

}  // namespace

void RunConfig::validate() const {
  const bool records = !undamaged_record.empty() || !damaged_record.empty();
  if (records && (undamaged_record.empty() || damaged_record.empty()))
    throw Error(ErrorKind::invalid_argument, "both undamaged_record and damaged_record are needed");
  if (!records && !surrogate) throw Error(ErrorKind::invalid_argument, "neither record files nor surrogate parameters given");
  if (surrogate && !records) surrogate->validate();
  if (!(record_rate > 0.0)) throw Error(ErrorKind::invalid_argument, "record_rate must be > 0");
  if (window_len == 0) throw Error(ErrorKind::invalid_argument, "window_len must be >= 1");
  if (run_dir.empty()) throw Error(ErrorKind::invalid_argument, "run directory is empty");
  gan.validate();
  classifier.validate();
  if (scenarios.empty()) throw Error(ErrorKind::invalid_argument, "no scenarios configured");
  for (const auto& s : scenarios) s.validate();
  for (double lr : scenario_learning_rates)
    if (!(lr > 0.0)) throw Error(ErrorKind::invalid_argument, "scenario learning rates must be > 0");
  eval.ssim.validate();
  if (eval.pdf_bins == 0) throw Error(ErrorKind::invalid_argument, "pdf_bins must be >= 1");
}

classifier::ClassifierConfig RunConfig::classifier_for(const signal::ScenarioSpec& spec) const {
  classifier::ClassifierConfig c = classifier;
  if (spec.id >= 0 && static_cast<std::size_t>(spec.id) < scenario_learning_rates.size())
    c.learning_rate = scenario_learning_rates[static_cast<std::size_t>(spec.id)];
  else
    c.learning_rate = classifier::ClassifierConfig::learning_rate_for(spec.id);
  c.seed = stage_seed(*this, "classifier-" + std::to_string(spec.id));
  return c;
}

std::string to_json(const RunConfig& cfg, bool include_paths) { return config_json(cfg, include_paths).dump(2) + "\n"; }

RunConfig run_config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("run config: ") + e.what());
  }
  RunConfig cfg;
  try {
    if (j.contains("paths")) {
      const auto& p = j["paths"];
      cfg.undamaged_record = p.value("undamaged_record", std::string{});
      cfg.damaged_record = p.value("damaged_record", std::string{});
      cfg.run_dir = p.value("run_dir", cfg.run_dir.string());
      cfg.generator_checkpoint = p.value("generator_checkpoint", std::string{});
    }
    cfg.record_rate = j.value("record_rate", cfg.record_rate);
    if (j.contains("surrogate")) {
      if (j["surrogate"].is_null()) {
        cfg.surrogate.reset();
      } else {
        const auto& s = j["surrogate"];
        signal::SurrogateParams p;
        p.natural_freq_hz = s.value("natural_freq_hz", p.natural_freq_hz);
        p.damping_ratio = s.value("damping_ratio", p.damping_ratio);
        p.damage_freq_factor = s.value("damage_freq_factor", p.damage_freq_factor);
        p.excitation_std = s.value("excitation_std", p.excitation_std);
        p.duration_s = s.value("duration_s", p.duration_s);
        p.rate = s.value("rate", p.rate);
        cfg.surrogate = p;
      }
    }
    cfg.window_len = j.value("window_len", cfg.window_len);
    cfg.master_seed = j.value("master_seed", cfg.master_seed);
    if (j.contains("gan")) {
      const auto& g = j["gan"];
      auto& o = cfg.gan;
      o.lr_generator = g.value("lr_generator", o.lr_generator);
      o.lr_critic = g.value("lr_critic", o.lr_critic);
      o.critic_iterations = g.value("critic_iterations", o.critic_iterations);
      o.lambda_gp = g.value("lambda_gp", o.lambda_gp);
      o.batch_size = g.value("batch_size", o.batch_size);
      o.epochs = g.value("epochs", o.epochs);
      o.latent_channels = g.value("latent_channels", o.latent_channels);
      o.noise_sigma0 = g.value("noise_sigma0", o.noise_sigma0);
      if (g.value("noise_decay", std::string("linear_to_zero")) != "linear_to_zero")
        throw Error(ErrorKind::parse, "noise_decay must be linear_to_zero");
      o.gp_mode = parse_gp_mode(g.value("gp_mode", std::string("interpolated")));
      if (g.contains("arch")) o.arch = arch_from(g["arch"], o.arch);
      o.beta1 = g.value("beta1", o.beta1);
      o.beta2 = g.value("beta2", o.beta2);
      o.adam_eps = g.value("adam_eps", o.adam_eps);
      o.weight_decay = g.value("weight_decay", o.weight_decay);
      o.init_std = g.value("init_std", o.init_std);
      o.checkpoint_interval = g.value("checkpoint_interval", o.checkpoint_interval);
    }
    cfg.train_gan = j.value("train_gan", cfg.train_gan);
    cfg.synthetic_count = j.value("synthetic_count", cfg.synthetic_count);
    if (j.contains("classifier")) {
      const auto& c = j["classifier"];
      auto& o = cfg.classifier;
      o.batch_size = c.value("batch_size", o.batch_size);
      o.epochs = c.value("epochs", o.epochs);
      if (c.contains("arch")) o.arch = arch_from(c["arch"], o.arch);
      o.beta1 = c.value("beta1", o.beta1);
      o.beta2 = c.value("beta2", o.beta2);
      o.adam_eps = c.value("adam_eps", o.adam_eps);
      o.weight_decay = c.value("weight_decay", o.weight_decay);
      o.init_std = c.value("init_std", o.init_std);
    }
    if (j.contains("scenario_learning_rates"))
      cfg.scenario_learning_rates = j["scenario_learning_rates"].get<std::vector<double>>();
    if (j.contains("scenarios")) {
      cfg.scenarios.clear();
      for (const auto& s : j["scenarios"]) {
        signal::ScenarioSpec spec = signal::default_scenario(s.at("id").get<int>());
        spec.train_undamaged_real = s.value("train_undamaged_real", spec.train_undamaged_real);
        spec.train_damaged_real = s.value("train_damaged_real", spec.train_damaged_real);
        spec.train_damaged_synth = s.value("train_damaged_synth", spec.train_damaged_synth);
        spec.test_undamaged_real = s.value("test_undamaged_real", spec.test_undamaged_real);
        spec.test_damaged_real = s.value("test_damaged_real", spec.test_damaged_real);
        cfg.scenarios.push_back(spec);
      }
    }
    if (j.contains("eval")) {
      const auto& e = j["eval"];
      cfg.eval.pairing = parse_pairing(e.value("pairing", std::string("one_to_one")));
      cfg.eval.pdf_bins = e.value("pdf_bins", cfg.eval.pdf_bins);
      if (e.contains("ssim")) {
        const auto& s = e["ssim"];
        cfg.eval.ssim.k1 = s.value("k1", cfg.eval.ssim.k1);
        cfg.eval.ssim.k2 = s.value("k2", cfg.eval.ssim.k2);
        cfg.eval.ssim.dynamic_range = s.value("dynamic_range", cfg.eval.ssim.dynamic_range);
        cfg.eval.ssim.duplicate_threshold = s.value("duplicate_threshold", cfg.eval.ssim.duplicate_threshold);
      }
    }
    if (j.contains("emit")) {
      cfg.emit_plots = j["emit"].value("plots", cfg.emit_plots);
      cfg.emit_reports = j["emit"].value("reports", cfg.emit_reports);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("run config: ") + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const fs::path& path) { return run_config_from_json(read_file(path)); }

std::uint64_t config_hash(const RunConfig& cfg) { return fnv1a(to_json(cfg, false)); }

std::string hex_hash(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t stage_seed(const RunConfig& cfg, std::string_view stage) { return derive_seed(cfg.master_seed, stage); }

metrics::PredictionSet ScenarioReport::predictions() const {
  metrics::PredictionSet p;
  p.threshold = threshold;
  for (const auto& e : entries) p.entries.push_back({e.score, e.label});
  return p;
}

std::string to_json(const ScenarioReport& r) {
  // Hand-written so every real number carries 17 significant digits.
  using detail::format_double;
  std::string s;
  s += "{\n";
  s += "  \"scenario_id\": " + std::to_string(r.scenario_id) + ",\n";
  s += "  \"counts\": {\"train_undamaged_real\": " + std::to_string(r.counts.train_undamaged_real) +
       ", \"train_damaged_real\": " + std::to_string(r.counts.train_damaged_real) +
       ", \"train_damaged_synthetic\": " + std::to_string(r.counts.train_damaged_synthetic) +
       ", \"test_undamaged_real\": " + std::to_string(r.counts.test_undamaged_real) +
       ", \"test_damaged_real\": " + std::to_string(r.counts.test_damaged_real) + "},\n";
  s += "  \"mae\": " + format_double(r.mae) + ",\n";
  s += "  \"classification_accuracy\": " + format_double(r.classification_accuracy) + ",\n";
  s += "  \"average_precision\": " + format_double(r.average_precision) + ",\n";
  s += "  \"threshold\": " + format_double(r.threshold) + ",\n";
  s += "  \"entries\": [";
  for (std::size_t i = 0; i < r.entries.size(); ++i) {
    const auto& e = r.entries[i];
    s += i == 0 ? "\n" : ",\n";
    s += "    {\"index\": " + std::to_string(e.index) + ", \"score\": " + format_double(e.score) +
         ", \"label\": " + std::to_string(e.label) + "}";
  }
  s += r.entries.empty() ? "],\n" : "\n  ],\n";
  s += "  \"seed\": " + std::to_string(r.seed) + ",\n";
  s += "  \"config_hash\": \"" + r.config_hash + "\"\n";
  s += "}\n";
  return s;
}

ScenarioReport scenario_report_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    ScenarioReport r;
    r.scenario_id = j.at("scenario_id").get<int>();
    const auto& c = j.at("counts");
    r.counts.train_undamaged_real = c.at("train_undamaged_real").get<std::size_t>();
    r.counts.train_damaged_real = c.at("train_damaged_real").get<std::size_t>();
    r.counts.train_damaged_synthetic = c.at("train_damaged_synthetic").get<std::size_t>();
    r.counts.test_undamaged_real = c.at("test_undamaged_real").get<std::size_t>();
    r.counts.test_damaged_real = c.at("test_damaged_real").get<std::size_t>();
    r.mae = j.at("mae").get<double>();
    r.classification_accuracy = j.at("classification_accuracy").get<double>();
    r.average_precision = j.at("average_precision").get<double>();
    r.threshold = j.at("threshold").get<double>();
    for (const auto& e : j.at("entries"))
      r.entries.push_back({e.at("index").get<std::size_t>(), e.at("score").get<double>(), e.at("label").get<int>()});
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_hash = j.at("config_hash").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("scenario report: ") + e.what());
  }
}

void save_scenario_report(const fs::path& path, const ScenarioReport& report) { write_file(path, to_json(report)); }

ScenarioReport load_scenario_report(const fs::path& path) { return scenario_report_from_json(read_file(path)); }

void prepare_run_dir(const RunConfig& cfg) {
  in_stage("setup", [&] {
    const fs::path& dir = cfg.run_dir;
    if (fs::exists(dir)) {
      if (!fs::is_directory(dir)) throw Error(ErrorKind::io, dir.string() + " exists and is not a directory");
      if (!fs::is_empty(dir)) {
        if (!cfg.overwrite)
          throw Error(ErrorKind::invalid_argument, "run directory " + dir.string() + " is not empty; pass --overwrite");
        for (const auto& entry : fs::directory_iterator(dir)) fs::remove_all(entry.path());
      }
    }
    for (const char* sub : {"checkpoints", "logs", "eval", "reports", "plots", "data"})
      fs::create_directories(dir / sub);
    write_file(dir / "config.snapshot", to_json(cfg, true));
  });
}

DataPools prepare_data(const RunConfig& cfg) {
  return in_stage("data", [&] {
    signal::AccelRecord undamaged, damaged;
    if (!cfg.undamaged_record.empty()) {
      undamaged = signal::load_record(cfg.undamaged_record, cfg.record_rate, signal::Condition::undamaged);
      damaged = signal::load_record(cfg.damaged_record, cfg.record_rate, signal::Condition::damaged);
    } else {
      signal::SurrogateParams p = *cfg.surrogate;
      p.seed = stage_seed(cfg, "surrogate-undamaged");
      undamaged = signal::generate_surrogate_record(p, signal::Condition::undamaged);
      p.seed = stage_seed(cfg, "surrogate-damaged");
      damaged = signal::generate_surrogate_record(p, signal::Condition::damaged);
    }
    DataPools pools;
    pools.undamaged = signal::normalize_windows(signal::segment_record(undamaged, cfg.window_len));
    pools.damaged = signal::normalize_windows(signal::segment_record(damaged, cfg.window_len));

    // The damaged test windows lead the scenario permutation; everything after
    // them is safe for GAN training.
    std::size_t test_damaged = 0;
    for (const auto& s : cfg.scenarios) test_damaged = std::max(test_damaged, s.test_damaged_real);
    if (test_damaged > pools.damaged.size())
      throw Error(ErrorKind::insufficient_data, "only " + std::to_string(pools.damaged.size()) +
                                                    " damaged windows for " + std::to_string(test_damaged) + " test windows");
    const std::size_t counts[] = {test_damaged, pools.damaged.size() - test_damaged};
    auto parts = signal::shuffle_partition(pools.damaged, derive_seed(stage_seed(cfg, "scenarios"), "damaged"), counts);
    pools.gan_pool = std::move(parts[1]);
    return pools;
  });
}

nn::Network train_gan_stage(const RunConfig& cfg, const DataPools& pools, const Logger& log) {
  return in_stage("train-gan", [&] {
    gan::GanConfig g = cfg.gan;
    g.seed = stage_seed(cfg, "gan");
    g.checkpoint_dir = cfg.run_dir / "checkpoints";
    say(log, "training GAN on " + std::to_string(pools.gan_pool.size()) + " damaged windows for " +
                 std::to_string(g.epochs) + " epochs");
    const std::size_t every = std::max<std::size_t>(1, g.epochs / 10);
    auto result = gan::train_gan(g, pools.gan_pool, pools.gan_pool, [&](const gan::EpochRecord& e) {
      if (e.epoch % every == 0 || e.epoch == 1)
        say(log, "  epoch " + std::to_string(e.epoch) + " critic " + detail::format_double(e.critic_loss, 6) +
                     " generator " + detail::format_double(e.generator_loss, 6) + " fid " +
                     detail::format_double(e.fid, 6));
    });
    result.log.write_csv(cfg.run_dir / "logs" / "gan_train.csv");
    nn::save_checkpoint(cfg.run_dir / "checkpoints" / "generator.ckpt", result.generator, "generator");
    nn::save_checkpoint(cfg.run_dir / "checkpoints" / "critic.ckpt", result.critic, "critic");
    return std::move(result.generator);
  });
}

std::vector<Window> generate_stage(const RunConfig& cfg, nn::Network& generator) {
  return in_stage("generate", [&] {
    auto synthetic = gan::generate(generator, cfg.synthetic_count, stage_seed(cfg, "generate"));
    signal::save_windows(cfg.run_dir / "data" / "synthetic_windows.csv", synthetic);
    return synthetic;
  });
}

ScenarioReport run_scenario(const RunConfig& cfg, const DataPools& pools, std::span<const Window> synthetic,
                            const signal::ScenarioSpec& spec, const Logger& log) {
  const std::string stage = "scenario-" + std::to_string(spec.id);
  return in_stage(stage, [&] {
    const auto data = signal::assemble_scenario(pools.undamaged, pools.damaged, synthetic, spec, stage_seed(cfg, "scenarios"));
    const auto ccfg = cfg.classifier_for(spec);
    say(log, "scenario " + std::to_string(spec.id) + ": " + std::to_string(data.train.size()) + " training windows, lr " +
                 detail::format_double(ccfg.learning_rate, 6));
    auto trained = classifier::train_classifier(ccfg, data.train);
    for (const auto& w : trained.warnings) say(log, "  warning: " + w);

    const auto predictions = classifier::predict(trained.network, data.test);
    ScenarioReport r;
    r.scenario_id = spec.id;
    r.counts = {spec.train_undamaged_real, spec.train_damaged_real, spec.train_damaged_synth, spec.test_undamaged_real,
                spec.test_damaged_real};
    r.mae = metrics::mae(predictions);
    r.classification_accuracy = metrics::classification_accuracy(predictions);
    r.average_precision = metrics::average_precision(predictions);
    r.threshold = predictions.threshold;
    for (std::size_t i = 0; i < predictions.size(); ++i)
      r.entries.push_back({i, predictions.entries[i].score, predictions.entries[i].label});
    r.seed = ccfg.seed;
    r.config_hash = hex_hash(config_hash(cfg));

    const std::string tag = std::to_string(spec.id);
    nn::save_checkpoint(cfg.run_dir / "checkpoints" / ("classifier_" + tag + ".ckpt"), trained.network, "classifier");
    std::ofstream loss_log(cfg.run_dir / "logs" / ("classifier_" + tag + ".csv"));
    loss_log << "epoch,loss\n";
    for (std::size_t e = 0; e < trained.loss_history.size(); ++e)
      loss_log << e + 1 << ',' << detail::format_double(trained.loss_history[e]) << '\n';
    if (cfg.emit_reports) save_scenario_report(scenario_report_path(cfg.run_dir, spec.id), r);
    say(log, "  MAE " + detail::format_double(r.mae, 6) + " CA " + detail::format_double(r.classification_accuracy, 6) +
                 " AP " + detail::format_double(r.average_precision, 6));
    return r;
  });
}

std::vector<ScenarioReport> run_scenarios(const RunConfig& cfg, const Logger& log) {
  in_stage("config", [&] { cfg.validate(); });
  const bool needs_synthetic = std::any_of(cfg.scenarios.begin(), cfg.scenarios.end(),
                                           [](const signal::ScenarioSpec& s) { return s.train_damaged_synth > 0; });
  std::size_t most_synthetic = 0;
  for (const auto& s : cfg.scenarios) most_synthetic = std::max(most_synthetic, s.train_damaged_synth);
  if (needs_synthetic && !cfg.train_gan && cfg.generator_checkpoint.empty())
    throw Error(ErrorKind::missing_synthetic,
                "stage config: scenarios need synthetic windows but GAN training is disabled and no generator "
                "checkpoint is set");
  if (most_synthetic > cfg.synthetic_count)
    throw Error(ErrorKind::missing_synthetic, "stage config: synthetic_count " + std::to_string(cfg.synthetic_count) +
                                                  " is below the " + std::to_string(most_synthetic) + " a scenario needs");

  prepare_run_dir(cfg);
  const DataPools pools = prepare_data(cfg);
  in_stage("data", [&] {
    signal::save_windows(cfg.run_dir / "data" / "undamaged_windows.csv", pools.undamaged);
    signal::save_windows(cfg.run_dir / "data" / "damaged_windows.csv", pools.damaged);
  });

  std::vector<Window> synthetic;
  if (needs_synthetic) {
    nn::Network generator;
    if (!cfg.generator_checkpoint.empty()) {
      generator = in_stage("load-generator", [&] {
        auto ck = nn::load_checkpoint(cfg.generator_checkpoint);
        if (ck.kind != "generator")
          throw Error(ErrorKind::invalid_argument, cfg.generator_checkpoint.string() + " holds a " + ck.kind);
        return std::move(ck.network);
      });
    } else {
      generator = train_gan_stage(cfg, pools, log);
    }
    synthetic = generate_stage(cfg, generator);
    if (cfg.emit_plots) {
      in_stage("eval-gan", [&] {
        write_eval_bundle(cfg.run_dir / "eval", evaluate_generated(synthetic, pools.gan_pool, cfg.eval, stage_seed(cfg, "eval")));
      });
    }
  }

  std::vector<ScenarioReport> reports;
  for (const auto& spec : cfg.scenarios) reports.push_back(run_scenario(cfg, pools, synthetic, spec, log));
  if (cfg.emit_reports) report(cfg.run_dir);
  return reports;
}

EvalBundle evaluate_generated(std::span<const Window> generated, std::span<const Window> real,
                              const EvalOptions& options, std::uint64_t seed) {
  EvalBundle b;
  b.fid = eval::fid_scores(generated, real, options.pairing, seed);
  std::vector<double> fid_values;
  for (const auto& p : b.fid) fid_values.push_back(p.score);
  b.fid_pdf = eval::pdf_estimate(fid_values, options.pdf_bins);
  b.creativity = eval::creativity_scores(generated, real, options.ssim);
  if (generated.size() >= 2) {
    b.diversity = eval::diversity_scores(generated, options.ssim);
    b.diversity_pdf = eval::pdf_estimate(b.diversity, options.pdf_bins);
  }
  const auto [lo, hi] = std::minmax_element(b.fid.begin(), b.fid.end(),
                                            [](const eval::FidPair& a, const eval::FidPair& c) { return a.score < c.score; });
  b.boxplots.emplace_back("lowest_fid_generated", eval::boxplot_stats(generated[lo->generated].samples));
  b.boxplots.emplace_back("lowest_fid_real", eval::boxplot_stats(real[lo->real].samples));
  b.boxplots.emplace_back("highest_fid_generated", eval::boxplot_stats(generated[hi->generated].samples));
  b.boxplots.emplace_back("highest_fid_real", eval::boxplot_stats(real[hi->real].samples));
  return b;
}

void write_eval_bundle(const fs::path& dir, const EvalBundle& b) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "fid_scores.csv");
    if (!out) throw Error(ErrorKind::io, "cannot write " + (dir / "fid_scores.csv").string());
    out << "generated,real,value\n";
    for (const auto& p : b.fid) out << p.generated << ',' << p.real << ',' << detail::format_double(p.score) << '\n';
  }
  eval::write_density_csv(dir / "fid_pdf.csv", b.fid_pdf);
  eval::write_values_csv(dir / "creativity_scores.csv", b.creativity.scores);
  if (!b.diversity.empty()) {
    eval::write_values_csv(dir / "diversity_scores.csv", b.diversity);
    eval::write_density_csv(dir / "diversity_pdf.csv", b.diversity_pdf);
  }
  eval::write_boxplot_csv(dir / "boxplots.csv", b.boxplots);
  std::string summary = "{\n";
  summary += "  \"fid_pairs\": " + std::to_string(b.fid.size()) + ",\n";
  summary += "  \"creativity_pairs\": " + std::to_string(b.creativity.scores.size()) + ",\n";
  summary += "  \"duplicate_count\": " + std::to_string(b.creativity.duplicate_count) + ",\n";
  summary += "  \"diversity_pairs\": " + std::to_string(b.diversity.size()) + "\n}\n";
  write_file(dir / "summary.json", summary);
}

EvalBundle eval_gan(const fs::path& generator_checkpoint, std::span<const Window> real, const fs::path& out_dir,
                    const EvalOptions& options, std::uint64_t seed) {
  return in_stage("eval-gan", [&] {
    if (real.empty()) throw Error(ErrorKind::insufficient_data, "no real windows to evaluate against");
    auto ck = nn::load_checkpoint(generator_checkpoint);
    if (ck.kind != "generator")
      throw Error(ErrorKind::invalid_argument, generator_checkpoint.string() + " holds a " + ck.kind + ", not a generator");
    const auto out_shape = ck.network.spec().output_shape({1, ck.network.spec().layers.front().in_channels, 1});
    if (out_shape.length != real.front().size())
      throw Error(ErrorKind::shape, "generator emits windows of length " + std::to_string(out_shape.length) +
                                        " but the real windows have length " + std::to_string(real.front().size()));
    const auto generated = gan::generate(ck.network, real.size(), derive_seed(seed, "generate"));
    EvalBundle b = evaluate_generated(generated, real, options, derive_seed(seed, "pairing"));
    if (!out_dir.empty()) write_eval_bundle(out_dir, b);
    return b;
  });
}

std::vector<SummaryRow> report(const fs::path& run_dir) {
  return in_stage("report", [&] {
    std::map<int, ScenarioReport> reports;
    const fs::path dir = run_dir / "reports";
    if (fs::is_directory(dir)) {
      for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("scenario_", 0) != 0 || entry.path().extension() != ".json") continue;
        auto r = load_scenario_report(entry.path());
        reports[r.scenario_id] = std::move(r);
      }
    }
    if (reports.empty()) throw Error(ErrorKind::empty_input, "no scenario reports under " + dir.string());

    std::vector<SummaryRow> rows;
    const ScenarioReport* base = reports.count(0) ? &reports.at(0) : nullptr;
    for (const auto& [id, r] : reports) {
      SummaryRow row{id, r.mae, r.classification_accuracy, r.average_precision, {}, {}, {}};
      if (base) {
        row.delta_mae = r.mae - base->mae;
        row.delta_ca = r.classification_accuracy - base->classification_accuracy;
        row.delta_ap = r.average_precision - base->average_precision;
      }
      rows.push_back(row);
    }

    auto cell = [](const std::optional<double>& v) { return v ? detail::format_double(*v) : std::string{}; };
    std::string csv = "scenario_id,mae,classification_accuracy,average_precision,delta_mae,delta_ca,delta_ap\n";
    std::string bars = "scenario_id,mae,classification_accuracy,average_precision\n";
    for (const auto& row : rows) {
      const std::string common = std::to_string(row.scenario_id) + ',' + detail::format_double(row.mae) + ',' +
                                 detail::format_double(row.classification_accuracy) + ',' +
                                 detail::format_double(row.average_precision);
      csv += common + ',' + cell(row.delta_mae) + ',' + cell(row.delta_ca) + ',' + cell(row.delta_ap) + '\n';
      bars += common + '\n';
    }
    write_file(dir / "summary.csv", csv);
    if (fs::is_directory(run_dir / "plots")) write_file(run_dir / "plots" / "scenario_metrics.csv", bars);
    return rows;
  });
}

}  // namespace wdcgan::experiment
