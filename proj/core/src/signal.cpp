#include "wdcgan/signal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "text_io.hpp"
#include "wdcgan/error.hpp"
#include "wdcgan/rng.hpp"

namespace wdcgan::signal {

std::string_view to_string(Condition c) noexcept { return c == Condition::damaged ? "damaged" : "undamaged"; }

std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::real: return "real";
    case Provenance::synthetic: return "synthetic";
    case Provenance::surrogate: return "surrogate";
  }
  return "real";
}

Condition parse_condition(std::string_view text) {
  if (text == "undamaged") return Condition::undamaged;
  if (text == "damaged") return Condition::damaged;
  throw Error(ErrorKind::parse, "unknown condition '" + std::string(text) + "'");
}

Provenance parse_provenance(std::string_view text) {
  if (text == "real") return Provenance::real;
  if (text == "synthetic") return Provenance::synthetic;
  if (text == "surrogate") return Provenance::surrogate;
  throw Error(ErrorKind::parse, "unknown provenance '" + std::string(text) + "'");
}

void AccelRecord::validate() const {
  if (samples.empty()) throw Error(ErrorKind::empty_input, "record has no samples");
  if (!(rate > 0.0)) throw Error(ErrorKind::invalid_argument, "sampling rate must be positive");
}

std::vector<Window> segment_record(const AccelRecord& record, std::size_t window_len) {
  if (window_len == 0) throw Error(ErrorKind::invalid_argument, "window length must be >= 1");
  const std::size_t count = record.samples.size() / window_len;
  std::vector<Window> out;
  out.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    const auto first = record.samples.begin() + static_cast<std::ptrdiff_t>(w * window_len);
    Window win;
    win.samples.assign(first, first + static_cast<std::ptrdiff_t>(window_len));
    win.condition = record.condition;
    win.provenance = record.provenance;
    win.source_index = static_cast<std::int64_t>(w);
    out.push_back(std::move(win));
  }
  return out;
}

Window normalize_window(const Window& window) {
  if (window.samples.empty()) throw Error(ErrorKind::invalid_argument, "cannot normalize an empty window");
  if (window.provenance == Provenance::synthetic) return window;
  Window out = window;
  const auto [lo_it, hi_it] = std::minmax_element(window.samples.begin(), window.samples.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (hi == lo) {
    std::fill(out.samples.begin(), out.samples.end(), 0.0);
    out.degenerate = true;
  } else {
    const double span = hi - lo;
    for (double& x : out.samples) x = std::clamp(2.0 * (x - lo) / span - 1.0, -1.0, 1.0);
  }
  out.normalized = true;
  return out;
}

std::vector<Window> normalize_windows(std::span<const Window> windows) {
  std::vector<Window> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(normalize_window(w));
  return out;
}

std::vector<std::vector<Window>> shuffle_partition(std::span<const Window> windows, std::uint64_t seed,
                                                   std::span<const std::size_t> counts) {
  const std::size_t needed = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (needed > windows.size()) {
    throw Error(ErrorKind::insufficient_data, "requested " + std::to_string(needed) + " windows from a pool of " +
                                                  std::to_string(windows.size()));
  }
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<Window>> out;
  out.reserve(counts.size());
  std::size_t cursor = 0;
  for (const std::size_t n : counts) {
    std::vector<Window> subset;
    subset.reserve(n);
    for (std::size_t i = 0; i < n; ++i) subset.push_back(windows[order[cursor++]]);
    out.push_back(std::move(subset));
  }
  return out;
}

void ScenarioSpec::validate() const {
  if (id < 0 || id > 5) throw Error(ErrorKind::invalid_argument, "scenario id must be in 0..5");
  if (train_damaged_real + train_damaged_synth != train_undamaged_real)
    throw Error(ErrorKind::invalid_argument, "scenario " + std::to_string(id) + " training classes are not balanced");
  if (id == 0 && train_damaged_synth != 0)
    throw Error(ErrorKind::invalid_argument, "scenario 0 must not use synthetic windows");
}

ScenarioSpec default_scenario(int id) {
  if (id < 0 || id > 5) throw Error(ErrorKind::invalid_argument, "scenario id must be in 0..5");
  ScenarioSpec spec;
  spec.id = id;
  if (id > 0) {
    spec.train_damaged_real = 10 * static_cast<std::size_t>(id);
    spec.train_damaged_synth = 60 - spec.train_damaged_real;
  }
  return spec;
}

std::vector<ScenarioSpec> default_scenarios() {
  std::vector<ScenarioSpec> out;
  for (int id = 0; id <= 5; ++id) out.push_back(default_scenario(id));
  return out;
}

ScenarioData assemble_scenario(std::span<const Window> undamaged_pool, std::span<const Window> damaged_pool,
                               std::span<const Window> synth_pool, const ScenarioSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (spec.train_damaged_synth > 0 && synth_pool.empty())
    throw Error(ErrorKind::missing_synthetic,
                "scenario " + std::to_string(spec.id) + " needs synthetic windows but the synthetic pool is empty");

  const std::size_t u_counts[] = {spec.test_undamaged_real, spec.train_undamaged_real};
  const std::size_t d_counts[] = {spec.test_damaged_real, spec.train_damaged_real};
  auto u = shuffle_partition(undamaged_pool, derive_seed(seed, "undamaged"), u_counts);
  auto d = shuffle_partition(damaged_pool, derive_seed(seed, "damaged"), d_counts);

  ScenarioData data;
  data.test = std::move(u[0]);
  data.test.insert(data.test.end(), d[0].begin(), d[0].end());
  data.train = std::move(u[1]);
  data.train.insert(data.train.end(), d[1].begin(), d[1].end());
  if (spec.train_damaged_synth > 0) {
    const std::size_t s_counts[] = {spec.train_damaged_synth};
    auto s = shuffle_partition(synth_pool, derive_seed(seed, "synthetic"), s_counts);
    data.train.insert(data.train.end(), s[0].begin(), s[0].end());
  }
  return data;
}

void SurrogateParams::validate() const {
  if (!(rate > 0.0)) throw Error(ErrorKind::invalid_argument, "rate must be positive");
  if (!(natural_freq_hz > 0.0)) throw Error(ErrorKind::invalid_argument, "natural frequency must be positive");
  if (natural_freq_hz >= rate / 2.0)
    throw Error(ErrorKind::aliasing_risk, "natural frequency must be below the Nyquist frequency rate/2");
  if (!(damping_ratio > 0.0 && damping_ratio < 1.0))
    throw Error(ErrorKind::invalid_argument, "damping ratio must be in (0, 1)");
  if (!(damage_freq_factor > 0.0 && damage_freq_factor <= 1.0))
    throw Error(ErrorKind::invalid_argument, "damage frequency factor must be in (0, 1]");
  if (!(excitation_std >= 0.0)) throw Error(ErrorKind::invalid_argument, "excitation std must be >= 0");
  const double n = duration_s * rate;
  if (!(n >= 1.0) || std::abs(n - std::round(n)) > 1e-9)
    throw Error(ErrorKind::invalid_argument, "duration x rate must be a positive integer sample count");
}

AccelRecord generate_surrogate_record(const SurrogateParams& params, Condition condition) {
  params.validate();
  const double freq = params.natural_freq_hz * (condition == Condition::damaged ? params.damage_freq_factor : 1.0);
  const double omega = 2.0 * M_PI * freq;
  const double c = 2.0 * params.damping_ratio * omega;
  const double k = omega * omega;
  const double dt = 1.0 / params.rate;
  const auto n = static_cast<std::size_t>(std::llround(params.duration_s * params.rate));
  // Discard the start-up transient: ten decay time constants, at least one second.
  const auto burn_in = static_cast<std::size_t>(std::ceil(std::max(1.0, 10.0 / (params.damping_ratio * omega)) * params.rate));

  Rng rng(params.seed);
  std::normal_distribution<double> force(0.0, params.excitation_std);

  double x = 0.0;
  double v = 0.0;
  AccelRecord rec;
  rec.rate = params.rate;
  rec.condition = condition;
  rec.provenance = Provenance::surrogate;
  rec.samples.reserve(n);
  for (std::size_t i = 0; i < burn_in + n; ++i) {
    // x is the displacement relative to the base; the mass's absolute
    // acceleration is the restoring term alone.
    const double f = force(rng);
    const auto accel = [&](double xs, double vs) { return -f - c * vs - k * xs; };
    if (i >= burn_in) rec.samples.push_back(-c * v - k * x);
    // Classical RK4 with the force held over the step.
    const double k1x = v, k1v = accel(x, v);
    const double k2x = v + 0.5 * dt * k1v, k2v = accel(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v);
    const double k3x = v + 0.5 * dt * k2v, k3v = accel(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v);
    const double k4x = v + dt * k3v, k4v = accel(x + dt * k3x, v + dt * k3v);
    x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  }
  return rec;
}

AccelRecord load_record(const std::filesystem::path& path, double rate, Condition condition) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open record file " + path.string());
  AccelRecord rec;
  rec.rate = rate;
  rec.condition = condition;
  rec.provenance = Provenance::real;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    if (line_no == 1 && text == "t,accel") continue;
    const auto fields = detail::split(text, ',');
    if (fields.size() > 2)
      throw Error(ErrorKind::parse, path.string() + ": line " + std::to_string(line_no) + ": expected `t,accel`");
    const auto value = detail::parse_double(fields.back());
    if (!value || (fields.size() == 2 && !detail::parse_double(fields.front())))
      throw Error(ErrorKind::parse, path.string() + ": line " + std::to_string(line_no) + ": malformed row '" +
                                        std::string(text) + "'");
    rec.samples.push_back(*value);
  }
  if (rec.samples.empty()) throw Error(ErrorKind::empty_input, path.string() + " contains no samples");
  if (!(rate > 0.0)) throw Error(ErrorKind::invalid_argument, "sampling rate must be positive");
  return rec;
}

void save_record(const std::filesystem::path& path, const AccelRecord& record) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write record file " + path.string());
  out << "t,accel\n";
  for (std::size_t i = 0; i < record.samples.size(); ++i) {
    out << detail::format_double(static_cast<double>(i) / record.rate) << ','
        << detail::format_double(record.samples[i]) << '\n';
  }
  if (!out) throw Error(ErrorKind::io, "failed writing " + path.string());
}

void save_windows(const std::filesystem::path& path, std::span<const Window> windows) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write window file " + path.string());
  const std::size_t len = windows.empty() ? 0 : windows.front().size();
  out << "condition,provenance";
  for (std::size_t i = 0; i < len; ++i) out << ",s" << i;
  out << '\n';
  for (const auto& w : windows) {
    if (w.size() != len) throw Error(ErrorKind::shape, "window set has mixed lengths");
    out << to_string(w.condition) << ',' << to_string(w.provenance);
    for (double x : w.samples) out << ',' << detail::format_double(x);
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::io, "failed writing " + path.string());
}

std::vector<Window> load_windows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open window file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::empty_input, path.string() + " is empty");
  const auto header = detail::split(detail::trim(line), ',');
  if (header.size() < 3 || header[0] != "condition" || header[1] != "provenance")
    throw Error(ErrorKind::parse, path.string() + ": line 1: expected `condition,provenance,s0,...`");
  const std::size_t len = header.size() - 2;
  std::vector<Window> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    const auto fields = detail::split(text, ',');
    const auto where = path.string() + ": line " + std::to_string(line_no);
    if (fields.size() != len + 2) throw Error(ErrorKind::parse, where + ": expected " + std::to_string(len + 2) + " fields");
    Window w;
    w.condition = parse_condition(fields[0]);
    w.provenance = parse_provenance(fields[1]);
    w.samples.reserve(len);
    for (std::size_t i = 0; i < len; ++i) {
      const auto v = detail::parse_double(fields[i + 2]);
      if (!v) throw Error(ErrorKind::parse, where + ": malformed sample '" + std::string(fields[i + 2]) + "'");
      w.samples.push_back(*v);
    }
    w.normalized = std::all_of(w.samples.begin(), w.samples.end(), [](double x) { return x >= -1.0 && x <= 1.0; });
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace wdcgan::signal
