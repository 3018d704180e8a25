#pragma once

// Acceleration records, fixed-length windows, and the scenario data splits.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace wdcgan::signal {

enum class Condition { undamaged, damaged };
enum class Provenance { real, synthetic, surrogate };

std::string_view to_string(Condition c) noexcept;
std::string_view to_string(Provenance p) noexcept;
Condition parse_condition(std::string_view text);
Provenance parse_provenance(std::string_view text);

inline constexpr std::size_t kDefaultWindowLength = 1024;
inline constexpr double kDefaultRateHz = 1024.0;

struct AccelRecord {
  std::vector<double> samples;
  double rate = kDefaultRateHz;
  Condition condition = Condition::undamaged;
  Provenance provenance = Provenance::real;

  double duration_s() const noexcept { return static_cast<double>(samples.size()) / rate; }
  void validate() const;
};

struct Window {
  std::vector<double> samples;
  Condition condition = Condition::undamaged;
  Provenance provenance = Provenance::real;
  bool normalized = false;
  bool degenerate = false;        // constant input mapped to zeros by normalization
  std::int64_t source_index = -1; // position in the originating record; -1 when generated

  std::size_t size() const noexcept { return samples.size(); }
};

/// Splits a record into floor(n / window_len) contiguous windows; the tail is dropped.
std::vector<Window> segment_record(const AccelRecord& record, std::size_t window_len);

/// Per-window min-max map onto [-1, +1]. Synthetic windows pass through untouched.
std::vector<Window> normalize_windows(std::span<const Window> windows);
Window normalize_window(const Window& window);

/// Seeded uniform shuffle followed by consecutive slices of the requested sizes.
std::vector<std::vector<Window>> shuffle_partition(std::span<const Window> windows, std::uint64_t seed,
                                                   std::span<const std::size_t> counts);

struct ScenarioSpec {
  int id = 0;
  std::size_t train_undamaged_real = 60;
  std::size_t train_damaged_real = 60;
  std::size_t train_damaged_synth = 0;
  std::size_t test_undamaged_real = 15;
  std::size_t test_damaged_real = 15;

  void validate() const;
};

/// S0..S5: damaged training class moves from all-real to 10 real + 50 synthetic.
ScenarioSpec default_scenario(int id);
std::vector<ScenarioSpec> default_scenarios();

struct ScenarioData {
  std::vector<Window> train;
  std::vector<Window> test;
};

/// Builds one scenario's train/test sets. For a fixed pool and seed the test
/// slices come first in each permutation, so every scenario sees the same test set.
ScenarioData assemble_scenario(std::span<const Window> undamaged_pool, std::span<const Window> damaged_pool,
                               std::span<const Window> synth_pool, const ScenarioSpec& spec, std::uint64_t seed);

struct SurrogateParams {
  double natural_freq_hz = 50.0;
  double damping_ratio = 0.02;
  double damage_freq_factor = 0.85;
  double excitation_std = 1.0;
  double duration_s = 256.0;
  double rate = kDefaultRateHz;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Single-degree-of-freedom oscillator on a base shaken by seeded white noise;
/// returns the absolute acceleration of the mass.
AccelRecord generate_surrogate_record(const SurrogateParams& params, Condition condition);

// Record CSV: header `t,accel`, one sample per row.
AccelRecord load_record(const std::filesystem::path& path, double rate, Condition condition);
void save_record(const std::filesystem::path& path, const AccelRecord& record);

// Window-set CSV: header `condition,provenance,s0,...,s{L-1}`, one window per row.
void save_windows(const std::filesystem::path& path, std::span<const Window> windows);
std::vector<Window> load_windows(const std::filesystem::path& path);

}  // namespace wdcgan::signal
