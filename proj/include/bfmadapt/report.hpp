#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace bfma {

struct EvalRecord {
  long long env_steps = 0;
  int episode = 0;  // for step-budgeted algorithms this is the gradient-step index
  double mean_return = 0.0;
  double stderr_return = 0.0;
  double improvement_pct = 0.0;
  double cosine_to_zr = 0.0;
};

struct AdaptationReport {
  std::string algorithm;
  std::string task_name;
  uint64_t seed = 0;
  std::vector<EvalRecord> records;
  double zero_shot_return = 0.0;
  double optimal_return = 0.0;
  bool degenerate_inference = false;
  double wall_clock_seconds = 0.0;  // excluded from determinism comparisons
  std::string config_echo;          // filled by the harness
};

// Percent improvement with a guarded denominator for near-zero baselines.
inline double improvement_pct(double adapted, double zero_shot, double optimal) {
  double denom = std::max(std::abs(zero_shot), 0.01 * std::abs(optimal));
  if (denom < 1e-12) denom = 1e-12;
  return (adapted - zero_shot) / denom * 100.0;
}

}  // namespace bfma
