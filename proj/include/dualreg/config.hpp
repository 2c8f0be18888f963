#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dualreg {

/// How proxy points are matched during the dual-space solve.
enum class ProxyAssignment {
  kWhole,     ///< union of all neighborhoods, global closest point
  kPerPatch,  ///< each anchor's neighborhood matched only within its own patch
};

/// Every tunable of the pipeline. Length fields set to 0 are derived from
/// the cloud resolution by `resolve()` (tau, beta, voxel_size) or from
/// gamma (delta = 2 gamma).
struct PipelineConfig {
  double tau = 0.0;          ///< length consistency; consensus uses D_L < 2 tau
  double delta = 0.0;        ///< tangential-distance bound
  double gamma = 0.1;        ///< inlier residual threshold
  double alpha = 0.2;        ///< consensus acceptance factor, (0,1]
  double beta = 0.0;         ///< proxy neighborhood radius
  double voxel_size = 0.0;   ///< downsampling edge for proxy clouds
  double lambda_conf = 0.99; ///< RANSAC confidence
  double lambda_bal = 0.05;  ///< anchor/proxy balance in the dual-space objective
  double eps_term = 0.001;
  int max_dual_iters = 200;
  double subset_fraction = 0.4;
  double voxel_multiple = 5.0;
  double tau_multiple = 3.0;
  double beta_multiple = 50.0;
  std::uint64_t rng_seed = 0;

  ProxyAssignment proxy_assignment = ProxyAssignment::kWhole;
  int normal_k = 20;
  /// Coarse filter stops after this many draws per correspondence.
  int coarse_cap_multiple = 10;
  int refine_max_iters = 100000;

  /// Copy with every auto (zero) length filled in.
  PipelineConfig resolve(double resolution) const;

  /// Throws dualreg::Error when a field is outside its domain. Auto lengths
  /// are accepted unless `require_resolved`.
  void validate(bool require_resolved = true) const;

  /// Applies `key=value`; throws dualreg::Error naming the key on failure.
  void set(std::string_view key, std::string_view value);
  void set(std::string_view assignment);

  static std::vector<std::string> keys();
};

/// Success thresholds attached to a preset.
struct SuccessCriteria {
  double max_rotation_deg = 15.0;
  double max_translation = 0.30;
};

struct Preset {
  std::string name;
  PipelineConfig config;
  SuccessCriteria criteria;
};

/// indoor: gamma 0.1 m, alpha 0.2, lambda_bal 0.05, RE < 15 deg, TE < 0.3 m.
Preset indoor_preset();
/// indoor_low_overlap: indoor with alpha 0.95.
Preset indoor_low_overlap_preset();
/// outdoor: gamma 0.6 m, alpha 0.9, lambda_bal 1.0, RE < 5 deg, TE < 0.6 m.
Preset outdoor_preset();
/// Looks a preset up by name; throws dualreg::Error for unknown names.
Preset preset_by_name(std::string_view name);

}  // namespace dualreg
