#pragma once

#include "dualreg/coarse_filter.hpp"
#include "dualreg/dual_space.hpp"
#include "dualreg/config.hpp"
#include "dualreg/refine.hpp"
#include "dualreg/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dualreg {

struct RegistrationJob {
  OrientedPointCloud source;
  OrientedPointCloud target;
  CorrespondenceSet correspondences;
  PipelineConfig config;
  std::optional<RigidTransform> ground_truth;
};

/// A failure inside one pipeline stage; `stage()` names it.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct StageStats {
  std::size_t initial = 0;   ///< |C_0|
  std::size_t coarse = 0;    ///< |C_I|
  std::size_t refined = 0;   ///< |C_II|
  std::optional<double> initial_ir, coarse_ir, refined_ir;
  std::size_t coarse_iterations = 0;
  std::size_t refine_iterations = 0;
  std::size_t dual_iterations = 0;
  bool coarse_low_confidence = false;
  bool dual_converged = false;
  bool dual_stalled = false;
  std::size_t proxy_source = 0;
  std::size_t proxy_target = 0;
  double resolution = 0.0;
  double sigma = 0.0;
};

/// Wall-clock milliseconds; excluded from determinism guarantees.
struct StageTimings {
  double coarse_ms = 0.0;
  double refine_ms = 0.0;
  double proxy_ms = 0.0;
  double dual_ms = 0.0;
  double total_ms = 0.0;
};

struct PoseMetrics {
  double rotation_deg = 0.0;
  double translation = 0.0;
  double rmse = 0.0;
};

struct RegistrationReport {
  std::string preset;
  bool ok = false;          ///< every stage ran
  std::string failed_stage;
  std::string error;
  RigidTransform final_transform;
  RigidTransform refine_transform;  ///< three-point estimate before dual-space
  StageStats stats;
  StageTimings timings;
  std::optional<PoseMetrics> metrics;         ///< final, when ground truth is known
  std::optional<PoseMetrics> refine_metrics;  ///< three-point estimate
  std::optional<bool> success;
  /// Filter outputs as indices into C_0.
  std::vector<std::size_t> coarse_members;
  std::vector<std::size_t> refined_members;
  /// Per-iteration dual-space solver steps.
  std::vector<SolverStep> dual_trace;
};

/// Full pipeline: coarse filter, refinement, proxies, dual-space solve.
/// Throws StageError on failure.
RegistrationReport register_pair(const RegistrationJob& job, const Preset& preset);

/// Like register_pair but records failures in the report instead of throwing.
RegistrationReport try_register(const RegistrationJob& job, const Preset& preset);

/// Stops after the coarse filter (`refine == false`) or after refinement.
RegistrationReport run_filters(const RegistrationJob& job, const Preset& preset, bool refine);

/// Per-job seed for batch runs.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Runs jobs on up to `threads` workers; output order matches input order.
std::vector<RegistrationReport> run_batch(const std::vector<RegistrationJob>& jobs,
                                          const Preset& preset, unsigned threads);

}  // namespace dualreg
