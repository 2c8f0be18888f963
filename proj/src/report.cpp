#include "dualreg/report.hpp"

#include <cstdio>
#include <sstream>

namespace dualreg {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string transform_text(const RigidTransform& t) {
  std::string s;
  const auto m = t.matrix();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) s += num(m(i, j)) + ' ';
  }
  s += num(m(0, 3)) + ' ' + num(m(1, 3)) + ' ' + num(m(2, 3));
  return s;
}

nlohmann::json transform_json(const RigidTransform& t) {
  const auto& r = t.rotation();
  const auto& tr = t.translation();
  return {{"rotation", {{r(0, 0), r(0, 1), r(0, 2)}, {r(1, 0), r(1, 1), r(1, 2)},
                        {r(2, 0), r(2, 1), r(2, 2)}}},
          {"translation", {tr.x(), tr.y(), tr.z()}}};
}

nlohmann::json metrics_json(const PoseMetrics& m) {
  return {{"rotation_error_deg", m.rotation_deg},
          {"translation_error", m.translation},
          {"rmse", m.rmse}};
}

}  // namespace

std::string to_key_value(const RegistrationReport& rep) {
  std::ostringstream os;
  os << "preset=" << rep.preset << '\n';
  os << "ok=" << (rep.ok ? 1 : 0) << '\n';
  if (!rep.ok) {
    os << "failed_stage=" << rep.failed_stage << '\n';
    os << "error=" << rep.error << '\n';
  }
  os << "transform=" << transform_text(rep.final_transform) << '\n';
  os << "refine_transform=" << transform_text(rep.refine_transform) << '\n';
  const auto& s = rep.stats;
  os << "resolution=" << num(s.resolution) << '\n';
  os << "corr_initial=" << s.initial << '\n';
  os << "corr_coarse=" << s.coarse << '\n';
  os << "corr_refined=" << s.refined << '\n';
  if (s.initial_ir) os << "ir_initial=" << num(*s.initial_ir) << '\n';
  if (s.coarse_ir) os << "ir_coarse=" << num(*s.coarse_ir) << '\n';
  if (s.refined_ir) os << "ir_refined=" << num(*s.refined_ir) << '\n';
  os << "coarse_iterations=" << s.coarse_iterations << '\n';
  os << "coarse_low_confidence=" << (s.coarse_low_confidence ? 1 : 0) << '\n';
  os << "refine_iterations=" << s.refine_iterations << '\n';
  os << "proxy_source=" << s.proxy_source << '\n';
  os << "proxy_target=" << s.proxy_target << '\n';
  os << "sigma=" << num(s.sigma) << '\n';
  os << "dual_iterations=" << s.dual_iterations << '\n';
  os << "dual_converged=" << (s.dual_converged ? 1 : 0) << '\n';
  os << "dual_stalled=" << (s.dual_stalled ? 1 : 0) << '\n';
  if (rep.metrics) {
    os << "rotation_error_deg=" << num(rep.metrics->rotation_deg) << '\n';
    os << "translation_error=" << num(rep.metrics->translation) << '\n';
    os << "translation_error_cm=" << num(100.0 * rep.metrics->translation) << '\n';
    os << "rmse=" << num(rep.metrics->rmse) << '\n';
    os << "rmse_cm=" << num(100.0 * rep.metrics->rmse) << '\n';
  }
  if (rep.refine_metrics) {
    os << "refine_rotation_error_deg=" << num(rep.refine_metrics->rotation_deg) << '\n';
    os << "refine_translation_error=" << num(rep.refine_metrics->translation) << '\n';
    os << "refine_rmse=" << num(rep.refine_metrics->rmse) << '\n';
  }
  if (rep.success) os << "success=" << (*rep.success ? 1 : 0) << '\n';
  const auto& t = rep.timings;
  os << "coarse_ms=" << num(t.coarse_ms) << '\n';
  os << "refine_ms=" << num(t.refine_ms) << '\n';
  os << "proxy_ms=" << num(t.proxy_ms) << '\n';
  os << "dual_ms=" << num(t.dual_ms) << '\n';
  os << "total_ms=" << num(t.total_ms) << '\n';
  return os.str();
}

nlohmann::json to_json(const RegistrationReport& rep) {
  const auto& s = rep.stats;
  nlohmann::json stages = {
      {"initial", {{"size", s.initial}}},
      {"coarse",
       {{"size", s.coarse},
        {"iterations", s.coarse_iterations},
        {"low_confidence", s.coarse_low_confidence}}},
      {"refined", {{"size", s.refined}, {"iterations", s.refine_iterations}}},
      {"dual_space",
       {{"iterations", s.dual_iterations},
        {"converged", s.dual_converged},
        {"stalled", s.dual_stalled},
        {"sigma", s.sigma},
        {"proxy_source", s.proxy_source},
        {"proxy_target", s.proxy_target}}},
  };
  if (s.initial_ir) stages["initial"]["inlier_ratio"] = *s.initial_ir;
  if (s.coarse_ir) stages["coarse"]["inlier_ratio"] = *s.coarse_ir;
  if (s.refined_ir) stages["refined"]["inlier_ratio"] = *s.refined_ir;

  nlohmann::json j = {
      {"preset", rep.preset},
      {"ok", rep.ok},
      {"final_transform", transform_json(rep.final_transform)},
      {"refine_transform", transform_json(rep.refine_transform)},
      {"resolution", s.resolution},
      {"stages", stages},
      {"timings_ms",
       {{"coarse", rep.timings.coarse_ms},
        {"refine", rep.timings.refine_ms},
        {"proxy", rep.timings.proxy_ms},
        {"dual", rep.timings.dual_ms},
        {"total", rep.timings.total_ms}}},
  };
  if (!rep.ok) {
    j["failed_stage"] = rep.failed_stage;
    j["error"] = rep.error;
  }
  if (rep.metrics) j["metrics"] = metrics_json(*rep.metrics);
  if (rep.refine_metrics) j["refine_metrics"] = metrics_json(*rep.refine_metrics);
  if (rep.success) j["success"] = *rep.success;
  return j;
}

BatchSummary summarize(const std::vector<RegistrationReport>& reports) {
  BatchSummary s;
  s.jobs = reports.size();
  double time = 0.0;
  for (const auto& r : reports) {
    time += r.timings.total_ms;
    if (r.ok) ++s.completed;
    if (r.success && *r.success && r.metrics) {
      ++s.successes;
      s.mean_rotation_deg += r.metrics->rotation_deg;
      s.mean_translation += r.metrics->translation;
      s.mean_rmse += r.metrics->rmse;
    }
  }
  if (s.successes > 0) {
    const auto n = static_cast<double>(s.successes);
    s.mean_rotation_deg /= n;
    s.mean_translation /= n;
    s.mean_rmse /= n;
  }
  if (s.jobs > 0) {
    s.recall = 100.0 * static_cast<double>(s.successes) / static_cast<double>(s.jobs);
    s.mean_time_ms = time / static_cast<double>(s.jobs);
  }
  return s;
}

std::string to_key_value(const BatchSummary& s) {
  std::ostringstream os;
  os << "jobs=" << s.jobs << '\n'
     << "completed=" << s.completed << '\n'
     << "successes=" << s.successes << '\n'
     << "registration_recall=" << num(s.recall) << '\n'
     << "mean_rotation_error_deg=" << num(s.mean_rotation_deg) << '\n'
     << "mean_translation_error=" << num(s.mean_translation) << '\n'
     << "mean_rmse=" << num(s.mean_rmse) << '\n'
     << "mean_time_ms=" << num(s.mean_time_ms) << '\n';
  return os.str();
}

nlohmann::json to_json(const BatchSummary& s) {
  return {{"jobs", s.jobs},
          {"completed", s.completed},
          {"successes", s.successes},
          {"registration_recall", s.recall},
          {"mean_rotation_error_deg", s.mean_rotation_deg},
          {"mean_translation_error", s.mean_translation},
          {"mean_rmse", s.mean_rmse},
          {"timings_ms", {{"mean_total", s.mean_time_ms}}}};
}

}  // namespace dualreg
