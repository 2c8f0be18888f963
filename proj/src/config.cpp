#include "dualreg/config.hpp"

#include "dualreg/types.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>

namespace dualreg {
namespace {

double parse_real(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw Error("config key '" + std::string(key) + "' expects a real number, got '" +
                std::string(text) + "'");
  }
  return v;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view text) {
  Int v{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw Error("config key '" + std::string(key) + "' expects an integer, got '" +
                std::string(text) + "'");
  }
  return v;
}

using Setter = std::function<void(PipelineConfig&, std::string_view, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = [] {
    std::map<std::string, Setter, std::less<>> t;
    auto real = [&t](const char* name, double PipelineConfig::*field) {
      t[name] = [field](PipelineConfig& c, std::string_view k, std::string_view v) {
        c.*field = parse_real(k, v);
      };
    };
    auto integer = [&t](const char* name, int PipelineConfig::*field) {
      t[name] = [field](PipelineConfig& c, std::string_view k, std::string_view v) {
        c.*field = parse_int<int>(k, v);
      };
    };
    real("tau", &PipelineConfig::tau);
    real("delta", &PipelineConfig::delta);
    real("gamma", &PipelineConfig::gamma);
    real("alpha", &PipelineConfig::alpha);
    real("beta", &PipelineConfig::beta);
    real("voxel_size", &PipelineConfig::voxel_size);
    real("lambda_conf", &PipelineConfig::lambda_conf);
    real("lambda_bal", &PipelineConfig::lambda_bal);
    real("eps_term", &PipelineConfig::eps_term);
    integer("max_dual_iters", &PipelineConfig::max_dual_iters);
    real("subset_fraction", &PipelineConfig::subset_fraction);
    real("voxel_multiple", &PipelineConfig::voxel_multiple);
    real("tau_multiple", &PipelineConfig::tau_multiple);
    real("beta_multiple", &PipelineConfig::beta_multiple);
    integer("normal_k", &PipelineConfig::normal_k);
    integer("coarse_cap_multiple", &PipelineConfig::coarse_cap_multiple);
    integer("refine_max_iters", &PipelineConfig::refine_max_iters);
    t["rng_seed"] = [](PipelineConfig& c, std::string_view k, std::string_view v) {
      c.rng_seed = parse_int<std::uint64_t>(k, v);
    };
    t["proxy_assignment"] = [](PipelineConfig& c, std::string_view k, std::string_view v) {
      if (v == "whole") {
        c.proxy_assignment = ProxyAssignment::kWhole;
      } else if (v == "per_patch") {
        c.proxy_assignment = ProxyAssignment::kPerPatch;
      } else {
        throw Error("config key '" + std::string(k) + "' expects whole|per_patch");
      }
    };
    return t;
  }();
  return table;
}

void require(bool ok, const char* message) {
  if (!ok) throw Error(std::string("invalid config: ") + message);
}

}  // namespace

PipelineConfig PipelineConfig::resolve(double resolution) const {
  PipelineConfig c = *this;
  if (c.tau <= 0.0) c.tau = tau_multiple * resolution;
  if (c.voxel_size <= 0.0) c.voxel_size = voxel_multiple * resolution;
  if (c.beta <= 0.0) c.beta = beta_multiple * resolution;
  if (c.delta <= 0.0) c.delta = 2.0 * gamma;
  return c;
}

void PipelineConfig::validate(bool require_resolved) const {
  auto length_ok = [require_resolved](double v) {
    return std::isfinite(v) && (v > 0.0 || (!require_resolved && v == 0.0));
  };
  require(length_ok(tau), "tau must be > 0");
  require(length_ok(delta), "delta must be > 0");
  require(length_ok(beta), "beta must be > 0");
  require(length_ok(voxel_size), "voxel_size must be > 0");
  require(std::isfinite(gamma) && gamma > 0.0, "gamma must be > 0");
  require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0,1]");
  require(lambda_conf > 0.0 && lambda_conf < 1.0, "lambda_conf must lie in (0,1)");
  require(std::isfinite(lambda_bal) && lambda_bal >= 0.0, "lambda_bal must be >= 0");
  require(std::isfinite(eps_term) && eps_term > 0.0, "eps_term must be > 0");
  require(max_dual_iters >= 0, "max_dual_iters must be >= 0");
  require(subset_fraction > 0.0 && subset_fraction <= 1.0, "subset_fraction must lie in (0,1]");
  require(voxel_multiple > 0.0 && tau_multiple > 0.0 && beta_multiple > 0.0,
          "resolution multiples must be > 0");
  require(normal_k >= 3, "normal_k must be >= 3");
  require(coarse_cap_multiple >= 1, "coarse_cap_multiple must be >= 1");
  require(refine_max_iters >= 1, "refine_max_iters must be >= 1");
}

void PipelineConfig::set(std::string_view key, std::string_view value) {
  const auto& table = setters();
  auto it = table.find(key);
  if (it == table.end()) {
    throw Error("unknown config key '" + std::string(key) + "'");
  }
  PipelineConfig trial = *this;
  it->second(trial, key, value);
  trial.validate(false);
  *this = trial;
}

void PipelineConfig::set(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw Error("expected key=value, got '" + std::string(assignment) + "'");
  }
  set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

std::vector<std::string> PipelineConfig::keys() {
  std::vector<std::string> out;
  for (const auto& [k, _] : setters()) out.push_back(k);
  return out;
}

Preset indoor_preset() {
  Preset p{"indoor", {}, {15.0, 0.30}};
  p.config.gamma = 0.1;
  p.config.alpha = 0.2;
  p.config.lambda_bal = 0.05;
  return p;
}

Preset indoor_low_overlap_preset() {
  Preset p = indoor_preset();
  p.name = "indoor_low_overlap";
  p.config.alpha = 0.95;
  return p;
}

Preset outdoor_preset() {
  Preset p{"outdoor", {}, {5.0, 0.60}};
  p.config.gamma = 0.6;
  p.config.alpha = 0.9;
  p.config.lambda_bal = 1.0;
  return p;
}

Preset preset_by_name(std::string_view name) {
  if (name == "indoor") return indoor_preset();
  if (name == "indoor_low_overlap") return indoor_low_overlap_preset();
  if (name == "outdoor") return outdoor_preset();
  throw Error("unknown preset '" + std::string(name) + "' (indoor|indoor_low_overlap|outdoor)");
}

}  // namespace dualreg
