#pragma once

#include "dualreg/pipeline.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace dualreg {

/// One `key=value` per line. Timing keys end in `_ms`.
std::string to_key_value(const RegistrationReport& rep);

/// The report as JSON; timings live under "timings_ms".
nlohmann::json to_json(const RegistrationReport& rep);

/// Aggregate over a batch. RE/TE/RMSE means are taken over successful
/// registrations, time over every job.
struct BatchSummary {
  std::size_t jobs = 0;
  std::size_t completed = 0;
  std::size_t successes = 0;
  double recall = 0.0;  ///< percent
  double mean_rotation_deg = 0.0;
  double mean_translation = 0.0;
  double mean_rmse = 0.0;
  double mean_time_ms = 0.0;
};

BatchSummary summarize(const std::vector<RegistrationReport>& reports);
std::string to_key_value(const BatchSummary& s);
nlohmann::json to_json(const BatchSummary& s);

}  // namespace dualreg
