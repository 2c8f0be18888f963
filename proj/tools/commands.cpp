#include "commands.hpp"

#include "dualreg/config.hpp"
#include "dualreg/io.hpp"
#include "dualreg/metrics.hpp"
#include "dualreg/pipeline.hpp"
#include "dualreg/report.hpp"
#include "dualreg/synth.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <thread>

namespace dualreg::cli {
namespace {

namespace fs = std::filesystem;

enum class LogLevel { kQuiet, kWarn, kInfo, kDebug };

LogLevel log_level() {
  const char* env = std::getenv("DUALREG_LOG");
  if (env == nullptr) return LogLevel::kWarn;
  const std::string v(env);
  if (v == "quiet" || v == "0") return LogLevel::kQuiet;
  if (v == "info" || v == "2") return LogLevel::kInfo;
  if (v == "debug" || v == "3") return LogLevel::kDebug;
  return LogLevel::kWarn;
}

struct Context {
  std::ostream& out;
  std::ostream& err;
  LogLevel level = log_level();

  void log(LogLevel at, const std::string& msg) const {
    if (at <= level) err << msg << '\n';
  }
};

struct CommonOptions {
  std::string preset = "indoor";
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--preset", opts.preset, "Parameter preset: indoor|indoor_low_overlap|outdoor")
      ->capture_default_str();
  cmd->add_option("--set", opts.overrides, "Override a config field, key=value (repeatable)");
  cmd->add_option("--seed", opts.seed, "Master random seed")->capture_default_str();
}

// Preset with overrides applied; throws dualreg::Error before any work starts.
Preset build_preset(const CommonOptions& opts) {
  Preset p = preset_by_name(opts.preset);
  p.config.rng_seed = opts.seed;
  for (const auto& o : opts.overrides) p.config.set(o);
  return p;
}

struct PairPaths {
  std::string source, target, correspondences, ground_truth;
};

RegistrationJob load_job(const PairPaths& paths, const PipelineConfig& cfg) {
  auto tagged = [](const std::string& path, auto&& f) {
    try {
      return f();
    } catch (const Error& e) {
      throw Error(path + ": " + e.what());
    }
  };
  RegistrationJob job;
  job.config = cfg;
  job.source = tagged(paths.source, [&] { return io::read_cloud(paths.source, cfg.normal_k); });
  job.target = tagged(paths.target, [&] { return io::read_cloud(paths.target, cfg.normal_k); });
  job.correspondences = tagged(paths.correspondences, [&] {
    return io::read_correspondences(paths.correspondences, job.source, job.target);
  });
  if (!paths.ground_truth.empty()) {
    job.ground_truth =
        tagged(paths.ground_truth, [&] { return io::read_transform(paths.ground_truth); });
  }
  return job;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw Error("failed writing '" + path + "'");
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// ---------------------------------------------------------------- register

struct RegisterOptions {
  CommonOptions common;
  PairPaths paths;
  std::string out, json;
};

int cmd_register(const Context& ctx, const RegisterOptions& o) {
  Preset preset;
  RegistrationJob job;
  try {
    preset = build_preset(o.common);
    job = load_job(o.paths, preset.config);
  } catch (const Error& e) {
    ctx.err << "error: " << e.what() << '\n';
    return kUsageOrIo;
  }
  ctx.log(LogLevel::kInfo, "register: " + std::to_string(job.correspondences.size()) +
                               " correspondences, " + std::to_string(job.source.size()) + "/" +
                               std::to_string(job.target.size()) + " points");

  const RegistrationReport rep = try_register(job, preset);
  try {
    if (!o.out.empty()) write_text(o.out, to_key_value(rep));
    if (!o.json.empty()) write_text(o.json, to_json(rep).dump(2) + "\n");
  } catch (const Error& e) {
    ctx.err << "error: " << e.what() << '\n';
    return kUsageOrIo;
  }
  if (!rep.ok) {
    ctx.err << "registration failed: " << rep.error << '\n';
    return kRegistrationFailed;
  }
  ctx.log(LogLevel::kInfo, "register: |C0|=" + std::to_string(rep.stats.initial) +
                               " |CI|=" + std::to_string(rep.stats.coarse) +
                               " |CII|=" + std::to_string(rep.stats.refined));
  ctx.out << io::format_transform(rep.final_transform) << '\n';
  if (rep.metrics) {
    ctx.out << "RE=" << fmt("%.4f", rep.metrics->rotation_deg)
            << "deg TE=" << fmt("%.4f", 100.0 * rep.metrics->translation)
            << "cm RMSE=" << fmt("%.4f", 100.0 * rep.metrics->rmse) << "cm"
            << " success=" << (*rep.success ? 1 : 0) << '\n';
  }
  return kOk;
}

// -------------------------------------------------------------------- eval

struct EvalOptions {
  CommonOptions common;
  std::string manifest;
  unsigned jobs = 1;
  std::string out, json;
};

int cmd_eval(const Context& ctx, const EvalOptions& o) {
  Preset preset;
  std::vector<io::ManifestRow> rows;
  try {
    preset = build_preset(o.common);
    rows = io::read_manifest(o.manifest);
  } catch (const Error& e) {
    ctx.err << "error: " << e.what() << '\n';
    return kUsageOrIo;
  }
  if (rows.empty()) {
    ctx.err << "error: manifest '" << o.manifest << "' lists no jobs\n";
    return kUsageOrIo;
  }

  std::vector<RegistrationReport> reports(rows.size());
  std::vector<RegistrationJob> runnable;
  std::vector<std::size_t> slot;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::string error = rows[i].error;
    if (error.empty()) {
      try {
        PipelineConfig cfg = preset.config;
        cfg.rng_seed = derive_seed(preset.config.rng_seed, i);
        runnable.push_back(load_job({rows[i].source.string(), rows[i].target.string(),
                                     rows[i].correspondences.string(),
                                     rows[i].ground_truth.string()},
                                    cfg));
        slot.push_back(i);
        continue;
      } catch (const Error& e) {
        error = e.what();
      }
    }
    ctx.log(LogLevel::kWarn, "eval: row " + std::to_string(rows[i].line) + " failed: " + error);
    reports[i].preset = preset.name;
    reports[i].failed_stage = "input";
    reports[i].error = error;
    reports[i].success = false;
  }

  const auto done = run_batch(runnable, preset, std::max(1u, o.jobs));
  for (std::size_t k = 0; k < done.size(); ++k) reports[slot[k]] = done[k];
  const BatchSummary summary = summarize(reports);

  std::string text;
  nlohmann::json doc = {{"preset", preset.name}, {"jobs", nlohmann::json::array()}};
  for (std::size_t i = 0; i < reports.size(); ++i) {
    text += "[job " + std::to_string(i) + "]\n";
    text += "manifest_line=" + std::to_string(rows[i].line) + "\n";
    text += to_key_value(reports[i]);
    nlohmann::json j = to_json(reports[i]);
    j["manifest_line"] = rows[i].line;
    doc["jobs"].push_back(std::move(j));
  }
  text += "[aggregate]\n" + to_key_value(summary);
  doc["aggregate"] = to_json(summary);

  try {
    if (!o.out.empty()) write_text(o.out, text);
    if (!o.json.empty()) write_text(o.json, doc.dump(2) + "\n");
  } catch (const Error& e) {
    ctx.err << "error: " << e.what() << '\n';
    return kUsageOrIo;
  }

  ctx.out << "jobs      " << summary.jobs << " (" << summary.completed << " completed)\n"
          << "RR        " << fmt("%.2f", summary.recall) << " %\n"
          << "RE        " << fmt("%.3f", summary.mean_rotation_deg) << " deg\n"
          << "TE        " << fmt("%.3f", 100.0 * summary.mean_translation) << " cm\n"
          << "RMSE      " << fmt("%.3f", 100.0 * summary.mean_rmse) << " cm\n"
          << "time      " << fmt("%.1f", summary.mean_time_ms) << " ms\n";
  return kOk;
}

// ------------------------------------------------------------------- synth

struct SynthOptions {
  SynthSpec spec;
  std::string out_dir;
  std::size_t count = 1;
};

int cmd_synth(const Context& ctx, const SynthOptions& o) {
  try {
    o.spec.validate();
    fs::create_directories(o.out_dir);
    std::string manifest;
    for (std::size_t i = 0; i < o.count; ++i) {
      SynthSpec spec = o.spec;
      spec.seed = derive_seed(o.spec.seed, i);
      const RegistrationJob job = synth_scene(spec);
      char prefix[32];
      std::snprintf(prefix, sizeof prefix, "pair%03zu_", i);
      const std::string src = std::string(prefix) + "source.ply";
      const std::string tgt = std::string(prefix) + "target.ply";
      const std::string corr = std::string(prefix) + "corr.txt";
      const std::string gt = std::string(prefix) + "gt.txt";
      const fs::path dir(o.out_dir);
      io::write_ply(dir / src, job.source);
      io::write_ply(dir / tgt, job.target);
      io::write_correspondences(dir / corr, job.correspondences);
      io::write_transform(dir / gt, *job.ground_truth);
      manifest += src + ' ' + tgt + ' ' + corr + ' ' + gt + '\n';
      const double ir = inlier_ratio(job.correspondences, job.source, job.target,
                                     *job.ground_truth, spec.gamma);
      const auto inliers = static_cast<std::size_t>(
          std::llround(ir * static_cast<double>(job.correspondences.size())));
      ctx.out << std::string(prefix, std::strlen(prefix) - 1) << " correspondences=" << job.correspondences.size()
              << " inliers=" << inliers << '\n';
    }
    write_text((fs::path(o.out_dir) / "manifest.txt").string(),
               "# source target correspondences gt_transform\n" + manifest);
  } catch (const std::exception& e) {
    ctx.err << "error: " << e.what() << '\n';
    return kUsageOrIo;
  }
  return kOk;
}

// ------------------------------------------------------------------ filter

struct FilterOptions {
  CommonOptions common;
  PairPaths paths;
  std::string stage = "coarse";
  std::string out;
};

int cmd_filter(const Context& ctx, const FilterOptions& o) {
  Preset preset;
  RegistrationJob job;
  try {
    preset = build_preset(o.common);
    job = load_job(o.paths, preset.config);
  } catch (const Error& e) {
    ctx.err << "error: " << e.what() << '\n';
    return kUsageOrIo;
  }
  const bool refine = o.stage == "refine";
  RegistrationReport rep;
  try {
    rep = run_filters(job, preset, refine);
  } catch (const StageError& e) {
    ctx.err << "registration failed: " << e.what() << '\n';
    return kRegistrationFailed;
  }
  const auto& members = refine ? rep.refined_members : rep.coarse_members;
  CorrespondenceSet kept;
  for (std::size_t i : members) kept.push_back(job.correspondences[i]);
  try {
    if (!o.out.empty()) io::write_correspondences(o.out, kept);
  } catch (const Error& e) {
    ctx.err << "error: " << e.what() << '\n';
    return kUsageOrIo;
  }

  ctx.out << "stage=" << o.stage << '\n'
          << "corr_in=" << job.correspondences.size() << '\n'
          << "corr_out=" << kept.size() << '\n';
  if (job.ground_truth) {
    const auto& s = rep.stats;
    ctx.out << "ir_in=" << fmt("%.6f", s.initial_ir.value_or(0.0)) << '\n'
            << "ir_out=" << fmt("%.6f", (refine ? s.refined_ir : s.coarse_ir).value_or(0.0))
            << '\n';
  }
  if (refine) ctx.out << "refine_transform=" << io::format_transform(rep.refine_transform) << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const Context ctx{out, err};
  CLI::App app{"Rigid point cloud registration with progressive correspondence filtering and "
               "dual-space refinement",
               "dualreg"};
  app.require_subcommand(1);

  RegisterOptions reg;
  auto* c_reg = app.add_subcommand("register", "Register one source/target pair");
  c_reg->add_option("--source", reg.paths.source, "Source cloud (.ply or .xyz)")->required();
  c_reg->add_option("--target", reg.paths.target, "Target cloud (.ply or .xyz)")->required();
  c_reg->add_option("--corr", reg.paths.correspondences, "Correspondence file")->required();
  c_reg->add_option("--gt", reg.paths.ground_truth, "Ground-truth transform for metrics");
  c_reg->add_option("--out", reg.out, "Write key=value report here");
  c_reg->add_option("--json", reg.json, "Write JSON report here");
  add_common(c_reg, reg.common);

  EvalOptions ev;
  auto* c_eval = app.add_subcommand("eval", "Evaluate every pair listed in a manifest");
  c_eval->add_option("--manifest", ev.manifest, "Rows: source target corr gt")->required();
  c_eval->add_option("--jobs", ev.jobs, "Parallel registrations")->capture_default_str();
  c_eval->add_option("--out", ev.out, "Write key=value reports here");
  c_eval->add_option("--json", ev.json, "Write JSON reports here");
  add_common(c_eval, ev.common);

  SynthOptions sy;
  auto* c_synth = app.add_subcommand("synth", "Generate synthetic pairs with ground truth");
  c_synth->add_option("--out-dir", sy.out_dir, "Output directory")->required();
  c_synth->add_option("--count", sy.count, "Number of pairs")->capture_default_str();
  c_synth->add_option("--points", sy.spec.n_points, "Points per cloud")->capture_default_str();
  c_synth->add_option("--overlap", sy.spec.overlap_fraction, "Overlap fraction")
      ->capture_default_str();
  c_synth->add_option("--noise", sy.spec.noise_sigma, "Position noise sigma")
      ->capture_default_str();
  c_synth->add_option("--max-rotation", sy.spec.max_rotation_deg, "Max rotation, degrees")
      ->capture_default_str();
  c_synth->add_option("--max-translation", sy.spec.max_translation, "Max translation")
      ->capture_default_str();
  c_synth->add_option("--inlier-ratio", sy.spec.inlier_ratio, "Ground-truth inlier ratio")
      ->capture_default_str();
  c_synth->add_option("--correspondences", sy.spec.n_correspondences, "Size of C_0")
      ->capture_default_str();
  c_synth->add_option("--gamma", sy.spec.gamma, "Inlier threshold")->capture_default_str();
  c_synth->add_option("--seed", sy.spec.seed, "Random seed")->capture_default_str();

  FilterOptions fi;
  auto* c_filter = app.add_subcommand("filter", "Run the correspondence filters only");
  c_filter->add_option("--source", fi.paths.source, "Source cloud")->required();
  c_filter->add_option("--target", fi.paths.target, "Target cloud")->required();
  c_filter->add_option("--corr", fi.paths.correspondences, "Correspondence file")->required();
  c_filter->add_option("--gt", fi.paths.ground_truth, "Ground-truth transform");
  c_filter->add_option("--stage", fi.stage, "coarse|refine")
      ->check(CLI::IsMember({"coarse", "refine"}))
      ->capture_default_str();
  c_filter->add_option("--out", fi.out, "Write surviving correspondences here");
  add_common(c_filter, fi.common);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageOrIo;
  }

  try {
    if (c_reg->parsed()) return cmd_register(ctx, reg);
    if (c_eval->parsed()) return cmd_eval(ctx, ev);
    if (c_synth->parsed()) return cmd_synth(ctx, sy);
    if (c_filter->parsed()) return cmd_filter(ctx, fi);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageOrIo;
  }
  return kUsageOrIo;
}

}  // namespace dualreg::cli
