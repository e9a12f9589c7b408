#include "cli.hpp"

#include "manifest.hpp"

#include "mcinr/acquisition.hpp"
#include "mcinr/checkpoint.hpp"
#include "mcinr/error.hpp"
#include "mcinr/kvconfig.hpp"
#include "mcinr/metrics.hpp"
#include "mcinr/nifti.hpp"
#include "mcinr/phantom.hpp"
#include "mcinr/spline.hpp"
#include "mcinr/trainer.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

namespace mcinr::cli {

namespace fs = std::filesystem;

namespace {

#ifndef MCINR_VERSION
#define MCINR_VERSION "0.0.0"
#endif

using Params = std::map<std::string, std::string>;

struct Context {
  std::ostream& out;
  std::ostream& err;
  bool quiet = false;
  int threads = 0;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoFailure:
    case ErrorCode::MalformedHeader:
    case ErrorCode::UnsupportedDatatype:
    case ErrorCode::TruncatedData:
      return kExitIo;
    case ErrorCode::NonFiniteLoss:
    case ErrorCode::NonFiniteUpdate:
      return kExitDiverged;
    default:
      return kExitUsage;
  }
}

const std::string& param(const Params& p, const std::string& key) {
  const auto it = p.find(key);
  if (it == p.end()) fail(ErrorCode::InvalidArgument, "missing parameter '" + key + "'");
  return it->second;
}

std::optional<std::string> param_opt(const Params& p, const std::string& key) {
  const auto it = p.find(key);
  if (it == p.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

double param_double(const Params& p, const std::string& key) {
  try {
    return std::stod(param(p, key));
  } catch (const std::logic_error&) {
    fail(ErrorCode::InvalidArgument, "parameter '" + key + "' is not a number");
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

InputRecord input_record(const std::string& role, const std::string& path) {
  return InputRecord{role, path, sha256_file(path)};
}

fs::path sidecar_manifest(const fs::path& output_file) { return fs::path(output_file.string() + ".manifest.json"); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create directory '" + dir.string() + "': " + ec.message());
}

std::string training_log_text(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  write_training_log(os, history);
  return os.str();
}

// --- command bodies ---------------------------------------------------------

struct Outcome {
  std::vector<InputRecord> inputs;
  std::vector<std::string> outputs;
  fs::path manifest;
};

Outcome exec_fit(const Params& p, const TrainConfig& cfg, Context& ctx) {
  const fs::path out = param(p, "out");
  Outcome o;
  o.inputs = {input_record("c1", param(p, "c1")), input_record("c2", param(p, "c2"))};
  const Volume v1 = load_volume(param(p, "c1"));
  const Volume v2 = load_volume(param(p, "c2"));
  ensure_dir(out);

  auto progress = [&](const std::string& tag) {
    return [&ctx, tag, total = cfg.epochs](const EpochRecord& r) {
      if (ctx.quiet) return;
      char line[256];
      std::snprintf(line, sizeof(line), "%sepoch %d/%d  lr %.3g  loss %.6g%s", tag.c_str(), r.epoch, total, r.lr,
                    r.loss_total, r.mi ? ("  mi " + format_metric(*r.mi)).c_str() : "");
      ctx.err << line << '\n';
    };
  };
  auto report_run = [&](const TrainingRun& run, const std::string& tag) {
    for (const auto& w : run.warnings) ctx.err << "warning: " << w << '\n';
    if (ctx.quiet) return;
    ctx.err << tag << "stopped at epoch " << run.stop_epoch;
    if (run.plateau_epoch) ctx.err << " (MI plateau at epoch " << *run.plateau_epoch << ")";
    ctx.err << " after " << fmt(run.wall_seconds) << " s\n";
  };

  std::optional<Volume> sr1, sr2;
  if (cfg.mode != HeadMode::single_contrast) {
    const TrainingRun run = train(v1, v2, cfg, nullptr, progress(""));
    report_run(run, "");
    save_checkpoint(run.best, out / "model.ckpt");
    Reconstruction rec = reconstruct(run.best.fitted, run.grid);
    sr1 = std::move(rec.c1);
    sr2 = std::move(rec.c2);
    write_text_atomic(out / "training.log", training_log_text(run.history));
    o.outputs = {"model.ckpt", "sr_c1.nii.gz", "sr_c2.nii.gz", "training.log"};
  } else {
    // One independent single-contrast model per input.
    for (int contrast : {1, 2}) {
      TrainConfig c = cfg;
      c.single_contrast = contrast;
      const std::string tag = "[c" + std::to_string(contrast) + "] ";
      const TrainingRun run = train(v1, v2, c, nullptr, progress(tag));
      report_run(run, tag);
      const std::string suffix = "_c" + std::to_string(contrast);
      save_checkpoint(run.best, out / ("model" + suffix + ".ckpt"));
      Reconstruction rec = reconstruct(run.best.fitted, run.grid);
      (contrast == 1 ? sr1 : sr2) = std::move(contrast == 1 ? rec.c1 : rec.c2);
      write_text_atomic(out / ("training" + suffix + ".log"), training_log_text(run.history));
    }
    o.outputs = {"model_c1.ckpt", "model_c2.ckpt", "sr_c1.nii.gz", "sr_c2.nii.gz", "training_c1.log",
                 "training_c2.log"};
  }
  save_volume(*sr1, out / "sr_c1.nii.gz");
  save_volume(*sr2, out / "sr_c2.nii.gz");

  MetricsReport report;
  report.mi_pred = mutual_information(*sr1, *sr2, cfg.mi_bins);
  write_text_atomic(out / "metrics.txt", report.to_key_value());
  ctx.out << report.to_records();
  o.outputs.push_back("metrics.txt");
  o.manifest = out / "manifest.json";
  return o;
}

Outcome exec_eval(const Params& p, Context& ctx) {
  const fs::path out = param(p, "out");
  const int bins = static_cast<int>(param_double(p, "bins"));
  Outcome o;
  for (const char* role : {"pred1", "pred2", "gt1", "gt2"}) o.inputs.push_back(input_record(role, param(p, role)));
  const Volume pred1 = load_volume(param(p, "pred1"));
  const Volume pred2 = load_volume(param(p, "pred2"));
  const Volume gt1 = load_volume(param(p, "gt1"));
  const Volume gt2 = load_volume(param(p, "gt2"));
  const MetricsReport report = evaluate(pred1, pred2, gt1, gt2, bins);
  ensure_dir(out);
  write_text_atomic(out / "metrics.txt", report.to_key_value());
  ctx.out << report.to_records();
  o.outputs = {"metrics.txt"};
  o.manifest = out / "manifest.json";
  return o;
}

Outcome exec_phantom(const Params& p, const KeyValueConfig& spec_cfg, Context&) {
  const fs::path out = param(p, "out");
  const Phantom ph = make_phantom(phantom_spec_from_config(spec_cfg));
  ensure_dir(out);
  save_volume(ph.gt1, out / "gt1.nii.gz");
  save_volume(ph.gt2, out / "gt2.nii.gz");
  save_volume(ph.labels, out / "labels.nii.gz");
  Outcome o;
  o.outputs = {"gt1.nii.gz", "gt2.nii.gz", "labels.nii.gz"};
  o.manifest = out / "manifest.json";
  return o;
}

Outcome exec_degrade(const Params& p, Context&) {
  const fs::path out = param(p, "out");
  Outcome o;
  o.inputs = {input_record("in", param(p, "in"))};
  const Volume gt = load_volume(param(p, "in"));
  AcquisitionSpec acq;
  acq.plane = parse_plane(param(p, "plane"));
  acq.thickness = param_double(p, "thickness");
  acq.in_plane_spacing = param_opt(p, "spacing") ? param_double(p, "spacing") : gt.spacing()[slice_axis(acq.plane)];
  const std::string profile = param(p, "profile");
  if (profile == "spline") acq.profile = SliceProfile::spline;
  else if (profile == "box") acq.profile = SliceProfile::box;
  else fail(ErrorCode::InvalidArgument, "profile must be 'spline' or 'box'");
  acq.allow_non_integral = param(p, "allow_non_integral") == "true";
  acq.noise_sigma = param_double(p, "noise_sigma");
  acq.noise_seed = static_cast<std::uint64_t>(param_double(p, "seed"));
  const Volume lr = simulate_acquisition(gt, acq);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  save_volume(lr, out);
  o.outputs = {out.filename().string()};
  o.manifest = sidecar_manifest(out);
  return o;
}

Outcome exec_upsample(const Params& p, Context&) {
  const fs::path out = param(p, "out");
  Outcome o;
  o.inputs = {input_record("in", param(p, "in"))};
  const Volume lr = load_volume(param(p, "in"));
  std::optional<Volume> ref;
  if (const auto r = param_opt(p, "reference")) {
    o.inputs.push_back(input_record("reference", *r));
    ref = load_volume(*r);
  }
  const GridSpec grid = plan_isotropic_grid(ref ? *ref : lr, param_double(p, "spacing"));
  const Volume up = cubic_spline_upsample(lr, grid);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  save_volume(up, out);
  o.outputs = {out.filename().string()};
  o.manifest = sidecar_manifest(out);
  return o;
}

/// Runs a command from its parameters and effective config, then writes the manifest.
void execute(const std::string& command, const Params& params, const KeyValueConfig& config, Context& ctx) {
  const auto started = std::chrono::system_clock::now();
  const auto t0 = std::chrono::steady_clock::now();
  RunManifest m;
  m.command = command;
  m.engine_version = MCINR_VERSION;
  m.params = params;
  m.config = config.entries();
  m.threads = ctx.threads;

  Outcome o;
  if (command == "fit") {
    const TrainConfig cfg = TrainConfig::from_config(config);
    m.seed = cfg.seed;
    o = exec_fit(params, cfg, ctx);
  } else if (command == "eval") {
    o = exec_eval(params, ctx);
  } else if (command == "phantom") {
    m.seed = static_cast<unsigned long long>(config.get_int("seed").value_or(0));
    o = exec_phantom(params, config, ctx);
  } else if (command == "degrade") {
    m.seed = static_cast<unsigned long long>(param_double(params, "seed"));
    o = exec_degrade(params, ctx);
  } else if (command == "upsample") {
    o = exec_upsample(params, ctx);
  } else {
    fail(ErrorCode::InvalidArgument, "unknown command '" + command + "'");
  }
  m.inputs = o.inputs;
  m.outputs = o.outputs;
  m.started_at = utc_timestamp(started);
  m.finished_at = utc_timestamp(std::chrono::system_clock::now());
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(m, o.manifest);
}

void replay(const fs::path& manifest_path, const std::optional<std::string>& out_override, Context& ctx) {
  const RunManifest m = read_manifest(manifest_path);
  Params params = m.params;
  if (out_override) params["out"] = *out_override;
  for (const InputRecord& in : m.inputs) {
    const std::string digest = sha256_file(in.path);
    if (digest != in.sha256) {
      fail(ErrorCode::IoFailure, "input '" + in.path + "' (" + in.role + ") changed since the recorded run");
    }
  }
  KeyValueConfig config;
  for (const auto& [k, v] : m.config) config.append(k, v);
  execute(m.command, params, config, ctx);
}

void apply_threads(int threads) {
  if (threads < 0) fail(ErrorCode::InvalidArgument, "--threads must be >= 0");
  if (threads > 0) omp_set_num_threads(threads);
}

void apply_set_entries(KeyValueConfig& cfg, const std::vector<std::string>& entries) {
  for (const auto& e : entries) {
    const auto eq = e.find('=');
    if (eq == std::string::npos || eq == 0) fail(ErrorCode::InvalidArgument, "--set expects key=value, got '" + e + "'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto en = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, en - b + 1);
    };
    cfg.set(trim(e.substr(0, eq)), trim(e.substr(eq + 1)));
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-contrast implicit neural representation super-resolution", "mcinr"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("mcinr ") + MCINR_VERSION);

  Context ctx{out, err};
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--threads", ctx.threads, "Worker threads (0 = all available)")->check(CLI::NonNegativeNumber);
    sub->add_flag("--quiet", ctx.quiet, "Suppress progress output");
  };

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a representation to two low-resolution contrasts");
  std::string fit_c1, fit_c2, fit_out, fit_config, fit_mode;
  std::optional<double> fit_spacing, fit_lr;
  std::optional<unsigned long long> fit_seed;
  std::optional<int> fit_epochs, fit_batch;
  bool fit_deterministic = false;
  std::vector<std::string> fit_set;
  fit->add_option("--c1", fit_c1, "First contrast (NIfTI-1)")->required();
  fit->add_option("--c2", fit_c2, "Second contrast (NIfTI-1)")->required();
  fit->add_option("--out", fit_out, "Output directory")->required();
  fit->add_option("--config", fit_config, "key = value training config file");
  fit->add_option("--mode", fit_mode, "split_head, vanilla or single_contrast");
  fit->add_option("--spacing", fit_spacing, "Isotropic output spacing in mm");
  fit->add_option("--seed", fit_seed, "Seed for every random choice");
  fit->add_option("--epochs", fit_epochs, "Epoch cap");
  fit->add_option("--batch-size", fit_batch, "Samples per optimizer step");
  fit->add_option("--lr", fit_lr, "Peak learning rate");
  fit->add_flag("--deterministic", fit_deterministic, "Bit-reproducible run");
  fit->add_option("--set", fit_set, "Extra config entries as key=value (repeatable)");
  add_common(fit);

  // eval
  auto* ev = app.add_subcommand("eval", "Compare predictions against ground truth");
  std::string ev_pred1, ev_pred2, ev_gt1, ev_gt2, ev_out = ".";
  int ev_bins = kDefaultMiBins;
  ev->add_option("--pred1", ev_pred1, "Prediction of contrast 1")->required();
  ev->add_option("--pred2", ev_pred2, "Prediction of contrast 2")->required();
  ev->add_option("--gt1", ev_gt1, "Ground truth of contrast 1")->required();
  ev->add_option("--gt2", ev_gt2, "Ground truth of contrast 2")->required();
  ev->add_option("--bins", ev_bins, "Histogram bins for MI")->check(CLI::Range(2, 4096));
  ev->add_option("--out", ev_out, "Directory for metrics.txt and manifest.json");
  add_common(ev);

  // phantom
  auto* ph = app.add_subcommand("phantom", "Generate a two-contrast ground-truth phantom");
  std::string ph_out, ph_config;
  std::optional<unsigned long long> ph_seed;
  std::optional<int> ph_dims;
  ph->add_option("--out", ph_out, "Output directory")->required();
  ph->add_option("--config", ph_config, "Phantom description (key = value)");
  ph->add_option("--seed", ph_seed, "Geometry seed");
  ph->add_option("--dims", ph_dims, "Voxels per axis")->check(CLI::PositiveNumber);
  add_common(ph);

  // degrade
  auto* dg = app.add_subcommand("degrade", "Simulate a thick-slice 2D acquisition");
  std::string dg_in, dg_out, dg_plane = "axial", dg_profile = "spline";
  double dg_thickness = 4.0, dg_noise = 0.0;
  std::optional<double> dg_spacing;
  unsigned long long dg_seed = 0;
  bool dg_non_integral = false;
  dg->add_option("--in", dg_in, "High-resolution input volume")->required();
  dg->add_option("--out", dg_out, "Output volume path")->required();
  dg->add_option("--plane", dg_plane, "axial, sagittal or coronal");
  dg->add_option("--thickness", dg_thickness, "Slice thickness in mm");
  dg->add_option("--spacing", dg_spacing, "In-plane spacing in mm (default: input spacing)");
  dg->add_option("--profile", dg_profile, "spline or box");
  dg->add_flag("--allow-non-integral", dg_non_integral, "Permit thickness that is not a multiple of the spacing");
  dg->add_option("--noise-sigma", dg_noise, "Additive Gaussian noise");
  dg->add_option("--seed", dg_seed, "Noise seed");
  add_common(dg);

  // upsample
  auto* up = app.add_subcommand("upsample", "Cubic-spline interpolation onto an isotropic grid");
  std::string up_in, up_out, up_ref;
  double up_spacing = 1.0;
  up->add_option("--in", up_in, "Low-resolution input volume")->required();
  up->add_option("--out", up_out, "Output volume path")->required();
  up->add_option("--spacing", up_spacing, "Isotropic output spacing in mm")->check(CLI::PositiveNumber);
  up->add_option("--reference", up_ref, "Volume whose extent the grid covers (default: input)");
  add_common(up);

  // replay
  auto* rp = app.add_subcommand("replay", "Re-run a command from its manifest");
  std::string rp_manifest;
  std::optional<std::string> rp_out;
  rp->add_option("--manifest", rp_manifest, "manifest.json of an earlier run")->required();
  rp->add_option("--out", rp_out, "Redirect outputs (directory or file, as in the original)");
  add_common(rp);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    apply_threads(ctx.threads);
    if (*fit) {
      KeyValueConfig cfg;
      if (!fit_config.empty()) cfg = KeyValueConfig::load(fit_config);
      KeyValueConfig flags;
      if (!fit_mode.empty()) flags.set("mode", fit_mode);
      if (fit_spacing) flags.set("target_spacing", fmt(*fit_spacing));
      if (fit_seed) flags.set("seed", std::to_string(*fit_seed));
      if (fit_epochs) flags.set("epochs", std::to_string(*fit_epochs));
      if (fit_batch) flags.set("batch_size", std::to_string(*fit_batch));
      if (fit_lr) flags.set("lr", fmt(*fit_lr));
      if (fit_deterministic) flags.set("deterministic", "true");
      apply_set_entries(flags, fit_set);
      cfg.merge(flags);
      const TrainConfig effective = TrainConfig::from_config(cfg);
      execute("fit", Params{{"c1", fit_c1}, {"c2", fit_c2}, {"out", fit_out}}, effective.to_config(), ctx);
    } else if (*ev) {
      execute("eval",
              Params{{"pred1", ev_pred1}, {"pred2", ev_pred2}, {"gt1", ev_gt1}, {"gt2", ev_gt2},
                     {"bins", std::to_string(ev_bins)}, {"out", ev_out}},
              KeyValueConfig{}, ctx);
    } else if (*ph) {
      KeyValueConfig cfg;
      if (!ph_config.empty()) cfg = KeyValueConfig::load(ph_config);
      if (ph_seed) cfg.set("seed", std::to_string(*ph_seed));
      if (ph_dims) cfg.set("dims", std::to_string(*ph_dims));
      execute("phantom", Params{{"out", ph_out}}, cfg, ctx);
    } else if (*dg) {
      Params p{{"in", dg_in},
               {"out", dg_out},
               {"plane", dg_plane},
               {"thickness", fmt(dg_thickness)},
               {"profile", dg_profile},
               {"allow_non_integral", dg_non_integral ? "true" : "false"},
               {"noise_sigma", fmt(dg_noise)},
               {"seed", std::to_string(dg_seed)}};
      if (dg_spacing) p["spacing"] = fmt(*dg_spacing);
      execute("degrade", p, KeyValueConfig{}, ctx);
    } else if (*up) {
      Params p{{"in", up_in}, {"out", up_out}, {"spacing", fmt(up_spacing)}};
      if (!up_ref.empty()) p["reference"] = up_ref;
      execute("upsample", p, KeyValueConfig{}, ctx);
    } else if (*rp) {
      replay(rp_manifest, rp_out, ctx);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitOk;
}

}  // namespace mcinr::cli
