#include "mcinr/trainer.hpp"

#include "mcinr/error.hpp"
#include "mcinr/fourier.hpp"
#include "mcinr/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace mcinr {

namespace {

constexpr std::uint64_t kBasisSeedOffset = 1;
constexpr std::uint64_t kInitSeedOffset = 2;
constexpr std::uint64_t kShuffleSeedOffset = 3;
constexpr Eigen::Index kPredictChunk = 16384;

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::uint64_t epoch_seed(std::uint64_t seed, int epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(kShuffleSeedOffset), static_cast<std::uint32_t>(epoch)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

IntensityNormalizer normalizer_for(const Volume& v, const NormalizerOptions& options, const std::string& name,
                                   std::vector<std::string>& warnings) {
  try {
    return fit_normalizer(v, options);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ConstantVolume) throw;
    const double value = v.data().empty() ? 0.0 : v.data()[0];
    warnings.push_back(name + " is constant; its intensities are mapped to 0.5");
    return IntensityNormalizer{value - 0.5, value + 0.5};
  }
}

bool boxes_overlap(const Volume& a, const Volume& b) {
  auto box = [](const Volume& v) {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    const Dims& d = v.dims();
    for (int corner = 0; corner < 8; ++corner) {
      const Vec3 w = v.world(Vec3((corner & 1) ? d.nx - 1 : 0, (corner & 2) ? d.ny - 1 : 0, (corner & 4) ? d.nz - 1 : 0));
      lo = lo.cwiseMin(w);
      hi = hi.cwiseMax(w);
    }
    return std::pair{lo, hi};
  };
  const auto [alo, ahi] = box(a);
  const auto [blo, bhi] = box(b);
  for (int axis = 0; axis < 3; ++axis) {
    if (ahi[axis] < blo[axis] || bhi[axis] < alo[axis]) return false;
  }
  return true;
}

/// Samples of both contrasts, concatenated; channel is the output channel index.
struct TrainingSamples {
  Coords coords;
  std::vector<double> targets;
  std::vector<std::uint8_t> channel;
};

void append(TrainingSamples& all, const SampleSet& s, std::uint8_t channel) {
  const Eigen::Index start = all.coords.cols();
  all.coords.conservativeResize(3, start + static_cast<Eigen::Index>(s.size()));
  all.coords.middleCols(start, static_cast<Eigen::Index>(s.size())) = s.coords;
  all.targets.insert(all.targets.end(), s.intensities.begin(), s.intensities.end());
  all.channel.insert(all.channel.end(), s.size(), channel);
}

double mi_of_predictions(const FittedModel& fitted, const Coords& coords, int bins) {
  const Eigen::MatrixXd y = predict_normalized(fitted, coords);
  std::vector<float> a(static_cast<std::size_t>(y.cols()));
  std::vector<float> b(a.size());
  for (Eigen::Index n = 0; n < y.cols(); ++n) {
    a[n] = static_cast<float>(y(0, n));
    b[n] = static_cast<float>(y(1, n));
  }
  return mutual_information(a, b, bins);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    fail(ErrorCode::InvalidArgument, "config key '" + key + "': bad number '" + text + "'");
  }
  return value;
}

}  // namespace

std::string_view to_string(StopPolicy policy) noexcept {
  switch (policy) {
    case StopPolicy::stop: return "stop";
    case StopPolicy::observe: return "observe";
    case StopPolicy::none: return "none";
  }
  return "stop";
}

std::string_view to_string(ScheduleUnit unit) noexcept {
  return unit == ScheduleUnit::batch ? "batch" : "epoch";
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::InvalidArgument, what);
  };
  require(epochs >= 1, "epochs must be >= 1");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(std::isfinite(lr) && lr > 0.0, "lr must be > 0");
  require(std::isfinite(lr_min) && lr_min >= 0.0 && lr_min <= lr, "lr_min must lie in [0, lr]");
  require(fourier_dim >= 2 && fourier_dim % 2 == 0, "fourier_dim must be an even count >= 2");
  require(std::isfinite(sigma) && sigma > 0.0, "sigma must be > 0");
  require(std::isfinite(fourier_scale) && fourier_scale > 0.0, "fourier_scale must be > 0");
  require(trunk_width >= 1 && trunk_depth >= 1 && head_width >= 1, "layer widths and depth must be >= 1");
  require(single_contrast == 1 || single_contrast == 2, "single_contrast must be 1 or 2");
  require(alpha >= 0.0 && beta >= 0.0 && alpha + beta > 0.0, "alpha and beta must be >= 0 and not both zero");
  require(mi_interval >= 1, "mi_interval must be >= 1");
  require(mi_bins >= 2, "mi_bins must be >= 2");
  require(mi_grid_stride >= 1, "mi_grid_stride must be >= 1");
  require(plateau_window >= 2, "plateau_window must be >= 2");
  require(plateau_tol >= 0.0, "plateau_tol must be >= 0");
  require(std::isfinite(target_spacing) && target_spacing > 0.0, "target_spacing must be > 0");
  require(grid_reference == 1 || grid_reference == 2, "grid_reference must be 1 or 2");
  require(clip_norm >= 0.0, "clip_norm must be >= 0");
  require(!halt_after_epoch || *halt_after_epoch >= 1, "halt_after_epoch must be >= 1");
}

ModelShape TrainConfig::model_shape() const {
  ModelShape s;
  s.input_dim = fourier_dim;
  s.trunk_width = trunk_width;
  s.trunk_depth = trunk_depth;
  s.head_width = head_width;
  s.mode = mode;
  return s;
}

KeyValueConfig TrainConfig::to_config() const {
  KeyValueConfig c;
  c.set("epochs", std::to_string(epochs));
  c.set("batch_size", std::to_string(batch_size));
  c.set("lr", fmt_double(lr));
  c.set("lr_min", fmt_double(lr_min));
  c.set("schedule", std::string(to_string(schedule)));
  c.set("adam_beta1", fmt_double(adam.beta1));
  c.set("adam_beta2", fmt_double(adam.beta2));
  c.set("adam_eps", fmt_double(adam.eps));
  c.set("clip_norm", fmt_double(clip_norm));
  c.set("fourier_dim", std::to_string(fourier_dim));
  c.set("sigma", fmt_double(sigma));
  c.set("fourier_scale", fmt_double(fourier_scale));
  c.set("trunk_width", std::to_string(trunk_width));
  c.set("trunk_depth", std::to_string(trunk_depth));
  c.set("head_width", std::to_string(head_width));
  c.set("mode", std::string(to_string(mode)));
  c.set("single_contrast", std::to_string(single_contrast));
  c.set("alpha", fmt_double(alpha));
  c.set("beta", fmt_double(beta));
  c.set("loss_reduction", reduction == LossReduction::mean ? "mean" : "sum");
  c.set("seed", std::to_string(seed));
  c.set("deterministic", deterministic ? "true" : "false");
  c.set("mi_interval", std::to_string(mi_interval));
  c.set("mi_bins", std::to_string(mi_bins));
  c.set("mi_grid_stride", std::to_string(mi_grid_stride));
  c.set("plateau_window", std::to_string(plateau_window));
  c.set("plateau_tol", fmt_double(plateau_tol));
  c.set("stop_policy", std::string(to_string(stop_policy)));
  c.set("target_spacing", fmt_double(target_spacing));
  c.set("grid_reference", std::to_string(grid_reference));
  c.set("normalize_lo_percentile", fmt_double(normalizer.lo_percentile));
  c.set("normalize_hi_percentile", fmt_double(normalizer.hi_percentile));
  if (mask_threshold_c1) c.set("mask_threshold_c1", fmt_double(*mask_threshold_c1));
  if (mask_threshold_c2) c.set("mask_threshold_c2", fmt_double(*mask_threshold_c2));
  if (halt_after_epoch) c.set("halt_after_epoch", std::to_string(*halt_after_epoch));
  return c;
}

TrainConfig TrainConfig::from_config(const KeyValueConfig& cfg) { return from_config(cfg, TrainConfig{}); }

TrainConfig TrainConfig::from_config(const KeyValueConfig& cfg, TrainConfig base) {
  TrainConfig t = std::move(base);
  for (const auto& [key, value] : cfg.entries()) {
    auto i = [&] { return parse_number<int>(key, value); };
    auto d = [&] { return parse_number<double>(key, value); };
    if (key == "epochs") t.epochs = i();
    else if (key == "batch_size") t.batch_size = i();
    else if (key == "lr") t.lr = d();
    else if (key == "lr_min") t.lr_min = d();
    else if (key == "schedule") {
      if (value == "epoch") t.schedule = ScheduleUnit::epoch;
      else if (value == "batch") t.schedule = ScheduleUnit::batch;
      else fail(ErrorCode::InvalidArgument, "schedule must be 'epoch' or 'batch'");
    } else if (key == "adam_beta1") t.adam.beta1 = d();
    else if (key == "adam_beta2") t.adam.beta2 = d();
    else if (key == "adam_eps") t.adam.eps = d();
    else if (key == "clip_norm") t.clip_norm = d();
    else if (key == "fourier_dim") t.fourier_dim = i();
    else if (key == "sigma") t.sigma = d();
    else if (key == "fourier_scale") t.fourier_scale = d();
    else if (key == "trunk_width") t.trunk_width = i();
    else if (key == "trunk_depth") t.trunk_depth = i();
    else if (key == "head_width") t.head_width = i();
    else if (key == "mode") t.mode = parse_head_mode(value);
    else if (key == "single_contrast") t.single_contrast = i();
    else if (key == "alpha") t.alpha = d();
    else if (key == "beta") t.beta = d();
    else if (key == "loss_reduction") {
      if (value == "mean") t.reduction = LossReduction::mean;
      else if (value == "sum") t.reduction = LossReduction::sum;
      else fail(ErrorCode::InvalidArgument, "loss_reduction must be 'mean' or 'sum'");
    } else if (key == "seed") t.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "deterministic") {
      if (value == "true" || value == "1") t.deterministic = true;
      else if (value == "false" || value == "0") t.deterministic = false;
      else fail(ErrorCode::InvalidArgument, "deterministic must be true or false");
    } else if (key == "mi_interval") t.mi_interval = i();
    else if (key == "mi_bins") t.mi_bins = i();
    else if (key == "mi_grid_stride") t.mi_grid_stride = i();
    else if (key == "plateau_window") t.plateau_window = i();
    else if (key == "plateau_tol") t.plateau_tol = d();
    else if (key == "stop_policy") {
      if (value == "stop") t.stop_policy = StopPolicy::stop;
      else if (value == "observe") t.stop_policy = StopPolicy::observe;
      else if (value == "none") t.stop_policy = StopPolicy::none;
      else fail(ErrorCode::InvalidArgument, "stop_policy must be stop, observe or none");
    } else if (key == "target_spacing") t.target_spacing = d();
    else if (key == "grid_reference") t.grid_reference = i();
    else if (key == "normalize_lo_percentile") t.normalizer.lo_percentile = d();
    else if (key == "normalize_hi_percentile") t.normalizer.hi_percentile = d();
    else if (key == "mask_threshold_c1") t.mask_threshold_c1 = d();
    else if (key == "mask_threshold_c2") t.mask_threshold_c2 = d();
    else if (key == "halt_after_epoch") t.halt_after_epoch = i();
    else fail(ErrorCode::InvalidArgument, "unknown training config key '" + key + "'");
  }
  t.validate();
  return t;
}

Eigen::MatrixXd predict_normalized(const FittedModel& fitted, const Eigen::Ref<const Coords>& coords) {
  const Eigen::Index n = coords.cols();
  Eigen::MatrixXd out(fitted.model.shape().output_channels(), n);
  for (Eigen::Index start = 0; start < n; start += kPredictChunk) {
    const Eigen::Index len = std::min(kPredictChunk, n - start);
    const Eigen::MatrixXd features = encode_batch(coords.middleCols(start, len), fitted.basis);
    out.middleCols(start, len) = fitted.model.forward_batch(features).cwiseMax(0.0).cwiseMin(1.0);
  }
  return out;
}

Reconstruction reconstruct(const FittedModel& fitted, const GridSpec& grid) {
  const Coords coords = grid_coordinates(grid, fitted.domain);
  const Eigen::MatrixXd y = predict_normalized(fitted, coords);
  Reconstruction r;
  for (Eigen::Index ch = 0; ch < y.rows(); ++ch) {
    const int contrast = fitted.channel_contrast[ch];
    if (contrast != 1 && contrast != 2) continue;
    const auto& norm = fitted.normalizers[contrast - 1];
    if (!norm) fail(ErrorCode::InvalidArgument, "model lacks an intensity normalizer for contrast " + std::to_string(contrast));
    Volume v(grid.dims, grid.affine);
    auto data = v.data();
    for (Eigen::Index n = 0; n < y.cols(); ++n) data[n] = static_cast<float>(norm->inverse(y(ch, n)));
    (contrast == 1 ? r.c1 : r.c2) = std::move(v);
  }
  return r;
}

TrainingRun train(const Volume& v1, const Volume& v2, const TrainConfig& cfg, const Checkpoint* resume,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  TrainingRun run;

  const CoordinateDomain domain = build_domain(v1, v2);
  if (!boxes_overlap(v1, v2)) run.warnings.push_back("the two volumes do not overlap in world space");

  const bool single = cfg.mode == HeadMode::single_contrast;
  const bool use1 = !single || cfg.single_contrast == 1;
  const bool use2 = !single || cfg.single_contrast == 2;

  std::array<std::optional<IntensityNormalizer>, 2> normalizers;
  if (use1) normalizers[0] = normalizer_for(v1, cfg.normalizer, "contrast 1", run.warnings);
  if (use2) normalizers[1] = normalizer_for(v2, cfg.normalizer, "contrast 2", run.warnings);

  TrainingSamples samples;
  samples.coords.resize(3, 0);
  if (use1) {
    SampleOptions o;
    o.mask_threshold = cfg.mask_threshold_c1;
    append(samples, extract_samples(v1, domain, *normalizers[0], 1, o), 0);
  }
  if (use2) {
    SampleOptions o;
    o.mask_threshold = cfg.mask_threshold_c2;
    append(samples, extract_samples(v2, domain, *normalizers[1], 2, o), single ? 0 : 1);
  }
  const std::size_t n_samples = samples.targets.size();
  if (n_samples == 0) fail(ErrorCode::InvalidArgument, "no training samples (mask removed every voxel)");

  const Volume& reference = cfg.grid_reference == 1 ? v1 : v2;
  run.grid = plan_isotropic_grid(reference, cfg.target_spacing);
  const bool track_mi = !single;
  Coords mi_coords;
  if (track_mi) {
    const GridSpec mi_grid = cfg.mi_grid_stride == 1 ? run.grid
                                                      : plan_isotropic_grid(reference, cfg.target_spacing * cfg.mi_grid_stride);
    mi_coords = grid_coordinates(mi_grid, domain);
  }

  FittedModel fitted{SplitHeadModel::initialize(cfg.model_shape(), cfg.seed + kInitSeedOffset),
                     sample_basis(cfg.fourier_dim / 2, cfg.sigma, cfg.seed + kBasisSeedOffset, cfg.fourier_scale),
                     domain,
                     normalizers,
                     single ? std::array<int, 2>{cfg.single_contrast, 0} : std::array<int, 2>{1, 2},
                     cfg.seed};
  AdamState adam = AdamState::for_size(fitted.model.parameter_count(), cfg.adam);
  int start_epoch = 0;

  if (resume) {
    const FittedModel& r = resume->fitted;
    if (!(r.model.shape() == fitted.model.shape()) || r.basis.matrix != fitted.basis.matrix ||
        r.channel_contrast != fitted.channel_contrast) {
      fail(ErrorCode::ShapeMismatch, "resume checkpoint does not match the training configuration");
    }
    if (!resume->optimizer || resume->optimizer->m.size() != fitted.model.parameter_count()) {
      fail(ErrorCode::ShapeMismatch, "resume checkpoint carries no usable optimizer state");
    }
    std::copy(r.model.parameters().begin(), r.model.parameters().end(), fitted.model.parameters().begin());
    adam = *resume->optimizer;
    start_epoch = static_cast<int>(resume->epochs_completed);
    if (start_epoch > cfg.epochs) fail(ErrorCode::InvalidArgument, "resume checkpoint is past the epoch cap");
    if (track_mi) {
      for (std::size_t k = 0; k < resume->mi_history.size(); ++k) {
        run.mi_history.push_back(resume->mi_history[k]);
        run.mi_epochs.push_back(static_cast<int>(k + 1) * cfg.mi_interval);
        if (cfg.stop_policy != StopPolicy::none && !run.plateau_epoch &&
            mi_plateau(run.mi_history, cfg.plateau_window, cfg.plateau_tol)) {
          run.plateau_epoch = run.mi_epochs.back();
          run.warnings.push_back("plateau was reached before the resumed epoch; keeping the final model");
        }
      }
    }
  }

  const int batches = static_cast<int>((n_samples + cfg.batch_size - 1) / cfg.batch_size);
  LrSchedule schedule;
  schedule.lr_max = cfg.lr;
  schedule.lr_min = cfg.lr_min;
  schedule.total_steps = cfg.schedule == ScheduleUnit::epoch ? cfg.epochs : std::int64_t{cfg.epochs} * batches;

  LossWeights weights{cfg.alpha, cfg.beta, cfg.reduction};
  GradientBuffer grads = fitted.model.make_gradient_buffer();
  std::vector<std::uint32_t> order(n_samples);
  Batch batch;
  Coords batch_coords(3, cfg.batch_size);

  std::optional<Checkpoint> plateau_state;

  auto snapshot = [&](int epochs_done) {
    return Checkpoint{fitted, adam, epochs_done, run.mi_history};
  };

  int epoch = start_epoch;
  while (epoch < cfg.epochs) {
    std::iota(order.begin(), order.end(), 0u);
    std::mt19937_64 rng(epoch_seed(cfg.seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);

    std::array<double, 2> sse{0.0, 0.0};
    std::array<std::size_t, 2> count{0, 0};
    double epoch_lr = lr_at(schedule, cfg.schedule == ScheduleUnit::epoch ? epoch : std::int64_t{epoch} * batches);

    for (int b = 0; b < batches; ++b) {
      const std::size_t begin = static_cast<std::size_t>(b) * cfg.batch_size;
      const std::size_t len = std::min<std::size_t>(cfg.batch_size, n_samples - begin);
      batch_coords.resize(3, static_cast<Eigen::Index>(len));
      batch.targets.resize(len);
      batch.channel.resize(len);
      for (std::size_t k = 0; k < len; ++k) {
        const std::uint32_t idx = order[begin + k];
        batch_coords.col(static_cast<Eigen::Index>(k)) = samples.coords.col(idx);
        batch.targets[k] = samples.targets[idx];
        batch.channel[k] = samples.channel[idx];
      }
      batch.features = encode_batch(batch_coords, fitted.basis);

      LossValue loss;
      try {
        loss = fitted.model.backward(batch, weights, grads);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NonFiniteLoss) throw;
        fail(ErrorCode::NonFiniteLoss, "training diverged at epoch " + std::to_string(epoch + 1) + ", batch " +
                                           std::to_string(b + 1) + ": " + e.what());
      }
      for (int c = 0; c < 2; ++c) {
        sse[c] += loss.sse[c];
        count[c] += loss.count[c];
      }
      if (cfg.clip_norm > 0.0) clip_by_norm(grads.values(), cfg.clip_norm);
      const double lr = cfg.schedule == ScheduleUnit::epoch ? epoch_lr : lr_at(schedule, std::int64_t{epoch} * batches + b);
      try {
        adam_step<float>(fitted.model.parameters(), grads.values(), adam, lr);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NonFiniteUpdate) throw;
        fail(ErrorCode::NonFiniteLoss, "training diverged at epoch " + std::to_string(epoch + 1) + ", batch " +
                                           std::to_string(b + 1) + ": " + e.what());
      }
    }
    ++epoch;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = epoch_lr;
    const std::array<double, 2> coef{cfg.alpha, cfg.beta};
    std::array<std::optional<double>, 2> per_contrast;
    for (int ch = 0; ch < 2; ++ch) {
      if (count[ch] == 0) continue;
      const double mse = sse[ch] / static_cast<double>(count[ch]);
      const int contrast = fitted.channel_contrast[ch];
      per_contrast[contrast - 1] = mse;
      rec.loss_total += coef[ch] * mse;
    }
    rec.loss_c1 = per_contrast[0];
    rec.loss_c2 = per_contrast[1];

    if (track_mi && epoch % cfg.mi_interval == 0) {
      rec.mi = mi_of_predictions(fitted, mi_coords, cfg.mi_bins);
      run.mi_history.push_back(*rec.mi);
      run.mi_epochs.push_back(epoch);
    }
    run.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.mi && cfg.stop_policy != StopPolicy::none && !run.plateau_epoch &&
        mi_plateau(run.mi_history, cfg.plateau_window, cfg.plateau_tol)) {
      run.plateau_epoch = epoch;
      plateau_state = snapshot(epoch);
      if (cfg.stop_policy == StopPolicy::stop) {
        run.stopped_early = epoch < cfg.epochs;
        break;
      }
    }
    if (cfg.halt_after_epoch && epoch >= *cfg.halt_after_epoch) break;
  }

  run.stop_epoch = run.plateau_epoch && cfg.stop_policy == StopPolicy::stop ? *run.plateau_epoch : epoch;
  run.final_state = snapshot(epoch);
  run.best = plateau_state ? std::move(*plateau_state) : run.final_state;
  run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

void write_training_log(std::ostream& out, const std::vector<EpochRecord>& history) {
  auto opt = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string("NA"); };
  out << "# epoch\tlr\tloss_c1\tloss_c2\tloss_total\tmi\n";
  for (const EpochRecord& r : history) {
    out << r.epoch << '\t' << fmt_double(r.lr) << '\t' << opt(r.loss_c1) << '\t' << opt(r.loss_c2) << '\t'
        << fmt_double(r.loss_total) << '\t' << opt(r.mi) << '\n';
  }
}

std::vector<EpochRecord> read_training_log(std::istream& in) {
  std::vector<EpochRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t')) fields.push_back(f);
    if (fields.size() != 6) {
      fail(ErrorCode::MalformedHeader, "training log line " + std::to_string(line_no) + " has " +
                                           std::to_string(fields.size()) + " fields, expected 6");
    }
    auto opt = [&](const std::string& s) -> std::optional<double> {
      if (s == "NA") return std::nullopt;
      return parse_number<double>("training log", s);
    };
    EpochRecord r;
    r.epoch = parse_number<int>("training log", fields[0]);
    r.lr = parse_number<double>("training log", fields[1]);
    r.loss_c1 = opt(fields[2]);
    r.loss_c2 = opt(fields[3]);
    r.loss_total = parse_number<double>("training log", fields[4]);
    r.mi = opt(fields[5]);
    out.push_back(r);
  }
  return out;
}

}  // namespace mcinr
