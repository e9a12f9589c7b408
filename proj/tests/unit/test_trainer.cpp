#include "mcinr/acquisition.hpp"
#include "mcinr/checkpoint.hpp"
#include "mcinr/error.hpp"
#include "mcinr/metrics.hpp"
#include "mcinr/phantom.hpp"
#include "mcinr/trainer.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <sstream>

#include "test_errors.hpp"
#include "test_support.hpp"

namespace mcinr {
namespace {

using test::error_of;

TrainConfig tiny_config() {
  TrainConfig c;
  c.epochs = 4;
  c.batch_size = 64;
  c.lr = 5e-3;
  c.fourier_dim = 32;
  c.sigma = 1.0;
  c.trunk_width = 32;
  c.trunk_depth = 2;
  c.head_width = 16;
  c.mi_grid_stride = 2;
  c.stop_policy = StopPolicy::none;
  c.target_spacing = 4.0;
  return c;
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool same_data(const Volume& a, const Volume& b) {
  return a.dims() == b.dims() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

/// Axial and sagittal 4 mm acquisitions of a small default phantom.
std::pair<Volume, Volume> phantom_pair(std::uint64_t seed, int n = 24) {
  const Phantom p = make_phantom(default_phantom_spec(seed, Dims{n, n, n}, 96.0 / n, 3, 2));
  AcquisitionSpec a1;
  a1.in_plane_spacing = 96.0 / n;
  a1.thickness = 4 * 96.0 / n;
  AcquisitionSpec a2 = a1;
  a2.plane = Plane::sagittal;
  return {simulate_acquisition(p.gt1, a1), simulate_acquisition(p.gt2, a2)};
}

TEST(TrainConfig, DefaultsAndValidation) {
  const TrainConfig c;
  EXPECT_EQ(c.epochs, 50);
  EXPECT_EQ(c.batch_size, 1000);
  EXPECT_DOUBLE_EQ(c.lr, 4e-4);
  EXPECT_EQ(c.fourier_dim, 512);
  EXPECT_DOUBLE_EQ(c.sigma, 4.0);
  EXPECT_EQ(c.trunk_width, 1024);
  EXPECT_EQ(c.head_width, 512);
  EXPECT_NO_THROW(c.validate());
  TrainConfig bad = c;
  bad.batch_size = 0;
  EXPECT_EQ(error_of([&] { bad.validate(); }), ErrorCode::InvalidArgument);
  bad = c;
  bad.target_spacing = 0.0;
  EXPECT_EQ(error_of([&] { bad.validate(); }), ErrorCode::InvalidArgument);
  bad = c;
  bad.fourier_dim = 7;
  EXPECT_EQ(error_of([&] { bad.validate(); }), ErrorCode::InvalidArgument);
}

TEST(TrainConfig, KeyValueRoundTrip) {
  TrainConfig c = tiny_config();
  c.mode = HeadMode::vanilla;
  c.alpha = 0.25;
  c.seed = 99;
  c.mask_threshold_c2 = 0.1;
  c.schedule = ScheduleUnit::batch;
  const TrainConfig back = TrainConfig::from_config(c.to_config());
  EXPECT_EQ(back.to_config().entries(), c.to_config().entries());
  EXPECT_EQ(back.mode, HeadMode::vanilla);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.mask_threshold_c2, 0.1);
  EXPECT_EQ(error_of([] { TrainConfig::from_config(KeyValueConfig::parse("epoch = 3\n")); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(TrainConfig::from_config(KeyValueConfig::parse("lr = 0.5\n"), c).epochs, c.epochs);
}

TEST(Train, ConstantVolumesFitQuickly) {
  const Volume v1(Dims{8, 8, 8}, Mat4::Identity(), std::vector<float>(512, 3.0f));
  const Volume v2(Dims{8, 8, 8}, Mat4::Identity(), std::vector<float>(512, -1.0f));
  TrainConfig c = tiny_config();
  c.epochs = 2;
  c.batch_size = 8;
  c.lr = 5e-2;
  const TrainingRun run = train(v1, v2, c);
  ASSERT_EQ(run.history.size(), 2u);
  EXPECT_LT(*run.history.back().loss_c1, 1e-4);
  EXPECT_LT(*run.history.back().loss_c2, 1e-4);
  EXPECT_FALSE(run.warnings.empty());

  // The constant normalizer spans one intensity unit, so the reconstruction's
  // squared error is directly comparable to the normalized training loss.
  const Reconstruction r = reconstruct(run.best.fitted, GridSpec{v1.dims(), v1.affine()});
  auto mse = [](const Volume& v, float value) {
    double s = 0.0;
    for (float x : v.data()) s += (x - value) * (x - value);
    return s / static_cast<double>(v.size());
  };
  EXPECT_LT(mse(*r.c1, 3.0f), 1e-4);
  EXPECT_LT(mse(*r.c2, -1.0f), 1e-4);
}

TEST(Train, SingleContrastHistory) {
  const Volume smooth = make_smooth_volume(Dims{20, 20, 20}, 1.0, 4, 4.0);
  AcquisitionSpec a;
  const Volume lr = simulate_acquisition(smooth, a);
  TrainConfig c = tiny_config();
  c.mode = HeadMode::single_contrast;
  c.single_contrast = 1;
  c.epochs = 5;
  c.lr = 2e-3;
  c.stop_policy = StopPolicy::stop;
  const TrainingRun run = train(lr, lr, c);
  ASSERT_EQ(run.history.size(), 5u);
  EXPECT_TRUE(run.mi_history.empty());
  for (std::size_t e = 0; e < run.history.size(); ++e) {
    EXPECT_FALSE(run.history[e].loss_c2.has_value());
    ASSERT_TRUE(run.history[e].loss_c1.has_value());
    EXPECT_GT(*run.history[e].loss_c1, 0.0);
    if (e > 0) EXPECT_LT(*run.history[e].loss_c1, *run.history[e - 1].loss_c1);
  }
  const Reconstruction r = reconstruct(run.best.fitted, run.grid);
  EXPECT_TRUE(r.c1.has_value());
  EXPECT_FALSE(r.c2.has_value());
}

TEST(Train, OverfitReproducesTrainingVolume) {
  const Volume v = make_smooth_volume(Dims{10, 10, 10}, 1.0, 8, 2.0);
  TrainConfig c = tiny_config();
  c.epochs = 150;
  c.batch_size = 100;
  c.lr = 2e-3;
  c.fourier_dim = 64;
  c.sigma = 1.0;
  c.trunk_width = 64;
  c.head_width = 32;
  c.mi_interval = 1000;
  const TrainingRun run = train(v, v, c);
  const Reconstruction r = reconstruct(run.best.fitted, GridSpec{v.dims(), v.affine()});
  EXPECT_GT(psnr(*r.c1, v), 40.0);
  EXPECT_GT(psnr(*r.c2, v), 40.0);
}

TEST(Reconstruct, CoarseGridDims) {
  const auto [v1, v2] = phantom_pair(1);
  TrainConfig c = tiny_config();
  c.epochs = 1;
  const TrainingRun run = train(v1, v2, c);
  EXPECT_EQ(run.grid.dims, (Dims{24, 24, 24}));
  const GridSpec coarse = plan_isotropic_grid(v1, 16.0);
  EXPECT_EQ(coarse.dims, (Dims{6, 6, 6}));
  const Reconstruction r = reconstruct(run.best.fitted, coarse);
  EXPECT_EQ(r.c1->dims(), coarse.dims);
  EXPECT_TRUE(r.c2->affine().isApprox(coarse.affine));
}

TEST(Train, DeterministicCheckpointsAndVolumes) {
  const auto [v1, v2] = phantom_pair(2);
  TrainConfig c = tiny_config();
  c.epochs = 3;
  const TrainingRun a = train(v1, v2, c);
  const TrainingRun b = train(v1, v2, c);
  test::TempDir dir("det");
  save_checkpoint(a.final_state, dir / "a.ckpt");
  save_checkpoint(b.final_state, dir / "b.ckpt");
  EXPECT_EQ(file_bytes(dir / "a.ckpt"), file_bytes(dir / "b.ckpt"));
  EXPECT_EQ(a.mi_history, b.mi_history);
  const Reconstruction ra = reconstruct(a.best.fitted, a.grid);
  const Reconstruction rb = reconstruct(b.best.fitted, b.grid);
  EXPECT_TRUE(same_data(*ra.c1, *rb.c1));
  EXPECT_TRUE(same_data(*ra.c2, *rb.c2));

  TrainConfig other = c;
  other.seed = 1;
  const TrainingRun d = train(v1, v2, other);
  EXPECT_NE(d.history.back().loss_total, a.history.back().loss_total);
}

TEST(Train, ResumeMatchesUninterruptedRun) {
  const auto [v1, v2] = phantom_pair(3);
  TrainConfig c = tiny_config();
  c.epochs = 4;
  const TrainingRun full = train(v1, v2, c);

  TrainConfig first = c;
  first.halt_after_epoch = 2;
  const TrainingRun half = train(v1, v2, first);
  EXPECT_EQ(half.stop_epoch, 2);
  test::TempDir dir("resume");
  save_checkpoint(half.final_state, dir / "half.ckpt");
  const Checkpoint loaded = load_checkpoint(dir / "half.ckpt");
  const TrainingRun rest = train(v1, v2, c, &loaded);

  save_checkpoint(full.final_state, dir / "full.ckpt");
  save_checkpoint(rest.final_state, dir / "rest.ckpt");
  EXPECT_EQ(file_bytes(dir / "full.ckpt"), file_bytes(dir / "rest.ckpt"));
  EXPECT_EQ(rest.mi_history, full.mi_history);
}

TEST(Train, PlateauStopsEarly) {
  const auto [v1, v2] = phantom_pair(4);
  TrainConfig c = tiny_config();
  c.epochs = 10;
  c.plateau_window = 2;
  c.plateau_tol = 10.0;
  c.stop_policy = StopPolicy::stop;
  const TrainingRun run = train(v1, v2, c);
  ASSERT_TRUE(run.plateau_epoch.has_value());
  EXPECT_EQ(*run.plateau_epoch, 2);
  EXPECT_EQ(run.stop_epoch, 2);
  EXPECT_TRUE(run.stopped_early);
  EXPECT_EQ(run.best.epochs_completed, 2);

  c.stop_policy = StopPolicy::observe;
  const TrainingRun observed = train(v1, v2, c);
  EXPECT_EQ(observed.stop_epoch, 10);
  EXPECT_EQ(observed.plateau_epoch, run.plateau_epoch);
  EXPECT_EQ(observed.best.epochs_completed, 2);
  EXPECT_EQ(observed.best.fitted.model.parameters()[5], run.best.fitted.model.parameters()[5]);
}

TEST(Train, DivergenceReportsEpochAndBatch) {
  const auto [v1, v2] = phantom_pair(5);
  TrainConfig c = tiny_config();
  c.lr = 1e38;
  try {
    train(v1, v2, c);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteLoss);
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("batch"), std::string::npos) << e.what();
  }
}

TEST(Train, DisjointVolumesWarn) {
  const Volume v1(Dims{6, 6, 6}, make_affine(Vec3(1, 1, 1)), std::vector<float>(216, 1.0f));
  Volume v2(Dims{6, 6, 6}, make_affine(Vec3(1, 1, 1), Vec3(100, 0, 0)));
  test::Lcg lcg(1);
  for (float& x : v2.data()) x = static_cast<float>(lcg.next());
  TrainConfig c = tiny_config();
  c.epochs = 1;
  const TrainingRun run = train(v1, v2, c);
  bool disjoint = false;
  for (const std::string& w : run.warnings) disjoint |= w.find("overlap") != std::string::npos;
  EXPECT_TRUE(disjoint);
}

TEST(Train, LossDecreasesOverTenEpochsAcrossSeeds) {
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto [v1, v2] = phantom_pair(seed, 16);
    TrainConfig c = tiny_config();
    c.epochs = 10;
    c.seed = seed;
    c.mi_interval = 100;
    const TrainingRun run = train(v1, v2, c);
    if (run.history[9].loss_total < run.history[0].loss_total) ++improved;
  }
  EXPECT_GE(improved, 19);
}

TEST(TrainingLog, RoundTrip) {
  std::vector<EpochRecord> h(3);
  for (int e = 0; e < 3; ++e) {
    h[e].epoch = e + 1;
    h[e].lr = 1e-3 / (e + 1);
    h[e].loss_c1 = 0.1 / (e + 3);
    h[e].loss_total = 0.2 / (e + 7);
  }
  h[1].mi = 1.0 / 3.0;
  h[2].loss_c2 = 0.5;
  std::stringstream ss;
  write_training_log(ss, h);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "# epoch\tlr\tloss_c1\tloss_c2\tloss_total\tmi");
  const std::vector<EpochRecord> back = read_training_log(ss);
  ASSERT_EQ(back.size(), 3u);
  for (int e = 0; e < 3; ++e) {
    EXPECT_EQ(back[e].epoch, h[e].epoch);
    EXPECT_EQ(back[e].lr, h[e].lr);
    EXPECT_EQ(back[e].loss_c1, h[e].loss_c1);
    EXPECT_EQ(back[e].loss_c2, h[e].loss_c2);
    EXPECT_EQ(back[e].loss_total, h[e].loss_total);
    EXPECT_EQ(back[e].mi, h[e].mi);
  }
}

TEST(Checkpoint, RoundTripReproducesForwardBitForBit) {
  const auto [v1, v2] = phantom_pair(6);
  TrainConfig c = tiny_config();
  c.epochs = 1;
  const TrainingRun run = train(v1, v2, c);
  test::TempDir dir("ckpt");
  save_checkpoint(run.final_state, dir / "m.ckpt");
  const Checkpoint back = load_checkpoint(dir / "m.ckpt");
  EXPECT_EQ(back.epochs_completed, 1);
  ASSERT_TRUE(back.optimizer.has_value());
  EXPECT_EQ(back.optimizer->t, run.final_state.optimizer->t);
  EXPECT_EQ(back.fitted.basis.matrix, run.final_state.fitted.basis.matrix);
  const Coords x = grid_coordinates(run.grid, run.final_state.fitted.domain);
  EXPECT_EQ(predict_normalized(back.fitted, x), predict_normalized(run.final_state.fitted, x));
}

TEST(Checkpoint, CorruptFilesAreRejected) {
  const auto [v1, v2] = phantom_pair(7);
  TrainConfig c = tiny_config();
  c.epochs = 1;
  const TrainingRun run = train(v1, v2, c);
  test::TempDir dir("corrupt");
  save_checkpoint(run.final_state, dir / "m.ckpt");
  const std::string bytes = file_bytes(dir / "m.ckpt");
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream(dir / name, std::ios::binary) << content;
    return dir / name;
  };
  const auto truncated = write("t.ckpt", bytes.substr(0, bytes.size() / 2));
  EXPECT_EQ(error_of([&] { load_checkpoint(truncated); }), ErrorCode::TruncatedData);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  const auto magic = write("b.ckpt", bad_magic);
  EXPECT_EQ(error_of([&] { load_checkpoint(magic); }), ErrorCode::MalformedHeader);
  const auto trailing = write("x.ckpt", bytes + "extra");
  EXPECT_EQ(error_of([&] { load_checkpoint(trailing); }), ErrorCode::MalformedHeader);
  EXPECT_EQ(error_of([&] { load_checkpoint(dir / "missing.ckpt"); }), ErrorCode::IoFailure);
}

}  // namespace
}  // namespace mcinr
