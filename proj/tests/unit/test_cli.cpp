#include "cli.hpp"
#include "manifest.hpp"

#include "mcinr/nifti.hpp"
#include "mcinr/volume.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "test_support.hpp"

namespace mcinr {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliResult r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::map<std::string, std::string> records(const std::string& text) {
  std::map<std::string, std::string> m;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    const auto tab = line.find('\t');
    if (tab != std::string::npos) m[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return m;
}

std::string small_fit_config() {
  return "fourier_dim = 32\n"
         "sigma = 1\n"
         "trunk_width = 32\n"
         "trunk_depth = 2\n"
         "head_width = 16\n"
         "epochs = 3\n"
         "batch_size = 200\n"
         "lr = 2e-3\n";
}

/// phantom -> axial and sagittal acquisitions in `dir`.
void make_inputs(const test::TempDir& dir) {
  ASSERT_EQ(run_cli({"phantom", "--seed", "7", "--dims", "24", "--out", (dir / "p").string(), "--quiet"}).code, 0);
  ASSERT_EQ(run_cli({"degrade", "--in", (dir / "p/gt1.nii.gz").string(), "--out", (dir / "lr1.nii.gz").string(),
                     "--plane", "axial", "--thickness", "4", "--quiet"})
                .code,
            0);
  ASSERT_EQ(run_cli({"degrade", "--in", (dir / "p/gt2.nii.gz").string(), "--out", (dir / "lr2.nii.gz").string(),
                     "--plane", "sagittal", "--thickness", "4", "--quiet"})
                .code,
            0);
  std::ofstream(dir / "fit.cfg") << small_fit_config();
}

TEST(Cli, MissingRequiredFlag) {
  const CliResult r = run_cli({"fit", "--c1", "a.nii.gz", "--out", "x"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("--c2"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("Usage"), std::string::npos) << r.err;
}

TEST(Cli, UnknownSubcommandAndHelp) {
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"--help"}).code, cli::kExitOk);
}

TEST(Cli, NanInputIsAnIoError) {
  test::TempDir dir("nan");
  Volume v(Dims{8, 8, 8}, Mat4::Identity());
  v.at(1, 2, 3) = std::numeric_limits<float>::quiet_NaN();
  save_volume(v, dir / "nan.nii.gz");
  save_volume(Volume(Dims{8, 8, 8}, Mat4::Identity()), dir / "ok.nii.gz");
  const CliResult r = run_cli({"fit", "--c1", (dir / "nan.nii.gz").string(), "--c2", (dir / "ok.nii.gz").string(),
                               "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, cli::kExitIo);
  EXPECT_NE(r.err.find("TruncatedData"), std::string::npos) << r.err;
}

TEST(Cli, MissingInputFile) {
  test::TempDir dir("missing");
  const CliResult r = run_cli({"upsample", "--in", (dir / "nope.nii").string(), "--out", (dir / "x.nii").string()});
  EXPECT_EQ(r.code, cli::kExitIo);
}

TEST(Cli, EvalIdentity) {
  test::TempDir dir("eval");
  test::Lcg lcg(3);
  save_volume(test::lcg_volume(lcg, Dims{10, 10, 10}), dir / "a.nii");
  save_volume(test::lcg_volume(lcg, Dims{10, 10, 10}), dir / "b.nii");
  const std::string a = (dir / "a.nii").string(), b = (dir / "b.nii").string();
  const CliResult r = run_cli({"eval", "--pred1", a, "--pred2", b, "--gt1", a, "--gt2", b, "--out", dir.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = records(r.out);
  EXPECT_EQ(m.at("psnr_c1"), "inf");
  EXPECT_EQ(m.at("psnr_c2"), "inf");
  EXPECT_EQ(m.at("ssim_c1"), "1");
  EXPECT_EQ(m.at("eps_mi_c1"), "0");
  EXPECT_EQ(m.at("eps_mi_c2"), "0");
  EXPECT_EQ(m.at("eps_mi_joint"), "0");
  EXPECT_TRUE(fs::exists(dir / "metrics.txt"));
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
}

TEST(Cli, EvalDimsMismatch) {
  test::TempDir dir("evalmm");
  save_volume(Volume(Dims{8, 8, 8}, Mat4::Identity()), dir / "a.nii");
  save_volume(Volume(Dims{8, 8, 9}, Mat4::Identity()), dir / "b.nii");
  const std::string a = (dir / "a.nii").string(), b = (dir / "b.nii").string();
  const CliResult r = run_cli({"eval", "--pred1", a, "--pred2", a, "--gt1", b, "--gt2", b, "--out", dir.path().string()});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("DimsMismatch"), std::string::npos) << r.err;
}

TEST(Cli, PhantomIsDeterministic) {
  test::TempDir dir("phantom");
  ASSERT_EQ(run_cli({"phantom", "--seed", "7", "--dims", "32", "--out", (dir / "a").string(), "--quiet"}).code, 0);
  ASSERT_EQ(run_cli({"phantom", "--seed", "7", "--dims", "32", "--out", (dir / "b").string(), "--quiet"}).code, 0);
  for (const char* f : {"gt1.nii.gz", "gt2.nii.gz", "labels.nii.gz"}) {
    EXPECT_EQ(cli::sha256_file(dir / "a" / f), cli::sha256_file(dir / "b" / f)) << f;
  }
  EXPECT_TRUE(fs::exists(dir / "a/manifest.json"));
}

TEST(Cli, DegradeAxial96) {
  test::TempDir dir("degrade");
  save_volume(Volume(Dims{96, 96, 96}, Mat4::Identity()), dir / "gt.nii.gz");
  ASSERT_EQ(run_cli({"degrade", "--in", (dir / "gt.nii.gz").string(), "--out", (dir / "lr.nii.gz").string(), "--plane",
                     "axial", "--thickness", "4"})
                .code,
            0);
  const Volume lr = load_volume(dir / "lr.nii.gz");
  EXPECT_EQ(lr.dims(), (Dims{96, 96, 24}));
  EXPECT_TRUE(fs::exists(dir / "lr.nii.gz.manifest.json"));
  EXPECT_EQ(run_cli({"degrade", "--in", (dir / "gt.nii.gz").string(), "--out", (dir / "x.nii.gz").string(),
                     "--plane", "axial", "--thickness", "2.5"})
                .code,
            cli::kExitUsage);
}

TEST(Cli, EvalMatchesGoldenReport) {
  test::TempDir dir("golden");
  make_inputs(dir);
  for (int c : {1, 2}) {
    const std::string n = std::to_string(c);
    ASSERT_EQ(run_cli({"upsample", "--in", (dir / ("lr" + n + ".nii.gz")).string(), "--out",
                       (dir / ("cu" + n + ".nii.gz")).string(), "--quiet"})
                  .code,
              0);
  }
  const CliResult r = run_cli({"eval", "--pred1", (dir / "cu1.nii.gz").string(), "--pred2",
                               (dir / "cu2.nii.gz").string(), "--gt1", (dir / "p/gt1.nii.gz").string(), "--gt2",
                               (dir / "p/gt2.nii.gz").string(), "--out", dir.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(test::data_path("eval_golden.txt"));
  ASSERT_TRUE(in);
  const std::string golden((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto expected = records(golden);
  const auto got = records(r.out);
  ASSERT_EQ(got.size(), expected.size());
  for (const auto& [name, value] : expected) {
    EXPECT_NEAR(std::stod(got.at(name)), std::stod(value), 1e-6) << name;
  }
}

TEST(Cli, FitPipelineAndReplay) {
  test::TempDir dir("fit");
  make_inputs(dir);
  const CliResult fit = run_cli({"fit", "--c1", (dir / "lr1.nii.gz").string(), "--c2", (dir / "lr2.nii.gz").string(),
                                 "--out", (dir / "run").string(), "--config", (dir / "fit.cfg").string(), "--seed",
                                 "3", "--deterministic", "--quiet"});
  ASSERT_EQ(fit.code, 0) << fit.err;
  const std::vector<std::string> outputs = {"model.ckpt", "sr_c1.nii.gz", "sr_c2.nii.gz",
                                            "training.log", "metrics.txt", "manifest.json"};
  for (const auto& f : outputs) EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
  EXPECT_NE(records(fit.out).count("mi_pred"), 0u);

  const cli::RunManifest m = cli::read_manifest(dir / "run/manifest.json");
  EXPECT_EQ(m.command, "fit");
  EXPECT_EQ(m.seed, 3u);
  ASSERT_EQ(m.inputs.size(), 2u);
  EXPECT_EQ(m.inputs[0].sha256, cli::sha256_file(dir / "lr1.nii.gz"));
  bool saw_epochs = false;
  for (const auto& [k, v] : m.config) saw_epochs |= k == "epochs" && v == "3";
  EXPECT_TRUE(saw_epochs);

  const CliResult replay = run_cli({"replay", "--manifest", (dir / "run/manifest.json").string(), "--out",
                                    (dir / "again").string(), "--quiet"});
  ASSERT_EQ(replay.code, 0) << replay.err;
  for (const char* f : {"model.ckpt", "sr_c1.nii.gz", "sr_c2.nii.gz", "training.log", "metrics.txt"}) {
    EXPECT_EQ(cli::sha256_file(dir / "run" / f), cli::sha256_file(dir / "again" / f)) << f;
  }

  const CliResult ev = run_cli({"eval", "--pred1", (dir / "run/sr_c1.nii.gz").string(), "--pred2",
                                (dir / "run/sr_c2.nii.gz").string(), "--gt1", (dir / "p/gt1.nii.gz").string(), "--gt2",
                                (dir / "p/gt2.nii.gz").string(), "--out", (dir / "run").string()});
  EXPECT_EQ(ev.code, 0) << ev.err;
}

TEST(Cli, FlagsOverrideConfigFile) {
  test::TempDir dir("prec");
  make_inputs(dir);
  const CliResult fit = run_cli({"fit", "--c1", (dir / "lr1.nii.gz").string(), "--c2", (dir / "lr2.nii.gz").string(),
                                 "--out", (dir / "run").string(), "--config", (dir / "fit.cfg").string(), "--epochs",
                                 "1", "--set", "mi_grid_stride=2", "--quiet"});
  ASSERT_EQ(fit.code, 0) << fit.err;
  const cli::RunManifest m = cli::read_manifest(dir / "run/manifest.json");
  std::map<std::string, std::string> cfg(m.config.begin(), m.config.end());
  EXPECT_EQ(cfg.at("epochs"), "1");
  EXPECT_EQ(cfg.at("mi_grid_stride"), "2");
  EXPECT_EQ(cfg.at("trunk_width"), "32");
  EXPECT_EQ(cfg.at("batch_size"), "200");
}

TEST(Cli, ReplayDetectsChangedInput) {
  test::TempDir dir("changed");
  make_inputs(dir);
  ASSERT_EQ(run_cli({"upsample", "--in", (dir / "lr1.nii.gz").string(), "--out", (dir / "cu.nii.gz").string(),
                     "--quiet"})
                .code,
            0);
  save_volume(Volume(Dims{4, 4, 4}, Mat4::Identity()), dir / "lr1.nii.gz");
  EXPECT_EQ(run_cli({"replay", "--manifest", (dir / "cu.nii.gz.manifest.json").string()}).code, cli::kExitIo);
}

TEST(Cli, DivergenceExitCode) {
  test::TempDir dir("diverge");
  make_inputs(dir);
  const CliResult fit = run_cli({"fit", "--c1", (dir / "lr1.nii.gz").string(), "--c2", (dir / "lr2.nii.gz").string(),
                                 "--out", (dir / "run").string(), "--config", (dir / "fit.cfg").string(), "--lr",
                                 "1e38", "--quiet"});
  EXPECT_EQ(fit.code, cli::kExitDiverged);
  EXPECT_NE(fit.err.find("NonFiniteLoss"), std::string::npos) << fit.err;
}

TEST(Cli, SingleContrastTrainsTwoModels) {
  test::TempDir dir("single");
  make_inputs(dir);
  const CliResult fit = run_cli({"fit", "--c1", (dir / "lr1.nii.gz").string(), "--c2", (dir / "lr2.nii.gz").string(),
                                 "--out", (dir / "run").string(), "--config", (dir / "fit.cfg").string(), "--mode",
                                 "single_contrast", "--epochs", "1", "--quiet"});
  ASSERT_EQ(fit.code, 0) << fit.err;
  for (const char* f : {"model_c1.ckpt", "model_c2.ckpt", "sr_c1.nii.gz", "sr_c2.nii.gz", "metrics.txt"}) {
    EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
  }
}

}  // namespace
}  // namespace mcinr
