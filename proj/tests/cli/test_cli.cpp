#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "tenexp/decompositions.hpp"
#include "tenexp/io.hpp"
#include "tenexp/model_io.hpp"
#include "test_util.hpp"

using namespace tenexp;
using namespace tenexp::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Invocation {
  int code = -1;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tenexp_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Invocation run(const std::string& args, const std::string& env = "") const {
    const std::string cmd = "cd \"" + dir_.string() + "\" && " + env + " \"" TENEXP_CLI_PATH "\" " + args +
                            " > stdout.txt 2> stderr.txt";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read("stderr.txt")};
  }

  std::string read(const std::string& name) const {
    std::ifstream in(dir_ / name, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  json report(const std::string& name) const { return json::parse(read(name)); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SynthWritesTensorModelAndSpec) {
  ASSERT_EQ(run("synth --kind tucker --shape 10,9,8 --rank 3 --seed 1 --output t").code, 0);
  EXPECT_TRUE(fs::exists(path("t.npy")));
  EXPECT_TRUE(fs::exists(path("t.model")));
  const json spec = report("t.json");
  EXPECT_EQ(spec["schema"], 1);
  EXPECT_EQ(spec["spec"]["shape"], json::array({10, 9, 8}));
  const DenseTensor x = read_tensor(path("t.npy"));
  const ModelArchive model = load_model(path("t.model"));
  EXPECT_LE(max_abs_diff(x, compose(model.candidates.at(0))), 1e-12);
}

TEST_F(Cli, SynthMixtureIsMeanOfEmittedComponents) {
  ASSERT_EQ(run("synth --kind mixture --shape 8,7,6 --rank 2 --latent 4 --seed 3 --output m").code, 0);
  const DenseTensor x = read_tensor(path("m.npy"));
  const ModelArchive model = load_model(path("m.model"));
  ASSERT_EQ(model.candidates.size(), 3u);
  DenseTensor mean(x.shape());
  for (const auto& c : model.candidates) mean = mean + (1.0 / 3.0) * compose(c);
  EXPECT_LE(max_abs_diff(x, mean), 1e-12);
}

TEST_F(Cli, SynthIsDeterministic) {
  ASSERT_EQ(run("synth --kind tf --shape 6,6,6 --latent 4 --seed 9 --output a").code, 0);
  ASSERT_EQ(run("synth --kind tf --shape 6,6,6 --latent 4 --seed 9 --output b").code, 0);
  EXPECT_EQ(read("a.npy"), read("b.npy"));
}

TEST_F(Cli, MissingShapeIsUsageError) {
  const Invocation r = run("synth --kind tucker");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--shape"), std::string::npos);
}

TEST_F(Cli, UnknownFlagAndMissingSubcommandAreUsageErrors) {
  EXPECT_EQ(run("fit --bogus").code, 1);
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("synth --kind cubes --shape 3,3,3").code, 1);
}

TEST_F(Cli, HelpExitsZero) { EXPECT_EQ(run("--help").code, 0); }

TEST_F(Cli, MalformedNpyIsFormatError) {
  std::ofstream(path("bad.npy")) << "not numpy";
  const Invocation r = run("estimate-ranks --input bad.npy");
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(Cli, DivergenceIsNumericalError) {
  ASSERT_EQ(run("synth --kind tucker --shape 6,6,6 --output t").code, 0);
  EXPECT_EQ(run("fit --input t.npy --lr 1e150 --t-max 20 --output f").code, 3);
}

TEST_F(Cli, ZeroTensorIsDegenerateInput) {
  write_tensor(path("z.npy"), DenseTensor({4, 4, 4}));
  EXPECT_EQ(run("estimate-ranks --input z.npy").code, 4);
}

TEST_F(Cli, EstimateRanksReportsAllBranches) {
  Rng rng(2);
  TuckerFactors f{random_tensor({2, 3, 2}, rng),
                  {random_matrix(12, 2, rng), random_matrix(12, 3, rng), random_matrix(12, 2, rng)}};
  write_tensor(path("x.npy"), tucker_compose(f));
  ASSERT_EQ(run("estimate-ranks --input x.npy --tau 0.999 --report r.json").code, 0);
  const json r = report("r.json");
  EXPECT_EQ(r["ranks"]["tucker"], json::array({2, 3, 2}));
  EXPECT_EQ(r["ranks"]["fctn"].size(), 3u);
  EXPECT_TRUE(r["ranks"].contains("tf"));
}

TEST_F(Cli, FitExactSyntheticWithDefaults) {
  Rng rng(4);
  TuckerFactors f{random_tensor({3, 3, 3}, rng),
                  {random_matrix(12, 3, rng), random_matrix(12, 3, rng), random_matrix(12, 3, rng)}};
  write_tensor(path("x.npy"), tucker_compose(f));
  ASSERT_EQ(run("fit --input x.npy --output f").code, 0);
  const json r = report("f.json");
  EXPECT_LE(r["metrics"]["re"].get<double>(), 1e-3);
  EXPECT_EQ(r["config"]["t_max"], 5000);
  EXPECT_EQ(r["config"]["order"], "II");
  EXPECT_TRUE(fs::exists(path("f.npy")));
  EXPECT_TRUE(fs::exists(path("f.model")));
}

TEST_F(Cli, CompleteWithGeneratedMask) {
  ASSERT_EQ(run("synth --kind tucker --shape 10,10,10 --seed 2 --output t").code, 0);
  ASSERT_EQ(run("complete --input t.npy --sr 0.2 --k 3 --seed 7 --t-max 100 --output c").code, 0);
  const json r = report("c.json");
  for (const char* key : {"re", "psnr", "ssim", "cr"}) EXPECT_TRUE(r["metrics"].contains(key)) << key;
  EXPECT_EQ(r["config"]["k"], 3);
  EXPECT_EQ(r["mask"]["sampling_rate"], 0.2);
  const DenseTensor truth = read_tensor(path("t.npy"));
  const DenseTensor mask = read_tensor(path("c.mask.npy"));
  const DenseTensor recovered = read_tensor(path("c.npy"));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (mask[i] == 1.0) ASSERT_EQ(recovered[i], truth[i]);
  }
}

TEST_F(Cli, CompleteRequiresExactlyOneMaskSource) {
  ASSERT_EQ(run("synth --kind tucker --shape 6,6,6 --output t").code, 0);
  EXPECT_EQ(run("complete --input t.npy --output c").code, 1);
  write_tensor(path("m.npy"), DenseTensor::filled({6, 6, 6}, 1.0));
  EXPECT_EQ(run("complete --input t.npy --mask m.npy --sr 0.5 --output c").code, 1);
}

TEST_F(Cli, MetricsOfIdenticalTensors) {
  ASSERT_EQ(run("synth --kind tucker --shape 12,12,3 --output a").code, 0);
  ASSERT_EQ(run("metrics --truth a.npy --estimate a.npy --report m.json").code, 0);
  const json m = report("m.json")["metrics"];
  EXPECT_EQ(m["re"], 0.0);
  EXPECT_DOUBLE_EQ(m["ssim"].get<double>(), 1.0);
  EXPECT_EQ(m["psnr"], "inf");
}

TEST_F(Cli, BoundWithFullRanksIsZero) {
  Rng rng(6);
  write_tensor(path("x.npy"), random_tensor({4, 5, 6}, rng));
  ASSERT_EQ(run("bound --input x.npy --tau 1.0 --report b.json").code, 0);
  EXPECT_NEAR(report("b.json")["bound"].get<double>(), 0.0, 1e-18);
  EXPECT_EQ(run("bound --input x.npy --lambdas 0.5,0.6,0.1").code, 1);
}

TEST_F(Cli, FlagsOverrideConfigFile) {
  ASSERT_EQ(run("synth --kind tucker --shape 6,6,6 --output t").code, 0);
  std::ofstream(path("cfg.json")) << R"({"k": 2, "t_max": 30, "seed": 11, "order": "III"})";
  ASSERT_EQ(run("fit --input t.npy --config cfg.json --k 1 --output f").code, 0);
  const json c = report("f.json")["config"];
  EXPECT_EQ(c["k"], 1);
  EXPECT_EQ(c["t_max"], 30);
  EXPECT_EQ(c["seed"], 11);
  EXPECT_EQ(c["order"], "III");
}

TEST_F(Cli, UnknownConfigKeyIsUsageError) {
  ASSERT_EQ(run("synth --kind tucker --shape 6,6,6 --output t").code, 0);
  std::ofstream(path("cfg.json")) << R"({"kay": 2})";
  EXPECT_EQ(run("fit --input t.npy --config cfg.json").code, 1);
}

TEST_F(Cli, ThreadsFallBackToEnvironment) {
  ASSERT_EQ(run("synth --kind tucker --shape 6,6,6 --output t").code, 0);
  ASSERT_EQ(run("fit --input t.npy --t-max 10 --output f", "TENEXP_THREADS=3").code, 0);
  EXPECT_EQ(report("f.json")["config"]["threads"], 3);
  ASSERT_EQ(run("fit --input t.npy --t-max 10 --threads 2 --output g", "TENEXP_THREADS=3").code, 0);
  EXPECT_EQ(report("g.json")["config"]["threads"], 2);
  EXPECT_EQ(run("fit --input t.npy --t-max 10 --output h", "TENEXP_THREADS=zero").code, 1);
}

TEST_F(Cli, RepeatedFitReportsMatchExceptWallTime) {
  ASSERT_EQ(run("synth --kind mixture --shape 8,8,8 --latent 4 --output t").code, 0);
  ASSERT_EQ(run("fit --input t.npy --k 2 --t-max 60 --threads 1 --output a").code, 0);
  ASSERT_EQ(run("fit --input t.npy --k 2 --t-max 60 --threads 1 --output b").code, 0);
  json a = report("a.json"), b = report("b.json");
  for (json* r : {&a, &b}) {
    r->erase("wall_time_seconds");
    r->erase("outputs");
  }
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_EQ(read("a.npy"), read("b.npy"));
}
