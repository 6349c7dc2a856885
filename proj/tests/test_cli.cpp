#include "coord/core.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI with stdout captured and stderr appended to it.
Result run(const std::string& args) {
  const std::string cmd = std::string(COORD_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(::testing::TempDir()) /
           ("coord_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SimulateWritesDataset) {
  const Result r = run("simulate --regime coordinated --M 3 --T 10 --seed 1 -o " + path("d.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  const coord::DatasetDocument doc = coord::load_dataset(path("d.json"));
  EXPECT_EQ(doc.data.T(), 10);
  EXPECT_EQ(doc.data.M(), 3);
  EXPECT_FALSE(doc.noise.has_value());
}

TEST_F(Cli, SimulateNoisyIndependent) {
  const Result r = run("simulate --regime independent --sigma 0.05 --seed 2 -o " + path("n.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  const coord::DatasetDocument doc = coord::load_dataset(path("n.json"));
  ASSERT_TRUE(doc.noise.has_value());
  EXPECT_EQ(doc.noise->sigma, 0.05);
}

TEST_F(Cli, SimulateEmptyIsConfigError) {
  const Result r = run("simulate --T 0");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("EmptyDataset"), std::string::npos);
}

TEST_F(Cli, UnknownFlagAndBadGamma) {
  EXPECT_EQ(run("simulate --bogus 3").code, 2);
  ASSERT_EQ(run("simulate -o " + path("d.json")).code, 0);
  EXPECT_EQ(run("stat-detect " + path("d.json") + " --gamma 1.5").code, 2);
  EXPECT_EQ(run("stat-detect " + path("d.json") + " --gamma 0").code, 2);
}

TEST_F(Cli, DetectExitCodes) {
  ASSERT_EQ(run("simulate --seed 3 -o " + path("c.json")).code, 0);
  const Result ok = run("detect " + path("c.json"));
  EXPECT_EQ(ok.code, 0);
  EXPECT_NE(ok.out.find("\"Coordinated\""), std::string::npos);
  EXPECT_NE(ok.out.find("certificate"), std::string::npos);

  std::ofstream(path("warp.json"))
      << R"({"T":2,"M":1,"N":2,"probes":[[0.16666666666666666,0.3333333333333333],)"
      << R"([0.3076923076923077,0.15384615384615385]],"responses":[[[2,2]],[[3,0.5]]],"noise":null})";
  EXPECT_EQ(run("detect " + path("warp.json")).code, 1);

  std::ofstream(path("bad.json")) << "{\"T\": 2, \"probes\": [";
  EXPECT_EQ(run("detect " + path("bad.json")).code, 2);
  EXPECT_EQ(run("detect " + path("missing.json")).code, 2);
}

TEST_F(Cli, ReconstructWritesConcaveGrids) {
  ASSERT_EQ(run("simulate --seed 4 -o " + path("c.json")).code, 0);
  const Result r = run("reconstruct " + path("c.json") + " --resolution 20 -o " + path("u"));
  ASSERT_EQ(r.code, 0) << r.out;
  for (int i = 1; i <= 3; ++i) {
    std::ifstream in(path("u_agent" + std::to_string(i) + ".csv"));
    std::string line;
    std::getline(in, line);
    ASSERT_EQ(line, "beta1,beta2,U");
    coord::Matrix U(20, 20);
    for (int k = 0; k < 400; ++k) {
      std::getline(in, line);
      U(k / 20, k % 20) = std::stod(line.substr(line.rfind(',') + 1));
    }
    for (int a = 1; a < 19; ++a) {
      for (int b = 1; b < 19; ++b) {
        EXPECT_GE(U(a, b), 0.5 * (U(a - 1, b) + U(a + 1, b)) - 1e-6);
        EXPECT_GE(U(a, b), 0.5 * (U(a, b - 1) + U(a, b + 1)) - 1e-6);
        EXPECT_GE(U(a, b), 0.5 * (U(a - 1, b - 1) + U(a + 1, b + 1)) - 1e-6);
      }
    }
  }
  EXPECT_EQ(run("reconstruct " + path("c.json") + " --resolution 0").code, 2);
}

TEST_F(Cli, ReconstructRefusesIncoherentData) {
  ASSERT_EQ(run("simulate --regime independent --seed 0 -o " + path("i.json")).code, 0);
  const Result det = run("detect " + path("i.json"));
  if (det.code == 1) {
    const Result r = run("reconstruct " + path("i.json") + " -o " + path("u"));
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("not coordinated"), std::string::npos);
  }
}

TEST_F(Cli, StatDetectCleanData) {
  ASSERT_EQ(run("simulate --seed 5 -o " + path("c.json")).code, 0);
  const Result r = run("stat-detect " + path("c.json") + " --gamma 0.05 --L 50");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("\"statistic\": 1"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("\"H0\""), std::string::npos);
}

TEST_F(Cli, WaveformTable) {
  const Result r = run("waveform --kind triangular --theta 1 --eta 1 --wc 1 --c 1 --format csv");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "r11,r12,r21,r22,alpha1,alpha2\n0.0833333333,0,0,2.5,0.4,12\n");
  EXPECT_EQ(run("waveform --kind square").code, 2);
}

TEST_F(Cli, TrackSmoke) {
  const Result r = run("track --targets 2 --steps 100 -o " + path("t.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream in(path("t.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "k,target,mean_0,mean_1,cov_trace,nees");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_TRUE(std::isfinite(std::stod(line.substr(line.rfind(',') + 1))));
  }
  EXPECT_EQ(rows, 200);
}

TEST_F(Cli, SweepSmallGrid) {
  const Result r = run("sweep --sigmas 0.05 --trials 3 --L 50 -o " + path("s.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string csv = slurp(path("s.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "sigma,regime,mean_statistic,std_statistic,n_trials");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(run("sweep --sigmas 0.1:0.01:0.05").code, 2);
}

TEST_F(Cli, RepeatedRunsAreByteIdentical) {
  for (const std::string& args : {std::string("simulate --sigma 0.03 --seed 9"),
                                  std::string("track --steps 30 --seed 9"),
                                  std::string("sweep --sigmas 0.04 --trials 2 --L 30 --seed 9")}) {
    ASSERT_EQ(run(args + " -o " + path("a.out")).code, 0);
    ASSERT_EQ(run(args + " -o " + path("b.out")).code, 0);
    EXPECT_EQ(slurp(path("a.out")), slurp(path("b.out"))) << args;
  }
}
