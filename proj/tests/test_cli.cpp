#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("fastocc_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result run(const std::string& args) const {
    const fs::path o = dir_ / "stdout.txt";
    const fs::path e = dir_ / "stderr.txt";
    const std::string cmd = std::string(FASTOCC_CLI_PATH) + " " + args + " >" + o.string() + " 2>" + e.string();
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(o);
    r.err = slurp(e);
    return r;
  }

  fs::path simulate_small() const {
    const Result r = run("simulate --preset supp-2.1-s500 --sites 40 --years 5 --seed 3 --out " + (dir_ / "sim").string());
    EXPECT_EQ(r.code, 0) << r.err;
    return dir_ / "sim" / "visits.csv";
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, MissingInputIsAConfigError) {
  const Result r = run("fit --out " + (dir_ / "o").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("fastocc: error: "), std::string::npos);
  EXPECT_NE(r.err.find("input"), std::string::npos);
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
}

TEST_F(Cli, UnreadableInputNamesThePath) {
  const Result r = run("fit --input /nonexistent/v.csv --out " + (dir_ / "o").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("/nonexistent/v.csv"), std::string::npos);
}

TEST_F(Cli, UnknownConfigKey) {
  std::ofstream(dir_ / "run.cfg") << "iterations = 10\nitterations = 5\n";
  const Result r = run("fit --config " + (dir_ / "run.cfg").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("itterations"), std::string::npos);
}

TEST_F(Cli, SimulateRoundTripsWithoutWarnings) {
  const fs::path visits = simulate_small();
  ASSERT_TRUE(fs::exists(visits));
  EXPECT_TRUE(fs::exists(dir_ / "sim" / "truth.json"));
  const Result r = run("fit --input " + visits.string() + " --iterations 2 --burnin 0 --out " + (dir_ / "fit").string());
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.err.find("warning"), std::string::npos) << r.err;
}

TEST_F(Cli, FitWritesOutputsDeterministically) {
  const fs::path visits = simulate_small();
  const std::string common = "fit --input " + visits.string() + " --iterations 20 --burnin 10 --seed 5 --map-years 2001";
  ASSERT_EQ(run(common + " --out " + (dir_ / "a").string()).code, 0);
  ASSERT_EQ(run(common + " --threads 2 --out " + (dir_ / "b").string()).code, 0);
  for (const char* f : {"occupancy_index.csv", "detection_trend.csv", "detection_season.csv", "site_probs_2001.csv",
                        "gof_year.csv", "gof_region.csv", "trace_mu_psi.csv", "trace_index.csv", "run_log.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "a" / f)) << f;
  }
  for (const auto& entry : fs::directory_iterator(dir_ / "a")) {
    const auto name = entry.path().filename();
    if (name == "run_log.json") continue;
    EXPECT_EQ(slurp(entry.path()), slurp(dir_ / "b" / name)) << name;
  }
  const std::string index = slurp(dir_ / "a" / "occupancy_index.csv");
  EXPECT_EQ(index.substr(0, index.find('\n')), "year,median,lower,upper");
  const std::string log = slurp(dir_ / "a" / "run_log.json");
  EXPECT_NE(log.find("\"seed\": 5"), std::string::npos);

  const Result s = run("summary --chain " + (dir_ / "a").string() + " --levels 0.9,0.95");
  EXPECT_EQ(s.code, 0) << s.err;
  const std::string summary = slurp(dir_ / "a" / "summary.csv");
  EXPECT_EQ(summary.substr(0, summary.find('\n')), "parameter,median,mean,sd,ess,lower90,upper90,lower95,upper95");
  EXPECT_NE(summary.find("\nmu_psi,"), std::string::npos);

  const Result g = run("gof --chain " + (dir_ / "a").string() + " --out " + (dir_ / "g").string());
  EXPECT_EQ(g.code, 0) << g.err;
  EXPECT_EQ(slurp(dir_ / "g" / "gof_year.csv"), slurp(dir_ / "a" / "gof_year.csv"));
}

TEST_F(Cli, GofWithoutDrawsFails) {
  const fs::path visits = simulate_small();
  ASSERT_EQ(run("fit --input " + visits.string() + " --iterations 0 --burnin 0 --out " + (dir_ / "z").string()).code, 0);
  const Result g = run("gof --chain " + (dir_ / "z").string());
  EXPECT_EQ(g.code, 1);
  EXPECT_NE(g.err.find("gof_draws"), std::string::npos);
}

TEST_F(Cli, BenchSinglePreset) {
  const Result r = run("bench --presets supp-2.1-s500 --iterations 5 --out " + (dir_ / "bench").string());
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("preset,sites,observations,wall_minutes,iterations_per_sec"), std::string::npos);
  EXPECT_NE(r.out.find("supp-2.1-s500,500,"), std::string::npos);
  EXPECT_NE(r.out.find("scaling_exponent,n/a"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "bench" / "bench.csv"));
}
