#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "support/oracles.hpp"

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI through the shell with stderr discarded.
Run dnorm(const std::string& args, const std::string& env = "env -u DNORM_LAB_SEED") {
  const std::string cmd = env + " " + std::string(DNORM_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

// Value column of the first data row of an eval/mc CSV.
double first_value(const std::string& csv) {
  const auto ls = lines(csv);
  if (ls.size() < 3) return NAN;
  std::istringstream row(ls[2]);
  std::string cell;
  std::getline(row, cell, ',');
  std::getline(row, cell, ',');
  std::getline(row, cell, ',');
  return std::stod(cell);
}

}  // namespace

TEST(Cli, EvalExamples) {
  auto r = dnorm("eval --family uniform_wedge --probe '{\"constant\": -1}'");
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(first_value(r.out), 1.0, 1e-8);

  r = dnorm("eval --family gaussian --probe '{\"step\": [[0.5, -2]]}'");
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(first_value(r.out), 2.0, 2e-8);

  r = dnorm("eval --family '{\"type\": \"gaussian\", \"sigma\": 1}' --probe '{\"step\": [[0.2, -1], [0.8, -1]]}'");
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(first_value(r.out), oracle::kTwoSpikeGaussian, 2e-8);
}

TEST(Cli, HeaderEchoesSeedAndConfig) {
  const auto r = dnorm("mc --generator constant --n 100 --seed 7");
  ASSERT_EQ(r.code, 0);
  const auto ls = lines(r.out);
  ASSERT_GE(ls.size(), 2u);
  EXPECT_EQ(ls[0].rfind("# dnorm_lab ", 0), 0u);
  EXPECT_NE(ls[0].find("seed=7"), std::string::npos);
  const auto cfg = nlohmann::json::parse(ls[0].substr(ls[0].find("config=") + 7));
  EXPECT_EQ(cfg.at("seed"), 7);
  EXPECT_EQ(cfg.at("n"), 100);
  EXPECT_EQ(ls[1], "probe_id,route,value,se,n,seed");
}

TEST(Cli, JsonOutput) {
  const auto r = dnorm("eval --family uniform_wedge --format json --seed 3");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("tool"), "dnorm_lab");
  EXPECT_EQ(j.at("seed"), 3);
  EXPECT_TRUE(j.contains("version"));
  EXPECT_EQ(j.at("config").at("command"), "eval");
  EXPECT_TRUE(j.contains("result"));
}

TEST(Cli, SeedFromEnvironment) {
  auto r = dnorm("mc --generator constant --n 100", "env DNORM_LAB_SEED=42");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("seed=42"), std::string::npos);
  r = dnorm("mc --generator constant --n 100 --seed 5", "env DNORM_LAB_SEED=42");
  EXPECT_NE(r.out.find("seed=5"), std::string::npos);
  r = dnorm("mc --generator constant --n 100");
  EXPECT_NE(r.out.find("seed=1 "), std::string::npos);
}

TEST(Cli, VerifyExamples) {
  auto r = dnorm("verify norm-axioms --family uniform_wedge");
  EXPECT_EQ(r.code, 0);
  r = dnorm("verify equivalence --generator constant --generator2 "
            "'{\"type\": \"constant\", \"law\": {\"type\": \"uniform\", \"lo\": 0, \"hi\": 2}}' --n 20000");
  EXPECT_EQ(r.code, 0);
  r = dnorm("verify msp-df --family uniform_wedge --n 100000 --seed 7 --format json");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  bool seen = false;
  for (const auto& row : j.at("result").at("rows")) {
    if (row.at("probe_id") != "const_-1") continue;
    seen = true;
    EXPECT_TRUE(row.at("pass").get<bool>());
    EXPECT_NEAR(row.at("theoretical").get<double>(), std::exp(-1.0), 1e-9);
  }
  EXPECT_TRUE(seen);
  r = dnorm("verify validate-family --family gaussian");
  EXPECT_EQ(r.code, 0);
}

TEST(Cli, ExitCodes) {
  // 1: a verification row fails.
  EXPECT_EQ(dnorm("verify equivalence --generator '{\"type\": \"spectral\", \"family\": \"uniform_wedge\"}' "
                  "--generator2 '{\"type\": \"ratio\", \"family\": \"gaussian\"}' "
                  "--probe '{\"step\": [[0.2, -1], [0.8, -1]]}' --n 20000")
                .code,
            1);
  // 2: preconditions, bad descriptors, bad flags.
  EXPECT_EQ(dnorm("eval --family '{\"type\": \"gaussian\", \"sigma\": -1}'").code, 2);
  EXPECT_EQ(dnorm("eval --family '{\"type\": \"gaussian\"'").code, 2);
  EXPECT_EQ(dnorm("eval --family nonesuch").code, 2);
  EXPECT_EQ(dnorm("eval --family gaussian --grid 0").code, 2);
  EXPECT_EQ(dnorm("eval").code, 2);
  EXPECT_EQ(dnorm("simulate gpp --generator '{\"type\": \"ratio\", \"family\": \"gaussian\"}' --n 10").code, 2);
  EXPECT_EQ(dnorm("verify msp-df --family uniform_wedge --probe '{\"constant\": 0.5}' --n 100").code, 2);
  // 3: quadrature gives up.
  EXPECT_EQ(dnorm("eval --family gaussian --max-subdivisions 1 --probe '{\"step\": [[0.2, -1], [0.8, -1]]}'").code, 3);
}

TEST(Cli, ByteIdenticalReruns) {
  for (const std::string args : {"mc --generator '{\"type\": \"ratio\", \"family\": \"gaussian\", \"h\": \"laplace\"}' "
                                 "--n 5000 --seed 11",
                                 "simulate msp --family uniform_wedge --n 50 --grid 20 --seed 12",
                                 "simulate gpp --generator '{\"type\": \"spectral\", \"family\": \"uniform_wedge\"}' "
                                 "--n 50 --grid 20 --seed 13 --format json",
                                 "verify max-stability --family uniform_wedge --k 2 --n 4000 --seed 14"}) {
    const auto a = dnorm(args);
    const auto b = dnorm(args);
    EXPECT_EQ(a.code, 0) << args;
    EXPECT_FALSE(a.out.empty());
    EXPECT_EQ(a.out, b.out) << args;
  }
}

TEST(Cli, WorkersDoNotChangeOutput) {
  for (const std::string args : {"mc --generator '{\"type\": \"ratio\", \"family\": \"gaussian\"}' --n 6000 --seed 21",
                                 "simulate msp --family '{\"type\": \"change_of_variable\", \"base\": \"gaussian\", "
                                 "\"h\": \"laplace\"}' --n 2100 --grid 10 --seed 22",
                                 "verify gpp-df --generator '{\"type\": \"spectral\", \"family\": \"uniform_wedge\"}' "
                                 "--n 5000 --seed 23"}) {
    const auto a = dnorm(args + " --workers 1");
    const auto b = dnorm(args + " --workers 3");
    EXPECT_EQ(a.code, 0) << args;
    EXPECT_EQ(a.out, b.out) << args;
  }
}

TEST(Cli, PlotDataFile) {
  const std::string path = ::testing::TempDir() + "dnorm_plot.dat";
  const auto r = dnorm("eval --family uniform_wedge --plot-data " + path);
  ASSERT_EQ(r.code, 0);
  std::ifstream in(path);
  ASSERT_TRUE(in.good());
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first.rfind("#", 0), 0u);
}

TEST(Cli, OutFileMatchesStdout) {
  const std::string path = ::testing::TempDir() + "dnorm_out.csv";
  const auto to_stdout = dnorm("mc --generator constant --n 100 --seed 2");
  ASSERT_EQ(dnorm("mc --generator constant --n 100 --seed 2 --out " + path).code, 0);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), to_stdout.out);
}
