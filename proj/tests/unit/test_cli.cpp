#include <gtest/gtest.h>

#include <json.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "nmguard/config.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int exit_code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(NMGUARD_CLI_PATH) + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// Every subcommand prints its run directory as the last line of stdout.
std::string last_line(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  const auto nl = s.rfind('\n');
  return nl == std::string::npos ? s : s.substr(nl + 1);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t data_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n == 0 ? 0 : n - 1;
}

const std::string kSmall = "-q --set synth.n_customers=5 --set synth.n_days=20";

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / ("nmguard_cli_" + std::string(info->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  // Runs a subcommand and returns the run directory it printed.
  fs::path step(const std::string& args) {
    const Result r = run(args + " " + kSmall + " -o " + root_.string());
    EXPECT_EQ(r.exit_code, 0) << args;
    return fs::path(last_line(r.out));
  }

  fs::path root_;
};

}  // namespace

TEST(Cli, HelpEnumeratesEveryConfigKeyAndDefault) {
  const Result r = run("--help");
  ASSERT_EQ(r.exit_code, 0);
  for (const auto& k : nmguard::config_keys()) {
    const auto pos = r.out.find("\n  " + k.key + " ");
    ASSERT_NE(pos, std::string::npos) << k.key;
    const auto eol = r.out.find('\n', pos + 1);
    const std::string line = r.out.substr(pos, eol - pos);
    EXPECT_NE(line.find("default " + k.default_value), std::string::npos) << line;
  }
}

TEST(Cli, ExitCodeForUnknownKeyIsUsage) {
  EXPECT_EQ(run("synth -q --set synth.bogus=1").exit_code, 1);
  EXPECT_EQ(run("no-such-command").exit_code, 1);
  EXPECT_EQ(run("train -q --models everything --train /dev/null --normalizer /dev/null").exit_code, 1);
}

TEST_F(CliTest, ExitCodeForMalformedMeterFileIsData) {
  const fs::path bad = root_ / "bad.csv";
  std::ofstream(bad) << "a,b\n1,2\n";
  EXPECT_EQ(run("ingest " + kSmall + " -o " + root_.string() + " --meter " + bad.string()).exit_code, 2);
}

TEST_F(CliTest, SynthAttackPrepProduceExpectedCounts) {
  const fs::path synth = step("synth");
  EXPECT_EQ(data_lines(synth / "days.csv"), 100u);
  const std::string days_before = slurp(synth / "days.csv");

  const fs::path attack = step("attack --days " + (synth / "days.csv").string() + " --profiles " +
                               (synth / "profiles.csv").string() + " --weather " + (synth / "weather.csv").string());
  EXPECT_EQ(data_lines(attack / "benign.csv"), 100u);
  EXPECT_EQ(data_lines(attack / "malicious.csv"), 400u);
  EXPECT_TRUE(fs::exists(attack / "attack_audit.json"));
  EXPECT_EQ(slurp(synth / "days.csv"), days_before);

  const fs::path prep = step("prep --samples " + (attack / "benign.csv").string() + " " +
                             (attack / "malicious.csv").string());
  const auto report = nlohmann::json::parse(slurp(prep / "prep_report.json"));
  EXPECT_EQ(report["train_after"]["benign"], report["train_after"]["malicious"]);
  EXPECT_LT(report["train_before"]["benign"].get<int>(), report["train_before"]["malicious"].get<int>());
  EXPECT_EQ(data_lines(prep / "train.csv"), 2 * report["train_after"]["benign"].get<std::size_t>());
}

TEST_F(CliTest, TrainEvalReportAnalyzeSmoke) {
  const fs::path synth = step("synth");
  const fs::path attack = step("attack --days " + (synth / "days.csv").string() + " --profiles " +
                               (synth / "profiles.csv").string() + " --weather " + (synth / "weather.csv").string());
  const fs::path prep = step("prep --samples " + (attack / "benign.csv").string() + " " +
                             (attack / "malicious.csv").string());
  const std::string norm = (prep / "normalizer.json").string();
  const fs::path train = step("train --set train.max_epochs=1 --train " + (prep / "train.csv").string() +
                              " --normalizer " + norm);
  for (const char* name : {"mlp", "gru", "cnn", "cnngru", "detector"}) {
    EXPECT_TRUE(fs::exists(train / "checkpoints" / name)) << name;
  }
  const fs::path eval = step("eval --test " + (prep / "test.csv").string() + " --checkpoints " +
                             (train / "checkpoints").string() + " --normalizer " + norm);
  const auto metrics = nlohmann::json::parse(slurp(eval / "metrics.json"));
  EXPECT_EQ(metrics["reports"].size(), 7u);

  const fs::path report = step("report --run " + eval.string());
  EXPECT_TRUE(fs::exists(report / "summary.md"));

  const fs::path analyze = step("analyze --days " + (synth / "days.csv").string() + " --profiles " +
                                (synth / "profiles.csv").string() + " --weather " +
                                (synth / "weather.csv").string());
  EXPECT_TRUE(fs::exists(analyze / "correlations.csv"));
  EXPECT_TRUE(fs::exists(analyze / "patterns.csv"));
  EXPECT_FALSE(fs::is_empty(analyze / "acf"));
}

TEST_F(CliTest, DivergenceExitsWithCode3) {
  const fs::path synth = step("synth");
  const fs::path attack = step("attack --days " + (synth / "days.csv").string() + " --profiles " +
                               (synth / "profiles.csv").string() + " --weather " + (synth / "weather.csv").string());
  const fs::path prep = step("prep --samples " + (attack / "benign.csv").string() + " " +
                             (attack / "malicious.csv").string());
  const Result r = run("train " + kSmall + " -o " + root_.string() +
                       " --models baselines --set train.max_epochs=1 --set train.learning_rate=1e300 --train " +
                       (prep / "train.csv").string() + " --normalizer " + (prep / "normalizer.json").string());
  EXPECT_EQ(r.exit_code, 3);
}

TEST_F(CliTest, SameConfigGivesSameBytes) {
  const fs::path a = step("synth");
  const fs::path copy = root_ / "first_days.csv";
  fs::copy_file(a / "days.csv", copy);
  fs::remove_all(a);
  const fs::path b = step("synth");
  EXPECT_EQ(a, b);
  EXPECT_EQ(slurp(b / "days.csv"), slurp(copy));
  const fs::path other = step("synth --seed 8");
  EXPECT_NE(other, b);
  EXPECT_NE(slurp(other / "days.csv"), slurp(copy));
}
