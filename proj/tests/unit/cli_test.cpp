#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "support.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Run {
  int code;
  std::string out;
};

Run wspd(const std::string& args) {
  const std::string cmd = std::string(WSPD_CLI) + " " + args + " 2>/dev/null";
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return {-1, {}};
  std::string out;
  std::array<char, 4096> buf{};
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
  const int status = ::pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& tag) {
  const auto d = fs::temp_directory_path() / ("wspd_cli_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  return d;
}

TEST(Cli, Version) {
  const auto r = wspd("--version");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("wspd ", 0), 0u);
}

TEST(Cli, JsonOutputRoundTripsByteIdentically) {
  for (const std::string args : {"absorptance --alpha-per-cm 451 --length-um 51 102",
                                 "pulse --fwhm-ns 3.2",
                                 "fp-extract --tmax 0.061 --tmin 0.018",
                                 "efficiency --coupling 0.174 --absorptance 0.9 --dqe 0.197",
                                 "jitter --total-ps 73 --source-ps 40"}) {
    for (const std::string& form : {"--json " + args, args + " --json"}) {
      const auto r = wspd(form);
      ASSERT_EQ(r.code, 0) << form;
      const auto doc = json::parse(r.out);
      EXPECT_EQ(doc.dump(2) + "\n", r.out) << form;
    }
  }
}

TEST(Cli, PaperNumbers) {
  auto doc = json::parse(wspd("--json jitter --total-ps 73 --source-ps 40").out);
  EXPECT_NEAR(doc["intrinsic_ps"].get<double>(), 61.1, 0.1);
  doc = json::parse(wspd("--json fp-extract --tmax 0.061 --tmin 0.018").out);
  EXPECT_NEAR(doc["coupling"].get<double>(), 0.174, 0.001);
  doc = json::parse(wspd("--json pulse").out);
  EXPECT_NEAR(doc["tau_ns"].get<double>(), 3.6, 1e-12);
  EXPECT_NEAR(doc["max_count_rate_MHz"].get<double>(), 92.6, 0.05);
}

TEST(Cli, ExitCodesPerErrorClass) {
  EXPECT_EQ(wspd("").code, 2);
  EXPECT_EQ(wspd("frobnicate").code, 2);
  EXPECT_EQ(wspd("jitter --total-ps 73").code, 2);
  EXPECT_EQ(wspd("efficiency --coupling 0.1 --absorptance 0.9 --dqe 0.1 --internal 0.2").code, 2);
  EXPECT_EQ(wspd("jitter --total-ps 30 --source-ps 40").code, 3);
  EXPECT_EQ(wspd("absorptance --alpha-per-cm -5 --length-um 10").code, 3);
  EXPECT_EQ(wspd("fp-extract --tmax 0.95 --tmin 0.9 --single-pass 0.9").code, 5);
  EXPECT_EQ(wspd("efficiency --coupling 0.1 --absorptance 0.5 --dqe 0.9").code, 5);
  EXPECT_EQ(wspd("sweep --config " + wspd::test::config_path("paper.json") + " --name missing").code, 2);
}

TEST(Cli, BadConfigIsAUsageError) {
  const auto dir = scratch("badcfg");
  fs::create_directories(dir);
  std::ifstream in(wspd::test::config_path("paper.json"));
  auto doc = json::parse(in);
  doc["unexpected"] = true;
  std::ofstream(dir / "bad.json") << doc.dump(2);
  EXPECT_EQ(wspd("counts --config " + (dir / "bad.json").string()).code, 2);
  fs::remove_all(dir);
}

TEST(Cli, CountsWritesOnlyIntoTheOutputDirectory) {
  const auto dir = scratch("counts");
  const auto cfg = wspd::test::config_path("paper.json");
  const auto before = slurp(cfg);
  const auto r = wspd("--json --output-dir " + dir.string() + " counts --config " + cfg + " --duration-s 0.05");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(slurp(cfg), before);
  ASSERT_TRUE(fs::exists(dir / "manifest.json"));
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto text = slurp(e.path());
    if (e.path().extension() == ".json") {
      const auto doc = json::parse(text);
      EXPECT_EQ(doc.begin().key(), "_header") << e.path();
      EXPECT_EQ(doc["_header"]["config_digest"], wspd::test::paper_config().digest);
    } else {
      EXPECT_EQ(text.rfind("# wspd ", 0), 0u) << e.path();
      EXPECT_EQ(text.find('\r'), std::string::npos);
    }
  }
  EXPECT_EQ(files, 2 * 10 + 2);  // per-power csv + json, summary csv, manifest

  // Same seed, same bytes (modulo the manifest timestamps).
  const auto again = scratch("counts_again");
  ASSERT_EQ(wspd("--output-dir " + again.string() + " counts --config " + cfg + " --duration-s 0.05").code, 0);
  EXPECT_EQ(slurp(dir / "counts_3.csv"), slurp(again / "counts_3.csv"));
  fs::remove_all(dir);
  fs::remove_all(again);
}

TEST(Cli, FlagOnlyCommandsWriteNothing) {
  const auto dir = scratch("nothing");
  ASSERT_EQ(wspd("--output-dir " + dir.string() + " jitter --total-ps 73 --source-ps 40").code, 0);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(Cli, OutputDirFromEnvironment) {
  const auto dir = scratch("env");
  const std::string cmd = "WSPD_OUTPUT_DIR=" + dir.string() + " " + WSPD_CLI + " pulse --trace > /dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(dir / "pulse.csv"));
  fs::remove_all(dir);
}

}  // namespace
