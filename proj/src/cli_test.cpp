#include "rescnn/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace rescnn {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rescnn_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

TEST(Cli, NoSubcommandIsUsageError) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"train", "--bogus", "1"}).code, kExitUsage);
}

TEST(Cli, HelpSucceeds) {
  const CliResult r = run({"--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("gradcheck"), std::string::npos);
  EXPECT_EQ(run({"train", "--help"}).code, kExitOk);
}

TEST(Cli, EvenConvLayersRejectedBeforeWork) {
  const fs::path dir = scratch("even");
  const CliResult r = run({"train", "--train", "missing.jsonl", "--out", dir.string(), "--conv-layers", "4"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("odd"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(Cli, ResidualNeedsBlocks) {
  const fs::path dir = scratch("noblocks");
  EXPECT_EQ(run({"train", "--train", "x", "--out", dir.string(), "--variant", "rescnn_x", "--conv-layers", "1"}).code,
            kExitUsage);
  EXPECT_EQ(run({"train", "--train", "x", "--out", dir.string(), "--variant", "vgg"}).code, kExitUsage);
  EXPECT_EQ(run({"train", "--train", "x", "--out", dir.string(), "--keep-prob", "0"}).code, kExitUsage);
}

TEST(Cli, MissingInputsAreDataErrors) {
  const fs::path dir = scratch("missing");
  EXPECT_EQ(run({"train", "--train", (dir / "nope.jsonl").string(), "--out", dir.string()}).code, kExitData);
  const CliResult r = run({"eval", "--checkpoint", (dir / "nope.bin").string(), "--test", "t.jsonl"});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("checkpoint"), std::string::npos);
}

TEST(Cli, InvalidSynthRates) {
  const fs::path dir = scratch("rates");
  EXPECT_EQ(run({"synth", "--out", dir.string(), "--q", "1.2"}).code, kExitUsage);
  EXPECT_EQ(run({"synth", "--out", dir.string(), "--na-frac", "-0.1"}).code, kExitUsage);
}

TEST(Cli, GradcheckPassesAndReportsParameters) {
  const fs::path dir = scratch("gradcheck");
  const CliResult r = run({"gradcheck", "--out", dir.string()});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("rescnn_x-9"), std::string::npos);
  EXPECT_NE(r.out.find("cnn_x-9"), std::string::npos);
  EXPECT_NE(r.out.find("block3.conv2.kernel"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "gradcheck.txt"));
  EXPECT_TRUE(fs::exists(dir / "manifest.txt"));
}

TEST(Cli, GradcheckFailsWithImpossibleTolerance) {
  EXPECT_EQ(run({"gradcheck", "--tol", "0"}).code, kExitNumerical);
}

TEST(Cli, BadPanList) {
  const fs::path dir = scratch("pan");
  EXPECT_EQ(run({"eval", "--checkpoint", "c.bin", "--test", "t", "--pan", "10,x"}).code, kExitUsage);
}

TEST(Cli, ManifestNeedsFile) {
  EXPECT_EQ(run({"--manifest"}).code, kExitUsage);
  EXPECT_EQ(run({"--manifest", "/nonexistent/manifest.txt"}).code, kExitData);
}

}  // namespace
}  // namespace rescnn
