#include "metamorph/io.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>

#ifndef METAMORPH_BIN
#error "METAMORPH_BIN must name the CLI binary"
#endif

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run(const std::string& args) {
  CliRun r;
  std::string cmd = std::string(METAMORPH_BIN) + " " + args + " 2>/dev/null";
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::filesystem::path scratch_dir() {
  auto d = std::filesystem::temp_directory_path() / "metamorph_cli_test";
  std::filesystem::create_directories(d);
  return d;
}

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("design validate").code, 1);
  EXPECT_EQ(run("graph path g.json --from a --to b --objective fastest").code, 1);
}

TEST(Cli, EngineErrorsExitTwo) {
  EXPECT_EQ(run("design validate /nonexistent/design.json").code, 2);
  EXPECT_EQ(run("shape place ring8 --angles 170,180,180,180,180,180,180,180").code, 2);
}

TEST(Cli, ValidateText) {
  CliRun r = run("design validate canonical");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("32 cubes, 36 hinges"), std::string::npos);
}

TEST(Cli, ValidateJson) {
  CliRun r = run("--json design validate ring8");
  ASSERT_EQ(r.code, 0);
  auto j = metamorph::Json::parse(r.out);
  EXPECT_EQ(j["cubes"], 8);
  EXPECT_EQ(j["hinges"], 8);
  // global flags also work after the subcommand
  CliRun late = run("design validate ring8 --json");
  ASSERT_EQ(late.code, 0);
  EXPECT_EQ(metamorph::Json::parse(late.out), j);
}

TEST(Cli, GraphBuildPathAndAssign) {
  auto dir = scratch_dir();
  std::string g = (dir / "ring8.graph.json").string();
  ASSERT_EQ(run("--limits depth=3 graph build ring8 -o " + g).code, 0);
  CliRun m = run("--json graph metrics " + g + " --bound 2");
  ASSERT_EQ(m.code, 0);
  auto j = metamorph::Json::parse(m.out);
  EXPECT_GT(j["nodes"].get<int>(), 1);
  CliRun a = run("--json actuate assign " + g);
  ASSERT_EQ(a.code, 0);
  EXPECT_LE(metamorph::Json::parse(a.out)["actuated"].size(), 5u);
  EXPECT_EQ(run("graph path " + g + " --from nowhere --to M_A").code, 2);
}

TEST(Cli, ScheduleExport) {
  auto dir = scratch_dir();
  std::string g = (dir / "ring8b.graph.json").string(), s = (dir / "sched.json").string();
  ASSERT_EQ(run("--limits depth=2 graph build ring8 -o " + g).code, 0);
  auto graph = metamorph::read_json(g);
  std::string to = graph["nodes"].back()["key"];
  ASSERT_EQ(run("actuate compile " + g + " --from '" + graph["nodes"][0]["key"].get<std::string>() + "' --to '" + to +
                "' -o " + s)
                .code,
            0);
  CliRun e = run("actuate export " + s);
  ASSERT_EQ(e.code, 0);
  EXPECT_EQ(e.out.rfind("SET 0 ", 0), 0u);
  EXPECT_NE(e.out.find("RUN"), std::string::npos);
}
