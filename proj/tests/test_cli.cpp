#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "test_util.hpp"

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string("\"") + DIAGECC_CLI_PATH + "\" " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  Run r;
  if (!p) return r;
  std::array<char, 4096> buf;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
  const int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string net(const std::string& name) { return testutil::netlist_dir() + "/" + name + ".net"; }

std::filesystem::path scratch(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / "diagecc_cli_test";
  std::filesystem::create_directories(d);
  return d / name;
}

std::size_t count_lines(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

}  // namespace

TEST(Cli, ScheduleFullAdder) {
  const auto r = cli("schedule " + net("full_adder"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.rfind("circuit=full_adder baseline=28 proposed=", 0), 0u) << r.out;
  for (const char* key : {" overhead_pct=", " min_pc_pairs=", " stall_cycles=0", " critical_ops=2"})
    EXPECT_NE(r.out.find(key), std::string::npos) << key;
}

TEST(Cli, ScheduleCorpusSummary) {
  const auto out = scratch("corpus");
  const auto r = cli("schedule " + testutil::netlist_dir() + " -o " + out.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(count_lines(r.out), 7u);
  EXPECT_NE(r.out.find("circuit=passthrough baseline=0 proposed=50 overhead_pct=0.00"),
            std::string::npos);
  EXPECT_NE(r.out.find("\nsummary circuits=6 geomean_overhead_pct="), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(out / "decoder3to8.sched"));
}

TEST(Cli, ConfigFileAndOverrides) {
  const auto cfg = scratch("run.cfg");
  std::ofstream(cfg) << "# small machine\nn=45\npc_pairs=1\n";
  const auto a = cli("schedule " + net("decoder3to8") + " --config " + cfg.string());
  ASSERT_EQ(a.code, 0) << a.out;
  EXPECT_NE(a.out.find(" pc_pairs_used=1 "), std::string::npos) << a.out;
  const auto b = cli("schedule " + net("decoder3to8") + " --config " + cfg.string() + " --pc-pairs 4");
  EXPECT_NE(b.out.find(" stall_cycles=0 "), std::string::npos) << b.out;
  std::ofstream(cfg) << "colour=blue\n";
  EXPECT_EQ(cli("schedule " + net("mux2") + " --config " + cfg.string()).code, 2);
  EXPECT_EQ(cli("schedule " + net("mux2") + " --set m=4").code, 2);
}

TEST(Cli, MalformedNetlist) {
  const auto bad = scratch("bad.net");
  std::ofstream(bad) << ".inputs a\n.outputs y\ny = XOR a a\n";
  const auto r = cli("schedule " + bad.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("line 3"), std::string::npos) << r.out;
  EXPECT_EQ(cli("schedule /nonexistent.net").code, 2);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli("").code, 1);
  EXPECT_EQ(cli("frobnicate").code, 1);
  EXPECT_EQ(cli("area --k").code, 1);
  EXPECT_EQ(cli("--help").code, 0);
}

TEST(Cli, SimulateWithFaults) {
  const auto sched = scratch("fa.sched");
  ASSERT_EQ(cli("schedule " + net("full_adder") + " -o " + sched.string()).code, 0);
  const auto clean = cli("simulate " + sched.string() + " --inputs 111");
  ASSERT_EQ(clean.code, 0) << clean.out;
  EXPECT_EQ(clean.out.rfind("inputs=111 outputs=11 cycles=90\n", 0), 0u) << clean.out;

  const auto one = cli("simulate " + sched.string() + " --inputs 101 --flip 4,7");
  ASSERT_EQ(one.code, 0) << one.out;
  EXPECT_NE(one.out.find("outputs=01 "), std::string::npos);
  EXPECT_NE(one.out.find("role=input status=corrected diagnosis=data(4,7)"), std::string::npos) << one.out;
  EXPECT_NE(one.out.find("corrections=1 uncorrectable=0 ecc_consistent=1"), std::string::npos);

  const auto two = cli("simulate " + sched.string() + " --inputs 101 --flip 0,1 --flip 1,0");
  EXPECT_NE(two.out.find("status=uncorrectable"), std::string::npos) << two.out;

  const auto cb = cli("simulate " + sched.string() + " --inputs 000 --flip-check C:2:0:0");
  EXPECT_NE(cb.out.find("corrections=1 "), std::string::npos) << cb.out;

  EXPECT_EQ(cli("simulate " + sched.string() + " --inputs 10").code, 2);
  EXPECT_EQ(cli("simulate " + sched.string() + " --inputs 101 --flip 2000,0").code, 2);
  EXPECT_EQ(cli("simulate " + net("full_adder") + " --inputs 101").code, 2);
}

TEST(Cli, Reliability) {
  const auto r = cli("reliability");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("lambda_fit,mttf_baseline_h,mttf_proposed_h,improvement\n1e-05,", 0), 0u) << r.out;
  EXPECT_EQ(count_lines(r.out), 16u);
  EXPECT_NE(r.out.find("\n1000,24,24,1\n"), std::string::npos) << r.out;
  EXPECT_EQ(cli("reliability --lambda-min 10 --lambda-max 1").code, 2);
  EXPECT_EQ(cli("reliability --lambda-min abc").code, 2);
}

TEST(Cli, Area) {
  const auto d = cli("area");
  ASSERT_EQ(d.code, 0);
  EXPECT_NE(d.out.find("\ntotal,,1248480,75480\n"), std::string::npos) << d.out;
  EXPECT_NE(d.out.find("\ncheck_bit_crossbars,2*m*(n/m)^2,138720,0\n"), std::string::npos);
  const auto s = cli("area --n 9 --m 3 --k 1");
  EXPECT_NE(s.out.find("\ntotal,,351,198\n"), std::string::npos) << s.out;
  EXPECT_EQ(cli("area --n 10 --m 3 --k 1").code, 2);
}

TEST(Cli, Inject) {
  const auto mc = cli("inject --scope mc --p-bit 0.01 --trials 20000 --seed 3");
  ASSERT_EQ(mc.code, 0) << mc.out;
  EXPECT_NE(mc.out.find(" closed_form=0.658941718"), std::string::npos) << mc.out;
  const auto sched = scratch("fa_inject.sched");
  ASSERT_EQ(cli("schedule " + net("full_adder") + " -o " + sched.string()).code, 0);
  const auto run = cli("inject --schedule " + sched.string() + " --netlist " + net("full_adder") +
                       " --flip 2,3 --trials 3");
  ASSERT_EQ(run.code, 0) << run.out;
  EXPECT_NE(run.out.find("flips=3 corrected=3 "), std::string::npos) << run.out;
  EXPECT_NE(run.out.find("wrong_outputs=0"), std::string::npos);
  EXPECT_EQ(cli("inject --scope galaxy").code, 2);
  EXPECT_EQ(cli("inject --scope mc --trials 10 --p-bit 0.1").code, 2);
  EXPECT_EQ(cli("inject --schedule " + sched.string() + " --netlist " + net("mux2")).code, 2);
}

TEST(Cli, Deterministic) {
  for (const std::string& args :
       {"schedule " + testutil::netlist_dir(), std::string("reliability"),
        std::string("inject --scope machine --n 45 --p-bit 0.02 --trials 10 --seed 8")}) {
    const auto a = cli(args), b = cli(args);
    EXPECT_EQ(a.code, 0) << args;
    EXPECT_EQ(a.out, b.out) << args;
  }
}
