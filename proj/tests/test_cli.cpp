#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <bogo/cli.hpp>

using namespace bogo;
using nlohmann::json;

namespace {

struct CliRun {
  int code;
  std::string out, err;
  json report() const { return json::parse(out); }
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

std::string temp_path(const char* name) { return std::string(::testing::TempDir()) + name; }

void write_file(const std::string& path, const std::string& text) {
  std::ofstream o(path);
  o << text;
}

}  // namespace

TEST(Cli, IndexReport) {
  CliRun r = run({"index", "--genus", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  json j = r.report();
  EXPECT_EQ(j["command"], "index");
  EXPECT_EQ(j["metrics"]["dimension"], 12);
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_EQ(j["inputs"]["genus"], 3);
}

TEST(Cli, DivisorReport) {
  CliRun r = run({"divisor", "--poly", "z^2*(z-1)"});
  ASSERT_EQ(r.code, 0) << r.err;
  json d = r.report()["metrics"]["divisor"];
  ASSERT_EQ(d.size(), 2u);
  EXPECT_NEAR(d[0]["re"].get<double>(), 0.0, 1e-12);
  EXPECT_EQ(d[0]["mult"], 2);
  EXPECT_NEAR(d[1]["re"].get<double>(), 1.0, 1e-12);
  EXPECT_EQ(d[1]["mult"], 1);
  EXPECT_EQ(r.report()["metrics"]["degree"], 3);
}

TEST(Cli, DivisorArithmeticErrorsAreValidationErrors) {
  EXPECT_EQ(run({"divisor", "--poly", "z^3", "--genus", "2"}).code, 2);
  EXPECT_EQ(run({"divisor", "--poly", "0"}).code, 2);
  CliRun bad = run({"divisor", "--poly", "z^"});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("poly"), std::string::npos);
  CliRun ok = run({"divisor", "--poly", "z^2", "--genus", "2"});
  ASSERT_EQ(ok.code, 0);
  EXPECT_EQ(ok.report()["metrics"]["line_bundle_degree"], 0);
  EXPECT_EQ(ok.report()["metrics"]["regime"], ">=2g-2");
}

TEST(Cli, VerifyModelIsDeterministic) {
  std::vector<std::string> args{"verify-model", "--k", "2", "--grid", "16x12", "--richardson"};
  CliRun a = run(args), b = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  json j = a.report();
  EXPECT_EQ(j["metrics"]["grid"]["nr"], 16);
  EXPECT_EQ(j["metrics"]["grid"]["ny"], 12);
  EXPECT_TRUE(j["checks"].contains("sup_below_tol"));
  EXPECT_TRUE(j["metrics"].contains("richardson_ratio"));
}

TEST(Cli, UnknownAndMissingCommands) {
  CliRun a = run({"frobnicate"});
  EXPECT_EQ(a.code, 2);
  EXPECT_NE(a.err.find("frobnicate"), std::string::npos);
  EXPECT_EQ(run({}).code, 2);
}

TEST(Cli, BadValuesNameTheKey) {
  CliRun a = run({"verify-model", "--k", "9"});
  EXPECT_EQ(a.code, 2);
  EXPECT_NE(a.err.find("--k"), std::string::npos);
  CliRun b = run({"verify-model", "--grid", "12by12"});
  EXPECT_EQ(b.code, 2);
  EXPECT_NE(b.err.find("grid"), std::string::npos);
  CliRun c = run({"transport", "--s0", "1,x"});
  EXPECT_EQ(c.code, 2);
  EXPECT_NE(c.err.find("s0"), std::string::npos);
  EXPECT_EQ(run({"index"}).code, 2);
  EXPECT_EQ(run({"index", "--genus", "1"}).code, 2);
}

TEST(Cli, ConfigFileAndFlagPrecedence) {
  std::string path = temp_path("bogo_cfg.txt");
  write_file(path, "# run config\nk = 2\ngrid=12x12\n--spacing=uniform\n");
  CliRun a = run({"verify-model", "--config", path, "--k", "1"});
  ASSERT_EQ(a.code, 0) << a.err;
  json in = a.report()["inputs"];
  EXPECT_EQ(in["k"], 1);
  EXPECT_EQ(in["grid"], "12x12");
  EXPECT_EQ(in["spacing"], "uniform");
  write_file(path, "k=1\nwidth=3\n");
  CliRun b = run({"verify-model", "--config", path});
  EXPECT_EQ(b.code, 2);
  EXPECT_NE(b.err.find("width"), std::string::npos);
  write_file(path, "k 1\n");
  EXPECT_EQ(run({"verify-model", "--config", path}).code, 2);
  EXPECT_EQ(run({"verify-model", "--config", temp_path("no_such_file")}).code, 2);
  std::remove(path.c_str());
}

TEST(Cli, FlowNonConvergenceExitsOne) {
  CliRun r = run({"flow", "--nx", "8", "--ny", "8", "--max-steps", "2"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("max_steps"), std::string::npos);
}

TEST(Cli, FlowWritesCheckpointAndHistory) {
  std::string ck = temp_path("bogo_cli.ckpt"), hist = temp_path("bogo_cli.jsonl"), rep = temp_path("bogo_cli.json");
  CliRun r = run({"flow", "--nx", "8", "--ny", "9", "--checkpoint", ck, "--history", hist, "--out", rep});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(rep);
  json j = json::parse(in);
  EXPECT_TRUE(j["pass"].get<bool>());
  auto [g, m] = read_checkpoint(ck);
  EXPECT_EQ(g.n2(), 8);
  EXPECT_EQ(m.h.size(), g.size());
  std::ifstream h(hist);
  std::string first;
  std::getline(h, first);
  EXPECT_EQ(json::parse(first)["step"], 0);
  for (auto* p : {&ck, &hist, &rep}) std::remove(p->c_str());
}

TEST(Cli, SolveTransportPairingChain) {
  CliRun s = run({"solve-scalar", "--grid", "16x16", "--r-min", "0.2", "--r-max", "2", "--y-min", "0.2", "--y-max", "2"});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_TRUE(s.report()["pass"].get<bool>());
  CliRun t = run({"transport", "--k", "0", "--s0", "0,1"});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_NEAR(t.report()["metrics"]["exponent"].get<double>(), 0.5, 0.02);
  CliRun p = run({"pairing", "--samples", "5"});
  ASSERT_EQ(p.code, 0) << p.err;
  EXPECT_TRUE(p.report()["pass"].get<bool>());
  CliRun c = run({"reduce-chain", "--k", "1", "--n", "16"});
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_EQ(c.report()["metrics"]["links"].size(), 3u);
}

TEST(Cli, BinaryExitCodes) {
  std::string tool = BOGO_TOOL_PATH, out = temp_path("bogo_bin.json");
  auto status = [&](const std::string& args) {
    int s = std::system((tool + " " + args + " > " + out + " 2>/dev/null").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(status("index --genus 3"), 0);
  std::ifstream in(out);
  EXPECT_EQ(json::parse(in)["metrics"]["dimension"], 12);
  EXPECT_EQ(status("nope"), 2);
  EXPECT_EQ(status("flow --nx 8 --ny 8 --max-steps 1"), 1);
  std::remove(out.c_str());
}
