#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kSource = NEVLAB_SOURCE_DIR;
const std::string kCli = NEVLAB_CLI;

struct Outcome {
  int status = -1;
  std::string output;
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
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("nevlab_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override {
    if (!HasFailure()) fs::remove_all(dir_);
  }

  // runs the CLI with the given arguments; stdout and stderr are captured together
  Outcome run(const std::string& args, const std::string& env = "") {
    const fs::path log = dir_ / "log.txt";
    const std::string cmd = env + " \"" + kCli + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int raw = std::system(cmd.c_str());
    Outcome o;
    o.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    o.output = slurp(log);
    return o;
  }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  static std::string config(const std::string& name) { return "\"" + (kSource / "examples_cfg" / name).string() + "\""; }

  fs::path dir_;
};

const char* kSmallFmt = R"cfg({
  "experiment": "fmt",
  "surface": {"kind": "euclidean"},
  "curve": ["1", "exp(z)"],
  "divisor": ["w0 + w1"],
  "grid": {"min": 1, "max": 4, "count": 4, "spacing": "log"}
})cfg";

}  // namespace

TEST_F(Cli, EveryExampleConfigValidates) {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(kSource / "examples_cfg")) {
    if (entry.path().extension() != ".json") continue;
    ++count;
    const auto o = run("validate \"" + entry.path().string() + "\"");
    EXPECT_EQ(o.status, 0) << entry.path() << "\n" << o.output;
  }
  EXPECT_GE(count, 10);
}

TEST_F(Cli, RunWritesReportTablesAndPlots) {
  const auto cfg = write("fmt.json", kSmallFmt);
  const auto out = dir_ / "out";
  const auto o = run("run \"" + cfg.string() + "\" --out \"" + out.string() + "\"");
  ASSERT_EQ(o.status, 0) << o.output;
  EXPECT_TRUE(fs::exists(out / "report.json"));
  EXPECT_TRUE(fs::exists(out / "timing.json"));
  const std::string csv = slurp(out / "tables" / "fmt.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "r,rho_e,T,T_jensen,m,N,residual,defect_ratio,boundary_zeros");
  int lines = 0;
  for (char c : csv) lines += c == '\n';
  EXPECT_EQ(lines, 5);
  EXPECT_FALSE(fs::is_empty(out / "plots"));
  const std::string report = slurp(out / "report.json");
  EXPECT_NE(report.find("\"experiment\": \"fmt\""), std::string::npos);
  // wall-clock time stays out of the report so reruns are byte-identical
  EXPECT_EQ(report.find("wall_clock"), std::string::npos);
}

TEST_F(Cli, FailedAssertionExitsWithTwo) {
  const auto o = run("run " + config("nev_p1_mu2.json") + " --out \"" + (dir_ / "out").string() + "\"");
  EXPECT_EQ(o.status, 2) << o.output;
  EXPECT_NE(o.output.find("sigma={w0}, E=w0"), std::string::npos) << o.output;
  EXPECT_TRUE(fs::exists(dir_ / "out" / "report.json"));
}

TEST_F(Cli, ConfigErrorsExitWithOneAndPointAtTheSource) {
  const std::string body = std::string(kSmallFmt);
  const auto unknown = write("unknown.json", body.substr(0, body.rfind('}')) + ",\n  \"colour\": 1\n}\n");
  auto o = run("validate \"" + unknown.string() + "\"");
  EXPECT_EQ(o.status, 1);
  EXPECT_NE(o.output.find("unknown.json:8:"), std::string::npos) << o.output;
  EXPECT_NE(o.output.find("unknown key 'colour'"), std::string::npos) << o.output;

  const auto bad_expr = write("expr.json", R"cfg({"experiment": "fmt", "surface": {"kind": "euclidean"},
 "curve": ["1", "exp(z"], "divisor": ["w1"], "grid": {"min": 1, "max": 2, "count": 2}})cfg");
  o = run("run \"" + bad_expr.string() + "\"");
  EXPECT_EQ(o.status, 1);
  EXPECT_NE(o.output.find("expr.json:2:"), std::string::npos) << o.output;
  EXPECT_NE(o.output.find("position 5"), std::string::npos) << o.output;

  const auto syntax = write("syntax.json", "{\"experiment\": \"fmt\",,}");
  EXPECT_EQ(run("validate \"" + syntax.string() + "\"").status, 1);
  EXPECT_EQ(run("validate \"" + (dir_ / "missing.json").string() + "\"").status, 1);
  EXPECT_NE(run("frobnicate").status, 0);
}

TEST_F(Cli, ReportsAreIdenticalAcrossThreadCounts) {
  std::string first;
  for (const char* threads : {"1", "3"}) {
    const auto out = dir_ / (std::string("t") + threads);
    const auto o = run("run " + config("fmt_poincare_mc.json") + " --out \"" + out.string() + "\"",
                       std::string("NEVLAB_THREADS=") + threads);
    ASSERT_EQ(o.status, 0) << o.output;
    const std::string report = slurp(out / "report.json");
    ASSERT_FALSE(report.empty());
    if (first.empty())
      first = report;
    else
      EXPECT_TRUE(report == first) << "report.json differs between thread counts";
  }
}

TEST_F(Cli, PlotDrawsSvgFromTable) {
  const auto cfg = write("fmt.json", kSmallFmt);
  const auto out = dir_ / "out";
  ASSERT_EQ(run("run \"" + cfg.string() + "\" --out \"" + out.string() + "\"").status, 0);
  const auto svg = dir_ / "residual.svg";
  const auto o = run("plot \"" + (out / "tables" / "fmt.csv").string() + "\" --y T --y m --logx -o \"" +
                     svg.string() + "\"");
  ASSERT_EQ(o.status, 0) << o.output;
  const std::string text = slurp(svg);
  EXPECT_NE(text.find("<svg"), std::string::npos);
  EXPECT_NE(text.find("</svg>"), std::string::npos);
  EXPECT_NE(run("plot \"" + (out / "tables" / "fmt.csv").string() + "\" --y no_such_column").status, 0);
}
