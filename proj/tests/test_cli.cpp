#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "netforge/cli.hpp"

using namespace netforge;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out, err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "netforge");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(int(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::random_device rd;
    dir_ = fs::temp_directory_path() / ("netforge_cli_" + std::to_string(rd()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }
  fs::path dir_;
};

json parse_out(const CliRun& r) { return json::parse(r.out); }

}  // namespace

TEST_F(CliTest, CertifyHexagonWithCenterIsNotClosable) {
  const CliRun r = run({"certify", "--catalog", "polygon_center", "--k", "6"});
  ASSERT_EQ(r.code, exit_code::ok) << r.err;
  const json j = parse_out(r);
  EXPECT_TRUE(j["flexible"].get<bool>());
  EXPECT_FALSE(j["closable"].get<bool>());
  EXPECT_TRUE(j["balanced"].get<bool>());
  EXPECT_TRUE(j.contains("manifest"));
}

TEST_F(CliTest, CertifyRequirementsDriveExitCode) {
  EXPECT_EQ(run({"certify", "--catalog", "polygon_center", "--k", "6", "--require", "flexible,closable"}).code,
            exit_code::failed);
  EXPECT_EQ(run({"certify", "--catalog", "polygon_center", "--k", "5", "--require", "flexible,closable"}).code,
            exit_code::ok);
  EXPECT_EQ(run({"certify", "--catalog", "polygon_center", "--k", "5", "--require", "shiny"}).code,
            exit_code::parse_error);
}

TEST_F(CliTest, CertifyNcIsFlexibleAndClosable) {
  const CliRun r = run({"certify", "--catalog", "N_C", "--a", "0.3", "--b", "0.5", "--out", path("cert.json")});
  ASSERT_EQ(r.code, exit_code::ok) << r.err;
  std::ifstream f(path("cert.json"));
  const json j = json::parse(f);
  EXPECT_TRUE(j["flexible"].get<bool>());
  EXPECT_TRUE(j["closable"].get<bool>());
  EXPECT_TRUE(fs::exists(path("cert.json.manifest.json")));
  std::ifstream mf(path("cert.json.manifest.json"));
  const json m = json::parse(mf);
  EXPECT_EQ(m["command"], "certify");
  EXPECT_EQ(m["tool_version"], kToolVersion);
}

TEST_F(CliTest, CertifyNetworkFile) {
  write("net.json", network_to_json(polygon_center(5)).dump());
  const CliRun r = run({"certify", path("net.json")});
  EXPECT_EQ(r.code, exit_code::ok) << r.err;
  EXPECT_TRUE(parse_out(r)["closable"].get<bool>());
}

TEST_F(CliTest, MalformedInputIsParseError) {
  write("bad.json", "{ \"vertices\": [ }");
  EXPECT_EQ(run({"certify", path("bad.json")}).code, exit_code::parse_error);
  write("wrong.json", "{\"vertices\": [{\"id\": \"a\", \"pos\": [0, 0]}], \"edges\": [{\"u\": \"a\", \"v\": \"zz\", \"weight\": 1}]}");
  EXPECT_EQ(run({"certify", path("wrong.json")}).code, exit_code::parse_error);
  EXPECT_EQ(run({"certify", path("missing.json")}).code, exit_code::parse_error);
  EXPECT_EQ(run({"frobnicate"}).code, exit_code::parse_error);
  EXPECT_EQ(run({"certify", "--catalog", "nope"}).code, exit_code::parse_error);
  write("bad.csv", "x,y,sign,provenance\n1,2,5,a\n");
  EXPECT_EQ(run({"assemble", path("bad.csv"), "--ell", "10"}).code, exit_code::parse_error);
}

TEST_F(CliTest, BalanceIsDeterministicForASeed) {
  const CliRun a = run({"balance", "--catalog", "polygon_center", "--k", "5", "--seed", "3"});
  const CliRun b = run({"balance", "--catalog", "polygon_center", "--k", "5", "--seed", "3"});
  ASSERT_EQ(a.code, exit_code::ok) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_LT(parse_out(a)["max_force"].get<double>(), 1e-9);
}

TEST_F(CliTest, ConfigureFailingAssemblyReportsWitness) {
  const CliRun r = run({"configure", "--catalog", "example_5_1", "--k", "6", "--ell", "60", "--kappa", "900", "--out",
                     path("k6.csv")});
  EXPECT_EQ(r.code, exit_code::assembly_invalid);
  std::ifstream f(path("k6.csv.report.json"));
  const json j = json::parse(f);
  EXPECT_FALSE(j["assembly_conditions"][5]["pass"].get<bool>());
  EXPECT_FALSE(fs::exists(path("k6.csv")));
}

TEST_F(CliTest, ConfigureUnreachableKappaIsSolverFailure) {
  const CliRun r = run({"configure", "--catalog", "example_5_1", "--k", "7", "--ell", "10", "--kappa", "64", "--out",
                     path("k7.csv")});
  EXPECT_EQ(r.code, exit_code::solver_failed);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, ConfigureAssembleAndPlotNc) {
  const std::vector<std::string> args{"configure", "--catalog", "N_C", "--ell", "60", "--out", path("nc.csv")};
  const CliRun r = run(args);
  ASSERT_EQ(r.code, exit_code::ok) << r.err;
  std::ifstream rf(path("nc.csv.report.json"));
  const json rep = json::parse(rf);
  const auto pts = cloud_from_csv(read_text_file(path("nc.csv")));
  EXPECT_EQ(pts.size(), rep["predicted_point_count"].get<std::size_t>());
  EXPECT_EQ(pts.size(), rep["point_count"].get<std::size_t>());
  EXPECT_TRUE(fs::exists(path("nc.csv.manifest.json")));

  // Byte-identical outputs on a rerun.
  const std::string csv = read_text_file(path("nc.csv")), report = read_text_file(path("nc.csv.report.json"));
  ASSERT_EQ(run(args).code, exit_code::ok);
  EXPECT_EQ(read_text_file(path("nc.csv")), csv);
  EXPECT_EQ(read_text_file(path("nc.csv.report.json")), report);

  const CliRun a = run({"assemble", path("nc.csv"), "--out", path("nc.diag.json"), "--dump", path("dump")});
  ASSERT_EQ(a.code, exit_code::ok) << a.err;
  std::ifstream df(path("nc.diag.json"));
  const json diag = json::parse(df);
  EXPECT_LT(diag["worst_chain"].get<double>(), 0.05);
  EXPECT_DOUBLE_EQ(diag["ell"].get<double>(), 60.0);
  EXPECT_FALSE(fs::is_empty(path("dump")));

  ASSERT_EQ(run({"plot", path("nc.csv"), "--out", path("nc.svg")}).code, exit_code::ok);
  const std::string svg = read_text_file(path("nc.svg"));
  EXPECT_NE(svg.find("<circle"), std::string::npos);
  const std::string window = fs::directory_iterator(path("dump"))->path().string();
  ASSERT_EQ(run({"plot", window, "--out", path("w.svg")}).code, exit_code::ok);
  EXPECT_NE(read_text_file(path("w.svg")).find("rgb("), std::string::npos);
}

TEST_F(CliTest, AssembleSinglePointHasZeroResidual) {
  write("one.csv", "x,y,sign,provenance\n0,0,1,anchor:a:0\n");
  const CliRun r = run({"assemble", path("one.csv"), "--ell", "10", "--windows", "all"});
  ASSERT_EQ(r.code, exit_code::ok) << r.err;
  const json j = parse_out(r);
  EXPECT_LT(j["norms"]["sup"].get<double>(), 1e-12);
}

TEST_F(CliTest, AssembleTwoPointChain) {
  write("two.csv", "x,y,sign,provenance\n0,0,1,anchor:a:0\n10,0,1,anchor:b:0\n");
  const CliRun r = run({"assemble", path("two.csv"), "--ell", "10", "--windows", "list", "--points", "0,1"});
  ASSERT_EQ(r.code, exit_code::ok) << r.err;
  const json j = parse_out(r);
  ASSERT_EQ(j["projections"].size(), 2u);
  for (const auto& row : j["projections"]) EXPECT_LT(row["deviation"].get<double>(), 0.05);
  EXPECT_EQ(run({"assemble", path("two.csv"), "--ell", "10", "--windows", "list", "--points", "0,x"}).code,
            exit_code::parse_error);
  EXPECT_EQ(run({"assemble", path("two.csv")}).code, exit_code::parse_error);
}

TEST_F(CliTest, PlotRejectsUnknownFormat) {
  write("junk.csv", "a,b,c,d\n1,2,3,4\n");
  EXPECT_EQ(run({"plot", path("junk.csv"), "--out", path("junk.svg")}).code, exit_code::parse_error);
}
