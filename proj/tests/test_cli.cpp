#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "inscribe/cli.hpp"

using namespace inscribe;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "inscribe");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) : path_(fs::temp_directory_path() / ("inscribe_cli_" + tag)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name, const std::string& text = "") const {
    const auto p = path_ / name;
    if (!text.empty()) std::ofstream(p) << text;
    return p.string();
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t count_lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

constexpr const char* kSquare = R"({"dim": 2, "vertices": [[1, 1], [-1, 1], [-1, -1], [1, -1]]})";
constexpr const char* kTriakis = R"({"dim": 3, "vertices": [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1],
  [-0.5, -0.5, -0.5], [-0.5, 0.5, 0.5], [0.5, -0.5, 0.5], [0.5, 0.5, -0.5]]})";

}  // namespace

TEST(CliCheck, SquareIsInscribed) {
  TempDir dir("check_square");
  const Result r = run_cli({"check", dir.file("square.json", kSquare)});
  EXPECT_EQ(r.code, cli::kInscribed) << r.err;
  const json doc = json::parse(r.out);
  EXPECT_TRUE(doc["inscribed"].get<bool>());
  EXPECT_EQ(doc["method"], "SDP-λh");
  ASSERT_EQ(doc["vertices"].size(), 4u);
  for (const auto& v : doc["vertices"]) EXPECT_NEAR(std::hypot(v[0].get<double>(), v[1].get<double>()), 1.0, 1e-6);
}

TEST(CliCheck, UsesFacetsFromFile) {
  TempDir dir("check_facets");
  const std::string text = R"({"dim": 2, "vertices": [[1, 1], [-1, 1], [-1, -1], [1, -1]], "facets": [[0, 1], [1, 2], [2, 3], [3, 0]]})";
  const Result r = run_cli({"check", dir.file("sq.json", text)});
  EXPECT_EQ(r.code, cli::kInscribed) << r.err;
}

TEST(CliCheck, InputErrorsExitOne) {
  TempDir dir("check_errors");
  Result r = run_cli({"check", dir.file("small.json", R"({"dim": 3, "vertices": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]})")});
  EXPECT_EQ(r.code, cli::kUsage);
  EXPECT_NE(r.err.find("InvalidArgument"), std::string::npos) << r.err;

  r = run_cli({"check", dir.file("broken.json", "{\n  \"dim\": 2,\n  \"vertices\" [[1, 0]]\n}")});
  EXPECT_EQ(r.code, cli::kUsage);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;

  r = run_cli({"check", (dir.path() / "missing.json").string()});
  EXPECT_EQ(r.code, cli::kUsage);
  r = run_cli({"check"});
  EXPECT_EQ(r.code, cli::kUsage);
}

TEST(CliCheck, UndeterminedExitsTwo) {
  TempDir dir("check_triakis");
  const Result r = run_cli({"check", dir.file("triakis.json", kTriakis), "--sdp-max-iter", "1"});
  EXPECT_EQ(r.code, cli::kUndetermined) << r.err;
  const json doc = json::parse(r.out);
  EXPECT_FALSE(doc["inscribed"].get<bool>());
  EXPECT_TRUE(doc["vertices"].is_null());
  EXPECT_EQ(doc["steps"].size(), 3u);
}

TEST(CliGen, DeterministicFiles) {
  TempDir a("gen_a"), b("gen_b");
  ASSERT_EQ(run_cli({"gen", "-n", "7", "-d", "4", "-c", "3", "-s", "11", "-o", a.path().string()}).code, 0);
  ASSERT_EQ(run_cli({"gen", "-n", "7", "-d", "4", "-c", "3", "-s", "11", "-o", b.path().string()}).code, 0);
  for (int k = 0; k < 3; ++k) {
    const std::string name = cli::gen_file_name(7, 4, k);
    const std::string text = slurp((a.path() / name).string());
    ASSERT_FALSE(text.empty()) << name;
    EXPECT_EQ(text, slurp((b.path() / name).string()));
    const PolytopeFile f = parse_polytope_json(text);
    EXPECT_EQ(f.polytope.n(), 7);
    ASSERT_TRUE(f.facets.has_value());
    const RandomPolytope rp = random_inscribed(7, 4, 11 + k);
    EXPECT_EQ(f.polytope.vertices, rp.polytope.vertices);
    EXPECT_EQ(*f.facets, rp.incidence);
  }
  EXPECT_EQ(run_cli({"gen", "-n", "3", "-d", "3", "-o", a.path().string()}).code, cli::kUsage);
}

TEST(CliFamily, CertificateFields) {
  Result r = run_cli({"family", "cube", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  json doc = json::parse(r.out);
  EXPECT_NEAR(doc["lambda_bar"].get<double>(), 0.5, 1e-15);
  EXPECT_NEAR(doc["lambda_max_closed_form"].get<double>(), 8.0, 1e-12);
  EXPECT_TRUE(doc["dual_feasible"].get<bool>());
  EXPECT_FALSE(doc.contains("solve"));

  r = run_cli({"family", "ngon", "3", "--solve"});
  ASSERT_EQ(r.code, 0) << r.err;
  doc = json::parse(r.out);
  EXPECT_LE(std::abs(doc["gap"].get<double>()), 1e-8);
  EXPECT_EQ(doc["solve"]["rank"], 3);
  EXPECT_TRUE(doc["solve"]["rank_ok"].get<bool>());

  EXPECT_EQ(run_cli({"family", "cube", "1"}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"family", "prism", "3"}).code, cli::kUsage);
}

TEST(CliBench, SummaryAndDetailRows) {
  TempDir dir("bench");
  const std::string out = dir.file("b.csv");
  const Result r = run_cli({"bench", "--set", "5,3,3,7", "--set", "6,3,2,1", "--methods", "SDP-λc,SAP-lc", "-o", out});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string sum = slurp(out), det = slurp(cli::detail_path_for(out));
  EXPECT_EQ(sum.substr(0, sum.find('\n')), "method,n,d,solved,total,avg_time_s,max_time_s");
  EXPECT_EQ(count_lines(sum), 1u + 2u * 2u);
  EXPECT_EQ(count_lines(det), 1u + 2u * (3u + 2u));
  EXPECT_NE(sum.find("SAP-λc,5,3,"), std::string::npos);
  EXPECT_EQ(det.substr(0, det.find('\n')), "method,n,d,index,seed,inscribed,capped,solved,iterations,time_s");
}

TEST(CliBench, MethodValidation) {
  TempDir dir("bench_bad");
  const std::string out = dir.file("b.csv");
  EXPECT_EQ(run_cli({"bench", "--set", "5,3,1,7", "--methods", "", "-o", out}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"bench", "--set", "5,3,1,7", "--methods", "SDP-foo", "-o", out}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"bench", "--set", "5,3", "--methods", "SDP-lc", "-o", out}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"bench", "--set", "3,3,1,1", "--methods", "SDP-lc", "-o", out}).code, cli::kUsage);
}

TEST(CliBench, ThreadCountDoesNotChangeOutcomes) {
  const std::vector<cli::BenchSet> sets{{6, 3, 3, 5}};
  const std::vector<std::string> methods{method::kSdpConst, method::kSapConst};
  const auto one = cli::run_bench(sets, methods, {}, 1), two = cli::run_bench(sets, methods, {}, 2);
  ASSERT_EQ(one.size(), two.size());
  for (std::size_t k = 0; k < one.size(); ++k) {
    EXPECT_EQ(one[k].method, two[k].method);
    EXPECT_EQ(one[k].index, two[k].index);
    EXPECT_EQ(one[k].inscribed, two[k].inscribed);
    EXPECT_EQ(one[k].iterations, two[k].iterations);
  }
}

TEST(CliMethods, CanonicalNames) {
  EXPECT_EQ(cli::canonical_method("AP-λ*"), "AP-λ*");
  EXPECT_EQ(cli::canonical_method("ap-lstar"), "AP-λ*");
  EXPECT_EQ(cli::canonical_method("SDP-lh"), "SDP-λh");
  EXPECT_FALSE(cli::canonical_method("AP-lc").has_value());
  EXPECT_FALSE(cli::canonical_method("sdp").has_value());
  EXPECT_EQ(cli::bench_methods().size(), 7u);
}

TEST(CliUsage, ExitCodesAreTotal) {
  EXPECT_EQ(run_cli({}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
  EXPECT_EQ(run_cli({"gen", "-n", "x", "-d", "2"}).code, cli::kUsage);
}

// The installed binary, not just the in-process entry point.
TEST(CliBinary, ExitCodes) {
  TempDir dir("binary");
  const std::string sq = dir.file("square.json", kSquare);
  const std::string bin = INSCRIBE_CLI_PATH;
  auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(status(bin + " check " + sq), 0);
  EXPECT_EQ(status(bin + " check " + dir.file("none.json")), 1);
  EXPECT_EQ(status(bin + " family ngon 2"), 1);
}
