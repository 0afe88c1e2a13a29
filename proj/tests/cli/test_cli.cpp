#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("mc_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Result run(const std::string& args) {
  static int counter = 0;
  const auto err_file = fs::temp_directory_path() / ("mc_cli_stderr_" + std::to_string(counter++));
  const std::string cmd = std::string("\"") + MC_CLI + "\" " + args + " 2>\"" + err_file.string() + "\"";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err_file);
  fs::remove(err_file);
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

// Two small synthetic blocks with features for each; returns the directory.
fs::path small_suite(const std::string& name, const std::string& params) {
  const auto dir = fresh_dir(name);
  std::ofstream(dir / "params.json") << params;
  const auto r = run("synth -o " + q(dir) + " -n 2 --seed 3 --params " + q(dir / "params.json"));
  EXPECT_EQ(r.code, 0) << r.err;
  for (const char* id : {"block_01", "block_02"}) {
    const std::string b = id;
    const auto f = run("features --det " + q(dir / (b + "_det.json")) + " --gt " + q(dir / (b + "_gt.json")) +
                       " --grid " + q(dir / (b + "_grid.json")) + " -o " + q(dir / (b + ".csv")));
    EXPECT_EQ(f.code, 0) << f.err;
  }
  return dir;
}

}  // namespace

TEST(Cli, HelpListsFlagsWithDefaults) {
  const auto top = run("--help");
  EXPECT_EQ(top.code, 0);
  for (const char* cmd : {"tile", "features", "fit", "select", "count", "synth", "report"})
    EXPECT_NE(top.out.find(cmd), std::string::npos) << cmd;
  const auto tile = run("tile --help");
  EXPECT_EQ(tile.code, 0);
  EXPECT_NE(tile.out.find("--patch-size"), std::string::npos);
  EXPECT_NE(tile.out.find("608"), std::string::npos);
  const auto fit = run("fit --help");
  for (const char* flag : {"--models", "--seed", "--svr-c", "--svr-epsilon", "--svr-gamma", "--lasso-lambda",
                           "--mlp-hidden", "--mlp-learning-rate", "--mlp-epochs"})
    EXPECT_NE(fit.out.find(flag), std::string::npos) << flag;
  EXPECT_NE(fit.out.find("5000"), std::string::npos);
  EXPECT_NE(fit.out.find("linear,svr,lasso,mlp"), std::string::npos);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("tile").code, 2);
  EXPECT_EQ(run("fit x.csv -o /tmp/x --svr-c notanumber").code, 2);
}

TEST(Cli, TileMissingFileNamesPath) {
  const auto r = run("tile /nonexistent/ortho.png -o /tmp/mc_cli_none");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("/nonexistent/ortho.png"), std::string::npos);
}

TEST(Cli, TileWritesPatchesAndManifest) {
  const auto dir = fresh_dir("tile");
  std::ofstream(dir / "p.json") << R"({"block_width": 1216, "block_height": 608, "mound_density": 5})";
  ASSERT_EQ(run("synth -o " + q(dir) + " -n 1 --params " + q(dir / "p.json")).code, 0);
  const auto r = run("tile " + q(dir / "block_01.png") + " -o " + q(dir / "tiles"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "tiles" / "block_01_r0_c0.png"));
  EXPECT_TRUE(fs::exists(dir / "tiles" / "block_01_r0_c1.png"));
  const auto manifest = slurp(dir / "tiles" / "block_01_grid.json");
  EXPECT_NE(manifest.find("\"rows\": 1"), std::string::npos);
  EXPECT_NE(manifest.find("\"cols\": 2"), std::string::npos);
  std::size_t pngs = 0;
  for (const auto& e : fs::directory_iterator(dir / "tiles")) pngs += e.path().extension() == ".png";
  EXPECT_EQ(pngs, 2u);
}

TEST(Cli, SynthAndFitAreByteDeterministic) {
  const auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
  const std::string params = R"({"block_width": 1216, "block_height": 1216})";
  std::ofstream(a / "p.json") << params;
  ASSERT_EQ(run("synth -o " + q(a) + " -n 2 --seed 11 --params " + q(a / "p.json")).code, 0);
  ASSERT_EQ(run("synth -o " + q(b) + " -n 2 --seed 11 --params " + q(a / "p.json")).code, 0);
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().filename() == "p.json") continue;
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path().filename();
  }
  const auto feats = "features --det " + q(a / "block_01_det.json") + " --gt " + q(a / "block_01_gt.json") +
                     " --grid " + q(a / "block_01_grid.json") + " -o ";
  ASSERT_EQ(run(feats + q(a / "f.csv")).code, 0);
  ASSERT_EQ(run(feats + q(b / "f.csv") + " --jobs 3").code, 0);
  EXPECT_EQ(slurp(a / "f.csv"), slurp(b / "f.csv"));
  ASSERT_EQ(run("fit " + q(a / "f.csv") + " -o " + q(a / "m") + " --seed 5 --mlp-epochs 300").code, 0);
  ASSERT_EQ(run("fit " + q(a / "f.csv") + " -o " + q(b / "m") + " --seed 5 --mlp-epochs 300").code, 0);
  for (const char* m : {"linear.json", "svr.json", "lasso.json", "mlp.json"})
    EXPECT_EQ(slurp(a / "m" / m), slurp(b / "m" / m)) << m;
}

TEST(Cli, ConfigPrecedenceAndUnknownKeys) {
  const auto dir = small_suite("config", R"({"block_width": 1216, "block_height": 1216})");
  std::ofstream(dir / "cfg.json") << R"({"models": "lasso", "lasso_lambda": 0.5})";
  auto r = run("--config " + q(dir / "cfg.json") + " fit " + q(dir / "block_01.csv") + " -o " + q(dir / "c1"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "c1" / "lasso.json"));
  EXPECT_FALSE(fs::exists(dir / "c1" / "linear.json"));
  EXPECT_NE(slurp(dir / "c1" / "lasso.json").find("\"lambda\": 0.5"), std::string::npos);
  r = run("--config " + q(dir / "cfg.json") + " fit " + q(dir / "block_01.csv") + " -o " + q(dir / "c2") +
          " --lasso-lambda 0.25");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(slurp(dir / "c2" / "lasso.json").find("\"lambda\": 0.25"), std::string::npos);

  std::ofstream(dir / "bad.json") << R"({"modles": "lasso"})";
  r = run("--config " + q(dir / "bad.json") + " fit " + q(dir / "block_01.csv") + " -o " + q(dir / "c3"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("modles"), std::string::npos);
}

TEST(Cli, InvalidSynthParamsExitTwo) {
  const auto dir = fresh_dir("badsynth");
  std::ofstream(dir / "p.json") << R"({"tree_coverage": 0.8, "water_coverage": 0.5})";
  EXPECT_EQ(run("synth -o " + q(dir) + " -n 1 --params " + q(dir / "p.json")).code, 2);
}

TEST(Cli, InsufficientDataExitsThree) {
  const auto dir = fresh_dir("tiny");
  std::ofstream(dir / "one.csv") << "block_id,row,col,x1,x2,x3,x4,y\nb,0,0,1,0,0,0,1\n";
  const auto r = run("fit " + q(dir / "one.csv") + " -o " + q(dir / "m") + " --models linear");
  EXPECT_EQ(r.code, 3);
}

TEST(Cli, PerfectDetectorSelectsWithNearPerfectRcp) {
  const auto dir = small_suite(
      "perfect", R"({"block_width": 4256, "block_height": 4256, "miss_model": {"b0": 0, "b_tree": 0, "b_water": 0, "b_debris": 0}})");
  // Both blocks go into training so validation counts stay inside the fitted
  // range; RBF models revert to the mean when extrapolating.
  ASSERT_EQ(run("fit " + q(dir / "block_01.csv") + " " + q(dir / "block_02.csv") + " -o " + q(dir / "m") +
                " --mlp-epochs 2000")
                .code,
            0);
  const auto r = run("select " + q(dir / "m" / "linear.json") + " " + q(dir / "m" / "svr.json") + " " +
                     q(dir / "m" / "lasso.json") + " " + q(dir / "m" / "mlp.json") + " --validation " +
                     q(dir / "block_02.csv") + " -o " + q(dir / "best.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) {
    std::istringstream cells(line);
    std::string model, bundle, count, truth, pct;
    cells >> model >> bundle >> count >> truth >> pct;
    if (model != "linear" && model != "svr" && model != "lasso" && model != "mlp") continue;
    ++rows;
    const double v = std::stod(pct);
    EXPECT_GE(v, 99.0) << line;
  }
  EXPECT_EQ(rows, 4);
  EXPECT_NE(r.out.find("selected: "), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "best.json"));
}

TEST(Cli, SingleModelIsSelected) {
  const auto dir = small_suite("single", R"({"block_width": 1216, "block_height": 1216})");
  ASSERT_EQ(run("fit " + q(dir / "block_01.csv") + " -o " + q(dir / "m") + " --models svr").code, 0);
  const auto r = run("select " + q(dir / "m" / "svr.json") + " --validation " + q(dir / "block_02.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("selected: svr"), std::string::npos);
}

TEST(Cli, IdentityBundleLeavesCountUnchanged) {
  const auto dir = small_suite("identity", R"({"block_width": 1216, "block_height": 1216})");
  std::ofstream(dir / "id.json") << R"({
  "format_version": "1",
  "model_type": "linear",
  "standardizer": {"means": [0, 0, 0, 0], "stddevs": [1, 1, 1, 1], "zero_variance": [false, false, false, false]},
  "params": {"weights": [1, 0, 0, 0], "intercept": 0},
  "metadata": {"training_block": "", "n_samples": 0, "hyperparameters": {}}
})";
  const auto r = run("count --features " + q(dir / "block_02.csv") + " --bundle " + q(dir / "id.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto local = r.out.find("local count ");
  const auto corrected = r.out.find(") ");
  ASSERT_NE(local, std::string::npos);
  ASSERT_NE(corrected, std::string::npos);
  EXPECT_EQ(std::stol(r.out.substr(local + 12)), std::stol(r.out.substr(corrected + 2)));
}

TEST(Cli, CountWithGroundTruthReportsRcp) {
  const auto dir = small_suite("count", R"({"block_width": 1824, "block_height": 1824})");
  ASSERT_EQ(run("fit " + q(dir / "block_01.csv") + " -o " + q(dir / "m") + " --models svr").code, 0);
  const std::string ids = slurp(dir / "block_02_manifest.json");
  const auto at = ids.find("\"gt_count\": ");
  ASSERT_NE(at, std::string::npos);
  const long gt = std::stol(ids.substr(at + 12));
  const auto r = run("count --det " + q(dir / "block_02_det.json") + " --grid " + q(dir / "block_02_grid.json") +
                     " --bundle " + q(dir / "m" / "svr.json") + " --gt " + std::to_string(gt) + " -o " +
                     q(dir / "report.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("overall"), std::string::npos);
  const auto csv = slurp(dir / "report.csv");
  // block row: id,gt,local,local_rcp,svr_count,svr_rcp
  std::istringstream in(csv);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  std::vector<std::string> cells;
  std::istringstream rs(row);
  for (std::string c; std::getline(rs, c, ',');) cells.push_back(c);
  ASSERT_EQ(cells.size(), 6u);
  EXPECT_GE(std::stod(cells[5]), std::stod(cells[3]));
}

TEST(Cli, ReportOnPublishedCounts) {
  const auto r = run(std::string("report ") + MC_FIXTURES + "/published_counts.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("88%"), std::string::npos);
  const auto overall = r.out.find("overall");
  ASSERT_NE(overall, std::string::npos);
  const auto line = r.out.substr(overall, r.out.find('\n', overall) - overall);
  for (const char* v : {"125054", "115968", "93%", "101515", "81%", "122532", "98%", "126926", "99%"})
    EXPECT_NE(line.find(v), std::string::npos) << v;
  EXPECT_EQ(run("report /nonexistent.csv").code, 2);
}
