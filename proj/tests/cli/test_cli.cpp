#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;

const std::string kCli = PERMLL_CLI_PATH;
const std::string kBlobs = std::string(PERMLL_SOURCE_DIR) + "/configs/blobs40.toml";
// Small and fast variant of the frozen experiment.
const std::string kSmall =
    " --set dataset.per_class=60 --set dataset.test_per_class=20 --set train.epochs=3"
    " --set model.hidden=8";

struct Result {
  int code = -1;
  std::string out;
  std::string err;
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
    dir_ = fs::temp_directory_path() /
           ("permll_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result run(const std::string& args) const {
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = "cd '" + dir_.string() + "' && '" + kCli + "' " + args + " >'" +
                            out.string() + "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  fs::path dir_;
};

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream in(line);
  for (std::string f; std::getline(in, f, ',');) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

TEST_F(Cli, TrainWritesRunDirectory) {
  const Result r = run("train -c " + kBlobs + kSmall + " --run-dir run1");
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* name : {"report.json", "epochs.csv", "ckpt", "config.resolved"})
    EXPECT_TRUE(fs::is_regular_file(dir_ / "run1" / name)) << name;
  EXPECT_NE(r.out.find("permutation accuracy"), std::string::npos);
  const auto report = nlohmann::json::parse(slurp(dir_ / "run1" / "report.json"));
  EXPECT_EQ(report["status"], "ok");
  EXPECT_EQ(report["epochs"].size(), 3u);
  EXPECT_EQ(lines(slurp(dir_ / "run1" / "epochs.csv")).size(), 4u);
}

TEST_F(Cli, FrozenConfigReproducesRun) {
  ASSERT_EQ(run("train -c " + kBlobs + kSmall + " --run-dir a").code, 0);
  const Result r = run("train -c a/config.resolved --run-dir b");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir_ / "a" / "epochs.csv"), slurp(dir_ / "b" / "epochs.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / "config.resolved"), slurp(dir_ / "b" / "config.resolved"));
}

TEST_F(Cli, DefaultRunDirectoryUsesOutputRoot) {
  const Result r = run("train -c " + kBlobs + kSmall + " --set output.dir=roots");
  ASSERT_EQ(r.code, 0) << r.err;
  std::size_t count = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "roots")) {
    ++count;
    EXPECT_NE(e.path().filename().string().find("-train"), std::string::npos);
  }
  EXPECT_EQ(count, 1u);
}

TEST_F(Cli, EtaZeroOverrideFreezesPermutations) {
  ASSERT_EQ(run("train -c " + kBlobs + kSmall + " --set train.eta_alpha=0 --run-dir z").code, 0);
  const auto rows = lines(slurp(dir_ / "z" / "epochs.csv"));
  const auto init = nlohmann::json::parse(slurp(dir_ / "z" / "report.json"))["initial_perm_accuracy"];
  for (std::size_t i = 1; i < rows.size(); ++i)
    EXPECT_DOUBLE_EQ(std::stod(fields(rows[i])[6]), init.get<double>());
}

TEST_F(Cli, ResumeContinuesFromCheckpoint) {
  const std::string six = kSmall + " --set train.epochs=6 --set train.milestones=[4]";
  ASSERT_EQ(run("train -c " + kBlobs + six + " --run-dir full").code, 0);
  ASSERT_EQ(run("train -c " + kBlobs + six + " --set output.checkpoint_format=binary --run-dir part").code, 0);
  const Result r = run("train -c " + kBlobs + six + " --resume part/ckpt --run-dir again");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("resumed from epoch 6"), std::string::npos);
  EXPECT_EQ(slurp(dir_ / "full" / "epochs.csv"), slurp(dir_ / "again" / "epochs.csv"));

  const Result bad = run("train -c " + kBlobs + six + " --set train.lr=0.5 --resume part/ckpt");
  EXPECT_EQ(bad.code, 2);
  EXPECT_EQ(run("train -c " + kBlobs + six + " --resume part/nothing").code, 2);
}

TEST_F(Cli, ConfigErrorsExitTwo) {
  const Result missing = run("train -c " + kBlobs +
                             " --set dataset.kind=csv --set dataset.path=/no/such/data.csv");
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("/no/such/data.csv"), std::string::npos);

  const Result unknown = run("train -c " + kBlobs + " --set train.epohcs=3");
  EXPECT_EQ(unknown.code, 2);
  EXPECT_NE(unknown.err.find("unknown key"), std::string::npos);

  EXPECT_EQ(run("train -c /no/such/config.toml").code, 2);
  EXPECT_EQ(run("train").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
}

TEST_F(Cli, SweepGrid) {
  const Result r = run("sweep -c " + kBlobs + kSmall +
                       " --eta-alpha 0,1.5,100 --i-alpha 0.5,0.7,0.9 --run-dir sw");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("best cell"), std::string::npos);
  const auto rows = lines(slurp(dir_ / "sw" / "sweep.csv"));
  ASSERT_EQ(rows.size(), 10u);
  EXPECT_EQ(rows[0], "eta_alpha,I_alpha,perm_accuracy,test_accuracy");
  const std::string frozen = fields(rows[1])[2];
  for (std::size_t i = 1; i <= 3; ++i) {
    EXPECT_EQ(fields(rows[i])[0], "0");
    EXPECT_EQ(fields(rows[i])[2], frozen);
  }
  EXPECT_TRUE(fs::is_regular_file(dir_ / "sw" / "config.resolved"));

  // Every cell invalid (I_alpha below 1/c): the sweep finishes and reports failure.
  const Result bad = run("sweep -c " + kBlobs + kSmall + " --eta-alpha 1 --i-alpha 0.1 --run-dir swbad");
  EXPECT_EQ(bad.code, 1);
  EXPECT_EQ(lines(slurp(dir_ / "swbad" / "sweep.csv")).size(), 2u);
}

TEST_F(Cli, InjectExportsCleanLabels) {
  const fs::path config = dir_ / "in.toml";
  fs::copy_file(kBlobs, config);
  const std::string before = slurp(config);

  ASSERT_EQ(run("inject -c in.toml --set dataset.per_class=100 -o a.csv").code, 0);
  ASSERT_EQ(run("inject -c in.toml --set dataset.per_class=100 -o b.csv").code, 0);
  EXPECT_EQ(slurp(dir_ / "a.csv"), slurp(dir_ / "b.csv"));
  const auto rows = lines(slurp(dir_ / "a.csv"));
  EXPECT_EQ(rows[0], "f1,f2,label,clean_label");
  EXPECT_EQ(rows.size(), 301u);
  std::size_t differ = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) differ += fields(rows[i])[2] != fields(rows[i])[3];
  EXPECT_GT(differ, 50u);

  ASSERT_EQ(run("inject -c in.toml --set dataset.per_class=100 --set noise.rate=0 -o c.csv").code, 0);
  const auto clean_rows = lines(slurp(dir_ / "c.csv"));
  for (std::size_t i = 1; i < clean_rows.size(); ++i) {
    const auto f = fields(clean_rows[i]);
    EXPECT_EQ(f[2], f[3]);
  }
  EXPECT_EQ(slurp(config), before);

  // The exported file trains as an already-noisy csv dataset.
  const std::string csv_before = slurp(dir_ / "a.csv");
  const Result r = run("train -c in.toml --set dataset.kind=csv --set dataset.path=a.csv"
                       " --set noise.kind=none --set train.epochs=2 --set model.hidden=8 --run-dir fromcsv");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir_ / "a.csv"), csv_before);
}

TEST_F(Cli, CheckDefaultTrialsPass) {
  const Result r = run("check --props 2,3,4 --json verdict.json");
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("all checks passed"), std::string::npos);
  const auto j = nlohmann::json::parse(slurp(dir_ / "verdict.json"));
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_EQ(j["checks"].size(), 9u);
  for (const auto& c : j["checks"]) EXPECT_NE(c["verdict"], "fail");
}

TEST_F(Cli, CheckFigure2WritesCsv) {
  const Result r = run("check --props fig2,1 --json - --fig2-csv curves.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_EQ(lines(slurp(dir_ / "curves.csv"))[0], "variant,loss,alpha_id,p1,grad_l1");
}

TEST_F(Cli, CorruptedGradientFails) {
  const Result r = run("check --props 4,fig2 --trials 50 --inject-gradient-fault 1e-3");
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.out.find("CHECK FAILURES"), std::string::npos);
  EXPECT_EQ(run("check --props 7").code, 2);
}

TEST_F(Cli, ExportFigure2) {
  const Result r = run("export-fig2 -o f.csv --alphas 3");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(slurp(dir_ / "f.csv"));
  EXPECT_EQ(rows[0], "variant,loss,alpha_id,p1,grad_l1");
  EXPECT_EQ(rows.size(), 1u + 4u * 3u * 99u);
}

}  // namespace
