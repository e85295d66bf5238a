#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "config.hpp"
#include "experiment.hpp"
#include "permll/errors.hpp"

namespace permll::cli {
namespace {

namespace fs = std::filesystem;

const std::string kBlobs = std::string(PERMLL_SOURCE_DIR) + "/configs/blobs40.toml";

TEST(Toml, ParsesTablesAndValues) {
  const Document d = parse_document(R"(# top comment
title = "x # not a comment"
[train]
epochs = 12   # trailing
lr = 2.5e-2
flag = true
grid = [1, 2.5, -3]
pairs = [[1, 2], [3, 4]]
[noise.extra]
name = "nested"
)");
  EXPECT_EQ(d.at("title").s, "x # not a comment");
  EXPECT_EQ(d.at("train.epochs").kind, Value::Kind::integer);
  EXPECT_EQ(d.at("train.epochs").i, 12);
  EXPECT_EQ(d.at("train.epochs").line, 4u);
  EXPECT_DOUBLE_EQ(d.at("train.lr").d, 0.025);
  EXPECT_TRUE(d.at("train.flag").b);
  ASSERT_EQ(d.at("train.grid").items.size(), 3u);
  EXPECT_DOUBLE_EQ(d.at("train.grid").items[1].as_real(), 2.5);
  EXPECT_EQ(d.at("train.pairs").items[1].items[0].i, 3);
  EXPECT_EQ(d.at("noise.extra.name").s, "nested");
}

TEST(Toml, ErrorsCarryLineNumbers) {
  try {
    parse_document("[train]\nepochs = 3\nlr 0.1\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse_document("[train\n"), ParseError);
  EXPECT_THROW(parse_document("a = 1\na = 2\n"), ParseError);
  EXPECT_THROW(parse_document("a = \"open\n"), ParseError);
  EXPECT_THROW(parse_document("a = [1, 2\n"), ParseError);
  EXPECT_THROW(parse_document("a = 'single'\n"), ParseError);
}

TEST(Overrides, Apply) {
  Document d = parse_document("[train]\neta_alpha = 1.5\n");
  apply_override(d, "train.eta_alpha=0");
  EXPECT_EQ(d.at("train.eta_alpha").as_real(), 0.0);
  apply_override(d, "noise.kind=symmetric");
  EXPECT_EQ(d.at("noise.kind").s, "symmetric");
  apply_override(d, "train.milestones=[5, 9]");
  EXPECT_EQ(d.at("train.milestones").items.size(), 2u);
  EXPECT_THROW(apply_override(d, "train.eta_alpha"), ConfigError);
  EXPECT_THROW(apply_override(d, "epochs=3"), ConfigError);
}

TEST(Resolve, FrozenExperimentConfig) {
  const RunConfig c = load_config(kBlobs, {});
  EXPECT_EQ(c.dataset.kind, DatasetKind::blobs);
  EXPECT_EQ(c.dataset.blobs.classes, 3u);
  EXPECT_EQ(c.dataset.blobs.per_class, 1000u);
  EXPECT_EQ(c.dataset.blobs.dims, 2u);
  EXPECT_EQ(c.dataset.test_per_class, 10000u);
  EXPECT_EQ(c.noise.kind, NoiseKind::symmetric);
  EXPECT_DOUBLE_EQ(c.noise.rate, 0.4);
  EXPECT_DOUBLE_EQ(c.holdout, 0.1);
  EXPECT_EQ(c.train.model.arch, Arch::mlp);
  EXPECT_EQ(c.train.model.hidden, 128u);
  EXPECT_EQ(c.train.epochs, 120u);
  EXPECT_EQ(c.train.milestones, (std::vector<std::size_t>{80, 100}));
  EXPECT_DOUBLE_EQ(c.train.eta_alpha, 1.5);
  EXPECT_DOUBLE_EQ(c.train.i_alpha, 0.35);
  EXPECT_DOUBLE_EQ(c.train.weight_decay, 5e-4);
}

TEST(Resolve, OverridesWin) {
  const RunConfig c = load_config(kBlobs, {"train.eta_alpha=0", "train.variant=plain_ce", "dataset.seed=4"});
  EXPECT_EQ(c.train.eta_alpha, 0.0);
  EXPECT_EQ(c.train.variant, Variant::plain_ce);
  EXPECT_EQ(c.dataset.blobs.seed, 4u);
}

TEST(Resolve, RejectsBadDocuments) {
  const auto bad = [](const std::string& text) { return resolve(parse_document(text)); };
  try {
    bad("[train]\nepohcs = 3\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown key 'train.epohcs'"), std::string::npos);
  }
  EXPECT_THROW(bad("[train]\nepochs = \"many\"\n"), ConfigError);
  EXPECT_THROW(bad("[train]\nepochs = -1\n"), ConfigError);
  EXPECT_THROW(bad("[train]\nvariant = \"alternating\"\n"), ConfigError);
  EXPECT_THROW(bad("[dataset]\nkind = \"csv\"\n"), ConfigError);
  EXPECT_THROW(bad("[noise]\nrate = 1.5\n"), ConfigError);
  EXPECT_THROW(bad("[noise]\nkind = \"asymmetric_map\"\nclass_map = [[0, 1]]\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/x.toml", {}), ConfigError);
}

TEST(Resolve, ClassMapIsOneBased) {
  const RunConfig c =
      resolve(parse_document("[noise]\nkind = \"asymmetric_map\"\nrate = 0.4\nclass_map = [[10, 2], [3, 1]]\n"));
  ASSERT_EQ(c.noise.class_map.size(), 2u);
  EXPECT_EQ(c.noise.class_map[0], (std::pair<ClassIndex, ClassIndex>{9, 1}));
  EXPECT_EQ(c.noise.class_map[1], (std::pair<ClassIndex, ClassIndex>{2, 0}));
}

TEST(Render, RoundTrips) {
  const RunConfig c = load_config(kBlobs, {"train.lr=0.1", "noise.class_map=[[1, 2]]"});
  const std::string text = render(c);
  const RunConfig back = resolve(parse_document(text));
  EXPECT_EQ(render(back), text);
  EXPECT_EQ(back.train.fingerprint(), c.train.fingerprint());
  EXPECT_NE(text.find("rate = 0.4\n"), std::string::npos);
}

TEST(Experiment, BuildsSplitsDeterministically) {
  const RunConfig c = load_config(kBlobs, {"dataset.test_per_class=10"});
  const TrainData a = build_train_data(c);
  const TrainData b = build_train_data(c);
  EXPECT_EQ(a.train.size(), 2700u);
  EXPECT_EQ(a.validation.size(), 300u);
  ASSERT_TRUE(a.test.has_value());
  EXPECT_EQ(a.test->size(), 30u);
  EXPECT_EQ(a.train.features, b.train.features);
  EXPECT_EQ(a.train.noisy_labels, b.train.noisy_labels);

  const RunConfig none = load_config(kBlobs, {"noise.holdout=0", "dataset.test_per_class=10"});
  const TrainData n = build_train_data(none);
  EXPECT_EQ(n.train.size(), 3000u);
  EXPECT_EQ(n.validation.size(), 0u);
}

TEST(Experiment, MissingFileNamesPath) {
  const RunConfig c = resolve(parse_document("[dataset]\nkind = \"csv\"\npath = \"/no/such/file.csv\"\n"));
  try {
    build_train_data(c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("/no/such/file.csv"), std::string::npos);
  }
}

TEST(Experiment, RunDirectoriesAreUnique) {
  const fs::path root = fs::temp_directory_path() / "permll_rundirs";
  fs::remove_all(root);
  OutputConfig out;
  out.dir = root.string();
  const fs::path a = make_run_directory(out, "t");
  const fs::path b = make_run_directory(out, "t");
  EXPECT_NE(a, b);
  EXPECT_TRUE(fs::is_directory(a));
  EXPECT_TRUE(fs::is_directory(b));
  EXPECT_EQ(a.parent_path(), root);
  fs::remove_all(root);
}

}  // namespace
}  // namespace permll::cli
