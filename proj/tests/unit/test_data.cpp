#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include "permll/data.hpp"
#include "permll/errors.hpp"
#include "permll/model.hpp"
#include "permll/trainer.hpp"

namespace permll {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("permll_data_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path file(const std::string& name, const std::string& body) const {
    std::ofstream(dir_ / name, std::ios::binary) << body;
    return dir_ / name;
  }
  fs::path dir_;
};

void put_be32(std::string& s, std::uint32_t v) {
  for (int k = 3; k >= 0; --k) s.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

std::string idx_images(std::uint32_t n, std::uint32_t rows, std::uint32_t cols, std::size_t pixels) {
  std::string s;
  put_be32(s, 0x00000803);
  put_be32(s, n);
  put_be32(s, rows);
  put_be32(s, cols);
  for (std::size_t i = 0; i < pixels; ++i) s.push_back(static_cast<char>(i % 256));
  return s;
}

std::string idx_labels(std::uint32_t n, std::size_t count) {
  std::string s;
  put_be32(s, 0x00000801);
  put_be32(s, n);
  for (std::size_t i = 0; i < count; ++i) s.push_back(static_cast<char>(i % 10));
  return s;
}

TEST(Blobs, SizeAndDeterminism) {
  BlobSpec spec;
  spec.classes = 3;
  spec.per_class = 1000;
  const Dataset a = make_blobs(spec);
  EXPECT_EQ(a.size(), 3000u);
  EXPECT_EQ(a.dims(), 2u);
  EXPECT_EQ(a.classes, 3u);
  const Dataset b = make_blobs(spec);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(a.labels[i], i % 3);
}

TEST(Blobs, CentersOnSphere) {
  for (std::size_t dims : {1u, 2u, 3u, 5u}) {
    BlobSpec spec;
    spec.classes = 3;
    spec.dims = dims;
    spec.separation = 2.5;
    const Matrix c = blob_centers(spec);
    ASSERT_EQ(c.rows(), 3u);
    ASSERT_EQ(c.cols(), dims);
    for (std::size_t k = 0; k < 3; ++k) {
      double r = 0.0;
      for (double v : c.row(k)) r += v * v;
      if (dims > 1) EXPECT_NEAR(std::sqrt(r), 2.5, 1e-12);
      else EXPECT_LE(std::sqrt(r), 2.5 + 1e-12);
    }
  }
}

TEST(Blobs, LinearModelSeparatesWellSeparatedClusters) {
  BlobSpec spec;
  spec.separation = 3.0;
  const Dataset pool = make_blobs(spec);
  spec.seed = 1;
  spec.per_class = 3000;
  const Dataset test = make_blobs(spec);

  TrainData data;
  data.train = NoisyDataset{pool.features, pool.labels, pool.labels,
                            std::vector<bool>(pool.size(), false), 3, true, "blobs"};
  data.test = test;
  TrainConfig cfg;
  cfg.variant = Variant::plain_ce;
  cfg.model = ModelSpec{Arch::linear};
  cfg.epochs = 30;
  cfg.milestones = {20};
  const RunReport r = train(cfg, data);
  ASSERT_TRUE(r.ok());
  EXPECT_GE(*r.final_epoch()->test_accuracy, 99.0);
}

TEST(Blobs, RejectsBadSpec) {
  BlobSpec spec;
  spec.classes = 1;
  EXPECT_THROW(make_blobs(spec), ConfigError);
  spec.classes = 3;
  spec.stddev = 0.0;
  EXPECT_THROW(make_blobs(spec), ConfigError);
}

TEST_F(TempDir, CsvReadsSmallFile) {
  const auto p = file("a.csv", "f1,f2,label\n0.5,1,1\n-2,3.25,2\n7,8,1\n");
  const Dataset d = read_csv_dataset(p);
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d.dims(), 2u);
  EXPECT_EQ(d.classes, 2u);
  EXPECT_EQ(d.labels, (std::vector<ClassIndex>{0, 1, 0}));
  EXPECT_EQ(d.features(1, 1), 3.25);
}

TEST_F(TempDir, CsvLabelOutOfRangeNamesRow) {
  const auto p = file("b.csv", "f1,f2,label\n0,0,1\n0,0,4\n");
  try {
    read_csv_dataset(p, 3);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST_F(TempDir, CsvRejectsNonFiniteAndBadHeader) {
  EXPECT_THROW(read_csv_dataset(file("c.csv", "f1,label\nnan,1\n")), ParseError);
  EXPECT_THROW(read_csv_dataset(file("d.csv", "f1,label\ninf,1\n")), ParseError);
  EXPECT_THROW(read_csv_dataset(file("e.csv", "x,label\n1,1\n")), ParseError);
  EXPECT_THROW(read_csv_dataset(file("f.csv", "f1,label\n1,1,3\n")), ParseError);
  EXPECT_THROW(read_csv_dataset(file("g.csv", "f1,label\n1,0\n")), ParseError);
}

TEST_F(TempDir, CsvRoundTripIsExact) {
  BlobSpec spec;
  spec.per_class = 50;
  spec.dims = 4;
  const Dataset d = make_blobs(spec);
  std::vector<ClassIndex> clean = d.labels;
  std::rotate(clean.begin(), clean.begin() + 1, clean.end());
  write_csv_dataset(dir_ / "rt.csv", d, &clean);
  const CsvTable back = read_csv_table(dir_ / "rt.csv", 3);
  EXPECT_EQ(back.data.features, d.features);
  EXPECT_EQ(back.data.labels, d.labels);
  ASSERT_TRUE(back.clean_labels.has_value());
  EXPECT_EQ(*back.clean_labels, clean);
}

TEST_F(TempDir, IdxReadsImages) {
  const auto img = file("img", idx_images(10, 28, 28, 10 * 784));
  const auto lab = file("lab", idx_labels(10, 10));
  const Dataset d = read_idx_pair(img, lab);
  EXPECT_EQ(d.size(), 10u);
  EXPECT_EQ(d.dims(), 784u);
  EXPECT_EQ(d.features(0, 255), 1.0);
  EXPECT_EQ(d.features(0, 0), 0.0);
  EXPECT_EQ(d.labels[3], 3u);
  EXPECT_EQ(d.sample_shape, (std::vector<std::size_t>{784}));
  EXPECT_EQ(read_idx_pair(img, lab, false).sample_shape, (std::vector<std::size_t>{28, 28}));
}

TEST_F(TempDir, IdxTruncatedIsLengthMismatch) {
  const auto img = file("img", idx_images(10, 28, 28, 9 * 784));
  const auto lab = file("lab", idx_labels(10, 10));
  try {
    read_idx_pair(img, lab);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("length mismatch"), std::string::npos);
  }
  EXPECT_THROW(read_idx_pair(file("img2", idx_images(10, 2, 2, 40)), file("lab2", idx_labels(9, 9))),
               ParseError);
  EXPECT_THROW(read_idx_pair(lab, img), ParseError);
}

TEST(Standardizer, FitsTrainingSplit) {
  Dataset d;
  d.features = Matrix(4, 2);
  const double v[4][2] = {{1, 5}, {3, 5}, {5, 5}, {7, 5}};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 2; ++j) d.features(i, j) = v[i][j];
  d.labels = {0, 1, 0, 1};
  d.classes = 2;
  const Standardizer s = Standardizer::fit(d);
  s.apply(d);
  double mean = 0.0, var = 0.0;
  for (std::size_t i = 0; i < 4; ++i) mean += d.features(i, 0) / 4.0;
  for (std::size_t i = 0; i < 4; ++i) var += d.features(i, 0) * d.features(i, 0) / 4.0;
  EXPECT_NEAR(mean, 0.0, 1e-15);
  EXPECT_NEAR(var, 1.0, 1e-12);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(d.features(i, 1), 0.0);
}

TEST(Dataset, ValidateAndSubset) {
  BlobSpec spec;
  spec.per_class = 4;
  Dataset d = make_blobs(spec);
  d.validate();
  const std::vector<std::size_t> idx{0, 5};
  const Dataset s = d.subset(idx);
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(s.labels[1], d.labels[5]);
  d.labels[0] = 7;
  EXPECT_THROW(d.validate(), DomainError);
}

}  // namespace
}  // namespace permll
