#include "permll/data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "permll/errors.hpp"
#include "permll/rng.hpp"

namespace permll {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& text, std::size_t line) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ParseError("bad number '" + text + "'", line);
  if (!std::isfinite(value)) throw ParseError("non-finite feature '" + text + "'", line);
  return value;
}

long long parse_int(const std::string& text, std::size_t line) {
  long long value = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ParseError("bad label '" + text + "'", line);
  return value;
}

std::uint32_t read_be32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError(what + ": truncated header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

std::ifstream open_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

}  // namespace

void Dataset::validate() const {
  if (labels.empty()) throw DomainError("dataset '" + name + "': no samples");
  if (features.rows() != labels.size())
    throw DomainError("dataset '" + name + "': feature/label count mismatch");
  if (classes < 2) throw DomainError("dataset '" + name + "': need at least 2 classes");
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= classes)
      throw DomainError("dataset '" + name + "': label out of range at sample " +
                        std::to_string(i + 1));
  if (!all_finite(features.flat()))
    throw DomainError("dataset '" + name + "': non-finite feature");
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features = Matrix(indices.size(), dims());
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = features.row(indices[r]);
    std::copy(src.begin(), src.end(), out.features.row(r).begin());
    out.labels.push_back(labels[indices[r]]);
  }
  out.classes = classes;
  out.name = name;
  out.sample_shape = sample_shape;
  return out;
}

Matrix blob_centers(const BlobSpec& spec) {
  const std::size_t c = spec.classes;
  const std::size_t m = spec.dims;
  Matrix centers(c, m);
  if (m >= c) {
    for (std::size_t k = 0; k < c; ++k) centers(k, k) = spec.separation;
  } else if (m == 1) {
    for (std::size_t k = 0; k < c; ++k)
      centers(k, 0) = spec.separation * (-1.0 + 2.0 * static_cast<double>(k) /
                                                    static_cast<double>(c - 1));
  } else {
    for (std::size_t k = 0; k < c; ++k) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(c);
      centers(k, 0) = spec.separation * std::cos(angle);
      centers(k, 1) = spec.separation * std::sin(angle);
    }
  }
  return centers;
}

Dataset make_blobs(const BlobSpec& spec) {
  if (spec.classes < 2) throw ConfigError("blobs: need at least 2 classes");
  if (spec.per_class == 0 || spec.dims == 0) throw ConfigError("blobs: empty spec");
  if (!(spec.separation > 0.0) || !(spec.stddev > 0.0))
    throw ConfigError("blobs: separation and stddev must be positive");
  const Matrix centers = blob_centers(spec);
  Rng rng(spec.seed);
  Dataset data;
  data.classes = spec.classes;
  data.name = "blobs";
  data.features = Matrix(spec.classes * spec.per_class, spec.dims);
  data.labels.reserve(spec.classes * spec.per_class);
  std::size_t r = 0;
  for (std::size_t i = 0; i < spec.per_class; ++i)
    for (std::size_t k = 0; k < spec.classes; ++k, ++r) {
      auto row = data.features.row(r);
      for (std::size_t d = 0; d < spec.dims; ++d) row[d] = rng.normal(centers(k, d), spec.stddev);
      data.labels.push_back(k);
    }
  return data;
}

CsvTable read_csv_table(const std::filesystem::path& path, std::optional<std::size_t> classes) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file " + path.string(), 1);
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

  const bool has_clean = !header.empty() && header.back() == "clean_label";
  const std::size_t label_col = header.size() - (has_clean ? 2 : 1);
  if (header.size() < (has_clean ? 3u : 2u) || header[label_col] != "label")
    throw ParseError("header must be f1,...,fm,label[,clean_label]", 1);
  const std::size_t m = label_col;
  for (std::size_t j = 0; j < m; ++j)
    if (header[j] != "f" + std::to_string(j + 1))
      throw ParseError("expected column 'f" + std::to_string(j + 1) + "', found '" + header[j] + "'",
                       1);

  std::vector<double> values;
  std::vector<long long> labels;
  std::vector<long long> clean;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " columns, found " +
                           std::to_string(cells.size()),
                       line_no);
    for (std::size_t j = 0; j < m; ++j) values.push_back(parse_double(trim(cells[j]), line_no));
    const long long y = parse_int(trim(cells[label_col]), line_no);
    const long long yc = has_clean ? parse_int(trim(cells[label_col + 1]), line_no) : y;
    for (long long v : {y, yc}) {
      if (v < 1 || (classes && v > static_cast<long long>(*classes)))
        throw ParseError("label " + std::to_string(v) + " out of range" +
                             (classes ? " [1, " + std::to_string(*classes) + "]" : ""),
                         line_no);
    }
    labels.push_back(y);
    clean.push_back(yc);
  }
  if (labels.empty()) throw ParseError("no data rows in " + path.string());

  CsvTable table;
  Dataset& data = table.data;
  data.name = path.stem().string();
  data.features = Matrix(labels.size(), m);
  std::copy(values.begin(), values.end(), data.features.flat().begin());
  long long max_label = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    data.labels.push_back(static_cast<ClassIndex>(labels[i] - 1));
    max_label = std::max({max_label, labels[i], clean[i]});
  }
  data.classes = classes ? *classes : static_cast<std::size_t>(std::max(2LL, max_label));
  if (has_clean) {
    std::vector<ClassIndex> c0;
    c0.reserve(clean.size());
    for (long long v : clean) c0.push_back(static_cast<ClassIndex>(v - 1));
    table.clean_labels = std::move(c0);
  }
  data.validate();
  return table;
}

Dataset read_csv_dataset(const std::filesystem::path& path, std::optional<std::size_t> classes) {
  return read_csv_table(path, classes).data;
}

void write_csv_dataset(const std::filesystem::path& path, const Dataset& data,
                       const std::vector<ClassIndex>* clean_labels) {
  if (clean_labels && clean_labels->size() != data.size())
    throw DomainError("write_csv_dataset: clean label count mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  for (std::size_t j = 0; j < data.dims(); ++j) out << 'f' << (j + 1) << ',';
  out << "label" << (clean_labels ? ",clean_label" : "") << '\n';
  char buf[32];
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.features.row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ',';
    }
    out << (data.labels[i] + 1);
    if (clean_labels) out << ',' << ((*clean_labels)[i] + 1);
    out << '\n';
  }
  if (!out) throw ParseError("write failed for " + path.string());
}

Dataset read_idx_pair(const std::filesystem::path& images, const std::filesystem::path& labels,
                      bool flatten, std::optional<std::size_t> classes) {
  std::ifstream img = open_binary(images);
  std::ifstream lab = open_binary(labels);
  const std::string img_name = images.string();
  const std::string lab_name = labels.string();

  if (read_be32(img, img_name) != 0x00000803u)
    throw ParseError(img_name + ": bad magic (expected 0x00000803 for images)");
  if (read_be32(lab, lab_name) != 0x00000801u)
    throw ParseError(lab_name + ": bad magic (expected 0x00000801 for labels)");
  const std::uint32_t n_img = read_be32(img, img_name);
  const std::uint32_t rows = read_be32(img, img_name);
  const std::uint32_t cols = read_be32(img, img_name);
  const std::uint32_t n_lab = read_be32(lab, lab_name);
  if (n_img != n_lab)
    throw ParseError("length mismatch: " + std::to_string(n_img) + " images vs " +
                     std::to_string(n_lab) + " labels");
  if (n_img == 0) throw ParseError(img_name + ": no images");

  const std::size_t m = std::size_t{rows} * cols;
  std::vector<unsigned char> pixels(std::size_t{n_img} * m);
  if (!img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size())))
    throw ParseError(img_name + ": length mismatch, file holds fewer than " +
                     std::to_string(n_img) + " images");
  std::vector<unsigned char> ys(n_lab);
  if (!lab.read(reinterpret_cast<char*>(ys.data()), static_cast<std::streamsize>(ys.size())))
    throw ParseError(lab_name + ": length mismatch, file holds fewer than " +
                     std::to_string(n_lab) + " labels");

  Dataset data;
  data.name = images.stem().string();
  data.features = Matrix(n_img, m);
  auto flat = data.features.flat();
  for (std::size_t i = 0; i < pixels.size(); ++i) flat[i] = static_cast<double>(pixels[i]) / 255.0;
  unsigned max_label = 0;
  for (unsigned char y : ys) {
    data.labels.push_back(y);
    max_label = std::max<unsigned>(max_label, y);
  }
  data.classes = classes ? *classes : std::max<std::size_t>(2, max_label + 1);
  data.sample_shape = flatten ? std::vector<std::size_t>{m} : std::vector<std::size_t>{rows, cols};
  data.validate();
  return data;
}

Standardizer Standardizer::fit(const Dataset& data) {
  const std::size_t m = data.dims();
  const double n = static_cast<double>(data.size());
  Standardizer s{Vec(m, 0.0), Vec(m, 1.0)};
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t j = 0; j < m; ++j) s.mean[j] += data.features(i, j);
  for (double& v : s.mean) v /= n;
  Vec var(m, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double d = data.features(i, j) - s.mean[j];
      var[j] += d * d;
    }
  for (std::size_t j = 0; j < m; ++j) {
    const double sd = std::sqrt(var[j] / n);
    s.scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

void Standardizer::apply(Dataset& data) const {
  if (mean.size() != data.dims()) throw DomainError("Standardizer: dimension mismatch");
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto row = data.features.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - mean[j]) / scale[j];
  }
}

}  // namespace permll
