#include "config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>

#include "permll/errors.hpp"
#include "permll/report.hpp"

namespace permll::cli {
namespace {

bool is_key_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
         c == '-';
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool valid_dotted_key(std::string_view key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') return false;
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (key[i] == '.') {
      if (key[i + 1] == '.') return false;
    } else if (!is_key_char(key[i])) {
      return false;
    }
  }
  return true;
}

class ValueParser {
 public:
  ValueParser(std::string_view text, std::size_t line) : text_(text), line_(line) {}

  Value parse_all() {
    Value v = parse();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing characters '" + std::string(text_.substr(pos_)) + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_); }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  Value parse() {
    skip_ws();
    if (pos_ >= text_.size()) fail("missing value");
    Value v;
    v.line = line_;
    const char c = text_[pos_];
    if (c == '"') {
      v.kind = Value::Kind::string;
      v.s = parse_string();
    } else if (c == '[') {
      v.kind = Value::Kind::array;
      ++pos_;
      skip_ws();
      while (pos_ < text_.size() && text_[pos_] != ']') {
        v.items.push_back(parse());
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') {
          ++pos_;
          skip_ws();
        } else if (pos_ < text_.size() && text_[pos_] != ']') {
          fail("expected ',' or ']' in array");
        }
      }
      if (pos_ >= text_.size()) fail("unterminated array");
      ++pos_;
    } else {
      std::size_t end = pos_;
      while (end < text_.size() && text_[end] != ',' && text_[end] != ']' && text_[end] != ' ' &&
             text_[end] != '\t')
        ++end;
      const std::string_view word = text_.substr(pos_, end - pos_);
      pos_ = end;
      if (word == "true" || word == "false") {
        v.kind = Value::Kind::boolean;
        v.b = word == "true";
      } else {
        parse_number(word, v);
      }
    }
    return v;
  }

  std::string parse_string() {
    std::string out;
    ++pos_;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      char c = text_[pos_++];
      if (c == '\\') {
        if (pos_ >= text_.size()) break;
        const char e = text_[pos_++];
        switch (e) {
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          default: fail(std::string("unknown escape '\\") + e + "'");
        }
      }
      out.push_back(c);
    }
    if (pos_ >= text_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  void parse_number(std::string_view word, Value& v) const {
    if (word.empty()) fail("missing value");
    std::string_view digits = word;
    if (digits.front() == '+') digits.remove_prefix(1);
    const char* first = digits.data();
    const char* last = first + digits.size();
    std::int64_t i = 0;
    if (auto [p, ec] = std::from_chars(first, last, i); ec == std::errc() && p == last) {
      v.kind = Value::Kind::integer;
      v.i = i;
      return;
    }
    double d = 0.0;
    auto [p, ec] = std::from_chars(first, last, d);
    if (ec != std::errc() || p != last || !std::isfinite(d))
      fail("invalid value '" + std::string(word) + "' (strings need double quotes)");
    v.kind = Value::Kind::real;
    v.d = d;
  }

  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

// Strips a trailing comment that is not inside a string.
std::string_view strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && in_string) {
      ++i;
    } else if (line[i] == '"') {
      in_string = !in_string;
    } else if (line[i] == '#' && !in_string) {
      return line.substr(0, i);
    }
  }
  return line;
}

std::string kind_name(Value::Kind k) {
  switch (k) {
    case Value::Kind::boolean: return "boolean";
    case Value::Kind::integer: return "integer";
    case Value::Kind::real: return "real";
    case Value::Kind::string: return "string";
    case Value::Kind::array: return "array";
  }
  return "?";
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    if (c == '\t') {
      out += "\\t";
      continue;
    }
    out.push_back(c);
  }
  return out + "\"";
}

class Resolver {
 public:
  explicit Resolver(const Document& doc) : doc_(doc) {}

  const Value* find(const std::string& key) {
    auto it = doc_.find(key);
    if (it == doc_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }

  [[noreturn]] static void type_error(const std::string& key, const Value& v, const char* want) {
    throw ConfigError(where(key, v) + "expected " + want + ", got " + kind_name(v.kind));
  }

  static std::string where(const std::string& key, const Value& v) {
    return (v.line ? "line " + std::to_string(v.line) + ": " : std::string()) + key + ": ";
  }

  void real(const std::string& key, double& out) {
    if (const Value* v = find(key)) {
      if (v->kind != Value::Kind::real && v->kind != Value::Kind::integer) type_error(key, *v, "a number");
      out = v->as_real();
    }
  }

  std::optional<std::uint64_t> uint_value(const std::string& key) {
    const Value* v = find(key);
    if (!v) return std::nullopt;
    if (v->kind != Value::Kind::integer) type_error(key, *v, "an integer");
    if (v->i < 0) throw ConfigError(where(key, *v) + "must be non-negative");
    return static_cast<std::uint64_t>(v->i);
  }

  template <class T>
  void uint(const std::string& key, T& out) {
    if (auto u = uint_value(key)) out = static_cast<T>(*u);
  }

  void boolean(const std::string& key, bool& out) {
    if (const Value* v = find(key)) {
      if (v->kind != Value::Kind::boolean) type_error(key, *v, "true or false");
      out = v->b;
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const Value* v = find(key)) {
      if (v->kind != Value::Kind::string) type_error(key, *v, "a quoted string");
      out = v->s;
    }
  }

  template <class F>
  void parsed(const std::string& key, F&& parse) {
    if (const Value* v = find(key)) {
      if (v->kind != Value::Kind::string) type_error(key, *v, "a quoted string");
      try {
        parse(v->s);
      } catch (const ConfigError& e) {
        throw ConfigError(where(key, *v) + e.what());
      }
    }
  }

  void uint_list(const std::string& key, std::vector<std::size_t>& out) {
    if (const Value* v = find(key)) {
      if (v->kind != Value::Kind::array) type_error(key, *v, "an array of integers");
      out.clear();
      for (const Value& item : v->items) {
        if (item.kind != Value::Kind::integer || item.i < 0) type_error(key, item, "non-negative integers");
        out.push_back(static_cast<std::size_t>(item.i));
      }
    }
  }

  void class_map(const std::string& key, std::vector<std::pair<ClassIndex, ClassIndex>>& out) {
    if (const Value* v = find(key)) {
      if (v->kind != Value::Kind::array) type_error(key, *v, "an array of [from, to] pairs");
      out.clear();
      for (const Value& pair : v->items) {
        if (pair.kind != Value::Kind::array || pair.items.size() != 2 ||
            pair.items[0].kind != Value::Kind::integer || pair.items[1].kind != Value::Kind::integer)
          throw ConfigError(where(key, *v) + "entries must be [from, to] integer pairs");
        if (pair.items[0].i < 1 || pair.items[1].i < 1)
          throw ConfigError(where(key, *v) + "class indices are 1-based");
        out.emplace_back(static_cast<ClassIndex>(pair.items[0].i - 1),
                         static_cast<ClassIndex>(pair.items[1].i - 1));
      }
    }
  }

  void reject_unknown() const {
    for (const auto& [key, v] : doc_)
      if (!used_.count(key))
        throw ConfigError((v.line ? "line " + std::to_string(v.line) + ": " : std::string()) +
                          "unknown key '" + key + "'");
  }

 private:
  const Document& doc_;
  std::set<std::string> used_;
};

std::string real_text(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  // Keep reals recognisable as reals when read back.
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

}  // namespace

double Value::as_real() const {
  if (kind == Kind::integer) return static_cast<double>(i);
  if (kind == Kind::real) return d;
  throw ConfigError("expected a number");
}

Value parse_value(std::string_view text, std::size_t line) {
  return ValueParser(trim(text), line).parse_all();
}

Document parse_document(std::string_view text) {
  Document doc;
  std::string table;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const std::string_view line = trim(strip_comment(text.substr(start, end - start)));
    start = end + 1;
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("malformed table header", line_no);
      const std::string name(trim(line.substr(1, line.size() - 2)));
      if (!valid_dotted_key(name)) throw ParseError("invalid table name '" + name + "'", line_no);
      table = name;
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    const std::string key(trim(line.substr(0, eq)));
    if (!valid_dotted_key(key)) throw ParseError("invalid key '" + key + "'", line_no);
    const std::string full = table.empty() ? key : table + "." + key;
    if (doc.count(full)) throw ParseError("duplicate key '" + full + "'", line_no);
    doc[full] = parse_value(line.substr(eq + 1), line_no);
  }
  return doc;
}

void apply_override(Document& doc, std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError("override '" + std::string(assignment) + "' must look like key=value");
  const std::string key(trim(assignment.substr(0, eq)));
  if (!valid_dotted_key(key) || key.find('.') == std::string::npos)
    throw ConfigError("override key '" + key + "' must be a dotted table.key");
  const std::string_view raw = trim(assignment.substr(eq + 1));
  Value v;
  try {
    v = parse_value(raw);
  } catch (const ParseError&) {
    v = Value{};
    v.kind = Value::Kind::string;
    v.s = std::string(raw);
  }
  doc[key] = std::move(v);
}

std::string_view to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::blobs: return "blobs";
    case DatasetKind::csv: return "csv";
    case DatasetKind::idx: return "idx";
  }
  return "?";
}

RunConfig resolve(const Document& doc) {
  RunConfig c;
  Resolver r(doc);

  DatasetConfig& d = c.dataset;
  r.parsed("dataset.kind", [&](const std::string& s) {
    if (s == "blobs") d.kind = DatasetKind::blobs;
    else if (s == "csv") d.kind = DatasetKind::csv;
    else if (s == "idx") d.kind = DatasetKind::idx;
    else throw ConfigError("unknown dataset kind '" + s + "' (expected blobs, csv or idx)");
  });
  if (auto classes = r.uint_value("dataset.classes")) {
    if (d.kind == DatasetKind::blobs) d.blobs.classes = *classes;
    else d.classes = *classes;
  }
  r.uint("dataset.per_class", d.blobs.per_class);
  r.uint("dataset.dims", d.blobs.dims);
  r.real("dataset.separation", d.blobs.separation);
  r.real("dataset.stddev", d.blobs.stddev);
  r.uint("dataset.seed", d.blobs.seed);
  if (auto t = r.uint_value("dataset.test_per_class")) d.test_per_class = *t;
  r.string("dataset.path", d.path);
  r.string("dataset.test_path", d.test_path);
  r.string("dataset.images", d.images);
  r.string("dataset.labels", d.labels);
  r.string("dataset.test_images", d.test_images);
  r.string("dataset.test_labels", d.test_labels);
  r.boolean("dataset.flatten", d.flatten);
  {
    bool s = false;
    if (doc.count("dataset.standardize")) {
      r.boolean("dataset.standardize", s);
      d.standardize = s;
    }
  }

  NoiseSpec& n = c.noise;
  r.parsed("noise.kind", [&](const std::string& s) { n.kind = parse_noise_kind(s); });
  r.real("noise.rate", n.rate);
  r.class_map("noise.class_map", n.class_map);
  r.uint("noise.group_size", n.group_size);
  r.boolean("noise.exclude_self", n.exclude_self);
  r.uint("noise.seed", n.seed);
  r.real("noise.holdout", c.holdout);

  TrainConfig& t = c.train;
  r.parsed("model.arch", [&](const std::string& s) { t.model.arch = parse_arch(s); });
  r.uint("model.hidden", t.model.hidden);

  r.parsed("train.variant", [&](const std::string& s) { t.variant = parse_variant(s); });
  r.parsed("train.loss", [&](const std::string& s) { t.loss = parse_loss_kind(s); });
  r.uint("train.epochs", t.epochs);
  r.uint("train.batch_size", t.batch_size);
  r.real("train.lr", t.lr);
  r.uint_list("train.milestones", t.milestones);
  r.real("train.lr_decay", t.lr_decay);
  r.real("train.momentum", t.momentum);
  r.real("train.weight_decay", t.weight_decay);
  r.real("train.eta_alpha", t.eta_alpha);
  r.real("train.i_alpha", t.i_alpha);
  r.uint("train.seed", t.seed);
  r.boolean("train.couple_alpha_schedule", t.couple_alpha_schedule);

  r.string("output.dir", c.output.dir);
  r.parsed("output.checkpoint_format",
           [&](const std::string& s) { c.output.checkpoint_format = parse_checkpoint_format(s); });

  r.reject_unknown();

  if (d.kind == DatasetKind::csv && d.path.empty()) throw ConfigError("dataset.path is required for csv datasets");
  if (d.kind == DatasetKind::idx && (d.images.empty() || d.labels.empty()))
    throw ConfigError("dataset.images and dataset.labels are required for idx datasets");
  if (!(c.holdout >= 0.0 && c.holdout < 1.0)) throw ConfigError("noise.holdout must lie in [0, 1)");
  if (!(n.rate >= 0.0 && n.rate <= 1.0)) throw ConfigError("noise.rate must lie in [0, 1]");
  return c;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  Document doc;
  if (!path.empty()) {
    std::string text;
    try {
      text = read_text_file(path);
    } catch (const ParseError&) {
      throw ConfigError("cannot read config file " + path);
    }
    try {
      doc = parse_document(text);
    } catch (const ParseError& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return resolve(doc);
}

std::string render(const RunConfig& c) {
  std::ostringstream out;
  const DatasetConfig& d = c.dataset;
  out << "[dataset]\n";
  out << "kind = " << quote(std::string(to_string(d.kind))) << '\n';
  if (d.kind == DatasetKind::blobs) {
    out << "classes = " << d.blobs.classes << '\n';
    out << "per_class = " << d.blobs.per_class << '\n';
    out << "dims = " << d.blobs.dims << '\n';
    out << "separation = " << real_text(d.blobs.separation) << '\n';
    out << "stddev = " << real_text(d.blobs.stddev) << '\n';
    out << "seed = " << d.blobs.seed << '\n';
    if (d.test_per_class) out << "test_per_class = " << *d.test_per_class << '\n';
  } else {
    if (d.classes) out << "classes = " << *d.classes << '\n';
    if (d.kind == DatasetKind::csv) {
      out << "path = " << quote(d.path) << '\n';
      if (!d.test_path.empty()) out << "test_path = " << quote(d.test_path) << '\n';
    } else {
      out << "images = " << quote(d.images) << '\n';
      out << "labels = " << quote(d.labels) << '\n';
      if (!d.test_images.empty()) out << "test_images = " << quote(d.test_images) << '\n';
      if (!d.test_labels.empty()) out << "test_labels = " << quote(d.test_labels) << '\n';
      out << "flatten = " << (d.flatten ? "true" : "false") << '\n';
    }
  }
  if (d.standardize) out << "standardize = " << (*d.standardize ? "true" : "false") << '\n';

  const NoiseSpec& n = c.noise;
  out << "\n[noise]\n";
  out << "kind = " << quote(std::string(to_string(n.kind))) << '\n';
  out << "rate = " << real_text(n.rate) << '\n';
  if (!n.class_map.empty()) {
    out << "class_map = [";
    for (std::size_t k = 0; k < n.class_map.size(); ++k)
      out << (k ? ", " : "") << '[' << n.class_map[k].first + 1 << ", " << n.class_map[k].second + 1 << ']';
    out << "]\n";
  }
  if (n.group_size) out << "group_size = " << n.group_size << '\n';
  out << "exclude_self = " << (n.exclude_self ? "true" : "false") << '\n';
  out << "seed = " << n.seed << '\n';
  out << "holdout = " << real_text(c.holdout) << '\n';

  const TrainConfig& t = c.train;
  out << "\n[model]\n";
  out << "arch = " << quote(std::string(to_string(t.model.arch))) << '\n';
  out << "hidden = " << t.model.hidden << '\n';

  out << "\n[train]\n";
  out << "variant = " << quote(std::string(to_string(t.variant))) << '\n';
  out << "loss = " << quote(std::string(to_string(t.loss))) << '\n';
  out << "epochs = " << t.epochs << '\n';
  out << "batch_size = " << t.batch_size << '\n';
  out << "lr = " << real_text(t.lr) << '\n';
  out << "milestones = [";
  for (std::size_t k = 0; k < t.milestones.size(); ++k) out << (k ? ", " : "") << t.milestones[k];
  out << "]\n";
  out << "lr_decay = " << real_text(t.lr_decay) << '\n';
  out << "momentum = " << real_text(t.momentum) << '\n';
  out << "weight_decay = " << real_text(t.weight_decay) << '\n';
  out << "eta_alpha = " << real_text(t.eta_alpha) << '\n';
  out << "i_alpha = " << real_text(t.i_alpha) << '\n';
  out << "seed = " << t.seed << '\n';
  out << "couple_alpha_schedule = " << (t.couple_alpha_schedule ? "true" : "false") << '\n';

  out << "\n[output]\n";
  out << "dir = " << quote(c.output.dir) << '\n';
  out << "checkpoint_format = "
      << quote(c.output.checkpoint_format == CheckpointFormat::json ? "json" : "binary") << '\n';
  return out.str();
}

}  // namespace permll::cli
