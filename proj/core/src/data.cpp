#include "motifset/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <zlib.h>

#include "motifset/binary_io.hpp"
#include "motifset/errors.hpp"
#include "motifset/random.hpp"

namespace motifset {

// ---------------------------------------------------------------------------
// IDX

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

class GzReader {
 public:
  explicit GzReader(const std::filesystem::path& path) : path_(path.string()) {
    file_ = gzopen(path_.c_str(), "rb");
    if (file_ == nullptr) throw FileError("cannot open " + path_);
    gzbuffer(file_, 1U << 18);
  }
  ~GzReader() { gzclose(file_); }
  GzReader(const GzReader&) = delete;
  GzReader& operator=(const GzReader&) = delete;

  void read(void* dst, std::size_t n) {
    auto* p = static_cast<char*>(dst);
    while (n > 0) {
      const auto chunk = static_cast<unsigned>(std::min<std::size_t>(n, 1U << 30));
      const int got = gzread(file_, p, chunk);
      if (got <= 0) throw TruncatedFileError(path_ + " ends early");
      p += got;
      n -= static_cast<std::size_t>(got);
    }
  }

  std::uint32_t read_be32() {
    unsigned char b[4];
    read(b, 4);
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  gzFile file_ = nullptr;
};

void expect_magic(GzReader& in, std::uint32_t expected) {
  const std::uint32_t magic = in.read_be32();
  if (magic != expected) {
    std::ostringstream os;
    os << in.path() << ": magic 0x" << std::hex << magic << ", expected 0x" << expected;
    throw MagicNumberError(os.str());
  }
}

}  // namespace

IdxSamples load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  IdxSamples out;

  GzReader images(images_path);
  expect_magic(images, kIdxImageMagic);
  const std::size_t n_images = images.read_be32();
  out.image_rows = images.read_be32();
  out.image_cols = images.read_be32();

  GzReader labels(labels_path);
  expect_magic(labels, kIdxLabelMagic);
  const std::size_t n_labels = labels.read_be32();
  if (n_images != n_labels) {
    throw CountMismatchError(std::to_string(n_images) + " images but " + std::to_string(n_labels) + " labels");
  }

  out.images = Matrix<std::uint8_t>(n_images, out.image_rows * out.image_cols);
  if (!out.images.empty()) images.read(out.images.data(), out.images.size());
  out.labels.resize(n_labels);
  if (n_labels > 0) labels.read(out.labels.data(), n_labels);
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_number(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

CsvSamples load_labeled_csv(const std::filesystem::path& path, int label_column) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open " + path.string());

  std::vector<std::vector<std::string_view>> rows;
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (trim(line).empty()) continue;
    lines.push_back(std::move(line));
  }
  if (lines.empty()) throw EmptyFileError(path.string() + " has no rows");
  rows.reserve(lines.size());
  for (const auto& l : lines) rows.push_back(split_commas(l));

  const std::size_t width = rows.front().size();
  if (width < 2) throw RaggedRowError(path.string() + ": need at least one feature and a label column");
  const int resolved = label_column < 0 ? static_cast<int>(width) + label_column : label_column;
  if (resolved < 0 || resolved >= static_cast<int>(width)) {
    throw ConfigError("label column " + std::to_string(label_column) + " out of range for width " +
                      std::to_string(width));
  }
  const auto label_idx = static_cast<std::size_t>(resolved);

  // header row: any non-numeric feature cell in the first line
  std::size_t first = 0;
  {
    double tmp = 0.0;
    for (std::size_t c = 0; c < width; ++c) {
      if (c != label_idx && !parse_number(rows[0][c], tmp)) {
        first = 1;
        break;
      }
    }
  }
  const std::size_t n = rows.size() - first;
  if (n == 0) throw EmptyFileError(path.string() + " has a header but no data rows");

  CsvSamples out;
  out.features = Matrix<double>(n, width - 1);
  std::vector<std::string_view> raw_labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& cells = rows[first + i];
    if (cells.size() != width) {
      throw RaggedRowError(path.string() + ": line " + std::to_string(first + i + 1) + " has " +
                           std::to_string(cells.size()) + " fields, expected " + std::to_string(width));
    }
    std::size_t f = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (c == label_idx) {
        raw_labels[i] = cells[c];
        continue;
      }
      if (!parse_number(cells[c], out.features(i, f))) {
        throw NonNumericError(path.string() + ": line " + std::to_string(first + i + 1) + " column " +
                              std::to_string(c + 1) + " is '" + std::string(cells[c]) + "'");
      }
      ++f;
    }
  }

  std::vector<std::string> distinct(raw_labels.begin(), raw_labels.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::map<std::string, double> numeric;
  bool all_numeric = true;
  for (const auto& d : distinct) {
    double v = 0.0;
    if (!parse_number(d, v)) {
      all_numeric = false;
      break;
    }
    numeric[d] = v;
  }
  if (all_numeric) {
    std::stable_sort(distinct.begin(), distinct.end(),
                     [&](const std::string& a, const std::string& b) { return numeric[a] < numeric[b]; });
  }
  std::map<std::string, std::size_t, std::less<>> ids;
  for (std::size_t i = 0; i < distinct.size(); ++i) ids.emplace(distinct[i], i);
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.labels[i] = ids.find(raw_labels[i])->second;
  out.class_names = std::move(distinct);
  return out;
}

// ---------------------------------------------------------------------------
// preprocessing

Matrix<double> normalize_01(const Matrix<std::uint8_t>& x) {
  Matrix<double> out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = static_cast<double>(x.data()[i]) / 255.0;
  return out;
}

ScalerParams fit_scaler(const Matrix<double>& train) {
  if (train.rows() == 0) throw DataError("cannot fit a scaler on an empty matrix");
  const std::size_t n = train.rows();
  const std::size_t d = train.cols();
  ScalerParams p;
  p.mean.assign(d, 0.0);
  p.stddev.assign(d, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t c = 0; c < d; ++c) p.mean[c] += train(s, c);
  }
  for (auto& m : p.mean) m /= static_cast<double>(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t c = 0; c < d; ++c) {
      const double dev = train(s, c) - p.mean[c];
      p.stddev[c] += dev * dev;
    }
  }
  for (auto& v : p.stddev) v = std::max(std::sqrt(v / static_cast<double>(n)), 1e-8);
  return p;
}

Matrix<double> apply_scaler(const Matrix<double>& x, const ScalerParams& params) {
  if (x.cols() != params.mean.size()) throw ShapeError("scaler fitted on a different feature count");
  Matrix<double> out(x.rows(), x.cols());
  for (std::size_t s = 0; s < x.rows(); ++s) {
    for (std::size_t c = 0; c < x.cols(); ++c) out(s, c) = (x(s, c) - params.mean[c]) / params.stddev[c];
  }
  return out;
}

Standardized standardize(const Matrix<double>& train, const Matrix<double>& test) {
  Standardized out;
  out.params = fit_scaler(train);
  out.train = apply_scaler(train, out.params);
  out.test = apply_scaler(test, out.params);
  return out;
}

Matrix<double> one_hot(std::span<const std::size_t> labels, std::size_t n_classes) {
  Matrix<double> out(labels.size(), n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= n_classes) {
      throw OutOfRangeError("label " + std::to_string(labels[i]) + " not below " + std::to_string(n_classes));
    }
    out(i, labels[i]) = 1.0;
  }
  return out;
}

SplitIndices split_indices(std::size_t n, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * test_fraction));
  if (n_test == 0 || n_test >= n) {
    throw TooFewSamplesError(std::to_string(n) + " samples cannot be split with test fraction " +
                             std::to_string(test_fraction));
  }
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_index(i + 1)]);
  SplitIndices out;
  out.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  out.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  return out;
}

SplitDataset split(const Matrix<double>& x, const Matrix<double>& y, double test_fraction, std::uint64_t seed) {
  if (x.rows() != y.rows()) throw ShapeError("feature and label row counts differ");
  SplitDataset out;
  out.indices = split_indices(x.rows(), test_fraction, seed);
  out.data.x_train = x.gather_rows(out.indices.train);
  out.data.y_train = y.gather_rows(out.indices.train);
  out.data.x_test = x.gather_rows(out.indices.test);
  out.data.y_test = y.gather_rows(out.indices.test);
  out.data.n_features = x.cols();
  out.data.n_classes = y.cols();
  return out;
}

void Dataset::validate() const {
  if (n_classes < 2) throw DataError("a dataset needs at least 2 classes");
  if (x_train.cols() != n_features || x_test.cols() != n_features) throw DataError("feature count mismatch");
  if (y_train.cols() != n_classes || y_test.cols() != n_classes) throw DataError("class count mismatch");
  if (x_train.rows() != y_train.rows() || x_test.rows() != y_test.rows()) throw DataError("row count mismatch");
  for (const Matrix<double>* y : {&y_train, &y_test}) {
    for (std::size_t s = 0; s < y->rows(); ++s) {
      std::size_t ones = 0;
      for (const double v : y->row(s)) {
        if (v == 1.0) {
          ++ones;
        } else if (v != 0.0) {
          throw DataError("label row " + std::to_string(s) + " is not one-hot");
        }
      }
      if (ones != 1) throw DataError("label row " + std::to_string(s) + " is not one-hot");
    }
  }
}

IdxDatasetPaths IdxDatasetPaths::in_directory(const std::filesystem::path& dir) {
  auto pick = [&](const std::string& stem) {
    const auto gz = dir / (stem + ".gz");
    return std::filesystem::exists(gz) ? gz : dir / stem;
  };
  return {pick("train-images-idx3-ubyte"), pick("train-labels-idx1-ubyte"), pick("t10k-images-idx3-ubyte"),
          pick("t10k-labels-idx1-ubyte")};
}

namespace {

Matrix<double> head_rows(const Matrix<double>& x, std::size_t limit) {
  if (limit == 0 || limit >= x.rows()) return x;
  std::vector<std::size_t> idx(limit);
  for (std::size_t i = 0; i < limit; ++i) idx[i] = i;
  return x.gather_rows(idx);
}

void finish_preprocessing(Dataset& d, const PreprocessOptions& options) {
  if (options.standardize) {
    Standardized s = standardize(d.x_train, d.x_test);
    d.x_train = std::move(s.train);
    d.x_test = std::move(s.test);
    d.preprocessing.steps.push_back("standardize");
    d.preprocessing.scaler = std::move(s.params);
  }
  d.validate();
}

std::size_t class_count(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  std::uint8_t mx = 0;
  for (const auto v : a) mx = std::max(mx, v);
  for (const auto v : b) mx = std::max(mx, v);
  return std::size_t{mx} + 1;
}

}  // namespace

Dataset make_idx_dataset(const IdxDatasetPaths& paths, const PreprocessOptions& options) {
  const IdxSamples train = load_idx(paths.train_images, paths.train_labels);
  const IdxSamples test = load_idx(paths.test_images, paths.test_labels);
  if (train.images.cols() != test.images.cols()) throw DataError("train and test images differ in size");

  Dataset d;
  d.n_features = train.images.cols();
  d.n_classes = class_count(train.labels, test.labels);
  auto labels_of = [](const IdxSamples& s, std::size_t limit) {
    const std::size_t n = limit == 0 ? s.labels.size() : std::min(limit, s.labels.size());
    return std::vector<std::size_t>(s.labels.begin(), s.labels.begin() + static_cast<std::ptrdiff_t>(n));
  };
  d.x_train = head_rows(normalize_01(train.images), options.train_limit);
  d.x_test = head_rows(normalize_01(test.images), options.test_limit);
  d.y_train = one_hot(labels_of(train, options.train_limit), d.n_classes);
  d.y_test = one_hot(labels_of(test, options.test_limit), d.n_classes);
  d.preprocessing.steps.push_back("normalize_01");
  finish_preprocessing(d, options);
  return d;
}

Dataset make_csv_dataset(const std::filesystem::path& path, int label_column, double test_fraction,
                         std::uint64_t split_seed, const PreprocessOptions& options) {
  const CsvSamples raw = load_labeled_csv(path, label_column);
  if (raw.class_names.size() < 2) throw DataError(path.string() + " has fewer than 2 classes");
  const Matrix<double> y = one_hot(raw.labels, raw.class_names.size());
  Dataset d = split(raw.features, y, test_fraction, split_seed).data;
  d.x_train = head_rows(d.x_train, options.train_limit);
  d.y_train = head_rows(d.y_train, options.train_limit);
  d.x_test = head_rows(d.x_test, options.test_limit);
  d.y_test = head_rows(d.y_test, options.test_limit);
  finish_preprocessing(d, options);
  return d;
}

// ---------------------------------------------------------------------------
// cache container

namespace {

constexpr char kCacheMagic[8] = {'M', 'S', 'E', 'T', 'D', 'A', 'T', 'A'};
constexpr std::uint32_t kCacheVersion = 1;

void write_matrix(std::ostream& os, const Matrix<double>& m) {
  binary::write_u64(os, m.rows());
  binary::write_u64(os, m.cols());
  binary::write_f64s(os, m.values());
}

Matrix<double> read_matrix(std::istream& is) {
  const std::uint64_t rows = binary::read_u64(is);
  const std::uint64_t cols = binary::read_u64(is);
  return Matrix<double>(rows, cols, binary::read_f64s(is, rows * cols));
}

}  // namespace

void save_dataset_cache(const std::filesystem::path& path, const Dataset& dataset) {
  std::ostringstream payload;
  binary::write_u64(payload, dataset.n_features);
  binary::write_u64(payload, dataset.n_classes);
  binary::write_u64(payload, dataset.preprocessing.steps.size());
  for (const auto& s : dataset.preprocessing.steps) binary::write_string(payload, s);
  binary::write_u64(payload, dataset.preprocessing.scaler.mean.size());
  binary::write_f64s(payload, dataset.preprocessing.scaler.mean);
  binary::write_f64s(payload, dataset.preprocessing.scaler.stddev);
  write_matrix(payload, dataset.x_train);
  write_matrix(payload, dataset.y_train);
  write_matrix(payload, dataset.x_test);
  write_matrix(payload, dataset.y_test);
  const std::string bytes = std::move(payload).str();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("cannot write " + path.string());
  out.write(kCacheMagic, sizeof kCacheMagic);
  binary::write_u32(out, kCacheVersion);
  binary::write_u64(out, bytes.size());
  binary::write_u32(out, binary::crc32(bytes));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FileError("failed writing " + path.string());
}

Dataset load_dataset_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + 8, kCacheMagic)) {
    throw CorruptCacheError(path.string() + " is not a dataset container");
  }
  const std::uint32_t version = binary::read_u32(in);
  if (version != kCacheVersion) throw CorruptCacheError("unsupported container version " + std::to_string(version));
  const std::uint64_t size = binary::read_u64(in);
  const std::uint32_t crc = binary::read_u32(in);
  std::string bytes(size, '\0');
  if (!in.read(bytes.data(), static_cast<std::streamsize>(size))) {
    throw CorruptCacheError(path.string() + " is truncated");
  }
  if (binary::crc32(bytes) != crc) throw CorruptCacheError(path.string() + " checksum mismatch");

  std::istringstream is(std::move(bytes));
  Dataset d;
  d.n_features = binary::read_u64(is);
  d.n_classes = binary::read_u64(is);
  const std::uint64_t steps = binary::read_u64(is);
  for (std::uint64_t i = 0; i < steps; ++i) d.preprocessing.steps.push_back(binary::read_string(is, 1024));
  const std::uint64_t scaler = binary::read_u64(is);
  d.preprocessing.scaler.mean = binary::read_f64s(is, scaler);
  d.preprocessing.scaler.stddev = binary::read_f64s(is, scaler);
  d.x_train = read_matrix(is);
  d.y_train = read_matrix(is);
  d.x_test = read_matrix(is);
  d.y_test = read_matrix(is);
  d.validate();
  return d;
}

}  // namespace motifset
