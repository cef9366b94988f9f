#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "motifset/matrix.hpp"

namespace motifset {

/// Images and labels read from a pair of IDX files.
struct IdxSamples {
  Matrix<std::uint8_t> images;  ///< samples x (rows * cols)
  std::vector<std::uint8_t> labels;
  std::size_t image_rows = 0;
  std::size_t image_cols = 0;
};

/// Reads an IDX image file (magic 0x00000803) and label file (0x00000801).
/// Gzip input is decompressed transparently.
IdxSamples load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

struct CsvSamples {
  Matrix<double> features;
  std::vector<std::size_t> labels;
  std::vector<std::string> class_names;  ///< class id -> original label text
};

/// Comma separated, optional header (detected when the first row is not
/// numeric). label_column < 0 counts from the end; -1 is the last column.
/// Class ids follow the sorted order of the distinct label values (numeric
/// order when every label is a number).
CsvSamples load_labeled_csv(const std::filesystem::path& path, int label_column = -1);

/// x / 255.
Matrix<double> normalize_01(const Matrix<std::uint8_t>& x);

struct ScalerParams {
  std::vector<double> mean;
  std::vector<double> stddev;  ///< population std, floored at 1e-8
};

struct Standardized {
  Matrix<double> train;
  Matrix<double> test;
  ScalerParams params;
};

/// Per-feature z-score fitted on `train` only and applied to both.
Standardized standardize(const Matrix<double>& train, const Matrix<double>& test);
ScalerParams fit_scaler(const Matrix<double>& train);
Matrix<double> apply_scaler(const Matrix<double>& x, const ScalerParams& params);

Matrix<double> one_hot(std::span<const std::size_t> labels, std::size_t n_classes);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded uniform shuffle, then the first floor(n * test_fraction) indices
/// form the test side.
SplitIndices split_indices(std::size_t n, double test_fraction, std::uint64_t seed);

struct PreprocessingRecord {
  std::vector<std::string> steps;  ///< applied in order, e.g. {"normalize_01", "standardize"}
  ScalerParams scaler;             ///< empty unless standardize ran
};

struct Dataset {
  Matrix<double> x_train, x_test;
  Matrix<double> y_train, y_test;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  PreprocessingRecord preprocessing;

  /// Throws DataError if shapes or one-hot rows are inconsistent.
  void validate() const;
};

struct SplitDataset {
  Dataset data;
  SplitIndices indices;
};

/// Shuffles and splits x / y (one-hot) into a dataset without preprocessing.
SplitDataset split(const Matrix<double>& x, const Matrix<double>& y, double test_fraction, std::uint64_t seed);

struct IdxDatasetPaths {
  std::filesystem::path train_images, train_labels, test_images, test_labels;

  /// Standard Fashion-MNIST file names inside `dir`, preferring .gz files.
  static IdxDatasetPaths in_directory(const std::filesystem::path& dir);
};

struct PreprocessOptions {
  bool standardize = true;
  std::size_t train_limit = 0;  ///< keep only the first N training rows (0 = all)
  std::size_t test_limit = 0;
};

/// bytes -> /255 -> optional standardization, with the given row limits.
Dataset make_idx_dataset(const IdxDatasetPaths& paths, const PreprocessOptions& options);

/// CSV -> one-hot -> split -> optional standardization.
Dataset make_csv_dataset(const std::filesystem::path& path, int label_column, double test_fraction,
                         std::uint64_t split_seed, const PreprocessOptions& options);

/// Versioned binary container ("MSETDATA"), little-endian 64-bit floats, with a
/// CRC-32 of the payload in the header. Loading a container whose checksum does
/// not match throws CorruptCacheError.
void save_dataset_cache(const std::filesystem::path& path, const Dataset& dataset);
Dataset load_dataset_cache(const std::filesystem::path& path);

}  // namespace motifset
