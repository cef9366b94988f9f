#pragma once

#include <stdexcept>
#include <string>

namespace motifset {

/// Base of every error thrown by the library. The category decides the
/// process exit status of the command line tool.
class Error : public std::runtime_error {
 public:
  enum class Category { config, data, numerical };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(Category::config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(Category::data, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(Category::numerical, what) {}
};

#define MOTIFSET_DEFINE_ERROR(Name, Base)                            \
  class Name : public Base {                                         \
   public:                                                           \
    explicit Name(const std::string& what) : Base(#Name ": " + what) {} \
  }

// topology / network configuration
MOTIFSET_DEFINE_ERROR(DivisibilityError, ConfigError);
MOTIFSET_DEFINE_ERROR(EmptyNetworkError, ConfigError);
MOTIFSET_DEFINE_ERROR(IndexError, ConfigError);
MOTIFSET_DEFINE_ERROR(WeightSumError, ConfigError);
MOTIFSET_DEFINE_ERROR(NonPositiveBaselineError, ConfigError);
MOTIFSET_DEFINE_ERROR(MissingFieldError, ConfigError);

// shapes and caches handed to the network at run time
MOTIFSET_DEFINE_ERROR(ShapeError, NumericalError);
MOTIFSET_DEFINE_ERROR(StaleCacheError, NumericalError);

// dataset ingestion
MOTIFSET_DEFINE_ERROR(MagicNumberError, DataError);
MOTIFSET_DEFINE_ERROR(CountMismatchError, DataError);
MOTIFSET_DEFINE_ERROR(TruncatedFileError, DataError);
MOTIFSET_DEFINE_ERROR(RaggedRowError, DataError);
MOTIFSET_DEFINE_ERROR(NonNumericError, DataError);
MOTIFSET_DEFINE_ERROR(EmptyFileError, DataError);
MOTIFSET_DEFINE_ERROR(OutOfRangeError, DataError);
MOTIFSET_DEFINE_ERROR(TooFewSamplesError, DataError);
MOTIFSET_DEFINE_ERROR(CorruptCacheError, DataError);
MOTIFSET_DEFINE_ERROR(FileError, DataError);

#undef MOTIFSET_DEFINE_ERROR

}  // namespace motifset
