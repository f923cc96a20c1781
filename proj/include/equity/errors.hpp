#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace equity {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A required input could not be read. `file()` names the offending input.
class IngestionError : public Error {
 public:
  IngestionError(std::string file, const std::string& what)
      : Error(file + ": " + what), file_(std::move(file)) {}
  const std::string& file() const noexcept { return file_; }

 private:
  std::string file_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class OrderingError : public Error {
 public:
  using Error::Error;
};

class DegenerateJourneyError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SpecificationMismatchError : public Error {
 public:
  using Error::Error;
};

class RankDeficientError : public Error {
 public:
  explicit RankDeficientError(std::vector<std::string> columns);
  const std::vector<std::string>& columns() const noexcept { return columns_; }

 private:
  std::vector<std::string> columns_;
};

}  // namespace equity
