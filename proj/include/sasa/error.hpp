#ifndef SASA_ERROR_HPP
#define SASA_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace sasa {

// Bad input: malformed files, violated preconditions, inconsistent arguments.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Structured CSV parse failure. row is 1-based in the file (header = row 1).
class ParseError : public InputError {
 public:
  ParseError(std::string path, std::size_t row, std::string column, const std::string& what)
      : InputError(path + ":" + std::to_string(row) + (column.empty() ? "" : " [" + column + "]") +
                   ": " + what),
        path_(std::move(path)),
        row_(row),
        column_(std::move(column)) {}

  const std::string& path() const noexcept { return path_; }
  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::string path_;
  std::size_t row_;
  std::string column_;
};

// Singular systems, divergence, non-finite iterates.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sasa

#endif  // SASA_ERROR_HPP
