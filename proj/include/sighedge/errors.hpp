#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sighedge {

enum class ErrorKind { input, capacity, numerical, data_quality, io };

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input: return "input";
    case ErrorKind::capacity: return "capacity";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::data_quality: return "data_quality";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct InputError : Error {
  explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

// Raised when a computation needs signature levels above the available order.
struct CapacityError : Error {
  explicit CapacityError(const std::string& what) : Error(ErrorKind::capacity, what) {}
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

struct DataQualityError : Error {
  explicit DataQualityError(const std::string& what) : Error(ErrorKind::data_quality, what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

}  // namespace sighedge
