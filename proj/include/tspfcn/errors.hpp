#pragma once

#include <stdexcept>
#include <string>

namespace tspfcn {

/// Broad failure category. Each maps onto one CLI exit code.
enum class ErrorCategory {
    usage = 1,   // bad arguments, config conflicts
    data = 2,    // invalid instances/tours, I/O, malformed files, size guards
    numeric = 3, // NaN/Inf guards
};

class Error : public std::runtime_error {
  public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }
    int exit_code() const noexcept { return static_cast<int>(category_); }

  private:
    ErrorCategory category_;
};

#define TSPFCN_DEFINE_ERROR(Name, Category)                                                        \
    class Name : public Error {                                                                    \
      public:                                                                                      \
        explicit Name(const std::string& what) : Error(ErrorCategory::Category, what) {}           \
    }

TSPFCN_DEFINE_ERROR(InvalidInstanceError, data);
TSPFCN_DEFINE_ERROR(InvalidTourError, data);
TSPFCN_DEFINE_ERROR(RasterError, data);
TSPFCN_DEFINE_ERROR(SizeLimitError, data);
TSPFCN_DEFINE_ERROR(IoError, data);
TSPFCN_DEFINE_ERROR(FormatError, data);
TSPFCN_DEFINE_ERROR(ShapeError, data);
TSPFCN_DEFINE_ERROR(ConfigError, usage);
TSPFCN_DEFINE_ERROR(NumericError, numeric);

#undef TSPFCN_DEFINE_ERROR

} // namespace tspfcn
