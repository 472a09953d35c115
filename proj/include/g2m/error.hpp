#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace g2m {

// Base for every error the library throws. Parse failures are values, not exceptions.
struct Error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidSpec : Error { using Error::Error; };
struct OutOfRange : Error { using Error::Error; };
struct InvalidIndex : Error { using Error::Error; };
struct InvalidMapping : Error { using Error::Error; };
struct InvalidColor : Error { using Error::Error; };
struct InvalidLabel : Error { using Error::Error; };
struct InvalidBatch : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct EmptyReport : Error { using Error::Error; };
struct MissingResponse : Error { using Error::Error; };

struct DecodeError : Error {
  int row;
  int col;
  DecodeError(const std::string& message, int row_, int col_) : Error(message), row(row_), col(col_) {}
};

// Malformed G2MF container. `offset` is the byte position where validation failed.
struct FormatError : Error {
  std::uint64_t offset;
  FormatError(const std::string& message, std::uint64_t offset_)
      : Error(message + " (at byte " + std::to_string(offset_) + ")"), offset(offset_) {}
};

struct TransportError : Error {
  int status;    // HTTP status, or 0 when no response was received
  int attempts;
  TransportError(const std::string& message, int status_, int attempts_)
      : Error(message), status(status_), attempts(attempts_) {}
};

struct TrainingDiverged : Error { using Error::Error; };

}  // namespace g2m
