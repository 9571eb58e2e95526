#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cocoaudit {

// Root of every error the library throws. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed JSON. Carries the byte offset reported by the parser.
class ParseError : public Error {
 public:
  ParseError(std::size_t byte_offset, const std::string& what)
      : Error("parse error at byte " + std::to_string(byte_offset) + ": " +
              what),
        byte_offset_(byte_offset) {}

  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

// Well-formed JSON that does not follow the COCO schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Dangling or duplicated ids.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

// A shape that rasterizes to nothing, so no contour exists.
class DegenerateShape : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

class StatsError : public Error {
 public:
  using Error::Error;
};

class EvalError : public Error {
 public:
  using Error::Error;
};

}  // namespace cocoaudit
