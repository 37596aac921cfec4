#pragma once

#include <stdexcept>
#include <string>

namespace tbpos {

/// Malformed input file; the message names the file and the offending
/// line/element/byte offset.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem or encoding failure while reading or writing.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tbpos
