#include "idil/error.hpp"

namespace idil {

IndexError::IndexError(std::size_t axis, std::size_t index, std::size_t extent)
    : Error("index " + std::to_string(index) + " out of range for axis " + std::to_string(axis) +
            " of size " + std::to_string(extent)),
      axis_(axis) {}

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : Error(line ? source + ":" + std::to_string(line) + ": " + what : source + ": " + what),
      line_(line) {}

}  // namespace idil
