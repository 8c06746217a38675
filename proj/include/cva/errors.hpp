#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cva {

/// Malformed file contents. Carries the byte offset at which parsing failed.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& message, std::uint64_t offset)
        : std::runtime_error(message + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

/// A file could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An operation was applied to an object in the wrong state (e.g. normalizing twice).
class InvalidStateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Non-finite values appeared during network evaluation or training.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& layer, const std::string& message)
        : std::runtime_error(message + " [layer: " + layer + "]"), layer_(layer) {}

    const std::string& layer() const noexcept { return layer_; }

private:
    std::string layer_;
};

}  // namespace cva
