#pragma once

#include <stdexcept>
#include <string>

namespace rinr {

/// Tensor or image dimensions that do not line up.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A NaN or Inf showed up during evaluation or training.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ContainerError : public std::runtime_error {
public:
    enum class Kind { BadMagic, BadVersion, BadCrc, Truncated, Malformed };

    ContainerError(Kind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

} // namespace rinr
