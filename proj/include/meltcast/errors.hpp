#pragma once

#include <stdexcept>
#include <string>

namespace meltcast {

/// Classification of every failure the library reports. The numeric values
/// are part of the C ABI (see meltcast.h) and must not be reordered.
enum class ErrorKind : int {
    kFormat = 1,
    kEmptyInput = 2,
    kBoundaryData = 3,
    kConfiguration = 4,
    kDomain = 5,
    kRange = 6,
    kInsufficientData = 7,
    kDegenerate = 8,
    kIo = 9,
    kAlphaChangeRefused = 10,
    kMissingArtifact = 11,
    kInternal = 12,
};

[[nodiscard]] const char* to_string(ErrorKind kind) noexcept;

/// Base exception for all library errors.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error(ErrorKind::kFormat, what) {}
};

class EmptyInputError : public Error {
public:
    explicit EmptyInputError(const std::string& what) : Error(ErrorKind::kEmptyInput, what) {}
};

class BoundaryDataError : public Error {
public:
    explicit BoundaryDataError(const std::string& what) : Error(ErrorKind::kBoundaryData, what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfiguration, what) {}
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ErrorKind::kDomain, what) {}
};

class RangeError : public Error {
public:
    explicit RangeError(const std::string& what) : Error(ErrorKind::kRange, what) {}
};

class InsufficientDataError : public Error {
public:
    explicit InsufficientDataError(const std::string& what)
        : Error(ErrorKind::kInsufficientData, what) {}
};

class DegenerateError : public Error {
public:
    explicit DegenerateError(const std::string& what) : Error(ErrorKind::kDegenerate, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

class AlphaChangeRefusedError : public Error {
public:
    explicit AlphaChangeRefusedError(const std::string& what)
        : Error(ErrorKind::kAlphaChangeRefused, what) {}
};

class MissingArtifactError : public Error {
public:
    explicit MissingArtifactError(const std::string& what)
        : Error(ErrorKind::kMissingArtifact, what) {}
};

class InternalError : public Error {
public:
    explicit InternalError(const std::string& what) : Error(ErrorKind::kInternal, what) {}
};

}  // namespace meltcast
