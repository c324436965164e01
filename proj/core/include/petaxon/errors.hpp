#pragma once

#include <stdexcept>
#include <string>

namespace petaxon {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// The buffer does not carry a DOS magic or an in-bounds PE signature.
class NotPeError : public Error {
public:
    explicit NotPeError(const std::string& what) : Error(what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

/// A record, vector, or model does not match the active feature layout.
class LayoutMismatchError : public Error {
public:
    explicit LayoutMismatchError(const std::string& what) : Error(what) {}
};

/// A serialized container has the wrong magic or an unsupported version.
class VersionMismatchError : public Error {
public:
    explicit VersionMismatchError(const std::string& what) : Error(what) {}
};

/// Training input carries fewer than two classes.
class DegenerateLabelsError : public Error {
public:
    explicit DegenerateLabelsError(const std::string& what) : Error(what) {}
};

/// A pipeline stage received fewer samples than the configured floor.
class InsufficientSamplesError : public Error {
public:
    InsufficientSamplesError(std::string stage, const std::string& what)
        : Error(what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

class EmptyStreamError : public Error {
public:
    explicit EmptyStreamError(const std::string& what) : Error(what) {}
};

class NoFamiliesError : public Error {
public:
    explicit NoFamiliesError(const std::string& what) : Error(what) {}
};

class OneClassOnlyError : public Error {
public:
    explicit OneClassOnlyError(const std::string& what) : Error(what) {}
};

class LengthMismatchError : public Error {
public:
    explicit LengthMismatchError(const std::string& what) : Error(what) {}
};

class UnknownLabelError : public Error {
public:
    explicit UnknownLabelError(const std::string& what) : Error(what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace petaxon
