#pragma once

#include <stdexcept>
#include <string>

namespace semires {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A sample or argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed or incomplete configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Array lengths that must agree do not.
class SizeMismatch : public Error {
public:
    using Error::Error;
};

/// Elimination hit a pivot below the singularity threshold.
class NearSingular : public Error {
public:
    using Error::Error;
};

class ClassificationError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

class WellError : public Error {
public:
    using Error::Error;
};

class ExtensionError : public Error {
public:
    using Error::Error;
};

class QuasimodeError : public Error {
public:
    using Error::Error;
};

} // namespace semires
