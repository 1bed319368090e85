#pragma once

#include <stdexcept>
#include <string>

namespace glee {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
    using Error::Error;
};

struct IndexError : Error {
    using Error::Error;
};

struct StateError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct FormatError : Error {
    using Error::Error;
};

struct TemplateError : Error {
    using Error::Error;
};

struct VerbalizerError : Error {
    using Error::Error;
};

// Raised when a head that reads the [MASK] representation is run on a
// batch whose inputs carry no [MASK] token.
struct InputStructureError : Error {
    using Error::Error;
};

struct DegenerateRowError : Error {
    using Error::Error;
};

struct EmptyInputError : Error {
    using Error::Error;
};

struct TrainingError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace glee
