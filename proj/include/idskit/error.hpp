#pragma once

#include <stdexcept>
#include <string>

namespace idskit {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SchemaError : Error {
    using Error::Error;
};
struct ParseError : Error {
    using Error::Error;
};
struct LabelError : Error {
    using Error::Error;
};
struct PreprocessError : Error {
    using Error::Error;
};
struct SplitError : Error {
    using Error::Error;
};
struct SubsampleError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct DimensionError : Error {
    using Error::Error;
};
struct DivergenceError : Error {
    using Error::Error;
};
struct EnsembleError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

}  // namespace idskit
