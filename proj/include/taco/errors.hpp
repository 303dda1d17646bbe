#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace taco {

// Base of the project error taxonomy. The CLI maps subclasses onto its
// documented exit codes: 2 usage/config, 3 data, 4 oracle, 5 numerical.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyInputError : Error {
    using Error::Error;
};

struct ParseError : Error {
    ParseError(std::size_t line_no, const std::string& what)
        : Error("parse error at line " + std::to_string(line_no) + ": " + what), line(line_no) {}
    std::size_t line;
};

struct SchemaError : Error {
    explicit SchemaError(const std::string& what) : Error(what), line(0) {}
    SchemaError(std::size_t line_no, const std::string& what)
        : Error("schema error at line " + std::to_string(line_no) + ": " + what), line(line_no) {}
    std::size_t line;
};

struct DimError : Error {
    using Error::Error;
};

struct VocabError : Error {
    using Error::Error;
};

struct NumericalError : Error {
    explicit NumericalError(const std::string& tensor_name)
        : Error("non-finite value in tensor '" + tensor_name + "'"), tensor(tensor_name) {}
    std::string tensor;
};

struct EmptyCompressionError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct OracleUnavailableError : Error {
    using Error::Error;
};

struct VersionError : Error {
    using Error::Error;
};

struct IntegrityError : Error {
    using Error::Error;
};

}  // namespace taco
