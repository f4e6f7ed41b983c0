#pragma once

#include <stdexcept>
#include <string>

#include "akriging/grid.hpp"

namespace akriging {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid grid, experiment configuration, or file schema.
class ConfigError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class DuplicateLocationError : public Error {
public:
    explicit DuplicateLocationError(Combination where);
    Combination location;
};

/// Singular/ill-conditioned kriging system or an invalid kriging variance.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(what) {}
    NumericalError(const std::string& what, Combination a, Combination b);
    bool has_pair = false;
    Combination first{};
    Combination second{};
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

/// The replay table has no entry for the requested location.
class OracleMiss : public Error {
public:
    explicit OracleMiss(Combination where);
    Combination location;
};

class CoverageError : public Error {
public:
    using Error::Error;
};

}  // namespace akriging
