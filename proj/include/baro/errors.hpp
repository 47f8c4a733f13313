#pragma once

#include <stdexcept>
#include <string>

namespace baro {

// Base class for all library errors. CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad argument values: non-finite inputs, out-of-envelope readings, empty plans.
class InvalidInputError : public Error {
public:
    using Error::Error;
};

// Inverse ISA map queried outside its domain (power base non-positive).
class OutOfDomainError : public Error {
public:
    using Error::Error;
};

// Malformed file content; message carries "path:line:" context where known.
class DataError : public Error {
public:
    using Error::Error;
};

// Not enough aligned rows/sensors to estimate offsets.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

// Sensor id has no entry in the calibration table.
class MissingCalibrationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class NetError : public Error {
public:
    using Error::Error;
};

}  // namespace baro
