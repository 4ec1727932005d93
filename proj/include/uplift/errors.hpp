#pragma once

#include <stdexcept>
#include <string>

namespace uplift {

// Error categories mirror the failure surfaces of the public API.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A named column is missing or duplicated in a CSV header.
class SchemaError : public Error {
public:
    using Error::Error;
};

// A data row fails to parse or violates a dataset invariant.
class DataError : public Error {
public:
    using Error::Error;
};

// A configuration object is internally inconsistent.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A training batch lacks the group composition a loss requires.
class BatchError : public Error {
public:
    using Error::Error;
};

// A solver input violates its domain (non-positive costs, non-monotone rows).
class DomainError : public Error {
public:
    using Error::Error;
};

// The budget cannot cover the mandatory base allocation.
class InfeasibleError : public DomainError {
public:
    using DomainError::DomainError;
};

// An exact oracle was asked for an instance beyond its size limits.
class CapacityError : public Error {
public:
    using Error::Error;
};

// A metric precondition fails (empty group, non-positive baseline area).
class MetricError : public Error {
public:
    using Error::Error;
};

// Training diverged or could not proceed.
class TrainError : public Error {
public:
    using Error::Error;
};

// A call mixes incompatible kinds (loss arity vs. scorer shape).
class ContractError : public Error {
public:
    using Error::Error;
};

// Filesystem failure, annotated with the path involved.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace uplift
