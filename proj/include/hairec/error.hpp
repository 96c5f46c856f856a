#pragma once

#include <stdexcept>
#include <string>

namespace hairec {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A model failed validation where a valid one was required.
class ValidationError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class IndexOutOfRange : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// NaN/Inf produced or consumed where finite values are required.
class NumericError : public Error {
public:
    using Error::Error;
};

/// The observed (u_h, y') pair has zero probability under the state belief.
class ImpossibleObservation : public Error {
public:
    using Error::Error;
};

/// The observed human action has zero probability under the internal belief.
class ImpossibleHumanAction : public Error {
public:
    using Error::Error;
};

/// A history with probability zero was handed to an exact enumerator.
class HistoryImpossible : public Error {
public:
    using Error::Error;
};

/// Exact enumeration requested beyond its guard horizon.
class HorizonTooLarge : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace hairec
