// Exception types thrown across the library. Every condition the library
// rejects maps to one concrete class so callers can dispatch on type.

#pragma once

#include <stdexcept>
#include <string>

namespace trancheloss {

/// Common base of all library exceptions.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- portfolio validation ---------------------------------------------------

class EmptyPortfolio : public Error {
public:
    using Error::Error;
};

class LoadingNormTooLarge : public Error {
public:
    using Error::Error;
};

class FractionSumMismatch : public Error {
public:
    using Error::Error;
};

class FieldOutOfRange : public Error {
public:
    using Error::Error;
};

class UnknownPreset : public Error {
public:
    using Error::Error;
};

// --- numeric domain ----------------------------------------------------------

class DomainError : public Error {
public:
    using Error::Error;
};

class OrderTooLarge : public Error {
public:
    using Error::Error;
};

class OrderOutOfRange : public Error {
public:
    using Error::Error;
};

class GridTooLarge : public Error {
public:
    using Error::Error;
};

class DegenerateVariance : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

// --- pricing and oracles ------------------------------------------------------

class InvalidConfig : public Error {
public:
    using Error::Error;
};

class NonMonotoneDetachments : public Error {
public:
    using Error::Error;
};

class PortfolioTooLarge : public Error {
public:
    using Error::Error;
};

// --- command line / files ------------------------------------------------------

class UsageError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

} // namespace trancheloss
