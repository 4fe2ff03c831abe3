#pragma once

#include <stdexcept>
#include <string>

namespace esb {

/// Argument outside the physical domain of a model function (e.g. a density
/// above jam density).
class DomainError : public std::domain_error
{
public:
    using std::domain_error::domain_error;
};

/// Invalid or inconsistent configuration, detected before any stepping.
class ConfigError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// A state went non-finite during a run.
class NumericError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace esb
