// errors.hpp — Exception types shared by all modules

#pragma once

#include <stdexcept>
#include <string>

namespace sgc {

// Bad input: out-of-range parameter, malformed config, wrong shape. CLI exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A solve or integration that did not produce a trustworthy result. CLI exit code 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace sgc
