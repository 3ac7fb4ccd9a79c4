// SPDX-License-Identifier: Apache-2.0
//
// Exception types shared by every module.

#pragma once

#include <stdexcept>
#include <string>

namespace lemon {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Extent or dtype mismatch between operands.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Non-finite result or a zero normalisation denominator.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Invalid model spec, expansion plan, schedule or split. Maps to a usage error on the CLI.
class PlanError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace lemon
