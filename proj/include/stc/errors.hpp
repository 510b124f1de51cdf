/*
 Copyright 2026 The stc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#ifndef STC_ERRORS_HPP
#define STC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace stc {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// Malformed input data (non-finite entries, asymmetric weights, bad config values).
class InputError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

/// Lyapunov operator is singular because the closed loop is not Hurwitz.
class NoUniqueSolutionError : public Error {
public:
    using Error::Error;
};

/// Benchmark design failed (no stabilizing Riccati solution).
class DesignError : public Error {
public:
    using Error::Error;
};

/// Constraint data requested at a zero-length interval.
class DegenerateIntervalError : public Error {
public:
    using Error::Error;
};

/// The gain program has no strictly feasible starting point.
class FeasibilityError : public Error {
public:
    using Error::Error;
};

/// A stability or performance guarantee failed to hold at runtime.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// The benchmark gain admits no positive dwell time on the configured grid.
class GridTooCoarseError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

namespace detail {

template <class E>
inline void require(bool condition, const std::string& message)
{
    if (!condition) {
        throw E(message);
    }
}

}  // namespace detail
}  // namespace stc

#endif  // STC_ERRORS_HPP
