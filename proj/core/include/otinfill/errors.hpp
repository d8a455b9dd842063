// Copyright 2026 The otinfill Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OTINFILL_ERRORS_HPP_
#define OTINFILL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace otinfill {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A time or probability argument fell outside its domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// An operation received a zero-length sequence where one was required.
class EmptySequenceError : public Error {
 public:
  using Error::Error;
};

// More items than available slots (l > L, m > n, l_p > L, ...).
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Balanced matching called with unequal sides.
class BalancedPreconditionError : public Error {
 public:
  using Error::Error;
};

// Class counts on the two sides of a coupling are incompatible.
class CouplingError : public Error {
 public:
  using Error::Error;
};

// A metric is undefined for the given corpus (e.g. empty).
class MetricError : public Error {
 public:
  using Error::Error;
};

// Non-finite values encountered in a numerical routine.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Malformed configuration, checkpoint or data file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace otinfill

#endif  // OTINFILL_ERRORS_HPP_
