// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <stdexcept>
#include <string>

namespace cris {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "Error"; }
};

#define CRIS_DEFINE_ERROR(Name)                                              \
    class Name : public Error {                                              \
    public:                                                                  \
        using Error::Error;                                                  \
        const char* kind() const noexcept override { return #Name; }         \
    };

// Argument outside the mathematical domain of a function.
CRIS_DEFINE_ERROR(DomainError)
// Layout with coincident endpoints or non-positive link distance.
CRIS_DEFINE_ERROR(DegenerateGeometry)
// Integral did not reach the requested tolerance within its budget.
CRIS_DEFINE_ERROR(QuadratureFailure)
// Moment pair with mu2 <= mu1^2.
CRIS_DEFINE_ERROR(NonPositiveVariance)
// Correlation matrix too far from PSD to be repaired by eigenvalue clipping.
CRIS_DEFINE_ERROR(CovarianceRepairFailure)
// Malformed or incomplete experiment configuration.
CRIS_DEFINE_ERROR(ConfigError)
// File could not be opened or written.
CRIS_DEFINE_ERROR(IoError)

#undef CRIS_DEFINE_ERROR

} // namespace cris
