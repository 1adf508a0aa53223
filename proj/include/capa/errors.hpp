// SPDX-License-Identifier: Apache-2.0
//
// capa-lib: continuous-aperture-array uplink channel and capacity analysis
// Copyright (C) 2026 The capa-lib authors
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

#ifndef capa_errors_H
#define capa_errors_H

#include <complex>
#include <stdexcept>
#include <string>

namespace capa
{
    // Invalid arguments, wrong aperture variant, malformed configuration
    class UsageError : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    // Mathematically invalid input, e.g. a singular kernel or |rho_u| > 1
    class DomainError : public std::domain_error
    {
    public:
        using std::domain_error::domain_error;
    };

    // Numerical integration failed to reach its tolerance.
    // Carries the last two whole-integral estimates.
    class ConvergenceError : public std::runtime_error
    {
    public:
        ConvergenceError(const std::string &what, std::complex<double> previous, std::complex<double> last)
            : std::runtime_error(what), previous_estimate(previous), last_estimate(last) {}

        std::complex<double> previous_estimate;
        std::complex<double> last_estimate;
    };
}

#endif
