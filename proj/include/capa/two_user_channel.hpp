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

#ifndef capa_two_user_channel_H
#define capa_two_user_channel_H

#include <complex>

namespace capa
{
    // Sufficient statistics of the two-user uplink: channel gains a1, a2 and the
    // kernel correlation rho = int g*(r, s1) g(r, s2) dr over the receive aperture.
    struct TwoUserChannel
    {
        double a1 = 0.0;
        double a2 = 0.0;
        std::complex<double> rho = 0.0;

        // rho / sqrt(a1 a2); throws DomainError when a gain is not positive
        std::complex<double> rho_u() const;

        // Throws DomainError unless a1, a2 > 0 and |rho| <= sqrt(a1 a2) (1 + slack)
        void validate(double slack = 1e-9) const;
    };
}

#endif
