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

#include "capa/two_user_channel.hpp"
#include "capa/errors.hpp"

#include <cmath>
#include <string>

namespace capa
{
    std::complex<double> TwoUserChannel::rho_u() const
    {
        if (!(a1 > 0.0) || !(a2 > 0.0))
            throw DomainError("TwoUserChannel: channel gains must be positive to normalize rho");
        return rho / std::sqrt(a1 * a2);
    }

    void TwoUserChannel::validate(double slack) const
    {
        double ru = std::abs(rho_u());
        if (ru > 1.0 + slack)
            throw DomainError("TwoUserChannel: |rho_u| = " + std::to_string(ru) +
                              " exceeds 1 (inconsistent channel statistics)");
    }
}
