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

#include "capa/channel.hpp"
#include "capa/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace capa
{
    namespace
    {
        constexpr double pi = std::numbers::pi;
        constexpr cd j{0.0, 1.0};

        // Points closer than this fraction of a wavelength are treated as coincident
        constexpr double singular_fraction = 1e-9;

        double checked_distance(const Wave &w, const Vec3 &r, const Vec3 &s)
        {
            double D = (r - s).norm();
            if (!(D >= singular_fraction * w.lambda()))
                throw DomainError("channel kernel evaluated at coincident points (D = " + std::to_string(D) + " m)");
            return D;
        }
    }

    Wave::Wave(double lambda) : lambda_(lambda), k0_(2.0 * pi / lambda), eta_(120.0 * pi)
    {
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw UsageError("Wave: wavelength must be positive and finite");
    }

    cd green_radiating(const Wave &w, const Vec3 &r, const Vec3 &s)
    {
        double D = checked_distance(w, r, s);
        return j * w.k0() * w.eta() * std::polar(1.0, -w.k0() * D) / (4.0 * pi * D);
    }

    cd green_full(const Wave &w, const Vec3 &r, const Vec3 &s)
    {
        double D = checked_distance(w, r, s);
        double kD = w.k0() * D;
        cd near = 1.0 + j / kD - 1.0 / (kD * kD);
        return j * w.k0() * w.eta() * std::polar(1.0, -kD) / (4.0 * pi * D) * near;
    }

    double reactive_factor_sq(double k0D)
    {
        double q = 1.0 / (k0D * k0D);
        return 1.0 - q + q * q;
    }

    double projected_aperture_factor(const ApertureRegion &a, const Vec3 &r, const Vec3 &s)
    {
        Vec3 v = s - r;
        double D = v.norm();
        if (!(D > 0.0))
            throw DomainError("projected aperture factor evaluated at coincident points");
        double ratio = std::abs(a.normal().dot(v)) / D;
        return std::sqrt(std::min(ratio, 1.0));
    }

    cd kernel_g(const Wave &w, const ApertureRegion &a, const Vec3 &r, const Vec3 &s)
    {
        Vec3 v = s - r;
        double D = checked_distance(w, r, s);
        double hpa = std::sqrt(std::min(std::abs(a.normal().dot(v)) / D, 1.0));
        return std::polar(hpa / (std::sqrt(4.0 * pi) * D), -w.k0() * D);
    }

    double kernel_g_norm_sq(const Wave &w, const ApertureRegion &a, const Vec3 &r, const Vec3 &s)
    {
        Vec3 v = s - r;
        double D = checked_distance(w, r, s);
        return std::min(std::abs(a.normal().dot(v)) / D, 1.0) / (4.0 * pi * D * D);
    }

    cd kernel_g_product(const Wave &w, const ApertureRegion &a, const Vec3 &r, const Vec3 &s1, const Vec3 &s2)
    {
        Vec3 v1 = s1 - r, v2 = s2 - r;
        double D1 = checked_distance(w, r, s1), D2 = checked_distance(w, r, s2);
        const Vec3 &n = a.normal();
        double p = std::min(std::abs(n.dot(v1)) / D1, 1.0) * std::min(std::abs(n.dot(v2)) / D2, 1.0);
        return std::polar(std::sqrt(p) / (4.0 * pi * D1 * D2), -w.k0() * (D2 - D1));
    }

    cd channel_response_h(const Wave &w, const ApertureRegion &a, const Vec3 &r, const Vec3 &s, bool use_reactive)
    {
        cd em = use_reactive ? green_full(w, r, s) : green_radiating(w, r, s);
        return em * projected_aperture_factor(a, r, s);
    }

    cd h_over_g(const Wave &w)
    {
        return j * w.k0() * w.eta() / std::sqrt(4.0 * pi);
    }
}
