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

#ifndef capa_channel_H
#define capa_channel_H

#include "capa/geometry.hpp"

#include <complex>

namespace capa
{
    using cd = std::complex<double>;

    // Carrier description: wavelength, wavenumber 2 pi / lambda, free-space impedance 120 pi
    class Wave
    {
    public:
        explicit Wave(double lambda);

        double lambda() const { return lambda_; }
        double k0() const { return k0_; }
        double eta() const { return eta_; }

    private:
        double lambda_, k0_, eta_;
    };

    // Scalar free-space Green's function including the reactive near-field terms:
    //   j k0 eta exp(-j k0 D) / (4 pi D) * (1 + j/(k0 D) - 1/(k0 D)^2)
    cd green_full(const Wave &w, const Vec3 &r, const Vec3 &s);

    // Radiating approximation j k0 eta exp(-j k0 D) / (4 pi D)
    cd green_radiating(const Wave &w, const Vec3 &r, const Vec3 &s);

    // |1 + j/(k0 D) - 1/(k0 D)^2|^2 = 1 - 1/(k0 D)^2 + 1/(k0 D)^4
    double reactive_factor_sq(double k0D);

    // sqrt(|e_r^T (s - r)| / |r - s|), in [0, 1]
    double projected_aperture_factor(const ApertureRegion &a, const Vec3 &r, const Vec3 &s);

    // Normalized kernel exp(-j k0 D) / (sqrt(4 pi) D) * h_pa(r, s).
    // Under the radiating approximation h = (j k0 eta / sqrt(4 pi)) g.
    cd kernel_g(const Wave &w, const ApertureRegion &a, const Vec3 &r, const Vec3 &s);

    // |g(r, s)|^2 without forming the phase
    double kernel_g_norm_sq(const Wave &w, const ApertureRegion &a, const Vec3 &r, const Vec3 &s);

    // conj(g(r, s1)) g(r, s2) with a single phase evaluation
    cd kernel_g_product(const Wave &w, const ApertureRegion &a, const Vec3 &r, const Vec3 &s1, const Vec3 &s2);

    // Spatial channel response h_em * h_pa. Reactive terms are off by default.
    cd channel_response_h(const Wave &w, const ApertureRegion &a, const Vec3 &r, const Vec3 &s, bool use_reactive = false);

    // j k0 eta / sqrt(4 pi), the factor between h (radiating) and g
    cd h_over_g(const Wave &w);
}

#endif
