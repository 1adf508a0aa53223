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

#include "capa/geometry.hpp"
#include "capa/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace capa
{
    UserSource::UserSource(double r, double phi, double theta,
                           std::optional<double> current_density_mag,
                           std::optional<double> tx_aperture_area)
        : r_(r), phi_(phi), theta_(theta), current_(current_density_mag), tx_area_(tx_aperture_area)
    {
        constexpr double pi = std::numbers::pi;
        if (!(r > 0.0) || !std::isfinite(r))
            throw UsageError("UserSource: distance r must be positive and finite, got " + std::to_string(r));
        if (!(phi >= 0.0 && phi <= pi))
            throw UsageError("UserSource: azimuth phi must lie in [0, pi], got " + std::to_string(phi));
        if (!(theta >= 0.0 && theta <= pi))
            throw UsageError("UserSource: elevation theta must lie in [0, pi], got " + std::to_string(theta));
        if (current_ && !(*current_ >= 0.0))
            throw UsageError("UserSource: current density magnitude must be >= 0");
        if (tx_area_ && !(*tx_area_ > 0.0))
            throw UsageError("UserSource: transmit aperture area must be > 0");
    }

    double UserSource::tx_aperture_area(double lambda) const
    {
        if (tx_area_)
            return *tx_area_;
        return lambda * lambda / (4.0 * std::numbers::pi);
    }

    double UserSource::Phi() const { return std::cos(phi_) * std::sin(theta_); }
    double UserSource::Psi() const { return std::sin(phi_) * std::sin(theta_); }
    double UserSource::Theta() const { return std::cos(theta_); }

    Vec3 user_position(const UserSource &u)
    {
        return Vec3(u.r() * u.Phi(), u.r() * u.Psi(), u.r() * u.Theta());
    }

    // ------------------------------------------------------------------------

    static Vec3 checked_normal(const Vec3 &n)
    {
        double len = n.norm();
        if (!(std::abs(len - 1.0) < 1e-9))
            throw UsageError("ApertureRegion: normal vector must have unit length");
        return n;
    }

    ApertureRegion::ApertureRegion(Shape s, const Vec3 &normal)
        : shape_(std::move(s)), normal_(checked_normal(normal)) {}

    ApertureRegion ApertureRegion::planar(double Lx, double Lz, const Vec3 &normal)
    {
        if (!(Lx > 0.0) || !(Lz > 0.0) || !std::isfinite(Lx) || !std::isfinite(Lz))
            throw UsageError("PlanarRect: Lx and Lz must be positive and finite");
        return ApertureRegion(PlanarRect{Lx, Lz}, normal);
    }

    ApertureRegion ApertureRegion::spd(int Mx, int Mz, double d, double element_side, const Vec3 &normal)
    {
        if (Mx < 1 || Mz < 1 || Mx % 2 == 0 || Mz % 2 == 0)
            throw UsageError("SpdGrid: element counts must be odd and positive, got Mx=" +
                             std::to_string(Mx) + ", Mz=" + std::to_string(Mz));
        if (!(d > 0.0) || !std::isfinite(d))
            throw UsageError("SpdGrid: spacing d must be positive");
        if (!(element_side > 0.0))
            throw UsageError("SpdGrid: element side must be positive");
        // Small slack so that element_side = sqrt(mu * d^2) with mu = 1 is accepted
        if (element_side > d * (1.0 + 1e-12))
            throw UsageError("SpdGrid: element side " + std::to_string(element_side) +
                             " exceeds spacing " + std::to_string(d) + " (elements would overlap)");
        return ApertureRegion(SpdGrid{Mx, Mz, d, std::min(element_side, d)}, normal);
    }

    const PlanarRect &ApertureRegion::planar_rect() const
    {
        if (const auto *p = std::get_if<PlanarRect>(&shape_))
            return *p;
        throw UsageError("ApertureRegion: operation requires a PlanarRect aperture");
    }

    const SpdGrid &ApertureRegion::spd_grid() const
    {
        if (const auto *p = std::get_if<SpdGrid>(&shape_))
            return *p;
        throw UsageError("ApertureRegion: operation requires an SpdGrid aperture");
    }

    double ApertureRegion::area() const
    {
        if (is_planar())
            return planar_rect().Lx * planar_rect().Lz;
        const auto &g = spd_grid();
        return double(g.Mx) * double(g.Mz) * g.element_side * g.element_side;
    }

    double ApertureRegion::bounding_Lx() const
    {
        if (is_planar())
            return planar_rect().Lx;
        return spd_grid().Mx * spd_grid().d;
    }

    double ApertureRegion::bounding_Lz() const
    {
        if (is_planar())
            return planar_rect().Lz;
        return spd_grid().Mz * spd_grid().d;
    }

    std::vector<Vec3> spd_element_centers(const ApertureRegion &a)
    {
        const auto &g = a.spd_grid();
        const int hx = (g.Mx - 1) / 2, hz = (g.Mz - 1) / 2;
        std::vector<Vec3> centers;
        centers.reserve(std::size_t(g.Mx) * std::size_t(g.Mz));
        for (int mx = -hx; mx <= hx; ++mx)
            for (int mz = -hz; mz <= hz; ++mz)
                centers.emplace_back(mx * g.d, 0.0, mz * g.d);
        return centers;
    }

    double occupation_ratio(const ApertureRegion &a)
    {
        const auto &g = a.spd_grid();
        if (g.element_side == g.d)
            return 1.0;
        return (g.element_side * g.element_side) / (g.d * g.d);
    }
}
