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

#ifndef capa_geometry_H
#define capa_geometry_H

#include <Eigen/Core>

#include <optional>
#include <variant>
#include <vector>

namespace capa
{
    using Vec3 = Eigen::Vector3d;

    // Point transmitter in spherical coordinates around the aperture center.
    // phi is the azimuth, theta the elevation, both in [0, pi].
    class UserSource
    {
    public:
        UserSource(double r, double phi, double theta,
                   std::optional<double> current_density_mag = std::nullopt,
                   std::optional<double> tx_aperture_area = std::nullopt);

        double r() const { return r_; }
        double phi() const { return phi_; }
        double theta() const { return theta_; }
        std::optional<double> current_density_mag() const { return current_; }

        // |A_k|, defaulting to the isotropic aperture lambda^2 / (4 pi)
        double tx_aperture_area(double lambda) const;

        // Direction cosines
        double Phi() const;   // cos(phi) sin(theta)
        double Psi() const;   // sin(phi) sin(theta)
        double Theta() const; // cos(theta)

    private:
        double r_, phi_, theta_;
        std::optional<double> current_;
        std::optional<double> tx_area_;
    };

    Vec3 user_position(const UserSource &u);

    struct PlanarRect
    {
        double Lx;
        double Lz;
    };

    // Mx x Mz square elements of side element_side on a grid of spacing d, centered at the origin.
    struct SpdGrid
    {
        int Mx;
        int Mz;
        double d;
        double element_side;
    };

    // Receive surface in the x-z plane. The normal only enters the projected-aperture factor.
    class ApertureRegion
    {
    public:
        using Shape = std::variant<PlanarRect, SpdGrid>;

        static ApertureRegion planar(double Lx, double Lz, const Vec3 &normal = Vec3(0.0, 1.0, 0.0));
        static ApertureRegion spd(int Mx, int Mz, double d, double element_side, const Vec3 &normal = Vec3(0.0, 1.0, 0.0));

        const Shape &shape() const { return shape_; }
        const Vec3 &normal() const { return normal_; }
        bool is_planar() const { return std::holds_alternative<PlanarRect>(shape_); }
        bool is_spd() const { return std::holds_alternative<SpdGrid>(shape_); }

        const PlanarRect &planar_rect() const; // throws UsageError on SpdGrid
        const SpdGrid &spd_grid() const;       // throws UsageError on PlanarRect

        // Radiating surface area: Lx*Lz, or Mx*Mz*element_side^2
        double area() const;

        // Bounding box sides; for SpdGrid Lx = Mx*d exactly
        double bounding_Lx() const;
        double bounding_Lz() const;

    private:
        ApertureRegion(Shape s, const Vec3 &normal);
        Shape shape_;
        Vec3 normal_;
    };

    // Centers (m_x d, 0, m_z d), m_x in {0, +-1, ..., +-(Mx-1)/2}; x-major ordering
    std::vector<Vec3> spd_element_centers(const ApertureRegion &a);

    // A / d^2
    double occupation_ratio(const ApertureRegion &a);
}

#endif
