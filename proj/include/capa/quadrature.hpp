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

#ifndef capa_quadrature_H
#define capa_quadrature_H

#include "capa/channel.hpp"
#include "capa/geometry.hpp"
#include "capa/two_user_channel.hpp"

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

namespace capa
{
    struct QuadratureSpec
    {
        int panel_order = 16;     // Gauss-Legendre points per axis per panel
        double rel_tol = 1e-8;    // Relative tolerance on the whole integral
        int max_refinements = 12; // Bisection levels allowed beyond the initial mesh

        void validate() const;
    };

    // Physical footprint of one integration panel, as seen by the panel gates.
    // Panels are rectangles in the parameters (u, v) of a patch of the aperture; a patch is either
    // an axis-aligned rectangle or a triangle fanning out from the aperture center.
    struct PanelExtent
    {
        Vec3 center; // image of the parameter-space center
        Vec3 edge_u; // displacement across the panel along u, through the center
        Vec3 edge_v; // displacement across the panel along v, through the center
        double radius = 0.0; // largest distance from the center to a corner
    };

    // Which parameter axes of a panel must be halved before its estimate is trusted
    enum class Split
    {
        none,
        u,
        v,
        both
    };

    Split merge(Split a, Split b);

    using Integrand = std::function<std::complex<double>(const Vec3 &)>;

    // Decides whether a panel is fine enough to enter the refinement loop.
    // Panels that fail are halved along the requested axes, recursively.
    using PanelGate = std::function<Split(const PanelExtent &)>;

    struct IntegrationOptions
    {
        double abs_tol = 0.0; // Convergence once error <= max(rel_tol |I|, abs_tol)
        PanelGate gate;       // Optional initial-mesh gate
    };

    struct IntegrationResult
    {
        std::complex<double> value;
        double error_estimate = 0.0;
        std::size_t panels = 0;
    };

    // Tensor Gauss-Legendre rule on [-1, 1]
    class GaussLegendre
    {
    public:
        explicit GaussLegendre(int n);
        const std::vector<double> &nodes() const { return nodes_; }
        const std::vector<double> &weights() const { return weights_; }
        int order() const { return int(nodes_.size()); }

    private:
        std::vector<double> nodes_, weights_;
    };

    // Integral of f over the aperture (sum of per-element integrals for SpdGrid).
    // Throws ConvergenceError carrying the last two estimates on failure.
    IntegrationResult integrate_detailed(const Integrand &f, const ApertureRegion &a, const QuadratureSpec &q,
                                         const IntegrationOptions &opt = {});

    std::complex<double> integrate(const Integrand &f, const ApertureRegion &a, const QuadratureSpec &q,
                                   const IntegrationOptions &opt = {});

    // a_k = int |g(r, s_k)|^2 dr
    double channel_gain(const Wave &w, const ApertureRegion &a, const UserSource &u, const QuadratureSpec &q = {});

    // rho = int g*(r, s1) g(r, s2) dr. The absolute tolerance is rel_tol * sqrt(a1 a2);
    // pass the gains when already known to skip recomputing them.
    std::complex<double> correlation_rho(const Wave &w, const ApertureRegion &a, const UserSource &u1,
                                         const UserSource &u2, const QuadratureSpec &q = {},
                                         double a1 = -1.0, double a2 = -1.0);

    TwoUserChannel two_user_channel(const Wave &w, const ApertureRegion &a, const UserSource &u1,
                                    const UserSource &u2, const QuadratureSpec &q = {});

    // Closed-form gain of a centered Lx x Lz rectangle in the x-z plane with normal [0, 1, 0].
    // Four signed arctan terms, one per quadrant around the user's foot point.
    double closed_form_gain_planar(double Lx, double Lz, const UserSource &u);

    // mu_oc * a_c
    double spd_gain_approx(double a_c, double mu_oc);

    // Panel gates used by channel_gain / correlation_rho.
    // near_source_gate: panel radius <= ratio * distance from the panel center to s.
    // phase_gate: phase change of k0 (|r - s2| - |r - s1|) along each panel axis <= max_phase,
    //             from a second-order expansion at the panel center.
    PanelGate near_source_gate(const Vec3 &s, double ratio = 0.5);
    PanelGate phase_gate(const Wave &w, const Vec3 &s1, const Vec3 &s2, double max_phase);

    // Largest phase change per panel axis admitted for a given rule order
    double max_panel_phase(int panel_order);
}

#endif
