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

#include "capa/quadrature.hpp"
#include "capa/errors.hpp"

#include <boost/math/special_functions/legendre.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <queue>
#include <string>
#include <utility>

namespace capa
{
    namespace
    {
        using cd = std::complex<double>;
        using Vec2 = Eigen::Vector2d;

        // Hard cap on the number of leaf panels, initial mesh included
        constexpr std::size_t panel_cap = std::size_t(1) << 24;

        // Gate splitting stops after this many halvings of one axis
        constexpr int max_gate_level = 60;

        // Maps parameters (u, v) onto the aperture plane.
        //   rectangle: (x, z) = (u, v)
        //   cone:      (x, z) = u (E0 + v (E1 - E0)), u, v in [0, 1]; a triangle with apex at the origin.
        // Far from the center, the phase of a two-user product varies mostly with the angle around the
        // center, i.e. along v, so the far field needs few panels along u.
        struct Patch
        {
            bool cone = false;
            Vec2 E0 = Vec2::Zero(), E1 = Vec2::Zero();
            double jac = 1.0; // |E0 x E1| for cones

            Vec3 map(double u, double v) const
            {
                if (!cone)
                    return Vec3(u, 0.0, v);
                Vec2 p = u * (E0 + v * (E1 - E0));
                return Vec3(p.x(), 0.0, p.y());
            }

            double jacobian(double u) const
            {
                return cone ? u * jac : 1.0;
            }
        };

        struct Panel
        {
            double u0, u1, v0, v1;
            std::size_t patch;
        };

        struct Leaf
        {
            Panel panel;
            int depth;
            cd value;
            double err;
            bool active;
        };

        PanelExtent extent(const Patch &pt, const Panel &p)
        {
            const double uc = 0.5 * (p.u0 + p.u1), vc = 0.5 * (p.v0 + p.v1);
            PanelExtent e;
            e.center = pt.map(uc, vc);
            e.edge_u = pt.map(p.u1, vc) - pt.map(p.u0, vc);
            e.edge_v = pt.map(uc, p.v1) - pt.map(uc, p.v0);
            for (const Vec3 &c : {pt.map(p.u0, p.v0), pt.map(p.u0, p.v1), pt.map(p.u1, p.v0), pt.map(p.u1, p.v1)})
                e.radius = std::max(e.radius, (c - e.center).norm());
            return e;
        }

        cd panel_sum(const Integrand &f, const GaussLegendre &rule, const Patch &pt, const Panel &p)
        {
            const double cu = 0.5 * (p.u0 + p.u1), hu = 0.5 * (p.u1 - p.u0);
            const double cv = 0.5 * (p.v0 + p.v1), hv = 0.5 * (p.v1 - p.v0);
            const auto &t = rule.nodes();
            const auto &w = rule.weights();
            cd acc = 0.0;
            for (int i = 0; i < rule.order(); ++i)
            {
                const double u = cu + hu * t[i];
                cd row = 0.0;
                for (int k = 0; k < rule.order(); ++k)
                    row += w[k] * f(pt.map(u, cv + hv * t[k]));
                acc += (w[i] * pt.jacobian(u)) * row;
            }
            return acc * (hu * hv);
        }

        cd pairwise_sum(const std::vector<cd> &v, std::size_t lo, std::size_t hi)
        {
            if (hi - lo <= 8)
            {
                cd s = 0.0;
                for (std::size_t i = lo; i < hi; ++i)
                    s += v[i];
                return s;
            }
            std::size_t mid = lo + (hi - lo) / 2;
            return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
        }

        // Patches and their full parameter ranges
        void base_mesh(const ApertureRegion &a, std::vector<Patch> &patches, std::vector<Panel> &panels)
        {
            if (a.is_planar())
            {
                // Four triangles fanning out from the center, one per rectangle side
                const auto &rect = a.planar_rect();
                const double hx = 0.5 * rect.Lx, hz = 0.5 * rect.Lz;
                const Vec2 corners[4] = {Vec2(hx, -hz), Vec2(hx, hz), Vec2(-hx, hz), Vec2(-hx, -hz)};
                for (int k = 0; k < 4; ++k)
                {
                    Patch pt;
                    pt.cone = true;
                    pt.E0 = corners[k];
                    pt.E1 = corners[(k + 1) % 4];
                    pt.jac = std::abs(pt.E0.x() * pt.E1.y() - pt.E0.y() * pt.E1.x());
                    patches.push_back(pt);
                    panels.push_back({0.0, 1.0, 0.0, 1.0, patches.size() - 1});
                }
            }
            else
            {
                patches.push_back(Patch{});
                const double half = 0.5 * a.spd_grid().element_side;
                for (const auto &c : spd_element_centers(a))
                    panels.push_back({c.x() - half, c.x() + half, c.z() - half, c.z() + half, 0});
            }
        }

        std::array<Panel, 4> quarter(const Panel &p)
        {
            const double um = 0.5 * (p.u0 + p.u1), vm = 0.5 * (p.v0 + p.v1);
            return {Panel{p.u0, um, p.v0, vm, p.patch}, Panel{p.u0, um, vm, p.v1, p.patch},
                    Panel{um, p.u1, p.v0, vm, p.patch}, Panel{um, p.u1, vm, p.v1, p.patch}};
        }

        // Recursively halve panels along the axes requested by the gate
        void gate_split(const Panel &p, const std::vector<Patch> &patches, const PanelGate &gate, int level_u,
                        int level_v, std::vector<Panel> &out)
        {
            Split s = gate ? gate(extent(patches[p.patch], p)) : Split::none;
            bool su = (s == Split::u || s == Split::both) && level_u < max_gate_level;
            bool sv = (s == Split::v || s == Split::both) && level_v < max_gate_level;
            if (!su && !sv)
            {
                if (out.size() >= panel_cap)
                    throw ConvergenceError("quadrature: initial mesh exceeds the panel cap", cd(NAN, NAN), cd(NAN, NAN));
                out.push_back(p);
                return;
            }
            const double um = 0.5 * (p.u0 + p.u1), vm = 0.5 * (p.v0 + p.v1);
            if (su && sv)
            {
                for (const auto &c : quarter(p))
                    gate_split(c, patches, gate, level_u + 1, level_v + 1, out);
            }
            else if (su)
            {
                gate_split({p.u0, um, p.v0, p.v1, p.patch}, patches, gate, level_u + 1, level_v, out);
                gate_split({um, p.u1, p.v0, p.v1, p.patch}, patches, gate, level_u + 1, level_v, out);
            }
            else
            {
                gate_split({p.u0, p.u1, p.v0, vm, p.patch}, patches, gate, level_u, level_v + 1, out);
                gate_split({p.u0, p.u1, vm, p.v1, p.patch}, patches, gate, level_u, level_v + 1, out);
            }
        }

        // Split request from per-axis excess flags
        Split split_of(bool u, bool v)
        {
            return u ? (v ? Split::both : Split::u) : (v ? Split::v : Split::none);
        }
    }

    Split merge(Split a, Split b)
    {
        auto has_u = [](Split s)
        { return s == Split::u || s == Split::both; };
        auto has_v = [](Split s)
        { return s == Split::v || s == Split::both; };
        return split_of(has_u(a) || has_u(b), has_v(a) || has_v(b));
    }

    void QuadratureSpec::validate() const
    {
        if (panel_order < 2)
            throw UsageError("QuadratureSpec: panel_order must be >= 2, got " + std::to_string(panel_order));
        if (!(rel_tol > 0.0))
            throw UsageError("QuadratureSpec: rel_tol must be > 0");
        if (max_refinements < 0)
            throw UsageError("QuadratureSpec: max_refinements must be >= 0");
    }

    GaussLegendre::GaussLegendre(int n)
    {
        if (n < 1)
            throw UsageError("GaussLegendre: order must be >= 1");
        // Boost returns the non-negative zeros in ascending order
        auto zeros = boost::math::legendre_p_zeros<double>(n);
        auto weight = [n](double x)
        {
            double dp = boost::math::legendre_p_prime<double>(n, x);
            return 2.0 / ((1.0 - x * x) * dp * dp);
        };
        for (auto it = zeros.rbegin(); it != zeros.rend(); ++it)
        {
            if (*it == 0.0)
                continue;
            nodes_.push_back(-*it);
            weights_.push_back(weight(*it));
        }
        for (double x : zeros)
        {
            nodes_.push_back(x);
            weights_.push_back(weight(x));
        }
    }

    IntegrationResult integrate_detailed(const Integrand &f, const ApertureRegion &a, const QuadratureSpec &q,
                                         const IntegrationOptions &opt)
    {
        q.validate();
        // The embedded estimate compares against a rule of 3/4 the order; it resolves nearly the same
        // oscillation as the main rule, so oscillatory panels are not over-refined.
        const GaussLegendre hi(q.panel_order);
        const GaussLegendre lo(std::max(1, (3 * q.panel_order) / 4));

        std::vector<Patch> patches;
        std::vector<Panel> base, mesh;
        base_mesh(a, patches, base);
        for (const auto &p : base)
            gate_split(p, patches, opt.gate, 0, 0, mesh);

        std::vector<Leaf> leaves;
        leaves.reserve(mesh.size());
        auto make_leaf = [&](const Panel &p, int depth)
        {
            const Patch &pt = patches[p.patch];
            cd v = panel_sum(f, hi, pt, p);
            cd c = panel_sum(f, lo, pt, p);
            return Leaf{p, depth, v, std::abs(v - c), true};
        };

        using Entry = std::pair<double, std::size_t>;
        std::priority_queue<Entry> heap;
        for (const auto &p : mesh)
        {
            leaves.push_back(make_leaf(p, 0));
            heap.emplace(leaves.back().err, leaves.size() - 1);
        }

        auto exact_sums = [&]()
        {
            std::vector<cd> vals;
            vals.reserve(leaves.size());
            double err = 0.0;
            for (const auto &l : leaves)
                if (l.active)
                {
                    vals.push_back(l.value);
                    err += l.err;
                }
            return std::pair<cd, double>(pairwise_sum(vals, 0, vals.size()), err);
        };

        auto tolerance = [&](cd total)
        { return std::max(q.rel_tol * std::abs(total), opt.abs_tol); };

        auto [total, err] = exact_sums();
        cd previous = total;
        std::size_t active = leaves.size();

        while (true)
        {
            if (err <= tolerance(total))
            {
                auto exact = exact_sums();
                total = exact.first;
                err = exact.second;
                if (err <= tolerance(total))
                    break;
            }
            auto [top_err, idx] = heap.top();
            heap.pop();
            if (leaves[idx].depth >= q.max_refinements)
                throw ConvergenceError("quadrature: no convergence within " + std::to_string(q.max_refinements) +
                                           " refinements (error estimate " + std::to_string(err) + ")",
                                       previous, total);
            if (active + 3 > panel_cap)
                throw ConvergenceError("quadrature: panel cap exceeded", previous, total);

            leaves[idx].active = false;
            const Leaf parent = leaves[idx];
            cd children = 0.0;
            double child_err = 0.0;
            for (const auto &c : quarter(parent.panel))
            {
                leaves.push_back(make_leaf(c, parent.depth + 1));
                children += leaves.back().value;
                child_err += leaves.back().err;
                heap.emplace(leaves.back().err, leaves.size() - 1);
            }
            active += 3;
            previous = total;
            total += children - parent.value;
            err = std::max(0.0, err + child_err - parent.err);
        }

        return IntegrationResult{total, err, active};
    }

    cd integrate(const Integrand &f, const ApertureRegion &a, const QuadratureSpec &q, const IntegrationOptions &opt)
    {
        return integrate_detailed(f, a, q, opt).value;
    }

    // ------------------------------------------------------------------------

    PanelGate near_source_gate(const Vec3 &s, double ratio)
    {
        return [s, ratio](const PanelExtent &e)
        {
            if (std::abs(s.y()) <= 1e-12 * s.norm())
                return Split::none; // in-plane source: the projected-aperture factor vanishes identically
            if (e.radius <= ratio * (e.center - s).norm())
                return Split::none;
            // Halve the longer axis; both when the panel is roughly square
            const double lu = e.edge_u.norm(), lv = e.edge_v.norm();
            if (lu > 2.0 * lv)
                return Split::u;
            if (lv > 2.0 * lu)
                return Split::v;
            return Split::both;
        };
    }

    PanelGate phase_gate(const Wave &w, const Vec3 &s1, const Vec3 &s2, double max_phase)
    {
        const double k0 = w.k0();
        return [=](const PanelExtent &e)
        {
            const Vec3 d1 = e.center - s1, d2 = e.center - s2;
            const double D1 = d1.norm(), D2 = d2.norm();
            const Vec3 u1 = d1 / D1, u2 = d2 / D2;
            // Gradient and Hessian of |r - s2| - |r - s1|; the Hessian of |r - s| is (I - u u^T) / |r - s|
            const Vec3 grad = u2 - u1;
            const Eigen::Matrix3d H = (Eigen::Matrix3d::Identity() - u2 * u2.transpose()) / D2 -
                                      (Eigen::Matrix3d::Identity() - u1 * u1.transpose()) / D1;
            auto change = [&](const Vec3 &edge)
            { return k0 * (std::abs(grad.dot(edge)) + 0.25 * std::abs(edge.dot(H * edge))); };
            return split_of(change(e.edge_u) > max_phase, change(e.edge_v) > max_phase);
        };
    }

    double max_panel_phase(int panel_order)
    {
        return 0.25 * std::numbers::pi * double(panel_order);
    }

    double channel_gain(const Wave &w, const ApertureRegion &a, const UserSource &u, const QuadratureSpec &q)
    {
        const Vec3 s = user_position(u);
        Integrand f = [&](const Vec3 &r)
        { return cd(kernel_g_norm_sq(w, a, r, s), 0.0); };
        IntegrationOptions opt;
        opt.gate = near_source_gate(s);
        return integrate(f, a, q, opt).real();
    }

    cd correlation_rho(const Wave &w, const ApertureRegion &a, const UserSource &u1, const UserSource &u2,
                       const QuadratureSpec &q, double a1, double a2)
    {
        if (a1 < 0.0)
            a1 = channel_gain(w, a, u1, q);
        if (a2 < 0.0)
            a2 = channel_gain(w, a, u2, q);
        const Vec3 s1 = user_position(u1), s2 = user_position(u2);
        Integrand f = [&](const Vec3 &r)
        { return kernel_g_product(w, a, r, s1, s2); };

        IntegrationOptions opt;
        opt.abs_tol = q.rel_tol * std::sqrt(a1 * a2);
        auto near1 = near_source_gate(s1), near2 = near_source_gate(s2);
        auto phase = phase_gate(w, s1, s2, max_panel_phase(q.panel_order));
        opt.gate = [=](const PanelExtent &e)
        { return merge(merge(near1(e), near2(e)), phase(e)); };
        return integrate(f, a, q, opt);
    }

    TwoUserChannel two_user_channel(const Wave &w, const ApertureRegion &a, const UserSource &u1,
                                    const UserSource &u2, const QuadratureSpec &q)
    {
        TwoUserChannel ch;
        ch.a1 = channel_gain(w, a, u1, q);
        ch.a2 = channel_gain(w, a, u2, q);
        ch.rho = correlation_rho(w, a, u1, u2, q, ch.a1, ch.a2);
        return ch;
    }

    double closed_form_gain_planar(double Lx, double Lz, const UserSource &u)
    {
        const double Psi = u.Psi();
        if (!(Psi > 0.0))
            throw DomainError("closed_form_gain_planar: user lies in or behind the aperture plane (Psi <= 0)");
        if (!(Lx >= 0.0) || !(Lz >= 0.0))
            throw UsageError("closed_form_gain_planar: aperture sides must be non-negative");
        const double hx = Lx / (2.0 * u.r()), hz = Lz / (2.0 * u.r());
        const double xs[2] = {hx + u.Phi(), hx - u.Phi()};
        const double zs[2] = {hz + u.Theta(), hz - u.Theta()};
        double sum = 0.0;
        for (double x : xs)
            for (double z : zs)
                sum += std::atan((x * z / Psi) / std::sqrt(Psi * Psi + x * x + z * z));
        return sum / (4.0 * std::numbers::pi);
    }

    double spd_gain_approx(double a_c, double mu_oc)
    {
        if (!(a_c >= 0.0))
            throw UsageError("spd_gain_approx: a_c must be >= 0");
        if (!(mu_oc > 0.0 && mu_oc <= 1.0))
            throw UsageError("spd_gain_approx: mu_oc must lie in (0, 1]");
        return mu_oc * a_c;
    }
}
