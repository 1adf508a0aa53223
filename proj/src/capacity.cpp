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

#include "capa/capacity.hpp"
#include "capa/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace capa
{
    namespace
    {
        // Slack on |rho_u| <= 1 absorbed as quadrature noise
        constexpr double rho_u_slack = 1e-9;

        double checked_rho_u_sq(const TwoUserChannel &ch)
        {
            double ru = std::abs(ch.rho_u());
            if (ru > 1.0 + rho_u_slack)
                throw DomainError("|rho_u| = " + std::to_string(ru) + " exceeds 1 (inconsistent channel statistics)");
            ru = std::min(ru, 1.0);
            return ru * ru;
        }

        void require_positive_gains(const TwoUserChannel &ch)
        {
            if (!(ch.a1 > 0.0) || !(ch.a2 > 0.0))
                throw DomainError("two-user rates require positive channel gains");
        }

        // lam^2 a + 2 lam, evaluated as lam (lam a + 2) to limit cancellation
        double penalty_factor(double lam, double a)
        {
            return lam * (lam * a + 2.0);
        }
    }

    double db_to_linear(double db)
    {
        return std::pow(10.0, db / 10.0);
    }

    LinkBudget::LinkBudget(double gamma_bar) : gamma_bar_(gamma_bar)
    {
        if (!(gamma_bar >= 0.0) || !std::isfinite(gamma_bar))
            throw UsageError("LinkBudget: transmit SNR must be finite and >= 0");
    }

    LinkBudget LinkBudget::from_db(double gamma_bar_db)
    {
        return LinkBudget(db_to_linear(gamma_bar_db));
    }

    LinkBudget LinkBudget::from_physical(double current_density_mag, double tx_area, const Wave &w, double sigma2)
    {
        if (!(sigma2 > 0.0))
            throw UsageError("LinkBudget: noise density sigma^2 must be > 0");
        double JA = current_density_mag * tx_area;
        double k_eta = w.k0() * w.eta();
        return LinkBudget(JA * JA * k_eta * k_eta / (4.0 * std::numbers::pi * sigma2));
    }

    double single_user_capacity(const LinkBudget &lb, double a_R)
    {
        if (!(a_R >= 0.0))
            throw UsageError("single_user_capacity: gain must be >= 0");
        return std::log2(1.0 + lb.gamma_bar() * a_R);
    }

    LambdaRoots lambda_star(double gamma_bar_1, double a1)
    {
        if (!(a1 > 0.0))
            throw DomainError("lambda_star: channel gain a1 must be positive");
        if (!(gamma_bar_1 >= 0.0))
            throw UsageError("lambda_star: transmit SNR must be >= 0");
        const double x = gamma_bar_1 * a1;
        const double root = std::sqrt(1.0 + x);
        // 1/sqrt(1+x) - 1 rewritten without cancellation for small x
        const double plus = -x / (root * (1.0 + root)) / a1;
        const double minus = -(1.0 + 1.0 / root) / a1;
        return {plus, minus};
    }

    double whitening_quadratic(double lam, double gamma_bar_1, double a1)
    {
        return 2.0 * lam + gamma_bar_1 + 2.0 * lam * gamma_bar_1 * a1 + lam * lam * a1 +
               gamma_bar_1 * lam * lam * a1 * a1;
    }

    double gamma2_sic(const LinkBudget &lb2, const TwoUserChannel &ch, double lam)
    {
        return lb2.gamma_bar() * (ch.a2 + std::norm(ch.rho) * penalty_factor(lam, ch.a1));
    }

    double gamma2_sic_simplified(const LinkBudget &lb1, const LinkBudget &lb2, const TwoUserChannel &ch)
    {
        const double g1 = lb1.gamma_bar();
        return lb2.gamma_bar() * (ch.a2 - std::norm(ch.rho) * g1 / (1.0 + g1 * ch.a1));
    }

    RatePair rates_for_order(const LinkBudget &lb1, const LinkBudget &lb2, const TwoUserChannel &ch, SicOrder order)
    {
        require_positive_gains(ch);
        checked_rho_u_sq(ch);
        RatePair out;
        out.order = order;
        if (order == SicOrder::order_21)
        {
            double lam = lambda_star(lb1.gamma_bar(), ch.a1).canonical();
            out.R1 = std::log2(1.0 + lb1.gamma_bar() * ch.a1);
            out.R2 = std::log2(1.0 + std::max(0.0, gamma2_sic(lb2, ch, lam)));
        }
        else
        {
            // Same expressions with the user indices exchanged
            TwoUserChannel swapped{ch.a2, ch.a1, std::conj(ch.rho)};
            double lam = lambda_star(lb2.gamma_bar(), ch.a2).canonical();
            out.R2 = std::log2(1.0 + lb2.gamma_bar() * ch.a2);
            out.R1 = std::log2(1.0 + std::max(0.0, gamma2_sic(lb1, swapped, lam)));
        }
        return out;
    }

    double sum_rate_capacity(const LinkBudget &lb1, const LinkBudget &lb2, const TwoUserChannel &ch)
    {
        require_positive_gains(ch);
        const double ru2 = checked_rho_u_sq(ch);
        const double x1 = lb1.gamma_bar() * ch.a1, x2 = lb2.gamma_bar() * ch.a2;
        return std::log2(1.0 + x1 + x2 + x1 * x2 * (1.0 - ru2));
    }

    double sum_rate_upper_bound(const LinkBudget &lb1, const LinkBudget &lb2, const TwoUserChannel &ch)
    {
        return std::log2(1.0 + lb1.gamma_bar() * ch.a1) + std::log2(1.0 + lb2.gamma_bar() * ch.a2);
    }

    double asymptotic_sum_rate(double gamma_bar_1, double gamma_bar_2, double mu_oc)
    {
        if (!(mu_oc > 0.0 && mu_oc <= 1.0))
            throw UsageError("asymptotic_sum_rate: mu_oc must lie in (0, 1]");
        return std::log2(1.0 + mu_oc * gamma_bar_1 / 2.0) + std::log2(1.0 + mu_oc * gamma_bar_2 / 2.0);
    }

    CapacityRegion capacity_region(const LinkBudget &lb1, const LinkBudget &lb2, const TwoUserChannel &ch)
    {
        CapacityRegion reg;
        reg.corner_21 = rates_for_order(lb1, lb2, ch, SicOrder::order_21);
        reg.corner_12 = rates_for_order(lb1, lb2, ch, SicOrder::order_12);
        reg.C1_single = single_user_capacity(lb1, ch.a1);
        reg.C2_single = single_user_capacity(lb2, ch.a2);
        reg.sum_capacity = sum_rate_capacity(lb1, lb2, ch);
        return reg;
    }

    std::vector<std::pair<double, double>> CapacityRegion::segment(int k) const
    {
        if (k < 2)
            throw UsageError("CapacityRegion::segment: need at least 2 points");
        std::vector<std::pair<double, double>> pts;
        pts.reserve(std::size_t(k));
        for (int i = 0; i < k; ++i)
        {
            double t = double(i) / double(k - 1);
            pts.emplace_back((1.0 - t) * corner_21.R1 + t * corner_12.R1,
                             (1.0 - t) * corner_21.R2 + t * corner_12.R2);
        }
        return pts;
    }

    double CapacityRegion::cut_length() const
    {
        return std::hypot(corner_21.R1 - corner_12.R1, corner_21.R2 - corner_12.R2);
    }

    bool CapacityRegion::contains(double R1, double R2, double tol) const
    {
        return R1 >= -tol && R2 >= -tol && R1 <= C1_single + tol && R2 <= C2_single + tol &&
               R1 + R2 <= sum_capacity + tol;
    }
}
