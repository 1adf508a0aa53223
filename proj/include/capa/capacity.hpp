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

#ifndef capa_capacity_H
#define capa_capacity_H

#include "capa/channel.hpp"
#include "capa/two_user_channel.hpp"

#include <utility>
#include <vector>

namespace capa
{
    // 10^(dB/10)
    double db_to_linear(double db);

    // Dimensionless transmit SNR |J|^2 |A|^2 k0^2 eta^2 / (4 pi sigma^2)
    class LinkBudget
    {
    public:
        explicit LinkBudget(double gamma_bar);

        static LinkBudget from_db(double gamma_bar_db);
        static LinkBudget from_physical(double current_density_mag, double tx_area, const Wave &w, double sigma2);

        double gamma_bar() const { return gamma_bar_; }

    private:
        double gamma_bar_;
    };

    // order_12 decodes user 1 first (user 2 is then interference free), order_21 the reverse
    enum class SicOrder
    {
        order_12,
        order_21
    };

    struct RatePair
    {
        double R1 = 0.0; // bits/s/Hz
        double R2 = 0.0; // bits/s/Hz
        SicOrder order = SicOrder::order_21;

        double sum() const { return R1 + R2; }
    };

    // Pentagon {R1 <= C1, R2 <= C2, R1 + R2 <= C}; the two SIC corners span its dominant face
    struct CapacityRegion
    {
        RatePair corner_21;    // (C1, R2 under 2->1)
        RatePair corner_12;    // (R1 under 1->2, C2)
        double C1_single = 0.0; // log2(1 + gamma1 a1)
        double C2_single = 0.0; // log2(1 + gamma2 a2)
        double sum_capacity = 0.0;

        // Time-sharing points from corner_21 to corner_12, both ends included (k >= 2)
        std::vector<std::pair<double, double>> segment(int k) const;

        // Length of the dominant face; 0 when the region is a rectangle
        double cut_length() const;

        bool contains(double R1, double R2, double tol = 1e-12) const;
    };

    // log2(1 + gamma_bar a_R)
    double single_user_capacity(const LinkBudget &lb, double a_R);

    // Roots of 2 l + g + 2 l g a + l^2 a + g l^2 a^2 = 0, i.e. -1/a +- 1/(a sqrt(1 + g a))
    struct LambdaRoots
    {
        double plus;  // in (-1/a, 0]; the canonical whitening parameter
        double minus; // below -1/a

        double canonical() const { return plus; }
    };

    LambdaRoots lambda_star(double gamma_bar_1, double a1);

    // Left-hand side of the whitening quadratic; zero at both lambda_star roots
    double whitening_quadratic(double lam, double gamma_bar_1, double a1);

    // SNR of the whitened MRC branch decoding user 2 first:
    //   gamma_bar_2 (a2 + |rho|^2 (lam^2 a1 + 2 lam))
    double gamma2_sic(const LinkBudget &lb2, const TwoUserChannel &ch, double lam);

    // Same SNR via the lambda-free form gamma_bar_2 (a2 - |rho|^2 gamma_bar_1 / (1 + gamma_bar_1 a1))
    double gamma2_sic_simplified(const LinkBudget &lb1, const LinkBudget &lb2, const TwoUserChannel &ch);

    // Per-user rates of the given SIC order, routed through the whitening parameter
    RatePair rates_for_order(const LinkBudget &lb1, const LinkBudget &lb2, const TwoUserChannel &ch, SicOrder order);

    // log2(1 + g1 a1 + g2 a2 + g1 g2 a1 a2 (1 - |rho_u|^2)).
    // |rho_u| up to 1 + 1e-9 is clamped to 1; anything larger throws DomainError.
    double sum_rate_capacity(const LinkBudget &lb1, const LinkBudget &lb2, const TwoUserChannel &ch);

    // log2(1 + g1 a1) + log2(1 + g2 a2): the interference-free bound
    double sum_rate_upper_bound(const LinkBudget &lb1, const LinkBudget &lb2, const TwoUserChannel &ch);

    // Large-aperture limit log2(1 + mu g1 / 2) + log2(1 + mu g2 / 2); mu = 1 for a continuous aperture
    double asymptotic_sum_rate(double gamma_bar_1, double gamma_bar_2, double mu_oc = 1.0);

    CapacityRegion capacity_region(const LinkBudget &lb1, const LinkBudget &lb2, const TwoUserChannel &ch);
}

#endif
