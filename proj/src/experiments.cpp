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

#include "capa/experiments.hpp"
#include "capa/operator_lab.hpp"
#include "capa/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <locale>
#include <numbers>
#include <random>
#include <sstream>

namespace capa
{
    namespace
    {
        constexpr double pi = std::numbers::pi;

        // Identity tolerance of a result row (bits)
        constexpr double row_tol = 1e-9;

        void require_two_users(const ExperimentConfig &cfg, const char *cmd)
        {
            if (cfg.users.size() != 2)
                throw UsageError(std::string(cmd) + " needs two users, the configuration has " +
                                 std::to_string(cfg.users.size()));
        }

        // Stream prepared for the CSV conventions
        void prepare(std::ostream &os)
        {
            os.imbue(std::locale::classic());
            os << std::setprecision(12);
        }

        VerifyCheck make_check(const std::string &suite, const std::string &check, double value, double lower,
                               double upper)
        {
            bool pass = std::isfinite(value) && value >= lower && value <= upper;
            return VerifyCheck{suite, check, value, lower, upper, pass};
        }

        constexpr double inf = std::numeric_limits<double>::infinity();

        // Random user in front of the aperture (Psi >= 0.05)
        UserSource random_user(std::mt19937_64 &gen)
        {
            std::uniform_real_distribution<double> r(5.0, 30.0), ang(0.25, pi - 0.25);
            while (true)
            {
                UserSource u(r(gen), ang(gen), ang(gen));
                if (u.Psi() >= 0.05)
                    return u;
            }
        }

        Field random_field(std::size_t n, std::mt19937_64 &gen)
        {
            std::normal_distribution<double> nd(0.0, 1.0);
            Field f(static_cast<Eigen::Index>(n));
            for (Eigen::Index i = 0; i < f.size(); ++i)
            {
                double re = nd(gen);
                double im = nd(gen);
                f[i] = cd(re, im);
            }
            return f;
        }
    }

    // ------------------------------------------------------------------ rows

    ResultRow make_result_row(const std::string &variant, double x, const LinkBudget &lb1, const LinkBudget &lb2,
                              const TwoUserChannel &ch)
    {
        ResultRow row;
        row.variant = variant;
        row.x = x;
        row.a1 = ch.a1;
        row.a2 = ch.a2;
        row.rho_u = std::min(1.0, std::abs(ch.rho_u()));
        RatePair p12 = rates_for_order(lb1, lb2, ch, SicOrder::order_12);
        RatePair p21 = rates_for_order(lb1, lb2, ch, SicOrder::order_21);
        row.R1_12 = p12.R1;
        row.R2_12 = p12.R2;
        row.R1_21 = p21.R1;
        row.R2_21 = p21.R2;
        row.C = sum_rate_capacity(lb1, lb2, ch);
        row.C_upper = sum_rate_upper_bound(lb1, lb2, ch);
        return row;
    }

    void check_result_row(const ResultRow &row)
    {
        std::ostringstream why;
        why << std::setprecision(17);
        if (!(row.C <= row.C_upper + row_tol))
            why << "C = " << row.C << " exceeds C_upper = " << row.C_upper << "; ";
        if (!(std::abs(row.R1_12 + row.R2_12 - row.C) <= row_tol))
            why << "R1_12 + R2_12 = " << row.R1_12 + row.R2_12 << " differs from C = " << row.C << "; ";
        if (!(std::abs(row.R1_21 + row.R2_21 - row.C) <= row_tol))
            why << "R1_21 + R2_21 = " << row.R1_21 + row.R2_21 << " differs from C = " << row.C << "; ";
        if (!(row.R1_12 >= 0 && row.R2_12 >= 0 && row.R1_21 >= 0 && row.R2_21 >= 0))
            why << "negative rate; ";
        std::string s = why.str();
        if (!s.empty())
        {
            std::ostringstream msg;
            msg << std::setprecision(12) << "result row (" << row.variant << ", x = " << row.x << ") violates: " << s;
            throw InvariantViolation(msg.str());
        }
    }

    // ------------------------------------------------------------------ apertures

    ApertureRegion capa_square(double L)
    {
        return ApertureRegion::planar(L, L);
    }

    ApertureRegion spd_square_for_side(const ExperimentConfig &cfg, double L)
    {
        const double d = cfg.spacing();
        const int M = spd_count_for_side(L, d);
        return ApertureRegion::spd(M, M, d, cfg.element_side());
    }

    ApertureRegion spd_occupancy(const ExperimentConfig &cfg, double mu_oc)
    {
        if (!(mu_oc > 0.0 && mu_oc <= 1.0))
            throw UsageError("occupation ratio must lie in (0, 1]");
        const double d = cfg.spacing();
        const int M = cfg.occupancy_M > 0 ? cfg.occupancy_M : spd_count_for_side(cfg.Lx, d);
        const double side = mu_oc == 1.0 ? d : d * std::sqrt(mu_oc);
        return ApertureRegion::spd(M, M, d, side);
    }

    LinkBudget link_budget(const UserConfig &u)
    {
        return LinkBudget::from_db(u.gamma_db);
    }

    // ------------------------------------------------------------------ commands

    std::vector<GainRow> run_gain(const ExperimentConfig &cfg)
    {
        cfg.validate();
        const Wave w = cfg.wave();
        std::vector<GainRow> rows;
        auto add = [&](const std::string &variant, double x, int user, const ApertureRegion &a, double closed)
        {
            GainRow row{variant, x, user, 0.0, closed, 0.0, "ok"};
            try
            {
                row.quadrature = channel_gain(w, a, cfg.users[std::size_t(user - 1)].source(), cfg.quadrature);
                row.rel_gap = std::abs(row.quadrature - closed) / closed;
            }
            catch (const ConvergenceError &)
            {
                row.quadrature = std::numeric_limits<double>::quiet_NaN();
                row.rel_gap = std::numeric_limits<double>::quiet_NaN();
                row.status = "convergence_failure";
            }
            rows.push_back(row);
        };
        for (double L : cfg.sweep_L)
        {
            for (int k = 1; k <= int(cfg.users.size()); ++k)
                add("capa", L, k, capa_square(L), closed_form_gain_planar(L, L, cfg.users[std::size_t(k - 1)].source()));
            if (cfg.include_spd)
            {
                ApertureRegion a = spd_square_for_side(cfg, L);
                const double side = a.bounding_Lx();
                for (int k = 1; k <= int(cfg.users.size()); ++k)
                {
                    double ac = closed_form_gain_planar(side, side, cfg.users[std::size_t(k - 1)].source());
                    add("spd", side, k, a, spd_gain_approx(ac, occupation_ratio(a)));
                }
            }
        }
        return rows;
    }

    std::vector<ResultRow> run_sweep_aperture(const ExperimentConfig &cfg)
    {
        cfg.validate();
        require_two_users(cfg, "sweep-aperture");
        const Wave w = cfg.wave();
        const UserSource u1 = cfg.users[0].source(), u2 = cfg.users[1].source();
        const LinkBudget lb1 = link_budget(cfg.users[0]), lb2 = link_budget(cfg.users[1]);
        std::vector<ResultRow> rows;
        for (double L : cfg.sweep_L)
        {
            rows.push_back(make_result_row("capa", L, lb1, lb2, two_user_channel(w, capa_square(L), u1, u2, cfg.quadrature)));
            check_result_row(rows.back());
        }
        if (cfg.include_spd)
            for (double L : cfg.sweep_L)
            {
                ApertureRegion a = spd_square_for_side(cfg, L);
                rows.push_back(make_result_row("spd", a.bounding_Lx(), lb1, lb2,
                                               two_user_channel(w, a, u1, u2, cfg.quadrature)));
                check_result_row(rows.back());
            }
        return rows;
    }

    std::vector<ResultRow> run_sweep_occupancy(const ExperimentConfig &cfg)
    {
        cfg.validate();
        require_two_users(cfg, "sweep-occupancy");
        const Wave w = cfg.wave();
        const UserSource u1 = cfg.users[0].source(), u2 = cfg.users[1].source();
        const LinkBudget lb1 = link_budget(cfg.users[0]), lb2 = link_budget(cfg.users[1]);
        std::vector<ResultRow> rows;

        // Continuous reference covering the same bounding square
        const ApertureRegion first = spd_occupancy(cfg, cfg.sweep_mu.front());
        const double side = first.bounding_Lx();
        rows.push_back(make_result_row("capa", 1.0, lb1, lb2,
                                       two_user_channel(w, capa_square(side), u1, u2, cfg.quadrature)));
        check_result_row(rows.back());

        for (double mu : cfg.sweep_mu)
        {
            rows.push_back(make_result_row("spd", mu, lb1, lb2,
                                           two_user_channel(w, spd_occupancy(cfg, mu), u1, u2, cfg.quadrature)));
            check_result_row(rows.back());
        }
        return rows;
    }

    std::vector<RegionPoint> run_region(const ExperimentConfig &cfg)
    {
        cfg.validate();
        require_two_users(cfg, "region");
        const Wave w = cfg.wave();
        const UserSource u1 = cfg.users[0].source(), u2 = cfg.users[1].source();
        const LinkBudget lb1 = link_budget(cfg.users[0]), lb2 = link_budget(cfg.users[1]);
        std::vector<RegionPoint> pts;

        auto emit = [&](const std::string &variant, double x, const TwoUserChannel &ch)
        {
            CapacityRegion reg = capacity_region(lb1, lb2, ch);
            if (std::abs(reg.corner_12.sum() - reg.corner_21.sum()) > row_tol)
                throw InvariantViolation("region corners have different sum rates");
            pts.push_back({variant, x, "origin", 0.0, 0.0});
            pts.push_back({variant, x, "single_user_1", reg.C1_single, 0.0});
            auto seg = reg.segment(cfg.region_points);
            pts.push_back({variant, x, "corner_21", reg.corner_21.R1, reg.corner_21.R2});
            for (std::size_t i = 1; i + 1 < seg.size(); ++i)
                pts.push_back({variant, x, "segment", seg[i].first, seg[i].second});
            pts.push_back({variant, x, "corner_12", reg.corner_12.R1, reg.corner_12.R2});
            pts.push_back({variant, x, "single_user_2", 0.0, reg.C2_single});
        };

        for (double L : cfg.sweep_L)
        {
            emit("capa", L, two_user_channel(w, capa_square(L), u1, u2, cfg.quadrature));
            if (cfg.include_spd)
            {
                ApertureRegion a = spd_square_for_side(cfg, L);
                emit("spd", a.bounding_Lx(), two_user_channel(w, a, u1, u2, cfg.quadrature));
            }
        }
        return pts;
    }

    // ------------------------------------------------------------------ verification

    std::vector<VerifyCheck> run_verify(const ExperimentConfig &cfg)
    {
        cfg.validate();
        require_two_users(cfg, "verify");
        const auto &o = cfg.oracle;
        const Wave w = cfg.wave();
        const UserSource u1 = cfg.users[0].source(), u2 = cfg.users[1].source();
        const LinkBudget lb1 = link_budget(cfg.users[0]), lb2 = link_budget(cfg.users[1]);
        const ApertureRegion ap = capa_square(o.L);
        const DiscretizedAperture d = discretize(ap, o.grid);
        const Field g1 = sample_kernel_g(d, w, ap, u1), g2 = sample_kernel_g(d, w, ap, u2);
        const TwoUserChannel grid_ch = grid_two_user_channel(d, g1, g2);
        const double k_eta_sq = w.k0() * w.k0() * w.eta() * w.eta();
        std::vector<VerifyCheck> out;

        // Noise statistic: projected noise is CN(0, sigma2 * cell_area * sum |v|^2)
        {
            const std::string S = "noise_statistic";
            const Field v = h_over_g(w) * g1;
            NoiseModel nm{o.sigma2, stream_seed(o.seed, 1)};
            ProjectedNoiseStats st = projected_noise_statistics(d, v, nm, o.trials);
            const double expect = o.sigma2 * grid_norm_sq(d, v);
            const double a_quad = channel_gain(w, ap, u1, cfg.quadrature);
            const double expect_cont = o.sigma2 * a_quad * k_eta_sq / (4.0 * pi);
            out.push_back(make_check(S, "variance_rel_err", std::abs(st.variance - expect) / expect, 0.0, 0.03));
            out.push_back(make_check(S, "variance_vs_gain_rel_err", std::abs(st.variance - expect_cont) / expect_cont, 0.0, 0.03));
            out.push_back(make_check(S, "kurtosis_real", st.kurtosis_real, 2.8, 3.2));
            out.push_back(make_check(S, "kurtosis_imag", st.kurtosis_imag, 2.8, 3.2));
            out.push_back(make_check(S, "mean_in_std_errors", std::abs(st.mean) / std::sqrt(expect / double(o.trials)), 0.0, 4.0));
        }

        // Inverse kernel: K_bar(K f) = f
        {
            const std::string S = "inverse_kernel";
            std::mt19937_64 gen(stream_seed(o.seed, 2));
            for (int branch = 0; branch < 2; ++branch)
            {
                LambdaRoots roots = lambda_star(lb1.gamma_bar(), grid_ch.a1);
                double lam = branch == 0 ? roots.plus : roots.minus;
                KernelMatrix K = whitening_kernel(d, g1, lam), Kb = inverse_whitening_kernel(d, g1, lam);
                double worst = 0.0;
                for (int t = 0; t < o.functions; ++t)
                {
                    Field f = random_field(d.size(), gen);
                    worst = std::max(worst, (Kb.apply(K.apply(f)) - f).norm() / f.norm());
                }
                out.push_back(make_check(S, branch == 0 ? "max_rel_residual_plus" : "max_rel_residual_minus", worst, 0.0, 1e-8));
            }
        }

        // Whitening: K_Z R_ZZ K_Z^H is sigma2 times the delta
        {
            const std::string S = "whitening";
            std::mt19937_64 gen(stream_seed(o.seed, 3));
            double worst[2] = {0.0, 0.0};
            for (int gidx = 0; gidx <= o.geometries; ++gidx)
            {
                // geometry 0 is the configured one; the rest are random
                UserSource ua = gidx == 0 ? u1 : random_user(gen);
                double gamma1 = gidx == 0 ? lb1.gamma_bar() : db_to_linear(std::uniform_real_distribution<double>(0.0, 40.0)(gen));
                if (gidx > 0)
                    random_user(gen); // second user of the random pair; only the whitened user enters the kernels
                const Field ga = gidx == 0 ? g1 : sample_kernel_g(d, w, ap, ua);
                const double a_grid = grid_norm_sq(d, ga);
                KernelMatrix R = autocorrelation_Rzz(d, ga, gamma1, o.sigma2);
                LambdaRoots roots = lambda_star(gamma1, a_grid);
                for (int branch = 0; branch < 2; ++branch)
                {
                    double lam = (branch == 0 ? roots.plus : roots.minus) * o.lambda_star_scale;
                    worst[branch] = std::max(worst[branch], whitening_residual(whitening_kernel(d, ga, lam), R));
                }
            }
            out.push_back(make_check(S, "offdiag_residual_plus", worst[0], 0.0, 1e-6));
            out.push_back(make_check(S, "offdiag_residual_minus", worst[1], 0.0, 1e-6));
        }

        // Whitened SNR: grid h_bar against the closed form on quadrature statistics
        {
            const std::string S = "whitened_snr";
            TwoUserChannel qch = two_user_channel(w, ap, u1, u2, cfg.quadrature);
            double lam_q = lambda_star(lb1.gamma_bar(), qch.a1).canonical();
            double closed = gamma2_sic(lb2, qch, lam_q);
            double lam_g = lambda_star(lb1.gamma_bar(), grid_ch.a1).canonical();
            Field hbar = whitened_channel_hbar(whitening_kernel(d, g1, lam_g), h_over_g(w) * g2);
            double disc = whitened_mrc_snr(d, w, lb2, hbar);
            out.push_back(make_check(S, "gamma2_rel_err", std::abs(disc - closed) / closed, 0.0, 0.01));
            Field analytic = h_over_g(w) * (g2 + (lam_g * grid_ch.rho) * g1);
            out.push_back(make_check(S, "hbar_form_rel_err", (hbar - analytic).norm() / hbar.norm(), 0.0, 1e-10));
            double simplified = gamma2_sic_simplified(lb1, lb2, qch);
            out.push_back(make_check(S, "closed_forms_rel_diff", std::abs(simplified - closed) / closed, 0.0, 1e-10));
        }

        // Sum rate and SIC order on random statistics
        {
            const std::string S = "sum_rate";
            std::mt19937_64 gen(stream_seed(o.seed, 4));
            std::uniform_real_distribution<double> db(-10.0, 50.0), loga(-6.0, std::log10(0.5)), unit(0.0, 1.0);
            double order_gap = 0.0, cap_gap = 0.0, above_upper = -inf, root_gap = 0.0, penalty = -inf;
            for (std::size_t t = 0; t < o.tuples; ++t)
            {
                LinkBudget b1 = LinkBudget::from_db(db(gen)), b2 = LinkBudget::from_db(db(gen));
                TwoUserChannel ch;
                ch.a1 = std::pow(10.0, loga(gen));
                ch.a2 = std::pow(10.0, loga(gen));
                ch.rho = std::polar(std::sqrt(ch.a1 * ch.a2) * unit(gen), 2.0 * pi * unit(gen));
                RatePair p12 = rates_for_order(b1, b2, ch, SicOrder::order_12);
                RatePair p21 = rates_for_order(b1, b2, ch, SicOrder::order_21);
                double C = sum_rate_capacity(b1, b2, ch);
                order_gap = std::max(order_gap, std::abs(p12.sum() - p21.sum()));
                cap_gap = std::max(cap_gap, std::max(std::abs(p12.sum() - C), std::abs(p21.sum() - C)));
                above_upper = std::max(above_upper, C - sum_rate_upper_bound(b1, b2, ch));
                LambdaRoots roots = lambda_star(b1.gamma_bar(), ch.a1);
                double gp = gamma2_sic(b2, ch, roots.plus), gm = gamma2_sic(b2, ch, roots.minus);
                root_gap = std::max(root_gap, std::abs(gp - gm) / std::max(std::abs(gp), 1e-300));
                double ref = b2.gamma_bar() * ch.a2;
                penalty = std::max(penalty, (gp - ref) / std::max(ref, 1e-300));
            }
            out.push_back(make_check(S, "max_order_difference_bits", order_gap, 0.0, 1e-9));
            out.push_back(make_check(S, "max_sum_vs_capacity_bits", cap_gap, 0.0, 1e-9));
            out.push_back(make_check(S, "max_capacity_minus_upper_bits", above_upper, -inf, 1e-12));
            out.push_back(make_check(S, "max_root_rel_difference", root_gap, 0.0, 1e-10));
            out.push_back(make_check(S, "max_rel_penalty_excess", penalty, -inf, 1e-12));
        }

        // Symbol-level SIC receiver
        {
            const std::string S = "sic_pipeline";
            const Constellation qpsk = Constellation::qpsk();
            for (SicOrder order : {SicOrder::order_21, SicOrder::order_12})
            {
                const std::string tag = order == SicOrder::order_21 ? "_21" : "_12";
                SicPipelineConfig pc;
                pc.order = order;
                pc.n_trials = o.trials;
                pc.noise = NoiseModel{o.sigma2, stream_seed(o.seed, order == SicOrder::order_21 ? 5 : 6)};
                SicPipelineResult r = run_sic_pipeline(d, w, ap, u1, u2, lb1, lb2, qpsk, pc);
                for (int k = 0; k < 2; ++k)
                    out.push_back(make_check(S, "snr_user" + std::to_string(k + 1) + "_rel_err" + tag,
                                             std::abs(r.snr_empirical[k] - r.snr_theory[k]) / r.snr_theory[k], 0.0, 0.05));
                const int f = order == SicOrder::order_21 ? 1 : 0;
                out.push_back(make_check(S, "whitened_minus_naive_snr" + tag,
                                         r.snr_theory[f] - r.snr_naive_theory, 0.0, inf));
            }

            // Noiseless control with well separated users
            const UserSource far2(15.0, 2.0 * pi / 3.0, pi / 2.0);
            SicPipelineConfig pc;
            pc.n_trials = std::min<std::size_t>(o.trials, 1000);
            pc.noise = NoiseModel{o.sigma2, stream_seed(o.seed, 7)};
            pc.noiseless = true;
            SicPipelineResult r = run_sic_pipeline(d, w, ap, u1, far2, lb1, lb2, qpsk, pc);
            out.push_back(make_check(S, "noiseless_symbol_errors", double(r.symbol_errors[0] + r.symbol_errors[1]), 0.0, 0.0));
        }
        return out;
    }

    // ------------------------------------------------------------------ CSV

    void write_csv(std::ostream &os, const std::vector<ResultRow> &rows)
    {
        for (const auto &r : rows)
            check_result_row(r);
        prepare(os);
        os << "variant,x,a1,a2,rho_u,R1_12,R2_12,R1_21,R2_21,C,C_upper\n";
        for (const auto &r : rows)
            os << r.variant << ',' << r.x << ',' << r.a1 << ',' << r.a2 << ',' << r.rho_u << ',' << r.R1_12 << ','
               << r.R2_12 << ',' << r.R1_21 << ',' << r.R2_21 << ',' << r.C << ',' << r.C_upper << '\n';
    }

    void write_csv(std::ostream &os, const std::vector<GainRow> &rows)
    {
        prepare(os);
        os << "variant,x,user,quadrature,closed_form,rel_gap,status\n";
        for (const auto &r : rows)
            os << r.variant << ',' << r.x << ',' << r.user << ',' << r.quadrature << ',' << r.closed_form << ','
               << r.rel_gap << ',' << r.status << '\n';
    }

    void write_csv(std::ostream &os, const std::vector<RegionPoint> &rows)
    {
        prepare(os);
        os << "variant,x,kind,R1,R2\n";
        for (const auto &r : rows)
            os << r.variant << ',' << r.x << ',' << r.kind << ',' << r.R1 << ',' << r.R2 << '\n';
    }

    void write_csv(std::ostream &os, const std::vector<VerifyCheck> &rows)
    {
        prepare(os);
        os << "suite,check,value,lower,upper,status\n";
        for (const auto &r : rows)
            os << r.suite << ',' << r.check << ',' << r.value << ',' << r.lower << ',' << r.upper << ','
               << (r.pass ? "pass" : "fail") << '\n';
    }
}
