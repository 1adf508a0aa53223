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

#include "capa/operator_lab.hpp"
#include "capa/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace capa
{
    namespace
    {
        // Pairwise (cascade) summation; the result does not depend on how the terms were produced
        template <typename T>
        T pairwise_sum(const T *x, std::size_t n)
        {
            if (n == 0)
                return T(0);
            if (n <= 8)
            {
                T s = x[0];
                for (std::size_t i = 1; i < n; ++i)
                    s += x[i];
                return s;
            }
            std::size_t h = n / 2;
            return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
        }

        template <typename T>
        T pairwise_sum(const std::vector<T> &x)
        {
            return pairwise_sum(x.data(), x.size());
        }

        // SplitMix64 finalizer
        std::uint64_t splitmix64(std::uint64_t z)
        {
            z += 0x9E3779B97F4A7C15ULL;
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
            return z ^ (z >> 31);
        }

        Eigen::MatrixXcd column(const Field &f)
        {
            return Eigen::MatrixXcd(f);
        }

        void require_size(const DiscretizedAperture &d, const Field &f, const char *what)
        {
            if (std::size_t(f.size()) != d.size())
                throw UsageError(std::string(what) + ": field size does not match the grid");
        }

        // Upper-triangular factor of a thin QR; ||U C V^H||_F = ||R_U C R_V^H||_F
        Eigen::MatrixXcd thin_r(const Eigen::MatrixXcd &A)
        {
            Eigen::HouseholderQR<Eigen::MatrixXcd> qr(A);
            Eigen::Index k = std::min(A.rows(), A.cols());
            Eigen::MatrixXcd R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
            return R;
        }
    }

    DiscretizedAperture discretize(const ApertureRegion &a, int n_per_axis)
    {
        if (n_per_axis < 2)
            throw UsageError("discretize: n_per_axis must be >= 2");
        DiscretizedAperture d;
        const std::size_t m = std::size_t(n_per_axis);

        auto fill_rect = [&](double xc, double zc, double Lx, double Lz)
        {
            const double hx = Lx / double(m), hz = Lz / double(m);
            for (std::size_t ix = 0; ix < m; ++ix)
                for (std::size_t iz = 0; iz < m; ++iz)
                    d.points.emplace_back(xc - 0.5 * Lx + (double(ix) + 0.5) * hx, 0.0,
                                          zc - 0.5 * Lz + (double(iz) + 0.5) * hz);
        };

        if (a.is_planar())
        {
            const auto &p = a.planar_rect();
            d.points.reserve(m * m);
            fill_rect(0.0, 0.0, p.Lx, p.Lz);
            d.cell_area = p.Lx * p.Lz / double(m * m);
        }
        else
        {
            const auto &g = a.spd_grid();
            auto centers = spd_element_centers(a);
            d.points.reserve(centers.size() * m * m);
            for (const auto &c : centers)
                fill_rect(c.x(), c.z(), g.element_side, g.element_side);
            d.cell_area = g.element_side * g.element_side / double(m * m);
        }
        return d;
    }

    Field sample_kernel_g(const DiscretizedAperture &d, const Wave &w, const ApertureRegion &a, const UserSource &u)
    {
        const Vec3 s = user_position(u);
        Field f(Eigen::Index(d.size()));
        for (std::size_t i = 0; i < d.size(); ++i)
            f[Eigen::Index(i)] = kernel_g(w, a, d.points[i], s);
        return f;
    }

    Field sample_channel_h(const DiscretizedAperture &d, const Wave &w, const ApertureRegion &a, const UserSource &u)
    {
        return h_over_g(w) * sample_kernel_g(d, w, a, u);
    }

    cd grid_inner(const DiscretizedAperture &d, const Field &f, const Field &g)
    {
        require_size(d, f, "grid_inner");
        require_size(d, g, "grid_inner");
        std::vector<cd> terms(d.size());
        for (std::size_t i = 0; i < d.size(); ++i)
            terms[i] = std::conj(f[Eigen::Index(i)]) * g[Eigen::Index(i)];
        return d.cell_area * pairwise_sum(terms);
    }

    double grid_norm_sq(const DiscretizedAperture &d, const Field &f)
    {
        require_size(d, f, "grid_norm_sq");
        std::vector<double> terms(d.size());
        for (std::size_t i = 0; i < d.size(); ++i)
            terms[i] = std::norm(f[Eigen::Index(i)]);
        return d.cell_area * pairwise_sum(terms);
    }

    TwoUserChannel grid_two_user_channel(const DiscretizedAperture &d, const Field &g1, const Field &g2)
    {
        return TwoUserChannel{grid_norm_sq(d, g1), grid_norm_sq(d, g2), grid_inner(d, g1, g2)};
    }

    // ---------------------------------------------------------------- KernelMatrix

    KernelMatrix::KernelMatrix(std::size_t n, double cell_area, cd c, Eigen::MatrixXcd U, Eigen::MatrixXcd C,
                               Eigen::MatrixXcd V)
        : n_(n), cell_area_(cell_area), c_(c), U_(std::move(U)), core_(std::move(C)), V_(std::move(V))
    {
        if (!(cell_area > 0.0))
            throw UsageError("KernelMatrix: cell area must be > 0");
    }

    KernelMatrix KernelMatrix::identity(std::size_t n, double cell_area)
    {
        return KernelMatrix(n, cell_area, 1.0, Eigen::MatrixXcd(Eigen::Index(n), 0), Eigen::MatrixXcd(0, 0),
                            Eigen::MatrixXcd(Eigen::Index(n), 0));
    }

    KernelMatrix KernelMatrix::rank_one(double cell_area, cd c, cd coeff, const Field &u, const Field &v)
    {
        if (u.size() != v.size())
            throw UsageError("KernelMatrix::rank_one: factor sizes differ");
        Eigen::MatrixXcd C(1, 1);
        C(0, 0) = coeff;
        return KernelMatrix(std::size_t(u.size()), cell_area, c, column(u), C, column(v));
    }

    cd KernelMatrix::low_rank_diag(std::size_t i) const
    {
        if (core_.rows() == 0)
            return 0.0;
        auto ii = Eigen::Index(i);
        return (U_.row(ii) * core_ * V_.row(ii).adjoint())(0, 0);
    }

    cd KernelMatrix::entry(std::size_t i, std::size_t j) const
    {
        if (i >= n_ || j >= n_)
            throw UsageError("KernelMatrix::entry: index out of range");
        cd e = (i == j) ? c_ / cell_area_ : cd(0.0);
        if (core_.rows() > 0)
            e += (U_.row(Eigen::Index(i)) * core_ * V_.row(Eigen::Index(j)).adjoint())(0, 0);
        return e;
    }

    Field KernelMatrix::apply(const Field &f) const
    {
        if (std::size_t(f.size()) != n_)
            throw UsageError("KernelMatrix::apply: field size does not match the kernel");
        Field out = c_ * f;
        if (core_.rows() > 0)
            out += cell_area_ * (U_ * (core_ * (V_.adjoint() * f)));
        return out;
    }

    KernelMatrix KernelMatrix::compose(const KernelMatrix &rhs) const
    {
        if (rhs.n_ != n_ || rhs.cell_area_ != cell_area_)
            throw UsageError("KernelMatrix::compose: kernels live on different grids");
        // (cA d + UA CA VA^H) o (cB d + UB CB VB^H)
        //   = cA cB d + cB UA CA VA^H + cA UB CB VB^H + dA UA CA (VA^H UB) CB VB^H
        const Eigen::Index ra = core_.rows(), rb = rhs.core_.rows(), n = Eigen::Index(n_);
        Eigen::MatrixXcd U(n, ra + rb), V(n, ra + rb), C = Eigen::MatrixXcd::Zero(ra + rb, ra + rb);
        U << U_, rhs.U_;
        V << V_, rhs.V_;
        if (ra > 0)
            C.topLeftCorner(ra, ra) = rhs.c_ * core_;
        if (rb > 0)
            C.bottomRightCorner(rb, rb) = c_ * rhs.core_;
        if (ra > 0 && rb > 0)
            C.topRightCorner(ra, rb) = cell_area_ * core_ * (V_.adjoint() * rhs.U_) * rhs.core_;
        return KernelMatrix(n_, cell_area_, c_ * rhs.c_, std::move(U), std::move(C), std::move(V));
    }

    KernelMatrix KernelMatrix::adjoint() const
    {
        return KernelMatrix(n_, cell_area_, std::conj(c_), V_, core_.adjoint(), U_);
    }

    Eigen::MatrixXcd KernelMatrix::to_dense() const
    {
        const Eigen::Index n = Eigen::Index(n_);
        Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
        if (core_.rows() > 0)
            M = U_ * core_ * V_.adjoint();
        M.diagonal().array() += c_ / cell_area_;
        return M;
    }

    double KernelMatrix::offdiag_frobenius() const
    {
        if (core_.rows() == 0)
            return 0.0;
        const double total = (thin_r(U_) * core_ * thin_r(V_).adjoint()).squaredNorm();
        std::vector<double> diag(n_);
        for (std::size_t i = 0; i < n_; ++i)
            diag[i] = std::norm(low_rank_diag(i));
        return std::sqrt(std::max(0.0, total - pairwise_sum(diag)));
    }

    double KernelMatrix::diag_norm() const
    {
        std::vector<double> diag(n_);
        for (std::size_t i = 0; i < n_; ++i)
            diag[i] = std::norm(c_ / cell_area_ + low_rank_diag(i));
        return std::sqrt(pairwise_sum(diag));
    }

    KernelMatrix autocorrelation_Rzz(const DiscretizedAperture &d, const Field &g1, double gamma_bar_1, double sigma2)
    {
        require_size(d, g1, "autocorrelation_Rzz");
        return KernelMatrix::rank_one(d.cell_area, sigma2, gamma_bar_1 * sigma2, g1, g1);
    }

    KernelMatrix whitening_kernel(const DiscretizedAperture &d, const Field &g1, double lam)
    {
        require_size(d, g1, "whitening_kernel");
        return KernelMatrix::rank_one(d.cell_area, 1.0, lam, g1, g1);
    }

    KernelMatrix inverse_whitening_kernel(const DiscretizedAperture &d, const Field &g1, double lam)
    {
        const double a1 = grid_norm_sq(d, g1);
        const double den = 1.0 + lam * a1;
        if (den == 0.0)
            throw DomainError("inverse_whitening_kernel: 1 + lam a1 = 0, the kernel is singular");
        return KernelMatrix::rank_one(d.cell_area, 1.0, -lam / den, g1, g1);
    }

    Field whitened_channel_hbar(const KernelMatrix &K_Z, const Field &h2)
    {
        return K_Z.apply(h2);
    }

    double whitened_mrc_snr(const DiscretizedAperture &d, const Wave &w, const LinkBudget &lb2, const Field &hbar)
    {
        const double k_eta = w.k0() * w.eta();
        return lb2.gamma_bar() * 4.0 * std::numbers::pi / (k_eta * k_eta) * grid_norm_sq(d, hbar);
    }

    double whitening_residual(const KernelMatrix &K_Z, const KernelMatrix &Rzz)
    {
        KernelMatrix W = K_Z.compose(Rzz).compose(K_Z.adjoint());
        return W.offdiag_frobenius() / W.diag_norm();
    }

    // ---------------------------------------------------------------- noise

    std::uint64_t stream_seed(std::uint64_t base_seed, std::uint64_t stream)
    {
        return splitmix64(splitmix64(base_seed) ^ (stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
    }

    Field sample_noise(const DiscretizedAperture &d, const NoiseModel &nm, std::uint64_t stream)
    {
        if (!(nm.sigma2 >= 0.0) || !(d.cell_area > 0.0))
            throw UsageError("sample_noise: need sigma2 >= 0 and a positive cell area");
        std::mt19937_64 gen(stream_seed(nm.rng_seed, stream));
        std::normal_distribution<double> normal(0.0, std::sqrt(nm.sigma2 / d.cell_area / 2.0));
        Field n(Eigen::Index(d.size()));
        for (Eigen::Index i = 0; i < n.size(); ++i)
        {
            double re = normal(gen);
            double im = normal(gen);
            n[i] = cd(re, im);
        }
        return n;
    }

    ProjectedNoiseStats projected_noise_statistics(const DiscretizedAperture &d, const Field &v, const NoiseModel &nm,
                                                   std::size_t n_trials)
    {
        if (n_trials < 2)
            throw UsageError("projected_noise_statistics: need at least 2 trials");
        require_size(d, v, "projected_noise_statistics");
        std::vector<cd> x(n_trials);
        for (std::size_t t = 0; t < n_trials; ++t)
            x[t] = d.cell_area * v.dot(sample_noise(d, nm, t)); // dot conjugates the first argument

        ProjectedNoiseStats st;
        st.trials = n_trials;
        const double N = double(n_trials);
        st.mean = pairwise_sum(x) / N;

        std::vector<double> p2(n_trials), r2(n_trials), r4(n_trials), i2(n_trials), i4(n_trials);
        for (std::size_t t = 0; t < n_trials; ++t)
        {
            cd e = x[t] - st.mean;
            p2[t] = std::norm(e);
            r2[t] = e.real() * e.real();
            r4[t] = r2[t] * r2[t];
            i2[t] = e.imag() * e.imag();
            i4[t] = i2[t] * i2[t];
        }
        st.variance = pairwise_sum(p2) / (N - 1.0);
        const double mr2 = pairwise_sum(r2) / N, mi2 = pairwise_sum(i2) / N;
        st.kurtosis_real = pairwise_sum(r4) / N / (mr2 * mr2);
        st.kurtosis_imag = pairwise_sum(i4) / N / (mi2 * mi2);
        return st;
    }

    // ---------------------------------------------------------------- SIC pipeline

    Constellation Constellation::qpsk()
    {
        const double s = 1.0 / std::sqrt(2.0);
        return Constellation{{cd(s, s), cd(-s, s), cd(-s, -s), cd(s, -s)}};
    }

    void Constellation::validate() const
    {
        if (points.empty())
            throw UsageError("Constellation: no symbols");
        double e = 0.0;
        for (const auto &p : points)
            e += std::norm(p);
        e /= double(points.size());
        if (std::abs(e - 1.0) > 1e-9)
            throw UsageError("Constellation: average symbol energy is " + std::to_string(e) + ", expected 1");
    }

    std::size_t Constellation::decide(cd y) const
    {
        std::size_t best = 0;
        double best_d = std::norm(y - points[0]);
        for (std::size_t k = 1; k < points.size(); ++k)
        {
            double dk = std::norm(y - points[k]);
            if (dk < best_d)
            {
                best_d = dk;
                best = k;
            }
        }
        return best;
    }

    SicPipelineResult run_sic_pipeline(const DiscretizedAperture &d, const Wave &w, const ApertureRegion &a,
                                       const UserSource &u1, const UserSource &u2, const LinkBudget &lb1,
                                       const LinkBudget &lb2, const Constellation &cons, const SicPipelineConfig &cfg)
    {
        cons.validate();
        if (cfg.n_trials < 2)
            throw UsageError("run_sic_pipeline: need at least 2 trials");
        if (!(cfg.noise.sigma2 > 0.0))
            throw UsageError("run_sic_pipeline: sigma2 must be > 0");

        const Field g[2] = {sample_kernel_g(d, w, a, u1), sample_kernel_g(d, w, a, u2)};
        const cd hg = h_over_g(w);
        const Field h[2] = {hg * g[0], hg * g[1]};
        const LinkBudget lb[2] = {lb1, lb2};

        SicPipelineResult res;
        res.trials = cfg.n_trials;
        res.grid_channel = grid_two_user_channel(d, g[0], g[1]);
        const double a_grid[2] = {res.grid_channel.a1, res.grid_channel.a2};

        // f is decoded first with the other user o whitened out, then o interference free
        const int f = (cfg.order == SicOrder::order_21) ? 1 : 0;
        const int o = 1 - f;

        const double lam = lambda_star(lb[o].gamma_bar(), a_grid[o]).canonical();
        const KernelMatrix K_Z = whitening_kernel(d, g[o], lam);
        const Field hbar = whitened_channel_hbar(K_Z, h[f]);

        // Theory on the grid statistics
        TwoUserChannel view{a_grid[o], a_grid[f], f == 1 ? res.grid_channel.rho : std::conj(res.grid_channel.rho)};
        res.snr_theory[f] = gamma2_sic(lb[f], view, lam);
        res.snr_theory[o] = lb[o].gamma_bar() * a_grid[o];
        res.snr_naive_theory = lb[f].gamma_bar() * a_grid[f] * a_grid[f] /
                               (a_grid[f] + lb[o].gamma_bar() * std::norm(view.rho));

        // Transmit amplitudes c_k = |J_k| |A_k| reproducing gamma_bar_k for this sigma2
        const double k_eta = w.k0() * w.eta();
        double amp[2];
        for (int k = 0; k < 2; ++k)
            amp[k] = std::sqrt(lb[k].gamma_bar() * 4.0 * std::numbers::pi * cfg.noise.sigma2) / k_eta;

        // Detector gains: expected statistic per unit symbol
        const cd alpha_w = amp[f] * d.cell_area * hbar.squaredNorm();
        const cd alpha_f = amp[f] * d.cell_area * h[f].squaredNorm();
        const cd alpha_o = amp[o] * d.cell_area * h[o].squaredNorm();

        std::vector<double> err_w(cfg.n_trials), err_naive(cfg.n_trials), err_o(cfg.n_trials);
        std::uniform_int_distribution<std::size_t> pick(0, cons.points.size() - 1);

        for (std::size_t t = 0; t < cfg.n_trials; ++t)
        {
            std::mt19937_64 sym_gen(stream_seed(cfg.noise.rng_seed ^ 0x5DEECE66DULL, t));
            std::size_t idx[2];
            idx[0] = pick(sym_gen);
            idx[1] = pick(sym_gen);
            const cd s[2] = {cons.points[idx[0]], cons.points[idx[1]]};

            // Received field
            Field Y = cfg.noiseless ? Field(Field::Zero(Eigen::Index(d.size()))) : sample_noise(d, cfg.noise, t);
            Y += (s[0] * amp[0]) * h[0] + (s[1] * amp[1]) * h[1];

            // Step 1-2: whiten, MRC with h_bar, decide the first user
            const Field Yw = K_Z.apply(Y);
            const cd t_w = d.cell_area * hbar.dot(Yw);
            const std::size_t dec_f = cons.decide(t_w / alpha_w);
            res.symbol_errors[f] += (dec_f != idx[f]);
            err_w[t] = std::norm(t_w - alpha_w * s[f]);

            // Reference: plain MRC on Y treating the other user as noise
            const cd t_n = d.cell_area * h[f].dot(Y);
            err_naive[t] = std::norm(t_n - alpha_f * s[f]);

            // Step 3: subtract the first user's contribution
            const cd s_sub = cfg.genie_subtraction ? s[f] : cons.points[dec_f];
            const Field Z = Y - (s_sub * amp[f]) * h[f];

            // Step 4: MRC for the remaining user
            const cd t_o = d.cell_area * h[o].dot(Z);
            res.symbol_errors[o] += (cons.decide(t_o / alpha_o) != idx[o]);
            err_o[t] = std::norm(t_o - alpha_o * s[o]);
        }

        // Unit average symbol energy: SNR = |alpha|^2 / E|error|^2
        const double N = double(cfg.n_trials);
        res.snr_empirical[f] = std::norm(alpha_w) / (pairwise_sum(err_w) / N);
        res.snr_empirical[o] = std::norm(alpha_o) / (pairwise_sum(err_o) / N);
        res.snr_naive_empirical = std::norm(alpha_f) / (pairwise_sum(err_naive) / N);
        return res;
    }
}
