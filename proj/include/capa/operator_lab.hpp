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

#ifndef capa_operator_lab_H
#define capa_operator_lab_H

#include "capa/capacity.hpp"
#include "capa/channel.hpp"
#include "capa/geometry.hpp"
#include "capa/two_user_channel.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <cstddef>
#include <vector>

namespace capa
{
    // Sampled complex function on the grid points of a DiscretizedAperture
    using Field = Eigen::VectorXcd;

    // Uniform cell-centered grid. Integrals over the aperture become cell_area * sum.
    struct DiscretizedAperture
    {
        std::vector<Vec3> points;
        double cell_area = 0.0;

        std::size_t size() const { return points.size(); }
        double total_area() const { return cell_area * double(points.size()); }
    };

    // PlanarRect: n_per_axis^2 cells. SpdGrid: n_per_axis^2 cells per element, element-major order.
    DiscretizedAperture discretize(const ApertureRegion &a, int n_per_axis);

    // g(r_i, s) and h(r_i, s) sampled on the grid
    Field sample_kernel_g(const DiscretizedAperture &d, const Wave &w, const ApertureRegion &a, const UserSource &u);
    Field sample_channel_h(const DiscretizedAperture &d, const Wave &w, const ApertureRegion &a, const UserSource &u);

    // cell_area * sum conj(f) g
    cd grid_inner(const DiscretizedAperture &d, const Field &f, const Field &g);

    // cell_area * sum |f|^2
    double grid_norm_sq(const DiscretizedAperture &d, const Field &f);

    // Grid versions of a1, a2 and rho from sampled g fields
    TwoUserChannel grid_two_user_channel(const DiscretizedAperture &d, const Field &g1, const Field &g2);

    // Kernel K(r_i, r_j) stored in structured form
    //   entry(i, j) = (c / cell_area) [i == j] + (U C V^H)(i, j)
    // The diagonal part realizes c times the Dirac delta. Applying the kernel to a sampled
    // function integrates over the grid: (K f)_i = cell_area * sum_j entry(i, j) f_j.
    class KernelMatrix
    {
    public:
        // Dirac delta: acts as the identity on any sampled function
        static KernelMatrix identity(std::size_t n, double cell_area);

        // c delta + coeff * u v^H
        static KernelMatrix rank_one(double cell_area, cd c, cd coeff, const Field &u, const Field &v);

        std::size_t size() const { return n_; }
        double cell_area() const { return cell_area_; }
        cd delta_coefficient() const { return c_; }
        Eigen::Index rank() const { return core_.rows(); }

        cd entry(std::size_t i, std::size_t j) const;

        // (K f)_i = cell_area * sum_j entry(i, j) f_j
        Field apply(const Field &f) const;

        // Kernel of (*this) after rhs: int K(r, t) R(t, r') dt
        KernelMatrix compose(const KernelMatrix &rhs) const;

        // K^H(r, r') = conj(K(r', r))
        KernelMatrix adjoint() const;

        // Explicit n x n matrix of entries; intended for small grids
        Eigen::MatrixXcd to_dense() const;

        // Frobenius norm of the off-diagonal entries, computed from the factors in O(n r^2)
        double offdiag_frobenius() const;

        // Euclidean norm of the diagonal entries
        double diag_norm() const;

    private:
        KernelMatrix(std::size_t n, double cell_area, cd c, Eigen::MatrixXcd U, Eigen::MatrixXcd C, Eigen::MatrixXcd V);

        cd low_rank_diag(std::size_t i) const;

        std::size_t n_;
        double cell_area_;
        cd c_;
        Eigen::MatrixXcd U_, core_, V_;
    };

    // R_ZZ = gamma_bar_1 sigma2 g1 g1^H + sigma2 delta
    KernelMatrix autocorrelation_Rzz(const DiscretizedAperture &d, const Field &g1, double gamma_bar_1, double sigma2);

    // K_Z = delta + lam g1 g1^H
    KernelMatrix whitening_kernel(const DiscretizedAperture &d, const Field &g1, double lam);

    // Inverse of K_Z: delta + lam_bar g1 g1^H with lam_bar = lam / (1 + lam a1), a1 the grid gain of g1
    KernelMatrix inverse_whitening_kernel(const DiscretizedAperture &d, const Field &g1, double lam);

    // h_bar = K_Z applied to the sampled h(., s2)
    Field whitened_channel_hbar(const KernelMatrix &K_Z, const Field &h2);

    // Whitened-MRC SNR on the grid: gamma_bar_2 (4 pi / (k0^2 eta^2)) cell_area ||h_bar||^2
    double whitened_mrc_snr(const DiscretizedAperture &d, const Wave &w, const LinkBudget &lb2, const Field &hbar);

    // Off-diagonal Frobenius norm of K R K^H relative to its diagonal norm
    double whitening_residual(const KernelMatrix &K_Z, const KernelMatrix &Rzz);

    struct NoiseModel
    {
        double sigma2 = 1.0;
        std::uint64_t rng_seed = 1;
    };

    // Seed of the independent stream with the given index; counter-based splitting of the base seed
    std::uint64_t stream_seed(std::uint64_t base_seed, std::uint64_t stream);

    // i.i.d. circularly-symmetric complex Gaussian cells of variance sigma2 / cell_area.
    // The stream index selects an independent, reproducible draw for the same seed.
    Field sample_noise(const DiscretizedAperture &d, const NoiseModel &nm, std::uint64_t stream = 0);

    // Summary statistics of projected-noise draws X_t = cell_area * sum conj(v) N_t
    struct ProjectedNoiseStats
    {
        std::size_t trials = 0;
        cd mean = 0.0;
        double variance = 0.0;      // E|X - mean|^2
        double kurtosis_real = 0.0; // fourth standardized moment of Re X
        double kurtosis_imag = 0.0; // fourth standardized moment of Im X
    };

    ProjectedNoiseStats projected_noise_statistics(const DiscretizedAperture &d, const Field &v, const NoiseModel &nm,
                                                   std::size_t n_trials);

    // Finite symbol alphabet with unit average energy
    struct Constellation
    {
        std::vector<cd> points;

        // Unit-energy QPSK (1 +- j) / sqrt(2)
        static Constellation qpsk();

        // Throws UsageError unless non-empty with mean |x|^2 = 1 within 1e-9
        void validate() const;

        // Index of the nearest point (minimum-distance decision)
        std::size_t decide(cd y) const;
    };

    struct SicPipelineConfig
    {
        SicOrder order = SicOrder::order_21;
        std::size_t n_trials = 10000;
        NoiseModel noise;
        bool genie_subtraction = true; // subtract the true symbol of the first-decoded user
        bool noiseless = false;        // omit the noise field; amplitudes still follow sigma2
    };

    // Per-user results; index 0 is user 1, index 1 is user 2
    struct SicPipelineResult
    {
        std::size_t trials = 0;
        std::size_t symbol_errors[2] = {0, 0};
        double snr_empirical[2] = {0.0, 0.0}; // signal power / error power of each detector output
        double snr_theory[2] = {0.0, 0.0};    // closed forms on the grid statistics
        double snr_naive_empirical = 0.0;     // plain MRC on the received field for the first-decoded user
        double snr_naive_theory = 0.0;
        TwoUserChannel grid_channel;

        double ser(int user) const { return trials ? double(symbol_errors[user]) / double(trials) : 0.0; }
    };

    // Symbol-level SIC receiver on synthesized received fields
    //   Y = s1 c1 h(., s1) + s2 c2 h(., s2) + N,  c_k = sqrt(gamma_bar_k 4 pi sigma2) / (k0 eta):
    // whiten against the second-decoded user, MRC with h_bar, decide, subtract, MRC, decide.
    SicPipelineResult run_sic_pipeline(const DiscretizedAperture &d, const Wave &w, const ApertureRegion &a,
                                       const UserSource &u1, const UserSource &u2, const LinkBudget &lb1,
                                       const LinkBudget &lb2, const Constellation &cons, const SicPipelineConfig &cfg);
}

#endif
