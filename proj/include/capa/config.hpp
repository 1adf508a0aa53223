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

#ifndef capa_config_H
#define capa_config_H

#include "capa/errors.hpp"
#include "capa/geometry.hpp"
#include "capa/quadrature.hpp"

#include <cstdint>
#include <cstddef>
#include <istream>
#include <string>
#include <vector>

namespace capa
{
    // Malformed configuration; the message names the source, line and field
    class ConfigError : public UsageError
    {
    public:
        using UsageError::UsageError;
    };

    struct UserConfig
    {
        double r = 10.0;
        double phi = 0.0;
        double theta = 0.0;
        double gamma_db = 30.0;

        UserSource source() const { return UserSource(r, phi, theta); }
    };

    struct OracleConfig
    {
        int grid = 64;                  // n_per_axis of the discretized aperture
        std::size_t trials = 10000;     // Monte Carlo trials (noise statistic, SIC pipeline)
        std::uint64_t seed = 1;         // base seed of every random stream
        double L = 0.15;                // side of the square oracle aperture (m)
        double sigma2 = 1.0;            // noise spectral density
        double lambda_star_scale = 1.0; // multiplies lam* in the whitening suite (negative control)
        int geometries = 5;             // random two-user geometries in the whitening suite
        int functions = 100;            // random test functions in the inverse-kernel suite
        std::size_t tuples = 10000;     // random (gamma, a, rho) tuples in the sum-rate suite
    };

    struct ExperimentConfig
    {
        double lambda = 0.0107;
        std::vector<UserConfig> users;

        // Fixed aperture for commands that do not sweep it
        double Lx = 0.5;
        double Lz = 0.5;

        // SPD variant: grid spacing and element side; non-positive means the defaults
        // d = lambda / 2 and side = sqrt(lambda^2 / (4 pi))
        double spd_spacing = 0.0;
        double spd_element_side = 0.0;
        bool include_spd = true;

        std::vector<double> sweep_L;  // square aperture sides (m), strictly increasing
        std::vector<double> sweep_mu; // occupation ratios in (0, 1], strictly increasing
        int occupancy_M = 0;          // elements per axis of the occupancy sweep; 0 means nearest odd to Lx / d

        QuadratureSpec quadrature;
        OracleConfig oracle;
        int region_points = 11; // time-sharing samples per region, corners included
        std::string output_path; // empty means standard output

        double spacing() const;
        double element_side() const;
        Wave wave() const { return Wave(lambda); }

        // Throws ConfigError on violated invariants (user count, grids, ranges)
        void validate() const;
    };

    // Parameters of the numerical study: two users at (10 m, 30 dB) and (20 m, 40 dB), both at
    // phi = pi/3, theta = pi/6, lambda = 0.0107 m, log-spaced sides in [0.05, 2] m
    ExperimentConfig default_config();

    // Reads a configuration on top of default_config(); see docs/config_format.md
    ExperimentConfig parse_config(std::istream &in, const std::string &source_name = "<config>");
    ExperimentConfig load_config(const std::string &path);

    // Value grammar helpers, exposed for testing
    double parse_number(const std::string &text);           // number, pi, or products/quotients of them
    std::vector<double> parse_number_list(const std::string &text);
    bool parse_bool(const std::string &text);

    // n points from lo to hi, both included; log spacing requires lo > 0
    std::vector<double> make_grid(double lo, double hi, int n, bool log_spacing);

    // Nearest odd element count with M d close to the side L (at least 1)
    int spd_count_for_side(double L, double d);
}

#endif
