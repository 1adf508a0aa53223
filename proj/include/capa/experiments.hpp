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

#ifndef capa_experiments_H
#define capa_experiments_H

#include "capa/capacity.hpp"
#include "capa/config.hpp"
#include "capa/two_user_channel.hpp"

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace capa
{
    // A result row broke one of its defining identities; nothing further is written
    class InvariantViolation : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // One point of a rate sweep. variant is "capa" or "spd"; x is the swept quantity
    // (aperture side in m, or occupation ratio).
    struct ResultRow
    {
        std::string variant;
        double x = 0.0;
        double a1 = 0.0, a2 = 0.0;
        double rho_u = 0.0; // |rho_u|
        double R1_12 = 0.0, R2_12 = 0.0;
        double R1_21 = 0.0, R2_21 = 0.0;
        double C = 0.0;
        double C_upper = 0.0;
    };

    ResultRow make_result_row(const std::string &variant, double x, const LinkBudget &lb1, const LinkBudget &lb2,
                              const TwoUserChannel &ch);

    // Throws InvariantViolation unless C <= C_upper and both SIC sums equal C within 1e-9
    void check_result_row(const ResultRow &row);

    struct GainRow
    {
        std::string variant;
        double x = 0.0; // aperture side (m)
        int user = 1;
        double quadrature = 0.0;
        double closed_form = 0.0;
        double rel_gap = 0.0;    // |quadrature - closed_form| / closed_form
        std::string status = "ok"; // "ok" or "convergence_failure"
    };

    struct RegionPoint
    {
        std::string variant;
        double x = 0.0;
        std::string kind; // origin, single_user_1, corner_21, segment, corner_12, single_user_2
        double R1 = 0.0, R2 = 0.0;
    };

    struct VerifyCheck
    {
        std::string suite;
        std::string check;
        double value = 0.0;
        double lower = 0.0;
        double upper = 0.0;
        bool pass = false;
    };

    // Apertures used by the commands
    ApertureRegion capa_square(double L);
    ApertureRegion spd_square_for_side(const ExperimentConfig &cfg, double L);
    ApertureRegion spd_occupancy(const ExperimentConfig &cfg, double mu_oc);

    LinkBudget link_budget(const UserConfig &u);

    std::vector<GainRow> run_gain(const ExperimentConfig &cfg);
    std::vector<ResultRow> run_sweep_aperture(const ExperimentConfig &cfg);
    std::vector<ResultRow> run_sweep_occupancy(const ExperimentConfig &cfg);
    std::vector<RegionPoint> run_region(const ExperimentConfig &cfg);

    // Oracle suites: noise statistic, inverse kernel, whitening, whitened SNR,
    // sum rate / SIC order, and the symbol-level SIC pipeline
    std::vector<VerifyCheck> run_verify(const ExperimentConfig &cfg);

    // CSV writers: header row, fixed column order, 12 significant digits, '.' decimal separator
    void write_csv(std::ostream &os, const std::vector<ResultRow> &rows);
    void write_csv(std::ostream &os, const std::vector<GainRow> &rows);
    void write_csv(std::ostream &os, const std::vector<RegionPoint> &rows);
    void write_csv(std::ostream &os, const std::vector<VerifyCheck> &rows);
}

#endif
