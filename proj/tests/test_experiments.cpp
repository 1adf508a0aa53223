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

#include <catch_amalgamated.hpp>

#include "capa/experiments.hpp"
#include "capa/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace capa;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::StartsWith;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

constexpr double pi = std::numbers::pi;

namespace
{
    ExperimentConfig with_sweep(std::vector<double> L, bool spd = false)
    {
        ExperimentConfig c = default_config();
        c.sweep_L = std::move(L);
        c.include_spd = spd;
        return c;
    }

    std::vector<ResultRow> rows_of(const std::vector<ResultRow> &rows, const std::string &variant)
    {
        std::vector<ResultRow> out;
        for (const auto &r : rows)
            if (r.variant == variant)
                out.push_back(r);
        return out;
    }

    std::vector<std::string> lines_of(const std::string &s)
    {
        std::vector<std::string> out;
        std::istringstream in(s);
        for (std::string line; std::getline(in, line);)
            out.push_back(line);
        return out;
    }
}

TEST_CASE("experiments - Result rows satisfy their identities")
{
    const TwoUserChannel ch{0.02, 0.01, cd(0.005, 0.003)};
    ResultRow row = make_result_row("capa", 0.5, LinkBudget(1e3), LinkBudget(1e4), ch);
    CHECK_NOTHROW(check_result_row(row));
    CHECK(row.C <= row.C_upper);
    CHECK_THAT(row.rho_u, WithinRel(std::abs(ch.rho) / std::sqrt(ch.a1 * ch.a2), 1e-14));

    ResultRow broken = row;
    broken.R2_12 += 1e-6;
    CHECK_THROWS_AS(check_result_row(broken), InvariantViolation);
    broken = row;
    broken.C_upper = row.C - 1e-3;
    CHECK_THROWS_AS(check_result_row(broken), InvariantViolation);

    // The writer refuses to emit anything when a row is inconsistent
    std::ostringstream os;
    CHECK_THROWS_AS(write_csv(os, std::vector<ResultRow>{row, broken}), InvariantViolation);
    CHECK(os.str().empty());
}

TEST_CASE("experiments - CSV layout")
{
    const ResultRow row = make_result_row("capa", 1.0 / 3.0, LinkBudget(1e3), LinkBudget(1e4),
                                          TwoUserChannel{0.02, 0.01, cd(0.005, 0.003)});
    std::ostringstream os;
    os.imbue(std::locale("C"));
    write_csv(os, std::vector<ResultRow>{row});
    const auto lines = lines_of(os.str());
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "variant,x,a1,a2,rho_u,R1_12,R2_12,R1_21,R2_21,C,C_upper");
    CHECK_THAT(lines[1], StartsWith("capa,0.333333333333,0.02,0.01,"));
    CHECK(std::count(lines[1].begin(), lines[1].end(), ',') == 10);

    std::ostringstream g;
    write_csv(g, std::vector<GainRow>{{"capa", 2.0, 1, 1.0 / 6.0, 1.0 / 6.0, 0.0, "ok"}});
    CHECK(lines_of(g.str())[0] == "variant,x,user,quadrature,closed_form,rel_gap,status");
    CHECK(lines_of(g.str())[1] == "capa,2,1,0.166666666667,0.166666666667,0,ok");

    std::ostringstream r;
    write_csv(r, std::vector<RegionPoint>{{"spd", 0.5, "corner_21", 1.5, 2.25}});
    CHECK(r.str() == "variant,x,kind,R1,R2\nspd,0.5,corner_21,1.5,2.25\n");

    std::ostringstream v;
    write_csv(v, std::vector<VerifyCheck>{{"sum_rate", "order_difference", 1e-12, 0.0, 1e-9, true}});
    CHECK(v.str() == "suite,check,value,lower,upper,status\nsum_rate,order_difference,1e-12,0,1e-09,pass\n");
}

TEST_CASE("experiments - Gain command at boresight")
{
    ExperimentConfig c = with_sweep({2.0});
    c.users = {UserConfig{1.0, pi / 2, pi / 2, 30.0}};
    const auto rows = run_gain(c);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].status == "ok");
    CHECK_THAT(rows[0].closed_form, WithinAbs(1.0 / 6.0, 1e-12));
    CHECK_THAT(rows[0].quadrature, WithinRel(1.0 / 6.0, 1e-6));
    CHECK(rows[0].rel_gap <= 1e-6);
}

TEST_CASE("experiments - Gain command reports non-convergence per row")
{
    ExperimentConfig c = with_sweep({0.5});
    c.quadrature.rel_tol = 1e-17;
    c.quadrature.max_refinements = 2;
    const auto rows = run_gain(c);
    REQUIRE(rows.size() == 2);
    for (const auto &r : rows)
    {
        CHECK(r.status == "convergence_failure");
        CHECK(std::isnan(r.quadrature));
    }
}

TEST_CASE("experiments - SPD gains follow the occupancy approximation")
{
    const auto rows = run_gain(with_sweep({0.05, 0.5}, true));
    int spd = 0;
    for (const auto &r : rows)
    {
        CHECK(r.status == "ok");
        if (r.variant == "spd")
        {
            ++spd;
            CHECK(r.rel_gap <= 0.02);
        }
        else
            CHECK(r.rel_gap <= 1e-6);
    }
    CHECK(spd == 4);
}

TEST_CASE("experiments - Empty sweeps and single-user sweeps are usage errors")
{
    CHECK_THROWS_AS(run_gain(with_sweep({})), UsageError);
    ExperimentConfig one = with_sweep({0.1});
    one.users.resize(1);
    CHECK_NOTHROW(run_gain(one));
    CHECK_THROWS_AS(run_sweep_aperture(one), UsageError);
    CHECK_THROWS_AS(run_region(one), UsageError);
    ExperimentConfig big = default_config();
    big.spd_element_side = 2.0 * big.spacing();
    CHECK_THROWS_AS(run_sweep_occupancy(big), UsageError);
}

TEST_CASE("experiments - Aperture sweep trends")
{
    const auto rows = run_sweep_aperture(with_sweep({0.05, 0.1, 0.2, 0.4}, true));
    for (const std::string variant : {"capa", "spd"})
    {
        const auto v = rows_of(rows, variant);
        REQUIRE(v.size() == 4);
        for (std::size_t i = 1; i < v.size(); ++i)
        {
            CHECK(v[i].x > v[i - 1].x);
            CHECK(v[i].a1 > v[i - 1].a1);
            CHECK(v[i].a2 > v[i - 1].a2);
            CHECK(v[i].C > v[i - 1].C);
            CHECK(v[i].C_upper > v[i - 1].C_upper);
            CHECK(v[i].R1_21 > v[i - 1].R1_21);
            CHECK(v[i].R2_12 > v[i - 1].R2_12);
        }
    }
    // A sparse array never beats the continuous aperture of the same extent
    const auto c = rows_of(rows, "capa"), s = rows_of(rows, "spd");
    for (std::size_t i = 0; i < c.size(); ++i)
        CHECK(s[i].C < c[i].C);
}

TEST_CASE("experiments - Identical configurations give byte-identical CSV")
{
    const ExperimentConfig c = with_sweep({0.05, 0.12}, true);
    std::ostringstream a, b;
    write_csv(a, run_sweep_aperture(c));
    write_csv(b, run_sweep_aperture(c));
    CHECK(a.str() == b.str());
    std::ostringstream ra, rb;
    write_csv(ra, run_region(c));
    write_csv(rb, run_region(c));
    CHECK(ra.str() == rb.str());
}

TEST_CASE("experiments - Occupancy sweep converges to the continuous aperture")
{
    ExperimentConfig c = default_config();
    c.occupancy_M = 21;
    const auto rows = run_sweep_occupancy(c);
    REQUIRE(rows.size() == c.sweep_mu.size() + 1);
    CHECK(rows[0].variant == "capa");
    const double capa = rows[0].C;
    double prev = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i)
    {
        CHECK(rows[i].variant == "spd");
        CHECK(rows[i].C > prev);
        CHECK(rows[i].C < capa + 1e-3);
        prev = rows[i].C;
        if (std::abs(rows[i].x - 1.0 / pi) < 1e-12)
            CHECK(rows[i].C < capa);
    }
    CHECK(rows.back().x == 1.0);
    CHECK_THAT(rows.back().C, WithinAbs(capa, 1e-3));
}

TEST_CASE("experiments - Capacity region points")
{
    ExperimentConfig c = with_sweep({0.5}, true);
    c.region_points = 5;
    const auto pts = run_region(c);
    REQUIRE(pts.size() == 2 * 8);
    const std::vector<std::string> kinds = {"origin", "single_user_1", "corner_21", "segment",
                                            "segment", "segment", "corner_12", "single_user_2"};
    for (std::size_t i = 0; i < 8; ++i)
    {
        CHECK(pts[i].kind == kinds[i]);
        CHECK(pts[i + 8].kind == kinds[i]);
    }
    CHECK(pts[0].variant == "capa");
    CHECK(pts[8].variant == "spd");
    CHECK_THAT(pts[2].R1 + pts[2].R2, WithinAbs(pts[6].R1 + pts[6].R2, 1e-9));

    // The SPD region lies inside the CAPA region
    const auto ch = two_user_channel(c.wave(), capa_square(0.5), c.users[0].source(), c.users[1].source(), c.quadrature);
    const CapacityRegion capa = capacity_region(link_budget(c.users[0]), link_budget(c.users[1]), ch);
    for (std::size_t i = 8; i < 16; ++i)
        CHECK(capa.contains(pts[i].R1, pts[i].R2, 1e-12));
}

TEST_CASE("experiments - Verification suites pass on a reduced configuration")
{
    ExperimentConfig c = default_config();
    c.oracle.grid = 32;
    c.oracle.L = 0.1;
    c.oracle.tuples = 2000;
    c.oracle.geometries = 2;
    c.oracle.functions = 20;
    const auto checks = run_verify(c);
    CHECK(checks.size() >= 20);
    for (const auto &k : checks)
    {
        INFO(k.suite << "/" << k.check << " = " << k.value);
        CHECK(k.pass);
    }
}

TEST_CASE("experiments - Perturbed whitening parameter fails the whitening suite")
{
    ExperimentConfig c = default_config();
    c.oracle.grid = 32;
    c.oracle.L = 0.1;
    c.oracle.tuples = 100;
    c.oracle.geometries = 1;
    c.oracle.functions = 5;
    c.oracle.trials = 1000;
    c.oracle.lambda_star_scale = 1.1;
    int whitening_failures = 0;
    for (const auto &k : run_verify(c))
        if (k.suite == "whitening" && !k.pass)
            ++whitening_failures;
    CHECK(whitening_failures > 0);
}

TEST_CASE("experiments - Sum rate approaches the large-aperture limit", "[slow]")
{
    ExperimentConfig c = default_config();
    const double L = 1000.0 * 20.0;
    c.sweep_L = {L};
    c.include_spd = false;
    const auto rows = run_sweep_aperture(c);
    REQUIRE(rows.size() == 1);
    const double limit = asymptotic_sum_rate(1e3, 1e4);
    CHECK(std::abs(rows[0].C - limit) <= 0.2);
    CHECK(rows[0].rho_u < 1e-3);
    CHECK(rows[0].a1 >= 0.499);
    CHECK(rows[0].a1 <= 0.5);
}
