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

#include "capa/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <set>

namespace capa
{
    namespace
    {
        std::string trim(const std::string &s)
        {
            std::size_t b = 0, e = s.size();
            while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
                ++b;
            while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
                --e;
            return s.substr(b, e - b);
        }

        std::string lower(std::string s)
        {
            for (auto &c : s)
                c = char(std::tolower(static_cast<unsigned char>(c)));
            return s;
        }

        // One factor: a decimal number or the constant pi
        double parse_factor(const std::string &tok)
        {
            std::string t = lower(trim(tok));
            if (t.empty())
                throw std::invalid_argument("empty number");
            if (t == "pi")
                return std::numbers::pi;
            const char *b = t.c_str();
            char *end = nullptr;
            double v = std::strtod(b, &end);
            if (end == b || *end != '\0' || !std::isfinite(v))
                throw std::invalid_argument("'" + trim(tok) + "' is not a number");
            return v;
        }

        struct Location
        {
            std::string source;
            int line;
            std::string section;
            std::string key;

            [[noreturn]] void fail(const std::string &msg) const
            {
                throw ConfigError(source + ":" + std::to_string(line) + ": [" + section + "] " + key + ": " + msg);
            }
        };

        // Sweep grid pieces collected while parsing; resolved once the whole file is read
        struct GridSpec
        {
            std::vector<double> values;
            bool explicit_values = false;
            double lo = 0.0, hi = 0.0;
            int n = 0;
            bool log = true;
            bool range_given = false;
        };
    }

    double parse_number(const std::string &text)
    {
        // factor (('*' | '/') factor)*
        std::string t = trim(text);
        double acc = 0.0;
        std::size_t pos = 0;
        char op = '*';
        bool first = true;
        while (true)
        {
            std::size_t next = t.find_first_of("*/", pos);
            // keep exponent signs such as 1e-3 intact: '*' and '/' never occur inside a number
            double f = parse_factor(t.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
            if (first)
                acc = f;
            else if (op == '*')
                acc *= f;
            else
            {
                if (f == 0.0)
                    throw std::invalid_argument("division by zero");
                acc /= f;
            }
            first = false;
            if (next == std::string::npos)
                break;
            op = t[next];
            pos = next + 1;
        }
        return acc;
    }

    std::vector<double> parse_number_list(const std::string &text)
    {
        std::vector<double> out;
        std::string t = trim(text);
        if (t.empty())
            return out;
        std::size_t pos = 0;
        while (true)
        {
            std::size_t next = t.find(',', pos);
            out.push_back(parse_number(t.substr(pos, next == std::string::npos ? std::string::npos : next - pos)));
            if (next == std::string::npos)
                break;
            pos = next + 1;
        }
        return out;
    }

    bool parse_bool(const std::string &text)
    {
        std::string t = lower(trim(text));
        if (t == "true" || t == "yes" || t == "on" || t == "1")
            return true;
        if (t == "false" || t == "no" || t == "off" || t == "0")
            return false;
        throw std::invalid_argument("'" + trim(text) + "' is not a boolean");
    }

    std::vector<double> make_grid(double lo, double hi, int n, bool log_spacing)
    {
        if (n < 1)
            throw UsageError("make_grid: need at least one point");
        if (log_spacing && !(lo > 0.0))
            throw UsageError("make_grid: log spacing needs a positive lower end");
        std::vector<double> g(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
        {
            double t = n == 1 ? 0.0 : double(i) / double(n - 1);
            g[std::size_t(i)] = log_spacing ? lo * std::pow(hi / lo, t) : lo + t * (hi - lo);
        }
        if (n > 1)
            g.back() = hi; // exact end point
        return g;
    }

    int spd_count_for_side(double L, double d)
    {
        if (!(L > 0.0) || !(d > 0.0))
            throw UsageError("spd_count_for_side: side and spacing must be > 0");
        long m = std::lround((L / d - 1.0) / 2.0);
        return int(std::max(0L, m)) * 2 + 1;
    }

    double ExperimentConfig::spacing() const
    {
        return spd_spacing > 0.0 ? spd_spacing : 0.5 * lambda;
    }

    double ExperimentConfig::element_side() const
    {
        return spd_element_side > 0.0 ? spd_element_side : lambda / std::sqrt(4.0 * std::numbers::pi);
    }

    ExperimentConfig default_config()
    {
        ExperimentConfig c;
        const double pi = std::numbers::pi;
        c.users = {UserConfig{10.0, pi / 3.0, pi / 6.0, 30.0}, UserConfig{20.0, pi / 3.0, pi / 6.0, 40.0}};
        c.sweep_L = make_grid(0.05, 2.0, 20, true);
        c.sweep_mu = make_grid(0.1, 1.0, 10, false);
        c.sweep_mu.push_back(1.0 / pi); // occupation ratio of the default SPD array
        std::sort(c.sweep_mu.begin(), c.sweep_mu.end());
        return c;
    }

    void ExperimentConfig::validate() const
    {
        auto fail = [](const std::string &m)
        { throw ConfigError("invalid configuration: " + m); };
        if (!(lambda > 0.0))
            fail("wavelength must be > 0");
        if (users.empty() || users.size() > 2)
            fail("exactly 1 or 2 users are required, got " + std::to_string(users.size()));
        for (const auto &u : users)
        {
            try
            {
                u.source();
            }
            catch (const std::exception &e)
            {
                fail(e.what());
            }
        }
        if (!(Lx > 0.0) || !(Lz > 0.0))
            fail("aperture sides must be > 0");
        if (spd_spacing < 0.0 || spd_element_side < 0.0)
            fail("SPD spacing and element side must be >= 0 (0 selects the default)");
        if (element_side() > spacing() * (1.0 + 1e-12))
            fail("SPD element side exceeds the spacing");
        auto check_grid = [&](const std::vector<double> &g, const std::string &name, double lo, double hi)
        {
            if (g.empty())
                fail(name + " sweep grid is empty");
            for (std::size_t i = 0; i < g.size(); ++i)
            {
                if (!(g[i] > lo) || !(g[i] <= hi))
                    fail(name + " sweep value " + std::to_string(g[i]) + " out of range");
                if (i > 0 && !(g[i] > g[i - 1]))
                    fail(name + " sweep grid must be strictly increasing");
            }
        };
        check_grid(sweep_L, "aperture", 0.0, std::numeric_limits<double>::infinity());
        check_grid(sweep_mu, "occupancy", 0.0, 1.0);
        if (occupancy_M < 0 || (occupancy_M > 0 && occupancy_M % 2 == 0))
            fail("occupancy element count must be odd");
        try
        {
            quadrature.validate();
        }
        catch (const UsageError &e)
        {
            fail(e.what());
        }
        if (oracle.grid < 2)
            fail("oracle grid must be >= 2");
        if (oracle.trials < 2 || oracle.tuples < 1 || oracle.geometries < 1 || oracle.functions < 1)
            fail("oracle counts must be positive (trials >= 2)");
        if (!(oracle.L > 0.0) || !(oracle.sigma2 > 0.0) || !(oracle.lambda_star_scale > 0.0))
            fail("oracle aperture, noise density and lambda_star_scale must be > 0");
        if (region_points < 2)
            fail("region points must be >= 2");
    }

    ExperimentConfig parse_config(std::istream &in, const std::string &source_name)
    {
        ExperimentConfig c = default_config();
        const auto defaults = c.users;
        std::map<int, UserConfig> users;
        GridSpec gL, gmu;
        std::set<std::string> seen;

        using Setter = std::function<void(const std::string &)>;
        std::map<std::string, std::map<std::string, Setter>> table;

        auto num = [](double &dst)
        { return Setter([&dst](const std::string &v)
                        { dst = parse_number(v); }); };
        auto count = [](auto &dst)
        {
            return Setter([&dst](const std::string &v)
                          {
                double x = parse_number(v);
                if (x < 0 || x != std::floor(x) || x > 9.0e15)
                    throw std::invalid_argument("'" + trim(v) + "' is not a non-negative integer");
                dst = static_cast<std::remove_reference_t<decltype(dst)>>(x); });
        };

        table["wave"]["lambda"] = num(c.lambda);

        for (int k = 1; k <= 2; ++k)
        {
            std::string sec = "user" + std::to_string(k);
            auto user = [&users, &defaults, k]() -> UserConfig &
            {
                auto it = users.find(k);
                if (it == users.end())
                    it = users.emplace(k, defaults[std::size_t(k - 1)]).first;
                return it->second;
            };
            table[sec]["r"] = [user](const std::string &v) { user().r = parse_number(v); };
            table[sec]["phi"] = [user](const std::string &v) { user().phi = parse_number(v); };
            table[sec]["theta"] = [user](const std::string &v) { user().theta = parse_number(v); };
            table[sec]["gamma_db"] = [user](const std::string &v) { user().gamma_db = parse_number(v); };
        }

        table["aperture"]["L"] = [&c](const std::string &v) { c.Lx = c.Lz = parse_number(v); };
        table["aperture"]["Lx"] = num(c.Lx);
        table["aperture"]["Lz"] = num(c.Lz);
        table["aperture"]["spacing"] = num(c.spd_spacing);
        table["aperture"]["element_side"] = num(c.spd_element_side);
        table["aperture"]["include_spd"] = [&c](const std::string &v) { c.include_spd = parse_bool(v); };

        auto grid_keys = [&](const std::string &prefix, GridSpec &g)
        {
            table["sweep"][prefix + "_values"] = [&g](const std::string &v)
            { g.values = parse_number_list(v); g.explicit_values = true; };
            table["sweep"][prefix + "_min"] = [&g](const std::string &v) { g.lo = parse_number(v); g.range_given = true; };
            table["sweep"][prefix + "_max"] = [&g](const std::string &v) { g.hi = parse_number(v); g.range_given = true; };
            table["sweep"][prefix + "_points"] = [&g](const std::string &v)
            {
                double x = parse_number(v);
                if (x != std::floor(x) || x < 0 || x > 1e7)
                    throw std::invalid_argument("'" + trim(v) + "' is not a non-negative integer");
                g.n = int(x);
                g.range_given = true;
            };
            table["sweep"][prefix + "_spacing"] = [&g](const std::string &v)
            {
                std::string t = lower(trim(v));
                if (t != "log" && t != "linear")
                    throw std::invalid_argument("expected 'log' or 'linear', got '" + trim(v) + "'");
                g.log = (t == "log");
                g.range_given = true;
            };
        };
        gmu.log = false;
        grid_keys("L", gL);
        grid_keys("mu", gmu);
        table["sweep"]["occupancy_M"] = count(c.occupancy_M);

        table["quadrature"]["panel_order"] = count(c.quadrature.panel_order);
        table["quadrature"]["rel_tol"] = num(c.quadrature.rel_tol);
        table["quadrature"]["max_refinements"] = count(c.quadrature.max_refinements);

        table["oracle"]["grid"] = count(c.oracle.grid);
        table["oracle"]["trials"] = count(c.oracle.trials);
        table["oracle"]["seed"] = count(c.oracle.seed);
        table["oracle"]["L"] = num(c.oracle.L);
        table["oracle"]["sigma2"] = num(c.oracle.sigma2);
        table["oracle"]["lambda_star_scale"] = num(c.oracle.lambda_star_scale);
        table["oracle"]["geometries"] = count(c.oracle.geometries);
        table["oracle"]["functions"] = count(c.oracle.functions);
        table["oracle"]["tuples"] = count(c.oracle.tuples);

        table["region"]["points"] = count(c.region_points);
        table["output"]["path"] = [&c](const std::string &v) { c.output_path = trim(v); };

        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line))
        {
            ++lineno;
            std::size_t hash = line.find('#');
            if (hash != std::string::npos)
                line.erase(hash);
            line = trim(line);
            if (line.empty())
                continue;
            Location loc{source_name, lineno, section, ""};
            if (line.front() == '[')
            {
                if (line.back() != ']')
                    loc.fail("unterminated section header '" + line + "'");
                section = trim(line.substr(1, line.size() - 2));
                if (!table.count(section))
                {
                    loc.section = section;
                    loc.fail("unknown section");
                }
                continue;
            }
            std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                loc.fail("expected 'key = value', got '" + line + "'");
            loc.key = trim(line.substr(0, eq));
            std::string value = trim(line.substr(eq + 1));
            if (section.empty())
                loc.fail("key outside of any section");
            auto &keys = table[section];
            auto it = keys.find(loc.key);
            if (it == keys.end())
                loc.fail("unknown key");
            if (!seen.insert(section + "." + loc.key).second)
                loc.fail("duplicate key");
            try
            {
                it->second(value);
            }
            catch (const std::exception &e)
            {
                loc.fail(e.what());
            }
        }

        if (!users.empty())
        {
            if (!users.count(1))
                throw ConfigError(source_name + ": [user2] given without [user1]");
            c.users.clear();
            for (auto &[k, u] : users)
                c.users.push_back(u);
        }

        auto resolve = [&](GridSpec &g, std::vector<double> &dst, const std::string &name)
        {
            if (g.explicit_values && g.range_given)
                throw ConfigError(source_name + ": [sweep] " + name + ": give either " + name +
                                  "_values or a range, not both");
            if (g.explicit_values)
                dst = g.values;
            else if (g.range_given)
            {
                if (g.n < 1 || !(g.hi >= g.lo) || (g.n > 1 && !(g.hi > g.lo)))
                    throw ConfigError(source_name + ": [sweep] " + name + ": range needs " + name + "_min < " +
                                      name + "_max and " + name + "_points >= 1");
                try
                {
                    dst = make_grid(g.lo, g.hi, g.n, g.log);
                }
                catch (const UsageError &e)
                {
                    throw ConfigError(source_name + ": [sweep] " + name + ": " + e.what());
                }
            }
        };
        // A range only partially given falls back on the defaults for the missing ends
        if (gL.range_given)
        {
            if (gL.lo == 0.0)
                gL.lo = 0.05;
            if (gL.hi == 0.0)
                gL.hi = 2.0;
            if (gL.n == 0)
                gL.n = 20;
        }
        if (gmu.range_given)
        {
            if (gmu.lo == 0.0)
                gmu.lo = 0.1;
            if (gmu.hi == 0.0)
                gmu.hi = 1.0;
            if (gmu.n == 0)
                gmu.n = 10;
        }
        resolve(gL, c.sweep_L, "L");
        resolve(gmu, c.sweep_mu, "mu");

        c.validate();
        return c;
    }

    ExperimentConfig load_config(const std::string &path)
    {
        std::ifstream f(path);
        if (!f)
            throw ConfigError("cannot open configuration file '" + path + "'");
        return parse_config(f, path);
    }
}
