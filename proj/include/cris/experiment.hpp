// SPDX-License-Identifier: Apache-2.0
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

#pragma once

// Batch experiments: JSON configuration, figure/table scenarios, the cross-oracle
// validation report and deterministic CSV output.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "analytic.hpp"
#include "errors.hpp"
#include "mcsim.hpp"
#include "sysmodel.hpp"

#ifndef CRIS_VERSION
#define CRIS_VERSION "0.1.0"
#endif

namespace cris {

inline constexpr const char* version = CRIS_VERSION;

struct Sweep {
    std::vector<double> areas_m2;
    std::vector<double> kappas;
    std::vector<double> aspects;
    std::vector<double> thresholds_db;
    std::vector<std::string> setups;
    std::vector<CorrelationKind> models;

    bool empty() const {
        return areas_m2.empty() && kappas.empty() && aspects.empty() && thresholds_db.empty() && setups.empty() &&
               models.empty();
    }
};

struct ExperimentConfig {
    SystemConfig system{};
    GridSpec grid{32, 32};
    /// Treat grid as a point budget and reshape it to the surface aspect ratio.
    bool adapt_grid = true;
    std::size_t replicates = 10'000;
    std::uint64_t seed = 1;
    Sweep sweep{};
    std::string output_path;
    QuadratureSpec quadrature{};
    unsigned workers = 0;

    GridSpec grid_for(const SurfaceGeometry& geom) const {
        return adapt_grid ? GridSpec::adapted(geom, grid.points()) : grid;
    }
};

/// Layouts {d_y, d_rb, d_x} used for the channel-hardening comparison.
inline void apply_setup(LinkBudget& link, const std::string& name) {
    if (name == "A") {
        link.d_y_m = 1.0, link.d_rb_m = 40.0, link.d_x_m = 27.0;
    } else if (name == "B") {
        link.d_y_m = 1.0, link.d_rb_m = 40.0, link.d_x_m = 53.0;
    } else if (name == "C") {
        link.d_y_m = 1.0, link.d_rb_m = 5.0, link.d_x_m = 27.0;
    } else if (name != "custom") {
        throw ConfigError("unknown setup '" + name + "' (expected A, B, C or custom)");
    }
}

// ---------------------------------------------------------------------------
// JSON configuration

namespace detail {

using nlohmann::json;

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key))
        return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

// Accepts either `<key>_db` (converted) or the linear `<key>`.
inline double gain_field(const json& j, const std::string& key, double fallback) {
    const std::string db = key + "_db";
    if (j.contains(db) && j.contains(key))
        throw ConfigError("both '" + key + "' and '" + db + "' given");
    if (j.contains(db))
        return db_to_linear(get_or<double>(j, db.c_str(), 0.0));
    return get_or<double>(j, key.c_str(), fallback);
}

inline IsotropicCorrelation parse_correlation(const json& j, IsotropicCorrelation base) {
    if (j.contains("model"))
        base.kind = correlation_kind_from_string(get_or<std::string>(j, "model", ""));
    base.kappa = get_or<double>(j, "kappa", base.kappa);
    return base;
}

inline GridSpec parse_grid_string(const std::string& s) {
    const auto x = s.find('x');
    if (x == std::string::npos)
        throw ConfigError("grid must look like <nx>x<ny>, got '" + s + "'");
    GridSpec g{};
    const auto a = std::from_chars(s.data(), s.data() + x, g.nx);
    const auto b = std::from_chars(s.data() + x + 1, s.data() + s.size(), g.ny);
    if (a.ec != std::errc{} || b.ec != std::errc{} || a.ptr != s.data() + x || b.ptr != s.data() + s.size())
        throw ConfigError("grid must look like <nx>x<ny>, got '" + s + "'");
    if (g.nx < 2 || g.ny < 2)
        throw ConfigError("grid needs at least 2 points per side");
    return g;
}

} // namespace detail

inline GridSpec parse_grid(const std::string& s) { return detail::parse_grid_string(s); }

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    using detail::get_or;
    if (!j.is_object())
        throw ConfigError("configuration must be a JSON object");
    ExperimentConfig cfg;
    auto& sys = cfg.system;
    try {
        if (j.contains("system")) {
            const auto& s = j.at("system");
            const double carrier = get_or<double>(s, "carrier_hz", 5.8e9);
            sys.correlation.wavelength_m = sys.bs_correlation.wavelength_m = wavelength_from_carrier(carrier);
            if (s.contains("surface")) {
                const auto& g = s.at("surface");
                if (g.contains("area_m2"))
                    sys.geometry = SurfaceGeometry::from_area(get_or<double>(g, "area_m2", 0.4),
                                                              get_or<double>(g, "aspect", 1.0));
                else
                    sys.geometry = {get_or<double>(g, "width_m", sys.geometry.width_m),
                                    get_or<double>(g, "height_m", sys.geometry.height_m)};
            }
            if (s.contains("correlation"))
                sys.correlation = detail::parse_correlation(s.at("correlation"), sys.correlation);
            sys.bs_correlation.kind = sys.correlation.kind;
            sys.bs_correlation.kappa = sys.correlation.kappa;
            if (s.contains("bs_correlation"))
                sys.bs_correlation = detail::parse_correlation(s.at("bs_correlation"), sys.bs_correlation);
            if (s.contains("link")) {
                const auto& l = s.at("link");
                auto& link = sys.link;
                link.c0 = detail::gain_field(l, "c0", link.c0);
                link.d0_m = get_or<double>(l, "d0_m", link.d0_m);
                link.alpha_d = get_or<double>(l, "alpha_d", link.alpha_d);
                link.alpha_rb = get_or<double>(l, "alpha_rb", link.alpha_rb);
                link.alpha_ur = get_or<double>(l, "alpha_ur", link.alpha_ur);
                link.d_rb_m = get_or<double>(l, "d_rb_m", link.d_rb_m);
                link.d_x_m = get_or<double>(l, "d_x_m", link.d_x_m);
                link.d_y_m = get_or<double>(l, "d_y_m", link.d_y_m);
                if (l.contains("setup"))
                    apply_setup(link, get_or<std::string>(l, "setup", "custom"));
            }
            if (s.contains("array")) {
                const auto& a = s.at("array");
                auto& arr = sys.array;
                arr.m_x = get_or<int>(a, "m_x", arr.m_x);
                arr.m_z = get_or<int>(a, "m_z", arr.m_z);
                arr.spacing_wavelengths = get_or<double>(a, "spacing_wavelengths", arr.spacing_wavelengths);
                arr.theta_a_rad = get_or<double>(a, "theta_a_rad", arr.theta_a_rad);
                arr.phi_a_rad = get_or<double>(a, "phi_a_rad", arr.phi_a_rad);
            }
            sys.transmit_snr = detail::gain_field(s, "transmit_snr", sys.transmit_snr);
        }
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            if (g.is_string())
                cfg.grid = detail::parse_grid_string(g.get<std::string>());
            else
                cfg.grid = {get_or<int>(g, "nx", cfg.grid.nx), get_or<int>(g, "ny", cfg.grid.ny)};
        }
        const std::string mode = get_or<std::string>(j, "grid_mode", "adaptive");
        if (mode != "adaptive" && mode != "fixed")
            throw ConfigError("grid_mode must be 'adaptive' or 'fixed'");
        cfg.adapt_grid = mode == "adaptive";
        const auto reps = get_or<std::int64_t>(j, "replicates", static_cast<std::int64_t>(cfg.replicates));
        if (reps < 1)
            throw ConfigError("replicates must be at least 1");
        cfg.replicates = static_cast<std::size_t>(reps);
        cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
        cfg.workers = get_or<unsigned>(j, "workers", cfg.workers);
        cfg.output_path = get_or<std::string>(j, "output", "");
        if (j.contains("quadrature")) {
            const auto& q = j.at("quadrature");
            auto& quad = cfg.quadrature;
            quad.rel_tol = get_or<double>(q, "rel_tol", quad.rel_tol);
            quad.abs_tol = get_or<double>(q, "abs_tol", quad.abs_tol);
            quad.nodes_4d = get_or<std::size_t>(q, "nodes_4d", quad.nodes_4d);
            quad.panels_per_length = get_or<double>(q, "panels_per_length", quad.panels_per_length);
        }
        if (j.contains("sweep")) {
            const auto& s = j.at("sweep");
            auto& sw = cfg.sweep;
            sw.areas_m2 = get_or<std::vector<double>>(s, "areas_m2", {});
            sw.kappas = get_or<std::vector<double>>(s, "kappas", {});
            sw.aspects = get_or<std::vector<double>>(s, "aspects", {});
            sw.thresholds_db = get_or<std::vector<double>>(s, "thresholds_db", {});
            sw.setups = get_or<std::vector<std::string>>(s, "setups", {});
            for (const auto& m : get_or<std::vector<std::string>>(s, "models", {}))
                sw.models.push_back(correlation_kind_from_string(m));
            for (const auto& name : sw.setups)
                if (name != "A" && name != "B" && name != "C" && name != "custom")
                    throw ConfigError("unknown setup '" + name + "' (expected A, B, C or custom)");
            for (double a : sw.areas_m2)
                if (!(a > 0.0))
                    throw ConfigError("sweep areas must be positive");
            for (double a : sw.aspects)
                if (!(a > 0.0))
                    throw ConfigError("sweep aspects must be positive");
            for (double k : sw.kappas)
                if (!(k >= 0.0))
                    throw ConfigError("sweep kappas must be nonnegative");
        }
        sys.validate();
        derive_link_distances(sys.link);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string(e.kind()) + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open configuration '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed JSON in '" + path + "': " + e.what());
    }
    return parse_config(j);
}

/// Canonical JSON of a parsed configuration (all defaults filled in).
inline nlohmann::json to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    const auto& s = cfg.system;
    j["system"] = {
        {"carrier_hz", speed_of_light / s.correlation.wavelength_m},
        {"surface", {{"width_m", s.geometry.width_m}, {"height_m", s.geometry.height_m}}},
        {"correlation", {{"model", to_string(s.correlation.kind)}, {"kappa", s.correlation.kappa}}},
        {"bs_correlation", {{"model", to_string(s.bs_correlation.kind)}, {"kappa", s.bs_correlation.kappa}}},
        {"link",
         {{"c0", s.link.c0},
          {"d0_m", s.link.d0_m},
          {"alpha_d", s.link.alpha_d},
          {"alpha_rb", s.link.alpha_rb},
          {"alpha_ur", s.link.alpha_ur},
          {"d_rb_m", s.link.d_rb_m},
          {"d_x_m", s.link.d_x_m},
          {"d_y_m", s.link.d_y_m}}},
        {"array",
         {{"m_x", s.array.m_x},
          {"m_z", s.array.m_z},
          {"spacing_wavelengths", s.array.spacing_wavelengths},
          {"theta_a_rad", s.array.theta_a_rad},
          {"phi_a_rad", s.array.phi_a_rad}}},
        {"transmit_snr", s.transmit_snr}};
    j["grid"] = std::to_string(cfg.grid.nx) + "x" + std::to_string(cfg.grid.ny);
    j["grid_mode"] = cfg.adapt_grid ? "adaptive" : "fixed";
    j["replicates"] = cfg.replicates;
    j["seed"] = cfg.seed;
    std::vector<std::string> models;
    for (auto m : cfg.sweep.models)
        models.push_back(to_string(m));
    j["sweep"] = {{"areas_m2", cfg.sweep.areas_m2},       {"kappas", cfg.sweep.kappas},
                  {"aspects", cfg.sweep.aspects},         {"thresholds_db", cfg.sweep.thresholds_db},
                  {"setups", cfg.sweep.setups},           {"models", models}};
    j["quadrature"] = {{"rel_tol", cfg.quadrature.rel_tol},
                       {"abs_tol", cfg.quadrature.abs_tol},
                       {"nodes_4d", cfg.quadrature.nodes_4d},
                       {"panels_per_length", cfg.quadrature.panels_per_length}};
    return j;
}

/// FNV-1a of the canonical configuration, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : to_json(cfg).dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

/// Reference sweep for a scenario on top of the default system.
inline ExperimentConfig default_experiment(const std::string& scenario) {
    ExperimentConfig cfg;
    auto& sw = cfg.sweep;
    if (scenario == "fig2") {
        sw.areas_m2 = {0.1, 0.2, 0.3, 0.4};
        sw.models = {CorrelationKind::Sinc, CorrelationKind::Jakes};
    } else if (scenario == "fig3") {
        sw.areas_m2 = {0.1, 0.2, 0.3, 0.4};
        sw.kappas = {0.0, 0.1, 0.25, 0.5, 0.75, 1.0};
        sw.models = {CorrelationKind::Jakes};
    } else if (scenario == "fig4") {
        sw.areas_m2 = {0.3, 0.4};
        sw.aspects = {1.0, 20.0};
        sw.models = {CorrelationKind::Sinc, CorrelationKind::Jakes};
        for (double t = 20.0; t <= 40.0 + 1e-9; t += 0.25)
            sw.thresholds_db.push_back(t);
    } else if (scenario == "fig5") {
        sw.areas_m2 = {0.1, 0.2, 0.3, 0.4};
        sw.kappas = {0.25, 0.5, 1.0};
        sw.setups = {"A", "B", "C"};
        sw.models = {CorrelationKind::Sinc};
    } else if (scenario == "table1") {
        sw.areas_m2 = {0.4};
        sw.kappas = {0.0, 0.1, 0.5, 1.0};
        sw.models = {CorrelationKind::Jakes};
    } else {
        throw ConfigError("unknown scenario '" + scenario + "'");
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Result tables

using Cell = std::variant<double, std::int64_t, std::string>;

struct Provenance {
    std::string scenario;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string tool_version = version;
};

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    Provenance provenance;

    void add_row(std::vector<Cell> row) {
        if (row.size() != columns.size())
            throw DomainError("row has " + std::to_string(row.size()) + " cells, table has " +
                              std::to_string(columns.size()) + " columns");
        rows.push_back(std::move(row));
    }

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name)
                return i;
        throw DomainError("no column '" + name + "'");
    }

    double number(std::size_t row, const std::string& name) const {
        const auto& c = rows.at(row).at(column(name));
        if (const auto* d = std::get_if<double>(&c))
            return *d;
        if (const auto* i = std::get_if<std::int64_t>(&c))
            return double(*i);
        throw DomainError("column '" + name + "' is not numeric");
    }

    std::string text(std::size_t row, const std::string& name) const {
        return std::get<std::string>(rows.at(row).at(column(name)));
    }
};

inline std::string format_cell(const Cell& c) {
    if (const auto* s = std::get_if<std::string>(&c))
        return *s;
    char buf[64];
    std::to_chars_result res;
    if (const auto* d = std::get_if<double>(&c))
        res = std::to_chars(buf, buf + sizeof buf, *d);
    else
        res = std::to_chars(buf, buf + sizeof buf, std::get<std::int64_t>(c));
    return std::string(buf, res.ptr);
}

/// CSV text: `#` provenance lines, header, rows. Floats use the shortest
/// round-trip representation, independent of locale.
inline std::string to_csv(const ResultTable& t) {
    std::ostringstream os;
    os << "# scenario=" << t.provenance.scenario << '\n';
    os << "# config_hash=" << t.provenance.config_hash << '\n';
    os << "# seed=" << t.provenance.seed << '\n';
    os << "# version=" << t.provenance.tool_version << '\n';
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            os << (i ? "," : "") << format_cell(row[i]);
        os << '\n';
    }
    return os.str();
}

inline void emit(const ResultTable& table, const std::string& path) {
    std::error_code ec;
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty())
        std::filesystem::create_directories(parent, ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    out << to_csv(table);
    out.flush();
    if (!out)
        throw IoError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Scenarios

namespace detail {

inline void require(bool present, const std::string& scenario, const char* list) {
    if (!present)
        throw ConfigError("scenario " + scenario + " needs sweep." + list);
}

inline std::vector<CorrelationKind> models_or(const Sweep& sw, std::vector<CorrelationKind> fallback) {
    return sw.models.empty() ? fallback : sw.models;
}

// Samplers cached by surface and correlation; the field factor scales with sqrt(beta_ur).
class SamplerCache {
public:
    const FieldSampler& get(const SurfaceGeometry& geom, const GridSpec& grid, const IsotropicCorrelation& model,
                            double beta_ur) {
        const auto key = std::make_tuple(geom.width_m, geom.height_m, grid.nx, grid.ny, int(model.kind), model.kappa,
                                         model.wavelength_m);
        if (key != key_) {
            unit_ = build_surface_covariance(geom, grid, model, 1.0);
            key_ = key;
            scaled_beta_ = -1.0;
        }
        if (beta_ur != scaled_beta_) {
            scaled_ = unit_;
            scaled_.beta_ur = beta_ur;
            scaled_.factor *= std::sqrt(beta_ur);
            scaled_beta_ = beta_ur;
        }
        return scaled_;
    }

private:
    std::tuple<double, double, int, int, int, double, double> key_{-1, -1, 0, 0, 0, 0, 0};
    FieldSampler unit_;
    FieldSampler scaled_;
    double scaled_beta_ = -1.0;
};

inline Provenance provenance_for(const std::string& scenario, const ExperimentConfig& cfg) {
    return {scenario, config_hash(cfg), cfg.seed, version};
}

} // namespace detail

/// Runs one of fig2, fig3, fig4, fig5, table1 over the configured sweep.
inline ResultTable run_scenario(const std::string& name, const ExperimentConfig& cfg) {
    const auto& sw = cfg.sweep;
    ResultTable t;
    t.provenance = detail::provenance_for(name, cfg);
    detail::SamplerCache cache;
    const RunOptions run{cfg.workers, 64};

    if (name == "fig2") {
        detail::require(!sw.areas_m2.empty(), name, "areas_m2");
        t.columns = {"area", "model", "mu1_analytic", "mean_snr_mc", "se_mc"};
        const auto models = detail::models_or(sw, {CorrelationKind::Sinc, CorrelationKind::Jakes});
        for (double area : sw.areas_m2)
            for (auto kind : models) {
                SystemConfig sys = cfg.system;
                sys.geometry = SurfaceGeometry::from_area(area);
                sys.with_correlation(kind, cfg.system.correlation.kappa);
                const auto derived = derive_system(sys);
                const auto an = analyze(sys, derived, cfg.quadrature);
                const auto grid = cfg.grid_for(sys.geometry);
                const auto batch = run_replicates(
                    derived, cache.get(sys.geometry, grid, sys.correlation, derived.gains.beta_ur), cfg.replicates,
                    cfg.seed, run);
                t.add_row({area, to_string(kind), an.snr.mu1, batch.snr.mean, batch.snr.std_error});
            }
    } else if (name == "fig3") {
        detail::require(!sw.areas_m2.empty(), name, "areas_m2");
        detail::require(!sw.kappas.empty(), name, "kappas");
        t.columns = {"kappa", "area", "model", "se_bound", "mean_se_mc", "se_mc_stderr", "det"};
        const auto kind = detail::models_or(sw, {CorrelationKind::Jakes}).front();
        for (double kappa : sw.kappas)
            for (double area : sw.areas_m2) {
                SystemConfig sys = cfg.system;
                sys.geometry = SurfaceGeometry::from_area(area);
                sys.with_correlation(kind, kappa);
                const auto derived = derive_system(sys);
                const auto an = analyze(sys, derived, cfg.quadrature);
                const auto grid = cfg.grid_for(sys.geometry);
                const auto batch = run_replicates(
                    derived, cache.get(sys.geometry, grid, sys.correlation, derived.gains.beta_ur), cfg.replicates,
                    cfg.seed, run);
                t.add_row({kappa, area, to_string(kind), an.seb(), batch.se.mean, batch.se.std_error, an.det()});
            }
    } else if (name == "fig4") {
        detail::require(!sw.areas_m2.empty(), name, "areas_m2");
        detail::require(!sw.aspects.empty(), name, "aspects");
        detail::require(!sw.thresholds_db.empty(), name, "thresholds_db");
        t.columns = {"area",         "aspect",           "model",       "snr_threshold_db",
                     "outage_gamma", "outage_empirical", "ks_distance"};
        const auto models = detail::models_or(sw, {CorrelationKind::Sinc, CorrelationKind::Jakes});
        for (double area : sw.areas_m2)
            for (double aspect : sw.aspects)
                for (auto kind : models) {
                    SystemConfig sys = cfg.system;
                    sys.geometry = SurfaceGeometry::from_area(area, aspect);
                    sys.with_correlation(kind, cfg.system.correlation.kappa);
                    const auto derived = derive_system(sys);
                    const auto fit = analyze(sys, derived, cfg.quadrature).fit();
                    const auto grid = cfg.grid_for(sys.geometry);
                    const auto batch = run_replicates(
                        derived, cache.get(sys.geometry, grid, sys.correlation, derived.gains.beta_ur),
                        cfg.replicates, cfg.seed, run);
                    const auto ecdf = empirical_cdf(batch);
                    const double ks = ecdf.ks_distance([&](double x) { return outage_probability(fit, x); });
                    for (double db : sw.thresholds_db) {
                        const double x = db_to_linear(db);
                        t.add_row({area, aspect, to_string(kind), db, outage_probability(fit, x), ecdf(x), ks});
                    }
                }
    } else if (name == "fig5") {
        detail::require(!sw.areas_m2.empty(), name, "areas_m2");
        detail::require(!sw.kappas.empty(), name, "kappas");
        detail::require(!sw.setups.empty(), name, "setups");
        t.columns = {"setup", "area", "kappa", "model", "cv2_analytic", "cv2_mc"};
        const auto kind = detail::models_or(sw, {CorrelationKind::Sinc}).front();
        for (const auto& setup : sw.setups)
            for (double area : sw.areas_m2)
                for (double kappa : sw.kappas) {
                    SystemConfig sys = cfg.system;
                    apply_setup(sys.link, setup);
                    sys.geometry = SurfaceGeometry::from_area(area);
                    sys.with_correlation(kind, kappa);
                    const auto derived = derive_system(sys);
                    const auto an = analyze(sys, derived, cfg.quadrature);
                    const auto grid = cfg.grid_for(sys.geometry);
                    const auto batch = run_replicates(
                        derived, cache.get(sys.geometry, grid, sys.correlation, derived.gains.beta_ur),
                        cfg.replicates, cfg.seed, run);
                    t.add_row({setup, area, kappa, to_string(kind), an.cv2(), batch.cv_squared()});
                }
    } else if (name == "table1") {
        detail::require(!sw.kappas.empty(), name, "kappas");
        t.columns = {"kappa", "area", "model", "seb", "det", "det_over_seb_pct"};
        const auto kind = detail::models_or(sw, {CorrelationKind::Jakes}).front();
        const double area = sw.areas_m2.empty() ? cfg.system.geometry.area() : sw.areas_m2.front();
        for (double kappa : sw.kappas) {
            SystemConfig sys = cfg.system;
            sys.geometry = SurfaceGeometry::from_area(area);
            sys.with_correlation(kind, kappa);
            const auto an = analyze(sys, cfg.quadrature);
            t.add_row({kappa, area, to_string(kind), an.seb(), an.det(), 100.0 * an.det() / an.seb()});
        }
    } else {
        throw ConfigError("unknown scenario '" + name + "' (expected fig2, fig3, fig4, fig5 or table1)");
    }
    return t;
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationCheck {
    std::string name;
    double measured = 0.0;
    double threshold = 0.0;
    bool passed = false;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;

    bool passed() const {
        return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["passed"] = passed();
        j["checks"] = nlohmann::json::array();
        for (const auto& c : checks)
            j["checks"].push_back({{"name", c.name},
                                   {"measured", c.measured},
                                   {"threshold", c.threshold},
                                   {"passed", c.passed},
                                   {"detail", c.detail}});
        return j;
    }
};

/// Cross-oracle checks on the configured system. Engine errors are captured as
/// failed checks rather than propagated.
inline ValidationReport validate(const ExperimentConfig& cfg) {
    ValidationReport rep;
    auto guarded = [&](const std::string& name, double threshold, auto&& body) {
        ValidationCheck c{name, 0.0, threshold, false, ""};
        try {
            c.measured = body(c);
            c.passed = c.passed || c.measured < threshold;
        } catch (const Error& e) {
            c.passed = false;
            c.detail = std::string(e.kind()) + ": " + e.what();
        }
        rep.checks.push_back(std::move(c));
    };

    const auto& sys = cfg.system;
    std::optional<DerivedSystem> derived;
    try {
        derived = derive_system(sys);
    } catch (const Error& e) {
        rep.checks.push_back({"system", 0.0, 0.0, false, std::string(e.kind()) + ": " + e.what()});
        return rep;
    }
    const double beta_ur = derived->gains.beta_ur;

    guarded("m2_iso_vs_4d", 1e-4, [&](ValidationCheck& c) {
        const double iso = moment_m2_iso(sys.geometry, sys.correlation, beta_ur, cfg.quadrature);
        const double q4 = moment_m2_quad4(sys.geometry, sys.correlation, beta_ur, cfg.quadrature);
        c.detail = "relative difference between the 1-D and 4-D routes";
        return std::abs(iso - q4) / q4;
    });

    guarded("distance_pdf_normalization", 1e-10, [&](ValidationCheck& c) {
        QuadratureSpec tight = cfg.quadrature;
        tight.rel_tol = std::min(tight.rel_tol, 1e-13);
        const auto res = integrate_against_distance_pdf(
            sys.geometry, [](double) { return 1.0; }, tight.rel_tol, 1e-15, tight.max_intervals);
        c.detail = "|integral of f_s - 1|";
        return std::abs(res.value - 1.0);
    });

    guarded("gamma_fit_round_trip", 1e-12, [&](ValidationCheck& c) {
        const auto an = analyze(sys, *derived, cfg.quadrature);
        const auto fit = an.fit();
        c.detail = "max relative error of fitted mean and variance";
        return std::max(std::abs(fit.mean() - an.snr.mu1) / an.snr.mu1,
                        std::abs(fit.variance() - an.snr.variance()) / an.snr.variance());
    });

    std::optional<ReplicateBatch> batch;
    try {
        const auto grid = cfg.grid_for(sys.geometry);
        const auto sampler = build_surface_covariance(sys.geometry, grid, sys.correlation, beta_ur);
        batch = run_replicates(*derived, sampler, cfg.replicates, cfg.seed, {cfg.workers, 64});
    } catch (const Error& e) {
        rep.checks.push_back({"monte_carlo", 0.0, 0.0, false, std::string(e.kind()) + ": " + e.what()});
        return rep;
    }

    guarded("mean_y_exactness", 3.0, [&](ValidationCheck& c) {
        const double m1 = moment_m1(sys.geometry, beta_ur);
        c.detail = "|mean(Y) - m1| in standard errors";
        return std::abs(batch->y.mean - m1) / batch->y.std_error;
    });

    guarded("optimal_snr_identity", 1e-10, [&](ValidationCheck& c) {
        double worst = 0.0;
        const std::size_t draws = std::min<std::size_t>(batch->n, 1000);
        for (std::size_t i = 0; i < draws; ++i) {
            auto eng = rng::substream(cfg.seed ^ 0x5eedULL, i);
            const auto h_d = sample_direct_channel(*derived, eng);
            const double y = batch->y_samples[i];
            const double a = optimal_snr_sample(*derived, h_d, y);
            const double b = optimal_snr_norm_form(*derived, h_d, y);
            worst = std::max(worst, std::abs(a - b) / b);
        }
        c.detail = "max relative gap between expanded and norm forms of the optimal SNR";
        return worst;
    });

    guarded("jensen_dominance", 0.0, [&](ValidationCheck& c) {
        const auto an = analyze(sys, *derived, cfg.quadrature);
        const double slack = an.seb() - (batch->se.mean - 3.0 * batch->se.std_error);
        c.detail = "se_bound - (mean SE - 3 SE); must be >= 0";
        c.passed = slack >= 0.0;
        return slack;
    });

    return rep;
}

} // namespace cris
