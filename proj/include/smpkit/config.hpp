/*
   Copyright 2026 The smpkit Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "smpkit/error.hpp"
#include "smpkit/state_model.hpp"

namespace smpkit {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

//---------------------------------------------------------------------------//
// Model description
//---------------------------------------------------------------------------//

struct IntensitySpec {
    std::string from;
    std::string to;
    IntensityField field;
};

/// States by label and intensity entries that refer to them by label.
struct ModelSpec {
    std::vector<std::string> states;
    std::vector<IntensitySpec> intensities;

    IntensityModel build() const
    {
        StateSpace space(states);
        std::vector<IntensityEntry> entries;
        for (auto const& e : intensities) {
            auto from = space.find(e.from);
            auto to = space.find(e.to);
            if (!from || !to) {
                throw ConfigError("intensity " + e.from + " -> " + e.to + " references an unknown state");
            }
            entries.push_back({*from, *to, e.field});
        }
        return IntensityModel(std::move(space), std::move(entries));
    }
};

//---------------------------------------------------------------------------//
// Experiments
//---------------------------------------------------------------------------//

enum class ExperimentKind { simulate, solve, verify, compare };

inline char const* to_string(ExperimentKind kind)
{
    switch (kind) {
    case ExperimentKind::simulate: return "simulate";
    case ExperimentKind::solve: return "solve";
    case ExperimentKind::verify: return "verify";
    case ExperimentKind::compare: return "compare";
    }
    return "unknown";
}

struct SimulateParams {
    std::string start_state;
    double s = 0.0;
    double u = 0.0;
    double horizon = 1.0;
    std::uint64_t n_paths = 1000;
    std::uint64_t max_jumps = 1000000;
};

/// Row CSVs are written at each of output_times (default: t_end only).
struct SolveParams {
    std::string start_state;
    double s = 0.0;
    double u = 0.0;
    double t_end = 1.0;
    double step = 1e-3;
    std::vector<double> output_times;
};

struct VerifyParams {
    std::string start_state;
    double t = 0.0;
    double u = 0.0;
    std::vector<double> h{0.2, 0.1, 0.05};
    std::uint64_t n_paths = 20000;
    double step = 1e-3;              // solver step for the dominating bound
    std::uint64_t quotient_steps = 200; // solver steps per h for quotients
    double residual_span = 1.0;
    double residual_d = 0.5;
    double residual_step = 4e-3;
    std::uint64_t n_events = 6;
    double chain_horizon = 100.0;
    double significance = 0.01;
    std::vector<std::string> checks; // empty: every applicable check
};

struct CompareParams {
    std::string start_state;
    double s = 0.0;
    double u = 0.0;
    double t_end = 1.0;
    double step = 1e-3;
    std::uint64_t n_paths = 20000;
    std::vector<double> d_grid;
    double se_multiplier = 3.0;
    double abs_tolerance = 5e-3;
};

using ExperimentParams = std::variant<SimulateParams, SolveParams, VerifyParams, CompareParams>;

struct ExperimentConfig {
    int schema_version = kSchemaVersion;
    ModelSpec model;
    ExperimentParams params;
    std::uint64_t seed = 0;
    std::string output_dir = "out";

    ExperimentKind kind() const noexcept { return static_cast<ExperimentKind>(params.index()); }
};

inline std::vector<std::string> const& all_checks()
{
    static std::vector<std::string> const names{"two_jump",         "quick_cycle",     "difference_quotient",
                                                "dominating_bound", "forward_residual", "embedded_chain"};
    return names;
}

//---------------------------------------------------------------------------//
// JSON reading
//---------------------------------------------------------------------------//

namespace detail {

inline void allow_keys(Json const& obj, std::set<std::string> const& keys, std::string const& where)
{
    if (!obj.is_object()) {
        throw ConfigError(where + ": expected an object");
    }
    for (auto const& item : obj.items()) {
        if (!keys.count(item.key())) {
            throw ConfigError(where + ": unknown key '" + item.key() + "'");
        }
    }
}

inline Json const& need(Json const& obj, char const* key, std::string const& where)
{
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ConfigError(where + ": missing '" + key + "'");
    }
    return *it;
}

inline double read_number(Json const& v, std::string const& where)
{
    if (!v.is_number()) {
        throw ConfigError(where + ": expected a number");
    }
    double const x = v.get<double>();
    if (!std::isfinite(x)) {
        throw ConfigError(where + ": number must be finite");
    }
    return x;
}

inline std::uint64_t read_count(Json const& v, std::string const& where)
{
    if (v.is_number_unsigned()) {
        return v.get<std::uint64_t>();
    }
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    throw ConfigError(where + ": expected a nonnegative integer");
}

inline std::vector<double> read_numbers(Json const& v, std::string const& where)
{
    if (!v.is_array()) {
        throw ConfigError(where + ": expected an array of numbers");
    }
    std::vector<double> out;
    for (auto const& x : v) {
        out.push_back(read_number(x, where));
    }
    return out;
}

inline std::string read_string(Json const& v, std::string const& where)
{
    if (!v.is_string()) {
        throw ConfigError(where + ": expected a string");
    }
    return v.get<std::string>();
}

template <typename T, typename Read>
void optional_field(Json const& obj, char const* key, T& out, std::string const& where, Read read)
{
    if (auto it = obj.find(key); it != obj.end()) {
        out = read(*it, where + "." + key);
    }
}

inline Factor factor_from_json(Json const& j, std::string const& where)
{
    std::string const type = read_string(need(j, "type", where), where + ".type");
    if (type == "constant") {
        allow_keys(j, {"type", "value"}, where);
        return ConstantFactor{read_number(need(j, "value", where), where + ".value")};
    }
    if (type == "exponential") {
        allow_keys(j, {"type", "scale", "growth"}, where);
        return ExponentialFactor{read_number(need(j, "scale", where), where + ".scale"),
                                 read_number(need(j, "growth", where), where + ".growth")};
    }
    if (type == "power_law") {
        allow_keys(j, {"type", "scale", "exponent"}, where);
        return PowerLawFactor{read_number(need(j, "scale", where), where + ".scale"),
                              read_number(need(j, "exponent", where), where + ".exponent")};
    }
    if (type == "piecewise_constant") {
        allow_keys(j, {"type", "breakpoints", "values"}, where);
        return PiecewiseConstantFactor{read_numbers(need(j, "breakpoints", where), where + ".breakpoints"),
                                       read_numbers(need(j, "values", where), where + ".values")};
    }
    throw ConfigError(where + ": unknown factor type '" + type + "'");
}

inline IntensityField field_from_json(Json const& j, std::string const& where)
{
    std::string const type = read_string(need(j, "type", where), where + ".type");
    if (type == "constant") {
        allow_keys(j, {"type", "rate"}, where);
        return ConstantField{read_number(need(j, "rate", where), where + ".rate")};
    }
    if (type == "product") {
        allow_keys(j, {"type", "time", "duration"}, where);
        ProductField f;
        if (auto it = j.find("time"); it != j.end()) {
            f.time = factor_from_json(*it, where + ".time");
        }
        if (auto it = j.find("duration"); it != j.end()) {
            f.duration = factor_from_json(*it, where + ".duration");
        }
        return f;
    }
    if (type == "table") {
        allow_keys(j, {"type", "t_grid", "u_grid", "values", "clamp"}, where);
        TableField f;
        f.t_grid = read_numbers(need(j, "t_grid", where), where + ".t_grid");
        f.u_grid = read_numbers(need(j, "u_grid", where), where + ".u_grid");
        auto const& rows = need(j, "values", where);
        if (!rows.is_array() || rows.size() != f.t_grid.size()) {
            throw ConfigError(where + ".values: need one row per t_grid point");
        }
        for (auto const& row : rows) {
            auto const vals = read_numbers(row, where + ".values");
            if (vals.size() != f.u_grid.size()) {
                throw ConfigError(where + ".values: each row needs one value per u_grid point");
            }
            f.values.insert(f.values.end(), vals.begin(), vals.end());
        }
        if (auto it = j.find("clamp"); it != j.end()) {
            if (!it->is_boolean()) {
                throw ConfigError(where + ".clamp: expected a boolean");
            }
            f.clamp = it->get<bool>();
        }
        return f;
    }
    throw ConfigError(where + ": unknown field type '" + type + "'");
}

inline ModelSpec model_from_json(Json const& j)
{
    allow_keys(j, {"states", "intensities"}, "model");
    ModelSpec spec;
    auto const& states = need(j, "states", "model");
    if (!states.is_array()) {
        throw ConfigError("model.states: expected an array of labels");
    }
    for (auto const& s : states) {
        spec.states.push_back(read_string(s, "model.states"));
    }
    auto const& entries = need(j, "intensities", "model");
    if (!entries.is_array()) {
        throw ConfigError("model.intensities: expected an array");
    }
    for (std::size_t k = 0; k < entries.size(); ++k) {
        std::string const where = "model.intensities[" + std::to_string(k) + "]";
        allow_keys(entries[k], {"from", "to", "field"}, where);
        spec.intensities.push_back({read_string(need(entries[k], "from", where), where + ".from"),
                                    read_string(need(entries[k], "to", where), where + ".to"),
                                    field_from_json(need(entries[k], "field", where), where + ".field")});
    }
    return spec;
}

inline ExperimentParams params_from_json(ExperimentKind kind, Json const& j)
{
    auto const num = [](Json const& v, std::string const& w) { return read_number(v, w); };
    auto const count = [](Json const& v, std::string const& w) { return read_count(v, w); };
    auto const nums = [](Json const& v, std::string const& w) { return read_numbers(v, w); };
    auto const str = [](Json const& v, std::string const& w) { return read_string(v, w); };
    std::string const w = "params";
    switch (kind) {
    case ExperimentKind::simulate: {
        allow_keys(j, {"start_state", "s", "u", "horizon", "n_paths", "max_jumps"}, w);
        SimulateParams p;
        p.start_state = str(need(j, "start_state", w), w + ".start_state");
        optional_field(j, "s", p.s, w, num);
        optional_field(j, "u", p.u, w, num);
        optional_field(j, "horizon", p.horizon, w, num);
        optional_field(j, "n_paths", p.n_paths, w, count);
        optional_field(j, "max_jumps", p.max_jumps, w, count);
        return p;
    }
    case ExperimentKind::solve: {
        allow_keys(j, {"start_state", "s", "u", "t_end", "step", "output_times"}, w);
        SolveParams p;
        p.start_state = str(need(j, "start_state", w), w + ".start_state");
        optional_field(j, "s", p.s, w, num);
        optional_field(j, "u", p.u, w, num);
        optional_field(j, "t_end", p.t_end, w, num);
        optional_field(j, "step", p.step, w, num);
        optional_field(j, "output_times", p.output_times, w, nums);
        if (p.output_times.empty()) {
            p.output_times = {p.t_end};
        }
        return p;
    }
    case ExperimentKind::verify: {
        allow_keys(j,
                   {"start_state", "t", "u", "h", "n_paths", "step", "quotient_steps", "residual_span", "residual_d",
                    "residual_step", "n_events", "chain_horizon", "significance", "checks"},
                   w);
        VerifyParams p;
        p.start_state = str(need(j, "start_state", w), w + ".start_state");
        optional_field(j, "t", p.t, w, num);
        optional_field(j, "u", p.u, w, num);
        optional_field(j, "h", p.h, w, nums);
        optional_field(j, "n_paths", p.n_paths, w, count);
        optional_field(j, "step", p.step, w, num);
        optional_field(j, "quotient_steps", p.quotient_steps, w, count);
        optional_field(j, "residual_span", p.residual_span, w, num);
        optional_field(j, "residual_d", p.residual_d, w, num);
        optional_field(j, "residual_step", p.residual_step, w, num);
        optional_field(j, "n_events", p.n_events, w, count);
        optional_field(j, "chain_horizon", p.chain_horizon, w, num);
        optional_field(j, "significance", p.significance, w, num);
        if (auto it = j.find("checks"); it != j.end()) {
            if (!it->is_array()) {
                throw ConfigError(w + ".checks: expected an array of names");
            }
            for (auto const& c : *it) {
                p.checks.push_back(str(c, w + ".checks"));
            }
        }
        return p;
    }
    case ExperimentKind::compare: {
        allow_keys(j,
                   {"start_state", "s", "u", "t_end", "step", "n_paths", "d_grid", "se_multiplier", "abs_tolerance"},
                   w);
        CompareParams p;
        p.start_state = str(need(j, "start_state", w), w + ".start_state");
        optional_field(j, "s", p.s, w, num);
        optional_field(j, "u", p.u, w, num);
        optional_field(j, "t_end", p.t_end, w, num);
        optional_field(j, "step", p.step, w, num);
        optional_field(j, "n_paths", p.n_paths, w, count);
        optional_field(j, "d_grid", p.d_grid, w, nums);
        optional_field(j, "se_multiplier", p.se_multiplier, w, num);
        optional_field(j, "abs_tolerance", p.abs_tolerance, w, num);
        return p;
    }
    }
    throw ConfigError("unknown experiment kind");
}

} // namespace detail

inline ExperimentKind parse_experiment_kind(std::string const& name)
{
    for (auto kind : {ExperimentKind::simulate, ExperimentKind::solve, ExperimentKind::verify, ExperimentKind::compare}) {
        if (name == to_string(kind)) {
            return kind;
        }
    }
    throw ConfigError("unknown experiment '" + name + "'");
}

/// Parses a config document. Structure only; see validate_config for the rest.
inline ExperimentConfig config_from_json(Json const& j)
{
    detail::allow_keys(j, {"schema_version", "model", "experiment", "params", "seed", "output_dir"}, "config");
    ExperimentConfig cfg;
    auto const version = detail::read_count(detail::need(j, "schema_version", "config"), "schema_version");
    if (version != static_cast<std::uint64_t>(kSchemaVersion)) {
        throw ConfigError("unsupported schema_version " + std::to_string(version));
    }
    cfg.model = detail::model_from_json(detail::need(j, "model", "config"));
    auto const kind = parse_experiment_kind(detail::read_string(detail::need(j, "experiment", "config"), "experiment"));
    cfg.params = detail::params_from_json(kind, detail::need(j, "params", "config"));
    if (auto it = j.find("seed"); it != j.end()) {
        cfg.seed = detail::read_count(*it, "seed");
    }
    if (auto it = j.find("output_dir"); it != j.end()) {
        cfg.output_dir = detail::read_string(*it, "output_dir");
    }
    return cfg;
}

inline ExperimentConfig parse_config(std::string const& text)
{
    Json j;
    try {
        j = Json::parse(text);
    } catch (Json::parse_error const& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

inline ExperimentConfig load_config(std::string const& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

//---------------------------------------------------------------------------//
// JSON writing (resolved config echo)
//---------------------------------------------------------------------------//

inline Json to_json(Factor const& factor)
{
    return std::visit(
        [](auto const& f) -> Json {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, ConstantFactor>) {
                return {{"type", "constant"}, {"value", f.value}};
            } else if constexpr (std::is_same_v<T, ExponentialFactor>) {
                return {{"type", "exponential"}, {"scale", f.scale}, {"growth", f.growth}};
            } else if constexpr (std::is_same_v<T, PowerLawFactor>) {
                return {{"type", "power_law"}, {"scale", f.scale}, {"exponent", f.exponent}};
            } else {
                return {{"type", "piecewise_constant"}, {"breakpoints", f.breakpoints}, {"values", f.values}};
            }
        },
        factor);
}

inline Json to_json(IntensityField const& field)
{
    return std::visit(
        [](auto const& f) -> Json {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, ConstantField>) {
                return {{"type", "constant"}, {"rate", f.rate}};
            } else if constexpr (std::is_same_v<T, ProductField>) {
                return {{"type", "product"}, {"time", to_json(f.time)}, {"duration", to_json(f.duration)}};
            } else if constexpr (std::is_same_v<T, TableField>) {
                Json rows = Json::array();
                std::size_t const nu = f.u_grid.size();
                for (std::size_t a = 0; a < f.t_grid.size(); ++a) {
                    rows.push_back(std::vector<double>(f.values.begin() + static_cast<std::ptrdiff_t>(a * nu),
                                                       f.values.begin() + static_cast<std::ptrdiff_t>((a + 1) * nu)));
                }
                return {{"type", "table"}, {"t_grid", f.t_grid}, {"u_grid", f.u_grid}, {"values", rows},
                        {"clamp", f.clamp}};
            } else {
                throw ConfigError("custom fields cannot be written to a config");
            }
        },
        field);
}

inline Json to_json(ModelSpec const& spec)
{
    Json entries = Json::array();
    for (auto const& e : spec.intensities) {
        entries.push_back({{"from", e.from}, {"to", e.to}, {"field", to_json(e.field)}});
    }
    return {{"states", spec.states}, {"intensities", entries}};
}

inline Json to_json(ExperimentParams const& params)
{
    return std::visit(
        [](auto const& p) -> Json {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, SimulateParams>) {
                return {{"start_state", p.start_state}, {"s", p.s}, {"u", p.u}, {"horizon", p.horizon},
                        {"n_paths", p.n_paths}, {"max_jumps", p.max_jumps}};
            } else if constexpr (std::is_same_v<T, SolveParams>) {
                return {{"start_state", p.start_state}, {"s", p.s}, {"u", p.u}, {"t_end", p.t_end},
                        {"step", p.step}, {"output_times", p.output_times}};
            } else if constexpr (std::is_same_v<T, VerifyParams>) {
                return {{"start_state", p.start_state}, {"t", p.t}, {"u", p.u}, {"h", p.h},
                        {"n_paths", p.n_paths}, {"step", p.step}, {"quotient_steps", p.quotient_steps},
                        {"residual_span", p.residual_span}, {"residual_d", p.residual_d},
                        {"residual_step", p.residual_step}, {"n_events", p.n_events},
                        {"chain_horizon", p.chain_horizon}, {"significance", p.significance},
                        {"checks", p.checks}};
            } else {
                return {{"start_state", p.start_state}, {"s", p.s}, {"u", p.u}, {"t_end", p.t_end},
                        {"step", p.step}, {"n_paths", p.n_paths}, {"d_grid", p.d_grid},
                        {"se_multiplier", p.se_multiplier}, {"abs_tolerance", p.abs_tolerance}};
            }
        },
        params);
}

/// Every field spelled out, defaults included; parses back to the same config.
inline Json to_json(ExperimentConfig const& cfg)
{
    return {{"schema_version", cfg.schema_version},
            {"model", to_json(cfg.model)},
            {"experiment", to_string(cfg.kind())},
            {"params", to_json(cfg.params)},
            {"seed", cfg.seed},
            {"output_dir", cfg.output_dir}};
}

//---------------------------------------------------------------------------//
// Semantic validation
//---------------------------------------------------------------------------//

namespace detail {

inline void require(bool ok, std::string const& message)
{
    if (!ok) {
        throw ConfigError(message);
    }
}

inline bool is_multiple(double span, double step)
{
    double const k = span / step;
    return std::abs(k - std::round(k)) <= 1e-9 * std::max(1.0, k);
}

/// Calendar horizon and largest duration the experiment can touch.
inline std::pair<double, double> reach(ExperimentParams const& params)
{
    return std::visit(
        [](auto const& p) -> std::pair<double, double> {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, SimulateParams>) {
                return {p.horizon, p.u + p.horizon - p.s};
            } else if constexpr (std::is_same_v<T, SolveParams> || std::is_same_v<T, CompareParams>) {
                return {p.t_end, p.u + p.t_end - p.s};
            } else {
                double h_max = p.h.empty() ? 0.0 : *std::max_element(p.h.begin(), p.h.end());
                double const end = p.t + std::max({1.0, h_max, p.residual_span});
                double horizon = end;
                if (std::find(p.checks.begin(), p.checks.end(), "embedded_chain") != p.checks.end()
                    || p.checks.empty()) {
                    horizon = std::max(horizon, p.t + p.chain_horizon);
                }
                return {horizon, p.u + horizon - p.t};
            }
        },
        params);
}

} // namespace detail

/*!
 * Checks everything the experiment relies on: labels, positivity, grid
 * alignment, and nonnegative finite intensities over the region the
 * experiment touches. Throws ConfigError; returns the built model.
 */
inline IntensityModel validate_config(ExperimentConfig const& cfg, std::size_t resolution = 64)
{
    using detail::require;
    IntensityModel model = [&] {
        try {
            return cfg.model.build();
        } catch (DomainError const& e) {
            throw ConfigError(std::string("model: ") + e.what());
        }
    }();
    require(!cfg.output_dir.empty(), "output_dir must not be empty");

    std::visit(
        [&](auto const& p) {
            using T = std::decay_t<decltype(p)>;
            require(model.states().find(p.start_state).has_value(),
                    "params.start_state '" + p.start_state + "' is not a state");
            require(p.u >= 0.0, "params.u must be nonnegative");
            if constexpr (std::is_same_v<T, SimulateParams>) {
                require(p.s >= 0.0, "params.s must be nonnegative");
                require(p.horizon > p.s, "params.horizon must exceed s");
                require(p.n_paths > 0, "params.n_paths must be positive");
                require(p.max_jumps > 0, "params.max_jumps must be positive");
            } else if constexpr (std::is_same_v<T, SolveParams>) {
                require(p.s >= 0.0, "params.s must be nonnegative");
                require(p.t_end > p.s, "params.t_end must exceed s");
                require(p.step > 0.0, "params.step must be positive");
                require(detail::is_multiple(p.t_end - p.s, p.step), "params.step must divide t_end - s");
                for (double t : p.output_times) {
                    require(t >= p.s && t <= p.t_end + 1e-12, "params.output_times must lie in [s, t_end]");
                    require(detail::is_multiple(t - p.s, p.step), "params.output_times must lie on the step grid");
                }
            } else if constexpr (std::is_same_v<T, VerifyParams>) {
                require(p.t >= 0.0, "params.t must be nonnegative");
                require(!p.h.empty(), "params.h must not be empty");
                for (std::size_t k = 0; k < p.h.size(); ++k) {
                    require(p.h[k] > 0.0 && p.h[k] <= 1.0, "params.h values must lie in (0, 1]");
                    require(k == 0 || p.h[k] < p.h[k - 1], "params.h must be strictly descending");
                    require(detail::is_multiple(p.h[k], p.step), "params.h values must be multiples of step");
                }
                require(p.n_paths > 0, "params.n_paths must be positive");
                require(p.step > 0.0, "params.step must be positive");
                require(p.quotient_steps > 0, "params.quotient_steps must be positive");
                require(p.residual_step > 0.0 && p.residual_span > 0.0, "residual step and span must be positive");
                require(detail::is_multiple(p.residual_span, p.residual_step),
                        "params.residual_step must divide residual_span");
                require(p.residual_d > 0.0 && detail::is_multiple(p.residual_d, 0.5 * p.residual_step),
                        "params.residual_d must be a positive multiple of residual_step / 2");
                require(p.significance > 0.0 && p.significance < 1.0, "params.significance must lie in (0, 1)");
                require(p.chain_horizon > 0.0, "params.chain_horizon must be positive");
                for (auto const& c : p.checks) {
                    auto const& names = all_checks();
                    require(std::find(names.begin(), names.end(), c) != names.end(), "unknown check '" + c + "'");
                    if (c == "embedded_chain") {
                        require(model.size() >= 3, "embedded_chain needs at least three states");
                        require(p.n_events >= 2, "embedded_chain needs n_events >= 2");
                    }
                }
            } else {
                require(p.s >= 0.0, "params.s must be nonnegative");
                require(p.t_end > p.s, "params.t_end must exceed s");
                require(p.step > 0.0, "params.step must be positive");
                require(detail::is_multiple(p.t_end - p.s, p.step), "params.step must divide t_end - s");
                require(p.n_paths > 0, "params.n_paths must be positive");
                require(std::is_sorted(p.d_grid.begin(), p.d_grid.end()), "params.d_grid must be ascending");
                for (double d : p.d_grid) {
                    require(d >= 0.0, "params.d_grid values must be nonnegative");
                }
                require(p.se_multiplier >= 0.0 && p.abs_tolerance >= 0.0, "tolerances must be nonnegative");
            }
        },
        cfg.params);

    auto const [horizon, max_duration] = detail::reach(cfg.params);
    auto const report = validate(model, horizon, max_duration, resolution);
    if (!report.passed) {
        auto const& issue = report.issues.front();
        std::ostringstream msg;
        msg << "intensity " << model.states().label(issue.from) << " -> " << model.states().label(issue.to)
            << " is " << to_string(issue.kind) << " at t=" << issue.t << ", u=" << issue.u;
        if (!issue.message.empty()) {
            msg << " (" << issue.message << ")";
        }
        msg << "; " << report.issues.size() << " issue(s) found";
        throw ConfigError(msg.str());
    }
    return model;
}

} // namespace smpkit
