#pragma once

// Scenario layer: JSON configuration ingestion with validation, presets
// reproducing the bundled figure scenarios, deterministic execution, and
// CSV/JSON emission of column-oriented results.
//
// Conventions: all rates are in units of the individual flip rate (canonical
// configs set bit_flip_rate = 1); CSV output uses a comma separator, LF line
// endings, a header row and 17 significant digits.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "effective.hpp"
#include "ion_model.hpp"
#include "lindblad.hpp"
#include "metrology.hpp"
#include "optimizer.hpp"
#include "parallel.hpp"
#include "rate_model.hpp"
#include "tensor.hpp"

namespace autoqec {

using json = nlohmann::json;

inline constexpr const char* artifact_version = "1.0.0";

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& path, const std::string& message)
        : std::runtime_error("config error at '" + path + "': " + message), field_path(path) {}
    std::string field_path;
};

// --- enum parsing -----------------------------------------------------------

inline CodeVariant parse_variant(const std::string& s, const std::string& path) {
    if (s == "bit_individual") return CodeVariant::BitFlipIndividual;
    if (s == "bit_collective") return CodeVariant::BitFlipCollective;
    if (s == "phase_individual") return CodeVariant::PhaseFlipIndividual;
    if (s == "phase_collective") return CodeVariant::PhaseFlipCollective;
    throw ConfigError(path, "unknown code variant '" + s + "'");
}

inline DynamicsLevel parse_level(const std::string& s, const std::string& path) {
    if (s == "full_ancilla") return DynamicsLevel::FullWithAncilla;
    if (s == "engineered") return DynamicsLevel::EngineeredDecay;
    if (s == "effective") return DynamicsLevel::EffectiveJump;
    if (s == "ideal") return DynamicsLevel::IdealJump;
    if (s == "rate") return DynamicsLevel::RateModel;
    throw ConfigError(path, "unknown dynamics level '" + s + "'");
}

inline std::string level_name(DynamicsLevel level) {
    switch (level) {
        case DynamicsLevel::FullWithAncilla: return "full_ancilla";
        case DynamicsLevel::EngineeredDecay: return "engineered";
        case DynamicsLevel::EffectiveJump: return "effective";
        case DynamicsLevel::IdealJump: return "ideal";
        case DynamicsLevel::RateModel: return "rate";
    }
    return "?";
}

// --- config helpers ----------------------------------------------------------

namespace cfgdetail {

inline double get_number(const json& j, const std::string& key, double fallback,
                         const std::string& path) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw ConfigError(path + "." + key, "expected a number");
    return j.at(key).get<double>();
}

inline double require_nonnegative(double v, const std::string& path) {
    if (v < 0) throw ConfigError(path, "must be >= 0");
    return v;
}

}  // namespace cfgdetail

inline ModelParams parse_params(const json& j, const std::string& path = "params") {
    using cfgdetail::get_number;
    using cfgdetail::require_nonnegative;
    ModelParams p;
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    static const char* known[] = {"bit_flip_rate", "collective_flip_rate", "dephasing_rate",
                                  "collective_dephasing_rate", "drive_amplitude",
                                  "sideband_coupling", "ancilla_coupling", "ancilla_cooling_rate",
                                  "engineered_cooling_rate", "excited_detuning", "mode_detuning",
                                  "ancilla_detuning", "spontaneous_emission_rate", "mode_decay_a",
                                  "mode_decay_b", "signal_strength", "correction_rate",
                                  "mode_max_occupation"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError(path + "." + key, "unknown parameter");
    }
    p.bit_flip_rate = require_nonnegative(get_number(j, "bit_flip_rate", 0.0, path), path + ".bit_flip_rate");
    p.collective_flip_rate = require_nonnegative(get_number(j, "collective_flip_rate", 0.0, path),
                                                 path + ".collective_flip_rate");
    p.dephasing_rate = require_nonnegative(get_number(j, "dephasing_rate", 0.0, path), path + ".dephasing_rate");
    p.collective_dephasing_rate = require_nonnegative(
        get_number(j, "collective_dephasing_rate", 0.0, path), path + ".collective_dephasing_rate");
    p.drive_amplitude = require_nonnegative(get_number(j, "drive_amplitude", 0.0, path), path + ".drive_amplitude");
    p.sideband_coupling = require_nonnegative(get_number(j, "sideband_coupling", 0.0, path),
                                              path + ".sideband_coupling");
    p.ancilla_coupling = require_nonnegative(get_number(j, "ancilla_coupling", 0.0, path), path + ".ancilla_coupling");
    p.ancilla_cooling_rate = require_nonnegative(get_number(j, "ancilla_cooling_rate", 0.0, path),
                                                 path + ".ancilla_cooling_rate");
    if (j.contains("engineered_cooling_rate"))
        p.engineered_cooling_rate = require_nonnegative(
            get_number(j, "engineered_cooling_rate", 0.0, path), path + ".engineered_cooling_rate");
    if (j.contains("excited_detuning")) p.excited_detuning = get_number(j, "excited_detuning", 0.0, path);
    if (j.contains("mode_detuning")) p.mode_detuning = get_number(j, "mode_detuning", 0.0, path);
    p.ancilla_detuning = get_number(j, "ancilla_detuning", 0.0, path);
    p.spontaneous_emission_rate = require_nonnegative(
        get_number(j, "spontaneous_emission_rate", 0.0, path), path + ".spontaneous_emission_rate");
    p.mode_decay_a = require_nonnegative(get_number(j, "mode_decay_a", 0.0, path), path + ".mode_decay_a");
    p.mode_decay_b = require_nonnegative(get_number(j, "mode_decay_b", 0.0, path), path + ".mode_decay_b");
    p.signal_strength = get_number(j, "signal_strength", 0.0, path);
    p.correction_rate = require_nonnegative(get_number(j, "correction_rate", 0.0, path), path + ".correction_rate");
    p.mode_max_occupation = static_cast<int>(get_number(j, "mode_max_occupation", 1, path));
    if (p.mode_max_occupation < 1) throw ConfigError(path + ".mode_max_occupation", "must be >= 1");
    return p;
}

inline std::vector<double> parse_grid(const json& j, const std::string& path,
                                      bool must_start_at_zero) {
    std::vector<double> grid;
    if (j.is_array()) {
        for (const auto& v : j) {
            if (!v.is_number()) throw ConfigError(path, "grid entries must be numbers");
            grid.push_back(v.get<double>());
        }
    } else if (j.is_object()) {
        double start = cfgdetail::get_number(j, "start", 0.0, path);
        double stop = cfgdetail::get_number(j, "stop", 1.0, path);
        int points = static_cast<int>(cfgdetail::get_number(j, "points", 101, path));
        std::string spacing = j.value("spacing", "linear");
        if (points < 2) throw ConfigError(path + ".points", "need at least two grid points");
        if (!(stop > start)) throw ConfigError(path + ".stop", "must exceed start");
        if (spacing == "linear") {
            for (int i = 0; i < points; ++i)
                grid.push_back(start + (stop - start) * i / (points - 1));
        } else if (spacing == "log") {
            if (!(start > 0)) throw ConfigError(path + ".start", "log spacing requires start > 0");
            double ls = std::log(start), le = std::log(stop);
            for (int i = 0; i < points; ++i)
                grid.push_back(std::exp(ls + (le - ls) * i / (points - 1)));
        } else {
            throw ConfigError(path + ".spacing", "expected 'linear' or 'log'");
        }
        grid.back() = stop;
    } else {
        throw ConfigError(path, "expected an array or a grid object");
    }
    if (grid.empty()) throw ConfigError(path, "grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (grid[i] <= grid[i - 1]) throw ConfigError(path, "grid must be strictly increasing");
    if (must_start_at_zero && grid.front() != 0.0)
        throw ConfigError(path, "time grid must start at 0");
    return grid;
}

inline std::pair<Complex, Complex> parse_codeword(const json& j, const std::string& path) {
    Complex c0(1.0 / std::sqrt(2.0), 0.0), c1(0.0, 1.0 / std::sqrt(2.0));
    if (j.is_null()) return {c0, c1};
    if (!j.is_object()) throw ConfigError(path, "expected an object with c0/c1");
    auto get = [&](const char* key, Complex fallback) {
        if (!j.contains(key)) return fallback;
        const auto& v = j.at(key);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw ConfigError(path + "." + key, "expected [re, im]");
        return Complex(v[0].get<double>(), v[1].get<double>());
    };
    c0 = get("c0", c0);
    c1 = get("c1", c1);
    if (std::abs(std::norm(c0) + std::norm(c1) - 1.0) > 1e-10)
        throw ConfigError(path, "|c0|^2 + |c1|^2 must equal 1");
    return {c0, c1};
}

inline IntegratorConfig parse_integrator(const json& j, const std::string& path,
                                         IntegratorConfig base = {}) {
    if (j.is_null()) return base;
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    base.rel_tol = cfgdetail::get_number(j, "rel_tol", base.rel_tol, path);
    base.abs_tol = cfgdetail::get_number(j, "abs_tol", base.abs_tol, path);
    base.max_step = cfgdetail::get_number(j, "max_step", base.max_step, path);
    if (base.rel_tol <= 0 || base.abs_tol <= 0)
        throw ConfigError(path, "tolerances must be positive");
    return base;
}

// --- results -----------------------------------------------------------------

struct ResultRecord {
    std::string scenario;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> data;  // data[c][row]
    json metadata;

    std::size_t rows() const { return data.empty() ? 0 : data.front().size(); }
    void check() const {
        for (const auto& col : data)
            if (col.size() != rows()) throw std::logic_error("ragged result columns");
    }
};

// FNV-1a over the canonical (key-sorted) JSON serialization; stable under
// key reordering in the input document.
inline std::uint64_t config_hash(const json& config) {
    std::string canonical = config.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void emit_csv(const ResultRecord& record, std::ostream& os) {
    record.check();
    for (std::size_t c = 0; c < record.columns.size(); ++c)
        os << (c ? "," : "") << record.columns[c];
    os << "\n";
    for (std::size_t r = 0; r < record.rows(); ++r) {
        for (std::size_t c = 0; c < record.data.size(); ++c)
            os << (c ? "," : "") << format_double(record.data[c][r]);
        os << "\n";
    }
}

inline void emit_json(const ResultRecord& record, std::ostream& os) {
    record.check();
    json out;
    out["scenario"] = record.scenario;
    out["columns"] = record.columns;
    json data = json::object();
    for (std::size_t c = 0; c < record.columns.size(); ++c) {
        json col = json::array();
        for (double v : record.data[c]) col.push_back(v);
        data[record.columns[c]] = std::move(col);
    }
    out["data"] = std::move(data);
    out["metadata"] = record.metadata;
    os << out.dump(2) << "\n";
}

inline void emit(const ResultRecord& record, const std::string& format, std::ostream& os) {
    if (format == "csv")
        emit_csv(record, os);
    else if (format == "json")
        emit_json(record, os);
    else
        throw ConfigError("format", "expected 'csv' or 'json'");
}

// --- presets -------------------------------------------------------------------

// Operating point used by the bundled sensing presets: engineered cooling at
// 1.2 (flip G^2)^{1/3} with drive at 4/5 of it.
inline void preset_operating_point(json& params, double coupling) {
    double kappa = 1.2 * std::cbrt(coupling * coupling);
    params["sideband_coupling"] = coupling;
    params["engineered_cooling_rate"] = kappa;
    params["drive_amplitude"] = 0.8 * kappa;
}

inline json preset_config(const std::string& name) {
    json c;
    c["preset"] = name;
    json params;
    params["bit_flip_rate"] = 1.0;

    if (name == "fig1") {
        c["scenario"] = "ramsey";
        preset_operating_point(params, 5000.0);
        params["signal_strength"] = 2.0;  // flips at half the signal strength
        c["params"] = params;
        c["ramsey"] = {{"mode", "fringe"},
                       {"backend", "effective"},
                       {"curves", {"no_noise", "no_correction", "corrected"}}};
        c["tau_grid"] = {{"start", 2.0944 / 120}, {"stop", 2.0944}, {"points", 120}, {"spacing", "linear"}};
        return c;
    }
    if (name == "fig5") {
        c["scenario"] = "compare";
        c["params"] = params;
        c["compare"] = {{"couplings", {500.0, 1000.0, 2500.0, 5000.0, 10000.0}},
                        {"optimize", false},
                        {"effective_columns", false},
                        {"single_qubit_column", true}};
        c["time_grid"] = {{"start", 0.0}, {"stop", 1.0}, {"points", 101}};
        return c;
    }
    if (name == "fig6") {
        c["scenario"] = "dephasing_sweep";
        preset_operating_point(params, 5000.0);
        c["params"] = params;
        c["dephasing_rates"] = {0.0, 0.02, 0.04};
        c["time_grid"] = {{"start", 0.0}, {"stop", 1.0}, {"points", 51}};
        return c;
    }
    if (name == "fig7") {
        c["scenario"] = "ramsey";
        preset_operating_point(params, 5000.0);
        c["params"] = params;
        c["ramsey"] = {{"mode", "sensitivity"},
                       {"backend", "effective"},
                       {"curves", {"no_ec", "ideal", "effective", "no_noise"}}};
        c["tau_grid"] = {{"start", 0.01}, {"stop", 100.0}, {"points", 25}, {"spacing", "log"}};
        return c;
    }
    if (name == "fig8") {
        c["scenario"] = "compare";
        c["params"] = params;
        c["compare"] = {{"couplings", {500.0, 1000.0, 2500.0, 5000.0, 10000.0}},
                        {"optimize", false},
                        {"effective_columns", true},
                        {"single_qubit_column", true}};
        c["time_grid"] = {{"start", 0.0}, {"stop", 1.0}, {"points", 101}};
        return c;
    }
    if (name == "fig9") {
        c["scenario"] = "ramsey";
        preset_operating_point(params, 5000.0);
        params["collective_dephasing_rate"] = 0.01;
        c["params"] = params;
        c["ramsey"] = {{"mode", "sensitivity"},
                       {"backend", "effective"},
                       {"curves", {"no_ec", "effective", "effective_clean"}}};
        c["tau_grid"] = {{"start", 0.01}, {"stop", 100.0}, {"points", 25}, {"spacing", "log"}};
        return c;
    }
    if (name == "rates") {
        c["scenario"] = "rates";
        preset_operating_point(params, 5000.0);
        c["params"] = params;
        c["time_grid"] = {{"start", 0.0}, {"stop", 1.0}, {"points", 101}};
        return c;
    }
    throw ConfigError("preset", "unknown preset '" + name + "'");
}

// Right-biased merge: fields present in the override replace preset fields
// (objects merge recursively).
inline json merge_config(json base, const json& override_cfg) {
    if (!override_cfg.is_object()) return base;
    for (const auto& [key, value] : override_cfg.items()) {
        if (value.is_object() && base.contains(key) && base.at(key).is_object())
            base[key] = merge_config(base.at(key), value);
        else
            base[key] = value;
    }
    return base;
}

// --- scenario execution ----------------------------------------------------------

namespace scenariodetail {

struct Common {
    ModelParams params;
    CodeVariant variant = CodeVariant::BitFlipIndividual;
    DynamicsLevel level = DynamicsLevel::EngineeredDecay;
    Complex c0, c1;
    IntegratorConfig integrator;
    int max_excitation = 1;
    int threads = 0;
};

inline Common parse_common(const json& cfg) {
    Common c;
    c.params = cfg.contains("params") ? parse_params(cfg.at("params")) : ModelParams{};
    c.variant = parse_variant(cfg.value("variant", "bit_individual"), "variant");
    c.level = parse_level(cfg.value("level", "engineered"), "level");
    auto [c0, c1] = parse_codeword(cfg.contains("codeword") ? cfg.at("codeword") : json(), "codeword");
    c.c0 = c0;
    c.c1 = c1;
    c.integrator = parse_integrator(cfg.contains("integrator") ? cfg.at("integrator") : json(), "integrator");
    c.max_excitation = static_cast<int>(cfgdetail::get_number(cfg, "max_excitation", 1, "max_excitation"));
    if (c.max_excitation < 0) throw ConfigError("max_excitation", "must be >= 0");
    c.threads = static_cast<int>(cfgdetail::get_number(cfg, "threads", 0, "threads"));
    return c;
}

// fidelity trace of one protected-qubit evolution; the effective level
// applies the excited-population correction to the fidelity column
inline std::vector<double> fidelity_curve(const ModelParams& params, CodeVariant variant,
                                          DynamicsLevel level, Complex c0, Complex c1,
                                          const std::vector<double>& grid,
                                          const IntegratorConfig& integ, int max_exc) {
    BasisPtr basis = make_code_basis(level, variant, max_exc, params.mode_max_occupation);
    StateVector psi = initial_codeword(variant, c0, c1, basis);
    DensityMatrix rho0 = DensityMatrix::pure(psi);
    if (level == DynamicsLevel::EffectiveJump) {
        EffectiveModel em = build_effective_model(params, variant, basis);
        auto res = evolve(em.model, rho0, grid, integ, &psi);
        for (double& f : res.fidelity) f *= 1.0 - em.rates.excited_population;
        return res.fidelity;
    }
    LindbladModel model = build_model(params, variant, level, basis);
    return evolve(model, rho0, grid, integ, &psi).fidelity;
}

inline std::vector<double> single_qubit_curve(double flip_rate, const std::vector<double>& grid) {
    std::vector<double> out;
    out.reserve(grid.size());
    for (double t : grid) out.push_back(0.5 * (1.0 + std::exp(-2.0 * flip_rate * t)));
    return out;
}

inline ResultRecord run_simulate(const json& cfg) {
    Common c = parse_common(cfg);
    auto grid = parse_grid(cfg.contains("time_grid") ? cfg.at("time_grid")
                                                     : json{{"start", 0.0}, {"stop", 1.0}, {"points", 101}},
                           "time_grid", true);
    BasisPtr basis = make_code_basis(c.level, c.variant, c.max_excitation, c.params.mode_max_occupation);
    StateVector psi = initial_codeword(c.variant, c.c0, c.c1, basis);
    auto observables = standard_observables(c.variant, c.c0, c.c1, basis);

    EvolutionResult res = [&] {
        if (c.level == DynamicsLevel::EffectiveJump) {
            EffectiveModel em = build_effective_model(c.params, c.variant, basis);
            return evolve(em.model, DensityMatrix::pure(psi), grid, c.integrator, &psi, observables);
        }
        LindbladModel model = build_model(c.params, c.variant, c.level, basis);
        return evolve(model, DensityMatrix::pure(psi), grid, c.integrator, &psi, observables);
    }();

    ResultRecord rec;
    rec.scenario = "simulate";
    rec.columns = {"t", "fidelity", "p_logical", "p_correctable", "p_uncorrectable", "p_excited"};
    rec.data = {res.times, res.fidelity, res.populations.at("logical"),
                res.populations.at("correctable"), res.populations.at("uncorrectable"),
                res.populations.at("excited")};
    rec.metadata["max_trace_drift"] = res.max_trace_drift;
    rec.metadata["steps"] = res.steps_taken;
    for (const auto& w : res.warnings) rec.metadata["warnings"].push_back(w);
    if (c.level == DynamicsLevel::EffectiveJump) {
        EffectiveRates rates = effective_rates(c.params);
        rec.columns.push_back("fidelity_strong_corrected");
        std::vector<double> corrected = res.fidelity;
        for (double& f : corrected) f *= 1.0 - rates.excited_population;
        rec.data.push_back(std::move(corrected));
    }
    return rec;
}

inline ResultRecord run_rates(const json& cfg) {
    Common c = parse_common(cfg);
    auto grid = parse_grid(cfg.contains("time_grid") ? cfg.at("time_grid")
                                                     : json{{"start", 0.0}, {"stop", 1.0}, {"points", 101}},
                           "time_grid", true);
    RateParams rp;
    bool backflow = false;
    if (cfg.contains("rates") && cfg.at("rates").is_object()) {
        const json& r = cfg.at("rates");
        backflow = r.value("backflow", false);
        if (r.contains("error_rate") || r.contains("correction_rate") || r.contains("leakage_rate")) {
            rp.error_rate = cfgdetail::get_number(r, "error_rate", 0.0, "rates");
            rp.correction_rate = cfgdetail::get_number(r, "correction_rate", 0.0, "rates");
            rp.leakage_rate = cfgdetail::get_number(r, "leakage_rate", 0.0, "rates");
            rp.backflow_rate = backflow ? cfgdetail::get_number(r, "backflow_rate", c.params.bit_flip_rate, "rates")
                                        : 0.0;
            rp.validate();
        } else {
            rp = derive_rates(c.params.bit_flip_rate, effective_rates(c.params), backflow);
        }
    } else {
        rp = derive_rates(c.params.bit_flip_rate, effective_rates(c.params), backflow);
    }

    RateSolution sol = solve_rate_model(rp, grid);
    ResultRecord rec;
    rec.scenario = "rates";
    rec.columns = {"t", "p_logical", "p_correctable", "p_uncorrectable"};
    rec.data = {sol.times, sol.p_logical, sol.p_correctable, sol.p_uncorrectable};
    rec.metadata["error_rate"] = rp.error_rate;
    rec.metadata["correction_rate"] = rp.correction_rate;
    rec.metadata["leakage_rate"] = rp.leakage_rate;
    rec.metadata["static_error"] = sol.static_error;
    rec.metadata["fast_rate"] = sol.fast_rate;
    rec.metadata["slow_rate"] = sol.slow_rate;
    if (rp.error_rate > 0 && rp.correction_rate > 0) {
        HockeyStickSummary hs = hockey_stick_summary(rp);
        rec.metadata["summary_static_error"] = hs.static_error;
        rec.metadata["summary_decay_rate"] = hs.effective_decay_rate;
    }
    return rec;
}

inline ResultRecord run_optimize(const json& cfg) {
    Common c = parse_common(cfg);
    json oc = cfg.contains("optimizer") ? cfg.at("optimizer") : json::object();
    DynamicsLevel backend = parse_level(oc.value("backend", "engineered"), "optimizer.backend");
    double t_star = cfgdetail::get_number(oc, "target_time", 1.0, "optimizer");
    SearchConfig sc;
    sc.coarse_kappa_points = static_cast<int>(cfgdetail::get_number(oc, "coarse_points", 12, "optimizer"));
    sc.coarse_ratio_points = sc.coarse_kappa_points;
    sc.refine_iterations = static_cast<int>(cfgdetail::get_number(oc, "refine_iterations", 6, "optimizer"));
    sc.threads = c.threads;
    sc.variant = c.variant;
    sc.integrator = parse_integrator(oc.contains("integrator") ? oc.at("integrator") : json(),
                                     "optimizer.integrator", sc.integrator);

    double flip = c.params.bit_flip_rate;
    double coupling = c.params.sideband_coupling;
    OptimizationResult numeric = numeric_optimum(flip, coupling, t_star, backend, sc);
    OptimizationResult analytic = analytic_optimum(flip, coupling, sc.r);

    ResultRecord rec;
    rec.scenario = "optimize";
    rec.columns = {"kappa_eng", "drive", "achieved_fidelity", "alpha", "evaluations",
                   "analytic_kappa_eng", "analytic_drive", "analytic_static_error",
                   "analytic_decay_rate"};
    rec.data = {{numeric.kappa_eng}, {numeric.drive},  {numeric.achieved_fidelity},
                {numeric.alpha},     {static_cast<double>(numeric.evaluations)},
                {analytic.kappa_eng}, {analytic.drive}, {analytic.predicted_static_error},
                {analytic.predicted_decay_rate}};
    rec.metadata["backend"] = level_name(backend);
    rec.metadata["target_time"] = t_star;
    for (const auto& w : analytic.warnings) rec.metadata["warnings"].push_back(w);
    return rec;
}

inline ResultRecord run_compare(const json& cfg) {
    Common c = parse_common(cfg);
    auto grid = parse_grid(cfg.contains("time_grid") ? cfg.at("time_grid")
                                                     : json{{"start", 0.0}, {"stop", 1.0}, {"points", 101}},
                           "time_grid", true);
    json cc = cfg.contains("compare") ? cfg.at("compare") : json::object();
    std::vector<double> couplings;
    if (cc.contains("couplings"))
        for (const auto& g : cc.at("couplings")) couplings.push_back(g.get<double>());
    else
        couplings.push_back(c.params.sideband_coupling);
    if (couplings.empty()) throw ConfigError("compare.couplings", "need at least one coupling");
    bool optimize = cc.value("optimize", false);
    bool effective_columns = cc.value("effective_columns", true);
    bool single_column = cc.value("single_qubit_column", true);

    struct Curve {
        double coupling;
        ModelParams params;
        std::vector<double> full, eff;
    };
    std::vector<Curve> curves(couplings.size());
    for (std::size_t i = 0; i < couplings.size(); ++i) {
        curves[i].coupling = couplings[i];
        ModelParams p = c.params;
        p.sideband_coupling = couplings[i];
        if (optimize) {
            SearchConfig sc;
            sc.threads = c.threads;
            sc.variant = c.variant;
            OptimizationResult opt =
                numeric_optimum(p.bit_flip_rate, couplings[i], grid.back(),
                                DynamicsLevel::EngineeredDecay, sc);
            p.engineered_cooling_rate = opt.kappa_eng;
            p.drive_amplitude = opt.drive;
        } else if (!(p.resolved_engineered_rate() > 0) || couplings.size() > 1) {
            double kappa = 1.2 * std::cbrt(p.bit_flip_rate * couplings[i] * couplings[i]);
            p.engineered_cooling_rate = kappa;
            p.drive_amplitude = 0.8 * kappa;
        }
        curves[i].params = p;
    }

    parallel_for(curves.size(), c.threads, [&](std::size_t i) {
        curves[i].full = fidelity_curve(curves[i].params, c.variant, DynamicsLevel::EngineeredDecay,
                                        c.c0, c.c1, grid, c.integrator, c.max_excitation);
        if (effective_columns)
            curves[i].eff = fidelity_curve(curves[i].params, c.variant, DynamicsLevel::EffectiveJump,
                                           c.c0, c.c1, grid, c.integrator, c.max_excitation);
    });

    ResultRecord rec;
    rec.scenario = "compare";
    rec.columns = {"t"};
    rec.data = {grid};
    for (const auto& curve : curves) {
        std::string suffix = "_G" + std::to_string(static_cast<long long>(std::llround(curve.coupling)));
        rec.columns.push_back("F_full" + suffix);
        rec.data.push_back(curve.full);
        if (effective_columns) {
            rec.columns.push_back("F_eff" + suffix);
            rec.data.push_back(curve.eff);
        }
        json info;
        info["coupling"] = curve.coupling;
        info["engineered_cooling_rate"] = curve.params.resolved_engineered_rate();
        info["drive_amplitude"] = curve.params.drive_amplitude;
        rec.metadata["operating_points"].push_back(info);
    }
    if (single_column) {
        rec.columns.push_back("F_single");
        rec.data.push_back(single_qubit_curve(c.params.bit_flip_rate, grid));
    }
    return rec;
}

inline ResultRecord run_dephasing_sweep(const json& cfg) {
    Common c = parse_common(cfg);
    auto grid = parse_grid(cfg.contains("time_grid") ? cfg.at("time_grid")
                                                     : json{{"start", 0.0}, {"stop", 1.0}, {"points", 51}},
                           "time_grid", true);
    std::vector<double> rates;
    if (cfg.contains("dephasing_rates"))
        for (const auto& v : cfg.at("dephasing_rates")) rates.push_back(v.get<double>());
    else
        rates = {0.0, 0.02, 0.04};
    for (double r : rates)
        if (r < 0) throw ConfigError("dephasing_rates", "must be >= 0");

    std::vector<std::vector<double>> curves(rates.size());
    parallel_for(rates.size(), c.threads, [&](std::size_t i) {
        ModelParams p = c.params;
        p.dephasing_rate = rates[i];
        curves[i] = fidelity_curve(p, c.variant, c.level, c.c0, c.c1, grid, c.integrator,
                                   c.max_excitation);
    });

    ResultRecord rec;
    rec.scenario = "dephasing_sweep";
    rec.columns = {"t"};
    rec.data = {grid};
    for (std::size_t i = 0; i < rates.size(); ++i) {
        std::ostringstream name;
        name << "F_dephasing_" << format_double(rates[i]);
        rec.columns.push_back(name.str());
        rec.data.push_back(curves[i]);
    }
    rec.columns.push_back("F_single");
    rec.data.push_back(single_qubit_curve(c.params.bit_flip_rate, grid));
    return rec;
}

inline ResultRecord run_ramsey(const json& cfg) {
    Common c = parse_common(cfg);
    json rc = cfg.contains("ramsey") ? cfg.at("ramsey") : json::object();
    std::string mode = rc.value("mode", "sensitivity");
    DynamicsLevel backend = parse_level(rc.value("backend", "effective"), "ramsey.backend");
    std::vector<std::string> curve_names;
    if (rc.contains("curves"))
        for (const auto& v : rc.at("curves")) curve_names.push_back(v.get<std::string>());
    else
        curve_names = {"no_ec", "effective", "no_noise"};
    auto tau_grid = parse_grid(cfg.contains("tau_grid")
                                   ? cfg.at("tau_grid")
                                   : json{{"start", 0.01}, {"stop", 100.0}, {"points", 25}, {"spacing", "log"}},
                               "tau_grid", false);
    if (tau_grid.front() <= 0) throw ConfigError("tau_grid", "wait times must be positive");

    // base correction parameters; the ideal backend needs the conditional
    // correction rate, which defaults to the broadened resonant rate
    ModelParams base = c.params;
    if (base.correction_rate == 0.0 && base.drive_amplitude > 0 &&
        base.resolved_engineered_rate() > 0)
        base.correction_rate =
            kappa_eff1_strong(base.drive_amplitude, base.resolved_engineered_rate());

    auto make_cfg = [&](const std::string& name) {
        RamseyConfig rcfg;
        rcfg.params = base;
        rcfg.variant = c.variant;
        rcfg.threads = 1;  // outer sweep parallelizes
        rcfg.max_excitation = c.max_excitation;
        if (name == "no_noise") {
            rcfg.params.bit_flip_rate = 0.0;
            rcfg.params.collective_flip_rate = 0.0;
            rcfg.params.dephasing_rate = 0.0;
            rcfg.params.collective_dephasing_rate = 0.0;
            rcfg.correction_enabled = false;
        } else if (name == "no_ec" || name == "no_correction") {
            rcfg.correction_enabled = false;
        } else if (name == "ideal") {
            rcfg.backend = DynamicsLevel::IdealJump;
        } else if (name == "effective" || name == "corrected") {
            rcfg.backend = backend;
        } else if (name == "effective_clean") {
            rcfg.backend = backend;
            rcfg.params.collective_dephasing_rate = 0.0;
            rcfg.params.dephasing_rate = 0.0;
        } else {
            throw ConfigError("ramsey.curves", "unknown curve '" + name + "'");
        }
        return rcfg;
    };

    ResultRecord rec;
    rec.scenario = "ramsey";
    rec.columns = {"tau_R"};
    rec.data = {tau_grid};

    if (mode == "fringe") {
        double omega = base.signal_strength;
        if (omega == 0.0) throw ConfigError("params.signal_strength", "fringe mode needs a signal");
        for (const auto& name : curve_names) {
            RamseyConfig rcfg = make_cfg(name);
            std::vector<double> p1(tau_grid.size());
            parallel_for(tau_grid.size(), c.threads,
                         [&](std::size_t i) { p1[i] = ramsey_run(rcfg, tau_grid[i], omega); });
            rec.columns.push_back("p1_" + name);
            rec.data.push_back(std::move(p1));
        }
    } else if (mode == "sensitivity") {
        for (const auto& name : curve_names) {
            RamseyConfig rcfg = make_cfg(name);
            std::vector<SensitivityPoint> pts(tau_grid.size());
            parallel_for(tau_grid.size(), c.threads,
                         [&](std::size_t i) { pts[i] = sensitivity(rcfg, tau_grid[i]); });
            std::vector<double> dw(tau_grid.size());
            for (std::size_t i = 0; i < pts.size(); ++i) dw[i] = pts[i].normalized_uncertainty;
            rec.columns.push_back("dw_" + name);
            rec.data.push_back(std::move(dw));
        }
    } else {
        throw ConfigError("ramsey.mode", "expected 'sensitivity' or 'fringe'");
    }
    rec.metadata["backend"] = level_name(backend);
    rec.metadata["correction_rate"] = base.correction_rate;
    return rec;
}

}  // namespace scenariodetail

inline ResultRecord run_scenario(const json& user_config) {
    json cfg = user_config;
    if (cfg.contains("preset"))
        cfg = merge_config(preset_config(cfg.at("preset").get<std::string>()), user_config);

    std::string scenario = cfg.value("scenario", "");
    auto start = std::chrono::steady_clock::now();

    ResultRecord rec;
    if (scenario == "simulate")
        rec = scenariodetail::run_simulate(cfg);
    else if (scenario == "rates")
        rec = scenariodetail::run_rates(cfg);
    else if (scenario == "optimize")
        rec = scenariodetail::run_optimize(cfg);
    else if (scenario == "compare")
        rec = scenariodetail::run_compare(cfg);
    else if (scenario == "dephasing_sweep")
        rec = scenariodetail::run_dephasing_sweep(cfg);
    else if (scenario == "ramsey")
        rec = scenariodetail::run_ramsey(cfg);
    else
        throw ConfigError("scenario", scenario.empty() ? "missing scenario" : "unknown scenario '" + scenario + "'");

    auto stop = std::chrono::steady_clock::now();
    rec.check();
    if (cfg.contains("preset")) rec.metadata["preset"] = cfg.at("preset");
    rec.metadata["version"] = artifact_version;
    rec.metadata["config_hash"] = config_hash(cfg);
    rec.metadata["wall_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(stop - start).count();
    return rec;
}

}  // namespace autoqec
