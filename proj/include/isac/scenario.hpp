#pragma once

// JSON scenario files: system constants, channel model, design selection and
// optional sweeps. Requires the vendored nlohmann json.hpp on the include path.

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "isac/channels.hpp"
#include "isac/conic.hpp"
#include "isac/model.hpp"
#include "isac/solver.hpp"

namespace isac {

/// Malformed or inconsistent scenario document.
class ConfigError : public ContractError {
public:
    using ContractError::ContractError;
};

struct Design {
    conic::Criterion criterion = conic::Criterion::Matching;
    conic::Receiver receiver = conic::Receiver::TypeII;

    std::string name() const { return std::string(to_string(criterion)) + ":" + to_string(receiver); }
    bool operator==(const Design&) const = default;
};

enum class SweepVariable { GammaDb, Users, Antennas };

inline const char* to_string(SweepVariable v) {
    switch (v) {
        case SweepVariable::GammaDb: return "gamma_db";
        case SweepVariable::Users: return "k";
        case SweepVariable::Antennas: return "n";
    }
    return "?";
}

struct Sweep {
    SweepVariable variable = SweepVariable::GammaDb;
    std::vector<double> values;
    int realizations = 1;
};

struct Scenario {
    int num_antennas = 8;
    double spacing_ratio = 0.5;
    double p0_watts = 0.1;
    /// Empty: equality for matching, inequality for max-min.
    std::optional<PowerMode> power_mode;
    ChannelScenario channels;
    int num_users = 5;
    double gamma_db = 10.0;
    double sigma2_dbm = -70.0;
    Design design;
    std::vector<double> beam_centers = {-kPi / 3, -kPi / 6, 0.0, kPi / 6, kPi / 3};
    double beam_width = kPi / 18;
    int grid_points = 101;
    double eta = 1.0;
    /// Explicit sensing set; otherwise the angles with non-zero desired gain.
    std::optional<SensingAngleSet> sensing;
    /// Designs compared by sweep/beampattern; empty means the command's default.
    std::vector<Design> designs;
    std::optional<Sweep> sweep;
    solver::Settings solver;

    UlaConfig ula() const { return UlaConfig(num_antennas, spacing_ratio); }
    double sigma2() const { return dbm_to_watts(sigma2_dbm); }
    double gamma() const { return db_to_linear(gamma_db); }

    DesiredBeampattern desired() const { return multibeam_desired_pattern(beam_centers, beam_width, grid_points); }

    SensingAngleSet sensing_set() const { return sensing ? *sensing : sensing_set_from_desired(desired(), eta); }

    PowerMode power_mode_for(conic::Criterion c) const {
        if (power_mode) return *power_mode;
        return c == conic::Criterion::Matching ? PowerMode::Equality : PowerMode::Inequality;
    }

    /// Channels of one realization; the scenario seed is replaced by `seed`.
    std::vector<UserChannel> realize_channels(std::uint64_t seed) const {
        ChannelScenario cs = channels;
        cs.seed = seed;
        return gen_channels(cs, ula(), num_users, sigma2(), gamma());
    }

    /// Problem for `design` on the given channels.
    conic::ProblemSpec problem(const Design& d, std::vector<UserChannel> chans) const {
        conic::ProblemSpec spec;
        spec.criterion = d.criterion;
        spec.receiver = d.receiver;
        spec.ula = ula();
        spec.system.total_power = p0_watts;
        spec.system.power_mode = power_mode_for(d.criterion);
        spec.channels = std::move(chans);
        if (d.criterion == conic::Criterion::Matching) {
            spec.desired = desired();
        } else {
            spec.sensing = sensing_set();
        }
        return spec;
    }

    conic::ProblemSpec problem() const { return problem(design, realize_channels(channels.seed)); }

    /// Copy with the sweep variable set to `value`.
    Scenario at(SweepVariable v, double value) const {
        Scenario s = *this;
        switch (v) {
            case SweepVariable::GammaDb: s.gamma_db = value; break;
            case SweepVariable::Users: s.num_users = static_cast<int>(value); break;
            case SweepVariable::Antennas: s.num_antennas = static_cast<int>(value); break;
        }
        s.validate();
        return s;
    }

    void validate() const {
        if (num_antennas < 2) throw ConfigError("scenario: ula.n must be >= 2");
        if (!(spacing_ratio > 0.0)) throw ConfigError("scenario: ula.spacing_ratio must be > 0");
        if (!(p0_watts > 0.0)) throw ConfigError("scenario: power budget must be > 0");
        if (num_users < 1) throw ConfigError("scenario: users.k must be >= 1");
        if (!(grid_points >= 2)) throw ConfigError("scenario: desired.grid_points must be >= 2");
        if (!(beam_width > 0.0)) throw ConfigError("scenario: desired.beam_width_rad must be > 0");
        if (!(eta > 0.0)) throw ConfigError("scenario: eta must be > 0");
        if (channels.user_angles && static_cast<int>(channels.user_angles->size()) != num_users)
            throw ConfigError("scenario: channels.angles must list one angle per user");
        if (sweep) {
            if (sweep->values.empty()) throw ConfigError("scenario: sweep.values is empty");
            if (sweep->realizations < 1) throw ConfigError("scenario: sweep.realizations must be >= 1");
        }
        try {
            channels.validate();
            solver.validate();
            if (sensing) sensing->validate();
            desired();
        } catch (const ContractError& e) {
            throw ConfigError(std::string("scenario: ") + e.what());
        }
    }
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError("scenario: '" + where + "' must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj.items())
        if (!ok.count(key)) throw ConfigError("scenario: unknown key '" + key + "' in '" + where + "'");
}

template <typename T>
T get(const json& obj, const char* key, const std::string& where) {
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("scenario: bad value for '" + where + "." + key + "': " + e.what());
    }
}

template <typename T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
    if (obj.contains(key)) out = get<T>(obj, key, where);
}

inline conic::Criterion parse_criterion(const std::string& s) {
    if (s == "matching") return conic::Criterion::Matching;
    if (s == "maxmin") return conic::Criterion::MaxMin;
    throw ConfigError("scenario: unknown criterion '" + s + "' (matching|maxmin)");
}

inline conic::Receiver parse_receiver(const std::string& s) {
    if (s == "type1") return conic::Receiver::TypeI;
    if (s == "type2") return conic::Receiver::TypeII;
    if (s == "noradar") return conic::Receiver::NoRadar;
    if (s == "radaronly") return conic::Receiver::RadarOnly;
    throw ConfigError("scenario: unknown receiver '" + s + "' (type1|type2|noradar|radaronly)");
}

}  // namespace detail

/// "criterion:receiver", e.g. "maxmin:type2".
inline Design parse_design(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ConfigError("scenario: design '" + text + "' is not criterion:receiver");
    return Design{detail::parse_criterion(text.substr(0, colon)), detail::parse_receiver(text.substr(colon + 1))};
}

inline Scenario parse_scenario(const nlohmann::json& doc) {
    using detail::check_keys;
    using detail::get;
    using detail::read;
    Scenario s;
    check_keys(doc, "<root>",
               {"ula", "system", "channels", "users", "criterion", "receiver", "desired", "sensing", "designs", "sweep",
                "solver"});
    if (doc.contains("ula")) {
        const auto& u = doc["ula"];
        check_keys(u, "ula", {"n", "spacing_ratio"});
        read(u, "n", "ula", s.num_antennas);
        read(u, "spacing_ratio", "ula", s.spacing_ratio);
    }
    if (doc.contains("system")) {
        const auto& sys = doc["system"];
        check_keys(sys, "system", {"p0_watts", "p0_dbm", "power_mode"});
        if (sys.contains("p0_watts") && sys.contains("p0_dbm"))
            throw ConfigError("scenario: give only one of system.p0_watts and system.p0_dbm");
        read(sys, "p0_watts", "system", s.p0_watts);
        if (sys.contains("p0_dbm")) s.p0_watts = dbm_to_watts(get<double>(sys, "p0_dbm", "system"));
        if (sys.contains("power_mode")) {
            const auto mode = get<std::string>(sys, "power_mode", "system");
            if (mode == "equality") {
                s.power_mode = PowerMode::Equality;
            } else if (mode == "inequality") {
                s.power_mode = PowerMode::Inequality;
            } else {
                throw ConfigError("scenario: system.power_mode must be equality or inequality");
            }
        }
    }
    if (doc.contains("channels")) {
        const auto& c = doc["channels"];
        check_keys(c, "channels", {"kind", "pathloss_db", "seed", "angles"});
        if (c.contains("kind")) {
            const auto kind = get<std::string>(c, "kind", "channels");
            if (kind == "rayleigh") {
                s.channels.kind = ChannelKind::Rayleigh;
            } else if (kind == "los") {
                s.channels.kind = ChannelKind::LOS;
            } else {
                throw ConfigError("scenario: channels.kind must be rayleigh or los");
            }
        }
        read(c, "pathloss_db", "channels", s.channels.pathloss_db);
        read(c, "seed", "channels", s.channels.seed);
        if (c.contains("angles")) s.channels.user_angles = get<std::vector<double>>(c, "angles", "channels");
    }
    if (doc.contains("users")) {
        const auto& u = doc["users"];
        check_keys(u, "users", {"k", "gamma_db", "sigma2_dbm"});
        read(u, "k", "users", s.num_users);
        read(u, "gamma_db", "users", s.gamma_db);
        read(u, "sigma2_dbm", "users", s.sigma2_dbm);
    }
    if (doc.contains("criterion")) s.design.criterion = detail::parse_criterion(get<std::string>(doc, "criterion", ""));
    if (doc.contains("receiver")) s.design.receiver = detail::parse_receiver(get<std::string>(doc, "receiver", ""));
    if (doc.contains("desired")) {
        const auto& d = doc["desired"];
        check_keys(d, "desired", {"beam_centers_rad", "beam_width_rad", "grid_points", "eta"});
        read(d, "beam_centers_rad", "desired", s.beam_centers);
        read(d, "beam_width_rad", "desired", s.beam_width);
        read(d, "grid_points", "desired", s.grid_points);
        read(d, "eta", "desired", s.eta);
    }
    if (doc.contains("sensing")) {
        const auto& d = doc["sensing"];
        check_keys(d, "sensing", {"angles", "weights"});
        SensingAngleSet set;
        set.angles = get<std::vector<double>>(d, "angles", "sensing");
        if (d.contains("weights")) {
            set.weights = get<std::vector<double>>(d, "weights", "sensing");
        } else {
            set.weights.assign(set.angles.size(), 1.0);
        }
        s.sensing = std::move(set);
    }
    if (doc.contains("designs")) {
        for (const auto& name : get<std::vector<std::string>>(doc, "designs", "")) s.designs.push_back(parse_design(name));
    }
    if (doc.contains("sweep")) {
        const auto& w = doc["sweep"];
        check_keys(w, "sweep", {"variable", "values", "realizations"});
        Sweep sw;
        const auto var = get<std::string>(w, "variable", "sweep");
        if (var == "gamma_db") {
            sw.variable = SweepVariable::GammaDb;
        } else if (var == "k") {
            sw.variable = SweepVariable::Users;
        } else if (var == "n") {
            sw.variable = SweepVariable::Antennas;
        } else {
            throw ConfigError("scenario: sweep.variable must be gamma_db, k or n");
        }
        sw.values = get<std::vector<double>>(w, "values", "sweep");
        read(w, "realizations", "sweep", sw.realizations);
        if (sw.variable != SweepVariable::GammaDb) {
            for (double v : sw.values)
                if (v != std::floor(v)) throw ConfigError("scenario: sweep values for k/n must be integers");
        }
        s.sweep = std::move(sw);
    }
    if (doc.contains("solver")) {
        const auto& o = doc["solver"];
        check_keys(o, "solver", {"tol_gap", "tol_feas", "max_iters"});
        read(o, "tol_gap", "solver", s.solver.tol_gap);
        read(o, "tol_feas", "solver", s.solver.tol_feas);
        read(o, "max_iters", "solver", s.solver.max_iters);
    }
    s.validate();
    return s;
}

inline Scenario parse_scenario_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scenario: invalid JSON: ") + e.what());
    }
    return parse_scenario(doc);
}

}  // namespace isac
