#pragma once

// Scenario configuration: a flat `key = value` document with `#` comments.
// Unspecified keys keep the defaults below (the reference highway settings).

#include <algorithm>
#include <cctype>
#include <climits>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "rbnoma/channel.hpp"
#include "rbnoma/common.hpp"

namespace rbnoma {

enum class TrafficMode { Periodic, Aperiodic };
enum class ReceiverMode { Legacy, Sic, SicFrc, SicFrcBkc };
enum class AllocationMode { Sbsps, Sbds, Sorted };

/// Sentinel for an unbounded SIC iteration budget (`max_sic_iterations = inf`).
inline constexpr int kUnlimitedIterations = INT_MAX;

struct SimConfig {
    // Road traffic
    double road_length_m = 2000.0;
    double density_veh_per_km = 12.5;
    int lanes_per_direction = 3;
    double mean_speed_kmh = 70.0;
    double speed_std_kmh = 7.0;

    // Data traffic and access layer
    TrafficMode traffic_mode = TrafficMode::Periodic;
    ReceiverMode receiver_mode = ReceiverMode::SicFrcBkc;
    AllocationMode allocation_mode = AllocationMode::Sbsps;
    int n_retx = 0;
    int packet_size_bytes = 1000;
    double t1_ms = 1.0;
    double t2_ms = 50.0;
    double rri_ms = 100.0;
    double rsrp_threshold_dbm = -126.0;
    double keep_probability = 0.0;
    double sensing_window_ms = 1000.0;
    double min_available_fraction = 0.2;

    // Signal
    int numerology_mu = 0;
    int n_subchannels = 10;
    int subchannel_prbs = 10;
    double bandwidth_mhz = 20.0;
    double mcs_sinr_threshold_db = 3.6;

    // Receiver
    double kn_db = -30.0;
    int max_sic_iterations = 1;
    int bkc_window_ttis = 32;

    // Propagation
    double tx_power_dbm = 23.0;
    double antenna_gain_dbi = 3.0;
    double noise_figure_db = 9.0;
    double shadowing_std_db = 3.0;
    double shadowing_decorr_m = 25.0;
    PathlossParams pathloss{};

    // Run control and metrics
    double sim_duration_s = 12.0;
    double warmup_s = 2.0;
    std::uint64_t rng_seed = 1;
    double cbr_threshold_dbm = -94.0;
    double prr_bin_m = 20.0;
    double prr_horizon_m = 1000.0;
    double wbsp_distance_m = 100.0;

    double tti_ms() const { return tti_duration_ms(numerology_mu); }
    Tti total_ttis() const { return ms_to_ttis(sim_duration_s * 1000.0, numerology_mu); }
    Tti warmup_ttis() const { return ms_to_ttis(warmup_s * 1000.0, numerology_mu); }
    int n_copies() const { return n_retx + 1; }

    bool operator==(const SimConfig&) const = default;
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

inline std::string_view to_string(TrafficMode m) {
    return m == TrafficMode::Periodic ? "Periodic" : "Aperiodic";
}

inline std::string_view to_string(ReceiverMode m) {
    switch (m) {
        case ReceiverMode::Legacy: return "Legacy";
        case ReceiverMode::Sic: return "Sic";
        case ReceiverMode::SicFrc: return "SicFrc";
        case ReceiverMode::SicFrcBkc: return "SicFrcBkc";
    }
    return "?";
}

inline std::string_view to_string(AllocationMode m) {
    switch (m) {
        case AllocationMode::Sbsps: return "Sbsps";
        case AllocationMode::Sbds: return "Sbds";
        case AllocationMode::Sorted: return "Sorted";
    }
    return "?";
}

namespace detail {

inline std::string trim(std::string_view s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    auto b = std::find_if(s.begin(), s.end(), not_space);
    auto e = std::find_if(s.rbegin(), s.rend(), not_space).base();
    return b < e ? std::string(b, e) : std::string{};
}

inline std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError(key, key + ": expected a number, got '" + v + "'");
    }
    if (pos != v.size()) throw ConfigError(key, key + ": trailing characters in '" + v + "'");
    return out;
}

inline long long parse_integer(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    long long out = 0;
    try {
        out = std::stoll(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError(key, key + ": expected an integer, got '" + v + "'");
    }
    if (pos != v.size()) throw ConfigError(key, key + ": trailing characters in '" + v + "'");
    return out;
}

inline int parse_int(const std::string& key, const std::string& v) {
    const long long x = parse_integer(key, v);
    if (x < INT_MIN || x > INT_MAX) throw ConfigError(key, key + ": out of range");
    return static_cast<int>(x);
}

template <typename Enum>
Enum parse_enum(const std::string& key, const std::string& v, std::initializer_list<Enum> values) {
    for (Enum e : values) {
        if (lower(to_string(e)) == lower(v)) return e;
    }
    throw ConfigError(key, key + ": unknown value '" + v + "'");
}

using Setter = std::function<void(SimConfig&, const std::string& key, const std::string& value)>;

template <typename T>
Setter real_field(T SimConfig::*member) {
    return [member](SimConfig& c, const std::string& k, const std::string& v) { c.*member = parse_double(k, v); };
}

inline Setter int_field(int SimConfig::*member) {
    return [member](SimConfig& c, const std::string& k, const std::string& v) { c.*member = parse_int(k, v); };
}

inline Setter pathloss_field(double PathlossParams::*member) {
    return [member](SimConfig& c, const std::string& k, const std::string& v) {
        c.pathloss.*member = parse_double(k, v);
    };
}

inline const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"road_length_m", real_field(&SimConfig::road_length_m)},
        {"density_veh_per_km", real_field(&SimConfig::density_veh_per_km)},
        {"lanes_per_direction", int_field(&SimConfig::lanes_per_direction)},
        {"mean_speed_kmh", real_field(&SimConfig::mean_speed_kmh)},
        {"speed_std_kmh", real_field(&SimConfig::speed_std_kmh)},
        {"traffic_mode",
         [](SimConfig& c, const std::string& k, const std::string& v) {
             c.traffic_mode = parse_enum(k, v, {TrafficMode::Periodic, TrafficMode::Aperiodic});
         }},
        {"receiver_mode",
         [](SimConfig& c, const std::string& k, const std::string& v) {
             c.receiver_mode = parse_enum(k, v,
                                          {ReceiverMode::Legacy, ReceiverMode::Sic, ReceiverMode::SicFrc,
                                           ReceiverMode::SicFrcBkc});
         }},
        {"allocation_mode",
         [](SimConfig& c, const std::string& k, const std::string& v) {
             c.allocation_mode =
                 parse_enum(k, v, {AllocationMode::Sbsps, AllocationMode::Sbds, AllocationMode::Sorted});
         }},
        {"n_retx", int_field(&SimConfig::n_retx)},
        {"packet_size_bytes", int_field(&SimConfig::packet_size_bytes)},
        {"t1_ms", real_field(&SimConfig::t1_ms)},
        {"t2_ms", real_field(&SimConfig::t2_ms)},
        {"rri_ms", real_field(&SimConfig::rri_ms)},
        {"rsrp_threshold_dbm", real_field(&SimConfig::rsrp_threshold_dbm)},
        {"keep_probability", real_field(&SimConfig::keep_probability)},
        {"sensing_window_ms", real_field(&SimConfig::sensing_window_ms)},
        {"min_available_fraction", real_field(&SimConfig::min_available_fraction)},
        {"numerology_mu", int_field(&SimConfig::numerology_mu)},
        {"n_subchannels", int_field(&SimConfig::n_subchannels)},
        {"subchannel_prbs", int_field(&SimConfig::subchannel_prbs)},
        {"bandwidth_mhz", real_field(&SimConfig::bandwidth_mhz)},
        {"mcs_sinr_threshold_db", real_field(&SimConfig::mcs_sinr_threshold_db)},
        {"kn_db", real_field(&SimConfig::kn_db)},
        {"max_sic_iterations",
         [](SimConfig& c, const std::string& k, const std::string& v) {
             const auto l = lower(v);
             c.max_sic_iterations = (l == "inf" || l == "unlimited") ? kUnlimitedIterations : parse_int(k, v);
         }},
        {"bkc_window_ttis", int_field(&SimConfig::bkc_window_ttis)},
        {"tx_power_dbm", real_field(&SimConfig::tx_power_dbm)},
        {"antenna_gain_dbi", real_field(&SimConfig::antenna_gain_dbi)},
        {"noise_figure_db", real_field(&SimConfig::noise_figure_db)},
        {"shadowing_std_db", real_field(&SimConfig::shadowing_std_db)},
        {"shadowing_decorr_m", real_field(&SimConfig::shadowing_decorr_m)},
        {"pl.a0_db", pathloss_field(&PathlossParams::a0_db)},
        {"pl.slope1", pathloss_field(&PathlossParams::slope1)},
        {"pl.slope2", pathloss_field(&PathlossParams::slope2)},
        {"pl.breakpoint_m", pathloss_field(&PathlossParams::breakpoint_m)},
        {"sim_duration_s", real_field(&SimConfig::sim_duration_s)},
        {"warmup_s", real_field(&SimConfig::warmup_s)},
        {"rng_seed",
         [](SimConfig& c, const std::string& k, const std::string& v) {
             std::size_t pos = 0;
             try {
                 c.rng_seed = std::stoull(v, &pos);
             } catch (const std::exception&) {
                 throw ConfigError(k, k + ": expected an unsigned integer, got '" + v + "'");
             }
             if (pos != v.size() || v.front() == '-') throw ConfigError(k, k + ": invalid seed '" + v + "'");
         }},
        {"cbr_threshold_dbm", real_field(&SimConfig::cbr_threshold_dbm)},
        {"prr_bin_m", real_field(&SimConfig::prr_bin_m)},
        {"prr_horizon_m", real_field(&SimConfig::prr_horizon_m)},
        {"wbsp_distance_m", real_field(&SimConfig::wbsp_distance_m)},
    };
    return table;
}

inline void require(bool ok, const char* field, const std::string& message) {
    if (!ok) throw ConfigError(field, std::string(field) + ": " + message);
}

}  // namespace detail

/// Sets one key; throws ConfigError naming the key on unknown keys or bad values.
inline void set_config_value(SimConfig& cfg, const std::string& key, const std::string& value) {
    const auto& table = detail::setters();
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError(key, "unknown configuration key '" + key + "'");
    it->second(cfg, key, value);
}

/// Applies a `key=value` override string (CLI --override).
inline void apply_override(SimConfig& cfg, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("", "override '" + std::string(assignment) + "' is not of the form key=value");
    }
    set_config_value(cfg, detail::trim(assignment.substr(0, eq)), detail::trim(assignment.substr(eq + 1)));
}

inline void validate(const SimConfig& c) {
    using detail::require;
    require(c.road_length_m > 0.0 && std::isfinite(c.road_length_m), "road_length_m", "must be > 0");
    require(c.density_veh_per_km > 0.0 && std::isfinite(c.density_veh_per_km), "density_veh_per_km",
            "must be > 0");
    require(c.lanes_per_direction >= 1, "lanes_per_direction", "must be >= 1");
    require(c.mean_speed_kmh >= 0.0 && std::isfinite(c.mean_speed_kmh), "mean_speed_kmh", "must be >= 0");
    require(c.speed_std_kmh >= 0.0 && std::isfinite(c.speed_std_kmh), "speed_std_kmh", "must be >= 0");
    require(c.n_retx >= 0 && c.n_retx <= 3, "n_retx", "must be in [0, 3]");
    require(c.packet_size_bytes > 0, "packet_size_bytes", "must be > 0");
    require(c.numerology_mu >= 0 && c.numerology_mu <= 3, "numerology_mu", "must be in [0, 3]");
    require(c.t1_ms >= 0.0 && std::isfinite(c.t1_ms), "t1_ms", "must be >= 0");
    require(std::isfinite(c.t2_ms), "t2_ms", "must be finite");
    require(c.t1_ms < c.t2_ms, "t1_ms", "t1_ms must be smaller than t2_ms");
    require(c.rri_ms > 0.0 && std::isfinite(c.rri_ms), "rri_ms", "must be > 0");
    require(std::isfinite(c.rsrp_threshold_dbm), "rsrp_threshold_dbm", "must be finite");
    require(c.keep_probability >= 0.0 && c.keep_probability <= 1.0, "keep_probability", "must be in [0, 1]");
    require(c.sensing_window_ms > 0.0, "sensing_window_ms", "must be > 0");
    require(c.min_available_fraction >= 0.0 && c.min_available_fraction <= 1.0, "min_available_fraction",
            "must be in [0, 1]");
    require(c.n_subchannels >= 1, "n_subchannels", "must be >= 1");
    require(c.subchannel_prbs >= 1, "subchannel_prbs", "must be >= 1");
    require(c.bandwidth_mhz > 0.0 && std::isfinite(c.bandwidth_mhz), "bandwidth_mhz", "must be > 0");
    require(std::isfinite(c.mcs_sinr_threshold_db), "mcs_sinr_threshold_db", "must be finite");
    require(std::isfinite(c.kn_db) && c.kn_db <= 0.0, "kn_db", "must be finite and <= 0 dB");
    require(c.max_sic_iterations >= 0, "max_sic_iterations", "must be >= 0");
    require(c.bkc_window_ttis >= 1, "bkc_window_ttis", "must be >= 1");
    require(std::isfinite(c.tx_power_dbm), "tx_power_dbm", "must be finite");
    require(std::isfinite(c.antenna_gain_dbi), "antenna_gain_dbi", "must be finite");
    require(std::isfinite(c.noise_figure_db), "noise_figure_db", "must be finite");
    require(c.shadowing_std_db >= 0.0 && std::isfinite(c.shadowing_std_db), "shadowing_std_db", "must be >= 0");
    require(c.shadowing_decorr_m > 0.0, "shadowing_decorr_m", "must be > 0");
    try {
        c.pathloss.validate();
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        throw ConfigError(msg.substr(0, msg.find(' ')), msg);
    }
    require(c.sim_duration_s > 0.0 && std::isfinite(c.sim_duration_s), "sim_duration_s", "must be > 0");
    require(c.warmup_s >= 0.0 && c.warmup_s < c.sim_duration_s, "warmup_s", "must be in [0, sim_duration_s)");
    require(std::isfinite(c.cbr_threshold_dbm), "cbr_threshold_dbm", "must be finite");
    require(c.prr_bin_m > 0.0, "prr_bin_m", "must be > 0");
    require(c.prr_horizon_m > 0.0, "prr_horizon_m", "must be > 0");
    require(c.wbsp_distance_m > 0.0, "wbsp_distance_m", "must be > 0");

    // The selection window must hold n_retx + 1 distinct slots.
    const Tti first = static_cast<Tti>(std::ceil(c.t1_ms * (1 << c.numerology_mu)));
    const Tti last = static_cast<Tti>(std::floor(c.t2_ms * (1 << c.numerology_mu)));
    require(last - first + 1 >= c.n_copies(), "n_retx", "n_retx + 1 resources do not fit in [t1_ms, t2_ms]");
}

/// Parses a configuration document. `source` names the document in diagnostics.
inline SimConfig parse_config(std::istream& in, const std::string& source = "<config>") {
    SimConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string text = detail::trim(line);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        const std::string where = source + ":" + std::to_string(line_no) + ": ";
        if (eq == std::string::npos) {
            throw ConfigError("", where + "expected 'key = value', got '" + text + "'");
        }
        const std::string key = detail::trim(std::string_view(text).substr(0, eq));
        const std::string value = detail::trim(std::string_view(text).substr(eq + 1));
        if (key.empty() || value.empty()) throw ConfigError(key, where + "empty key or value");
        try {
            set_config_value(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(e.field(), where + e.what());
        }
    }
    validate(cfg);
    return cfg;
}

inline SimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open configuration file '" + path + "'");
    return parse_config(in, path);
}

/// Serializes every key, so that parse_config(to_config_text(c)) == c.
inline std::string to_config_text(const SimConfig& c) {
    std::ostringstream out;
    out.precision(17);
    out << "road_length_m = " << c.road_length_m << "\n"
        << "density_veh_per_km = " << c.density_veh_per_km << "\n"
        << "lanes_per_direction = " << c.lanes_per_direction << "\n"
        << "mean_speed_kmh = " << c.mean_speed_kmh << "\n"
        << "speed_std_kmh = " << c.speed_std_kmh << "\n"
        << "traffic_mode = " << to_string(c.traffic_mode) << "\n"
        << "receiver_mode = " << to_string(c.receiver_mode) << "\n"
        << "allocation_mode = " << to_string(c.allocation_mode) << "\n"
        << "n_retx = " << c.n_retx << "\n"
        << "packet_size_bytes = " << c.packet_size_bytes << "\n"
        << "t1_ms = " << c.t1_ms << "\n"
        << "t2_ms = " << c.t2_ms << "\n"
        << "rri_ms = " << c.rri_ms << "\n"
        << "rsrp_threshold_dbm = " << c.rsrp_threshold_dbm << "\n"
        << "keep_probability = " << c.keep_probability << "\n"
        << "sensing_window_ms = " << c.sensing_window_ms << "\n"
        << "min_available_fraction = " << c.min_available_fraction << "\n"
        << "numerology_mu = " << c.numerology_mu << "\n"
        << "n_subchannels = " << c.n_subchannels << "\n"
        << "subchannel_prbs = " << c.subchannel_prbs << "\n"
        << "bandwidth_mhz = " << c.bandwidth_mhz << "\n"
        << "mcs_sinr_threshold_db = " << c.mcs_sinr_threshold_db << "\n"
        << "kn_db = " << c.kn_db << "\n"
        << "max_sic_iterations = "
        << (c.max_sic_iterations == kUnlimitedIterations ? std::string("inf")
                                                        : std::to_string(c.max_sic_iterations))
        << "\n"
        << "bkc_window_ttis = " << c.bkc_window_ttis << "\n"
        << "tx_power_dbm = " << c.tx_power_dbm << "\n"
        << "antenna_gain_dbi = " << c.antenna_gain_dbi << "\n"
        << "noise_figure_db = " << c.noise_figure_db << "\n"
        << "shadowing_std_db = " << c.shadowing_std_db << "\n"
        << "shadowing_decorr_m = " << c.shadowing_decorr_m << "\n"
        << "pl.a0_db = " << c.pathloss.a0_db << "\n"
        << "pl.slope1 = " << c.pathloss.slope1 << "\n"
        << "pl.slope2 = " << c.pathloss.slope2 << "\n"
        << "pl.breakpoint_m = " << c.pathloss.breakpoint_m << "\n"
        << "sim_duration_s = " << c.sim_duration_s << "\n"
        << "warmup_s = " << c.warmup_s << "\n"
        << "rng_seed = " << c.rng_seed << "\n"
        << "cbr_threshold_dbm = " << c.cbr_threshold_dbm << "\n"
        << "prr_bin_m = " << c.prr_bin_m << "\n"
        << "prr_horizon_m = " << c.prr_horizon_m << "\n"
        << "wbsp_distance_m = " << c.wbsp_distance_m << "\n";
    return out.str();
}

}  // namespace rbnoma
