#pragma once

// Ring highway, constant-speed mobility and application-layer packet generation.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "rbnoma/common.hpp"
#include "rbnoma/config.hpp"
#include "rbnoma/random.hpp"

namespace rbnoma {

struct Vehicle {
    VehicleId id = 0;
    double position_m = 0.0;  // longitudinal coordinate on the ring
    int lane = 0;             // [0, lanes) drive +1, [lanes, 2*lanes) drive -1
    int direction = 1;
    double speed_ms = 0.0;
    double next_gen_time_ms = 0.0;
};

struct Packet {
    PacketId id = 0;
    VehicleId source = 0;
    double gen_time_ms = 0.0;
    int size_bytes = 1000;
};

inline int vehicle_count(const SimConfig& cfg) {
    return static_cast<int>(std::lround(cfg.density_veh_per_km * cfg.road_length_m / 1000.0));
}

/// Places round(density * L) vehicles round-robin over the lanes with i.i.d.
/// uniform positions and Gaussian speeds truncated at zero (redrawn while
/// negative). The first generation instant is uniform over one nominal
/// inter-packet interval so that vehicles are not synchronized.
inline std::vector<Vehicle> spawn_vehicles(const SimConfig& cfg, Engine& rng) {
    if (!(cfg.density_veh_per_km > 0.0)) throw std::invalid_argument("spawn_vehicles: density must be > 0");
    const int n = vehicle_count(cfg);
    const int lanes = 2 * cfg.lanes_per_direction;
    std::vector<Vehicle> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Vehicle v;
        v.id = i;
        v.lane = i % lanes;
        v.direction = v.lane < cfg.lanes_per_direction ? 1 : -1;
        v.position_m = uniform_real(rng, 0.0, cfg.road_length_m);
        double kmh = normal(rng, cfg.mean_speed_kmh, cfg.speed_std_kmh);
        while (kmh < 0.0) kmh = normal(rng, cfg.mean_speed_kmh, cfg.speed_std_kmh);
        v.speed_ms = kmh / 3.6;
        v.next_gen_time_ms = uniform_real(rng, 0.0, 100.0);
        out.push_back(v);
    }
    return out;
}

inline double wrap_position(double x, double ring_length) {
    double r = std::fmod(x, ring_length);
    if (r < 0.0) r += ring_length;
    if (r >= ring_length) r = 0.0;
    return r;
}

inline void advance_mobility(std::vector<Vehicle>& vehicles, double dt_ms, double ring_length) {
    if (!(dt_ms > 0.0)) throw std::invalid_argument("advance_mobility: dt_ms must be > 0");
    for (auto& v : vehicles) {
        v.position_m = wrap_position(v.position_m + v.direction * v.speed_ms * dt_ms / 1000.0, ring_length);
    }
}

/// Periodic: exactly 100 ms. Aperiodic: 50 ms plus an exponential part of mean 50 ms.
inline double next_packet_interval(TrafficMode mode, Engine& rng) {
    if (mode == TrafficMode::Periodic) return 100.0;
    return 50.0 + exponential_with_mean(rng, 50.0);
}

}  // namespace rbnoma
