#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "rbnoma/rbnoma.hpp"

using namespace rbnoma;

TEST(Spawn, VehicleCounts) {
    SimConfig c;
    c.density_veh_per_km = 12.5;
    c.road_length_m = 4000.0;
    EXPECT_EQ(vehicle_count(c), 50);
    c.density_veh_per_km = 50.0;
    c.road_length_m = 2000.0;
    EXPECT_EQ(vehicle_count(c), 100);
    c.density_veh_per_km = 0.5;
    EXPECT_EQ(vehicle_count(c), 1);
}

TEST(Spawn, InvariantsAndLaneSplit) {
    SimConfig c;
    c.density_veh_per_km = 60.0;
    c.speed_std_kmh = 80.0;  // forces truncation draws
    Engine rng = make_stream(1, 1);
    const auto v = spawn_vehicles(c, rng);
    ASSERT_EQ(v.size(), 120u);
    std::vector<int> per_lane(6, 0);
    for (const auto& x : v) {
        EXPECT_GE(x.speed_ms, 0.0);
        EXPECT_GE(x.position_m, 0.0);
        EXPECT_LT(x.position_m, c.road_length_m);
        EXPECT_EQ(x.direction, x.lane < 3 ? 1 : -1);
        EXPECT_GE(x.next_gen_time_ms, 0.0);
        EXPECT_LT(x.next_gen_time_ms, 100.0);
        ++per_lane[static_cast<std::size_t>(x.lane)];
    }
    for (int n : per_lane) EXPECT_EQ(n, 20);
}

TEST(Spawn, SpeedMoments) {
    SimConfig c;
    c.density_veh_per_km = 2000.0;
    c.road_length_m = 10000.0;
    Engine rng = make_stream(2, 1);
    const auto v = spawn_vehicles(c, rng);
    double sum = 0.0, sq = 0.0;
    for (const auto& x : v) {
        sum += x.speed_ms * 3.6;
        sq += x.speed_ms * 3.6 * x.speed_ms * 3.6;
    }
    const double n = static_cast<double>(v.size());
    const double mean = sum / n;
    EXPECT_NEAR(mean, 70.0, 0.2);
    EXPECT_NEAR(std::sqrt(sq / n - mean * mean), 7.0, 0.2);
}

TEST(Mobility, WrapsAroundTheRing) {
    std::vector<Vehicle> v(1);
    v[0].position_m = 3990.0;
    v[0].speed_ms = 20.0;
    v[0].direction = 1;
    advance_mobility(v, 1000.0, 4000.0);
    EXPECT_NEAR(v[0].position_m, 10.0, 1e-9);
    v[0].direction = -1;
    advance_mobility(v, 1000.0, 4000.0);
    advance_mobility(v, 1000.0, 4000.0);
    EXPECT_NEAR(v[0].position_m, 3970.0, 1e-9);
    EXPECT_EQ(v[0].speed_ms, 20.0);
}

TEST(Mobility, StoppedVehicleStays) {
    std::vector<Vehicle> v(1);
    v[0].position_m = 123.0;
    advance_mobility(v, 100.0, 4000.0);
    EXPECT_EQ(v[0].position_m, 123.0);
    EXPECT_THROW(advance_mobility(v, 0.0, 4000.0), std::invalid_argument);
}

TEST(Traffic, PeriodicInterval) {
    Engine rng = make_stream(3, 2);
    EXPECT_EQ(next_packet_interval(TrafficMode::Periodic, rng), 100.0);
}

TEST(Traffic, AperiodicIntervalLaw) {
    Engine rng = make_stream(4, 2);
    const int n = 100000;
    std::vector<double> x(n);
    double sum = 0.0;
    for (auto& v : x) {
        v = next_packet_interval(TrafficMode::Aperiodic, rng);
        ASSERT_GE(v, 50.0);
        sum += v;
    }
    EXPECT_NEAR(sum / n, 100.0, 2.0);

    // Kolmogorov-Smirnov against 50 + Exp(mean 50) on the first 1e4 draws.
    std::vector<double> s(x.begin(), x.begin() + 10000);
    std::sort(s.begin(), s.end());
    double d = 0.0;
    const double m = static_cast<double>(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double f = 1.0 - std::exp(-(s[i] - 50.0) / 50.0);
        d = std::max({d, std::fabs(f - i / m), std::fabs((i + 1) / m - f)});
    }
    EXPECT_LT(d, 1.63 / std::sqrt(m));  // critical value at alpha = 0.01
}

TEST(Ring, DistanceIsSymmetricAndBounded) {
    Engine rng = make_stream(5, 0);
    for (int i = 0; i < 10000; ++i) {
        const double a = uniform_real(rng, 0.0, 2000.0);
        const double b = uniform_real(rng, 0.0, 2000.0);
        EXPECT_EQ(ring_distance(a, b, 2000.0), ring_distance(b, a, 2000.0));
        EXPECT_LE(ring_distance(a, b, 2000.0), 1000.0);
    }
    EXPECT_EQ(ring_distance(10.0, 1990.0, 2000.0), 20.0);
    EXPECT_EQ(wrap_position(-5.0, 2000.0), 1995.0);
}
