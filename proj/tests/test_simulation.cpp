#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rbnoma/rbnoma.hpp"

using namespace rbnoma;
namespace fs = std::filesystem;

namespace {

SimConfig small(double density = 25.0) {
    SimConfig c;
    c.density_veh_per_km = density;
    c.sim_duration_s = 3.0;
    c.warmup_s = 1.0;
    c.n_retx = 2;
    c.rng_seed = 7;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::map<std::string, std::string> csv_bytes(const RunOutputs& out, const std::string& tag) {
    const auto dir = fs::temp_directory_path() / ("rbnoma_sim_" + tag);
    fs::remove_all(dir);
    write_metrics_csv(out, dir);
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = slurp(e.path());
    fs::remove_all(dir);
    return files;
}

const ReceiverMode kModes[] = {ReceiverMode::Legacy, ReceiverMode::Sic, ReceiverMode::SicFrc, ReceiverMode::SicFrcBkc};

}  // namespace

TEST(Simulation, LonelyVehicleHasNoAttempts) {
    SimConfig c = small(0.5);
    const auto out = run_simulation(c);
    for (const auto& b : out.prr_by_distance) EXPECT_EQ(b.attempts, 0);
    EXPECT_LT(median_cbr(out), 0.05);
    EXPECT_TRUE(out.eed_samples.empty());
    EXPECT_EQ(out.range_m, 0.0);
}

TEST(Simulation, SameSeedSameBytes) {
    const SimConfig c = small();
    EXPECT_EQ(csv_bytes(run_simulation(c), "a"), csv_bytes(run_simulation(c), "b"));
    SimConfig other = c;
    other.rng_seed = 8;
    EXPECT_NE(csv_bytes(run_simulation(c), "a"), csv_bytes(run_simulation(other), "b"));
}

TEST(Simulation, ReceiverModeDoesNotChangeSchedule) {
    for (auto traffic : {TrafficMode::Periodic, TrafficMode::Aperiodic}) {
        SimConfig c = small();
        c.traffic_mode = traffic;
        c.allocation_mode = traffic == TrafficMode::Periodic ? AllocationMode::Sbsps : AllocationMode::Sbds;
        c.receiver_mode = ReceiverMode::Legacy;
        const auto ref = run_simulation(c);
        for (auto mode : kModes) {
            c.receiver_mode = mode;
            const auto out = run_simulation(c);
            EXPECT_EQ(out.stats.transmissions, ref.stats.transmissions);
            EXPECT_EQ(out.stats.reselections, ref.stats.reselections);
            EXPECT_EQ(out.cbr_series, ref.cbr_series);
            ASSERT_EQ(out.prr_by_distance.size(), ref.prr_by_distance.size());
            for (std::size_t i = 0; i < out.prr_by_distance.size(); ++i) {
                EXPECT_EQ(out.prr_by_distance[i].attempts, ref.prr_by_distance[i].attempts);
            }
        }
    }
}

TEST(Simulation, NoResidualCancellationEqualsLegacy) {
    SimConfig c = small(50.0);
    c.receiver_mode = ReceiverMode::Legacy;
    auto legacy = csv_bytes(run_simulation(c), "legacy");
    c.receiver_mode = ReceiverMode::SicFrcBkc;
    c.kn_db = 0.0;
    auto full = csv_bytes(run_simulation(c), "kn0");
    ASSERT_EQ(legacy.size(), 5u);
    for (const auto& [name, bytes] : legacy) {
        if (name == "range_summary.csv") continue;
        EXPECT_EQ(full.at(name), bytes) << name;
    }
    auto strip_mode = [](std::string s) {
        const auto row = s.find('\n') + 1;
        return s.substr(0, row) + s.substr(s.find(',', row));
    };
    EXPECT_EQ(strip_mode(full.at("range_summary.csv")), strip_mode(legacy.at("range_summary.csv")));
}

TEST(Simulation, ModesAreNestedPerBin) {
    for (auto traffic : {TrafficMode::Periodic, TrafficMode::Aperiodic}) {
        SimConfig c = small(40.0);
        c.traffic_mode = traffic;
        c.allocation_mode = traffic == TrafficMode::Periodic ? AllocationMode::Sbsps : AllocationMode::Sbds;
        std::vector<PrrBin> prev;
        for (auto mode : kModes) {
            c.receiver_mode = mode;
            const auto bins = run_simulation(c).prr_by_distance;
            for (std::size_t i = 0; i < prev.size(); ++i) {
                EXPECT_GE(bins[i].successes, prev[i].successes) << to_string(mode) << " bin " << i;
            }
            prev = bins;
        }
    }
}

TEST(Simulation, OutputsAreWellFormed) {
    for (auto alloc : {AllocationMode::Sbsps, AllocationMode::Sbds, AllocationMode::Sorted}) {
        SimConfig c = small();
        c.allocation_mode = alloc;
        c.traffic_mode = alloc == AllocationMode::Sbds ? TrafficMode::Aperiodic : TrafficMode::Periodic;
        const auto out = run_simulation(c);
        EXPECT_GT(out.stats.packets_measured, 0);
        EXPECT_TRUE(std::is_sorted(out.cbr_series.begin(), out.cbr_series.end(),
                                   [](const auto& a, const auto& b) { return a.first < b.first; }));
        for (const auto& [t, v] : out.cbr_series) {
            EXPECT_GE(t, 1000.0);
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
        for (const auto& b : out.prr_by_distance) {
            EXPECT_LE(b.successes, b.attempts);
            EXPECT_GE(b.prr(), 0.0);
            EXPECT_LE(b.prr(), 1.0);
        }
        double prev_w = 0.0;
        for (const auto& [w, p] : out.wbsp_by_window) {
            EXPECT_GT(w, prev_w);
            EXPECT_GE(p, 0.0);
            EXPECT_LE(p, 1.0);
            prev_w = w;
        }
        EXPECT_TRUE(std::is_sorted(out.eed_samples.begin(), out.eed_samples.end()));
        // A sorted slot that moves earlier can make a packet wait up to two
        // periods; backward cancellation can deliver a packet up to a window
        // after its last copy.
        const double eed_bound = (alloc == AllocationMode::Sorted ? 200.0 : c.t2_ms) +
                                 static_cast<double>(c.bkc_window_ttis) * c.tti_ms() + 1.0;
        for (double e : out.eed_samples) {
            EXPECT_GT(e, 0.0);
            EXPECT_LE(e, eed_bound);
        }
        EXPECT_GE(out.range_m, 0.0);
    }
}

TEST(Simulation, DelayWithinSelectionWindowWithoutRetransmissions) {
    for (auto traffic : {TrafficMode::Periodic, TrafficMode::Aperiodic}) {
        SimConfig c = small(50.0);
        c.n_retx = 0;
        c.traffic_mode = traffic;
        const auto out = run_simulation(c);
        ASSERT_FALSE(out.eed_samples.empty());
        EXPECT_LE(out.eed_samples.back(), c.t2_ms + 1.0);
    }
}

TEST(Simulation, SortedAllocationSendsOncePerPeriodSlot) {
    SimConfig c = small(12.5);
    c.allocation_mode = AllocationMode::Sorted;
    c.n_retx = 1;
    const auto out = run_simulation(c);
    // Packets generated near the end may still be waiting for their slot.
    EXPECT_LE(out.stats.transmissions, 2 * out.stats.packets_generated);
    EXPECT_GE(out.stats.transmissions, 2 * out.stats.packets_generated - 2 * vehicle_count(c));
    EXPECT_EQ(out.stats.reselections, 0);
}

TEST(Simulation, SortedAllocationNeverSharesASlotWhenResourcesSuffice) {
    // 25 vehicles, 100 slots per period: every near packet must get through.
    SimConfig c = small(12.5);
    c.allocation_mode = AllocationMode::Sorted;
    c.sim_duration_s = 6.0;
    const auto out = run_simulation(c);
    ASSERT_GT(out.prr_by_distance.at(0).attempts, 0);
    EXPECT_EQ(out.prr_by_distance.at(0).successes, out.prr_by_distance.at(0).attempts);
    EXPECT_EQ(out.wbsp_by_window.at(0).second, 0.0);
}

TEST(Simulation, HigherNumerology) {
    SimConfig c = small(12.5);
    c.numerology_mu = 1;
    const auto out = run_simulation(c);
    EXPECT_GT(out.stats.packets_measured, 0);
    for (double e : out.eed_samples) EXPECT_LE(e, 50.5);
}

TEST(Simulation, TraceOfOneReceiver) {
    SimConfig c = small();
    SimOptions opt;
    opt.trace_vehicle = 3;
    const auto out = run_simulation(c, opt);
    EXPECT_FALSE(out.trace.empty());
    opt.trace_vehicle = 100000;
    EXPECT_THROW(run_simulation(c, opt), std::invalid_argument);
}

TEST(Simulation, InvalidConfigIsRejected) {
    SimConfig c = small();
    c.n_retx = 7;
    EXPECT_THROW(run_simulation(c), ConfigError);
}
