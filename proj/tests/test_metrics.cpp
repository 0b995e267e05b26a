#include <gtest/gtest.h>

#include <vector>

#include "rbnoma/rbnoma.hpp"

using namespace rbnoma;

TEST(Cbr, IdleAndHalfBusy) {
    const std::vector<double> idle(1000, 0.0);
    EXPECT_EQ(update_cbr(idle, 10, -94.0, 0.0).cbr(), 0.0);
    std::vector<double> half(1000, dbm_to_mw(-120.0));
    for (std::size_t i = 0; i < 500; ++i) half[i * 2] = dbm_to_mw(-94.0);
    const auto w = update_cbr(half, 10, -94.0, 200.0);
    EXPECT_EQ(w.busy_count, 500);
    EXPECT_EQ(w.total_count, 1000);
    EXPECT_EQ(w.cbr(), 0.5);
    EXPECT_EQ(w.start_ms, 200.0);
    EXPECT_THROW(update_cbr(std::vector<double>(15, 0.0), 10, -94.0, 0.0), std::invalid_argument);
}

TEST(Cbr, Accumulator) {
    CbrAccumulator a;
    a.start(100.0);
    for (int i = 0; i < 100; ++i) a.add_slot(i % 2 ? 10 : 0, 10);
    EXPECT_EQ(a.window().cbr(), 0.5);
    a.start(200.0);
    EXPECT_EQ(a.window().total_count, 0);
    EXPECT_EQ(a.window().cbr(), 0.0);
}

TEST(Range, Definition) {
    auto bins = [](std::vector<double> prr) {
        std::vector<PrrBin> out;
        for (std::size_t i = 0; i < prr.size(); ++i) {
            out.push_back({10.0 + 20.0 * static_cast<double>(i), static_cast<long>(prr[i] * 1000), 1000});
        }
        return out;
    };
    const std::vector<double> flat(25, 1.0);
    EXPECT_EQ(compute_range(bins(flat), 20.0), 500.0);
    EXPECT_EQ(compute_range(bins({1.0, 0.96, 0.94, 0.97}), 20.0), 40.0);
    EXPECT_EQ(compute_range(bins({0.90, 1.0}), 20.0), 0.0);
    EXPECT_EQ(compute_range(bins({0.95}), 20.0), 0.0);  // strict inequality

    // A bin with too few attempts is skipped, not treated as a failure.
    auto sparse = bins({1.0, 1.0, 1.0});
    sparse[1] = {30.0, 1, 50};
    EXPECT_EQ(compute_range(sparse, 20.0), 60.0);
}

TEST(Ccdf, Grid) {
    const auto c = ccdf_on_grid({0.2, 0.2, 0.4, 1.0}, 0.1);
    ASSERT_EQ(c.size(), 11u);
    EXPECT_DOUBLE_EQ(c[0].second, 1.0);
    EXPECT_DOUBLE_EQ(c[2].second, 0.5);   // P(X > 0.2)
    EXPECT_DOUBLE_EQ(c[4].second, 0.25);  // P(X > 0.4)
    EXPECT_DOUBLE_EQ(c[10].second, 0.0);
    EXPECT_TRUE(ccdf_on_grid({}, 0.1).empty());
}

namespace {

PairLinkTracker two_vehicle_tracker(double gap_start, double gap_end) {
    PairLinkTracker t(2000.0, 100.0);
    for (int s = 0; s <= 2000; s += 100) t.snapshot(s, {0.0, 50.0});
    for (int ms = 10; ms < 2000; ms += 100) {
        if (ms < gap_start || ms > gap_end) t.record_success(1, 0, ms);
    }
    return t;
}

}  // namespace

TEST(Wbsp, AllReceivedIsZero) {
    const auto t = two_vehicle_tracker(1e9, 1e9);
    for (double w : {100.0, 200.0, 500.0}) EXPECT_EQ(t.wbsp(w, 0.0, 1000.0), 0.0);
}

TEST(Wbsp, GapIsCountedInWindowsThatMissIt) {
    // Receptions at 10, 110, ..., none in [300, 650]: the receptions at 310,
    // 410, 510, 610 are missing.
    const auto t = two_vehicle_tracker(300.0, 650.0);
    // 100-ms windows starting at 0..1000: blind at 300, 400, 500, 600.
    EXPECT_DOUBLE_EQ(t.wbsp(100.0, 0.0, 1000.0), 4.0 / 11.0);
    // 300-ms windows over the same starts: blind at 300, 400.
    EXPECT_DOUBLE_EQ(t.wbsp(300.0, 0.0, 1000.0), 2.0 / 11.0);
    EXPECT_DOUBLE_EQ(t.wbsp(500.0, 0.0, 1000.0), 0.0);
    EXPECT_THROW(t.wbsp(100.0, 0.0, 1000.0, 0.0), std::invalid_argument);
}

TEST(Wbsp, FarPairsAreNotCounted) {
    PairLinkTracker t(2000.0, 100.0);
    t.snapshot(0.0, {0.0, 150.0});
    EXPECT_EQ(t.wbsp(100.0, 0.0, 0.0), 0.0);
}

TEST(Wbsp, NonincreasingInWindowLength) {
    Engine rng = make_stream(3, 0);
    PairLinkTracker t(2000.0, 100.0);
    std::vector<double> pos(6);
    for (int s = 0; s <= 5000; s += 100) {
        for (auto& p : pos) p = uniform_real(rng, 0.0, 300.0);
        t.snapshot(s, pos);
    }
    for (int i = 0; i < 400; ++i) {
        t.record_success(uniform_int(rng, 0, 5), uniform_int(rng, 0, 5), uniform_real(rng, 0.0, 5000.0));
    }
    double prev = 1.0;
    for (double w = 100.0; w <= 1000.0; w += 100.0) {
        const double p = t.wbsp(w, 0.0, 4000.0);
        EXPECT_LE(p, prev);
        EXPECT_GE(p, 0.0);
        prev = p;
    }
}

TEST(Wbsp, GapSamples) {
    PairLinkTracker t(2000.0, 100.0);
    t.snapshot(0.0, {0.0, 50.0});
    t.record_success(0, 1, 20.0);
    t.record_success(1, 0, 370.0);
    t.record_success(0, 1, 370.0);
    EXPECT_EQ(t.gap_samples(), std::vector<double>{350.0});
}

namespace {

MetricsParams metrics_params() {
    MetricsParams p;
    p.measure_start_ms = 0.0;
    p.measure_end_ms = 1000.0;
    p.settle_ttis = 32;
    return p;
}

}  // namespace

TEST(PacketTrackerTest, BinPrrAndAnyCopyRule) {
    PacketTracker tr(metrics_params());
    // Source 0, receivers 1..3 at 45 m (bin 2), receiver 4 at 2000 m (ignored).
    const std::vector<double> dist{0.0, 45.0, 45.0, 45.0, 2000.0};
    ASSERT_TRUE(tr.on_generated(7, 0, 10.0, 30, dist));
    EXPECT_EQ(*tr.on_success(7, 1, 18.0), 8.0);
    EXPECT_FALSE(tr.on_success(7, 1, 25.0).has_value());  // second copy of the same packet
    EXPECT_EQ(*tr.on_success(7, 2, 40.0), 30.0);
    EXPECT_FALSE(tr.on_success(7, 4, 40.0).has_value());
    tr.finalize_before(62);
    EXPECT_EQ(tr.open_packets(), 1u);
    tr.finalize_before(63);
    EXPECT_EQ(tr.open_packets(), 0u);
    const auto& b = tr.bins()[2];
    EXPECT_EQ(b.center_m, 50.0);
    EXPECT_EQ(b.attempts, 3);
    EXPECT_EQ(b.successes, 2);
    EXPECT_DOUBLE_EQ(b.prr(), 2.0 / 3.0);
}

TEST(PacketTrackerTest, LostPacketIsOneAttempt) {
    PacketTracker tr(metrics_params());
    ASSERT_TRUE(tr.on_generated(1, 0, 10.0, 40, std::vector<double>{0.0, 5.0}));
    tr.finalize_before(1000);
    EXPECT_EQ(tr.bins()[0].attempts, 1);
    EXPECT_EQ(tr.bins()[0].successes, 0);
}

TEST(PacketTrackerTest, MeasurementWindow) {
    MetricsParams p = metrics_params();
    p.measure_start_ms = 100.0;
    PacketTracker tr(p);
    const std::vector<double> dist{0.0, 5.0};
    EXPECT_FALSE(tr.on_generated(1, 0, 99.0, 140, dist));
    EXPECT_TRUE(tr.on_generated(2, 0, 100.0, 140, dist));
    EXPECT_FALSE(tr.on_generated(3, 0, 950.0, 990, dist));  // outcome not final before the end
}
