#pragma once

// Slot-by-slot simulation of one highway drop.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rbnoma/allocation.hpp"
#include "rbnoma/channel.hpp"
#include "rbnoma/config.hpp"
#include "rbnoma/metrics.hpp"
#include "rbnoma/phy.hpp"
#include "rbnoma/random.hpp"
#include "rbnoma/receiver.hpp"
#include "rbnoma/scenario.hpp"

namespace rbnoma {

struct RunStats {
    long packets_generated = 0;
    long packets_measured = 0;
    long transmissions = 0;
    long reselections = 0;
    long missed_backward_cancellations = 0;
};

struct RunOutputs {
    ReceiverMode receiver_mode = ReceiverMode::SicFrcBkc;
    TrafficMode traffic_mode = TrafficMode::Periodic;
    int n_retx = 0;
    double density_veh_per_km = 0.0;

    std::vector<std::pair<double, double>> cbr_series;  // (window start ms, cbr), one row per vehicle
    std::vector<PrrBin> prr_by_distance;
    std::vector<std::pair<double, double>> wbsp_by_window;  // (window ms, blind-spot probability)
    std::vector<double> wbsp_samples;                       // gap durations per pair, ms
    std::vector<double> eed_samples;                        // ms, sorted
    double range_m = 0.0;
    RunStats stats;
    std::vector<TraceEvent> trace;  // receiver selected by SimOptions::trace_vehicle
};

struct SimOptions {
    std::optional<VehicleId> trace_vehicle;
    std::vector<double> wbsp_windows_ms{100, 200, 300, 400, 500, 600, 700, 800, 900, 1000};
};

namespace detail {

struct Transmission {
    VehicleId tx = 0;
    PacketId packet_id = 0;
    Resource resource{};
    std::vector<CopyPointer> pointers;  // extended SCI
    std::vector<Tti> legacy_pointers;   // up to two forward copies
    std::optional<int> rri_ms;
};

struct MacState {
    TxSchedule sched;
    bool has_schedule = false;
    bool reselect_pending = false;
    std::vector<Resource> sorted_resources;  // offsets inside the period
};

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

inline double median_cbr(const RunOutputs& out) {
    std::vector<double> v;
    for (const auto& [t, c] : out.cbr_series) v.push_back(c);
    return detail::median(std::move(v));
}

inline RunOutputs run_simulation(const SimConfig& cfg, const SimOptions& opt = {}) {
    validate(cfg);
    RngStreams rng(cfg.rng_seed);
    const double d = cfg.tti_ms();
    const Tti total = cfg.total_ttis();
    const Tti warmup = cfg.warmup_ttis();
    const Tti per100 = ms_to_ttis(100.0, cfg.numerology_mu);
    const int n_subch = cfg.n_subchannels;
    const double noise_mw = dbm_to_mw(noise_power_dbm(cfg.bandwidth_mhz, cfg.noise_figure_db));
    const double cbr_thr_mw = dbm_to_mw(cfg.cbr_threshold_dbm);
    // Per-resource-element RSRP of a packet spanning the whole allocation.
    const double rsrp_offset_db = 10.0 * std::log10(12.0 * n_subch * cfg.subchannel_prbs);
    const AllocationParams ap = AllocationParams::from_config(cfg);
    const ReceiverParams rp = ReceiverParams::from_config(cfg);
    const DecodeParams dp = rp.decode;

    auto vehicles = spawn_vehicles(cfg, rng.spawn);
    const auto nv = vehicles.size();
    std::vector<double> positions(nv);
    auto refresh_positions = [&] {
        for (std::size_t i = 0; i < nv; ++i) positions[i] = vehicles[i].position_m;
    };
    refresh_positions();

    LinkBudget budget{cfg.tx_power_dbm, cfg.antenna_gain_dbi, cfg.shadowing_std_db, cfg.shadowing_decorr_m,
                      cfg.pathloss};
    ChannelModel channel(nv, cfg.road_length_m, budget);
    channel.initialize(positions, rng.shadowing);

    std::vector<Receiver> receivers;
    std::vector<SensingMemory> sensing;
    std::vector<detail::MacState> mac(nv);
    std::vector<CbrAccumulator> cbr(nv);
    const Tti sensing_ttis = std::max<Tti>(1, ms_to_ttis(cfg.sensing_window_ms, cfg.numerology_mu));
    for (std::size_t i = 0; i < nv; ++i) {
        receivers.emplace_back(rp, opt.trace_vehicle && *opt.trace_vehicle == static_cast<VehicleId>(i));
        sensing.emplace_back(sensing_ttis);
    }

    MetricsParams mp;
    mp.tti_ms = d;
    mp.prr_bin_m = cfg.prr_bin_m;
    mp.prr_horizon_m = cfg.prr_horizon_m;
    mp.measure_start_ms = static_cast<double>(warmup) * d;
    mp.measure_end_ms = static_cast<double>(total) * d;
    mp.settle_ttis = cfg.bkc_window_ttis;
    PacketTracker packets(mp);
    PairLinkTracker pairs(cfg.road_length_m, cfg.wbsp_distance_m);
    const double pair_margin_m = 100.0;

    RunOutputs out;
    out.receiver_mode = cfg.receiver_mode;
    out.traffic_mode = cfg.traffic_mode;
    out.n_retx = cfg.n_retx;
    out.density_veh_per_km = cfg.density_veh_per_km;

    std::map<Tti, std::vector<detail::Transmission>> on_air;
    std::vector<std::vector<Tti>> own_busy(nv);
    std::vector<std::deque<std::pair<PacketId, double>>> sorted_queue(nv);
    PacketId next_packet = 0;

    auto reassign_sorted = [&] {
        std::vector<VehicleId> ids(nv);
        for (std::size_t i = 0; i < nv; ++i) ids[i] = static_cast<VehicleId>(i);
        auto assignment = sorted_allocation(ids, positions, static_cast<int>(ap.rri_ttis()), cfg.n_copies(), n_subch);
        for (auto& [id, res] : assignment) mac[static_cast<std::size_t>(id)].sorted_resources = res;
    };

    // Schedule of the copies of a packet generated at `g` by vehicle `v`.
    auto schedule_packet = [&](std::size_t v, double g, Tti now) -> TxSchedule {
        auto& m = mac[v];
        auto& busy = own_busy[v];
        busy.erase(std::remove_if(busy.begin(), busy.end(), [&](Tti t) { return t < now; }), busy.end());
        if (cfg.allocation_mode == AllocationMode::Sorted) {
            // Called in the slot of the vehicle's current first offset.
            TxSchedule s;
            const Tti off0 = m.sorted_resources.front().tti;
            for (const auto& r : m.sorted_resources) s.reserved.push_back(Resource{now + (r.tti - off0), 0, n_subch});
            return s;
        }
        if (cfg.allocation_mode == AllocationMode::Sbds) {
            ++out.stats.reselections;
            return sbds_select(sensing[v], g, ap, rng.allocation, busy);
        }
        // Semi-persistent: reuse the reservation one interval later while
        // the counter runs and the shifted slots fit the new window.
        bool reuse = m.has_schedule && !m.reselect_pending;
        if (reuse) {
            const auto [first, last] = selection_window(g, ap);
            const Tti shift = ap.rri_ttis();
            for (auto& r : m.sched.reserved) r.tti += shift;
            for (const auto& r : m.sched.reserved) {
                if (r.tti < first || r.tti > last ||
                    std::find(busy.begin(), busy.end(), r.tti) != busy.end()) {
                    reuse = false;
                }
            }
        }
        if (!reuse) {
            m.sched = sbsps_select(sensing[v], g, ap, rng.allocation, busy);
            m.has_schedule = true;
            m.reselect_pending = false;
            ++out.stats.reselections;
        }
        TxSchedule s = m.sched;
        m.sched.resel_counter -= 1;
        if (m.sched.resel_counter <= 0) {
            m.sched.resel_counter = 0;
            if (on_counter_expiry(m.sched, cfg.keep_probability, rng.allocation) == ExpiryDecision::Keep) {
                m.sched.resel_counter = draw_reselection_counter(ap.rri_ms, rng.allocation);
            } else {
                m.reselect_pending = true;
                s.rri_ms.reset();
            }
        }
        return s;
    };

    std::vector<double> dist(nv);
    bool cbr_open = false;
    std::vector<double> subch_power(static_cast<std::size_t>(n_subch));

    for (Tti n = 0; n < total; ++n) {
        const double t_ms = static_cast<double>(n) * d;

        if (n % per100 == 0) {
            if (n > 0) {
                advance_mobility(vehicles, 100.0, cfg.road_length_m);
                refresh_positions();
                channel.update(positions, rng.shadowing);
            }
            if (n >= warmup) pairs.snapshot(t_ms, positions);
            if (cfg.allocation_mode == AllocationMode::Sorted) reassign_sorted();
            for (auto& m : sensing) m.evict(n);
            if (n >= warmup) {
                if (cbr_open) {
                    for (const auto& c : cbr) out.cbr_series.emplace_back(c.window().start_ms, c.window().cbr());
                }
                for (auto& c : cbr) c.start(t_ms);
                cbr_open = true;
            }
        }

        auto emit = [&](std::size_t v, PacketId pid, double g) {
            TxSchedule s = schedule_packet(v, g, n);
            for (std::size_t k = 0; k < s.reserved.size(); ++k) {
                const SciPayload sci = build_sci(s, static_cast<int>(k), SciFormat::ExtendedSci,
                                                 static_cast<VehicleId>(v), pid);
                detail::Transmission tx;
                tx.tx = static_cast<VehicleId>(v);
                tx.packet_id = pid;
                tx.resource = s.reserved[k];
                tx.pointers = sci.copy_pointers;
                for (const auto& p : build_sci(s, static_cast<int>(k), SciFormat::LegacySci).copy_pointers) {
                    tx.legacy_pointers.push_back(p.resource.tti);
                }
                tx.rri_ms = s.rri_ms;
                on_air[s.reserved[k].tti].push_back(std::move(tx));
                own_busy[v].push_back(s.reserved[k].tti);
            }
            for (std::size_t r = 0; r < nv; ++r) dist[r] = ring_distance(positions[v], positions[r], cfg.road_length_m);
            if (packets.on_generated(pid, static_cast<VehicleId>(v), g, s.reserved.back().tti, dist)) {
                ++out.stats.packets_measured;
            }
        };

        // Packets generated during (t - d, t] are handed to the MAC now.
        for (std::size_t v = 0; v < nv; ++v) {
            auto& veh = vehicles[v];
            while (veh.next_gen_time_ms <= t_ms + 1e-9) {
                const double g = veh.next_gen_time_ms;
                veh.next_gen_time_ms += next_packet_interval(cfg.traffic_mode, rng.traffic);
                const PacketId pid = next_packet++;
                ++out.stats.packets_generated;
                if (cfg.allocation_mode == AllocationMode::Sorted) {
                    sorted_queue[v].emplace_back(pid, g);
                } else {
                    emit(v, pid, g);
                }
            }
        }

        // Sorted allocation: the oldest queued packet leaves in the slot of
        // the vehicle's current offset, so two vehicles never share a slot.
        if (cfg.allocation_mode == AllocationMode::Sorted) {
            const Tti period = ap.rri_ttis();
            for (std::size_t v = 0; v < nv; ++v) {
                auto& q = sorted_queue[v];
                if (q.empty() || n % period != mac[v].sorted_resources.front().tti) continue;
                if (n < selection_window(q.front().second, ap).first) continue;
                if (std::find(own_busy[v].begin(), own_busy[v].end(), n) != own_busy[v].end()) continue;
                emit(v, q.front().first, q.front().second);
                q.pop_front();
            }
        }

        auto slot = on_air.find(n);
        const bool measuring = n >= warmup;
        if (slot != on_air.end()) {
            const auto& txs = slot->second;
            out.stats.transmissions += static_cast<long>(txs.size());
            std::vector<char> transmitting(nv, 0);
            for (const auto& tx : txs) {
                if (transmitting[static_cast<std::size_t>(tx.tx)]) {
                    throw std::logic_error("run_simulation: vehicle scheduled twice in one slot");
                }
                transmitting[static_cast<std::size_t>(tx.tx)] = 1;
            }
            for (std::size_t r = 0; r < nv; ++r) {
                if (transmitting[r]) {
                    receivers[r].skip_tti(n);
                    if (cbr_open) cbr[r].add_slot(n_subch, n_subch);
                    continue;
                }
                TtiRecord rec(n, noise_mw);
                std::fill(subch_power.begin(), subch_power.end(), 0.0);
                double total_mw = 0.0;
                for (const auto& tx : txs) {
                    const double p = channel.rx_power_mw(tx.tx, static_cast<VehicleId>(r));
                    total_mw += p;
                    const auto& res = tx.resource;
                    for (int s = res.subch_start; s < res.subch_start + res.subch_count; ++s) {
                        subch_power[static_cast<std::size_t>(s)] += p / res.subch_count;
                    }
                    rec.add(Contribution{tx.tx, tx.packet_id, p, 1.0, res, tx.pointers});
                }
                if (cbr_open) {
                    int busy = 0;
                    for (double p : subch_power) busy += p >= cbr_thr_mw ? 1 : 0;
                    cbr[r].add_slot(busy, n_subch);
                }

                // Sensing decodes SCIs like a legacy receiver.
                sensing[r].record_power(n, total_mw);
                if (auto g = sinr_legacy(rec); g && decode(*g, true, dp)) {
                    const Contribution& c = rec.at(0);
                    const auto& tx = *std::find_if(txs.begin(), txs.end(),
                                                   [&](const detail::Transmission& t) { return t.tx == c.tx; });
                    sensing[r].add(DecodedReservation{c.tx, n, tx.legacy_pointers, tx.rri_ms,
                                                      mw_to_dbm(c.rx_power_mw) - rsrp_offset_db});
                }

                for (const auto& rx : receivers[r].process_tti(std::move(rec))) {
                    const double when = static_cast<double>(rx.tti + 1) * d;
                    if (auto eed = packets.on_success(rx.packet_id, static_cast<VehicleId>(r), when)) {
                        out.eed_samples.push_back(*eed);
                    }
                    if (measuring && ring_distance(positions[r], positions[static_cast<std::size_t>(rx.tx)],
                                                   cfg.road_length_m) <= cfg.wbsp_distance_m + pair_margin_m) {
                        pairs.record_success(rx.tx, static_cast<VehicleId>(r), when);
                    }
                }
            }
            on_air.erase(slot);
        } else if (cbr_open) {
            for (auto& c : cbr) c.add_slot(0, n_subch);
        }
        packets.finalize_before(n);
    }
    if (cbr_open && total % per100 == 0) {
        for (const auto& c : cbr) out.cbr_series.emplace_back(c.window().start_ms, c.window().cbr());
    }
    packets.finalize_before(total + cfg.bkc_window_ttis + 1);

    std::stable_sort(out.cbr_series.begin(), out.cbr_series.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    out.prr_by_distance = packets.bins();
    out.range_m = compute_range(out.prr_by_distance, cfg.prr_bin_m);
    const double from = static_cast<double>(warmup) * d;
    const double to = static_cast<double>(total) * d;
    double longest = 0.0;
    for (double w : opt.wbsp_windows_ms) longest = std::max(longest, w);
    for (double w : opt.wbsp_windows_ms) out.wbsp_by_window.emplace_back(w, pairs.wbsp(w, from, to - longest));
    out.wbsp_samples = pairs.gap_samples();
    std::sort(out.eed_samples.begin(), out.eed_samples.end());
    for (const auto& r : receivers) {
        out.stats.missed_backward_cancellations += static_cast<long>(r.missed_backward_cancellations());
    }
    if (opt.trace_vehicle) {
        const auto i = static_cast<std::size_t>(*opt.trace_vehicle);
        if (i >= nv) throw std::invalid_argument("trace vehicle " + std::to_string(i) + " does not exist");
        out.trace = receivers[i].trace_events();
    }
    return out;
}

}  // namespace rbnoma
