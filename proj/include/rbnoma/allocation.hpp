#pragma once

// Transmitter-side MAC of the autonomous sidelink mode: sensing memory,
// sensing-based semi-persistent / dynamic resource selection with blind
// retransmissions, SCI construction and the position-sorted baseline.
//
// Every packet spans the whole band (the default 1000 B at MCS 5 fills all
// subchannels), so a candidate resource is one slot of the selection window.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rbnoma/common.hpp"
#include "rbnoma/config.hpp"
#include "rbnoma/random.hpp"
#include "rbnoma/sidelink_types.hpp"

namespace rbnoma {

/// A reservation learned from a decoded (legacy-format) SCI.
struct DecodedReservation {
    VehicleId source = 0;
    Tti heard_tti = 0;
    std::vector<Tti> pointer_ttis;  // up to two forward copies
    std::optional<int> rri_ms;
    double rsrp_dbm = 0.0;
};

/// What one vehicle remembers of the past sensing window: decoded
/// reservations and the total sensed power per slot.
class SensingMemory {
public:
    explicit SensingMemory(Tti window_ttis = 1000)
        : window_(window_ttis),
          power_(static_cast<std::size_t>(std::max<Tti>(window_ttis, 0)), 0.0),
          power_tti_(power_.size(), -1) {
        if (window_ttis <= 0) throw std::invalid_argument("SensingMemory: window must be > 0");
    }

    Tti window_ttis() const { return window_; }

    void add(DecodedReservation r) { reservations_.push_back(std::move(r)); }

    void record_power(Tti tti, double sensed_mw) {
        power_[slot(tti)] = sensed_mw;
        power_tti_[slot(tti)] = tti;
    }

    /// Drops reservations heard before `now - window`.
    void evict(Tti now) {
        while (!reservations_.empty() && reservations_.front().heard_tti < now - window_) {
            reservations_.pop_front();
        }
    }

    const std::deque<DecodedReservation>& reservations() const { return reservations_; }

    /// Average sensed power over the slots that precede `tti` by whole
    /// multiples of `period` and are still remembered; nullopt if none.
    std::optional<double> average_power(Tti tti, Tti period, Tti now) const {
        double sum = 0.0;
        int n = 0;
        for (Tti t = tti - period; t >= now - window_ && t >= 0 && period > 0; t -= period) {
            if (t >= now) continue;
            if (power_tti_[slot(t)] != t) continue;
            sum += power_[slot(t)];
            ++n;
        }
        if (n == 0) return std::nullopt;
        return sum / n;
    }

    /// Slots in [from, to] reserved by remembered SCIs, with the strongest
    /// RSRP announcing each one. A reservation covers its forward pointers and,
    /// when periodic, the same slots one reservation interval later.
    std::map<Tti, double> reserved_rsrp(Tti from, Tti to, double tti_ms) const {
        std::map<Tti, double> out;
        auto note = [&](Tti t, double rsrp) {
            if (t < from || t > to) return;
            auto [it, inserted] = out.emplace(t, rsrp);
            if (!inserted) it->second = std::max(it->second, rsrp);
        };
        for (const auto& r : reservations_) {
            for (Tti p : r.pointer_ttis) note(p, r.rsrp_dbm);
            if (r.rri_ms) {
                const Tti shift = static_cast<Tti>(std::llround(*r.rri_ms / tti_ms));
                note(r.heard_tti + shift, r.rsrp_dbm);
                for (Tti p : r.pointer_ttis) note(p + shift, r.rsrp_dbm);
            }
        }
        return out;
    }

private:
    std::size_t slot(Tti tti) const { return static_cast<std::size_t>(tti % window_); }

    Tti window_;
    std::deque<DecodedReservation> reservations_;
    std::vector<double> power_;
    std::vector<Tti> power_tti_;
};

struct AllocationParams {
    double tti_ms = 1.0;
    double t1_ms = 1.0;
    double t2_ms = 50.0;
    int n_copies = 1;
    int n_subchannels = 10;
    int rri_ms = 100;
    double rsrp_threshold_dbm = -126.0;
    double threshold_step_db = 3.0;
    int max_threshold_steps = 100;
    double min_available_fraction = 0.2;
    Tti max_span_ttis = kMaxPointerSpanTtis;

    static AllocationParams from_config(const SimConfig& cfg) {
        AllocationParams p;
        p.tti_ms = cfg.tti_ms();
        p.t1_ms = cfg.t1_ms;
        p.t2_ms = cfg.t2_ms;
        p.n_copies = cfg.n_copies();
        p.n_subchannels = cfg.n_subchannels;
        p.rri_ms = static_cast<int>(std::lround(cfg.rri_ms));
        p.rsrp_threshold_dbm = cfg.rsrp_threshold_dbm;
        p.min_available_fraction = cfg.min_available_fraction;
        return p;
    }

    Tti rri_ttis() const { return static_cast<Tti>(std::llround(rri_ms / tti_ms)); }
};

/// First and last slot of the selection window of a packet generated at `gen_time_ms`.
inline std::pair<Tti, Tti> selection_window(double gen_time_ms, const AllocationParams& p) {
    const Tti first = static_cast<Tti>(std::ceil((gen_time_ms + p.t1_ms) / p.tti_ms - 1e-9));
    const Tti last = static_cast<Tti>(std::floor((gen_time_ms + p.t2_ms) / p.tti_ms + 1e-9));
    return {first, last};
}

struct TxSchedule {
    std::vector<Resource> reserved;  // one per copy, increasing slot
    int resel_counter = 0;
    std::optional<int> rri_ms;
};

enum class ExpiryDecision { Keep, Reselect };

namespace detail {

inline bool span_feasible(const std::vector<Tti>& sorted, int n, Tti span) {
    if (static_cast<int>(sorted.size()) < n) return false;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) - 1 < sorted.size(); ++i) {
        if (sorted[i + static_cast<std::size_t>(n) - 1] - sorted[i] <= span) return true;
    }
    return false;
}

/// Uniform draw of `n` distinct slots from `pool` (sorted) with
/// max - min <= span. Rejection sampling, then an anchored draw.
inline std::vector<Tti> draw_subset(const std::vector<Tti>& pool, int n, Tti span, Engine& rng) {
    const std::size_t m = pool.size();
    const auto un = static_cast<std::size_t>(n);
    std::vector<std::size_t> idx(m);
    for (int attempt = 0; attempt < 256; ++attempt) {
        for (std::size_t i = 0; i < m; ++i) idx[i] = i;
        for (std::size_t i = 0; i < un; ++i) {
            const auto j = uniform_int<std::size_t>(rng, i, m - 1);
            std::swap(idx[i], idx[j]);
        }
        std::vector<Tti> pick;
        for (std::size_t i = 0; i < un; ++i) pick.push_back(pool[idx[i]]);
        std::sort(pick.begin(), pick.end());
        if (pick.back() - pick.front() <= span) return pick;
    }
    std::vector<std::size_t> anchors;
    for (std::size_t i = 0; i < m; ++i) {
        const auto hi = std::upper_bound(pool.begin(), pool.end(), pool[i] + span) - pool.begin();
        if (static_cast<std::size_t>(hi) - i >= un) anchors.push_back(i);
    }
    const std::size_t a = anchors[uniform_int<std::size_t>(rng, 0, anchors.size() - 1)];
    const auto hi = static_cast<std::size_t>(std::upper_bound(pool.begin(), pool.end(), pool[a] + span) -
                                             pool.begin());
    std::vector<Tti> rest(pool.begin() + static_cast<std::ptrdiff_t>(a) + 1,
                          pool.begin() + static_cast<std::ptrdiff_t>(hi));
    std::vector<Tti> pick{pool[a]};
    for (std::size_t i = 0; i + 1 < un; ++i) {
        const auto j = uniform_int<std::size_t>(rng, i, rest.size() - 1);
        std::swap(rest[i], rest[j]);
        pick.push_back(rest[i]);
    }
    std::sort(pick.begin(), pick.end());
    return pick;
}

}  // namespace detail

/// Candidate selection shared by both sensing-based variants. `own_busy`
/// lists slots where this vehicle already transmits.
inline std::vector<Resource> select_resources(const SensingMemory& mem, double gen_time_ms,
                                              const AllocationParams& p, Engine& rng,
                                              std::span<const Tti> own_busy = {}) {
    auto [first, last] = selection_window(gen_time_ms, p);
    if (first > last) throw std::invalid_argument("select_resources: empty selection window");
    std::vector<Tti> candidates;
    for (Tti t = first; t <= last; ++t) {
        if (std::find(own_busy.begin(), own_busy.end(), t) == own_busy.end()) candidates.push_back(t);
    }
    const auto total = static_cast<std::size_t>(last - first + 1);
    const auto min_available = std::max<std::size_t>(
        static_cast<std::size_t>(p.n_copies),
        static_cast<std::size_t>(std::ceil(p.min_available_fraction * static_cast<double>(total) - 1e-9)));
    const auto reserved = mem.reserved_rsrp(first, last, p.tti_ms);
    double max_rsrp = -std::numeric_limits<double>::infinity();
    for (const auto& [t, r] : reserved) max_rsrp = std::max(max_rsrp, r);

    auto to_resources = [&](const std::vector<Tti>& ttis) {
        std::vector<Resource> out;
        for (Tti t : ttis) out.push_back(Resource{t, 0, p.n_subchannels});
        return out;
    };

    double threshold = p.rsrp_threshold_dbm;
    for (int step = 0; step <= p.max_threshold_steps; ++step) {
        std::vector<Tti> available;
        for (Tti t : candidates) {
            auto it = reserved.find(t);
            if (it == reserved.end() || it->second < threshold) available.push_back(t);
        }
        if (available.size() >= min_available && detail::span_feasible(available, p.n_copies, p.max_span_ttis)) {
            return to_resources(detail::draw_subset(available, p.n_copies, p.max_span_ttis, rng));
        }
        if (threshold > max_rsrp) break;  // nothing left to release
        threshold += p.threshold_step_db;
    }

    // Fallback: least-interfered slots first (announced RSRP, then average
    // sensed power), grown until a feasible subset exists.
    const Tti rri = p.rri_ttis();
    const Tti now = static_cast<Tti>(std::ceil(gen_time_ms / p.tti_ms - 1e-9));
    struct Ranked {
        double rsrp;
        double power;
        Tti tti;
    };
    std::vector<Ranked> ranked;
    std::vector<Tti> pool = candidates;
    if (pool.size() < static_cast<std::size_t>(p.n_copies)) {
        pool.clear();
        for (Tti t = first; t <= last; ++t) pool.push_back(t);
    }
    for (Tti t : pool) {
        auto it = reserved.find(t);
        ranked.push_back({it == reserved.end() ? -std::numeric_limits<double>::infinity() : it->second,
                          mem.average_power(t, rri, now).value_or(0.0), t});
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (a.rsrp != b.rsrp) return a.rsrp < b.rsrp;
        return a.power < b.power;
    });
    std::size_t keep = std::min(ranked.size(), min_available);
    for (;; ++keep) {
        std::vector<Tti> subset;
        for (std::size_t i = 0; i < keep; ++i) subset.push_back(ranked[i].tti);
        std::sort(subset.begin(), subset.end());
        if (detail::span_feasible(subset, p.n_copies, p.max_span_ttis)) {
            return to_resources(detail::draw_subset(subset, p.n_copies, p.max_span_ttis, rng));
        }
        if (keep == ranked.size()) break;
    }
    throw std::invalid_argument("select_resources: selection window cannot hold the requested copies");
}

/// Reselection counter drawn so that a reservation lasts uniformly between
/// 0.5 and 1.5 s ([5, 15] at 100 ms).
inline int draw_reselection_counter(int rri_ms, Engine& rng) {
    const int lo = (500 + rri_ms - 1) / rri_ms;
    const int hi = std::max(lo, 1500 / rri_ms);
    return uniform_int<int>(rng, lo, hi);
}

inline TxSchedule sbsps_select(const SensingMemory& mem, double gen_time_ms, const AllocationParams& p, Engine& rng,
                               std::span<const Tti> own_busy = {}) {
    TxSchedule s;
    s.reserved = select_resources(mem, gen_time_ms, p, rng, own_busy);
    s.resel_counter = draw_reselection_counter(p.rri_ms, rng);
    s.rri_ms = p.rri_ms;
    return s;
}

inline TxSchedule sbds_select(const SensingMemory& mem, double gen_time_ms, const AllocationParams& p, Engine& rng,
                              std::span<const Tti> own_busy = {}) {
    TxSchedule s;
    s.reserved = select_resources(mem, gen_time_ms, p, rng, own_busy);
    return s;
}

inline ExpiryDecision on_counter_expiry(const TxSchedule& sched, double keep_probability, Engine& rng) {
    if (sched.resel_counter != 0) throw std::logic_error("on_counter_expiry: counter has not expired");
    return bernoulli(rng, keep_probability) ? ExpiryDecision::Keep : ExpiryDecision::Reselect;
}

/// SCI attached to copy `copy_index`. The legacy format points to at most the
/// next two copies; the extended one to every other copy with direction bits.
inline SciPayload build_sci(const TxSchedule& sched, int copy_index, SciFormat format, VehicleId source = 0,
                            PacketId packet_id = 0) {
    const int n = static_cast<int>(sched.reserved.size());
    if (copy_index < 0 || copy_index >= n) throw std::out_of_range("build_sci: copy_index out of range");
    SciPayload sci;
    sci.source = source;
    sci.packet_id = packet_id;
    sci.rri_ms = sched.rri_ms;
    sci.copy_index = copy_index;
    sci.n_copies = n;
    if (format == SciFormat::LegacySci) {
        for (int k = copy_index + 1; k < n && k <= copy_index + 2; ++k) {
            sci.copy_pointers.push_back({sched.reserved[static_cast<std::size_t>(k)], CopyDirection::Forward});
        }
    } else {
        for (int k = 0; k < n; ++k) {
            if (k == copy_index) continue;
            sci.copy_pointers.push_back({sched.reserved[static_cast<std::size_t>(k)],
                                         k < copy_index ? CopyDirection::Backward : CopyDirection::Forward});
        }
    }
    return sci;
}

/// Extra SCI bits for signalling every copy position (and, with backward
/// cancellation, one direction bit per copy).
inline int sci_overhead_bits(int n_copies, int n_dtti_max, int n_subch, bool with_bkc) {
    if (n_copies < 1) throw std::invalid_argument("sci_overhead_bits: n_copies must be >= 1");
    const auto cells = static_cast<unsigned>(n_dtti_max) * static_cast<unsigned>(n_subch);
    const int bits_per_pointer = cells <= 1 ? 0 : static_cast<int>(std::bit_width(cells - 1));
    return std::max(0, n_copies - 2) * bits_per_pointer + (with_bkc ? n_copies : 0);
}

/// Position-sorted baseline. The resources of one period are split into
/// `n_copies` interleaved groups (resource r belongs to group r mod N); the
/// i-th vehicle in ring order takes slot i mod (R / N) of every group, so
/// vehicles sharing a resource are R / N positions apart. Resource tti is the
/// slot offset inside the period.
inline std::map<VehicleId, std::vector<Resource>> sorted_allocation(std::span<const VehicleId> ids,
                                                                    std::span<const double> positions,
                                                                    int n_resources_per_period, int n_copies,
                                                                    int n_subchannels = 10) {
    if (n_copies < 1 || n_resources_per_period < n_copies) {
        throw std::invalid_argument("sorted_allocation: need n_resources_per_period >= n_copies >= 1");
    }
    if (ids.size() != positions.size()) throw std::invalid_argument("sorted_allocation: size mismatch");
    std::vector<std::size_t> order(ids.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (positions[a] != positions[b]) return positions[a] < positions[b];
        return ids[a] < ids[b];
    });
    const int slots = n_resources_per_period / n_copies;
    std::map<VehicleId, std::vector<Resource>> out;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const int k = static_cast<int>(rank % static_cast<std::size_t>(slots));
        auto& res = out[ids[order[rank]]];
        for (int c = 0; c < n_copies; ++c) res.push_back(Resource{k * n_copies + c, 0, n_subchannels});
    }
    return out;
}

}  // namespace rbnoma
