#pragma once

// Per-vehicle receiver: strongest-first SIC with a bounded iteration budget,
// forward cancellation of announced future copies (frame storage) and
// backward cancellation in a bounded store of past slot records, which then
// get reprocessed.

#include <cstddef>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "rbnoma/common.hpp"
#include "rbnoma/config.hpp"
#include "rbnoma/phy.hpp"
#include "rbnoma/sidelink_types.hpp"

namespace rbnoma {

enum class RxEvent { Decode, FrcCancel, BkcCancel, BkcReprocess };

inline std::string_view to_string(RxEvent e) {
    switch (e) {
        case RxEvent::Decode: return "decode";
        case RxEvent::FrcCancel: return "frc_cancel";
        case RxEvent::BkcCancel: return "bkc_cancel";
        case RxEvent::BkcReprocess: return "bkc_reprocess";
    }
    return "?";
}

struct TraceEvent {
    Tti tti = 0;  // slot whose record the event applies to
    RxEvent event = RxEvent::Decode;
    VehicleId tx = 0;
    PacketId packet_id = 0;

    bool operator==(const TraceEvent&) const = default;
};

/// A packet delivered to the upper layer.
struct Reception {
    PacketId packet_id = 0;
    VehicleId tx = 0;
    Tti copy_tti = 0;  // slot of the copy that was decoded
    Tti tti = 0;       // slot during which the decode happened

    bool operator==(const Reception&) const = default;
};

struct ReceiverParams {
    ReceiverMode mode = ReceiverMode::SicFrcBkc;
    DecodeParams decode{};
    int max_sic_iterations = 1;
    Tti bkc_window_ttis = 32;
    Tti packet_memory_ttis = 1000;  // how long delivered packet ids are remembered

    static ReceiverParams from_config(const SimConfig& cfg) {
        ReceiverParams p;
        p.mode = cfg.receiver_mode;
        p.decode = DecodeParams::from_db(cfg.mcs_sinr_threshold_db, cfg.kn_db);
        p.max_sic_iterations = cfg.max_sic_iterations;
        p.bkc_window_ttis = cfg.bkc_window_ttis;
        return p;
    }
};

class Receiver {
public:
    explicit Receiver(ReceiverParams params, bool trace = false) : p_(params), trace_enabled_(trace) {
        if (p_.max_sic_iterations < 0) throw std::invalid_argument("Receiver: max_sic_iterations must be >= 0");
        if (p_.bkc_window_ttis < 0) throw std::invalid_argument("Receiver: bkc_window_ttis must be >= 0");
    }

    const ReceiverParams& params() const { return p_; }

    /// Processes the record of the current slot; slots must be fed in
    /// increasing order. Returns the packets delivered for the first time.
    std::vector<Reception> process_tti(TtiRecord rec) {
        advance_to(rec.tti());
        std::vector<Reception> out;

        if (uses_frc()) {
            auto lo = frame_.lower_bound({now_, std::numeric_limits<VehicleId>::min()});
            while (lo != frame_.end() && lo->first.first == now_) {
                const VehicleId tx = lo->first.second;
                if (rec.index_of(tx) && mark_cancelled(rec, tx)) {
                    trace(now_, RxEvent::FrcCancel, tx, lo->second);
                }
                lo = frame_.erase(lo);
            }
        }

        if (uses_bkc()) {
            signal_.push_back(std::move(rec));
            run_pass(signal_.back(), out);
            drain(out);
        } else {
            run_pass(rec, out);
        }
        return out;
    }

    /// Half-duplex: the receiver transmits in `tti` and hears nothing.
    void skip_tti(Tti tti) {
        advance_to(tti);
        auto lo = frame_.lower_bound({now_, std::numeric_limits<VehicleId>::min()});
        while (lo != frame_.end() && lo->first.first == now_) lo = frame_.erase(lo);
    }

    /// Stores the future copies announced by a decoded SCI.
    void register_forward_copies(VehicleId tx, PacketId packet_id, std::span<const CopyPointer> pointers) {
        for (const auto& ptr : pointers) {
            const Tti t = ptr.resource.tti;
            if (t <= now_) continue;
            if (t - now_ > kMaxPointerSpanTtis + p_.bkc_window_ttis) {
                throw std::invalid_argument("register_forward_copies: pointer beyond the signalling horizon");
            }
            frame_.emplace(std::make_pair(t, tx), packet_id);
        }
    }

    /// Cancels `tx` in the stored record of `target_tti` and decodes it again.
    /// Records that have left the window are skipped and counted.
    std::vector<Reception> reprocess_past_tti(Tti target_tti, VehicleId tx) {
        std::vector<Reception> out;
        if (backward_cancel(target_tti, tx)) drain(out);
        return out;
    }

    bool has_delivered(PacketId id) const { return delivered_.count(id) != 0; }
    std::size_t frame_storage_size() const { return frame_.size(); }
    const std::map<std::pair<Tti, VehicleId>, PacketId>& frame_storage() const { return frame_; }
    std::size_t signal_storage_size() const { return signal_.size(); }
    const TtiRecord* stored_record(Tti tti) const { return const_cast<Receiver*>(this)->stored(tti); }
    std::size_t missed_backward_cancellations() const { return missed_bkc_; }
    const std::vector<TraceEvent>& trace_events() const { return trace_; }
    Tti now() const { return now_; }

private:
    bool uses_frc() const { return p_.mode == ReceiverMode::SicFrc || p_.mode == ReceiverMode::SicFrcBkc; }
    bool uses_bkc() const { return p_.mode == ReceiverMode::SicFrcBkc; }

    int attempts_per_pass() const {
        if (p_.mode == ReceiverMode::Legacy) return 1;
        if (p_.max_sic_iterations == kUnlimitedIterations) return kUnlimitedIterations;
        return 1 + p_.max_sic_iterations;
    }

    void advance_to(Tti tti) {
        if (started_ && tti <= now_) throw std::invalid_argument("Receiver: slots must be processed in order");
        started_ = true;
        now_ = tti;
        while (!signal_.empty() && signal_.front().tti() < now_ - p_.bkc_window_ttis) signal_.pop_front();
        while (!frame_.empty() && frame_.begin()->first.first < now_) frame_.erase(frame_.begin());
        while (!delivered_order_.empty() && delivered_order_.front().first < now_ - p_.packet_memory_ttis) {
            delivered_.erase(delivered_order_.front().second);
            delivered_order_.pop_front();
        }
    }

    TtiRecord* stored(Tti tti) {
        for (auto& r : signal_) {
            if (r.tti() == tti) return &r;
        }
        return nullptr;
    }

    /// Runs the queued reprocessing passes, including those they trigger.
    void drain(std::vector<Reception>& out) {
        while (!work_.empty()) {
            const Pending w = work_.front();
            work_.pop_front();
            if (TtiRecord* r = stored(w.tti)) {
                trace(w.tti, RxEvent::BkcReprocess, w.tx, w.packet_id);
                run_pass(*r, out);
            }
        }
    }

    bool backward_cancel(Tti target, VehicleId tx) {
        TtiRecord* r = stored(target);
        if (r == nullptr) {
            // Slots spent transmitting have no record; only evictions count.
            if (target < now_ - p_.bkc_window_ttis) ++missed_bkc_;
            return false;
        }
        auto i = r->index_of(tx);
        if (!i || !r->cancel_at(*i)) return false;
        const PacketId id = r->at(*i).packet_id;
        trace(target, RxEvent::BkcCancel, tx, id);
        work_.push_back(Pending{target, tx, id});
        return true;
    }

    void run_pass(TtiRecord& rec, std::vector<Reception>& out) {
        const int max_attempts = attempts_per_pass();
        for (int attempt = 0; attempt < max_attempts; ++attempt) {
            auto z = rec.strongest_uncancelled();
            if (!z) break;
            const double gamma = sinr_rbnoma_at(rec, *z, p_.decode.kn_linear);
            if (!decode(gamma, true, p_.decode)) break;
            const Contribution& c = rec.at(*z);
            trace(rec.tti(), RxEvent::Decode, c.tx, c.packet_id);
            if (delivered_.insert(c.packet_id).second) {
                delivered_order_.emplace_back(now_, c.packet_id);
                out.push_back(Reception{c.packet_id, c.tx, rec.tti(), now_});
            }
            if (p_.mode == ReceiverMode::Legacy) break;
            rec.cancel_at(*z);
            if (uses_frc()) {
                register_forward_copies(c.tx, c.packet_id, c.copy_pointers);
                if (uses_bkc()) {
                    for (const auto& ptr : c.copy_pointers) {
                        const Tti t = ptr.resource.tti;
                        if (t <= now_ && t != rec.tti()) backward_cancel(t, c.tx);
                    }
                }
            }
        }
    }

    void trace(Tti tti, RxEvent e, VehicleId tx, PacketId id) {
        if (trace_enabled_) trace_.push_back(TraceEvent{tti, e, tx, id});
    }

    ReceiverParams p_;
    bool trace_enabled_ = false;
    bool started_ = false;
    Tti now_ = 0;
    std::map<std::pair<Tti, VehicleId>, PacketId> frame_;
    std::deque<TtiRecord> signal_;
    struct Pending {
        Tti tti;
        VehicleId tx;  // cancellation that triggered the pass
        PacketId packet_id;
    };
    std::deque<Pending> work_;
    std::set<PacketId> delivered_;
    std::deque<std::pair<Tti, PacketId>> delivered_order_;
    std::size_t missed_bkc_ = 0;
    std::vector<TraceEvent> trace_;
};

}  // namespace rbnoma
