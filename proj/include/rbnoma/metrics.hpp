#pragma once

// Channel busy ratio, packet reception ratio by distance and the derived
// range, wireless blind spot probability and end-to-end delay.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rbnoma/channel.hpp"
#include "rbnoma/common.hpp"

namespace rbnoma {

// ---------------------------------------------------------------- CBR

struct CbrWindow {
    double start_ms = 0.0;
    long busy_count = 0;
    long total_count = 0;

    double cbr() const { return total_count == 0 ? 0.0 : static_cast<double>(busy_count) / total_count; }
};

/// One window from raw sensed powers (mW), laid out slot-major with
/// `n_subch` entries per slot.
inline CbrWindow update_cbr(std::span<const double> sensed_mw, int n_subch, double threshold_dbm,
                            double start_ms) {
    if (n_subch <= 0 || sensed_mw.size() % static_cast<std::size_t>(n_subch) != 0) {
        throw std::invalid_argument("update_cbr: sample count must be a multiple of n_subch");
    }
    const double thr = dbm_to_mw(threshold_dbm);
    CbrWindow w{start_ms, 0, static_cast<long>(sensed_mw.size())};
    for (double p : sensed_mw) w.busy_count += p >= thr ? 1 : 0;
    return w;
}

/// Running busy/total counters of one vehicle.
class CbrAccumulator {
public:
    void start(double start_ms) { w_ = CbrWindow{start_ms, 0, 0}; }
    void add_slot(int busy_subchannels, int n_subch) {
        w_.busy_count += busy_subchannels;
        w_.total_count += n_subch;
    }
    const CbrWindow& window() const { return w_; }

private:
    CbrWindow w_;
};

// ---------------------------------------------------------------- PRR and range

struct PrrBin {
    double center_m = 0.0;
    long successes = 0;
    long attempts = 0;

    double prr() const { return attempts == 0 ? 0.0 : static_cast<double>(successes) / attempts; }
    bool operator==(const PrrBin&) const = default;
};

/// Upper edge of the farthest bin such that every bin up to it has PRR above
/// `threshold`. Bins with fewer than `min_attempts` attempts are ignored.
inline double compute_range(std::span<const PrrBin> bins, double bin_m, long min_attempts = 100,
                            double threshold = 0.95) {
    double range = 0.0;
    for (const auto& b : bins) {
        if (b.attempts < min_attempts) continue;
        if (!(b.prr() > threshold)) break;
        range = b.center_m + bin_m / 2.0;
    }
    return range;
}

// ---------------------------------------------------------------- CCDFs

/// Complementary CDF P(X > x) on the grid 0, step, 2 step, ... up to the
/// first point where it reaches zero.
inline std::vector<std::pair<double, double>> ccdf_on_grid(std::vector<double> samples, double step) {
    std::vector<std::pair<double, double>> out;
    if (samples.empty()) return out;
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    const long last = static_cast<long>(std::ceil(samples.back() / step - 1e-9));
    for (long k = 0; k <= last; ++k) {
        const double x = static_cast<double>(k) * step;
        const auto above = samples.end() - std::upper_bound(samples.begin(), samples.end(), x + 1e-9);
        out.emplace_back(x, static_cast<double>(above) / n);
    }
    return out;
}

// ---------------------------------------------------------------- WBSP

/// Success times per unordered vehicle pair plus position snapshots taken at
/// every window boundary.
class PairLinkTracker {
public:
    PairLinkTracker(double ring_length_m, double distance_m) : ring_(ring_length_m), distance_(distance_m) {}

    void snapshot(double time_ms, std::vector<double> positions) { snapshots_[time_ms] = std::move(positions); }

    void record_success(VehicleId a, VehicleId b, double time_ms) {
        if (a > b) std::swap(a, b);
        successes_[{a, b}].push_back(time_ms);
    }

    double distance_m() const { return distance_; }

    /// Fraction of (pair, window) slots without any reception in either
    /// direction. Windows of length `w_ms` start every `step_ms` from
    /// `first_start_ms` to `last_start_ms`; pairs count when within distance
    /// at the window start. With the same starts for every length the result
    /// is nonincreasing in `w_ms`.
    double wbsp(double w_ms, double first_start_ms, double last_start_ms, double step_ms = 100.0) const {
        if (!(step_ms > 0.0)) throw std::invalid_argument("wbsp: step must be positive");
        long slots = 0;
        long blind = 0;
        for (double s = first_start_ms; s <= last_start_ms + 1e-9; s += step_ms) {
            auto snap = snapshots_.find(s);
            if (snap == snapshots_.end()) continue;
            const auto& pos = snap->second;
            for (std::size_t a = 0; a < pos.size(); ++a) {
                for (std::size_t b = a + 1; b < pos.size(); ++b) {
                    if (ring_distance(pos[a], pos[b], ring_) > distance_) continue;
                    ++slots;
                    if (!any_in(static_cast<VehicleId>(a), static_cast<VehicleId>(b), s, s + w_ms)) ++blind;
                }
            }
        }
        return slots == 0 ? 0.0 : static_cast<double>(blind) / slots;
    }

    /// Time between consecutive receptions of pairs that were within
    /// distance at the snapshot preceding the first reception.
    std::vector<double> gap_samples() const {
        std::vector<double> out;
        for (const auto& [pair, times] : successes_) {
            std::vector<double> t = times;
            std::sort(t.begin(), t.end());
            for (std::size_t i = 1; i < t.size(); ++i) {
                if (t[i] == t[i - 1]) continue;
                auto snap = snapshots_.upper_bound(t[i - 1]);
                if (snap == snapshots_.begin()) continue;
                --snap;
                const auto& pos = snap->second;
                const auto a = static_cast<std::size_t>(pair.first);
                const auto b = static_cast<std::size_t>(pair.second);
                if (ring_distance(pos[a], pos[b], ring_) <= distance_) out.push_back(t[i] - t[i - 1]);
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    bool any_in(VehicleId a, VehicleId b, double lo, double hi) const {
        auto it = successes_.find({a, b});
        if (it == successes_.end()) return false;
        for (double t : it->second) {
            if (t >= lo && t < hi) return true;
        }
        return false;
    }

    double ring_;
    double distance_;
    std::map<double, std::vector<double>> snapshots_;
    std::map<std::pair<VehicleId, VehicleId>, std::vector<double>> successes_;
};

// ---------------------------------------------------------------- per-packet bookkeeping

struct MetricsParams {
    double tti_ms = 1.0;
    double prr_bin_m = 20.0;
    double prr_horizon_m = 1000.0;
    double measure_start_ms = 2000.0;
    double measure_end_ms = 12000.0;
    Tti settle_ttis = 32;  // slots after the last copy before a packet's outcome is final
};

/// Outcome tracking of every measured packet at every eligible receiver.
class PacketTracker {
public:
    explicit PacketTracker(MetricsParams p)
        : p_(p), bins_(static_cast<std::size_t>(std::ceil(p.prr_horizon_m / p.prr_bin_m - 1e-9))) {
        for (std::size_t b = 0; b < bins_.size(); ++b) bins_[b].center_m = (static_cast<double>(b) + 0.5) * p.prr_bin_m;
    }

    /// Registers a packet; `distances` holds the distance to every vehicle
    /// (the source itself is skipped). Returns false when it is not measured.
    bool on_generated(PacketId id, VehicleId source, double gen_time_ms, Tti last_copy_tti,
                      std::span<const double> distances) {
        const Tti final_tti = last_copy_tti + p_.settle_ttis;
        if (gen_time_ms < p_.measure_start_ms) return false;
        if (static_cast<double>(final_tti + 1) * p_.tti_ms > p_.measure_end_ms) return false;
        Track t;
        t.source = source;
        t.gen_time_ms = gen_time_ms;
        t.final_tti = final_tti;
        for (std::size_t r = 0; r < distances.size(); ++r) {
            if (static_cast<VehicleId>(r) == source || distances[r] > p_.prr_horizon_m) continue;
            auto bin = static_cast<std::size_t>(std::floor(distances[r] / p_.prr_bin_m));
            if (bin >= bins_.size()) continue;
            t.receivers.push_back({static_cast<VehicleId>(r), bin, false});
        }
        open_.emplace(id, std::move(t));
        return true;
    }

    /// Returns the end-to-end delay when this is the first success of a
    /// measured packet at an eligible receiver.
    std::optional<double> on_success(PacketId id, VehicleId rx, double time_ms) {
        auto it = open_.find(id);
        if (it == open_.end()) return std::nullopt;
        for (auto& r : it->second.receivers) {
            if (r.rx == rx && !r.success) {
                r.success = true;
                return time_ms - it->second.gen_time_ms;
            }
        }
        return std::nullopt;
    }

    /// Folds every packet whose outcome can no longer change before `now`.
    void finalize_before(Tti now) {
        for (auto it = open_.begin(); it != open_.end();) {
            if (it->second.final_tti < now) {
                fold(it->second);
                it = open_.erase(it);
            } else {
                ++it;
            }
        }
    }

    const std::vector<PrrBin>& bins() const { return bins_; }
    std::size_t open_packets() const { return open_.size(); }

private:
    struct Eligible {
        VehicleId rx;
        std::size_t bin;
        bool success;
    };
    struct Track {
        VehicleId source = 0;
        double gen_time_ms = 0.0;
        Tti final_tti = 0;
        std::vector<Eligible> receivers;
    };

    void fold(const Track& t) {
        for (const auto& r : t.receivers) {
            bins_[r.bin].attempts += 1;
            bins_[r.bin].successes += r.success ? 1 : 0;
        }
    }

    MetricsParams p_;
    std::vector<PrrBin> bins_;
    std::map<PacketId, Track> open_;
};

}  // namespace rbnoma
