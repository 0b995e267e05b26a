#pragma once

// Physical-layer abstraction: SINR of a target signal in one slot given the
// set of already-cancelled interferers, and the threshold decode decision.
// All arithmetic is in linear mW; denominators are accumulated in the
// record's sorted order so results are reproducible bit for bit.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rbnoma/common.hpp"
#include "rbnoma/sidelink_types.hpp"

namespace rbnoma {

struct Contribution {
    VehicleId tx = 0;
    PacketId packet_id = 0;
    double rx_power_mw = 0.0;
    double eta = 1.0;  // fraction of the interferer's power inside the receiver's band
    Resource resource{};
    std::vector<CopyPointer> copy_pointers;  // as signalled in the SCI of this copy
};

struct DecodeParams {
    double gamma_bar_linear = 2.2908676527677727;  // 3.6 dB
    double kn_linear = 1e-3;                       // -30 dB

    static DecodeParams from_db(double gamma_bar_db, double kn_db) {
        DecodeParams p{db_to_linear(gamma_bar_db), db_to_linear(kn_db)};
        if (!(p.gamma_bar_linear > 0.0)) throw std::invalid_argument("SINR threshold must be > 0 (linear)");
        if (!(p.kn_linear >= 0.0 && p.kn_linear <= 1.0)) throw std::invalid_argument("k_N must be in [0, 1]");
        return p;
    }
};

/// Everything a receiver hears in one slot. Contributions are kept sorted by
/// decreasing received power (ties: lower vehicle id first); each carries a
/// cancellation flag.
class TtiRecord {
public:
    TtiRecord() = default;
    TtiRecord(Tti tti, double noise_mw) : tti_(tti), noise_mw_(noise_mw) {}

    void add(Contribution c) {
        if (!(c.rx_power_mw > 0.0)) throw std::invalid_argument("TtiRecord::add: power must be > 0");
        auto pos = std::find_if(contributions_.begin(), contributions_.end(), [&](const Contribution& o) {
            return stronger(c, o);
        });
        const auto offset = pos - contributions_.begin();
        contributions_.insert(pos, std::move(c));
        cancelled_.insert(cancelled_.begin() + offset, 0);
    }

    Tti tti() const { return tti_; }
    double noise_mw() const { return noise_mw_; }
    bool empty() const { return contributions_.empty(); }
    std::size_t size() const { return contributions_.size(); }
    std::span<const Contribution> contributions() const { return contributions_; }
    const Contribution& at(std::size_t i) const { return contributions_.at(i); }

    std::optional<std::size_t> index_of(VehicleId tx) const {
        for (std::size_t i = 0; i < contributions_.size(); ++i) {
            if (contributions_[i].tx == tx) return i;
        }
        return std::nullopt;
    }

    bool cancelled_at(std::size_t i) const { return cancelled_.at(i) != 0; }

    bool is_cancelled(VehicleId tx) const {
        auto i = index_of(tx);
        return i && cancelled_[*i] != 0;
    }

    /// Cancelled transmitters, in record order.
    std::vector<VehicleId> cancelled() const {
        std::vector<VehicleId> out;
        for (std::size_t i = 0; i < contributions_.size(); ++i) {
            if (cancelled_[i]) out.push_back(contributions_[i].tx);
        }
        return out;
    }

    /// Sets the flag of entry i; returns false when it was already set.
    bool cancel_at(std::size_t i) {
        if (cancelled_.at(i)) return false;
        cancelled_[i] = 1;
        return true;
    }

    /// Strongest contribution whose flag is clear.
    std::optional<std::size_t> strongest_uncancelled() const {
        for (std::size_t i = 0; i < cancelled_.size(); ++i) {
            if (!cancelled_[i]) return i;
        }
        return std::nullopt;
    }

private:
    static bool stronger(const Contribution& a, const Contribution& b) {
        if (a.rx_power_mw != b.rx_power_mw) return a.rx_power_mw > b.rx_power_mw;
        return a.tx < b.tx;
    }

    Tti tti_ = 0;
    double noise_mw_ = 0.0;
    std::vector<Contribution> contributions_;
    std::vector<char> cancelled_;
};

/// Legacy receiver: SINR of the strongest contribution with every other
/// contribution as interference. Empty record: no signal (nullopt).
inline std::optional<double> sinr_legacy(const TtiRecord& rec) {
    if (rec.empty()) return std::nullopt;
    const auto c = rec.contributions();
    double denom = rec.noise_mw();
    for (std::size_t j = 1; j < c.size(); ++j) denom += c[j].eta * c[j].rx_power_mw;
    return c[0].rx_power_mw / denom;
}

/// Strongest-first SIC: the z-th strongest signal (0-based) sees the
/// residual k_N of every stronger signal and the full power of weaker ones.
inline double sinr_sic(const TtiRecord& rec, std::size_t z, double kn_linear) {
    const auto c = rec.contributions();
    if (z >= c.size()) throw std::domain_error("sinr_sic: index out of range");
    double denom = rec.noise_mw();
    for (std::size_t j = 0; j < c.size(); ++j) {
        if (j < z) {
            denom += kn_linear * c[j].eta * c[j].rx_power_mw;
        } else if (j > z) {
            denom += c[j].eta * c[j].rx_power_mw;
        }
    }
    return c[z].rx_power_mw / denom;
}

/// General form: each interferer j weighs ((1 - xi_j) + k_N xi_j), where xi_j
/// is its cancellation flag.
inline double sinr_rbnoma_at(const TtiRecord& rec, std::size_t z, double kn_linear) {
    const auto c = rec.contributions();
    if (z >= c.size()) throw std::domain_error("sinr_rbnoma: index out of range");
    double denom = rec.noise_mw();
    for (std::size_t j = 0; j < c.size(); ++j) {
        if (j == z) continue;
        const double xi = rec.cancelled_at(j) ? 1.0 : 0.0;
        const double weight = (1.0 - xi) + kn_linear * xi;
        denom += weight * c[j].eta * c[j].rx_power_mw;
    }
    return c[z].rx_power_mw / denom;
}

inline double sinr_rbnoma(const TtiRecord& rec, VehicleId target_tx, const DecodeParams& params) {
    auto z = rec.index_of(target_tx);
    if (!z) throw std::domain_error("sinr_rbnoma: target transmitter not in record");
    return sinr_rbnoma_at(rec, *z, params.kn_linear);
}

/// Chained threshold decision: success needs the previous step to have
/// succeeded and the SINR to reach the threshold (inclusive).
inline bool decode(double gamma_linear, bool prev_ok, const DecodeParams& params) {
    return prev_ok && gamma_linear >= params.gamma_bar_linear;
}

/// Flags `tx` as cancelled. Idempotent; returns true when the flag changed.
inline bool mark_cancelled(TtiRecord& rec, VehicleId tx) {
    auto i = rec.index_of(tx);
    if (!i) throw std::domain_error("mark_cancelled: transmitter not in record");
    return rec.cancel_at(*i);
}

}  // namespace rbnoma
