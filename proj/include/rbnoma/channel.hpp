#pragma once

// Large-scale propagation: dual-slope log-distance path loss, per-pair
// correlated log-normal shadowing, link budget and thermal noise.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rbnoma/common.hpp"
#include "rbnoma/random.hpp"

namespace rbnoma {

/// Dual-slope log-distance coefficients. The defaults are an "ECC-rural-like"
/// placeholder (free-space intercept at 5.9 GHz, exponent 2 up to the
/// breakpoint, 3 beyond it); substitute the exact ETSI coefficients of the
/// modified ECC Report 68 rural model for standards-grade comparisons.
struct PathlossParams {
    double a0_db = 47.86;
    double slope1 = 2.0;
    double slope2 = 3.0;
    double breakpoint_m = 100.0;

    bool operator==(const PathlossParams&) const = default;

    void validate() const {
        if (!std::isfinite(a0_db)) throw std::invalid_argument("pl.a0_db must be finite");
        if (!(slope1 >= 0.0)) throw std::invalid_argument("pl.slope1 must be >= 0");
        if (!(slope2 >= slope1)) throw std::invalid_argument("pl.slope2 must be >= pl.slope1");
        if (!(breakpoint_m > 0.0)) throw std::invalid_argument("pl.breakpoint_m must be > 0");
    }
};

inline double path_loss_db(double d_m, const PathlossParams& p) {
    if (!(d_m > 0.0)) throw std::domain_error("path_loss_db: distance must be > 0");
    return p.a0_db + 10.0 * p.slope1 * std::log10(std::min(d_m, p.breakpoint_m)) +
           10.0 * p.slope2 * std::log10(std::max(d_m / p.breakpoint_m, 1.0));
}

/// Shadowing state of one unordered vehicle pair. Positive values are extra loss.
struct ShadowLink {
    double value_db = 0.0;
    std::pair<double, double> last_positions{0.0, 0.0};
};

/// Gudmundson-style AR(1) update driven by the distance moved by both ends.
inline double shadowing_step(ShadowLink& link, double moved_m, double sigma_db, double decorr_m,
                             Engine& rng) {
    if (moved_m < 0.0) throw std::domain_error("shadowing_step: moved distance must be >= 0");
    const double rho = std::exp(-moved_m / decorr_m);
    const double innovation = normal(rng, 0.0, 1.0);
    link.value_db = rho * link.value_db + std::sqrt(1.0 - rho * rho) * sigma_db * innovation;
    return link.value_db;
}

inline double received_power_dbm(double tx_dbm, double gains_dbi_sum, double pl_db, double shadow_db) {
    return tx_dbm + gains_dbi_sum - pl_db - shadow_db;
}

inline double noise_power_dbm(double bandwidth_mhz, double nf_db) {
    if (!(bandwidth_mhz > 0.0)) throw std::domain_error("noise_power_dbm: bandwidth must be > 0");
    return -174.0 + 10.0 * std::log10(bandwidth_mhz * 1e6) + nf_db;
}

inline double ring_distance(double a, double b, double ring_length) {
    const double d = std::fabs(a - b);
    return std::min(d, ring_length - d);
}

struct LinkBudget {
    double tx_power_dbm = 23.0;
    double antenna_gain_dbi = 3.0;
    double shadowing_std_db = 3.0;
    double shadowing_decorr_m = 25.0;
    PathlossParams pathloss{};
};

/// Received-power matrix for a fixed vehicle population on a ring road,
/// refreshed on demand (the simulator calls update() once per 100 ms).
class ChannelModel {
public:
    ChannelModel(std::size_t n_vehicles, double ring_length_m, LinkBudget budget)
        : n_(n_vehicles), ring_(ring_length_m), budget_(budget), links_(n_ * n_), rx_mw_(n_ * n_, 0.0) {}

    /// Draws the stationary shadowing state and computes the first power matrix.
    void initialize(std::span<const double> positions, Engine& rng) {
        for (std::size_t a = 0; a < n_; ++a) {
            for (std::size_t b = a + 1; b < n_; ++b) {
                auto& link = links_[a * n_ + b];
                link.value_db = normal(rng, 0.0, 1.0) * budget_.shadowing_std_db;
                link.last_positions = {positions[a], positions[b]};
            }
        }
        recompute(positions);
    }

    void update(std::span<const double> positions, Engine& rng) {
        for (std::size_t a = 0; a < n_; ++a) {
            for (std::size_t b = a + 1; b < n_; ++b) {
                auto& link = links_[a * n_ + b];
                const double moved = ring_distance(link.last_positions.first, positions[a], ring_) +
                                     ring_distance(link.last_positions.second, positions[b], ring_);
                shadowing_step(link, moved, budget_.shadowing_std_db, budget_.shadowing_decorr_m, rng);
                link.last_positions = {positions[a], positions[b]};
            }
        }
        recompute(positions);
    }

    /// Linear received power (mW) at `rx` from `tx`.
    double rx_power_mw(VehicleId tx, VehicleId rx) const {
        return rx_mw_[static_cast<std::size_t>(tx) * n_ + static_cast<std::size_t>(rx)];
    }

    double shadowing_db(VehicleId a, VehicleId b) const {
        if (a > b) std::swap(a, b);
        return links_[static_cast<std::size_t>(a) * n_ + static_cast<std::size_t>(b)].value_db;
    }

private:
    void recompute(std::span<const double> positions) {
        const double gains = 2.0 * budget_.antenna_gain_dbi;
        for (std::size_t a = 0; a < n_; ++a) {
            rx_mw_[a * n_ + a] = 0.0;
            for (std::size_t b = a + 1; b < n_; ++b) {
                // Co-located vehicles in different lanes: clamp to 1 m.
                const double d = std::max(ring_distance(positions[a], positions[b], ring_), 1.0);
                const double dbm = received_power_dbm(budget_.tx_power_dbm, gains,
                                                      path_loss_db(d, budget_.pathloss),
                                                      links_[a * n_ + b].value_db);
                const double mw = dbm_to_mw(dbm);
                rx_mw_[a * n_ + b] = mw;
                rx_mw_[b * n_ + a] = mw;
            }
        }
    }

    std::size_t n_;
    double ring_;
    LinkBudget budget_;
    std::vector<ShadowLink> links_;  // upper triangle used
    std::vector<double> rx_mw_;
};

}  // namespace rbnoma
