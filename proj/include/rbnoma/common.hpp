#pragma once

#include <cmath>
#include <cstdint>

namespace rbnoma {

using VehicleId = std::int32_t;
using PacketId = std::int64_t;
/// Slot index on the sidelink grid. Duration depends on the numerology.
using Tti = std::int64_t;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_mw(double dbm) { return db_to_linear(dbm); }
inline double mw_to_dbm(double mw) { return linear_to_db(mw); }

/// Slot duration in ms for numerology mu (2^-mu ms).
inline double tti_duration_ms(int mu) { return 1.0 / static_cast<double>(1 << mu); }

/// Number of slots in `ms` milliseconds at numerology mu.
inline Tti ms_to_ttis(double ms, int mu) {
    return static_cast<Tti>(std::llround(ms * static_cast<double>(1 << mu)));
}

}  // namespace rbnoma
