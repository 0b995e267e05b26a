#pragma once

#include <compare>
#include <optional>
#include <vector>

#include "rbnoma/common.hpp"

namespace rbnoma {

/// One cell of the time-frequency grid: a slot and a run of adjacent subchannels.
struct Resource {
    Tti tti = 0;
    int subch_start = 0;
    int subch_count = 1;

    auto operator<=>(const Resource&) const = default;
};

enum class CopyDirection { Forward, Backward };

struct CopyPointer {
    Resource resource;
    CopyDirection direction = CopyDirection::Forward;

    bool operator==(const CopyPointer&) const = default;
};

enum class SciFormat { LegacySci, ExtendedSci };

/// Sidelink control information carried by one copy of a packet.
struct SciPayload {
    VehicleId source = 0;
    PacketId packet_id = 0;
    std::optional<int> rri_ms;  // periodic reservation interval, none for dynamic scheduling
    std::vector<CopyPointer> copy_pointers;
    int copy_index = 0;
    int n_copies = 1;

    bool operator==(const SciPayload&) const = default;
};

/// Largest slot distance a copy pointer may span.
inline constexpr Tti kMaxPointerSpanTtis = 32;

}  // namespace rbnoma
