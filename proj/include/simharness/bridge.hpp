#pragma once

#include "simharness/exits.hpp"
#include "simharness/guest.hpp"

#include <cstdint>
#include <future>

namespace simharness
{
    class Simulation;
    struct InjectionAck;

    /// The m5-operation MMIO window: one page, one 8-byte slot per hypercall number.
    inline constexpr std::uint32_t kMmioPageSize = 4096;
    inline constexpr std::uint32_t kMmioStride = 8;

    inline constexpr std::string_view kPermissionDenied = "permission denied: /dev/mem requires root";

    /// num = offset / 8. Throws GuestFault for misaligned or out-of-page offsets.
    HypercallEvent decode_mmio(std::uint16_t offset, std::uint64_t value, std::uint64_t tick = 0);

    constexpr std::uint16_t mmio_offset_for(std::uint16_t num)
    {
        return static_cast<std::uint16_t>(num * kMmioStride);
    }

    /// Root may always reach the MMIO window; user code only through the bridge
    /// device. Throws GuestFault with kPermissionDenied otherwise.
    void check_guest_access(Privilege privilege, bool bridge_device_present);

    /// A guest-issued hypercall after the privilege gate.
    HypercallEvent guest_hypercall(Privilege privilege, bool bridge_device_present, std::uint16_t num,
                                   std::uint64_t arg, std::uint64_t tick = 0);

    /// Queues a host-originated hypercall; payload must be null or an object of
    /// scalar values (ConfigError otherwise).
    std::future<InjectionAck> inject_external_hypercall(Simulation& sim, std::uint16_t num, json payload);

    /// Throws ConfigError unless payload is null or a flat object of scalars.
    void check_payload(const json& payload);
} // namespace simharness
