#include "simharness/bridge.hpp"

#include "simharness/simcore.hpp"

namespace simharness
{
    HypercallEvent decode_mmio(std::uint16_t offset, std::uint64_t value, std::uint64_t tick)
    {
        if (offset >= kMmioPageSize)
        {
            throw GuestFault("MMIO write outside the m5op page at offset " + std::to_string(offset));
        }
        if (offset % kMmioStride != 0)
        {
            throw GuestFault("misaligned MMIO write at offset " + std::to_string(offset));
        }
        HypercallEvent e;
        e.num = static_cast<std::uint16_t>(offset / kMmioStride);
        e.arg = value;
        e.tick = tick;
        e.source = EventSource::Guest;
        return e;
    }

    void check_guest_access(Privilege privilege, bool bridge_device_present)
    {
        if (privilege == Privilege::User && !bridge_device_present)
        {
            throw GuestFault(std::string(kPermissionDenied));
        }
    }

    HypercallEvent guest_hypercall(Privilege privilege, bool bridge_device_present, std::uint16_t num,
                                   std::uint64_t arg, std::uint64_t tick)
    {
        check_guest_access(privilege, bridge_device_present);
        HypercallEvent e;
        e.num = num;
        e.arg = arg;
        e.tick = tick;
        e.source = EventSource::Guest;
        return e;
    }

    void check_payload(const json& payload)
    {
        if (payload.is_null())
        {
            return;
        }
        if (!payload.is_object())
        {
            throw ConfigError("hypercall payload must be a JSON object");
        }
        for (const auto& [key, value] : payload.items())
        {
            if (value.is_object() || value.is_array())
            {
                throw ConfigError("payload field '" + key + "' must be a scalar");
            }
        }
    }

    std::future<InjectionAck> inject_external_hypercall(Simulation& sim, std::uint16_t num, json payload)
    {
        check_payload(payload);
        return sim.inject_external_hypercall(num, std::move(payload));
    }
} // namespace simharness
