#pragma once

#include "simharness/json_io.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace simharness
{
    struct StatsSnapshot
    {
        std::uint64_t tick = 0;
        std::uint64_t total_instructions = 0;
        std::uint64_t roi_instructions = 0;
        std::map<std::uint16_t, std::uint64_t> hypercall_counts;
        std::string label;

        bool operator==(const StatsSnapshot&) const = default;
    };

    ordered_json to_json(const StatsSnapshot& s);
    StatsSnapshot stats_from_json(const json& j);
} // namespace simharness
