#include "simharness/stats.hpp"

#include "simharness/error.hpp"

namespace simharness
{
    ordered_json to_json(const StatsSnapshot& s)
    {
        ordered_json counts = ordered_json::object();
        for (const auto& [num, count] : s.hypercall_counts)
        {
            counts[std::to_string(num)] = count;
        }
        ordered_json j;
        j["label"] = s.label;
        j["tick"] = s.tick;
        j["total_instructions"] = s.total_instructions;
        j["roi_instructions"] = s.roi_instructions;
        j["hypercall_counts"] = std::move(counts);
        return j;
    }

    StatsSnapshot stats_from_json(const json& j)
    {
        try
        {
            StatsSnapshot s;
            s.label = j.value("label", std::string());
            s.tick = j.at("tick").get<std::uint64_t>();
            s.total_instructions = j.at("total_instructions").get<std::uint64_t>();
            s.roi_instructions = j.at("roi_instructions").get<std::uint64_t>();
            if (auto it = j.find("hypercall_counts"); it != j.end())
            {
                for (const auto& [k, v] : it->items())
                {
                    s.hypercall_counts[static_cast<std::uint16_t>(std::stoul(k))] = v.get<std::uint64_t>();
                }
            }
            return s;
        }
        catch (const json::exception& e)
        {
            throw ConfigError(std::string("malformed stats snapshot: ") + e.what());
        }
    }
} // namespace simharness
