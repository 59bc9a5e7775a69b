#pragma once

#include "simharness/json_io.hpp"
#include "simharness/resources.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace simharness
{
    /// Ticks per instruction as a positive rational.
    struct ClockFactor
    {
        std::uint64_t num = 1;
        std::uint64_t den = 1;

        /// Accepts "N" or "N/D" with N, D > 0. Throws ConfigError.
        static ClockFactor parse(std::string_view text);

        /// ceil(instructions * num / den)
        std::uint64_t ticks_for(std::uint64_t instructions) const;

        /// Largest instruction count whose tick cost fits in `ticks`.
        std::uint64_t instructions_within(std::uint64_t ticks) const;

        std::string to_string() const;
    };

    struct BoardConfig
    {
        std::string name;
        ClockFactor clock;
        std::optional<std::uint64_t> max_tick;
        Architecture architecture = Architecture::ANY;
    };

    /// The three demo boards; they differ in clock factor (1, 2, 10) and max_tick.
    const std::vector<BoardConfig>& board_presets();
    std::optional<BoardConfig> find_board_preset(std::string_view name);

    /// A preset name (string) or an inline object {name, clock, max_tick, architecture}.
    BoardConfig board_from_json(const json& j);
    ordered_json to_json(const BoardConfig& b);
} // namespace simharness
