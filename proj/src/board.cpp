#include "simharness/board.hpp"

#include "simharness/error.hpp"

#include <charconv>

namespace simharness
{
    namespace
    {
        std::uint64_t parse_positive(std::string_view s, std::string_view whole)
        {
            std::uint64_t v = 0;
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || v == 0)
            {
                throw ConfigError("invalid clock factor '" + std::string(whole) + "'");
            }
            return v;
        }
    } // namespace

    ClockFactor ClockFactor::parse(std::string_view text)
    {
        auto slash = text.find('/');
        if (slash == std::string_view::npos)
        {
            return ClockFactor{parse_positive(text, text), 1};
        }
        return ClockFactor{parse_positive(text.substr(0, slash), text), parse_positive(text.substr(slash + 1), text)};
    }

    std::uint64_t ClockFactor::ticks_for(std::uint64_t instructions) const
    {
        auto prod = static_cast<unsigned __int128>(instructions) * num;
        return static_cast<std::uint64_t>((prod + den - 1) / den);
    }

    std::uint64_t ClockFactor::instructions_within(std::uint64_t ticks) const
    {
        auto prod = static_cast<unsigned __int128>(ticks) * den;
        auto n = prod / num;
        constexpr auto kMax = static_cast<unsigned __int128>(UINT64_MAX);
        return static_cast<std::uint64_t>(n > kMax ? kMax : n);
    }

    std::string ClockFactor::to_string() const
    {
        return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
    }

    const std::vector<BoardConfig>& board_presets()
    {
        static const std::vector<BoardConfig> presets{
            {"x86-demo-board", ClockFactor{1, 1}, 1'000'000'000'000ULL, Architecture::X86},
            {"arm-demo-board", ClockFactor{2, 1}, 2'000'000'000'000ULL, Architecture::ARM},
            {"riscv-demo-board", ClockFactor{10, 1}, 10'000'000'000'000ULL, Architecture::RISCV},
        };
        return presets;
    }

    std::optional<BoardConfig> find_board_preset(std::string_view name)
    {
        for (const auto& b : board_presets())
        {
            if (b.name == name)
            {
                return b;
            }
        }
        return std::nullopt;
    }

    BoardConfig board_from_json(const json& j)
    {
        if (j.is_string())
        {
            auto name = j.get<std::string>();
            auto preset = find_board_preset(name);
            if (!preset)
            {
                std::string known;
                for (const auto& b : board_presets())
                {
                    known += (known.empty() ? "" : ", ") + b.name;
                }
                throw ConfigError("unknown board preset '" + name + "' (known: " + known + ")");
            }
            return *preset;
        }
        if (!j.is_object())
        {
            throw ConfigError("board must be a preset name or an object");
        }
        BoardConfig b;
        b.name = j.value("name", std::string("custom-board"));
        if (auto it = j.find("clock"); it != j.end())
        {
            b.clock = it->is_string() ? ClockFactor::parse(it->get<std::string>())
                                      : ClockFactor::parse(std::to_string(it->get<std::uint64_t>()));
        }
        if (auto it = j.find("max_tick"); it != j.end() && !it->is_null())
        {
            if (!is_non_negative_integer(*it))
            {
                throw ConfigError("max_tick must be a non-negative integer");
            }
            b.max_tick = it->get<std::uint64_t>();
        }
        if (auto it = j.find("architecture"); it != j.end() && it->is_string())
        {
            b.architecture = architecture_from_string(it->get<std::string>());
        }
        return b;
    }

    ordered_json to_json(const BoardConfig& b)
    {
        ordered_json j;
        j["name"] = b.name;
        j["clock"] = b.clock.to_string();
        j["max_tick"] = b.max_tick ? ordered_json(*b.max_tick) : ordered_json(nullptr);
        j["architecture"] = to_string(b.architecture);
        return j;
    }
} // namespace simharness
