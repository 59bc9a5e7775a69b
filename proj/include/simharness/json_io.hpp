#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace simharness
{
    using json = nlohmann::json;
    using ordered_json = nlohmann::ordered_json;

    /// Reads a whole file. Throws IoError.
    std::string read_text_file(const std::filesystem::path& path);

    /// Writes a whole file through a temporary sibling and rename. Throws IoError.
    void write_text_file(const std::filesystem::path& path, std::string_view contents);

    /// Parses JSON, converting parser failures into ParseError with line/column.
    json parse_json(std::string_view text);

    /// Parses JSON read from a file; ParseError messages carry the file name.
    json load_json_file(const std::filesystem::path& path);

    /// Replaces commas that directly precede `]` or `}` (outside strings) with spaces.
    /// Byte offsets are preserved so parser positions still refer to the original text.
    std::string blank_trailing_commas(std::string_view text);

    /// True for integral numbers >= 0, whether stored signed or unsigned.
    inline bool is_non_negative_integer(const json& j)
    {
        return j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0);
    }
} // namespace simharness
