#include "simharness/json_io.hpp"

#include "simharness/error.hpp"

#include <fstream>
#include <sstream>

#include <unistd.h>

namespace simharness
{
    namespace fs = std::filesystem;

    std::string read_text_file(const fs::path& path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
        {
            throw IoError("cannot open '" + path.string() + "' for reading");
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        if (in.bad())
        {
            throw IoError("error reading '" + path.string() + "'");
        }
        return ss.str();
    }

    void write_text_file(const fs::path& path, std::string_view contents)
    {
        auto tmp = path;
        tmp += ".tmp." + std::to_string(::getpid());
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out)
            {
                throw IoError("cannot open '" + tmp.string() + "' for writing");
            }
            out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
            out.flush();
            if (!out)
            {
                throw IoError("error writing '" + tmp.string() + "'");
            }
        }
        std::error_code ec;
        fs::rename(tmp, path, ec);
        if (ec)
        {
            fs::remove(tmp, ec);
            throw IoError("cannot move '" + tmp.string() + "' into place: " + ec.message());
        }
    }

    json parse_json(std::string_view text)
    {
        try
        {
            return json::parse(text);
        }
        catch (const json::parse_error& e)
        {
            // e.byte is the 1-based offset of the offending character.
            std::size_t line = 1;
            std::size_t column = 1;
            std::size_t limit = e.byte == 0 ? 0 : std::min<std::size_t>(e.byte - 1, text.size());
            for (std::size_t i = 0; i < limit; ++i)
            {
                if (text[i] == '\n')
                {
                    ++line;
                    column = 1;
                }
                else
                {
                    ++column;
                }
            }
            throw ParseError("JSON parse error at line " + std::to_string(line) + ", column " +
                                 std::to_string(column) + ": " + e.what(),
                             line, column);
        }
    }

    json load_json_file(const fs::path& path)
    {
        auto text = read_text_file(path);
        try
        {
            return parse_json(text);
        }
        catch (const ParseError& e)
        {
            throw ParseError(path.string() + ": " + e.what(), e.line(), e.column());
        }
    }

    std::string blank_trailing_commas(std::string_view text)
    {
        std::string out(text);
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = 0; i < out.size(); ++i)
        {
            char c = out[i];
            if (in_string)
            {
                if (escaped)
                {
                    escaped = false;
                }
                else if (c == '\\')
                {
                    escaped = true;
                }
                else if (c == '"')
                {
                    in_string = false;
                }
                continue;
            }
            if (c == '"')
            {
                in_string = true;
            }
            else if (c == ',')
            {
                std::size_t j = i + 1;
                while (j < out.size() && (out[j] == ' ' || out[j] == '\t' || out[j] == '\n' || out[j] == '\r'))
                {
                    ++j;
                }
                if (j < out.size() && (out[j] == ']' || out[j] == '}'))
                {
                    out[i] = ' ';
                }
            }
        }
        return out;
    }
} // namespace simharness
