#include "simharness/semver.hpp"

#include "simharness/error.hpp"

#include <charconv>
#include <vector>

namespace simharness
{
    namespace
    {
        std::optional<std::uint64_t> parse_component(std::string_view s)
        {
            if (s.empty())
            {
                return std::nullopt;
            }
            std::uint64_t value = 0;
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
            if (ec != std::errc{} || ptr != s.data() + s.size())
            {
                return std::nullopt;
            }
            return value;
        }

        std::vector<std::string_view> split_dots(std::string_view s)
        {
            std::vector<std::string_view> parts;
            std::size_t start = 0;
            while (true)
            {
                auto dot = s.find('.', start);
                if (dot == std::string_view::npos)
                {
                    parts.push_back(s.substr(start));
                    break;
                }
                parts.push_back(s.substr(start, dot - start));
                start = dot + 1;
            }
            return parts;
        }
    } // namespace

    std::optional<Semver> Semver::parse(std::string_view text)
    {
        auto parts = split_dots(text);
        if (parts.size() != 3)
        {
            return std::nullopt;
        }
        auto major = parse_component(parts[0]);
        auto minor = parse_component(parts[1]);
        auto patch = parse_component(parts[2]);
        if (!major || !minor || !patch)
        {
            return std::nullopt;
        }
        return Semver{*major, *minor, *patch};
    }

    std::string Semver::to_string() const
    {
        return std::to_string(major) + "." + std::to_string(minor) + "." + std::to_string(patch);
    }

    VersionConstraint VersionConstraint::parse(std::string_view text)
    {
        VersionConstraint c;
        if (text.empty() || text == "*")
        {
            return c;
        }
        std::string_view rest = text;
        if (rest.starts_with(">="))
        {
            c.kind_ = Kind::AtLeast;
            rest.remove_prefix(2);
        }
        else if (rest.starts_with('^'))
        {
            c.kind_ = Kind::Caret;
            rest.remove_prefix(1);
        }
        else if (rest.starts_with('~'))
        {
            c.kind_ = Kind::Tilde;
            rest.remove_prefix(1);
        }
        else
        {
            c.kind_ = Kind::Exact;
            if (rest.starts_with('='))
            {
                rest.remove_prefix(1);
            }
        }
        auto base = Semver::parse(rest);
        if (!base)
        {
            throw ConfigError("invalid version constraint '" + std::string(text) + "'");
        }
        c.base_ = *base;
        return c;
    }

    bool VersionConstraint::matches(const Semver& v) const
    {
        switch (kind_)
        {
        case Kind::Any:
            return true;
        case Kind::Exact:
            return v == base_;
        case Kind::AtLeast:
            return v >= base_;
        case Kind::Caret:
            return v.major == base_.major && v >= base_;
        case Kind::Tilde:
            return v.major == base_.major && v.minor == base_.minor && v >= base_;
        }
        return false;
    }

    std::string VersionConstraint::to_string() const
    {
        switch (kind_)
        {
        case Kind::Any:
            return "*";
        case Kind::Exact:
            return base_.to_string();
        case Kind::AtLeast:
            return ">=" + base_.to_string();
        case Kind::Caret:
            return "^" + base_.to_string();
        case Kind::Tilde:
            return "~" + base_.to_string();
        }
        return "*";
    }

    bool same_major_minor(std::string_view a, std::string_view b)
    {
        auto pa = split_dots(a);
        auto pb = split_dots(b);
        if (pa.size() < 2 || pb.size() < 2)
        {
            return false;
        }
        for (std::size_t i = 0; i < 2; ++i)
        {
            auto x = parse_component(pa[i]);
            auto y = parse_component(pb[i]);
            if (!x || !y || *x != *y)
            {
                return false;
            }
        }
        return true;
    }
} // namespace simharness
