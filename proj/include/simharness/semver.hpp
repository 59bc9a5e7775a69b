#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace simharness
{
    /// MAJOR.MINOR.PATCH, all non-negative integers without leading signs.
    struct Semver
    {
        std::uint64_t major = 0;
        std::uint64_t minor = 0;
        std::uint64_t patch = 0;

        static std::optional<Semver> parse(std::string_view text);
        std::string to_string() const;

        auto operator<=>(const Semver&) const = default;
    };

    /// Version requirement attached to a component reference.
    ///
    /// Accepted forms: empty or `*` (any), `1.2.3` / `=1.2.3` (exact), `>=1.2.3`,
    /// `^1.2.3` (same major, not lower) and `~1.2.3` (same major.minor, not lower).
    class VersionConstraint
    {
    public:
        enum class Kind
        {
            Any,
            Exact,
            AtLeast,
            Caret,
            Tilde,
        };

        VersionConstraint() = default;

        /// Throws ConfigError for text that is not one of the accepted forms.
        static VersionConstraint parse(std::string_view text);

        bool matches(const Semver& v) const;
        Kind kind() const noexcept { return kind_; }
        std::string to_string() const;

    private:
        Kind kind_ = Kind::Any;
        Semver base_{};
    };

    /// Compares the MAJOR.MINOR prefix of two dotted version strings.
    bool same_major_minor(std::string_view a, std::string_view b);
} // namespace simharness
