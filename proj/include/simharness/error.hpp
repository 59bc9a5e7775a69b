#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace simharness
{
    /// Base class for every error raised by the harness.
    class Error : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// Malformed JSON input. Line and column are 1-based.
    class ParseError : public Error
    {
    public:
        ParseError(const std::string& what, std::size_t line, std::size_t column)
            : Error(what), line_(line), column_(column)
        {
        }

        std::size_t line() const noexcept { return line_; }
        std::size_t column() const noexcept { return column_; }

    private:
        std::size_t line_;
        std::size_t column_;
    };

    /// A catalog entry violates the descriptor schema.
    class SchemaError : public Error
    {
    public:
        SchemaError(const std::string& what, std::string field, std::size_t entry_index)
            : Error(what), field_(std::move(field)), entry_index_(entry_index)
        {
        }

        const std::string& field() const noexcept { return field_; }
        std::size_t entry_index() const noexcept { return entry_index_; }

    private:
        std::string field_;
        std::size_t entry_index_;
    };

    class NotFoundError : public Error
    {
    public:
        NotFoundError(const std::string& what, std::vector<std::string> nearest)
            : Error(what), nearest_(std::move(nearest))
        {
        }

        const std::vector<std::string>& nearest() const noexcept { return nearest_; }

    private:
        std::vector<std::string> nearest_;
    };

    class VersionConflictError : public Error
    {
    public:
        VersionConflictError(const std::string& what, std::vector<std::string> available)
            : Error(what), available_(std::move(available))
        {
        }

        const std::vector<std::string>& available() const noexcept { return available_; }

    private:
        std::vector<std::string> available_;
    };

    /// A workload or suite references a component that cannot be resolved.
    class DependencyError : public Error
    {
    public:
        using Error::Error;
    };

    /// An operation was invoked in a lifecycle state that does not allow it.
    class StateError : public Error
    {
    public:
        using Error::Error;
    };

    class IoError : public Error
    {
    public:
        using Error::Error;
    };

    /// Invalid run/plan configuration supplied by the user.
    class ConfigError : public Error
    {
    public:
        using Error::Error;
    };

    /// Raised inside the simulated guest; ends the run with terminal cause guest_fault.
    class GuestFault : public Error
    {
    public:
        using Error::Error;
    };
} // namespace simharness
