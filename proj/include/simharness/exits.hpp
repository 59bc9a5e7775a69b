#pragma once

#include "simharness/error.hpp"
#include "simharness/json_io.hpp"
#include "simharness/stats.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace simharness
{
    enum class EventSource
    {
        Guest,
        External,
    };

    std::string_view to_string(EventSource s);

    /// A numbered guest->host signal, or one injected from outside the guest.
    /// Guest events never carry a payload.
    struct HypercallEvent
    {
        std::uint16_t num = 0;
        std::uint64_t arg = 0;
        json payload; // null, or an object of scalars for external events
        std::uint64_t tick = 0;
        EventSource source = EventSource::Guest;

        bool operator==(const HypercallEvent&) const = default;
    };

    /// Serialized as {tick, num, arg, source[, payload]}.
    ordered_json to_json(const HypercallEvent& e);
    HypercallEvent event_from_json(const json& j);

    struct Directive
    {
        enum class Kind
        {
            Continue,
            Exit,
        };

        Kind kind = Kind::Continue;
        std::string reason;

        static Directive proceed() { return {}; }
        static Directive exit(std::string reason) { return {Kind::Exit, std::move(reason)}; }
        bool is_exit() const noexcept { return kind == Kind::Exit; }
    };

    /// What a handler may touch while an event is being dispatched.
    class HandlerContext
    {
    public:
        virtual ~HandlerContext() = default;

        virtual std::uint64_t tick() const = 0;
        virtual StatsSnapshot stats() const = 0;
        virtual StatsSnapshot dump_stats(std::string label) = 0;
        virtual void reset_stats() = 0;
        virtual void open_roi() = 0;
        virtual void close_roi() = 0;
        virtual bool roi_open() const = 0;
        virtual void log(std::string_view line) = 0;
        virtual void warn(std::string_view line) = 0;
        virtual void set_max_tick(std::optional<std::uint64_t> max_tick) = 0;

        /// How many times `num` has been raised so far, the current event included.
        /// Unaffected by reset_stats.
        virtual std::uint64_t times_seen(std::uint16_t num) const = 0;
    };

    struct ExitHandler
    {
        std::string name;
        std::function<Directive(HandlerContext&, const HypercallEvent&)> fn;
    };

    /// A handler threw; the run ends with terminal cause host_handler_error.
    class HostHandlerError : public Error
    {
    public:
        using Error::Error;
    };

    /// Hypercall number -> handler. Lookup is by number only, so the order in
    /// which handlers were registered never matters.
    class HandlerTable
    {
    public:
        /// Returns the handler previously registered for `num`, if any.
        std::optional<ExitHandler> register_handler(std::uint16_t num, ExitHandler h);
        std::optional<ExitHandler> remove(std::uint16_t num);
        const ExitHandler* find(std::uint16_t num) const;
        std::vector<std::uint16_t> numbers() const;

    private:
        std::map<std::uint16_t, ExitHandler> handlers_;
    };

    /// 1, 2: progress markers; 3: exit; 4: reset stats and open the ROI;
    /// 5: dump stats as "roi" and close the ROI.
    HandlerTable default_handlers();

    /// Names usable in run configuration files.
    const std::vector<std::string>& builtin_handler_names();

    /// Throws ConfigError for unknown names.
    ExitHandler builtin_handler(std::string_view name, std::uint16_t num);

    /// Applies {"<num>": "<builtin-name>", ...}. Throws ConfigError.
    void apply_handler_config(HandlerTable& table, const json& config);

    /// Looks up e.num and runs its handler. Unhandled numbers warn and continue.
    /// Exceptions escaping a handler are rethrown as HostHandlerError.
    Directive dispatch(const HandlerTable& table, HandlerContext& ctx, const HypercallEvent& e);
} // namespace simharness
