#include "simharness/exits.hpp"

#include <charconv>

namespace simharness
{
    std::string_view to_string(EventSource s)
    {
        return s == EventSource::External ? "external" : "guest";
    }

    ordered_json to_json(const HypercallEvent& e)
    {
        ordered_json j;
        j["tick"] = e.tick;
        j["num"] = e.num;
        j["arg"] = e.arg;
        j["source"] = to_string(e.source);
        if (!e.payload.is_null())
        {
            j["payload"] = ordered_json::parse(e.payload.dump());
        }
        return j;
    }

    HypercallEvent event_from_json(const json& j)
    {
        try
        {
            HypercallEvent e;
            e.tick = j.at("tick").get<std::uint64_t>();
            e.num = j.at("num").get<std::uint16_t>();
            e.arg = j.value("arg", std::uint64_t{0});
            auto src = j.value("source", std::string("guest"));
            if (src != "guest" && src != "external")
            {
                throw ConfigError("unknown event source '" + src + "'");
            }
            e.source = src == "external" ? EventSource::External : EventSource::Guest;
            if (auto it = j.find("payload"); it != j.end())
            {
                e.payload = *it;
            }
            return e;
        }
        catch (const json::exception& ex)
        {
            throw ConfigError(std::string("malformed event record: ") + ex.what());
        }
    }

    std::optional<ExitHandler> HandlerTable::register_handler(std::uint16_t num, ExitHandler h)
    {
        std::optional<ExitHandler> previous;
        if (auto it = handlers_.find(num); it != handlers_.end())
        {
            previous = std::move(it->second);
            it->second = std::move(h);
        }
        else
        {
            handlers_.emplace(num, std::move(h));
        }
        return previous;
    }

    std::optional<ExitHandler> HandlerTable::remove(std::uint16_t num)
    {
        auto it = handlers_.find(num);
        if (it == handlers_.end())
        {
            return std::nullopt;
        }
        auto h = std::move(it->second);
        handlers_.erase(it);
        return h;
    }

    const ExitHandler* HandlerTable::find(std::uint16_t num) const
    {
        auto it = handlers_.find(num);
        return it == handlers_.end() ? nullptr : &it->second;
    }

    std::vector<std::uint16_t> HandlerTable::numbers() const
    {
        std::vector<std::uint16_t> out;
        for (const auto& [num, h] : handlers_)
        {
            out.push_back(num);
        }
        return out;
    }

    const std::vector<std::string>& builtin_handler_names()
    {
        static const std::vector<std::string> names{"marker-boot", "marker-login", "marker", "exit",    "reset-roi",
                                                    "dump-roi",    "dump",         "reset",  "continue"};
        return names;
    }

    ExitHandler builtin_handler(std::string_view name, std::uint16_t num)
    {
        std::string n(name);
        if (n == "marker-boot")
        {
            return {n, [](HandlerContext& ctx, const HypercallEvent&) {
                        ctx.log("kernel booted");
                        return Directive::proceed();
                    }};
        }
        if (n == "marker-login")
        {
            return {n, [](HandlerContext& ctx, const HypercallEvent&) {
                        ctx.log("login reached");
                        return Directive::proceed();
                    }};
        }
        if (n == "marker")
        {
            return {n, [](HandlerContext& ctx, const HypercallEvent& e) {
                        ctx.log("hypercall " + std::to_string(e.num) + " reached");
                        return Directive::proceed();
                    }};
        }
        if (n == "exit")
        {
            return {n, [](HandlerContext&, const HypercallEvent&) { return Directive::exit("exit_hypercall"); }};
        }
        if (n == "reset-roi")
        {
            return {n, [](HandlerContext& ctx, const HypercallEvent&) {
                        ctx.reset_stats();
                        ctx.open_roi();
                        return Directive::proceed();
                    }};
        }
        if (n == "dump-roi")
        {
            return {n, [](HandlerContext& ctx, const HypercallEvent&) {
                        ctx.dump_stats("roi");
                        ctx.close_roi();
                        return Directive::proceed();
                    }};
        }
        if (n == "dump")
        {
            return {n, [num](HandlerContext& ctx, const HypercallEvent&) {
                        ctx.dump_stats("hypercall-" + std::to_string(num));
                        return Directive::proceed();
                    }};
        }
        if (n == "reset")
        {
            return {n, [](HandlerContext& ctx, const HypercallEvent&) {
                        ctx.reset_stats();
                        return Directive::proceed();
                    }};
        }
        if (n == "continue")
        {
            return {n, [](HandlerContext&, const HypercallEvent&) { return Directive::proceed(); }};
        }
        std::string known;
        for (const auto& k : builtin_handler_names())
        {
            known += (known.empty() ? "" : ", ") + k;
        }
        throw ConfigError("unknown handler '" + n + "' (known: " + known + ")");
    }

    HandlerTable default_handlers()
    {
        HandlerTable t;
        t.register_handler(1, builtin_handler("marker-boot", 1));
        t.register_handler(2, builtin_handler("marker-login", 2));
        t.register_handler(3, builtin_handler("exit", 3));
        t.register_handler(4, builtin_handler("reset-roi", 4));
        t.register_handler(5, builtin_handler("dump-roi", 5));
        return t;
    }

    void apply_handler_config(HandlerTable& table, const json& config)
    {
        if (config.is_null())
        {
            return;
        }
        if (!config.is_object())
        {
            throw ConfigError("'handlers' must be an object mapping hypercall numbers to handler names");
        }
        for (const auto& [key, value] : config.items())
        {
            unsigned num = 0;
            auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), num);
            if (key.empty() || ec != std::errc{} || ptr != key.data() + key.size() || num > 255)
            {
                throw ConfigError("handler key '" + key + "' is not a hypercall number in 0..255");
            }
            if (!value.is_string())
            {
                throw ConfigError("handler for " + key + " must be a built-in handler name");
            }
            table.register_handler(static_cast<std::uint16_t>(num),
                                   builtin_handler(value.get<std::string>(), static_cast<std::uint16_t>(num)));
        }
    }

    Directive dispatch(const HandlerTable& table, HandlerContext& ctx, const HypercallEvent& e)
    {
        const auto* h = table.find(e.num);
        if (h == nullptr)
        {
            ctx.warn("unhandled hypercall " + std::to_string(e.num));
            return Directive::proceed();
        }
        try
        {
            return h->fn(ctx, e);
        }
        catch (const std::exception& ex)
        {
            throw HostHandlerError("handler '" + h->name + "' for hypercall " + std::to_string(e.num) +
                                   " failed: " + ex.what());
        }
    }
} // namespace simharness
