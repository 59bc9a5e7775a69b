#include "support.hpp"

#include "simharness/error.hpp"
#include "simharness/exits.hpp"

#include <doctest.h>

#include <algorithm>

using namespace simharness;
using namespace simharness::testing;

namespace
{
    Simulation make(std::vector<Phase> script = {})
    {
        return Simulation(make_setup("t", base_image(script.empty() ? std::nullopt
                                                                     : std::optional(program(std::move(script))))),
                          {});
    }

    HypercallEvent event(std::uint16_t num) { return HypercallEvent{num, 0, nullptr, 0, EventSource::Guest}; }

    bool contains(const std::vector<std::string>& lines, const std::string& needle)
    {
        return std::any_of(lines.begin(), lines.end(),
                           [&](const std::string& l) { return l.find(needle) != std::string::npos; });
    }
} // namespace

TEST_CASE("register returns the previous handler")
{
    HandlerTable t;
    CHECK_FALSE(t.register_handler(4, builtin_handler("reset-roi", 4)));
    auto prev = t.register_handler(4, builtin_handler("continue", 4));
    REQUIRE(prev);
    CHECK(prev->name == "reset-roi");
    CHECK(t.find(4)->name == "continue");
    CHECK(t.remove(4));
    CHECK(t.find(4) == nullptr);
}

TEST_CASE("defaults")
{
    auto sim = make();
    CHECK_FALSE(dispatch(sim.handlers(), sim, event(1)).is_exit());
    CHECK(contains(sim.log_lines(), "kernel booted"));
    CHECK(dispatch(sim.handlers(), sim, event(3)).is_exit());
}

TEST_CASE("hypercall 4 zeroes the counters and opens the ROI")
{
    auto sim = make({Phase::exec(100), Phase::hypercall(4)});
    sim.run();
    auto s = sim.stats_dumps().back();
    CHECK(s.label == "final");
    auto sim2 = make({Phase::exec(100), Phase::hypercall(4), Phase::hypercall(9)});
    sim2.handlers().register_handler(9, {"probe", [](HandlerContext& ctx, const HypercallEvent&) {
                                             auto st = ctx.stats();
                                             CHECK(st.total_instructions == 0);
                                             CHECK(ctx.roi_open());
                                             return Directive::proceed();
                                         }});
    sim2.run();
}

TEST_CASE("unhandled numbers warn and continue")
{
    auto sim = make();
    CHECK_FALSE(dispatch(sim.handlers(), sim, event(7)).is_exit());
    CHECK(contains(sim.warnings(), "unhandled hypercall 7"));
}

TEST_CASE("5 before 4 still dumps")
{
    auto sim = make({Phase::hypercall(5), Phase::hypercall(4)});
    auto r = sim.run();
    REQUIRE(r.stats_dumps.size() >= 1);
    CHECK(r.stats_dumps[0].label == "roi");
}

TEST_CASE("handler config applies builtins by number")
{
    auto t = default_handlers();
    apply_handler_config(t, json{{"1", "exit"}});
    CHECK(t.find(1)->name == "exit");
    CHECK_THROWS_AS(apply_handler_config(t, json{{"1", "frobnicate"}}), ConfigError);
    CHECK_THROWS_AS(apply_handler_config(t, json{{"300", "exit"}}), ConfigError);
    CHECK_THROWS_AS(apply_handler_config(t, json{{"x", "exit"}}), ConfigError);
}

TEST_CASE("registration order does not change behavior")
{
    TempDir a;
    TempDir b;
    auto img = base_image(program({Phase::hypercall(4), Phase::exec(77), Phase::hypercall(5)}));
    const auto defaults = default_handlers();
    auto run_in = [&](const TempDir& dir, std::vector<std::uint16_t> order) {
        Simulation sim(make_setup("r", img), dir.path());
        sim.handlers() = HandlerTable{};
        for (auto n : order)
        {
            sim.register_handler(n, *defaults.find(n));
        }
        sim.run();
    };
    run_in(a, {1, 2, 3, 4, 5});
    run_in(b, {5, 4, 3, 2, 1});
    CHECK(slurp(a / "r" / "events.jsonl") == slurp(b / "r" / "events.jsonl"));
    CHECK(slurp(a / "r" / "stats.jsonl") == slurp(b / "r" / "stats.jsonl"));
}

TEST_CASE("event JSON round trip")
{
    HypercallEvent e{99, 5, json{{"note", "probe"}}, 1234, EventSource::External};
    auto back = event_from_json(json::parse(to_json(e).dump()));
    CHECK(back.num == 99);
    CHECK(back.arg == 5);
    CHECK(back.tick == 1234);
    CHECK(back.source == EventSource::External);
    CHECK(back.payload == e.payload);
}
