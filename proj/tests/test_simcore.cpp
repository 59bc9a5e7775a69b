#include "support.hpp"

#include "simharness/error.hpp"
#include "simharness/simcore.hpp"

#include <doctest.h>

using namespace simharness;
using namespace simharness::testing;

namespace
{
    Simulation make(GuestImage img, BoardConfig b = board()) { return Simulation(make_setup("t", std::move(img), b), {}); }

    GuestImage bare(std::vector<Phase> phases, Privilege p = Privilege::User)
    {
        GuestImage img;
        img.run_script = program(std::move(phases), p);
        img.bridge_device_present = true;
        return img;
    }

    HypercallEvent next_event(Simulation& sim)
    {
        auto o = sim.step_until_exit_event();
        REQUIRE(std::holds_alternative<HypercallEvent>(o));
        return std::get<HypercallEvent>(o);
    }

    struct InjectAtTick : ControlHook
    {
        std::uint64_t at;
        std::uint16_t num;
        json payload;
        bool done = false;
        std::optional<std::future<InjectionAck>> ack;

        InjectAtTick(std::uint64_t t, std::uint16_t n, json p = nullptr) : at(t), num(n), payload(std::move(p)) {}

        void poll(Simulation& sim) override
        {
            if (!done && sim.tick() >= at)
            {
                ack = sim.inject_external_hypercall(num, payload);
                done = true;
            }
        }
        void on_terminate(Simulation&) override {}
    };
} // namespace

TEST_SUITE("boot skeleton")
{
    TEST_CASE("base image emits 1, 2, 3")
    {
        auto sim = make(base_image());
        auto r = sim.run();
        CHECK(guest_nums(r.event_log) == std::vector<std::uint16_t>{1, 2, 3});
        CHECK(r.terminal_cause == TerminalCause::ExitHypercall);
    }

    TEST_CASE("tick accounting for the base image")
    {
        // exec phases cost ceil(instructions * clock); each raised event takes one tick
        auto sim = make(base_image());
        auto r = sim.run();
        REQUIRE(r.event_log.size() == 3);
        CHECK(r.event_log[0].tick == 500);
        CHECK(r.event_log[1].tick == 801);
        CHECK(r.event_log[2].tick == 802);
        CHECK(r.final_stats.tick == 803);
        CHECK(r.final_stats.total_instructions == 800);
    }

    TEST_CASE("ROI script adds 4 and 5 between login and exit")
    {
        auto sim = make(base_image(program({Phase::hypercall(4), Phase::exec(1000), Phase::hypercall(5)})));
        auto r = sim.run();
        CHECK(guest_nums(r.event_log) == std::vector<std::uint16_t>{1, 2, 4, 5, 3});
        CHECK(r.final_stats.roi_instructions == 1000);
    }

    TEST_CASE("clock factor scales ticks only")
    {
        auto r1 = make(base_image(), board("x86-demo-board")).run();
        auto r10 = make(base_image(), board("riscv-demo-board")).run();
        CHECK(r10.event_log[0].tick == 5000);
        CHECK(r1.final_stats.total_instructions == r10.final_stats.total_instructions);
    }

    TEST_CASE("rational clock factor rounds up per phase")
    {
        auto b = board();
        b.clock = ClockFactor::parse("3/2");
        GuestImage img;
        img.boot_instructions = 3;
        auto r = make(img, b).run();
        CHECK(r.event_log[0].tick == 5); // ceil(4.5)
    }
}

TEST_SUITE("termination")
{
    TEST_CASE("max_tick before the first event")
    {
        auto b = board();
        b.max_tick = 100;
        auto r = make(base_image(), b).run();
        CHECK(r.terminal_cause == TerminalCause::MaxTick);
        CHECK(r.event_log.empty());
        CHECK(r.final_stats.tick == 100);
        CHECK(r.final_stats.total_instructions == 100);
    }

    TEST_CASE("fault phase")
    {
        auto r = make(base_image(program({Phase::exec(10), Phase::fault("illegal instruction")}))).run();
        CHECK(r.terminal_cause == TerminalCause::GuestFault);
        CHECK(r.detail == "illegal instruction");
    }

    TEST_CASE("exit handler removed: guest runs out of work")
    {
        auto sim = make(base_image());
        sim.handlers().remove(3);
        auto r = sim.run();
        CHECK(r.terminal_cause == TerminalCause::WorkloadExhausted);
        CHECK(guest_nums(r.event_log) == std::vector<std::uint16_t>{1, 2, 3});
    }

    TEST_CASE("a throwing handler ends the run")
    {
        auto sim = make(base_image());
        sim.register_handler(2, {"bad", [](HandlerContext&, const HypercallEvent&) -> Directive {
                                     throw std::runtime_error("handler bug");
                                 }});
        auto r = sim.run();
        CHECK(r.terminal_cause == TerminalCause::HostHandlerError);
        CHECK(r.detail.find("handler bug") != std::string::npos);
    }

    TEST_CASE("run twice is a state error")
    {
        auto sim = make(base_image());
        sim.run();
        CHECK_THROWS_AS(sim.run(), StateError);
    }
}

TEST_SUITE("incremental stepping")
{
    TEST_CASE("first event is the boot marker")
    {
        auto sim = make(base_image());
        CHECK(next_event(sim).num == 1);
    }

    TEST_CASE("after event 3 is dispatched the run is terminal")
    {
        auto sim = make(base_image());
        for (std::uint16_t n : {1, 2, 3})
        {
            auto e = next_event(sim);
            CHECK(e.num == n);
            sim.dispatch(e);
        }
        auto o = sim.step_until_exit_event();
        REQUIRE(std::holds_alternative<Terminal>(o));
        CHECK(std::get<Terminal>(o).cause == TerminalCause::ExitHypercall);
        CHECK_THROWS_AS(sim.step_until_exit_event(), StateError);
    }

    TEST_CASE("script events follow the boot markers in order")
    {
        auto sim = make(base_image(program({Phase::hypercall(4), Phase::hypercall(5)})));
        next_event(sim);
        next_event(sim);
        CHECK(next_event(sim).num == 4);
        CHECK(next_event(sim).num == 5);
    }
}

TEST_SUITE("stats")
{
    TEST_CASE("fresh snapshot is all zeros")
    {
        auto sim = make(base_image());
        auto s = sim.dump_stats("now");
        CHECK(s.tick == 0);
        CHECK(s.total_instructions == 0);
        CHECK(s.roi_instructions == 0);
        CHECK(s.hypercall_counts.empty());
    }

    TEST_CASE("counting and reset")
    {
        auto sim = make(bare({Phase::exec(1000), Phase::hypercall(9), Phase::exec(200), Phase::hypercall(9)}));
        next_event(sim);
        next_event(sim);
        next_event(sim);
        CHECK(sim.dump_stats("a").total_instructions == 1000);
        auto before = sim.tick();
        sim.reset_stats();
        CHECK(sim.tick() == before);
        next_event(sim);
        auto s = sim.dump_stats("b");
        CHECK(s.total_instructions == 200);
        CHECK(s.tick > before);
        CHECK(sim.stats_dumps().size() == 2);
    }
}

TEST_SUITE("external injection")
{
    TEST_CASE("injected event is logged as external with its payload")
    {
        TempDir dir;
        Simulation sim(make_setup("inj", base_image(program({Phase::exec(5'000'000)}))), dir.path(),
                       SimulationOptions{.poll_interval = 100'000});
        InjectAtTick hook(1'000'000, 99, {{"note", "probe"}});
        sim.set_control_hook(&hook);
        auto r = sim.run();
        CHECK(r.terminal_cause == TerminalCause::ExitHypercall);
        REQUIRE(hook.ack);
        auto ack = hook.ack->get();
        CHECK(ack.dispatch_tick >= 1'000'000);
        auto log = slurp(dir / "inj" / "events.jsonl");
        CHECK(log.find(R"("num":99)") != std::string::npos);
        CHECK(log.find(R"("source":"external")") != std::string::npos);
        CHECK(log.find(R"("note":"probe")") != std::string::npos);
        CHECK(r.final_stats.hypercall_counts.at(99) == 1);
    }

    TEST_CASE("injected exit stops the guest early")
    {
        Simulation sim(make_setup("inj", base_image(program({Phase::exec(10'000'000)}))), {},
                       SimulationOptions{.poll_interval = 100'000});
        InjectAtTick hook(2'000'000, 3);
        sim.set_control_hook(&hook);
        auto r = sim.run();
        CHECK(r.terminal_cause == TerminalCause::ExitHypercall);
        CHECK(r.final_stats.total_instructions < 10'000'800);
        CHECK(guest_nums(r.event_log) == std::vector<std::uint16_t>{1, 2});
        CHECK(hook.ack->get().directive.is_exit());
    }

    TEST_CASE("injection after termination is a state error")
    {
        auto sim = make(base_image());
        sim.run();
        CHECK_THROWS_AS(sim.inject_external_hypercall(3, nullptr), StateError);
    }
}

TEST_SUITE("outputs")
{
    TEST_CASE("run directory contents and determinism")
    {
        TempDir a;
        TempDir b;
        auto img = base_image(program({Phase::hypercall(4), Phase::exec(1234), Phase::hypercall(5)}));
        Simulation(make_setup("d", img), a.path()).run();
        Simulation(make_setup("d", img), b.path()).run();
        for (const char* f : {"events.jsonl", "stats.jsonl", "result.json", "run.log"})
        {
            CAPTURE(f);
            CHECK(slurp(a / "d" / f) == slurp(b / "d" / f));
        }
        auto result = json::parse(slurp(a / "d" / "result.json"));
        CHECK(result["terminal_cause"] == "exit_hypercall");
        CHECK(result["event_count"] == 5);
    }

    TEST_CASE("existing run directory needs overwrite")
    {
        TempDir dir;
        Simulation(make_setup("o", base_image()), dir.path()).run();
        CHECK_THROWS_AS(Simulation(make_setup("o", base_image()), dir.path()), ConfigError);
        CHECK_NOTHROW(Simulation(make_setup("o", base_image()), dir.path(), SimulationOptions{.overwrite = true}));
    }

    TEST_CASE("invalid ids")
    {
        CHECK(is_valid_sim_id("process_micro-cca"));
        CHECK_FALSE(is_valid_sim_id(""));
        CHECK_FALSE(is_valid_sim_id(".."));
        CHECK_FALSE(is_valid_sim_id("a/b"));
    }

    TEST_CASE("debug flags")
    {
        auto sim = make(base_image());
        CHECK_THROWS_AS(sim.set_debug_flags({"Nope"}, {}), ConfigError);
        sim.set_debug_flags({"ExitEvents"}, {});
        sim.run();
        std::size_t traced = 0;
        for (const auto& l : sim.trace_lines())
        {
            traced += l.find(": ExitEvents: ") != std::string::npos ? 1 : 0;
        }
        CHECK(traced == sim.event_log().size());
    }
}

TEST_SUITE("materialize")
{
    TEST_CASE("missing kernel role")
    {
        auto chain = bundled_chain();
        SimulatorConfig c;
        c.id = "x";
        c.board = board();
        c.workload = obtain_workload("boot-exit", std::nullopt, chain, kFrameworkVersion);
        c.workload.components.erase("kernel");
        try
        {
            materialize(c);
            FAIL("expected dependency error");
        }
        catch (const DependencyError& e)
        {
            CHECK(std::string(e.what()).find("kernel") != std::string::npos);
        }
    }

    TEST_CASE("binary becomes the run script")
    {
        auto chain = bundled_chain();
        SimulatorConfig c;
        c.id = "x";
        c.board = board();
        c.workload = obtain_workload("stream-roi", std::nullopt, chain, kFrameworkVersion);
        auto setup = materialize(c);
        REQUIRE(setup.image.run_script);
        CHECK(setup.image.run_script->privilege == Privilege::User);
        CHECK(setup.image.bridge_device_present);
    }

    TEST_CASE("unknown handler name in config")
    {
        auto chain = bundled_chain();
        SimulatorConfig c;
        c.id = "x";
        c.board = board();
        c.workload = obtain_workload("boot-exit", std::nullopt, chain, kFrameworkVersion);
        c.handlers = {{"4", "no-such-handler"}};
        CHECK_THROWS_AS(build_simulation(c, {}), ConfigError);
    }
}
