#include "support.hpp"

#include "simharness/bridge.hpp"
#include "simharness/error.hpp"

#include <doctest.h>

using namespace simharness;
using namespace simharness::testing;

namespace
{
    RunResult run_with(Privilege p, bool bridge, std::vector<Phase> phases)
    {
        return Simulation(make_setup("b", base_image(program(std::move(phases), p), bridge)), {}).run();
    }
} // namespace

TEST_CASE("MMIO decode")
{
    CHECK(decode_mmio(8, 0).num == 1);
    CHECK(decode_mmio(32, 0).num == 4);
    CHECK(decode_mmio(mmio_offset_for(200), 9).arg == 9);
    try
    {
        decode_mmio(13, 0);
        FAIL("expected a fault");
    }
    catch (const GuestFault& e)
    {
        CHECK(std::string(e.what()).find("misaligned MMIO write") != std::string::npos);
    }
    CHECK_THROWS_AS(decode_mmio(4096, 0), GuestFault);
}

TEST_CASE("privilege gate")
{
    CHECK_NOTHROW(check_guest_access(Privilege::User, true));
    CHECK_NOTHROW(check_guest_access(Privilege::Root, false));
    CHECK_THROWS_AS(check_guest_access(Privilege::User, false), GuestFault);
}

TEST_CASE("user program exits cleanly through the bridge device")
{
    auto r = run_with(Privilege::User, true, {Phase::hypercall(3)});
    CHECK(r.terminal_cause == TerminalCause::ExitHypercall);
}

TEST_CASE("user program without the bridge device faults")
{
    auto r = run_with(Privilege::User, false, {Phase::exec(10), Phase::hypercall(3)});
    CHECK(r.terminal_cause == TerminalCause::GuestFault);
    CHECK(r.detail.find("permission denied") != std::string::npos);
    CHECK(guest_nums(r.event_log) == std::vector<std::uint16_t>{1, 2});
}

TEST_CASE("root program never needs the bridge device")
{
    auto r = run_with(Privilege::Root, false, {Phase::hypercall(3)});
    CHECK(r.terminal_cause == TerminalCause::ExitHypercall);
}

TEST_CASE("MMIO writes in a script decode to hypercalls")
{
    auto r = run_with(Privilege::User, true, {Phase::mmio_write(32, 0), Phase::exec(5), Phase::mmio_write(40, 0)});
    CHECK(guest_nums(r.event_log) == std::vector<std::uint16_t>{1, 2, 4, 5, 3});
    CHECK(r.final_stats.roi_instructions == 5);
    auto bad = run_with(Privilege::User, true, {Phase::mmio_write(13, 0)});
    CHECK(bad.terminal_cause == TerminalCause::GuestFault);
    CHECK(bad.detail.find("misaligned") != std::string::npos);
}

TEST_CASE("payload shape")
{
    CHECK_NOTHROW(check_payload(nullptr));
    CHECK_NOTHROW(check_payload(json{{"note", "probe"}, {"n", 3}}));
    CHECK_THROWS_AS(check_payload(json{{"nested", {{"a", 1}}}}), ConfigError);
    CHECK_THROWS_AS(check_payload(json::array({1})), ConfigError);
}
